"""
Static vector figures for trajectory logs: top view over obstacle outlines,
side view of the depth profile and the yaw-rate time series.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import patches

from app.config import config
from app.recording import TrajectoryRecord
from app.world import AxisAlignedBox, Sphere, VerticalCylinder, WallSegment, World

logger = logging.getLogger(__name__)

OBSTACLE_STYLE = {"facecolor": "0.8", "edgecolor": "0.3", "linewidth": 0.8}


def _top_view_patch(obstacle) -> Optional[patches.Patch]:
    if isinstance(obstacle, Sphere):
        return patches.Circle(obstacle.center[:2], obstacle.radius, **OBSTACLE_STYLE)
    if isinstance(obstacle, VerticalCylinder):
        return patches.Circle(obstacle.base_center[:2], obstacle.radius, **OBSTACLE_STYLE)
    if isinstance(obstacle, AxisAlignedBox):
        lo, hi = obstacle.min_corner, obstacle.max_corner
        return patches.Rectangle(lo[:2], hi[0] - lo[0], hi[1] - lo[1], **OBSTACLE_STYLE)
    if isinstance(obstacle, WallSegment):
        start = np.asarray(obstacle.start, dtype=float)
        end = np.asarray(obstacle.end, dtype=float)
        along = (end - start) / np.linalg.norm(end - start)
        normal = 0.5 * obstacle.thickness * np.array([-along[1], along[0]])
        corners = [start + normal, end + normal, end - normal, start - normal]
        return patches.Polygon(corners, closed=True, **OBSTACLE_STYLE)
    return None


def _side_view_patch(obstacle) -> Optional[patches.Patch]:
    if isinstance(obstacle, Sphere):
        return patches.Circle(
            (obstacle.center[0], obstacle.center[2]), obstacle.radius, **OBSTACLE_STYLE
        )
    if isinstance(obstacle, VerticalCylinder):
        x, _, z = obstacle.base_center
        return patches.Rectangle(
            (x - obstacle.radius, z), 2 * obstacle.radius, obstacle.height, **OBSTACLE_STYLE
        )
    if isinstance(obstacle, AxisAlignedBox):
        lo, hi = obstacle.min_corner, obstacle.max_corner
        return patches.Rectangle((lo[0], lo[2]), hi[0] - lo[0], hi[2] - lo[2], **OBSTACLE_STYLE)
    if isinstance(obstacle, WallSegment):
        xs = (obstacle.start[0], obstacle.end[0])
        left = min(xs) - 0.5 * obstacle.thickness
        width = max(xs) - min(xs) + obstacle.thickness
        return patches.Rectangle(
            (left, obstacle.base_depth), width, obstacle.height, **OBSTACLE_STYLE
        )
    return None


def _draw_obstacles(ax, world: Optional[World], side: bool) -> None:
    if world is None:
        return
    for obstacle in world.obstacles:
        patch = _side_view_patch(obstacle) if side else _top_view_patch(obstacle)
        if patch is not None:
            ax.add_patch(patch)


def _column(records: Sequence[TrajectoryRecord], name: str) -> np.ndarray:
    return np.array([getattr(rec, name) for rec in records])


def emit_plots(
    logs: Dict[str, Sequence[TrajectoryRecord]],
    world: Optional[World] = None,
    out_dir: Optional[Path] = None,
    goal: Optional[Sequence[float]] = None,
) -> List[Path]:
    """Write top view, side view and yaw-rate figures for one or more labelled logs."""
    if not logs or not any(len(records) for records in logs.values()):
        raise ValueError("emit_plots needs at least one non-empty trajectory log")
    out_dir = Path(out_dir or config.OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = config.PLOT_FORMAT
    legend = len(logs) > 1

    figures = {
        f"trajectory_xy.{suffix}": ("x [m]", "y [m]", "x", "y"),
        f"profile_xz.{suffix}": ("x [m]", "z [m]", "x", "z"),
        f"yaw_rate.{suffix}": ("t [s]", "r [rad/s]", "t", "r"),
    }

    written = []
    for filename, (xlabel, ylabel, xcol, ycol) in figures.items():
        fig, ax = plt.subplots(figsize=(8, 5))
        if ycol in ("y", "z"):
            _draw_obstacles(ax, world, side=ycol == "z")
            ax.set_aspect("equal", adjustable="datalim")
        for label, records in logs.items():
            if len(records):
                ax.plot(_column(records, xcol), _column(records, ycol), label=label, linewidth=1.2)
        if goal is not None and ycol in ("y", "z"):
            ax.plot(goal[0], goal[1] if ycol == "y" else goal[2], marker="*", color="k", markersize=10)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, linewidth=0.3)
        if legend:
            ax.legend()
        path = out_dir / filename
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    logger.info(f"Wrote {len(written)} plots to {out_dir}")
    return written
