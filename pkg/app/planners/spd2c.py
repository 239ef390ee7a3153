"""
Sonar-profile-guided directional decision policy.

Stages run in order on every control cycle: gap finding over the horizontal
scan, boundedness of the blocked beams, convexity of the obstacle profile and,
for a fully blocking concave profile, a vertical pivot search. Each stage ends
in nominal body-frame references for the safety filter.
"""

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.schemas import PivotSweep, SonarConfig, Spd2cConfig
from app.sonar import SonarScan, project_points
from app.vehicle import VehicleState, wrap_angle

logger = logging.getLogger(__name__)


class ManeuverMode(str, Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"
    FALLBACK_TURN = "fallback_turn"


class ObstacleExtent(str, Enum):
    BO = "BO"
    LUBO = "LUBO"
    RUBO = "RUBO"
    UBO = "UBO"


class Curvature(str, Enum):
    CONVEX = "convex"
    CONCAVE = "concave"


@dataclass(frozen=True)
class Decision:
    mode: ManeuverMode
    velocity: Tuple[float, float, float]
    yaw_rate: float
    beam: Optional[int] = None
    pivot: Optional[float] = None
    pivot_requested: bool = False
    sweep_age: int = 0
    extent: Optional[ObstacleExtent] = None
    curvature: Optional[float] = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        data["extent"] = self.extent.value if self.extent else None
        data["velocity"] = list(self.velocity)
        return data


def free_beams(sonar_scan: SonarScan, intensity_threshold: float) -> np.ndarray:
    """1-based indices of beams whose intensity is strictly below the threshold."""
    return np.flatnonzero(sonar_scan.intensities < intensity_threshold) + 1


def find_gaps(free: Sequence[int], gap_length: int) -> List[Tuple[int, int]]:
    """(start, mid-beam) of every window of gap_length consecutive free beams."""
    indices = np.unique(np.asarray(free, dtype=int))
    if len(indices) < gap_length:
        return []
    span = indices[gap_length - 1 :] - indices[: len(indices) - gap_length + 1]
    starts = indices[: len(indices) - gap_length + 1][span == gap_length - 1]
    return [(int(s), int(s + gap_length // 2)) for s in starts]


def target_beam(goal: Sequence[float], pose: VehicleState, sonar: SonarConfig) -> int:
    """Beam index pointing at the goal bearing, clamped to the fan edges."""
    dx = goal[0] - pose.x
    dy = goal[1] - pose.y
    if math.hypot(dx, dy) < 1e-9:
        # goal straight overhead or below
        return sonar.n_beams // 2
    relative = wrap_angle(math.atan2(dy, dx) - pose.psi)
    index = math.floor((0.5 * sonar.fov_h - relative) / sonar.beam_spacing + 1e-9)
    return min(max(index, 1), sonar.n_beams)


def select_gap(mid_beams: Sequence[int], beam_target: int) -> Optional[int]:
    if len(mid_beams) == 0:
        return None
    return min(mid_beams, key=lambda b: (abs(b - beam_target), b))


def classify_extent(blocked: Sequence[int], n_beams: int) -> ObstacleExtent:
    if len(blocked) == 0:
        raise ValueError("classify_extent needs at least one obstacle beam")
    touches_left = min(blocked) == 1
    touches_right = max(blocked) == n_beams
    if touches_left and touches_right:
        return ObstacleExtent.UBO
    if touches_left:
        return ObstacleExtent.LUBO
    if touches_right:
        return ObstacleExtent.RUBO
    return ObstacleExtent.BO


def convexity(
    points_xy: np.ndarray, threshold: float, tolerance: float = 1e-9
) -> Tuple[Curvature, float]:
    """Quadratic least-squares fit y = ax^2 + bx + c; convex when a reaches the threshold."""
    points_xy = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    if len(np.unique(points_xy[:, 0])) < 3:
        return Curvature.CONCAVE, 0.0
    a, _, _ = np.polyfit(points_xy[:, 0], points_xy[:, 1], 2)
    a = float(a)
    label = Curvature.CONVEX if a >= threshold - tolerance else Curvature.CONCAVE
    return label, a


def obstacle_profile(sonar_scan: SonarScan) -> np.ndarray:
    """Hit points in the heading frame as (lateral, forward) pairs, lateral positive to port."""
    points = project_points(sonar_scan)
    pose = sonar_scan.pose
    dx = points[:, 0] - pose.x
    dy = points[:, 1] - pose.y
    c, s = math.cos(pose.psi), math.sin(pose.psi)
    return np.stack([-s * dx + c * dy, c * dx + s * dy], axis=1)


def central_sector_free(
    sonar_scan: SonarScan, sector: Tuple[int, int], intensity_threshold: float
) -> bool:
    lo, hi = sector
    return bool(np.all(sonar_scan.intensities[lo - 1 : hi] < intensity_threshold))


def pivot_windows(
    accepted: Sequence[bool], angles: Sequence[float], group_length: int
) -> List[float]:
    """Midpoint angle of every run of group_length consecutive accepted pivots."""
    accepted = np.asarray(accepted, dtype=int)
    angles = np.asarray(angles, dtype=float)
    n = len(accepted)
    if n < group_length:
        return []
    totals = np.concatenate([[0], np.cumsum(accepted)])
    counts = totals[group_length:] - totals[: n - group_length + 1]
    starts = np.flatnonzero(counts == group_length)
    return [float(0.5 * (angles[j] + angles[j + group_length - 1])) for j in starts]


def goal_elevation(goal: Sequence[float], pose: VehicleState, sweep: PivotSweep) -> float:
    angles = sweep.angles
    dz = goal[2] - pose.z
    horizontal = math.hypot(goal[0] - pose.x, goal[1] - pose.y)
    if horizontal == 0.0:
        return math.copysign(angles[-1], dz) if dz != 0.0 else 0.0
    return min(max(math.atan2(dz, horizontal), angles[0]), angles[-1])


def evaluate_pivot_sweep(
    scans: Sequence[SonarScan], cfg: Spd2cConfig, theta_target: float
) -> Optional[float]:
    """Pivot midpoint closest to the goal elevation, or None when no window fits."""
    if not scans:
        return None
    accepted = [
        central_sector_free(s, cfg.central_sector, cfg.intensity_threshold) for s in scans
    ]
    midpoints = pivot_windows(accepted, [s.pivot_angle for s in scans], cfg.pivot_group_length)
    if not midpoints:
        return None
    errors = np.abs(np.asarray(midpoints) - theta_target)
    best = np.flatnonzero(errors <= errors.min() + 1e-12)
    return midpoints[int(best[0])]


def heading_from_beam(beam: int, cfg: Spd2cConfig, sonar: SonarConfig) -> float:
    """Heading offset of a beam, positive to port; the middle beam maps to zero."""
    k_r = cfg.k_r if cfg.k_r is not None else sonar.beam_spacing
    return 0.5 * sonar.fov_h - k_r * beam


def reference_commands(
    psi_ref: float, theta_cl: float, cfg: Spd2cConfig
) -> Tuple[Tuple[float, float, float], float]:
    psi_ref = min(max(psi_ref, -cfg.psi_max), cfg.psi_max)
    vx = cfg.k_v * (cfg.psi_max - abs(psi_ref))
    vz = vx * math.tan(theta_cl)
    return (vx, 0.0, vz), cfg.k_t * psi_ref


def obstacle_passed(scans: Sequence[SonarScan], cfg: Spd2cConfig, climbing: bool) -> bool:
    """True when every pivot on the far side of level is clear in the central sector."""
    side = [
        s for s in scans if (s.pivot_angle <= 0.0 if climbing else s.pivot_angle >= 0.0)
    ]
    return bool(side) and all(
        central_sector_free(s, cfg.central_sector, cfg.intensity_threshold) for s in side
    )


def refresh_pivot(
    held: float,
    scans: Sequence[SonarScan],
    cfg: Spd2cConfig,
    theta_target: float,
) -> float:
    """Climb angle after a periodic sweep during a vertical maneuver.

    The held angle only steepens until the obstacle has been passed; then the
    sweep's goal-closest window is taken as is.
    """
    fresh = evaluate_pivot_sweep(scans, cfg, theta_target)
    if fresh is None:
        return held
    if held == 0.0 or obstacle_passed(scans, cfg, climbing=held > 0.0):
        return fresh
    if held > 0.0:
        return max(held, fresh)
    return min(held, fresh)


class Spd2cPolicy:
    """Stateless decision policy; the previous Decision is an explicit input."""

    def __init__(self, cfg: Spd2cConfig, sonar: SonarConfig, sweep: PivotSweep):
        self.cfg = cfg
        self.sonar = sonar
        self.sweep = sweep

    def _goal_side_edge(self, beam_target: int) -> int:
        return 1 if beam_target <= self.sonar.n_beams // 2 else self.sonar.n_beams

    def _due(self, age: int) -> bool:
        return age + 1 >= self.cfg.sweep_every

    def _horizontal(self, beam: int, **extra) -> Decision:
        psi_ref = heading_from_beam(beam, self.cfg, self.sonar)
        velocity, yaw_rate = reference_commands(psi_ref, 0.0, self.cfg)
        return Decision(ManeuverMode.HORIZONTAL, velocity, yaw_rate, beam=beam, **extra)

    def _vertical(self, theta_cl: float, age: int = 0, **extra) -> Decision:
        velocity, yaw_rate = reference_commands(0.0, theta_cl, self.cfg)
        return Decision(
            ManeuverMode.VERTICAL,
            velocity,
            yaw_rate,
            pivot=theta_cl,
            pivot_requested=self._due(age),
            sweep_age=age,
            **extra,
        )

    def _fallback(self, age: int = 0, **extra) -> Decision:
        return Decision(
            ManeuverMode.FALLBACK_TURN,
            (0.0, 0.0, 0.0),
            self.cfg.fallback_turn_rate,
            pivot_requested=self._due(age),
            sweep_age=age,
            **extra,
        )

    def decide(
        self,
        sonar_scan: SonarScan,
        pivot_scans: Optional[Sequence[SonarScan]],
        pose: VehicleState,
        goal: Sequence[float],
        previous: Optional[Decision] = None,
    ) -> Decision:
        """Next decision from the horizontal scan and, when one was requested, a pivot sweep.

        A sweep is requested once on entering the vertical search and then every
        sweep_every cycles while a vertical or fallback maneuver lasts; the climb
        angle is held between sweeps.
        """
        cfg = self.cfg
        beam_target = target_beam(goal, pose, self.sonar)
        theta_target = goal_elevation(goal, pose, self.sweep)

        if previous is not None and previous.mode is ManeuverMode.VERTICAL:
            released = central_sector_free(
                sonar_scan, cfg.central_sector, cfg.intensity_threshold
            ) and abs(goal[2] - pose.z) <= cfg.goal_band
            if not released:
                if pivot_scans:
                    theta_cl = refresh_pivot(previous.pivot, pivot_scans, cfg, theta_target)
                    if theta_cl != previous.pivot:
                        logger.debug(f"Climb angle {previous.pivot:.4f} -> {theta_cl:.4f} rad")
                    return self._vertical(theta_cl)
                return self._vertical(previous.pivot, age=previous.sweep_age + 1)
            logger.debug("Vertical maneuver released, back to horizontal policy")

        free = free_beams(sonar_scan, cfg.intensity_threshold)
        gaps = find_gaps(free, cfg.gap_length)
        if gaps:
            return self._horizontal(select_gap([mid for _, mid in gaps], beam_target))

        blocked = np.setdiff1d(np.arange(1, self.sonar.n_beams + 1), free)
        extent = classify_extent(blocked, self.sonar.n_beams)
        if extent is ObstacleExtent.BO:
            return self._horizontal(self._goal_side_edge(beam_target), extent=extent)
        if extent is ObstacleExtent.LUBO:
            return self._horizontal(self.sonar.n_beams, extent=extent)
        if extent is ObstacleExtent.RUBO:
            return self._horizontal(1, extent=extent)

        label, a = convexity(
            obstacle_profile(sonar_scan), cfg.convexity_threshold, cfg.convexity_tolerance
        )
        if label is Curvature.CONVEX:
            return self._horizontal(self._goal_side_edge(beam_target), extent=extent, curvature=a)

        if pivot_scans is None:
            if previous is not None and previous.mode is ManeuverMode.FALLBACK_TURN:
                return self._fallback(age=previous.sweep_age + 1, extent=extent, curvature=a)
            # hold position for one cycle while the sweep is taken
            return Decision(
                ManeuverMode.HORIZONTAL,
                (0.0, 0.0, 0.0),
                0.0,
                beam=beam_target,
                pivot_requested=True,
                extent=extent,
                curvature=a,
            )

        theta_cl = evaluate_pivot_sweep(pivot_scans, cfg, theta_target)
        if theta_cl is None:
            logger.debug("No vertical clearance in pivot sweep, turning left")
            return self._fallback(extent=extent, curvature=a)
        return self._vertical(theta_cl, extent=extent, curvature=a)
