"""
Spatial context generator: a radius-bounded short-term memory of obstacle points.

Points are kept in world coordinates, deduplicated on a fixed grid and evicted
once they leave the ball around the vehicle. The closest stored point feeds
the safety filter in the plane of the active maneuver.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import KDTree

from app.planners.spd2c import ManeuverMode

logger = logging.getLogger(__name__)

_KEY_OFFSET = 1 << 20


@dataclass(frozen=True)
class ContextOutput:
    mode: ManeuverMode
    projection: Tuple[float, float]
    point: Tuple[float, float, float]
    distance: float


def plane_mode(mode: ManeuverMode) -> ManeuverMode:
    """Vertical maneuvers use the XZ plane, everything else the XY plane."""
    return ManeuverMode.VERTICAL if mode is ManeuverMode.VERTICAL else ManeuverMode.HORIZONTAL


class LocalMemory:
    def __init__(self, radius: float = 15.0, resolution: float = 0.05, use_index: bool = False):
        self.radius = radius
        self.resolution = resolution
        self.use_index = use_index
        self._points = np.empty((0, 3))
        self._keys = np.empty(0, dtype=np.int64)
        self._tree: Optional[KDTree] = None

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> np.ndarray:
        return self._points.copy()

    def _encode(self, points: np.ndarray) -> np.ndarray:
        cells = np.floor(points / self.resolution).astype(np.int64) + _KEY_OFFSET
        return (cells[:, 0] << 42) | (cells[:, 1] << 21) | cells[:, 2]

    def clear(self) -> None:
        self._points = np.empty((0, 3))
        self._keys = np.empty(0, dtype=np.int64)
        self._tree = None

    def update(self, new_points, vehicle_position) -> "LocalMemory":
        """Evict points outside the ball, then add new in-ball points on free grid cells."""
        center = np.asarray(vehicle_position, dtype=float)

        if len(self._points):
            keep = np.linalg.norm(self._points - center, axis=1) <= self.radius
            self._points = self._points[keep]
            self._keys = self._keys[keep]

        new_points = np.asarray(new_points, dtype=float).reshape(-1, 3)
        if len(new_points):
            new_points = new_points[np.linalg.norm(new_points - center, axis=1) <= self.radius]
            keys, first = np.unique(self._encode(new_points), return_index=True)
            fresh = ~np.isin(keys, self._keys)
            self._points = np.concatenate([self._points, new_points[first[fresh]]])
            self._keys = np.concatenate([self._keys, keys[fresh]])

        self._tree = None
        return self

    @staticmethod
    def _pick(points: np.ndarray, center: np.ndarray) -> np.ndarray:
        d2 = np.sum((points - center) ** 2, axis=1)
        ties = points[d2 == d2.min()]
        order = np.lexsort((ties[:, 2], ties[:, 1], ties[:, 0]))
        return ties[order[0]]

    def closest_point(self, vehicle_position) -> Optional[np.ndarray]:
        if not len(self._points):
            return None
        center = np.asarray(vehicle_position, dtype=float)
        if not self.use_index:
            return self._pick(self._points, center)

        if self._tree is None:
            self._tree = KDTree(self._points)
        distance, _ = self._tree.query(center)
        nearby = self._tree.query_ball_point(center, distance + 1e-9)
        return self._pick(self._points[np.asarray(nearby, dtype=int)], center)

    def context(self, vehicle_position, mode: ManeuverMode) -> Optional[ContextOutput]:
        point = self.closest_point(vehicle_position)
        if point is None:
            return None
        mode = plane_mode(mode)
        axes = (0, 2) if mode is ManeuverMode.VERTICAL else (0, 1)
        center = np.asarray(vehicle_position, dtype=float)
        projection = (float(point[axes[0]]), float(point[axes[1]]))
        distance = float(np.hypot(*(center[list(axes)] - point[list(axes)])))
        return ContextOutput(
            mode=mode,
            projection=projection,
            point=(float(point[0]), float(point[1]), float(point[2])),
            distance=distance,
        )
