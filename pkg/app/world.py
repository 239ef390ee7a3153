"""
Static obstacle world.

Analytic primitives (sphere, axis-aligned box, vertical cylinder, wall segment)
answer vectorized ray-intersection and signed-distance queries. The sonar and
the metrics are the only consumers; the planners never see the world directly.
"""

import logging
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import config

logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]
Vector2 = Tuple[float, float]


def _slab_intersect(
    origin: np.ndarray,
    dirs: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    r_min: float,
) -> np.ndarray:
    """Entry/exit distances of rays against an axis-aligned box, first one ≥ r_min."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lower - origin) / dirs
        tb = (upper - origin) / dirs
    lo = np.minimum(ta, tb)
    hi = np.maximum(ta, tb)

    parallel = dirs == 0.0
    inside = (origin >= lower) & (origin <= upper)
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), lo)
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), hi)

    t_near = lo.max(axis=1)
    t_far = hi.min(axis=1)
    t = np.where(t_near >= r_min, t_near, np.where(t_far >= r_min, t_far, np.inf))
    return np.where(t_near <= t_far, t, np.inf)


def _box_sdf(points: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    center = 0.5 * (lower + upper)
    half = 0.5 * (upper - lower)
    q = np.abs(points - center) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(q.max(axis=1), 0.0)
    return outside + inside


class Sphere(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["sphere"] = "sphere"
    center: Vector3
    radius: float = Field(..., gt=0)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray, r_min: float) -> np.ndarray:
        oc = origin - np.asarray(self.center)
        b = dirs @ oc
        c = oc @ oc - self.radius**2
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        t1 = -b - root
        t2 = -b + root
        t = np.where(t1 >= r_min, t1, np.where(t2 >= r_min, t2, np.inf))
        return np.where(disc >= 0.0, t, np.inf)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(points - np.asarray(self.center), axis=1) - self.radius


class AxisAlignedBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["box"] = "box"
    min_corner: Vector3
    max_corner: Vector3

    @model_validator(mode="after")
    def _check_corners(self) -> "AxisAlignedBox":
        if any(lo > hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise ValueError("box min corner must be component-wise <= max corner")
        return self

    def intersect(self, origin: np.ndarray, dirs: np.ndarray, r_min: float) -> np.ndarray:
        return _slab_intersect(
            origin, dirs, np.asarray(self.min_corner), np.asarray(self.max_corner), r_min
        )

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return _box_sdf(points, np.asarray(self.min_corner), np.asarray(self.max_corner))

    def contains(self, point: np.ndarray) -> bool:
        p = np.asarray(point)
        return bool(np.all(p >= self.min_corner) and np.all(p <= self.max_corner))


class VerticalCylinder(BaseModel):
    model_config = ConfigDict(frozen=True)

    type: Literal["cylinder"] = "cylinder"
    base_center: Vector3
    radius: float = Field(..., gt=0)
    height: float = Field(..., gt=0)

    def intersect(self, origin: np.ndarray, dirs: np.ndarray, r_min: float) -> np.ndarray:
        cx, cy, z_base = self.base_center
        z_top = z_base + self.height
        ox, oy, oz = origin[0] - cx, origin[1] - cy, origin[2]
        dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]

        a = dx * dx + dy * dy
        b = dx * ox + dy * oy
        c = ox * ox + oy * oy - self.radius**2
        disc = b * b - a * c
        with np.errstate(divide="ignore", invalid="ignore"):
            root = np.sqrt(np.maximum(disc, 0.0))
            side = np.stack([(-b - root) / a, (-b + root) / a], axis=1)
            side_ok = (disc >= 0.0) & (a > 0.0)
            side = np.where(side_ok[:, None], side, np.inf)
            side_z = oz + side * dz[:, None]
            side = np.where((side_z >= z_base) & (side_z <= z_top), side, np.inf)

            caps = np.stack([(z_base - oz) / dz, (z_top - oz) / dz], axis=1)
            caps = np.where((dz != 0.0)[:, None], caps, np.inf)
            cap_x = ox + caps * dx[:, None]
            cap_y = oy + caps * dy[:, None]
            caps = np.where(cap_x**2 + cap_y**2 <= self.radius**2, caps, np.inf)

        candidates = np.concatenate([side, caps], axis=1)
        candidates = np.where(
            np.isfinite(candidates) & (candidates >= r_min), candidates, np.inf
        )
        return candidates.min(axis=1)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        cx, cy, z_base = self.base_center
        radial = np.hypot(points[:, 0] - cx, points[:, 1] - cy) - self.radius
        vertical = np.abs(points[:, 2] - (z_base + 0.5 * self.height)) - 0.5 * self.height
        q = np.stack([radial, vertical], axis=1)
        return np.minimum(q.max(axis=1), 0.0) + np.linalg.norm(np.maximum(q, 0.0), axis=1)


class WallSegment(BaseModel):
    """Thick vertical slab between two endpoints in the horizontal plane."""

    model_config = ConfigDict(frozen=True)

    type: Literal["wall"] = "wall"
    start: Vector2
    end: Vector2
    thickness: float = Field(..., gt=0)
    base_depth: float
    height: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _check_length(self) -> "WallSegment":
        if self.start == self.end:
            raise ValueError("wall endpoints must differ")
        return self

    def _frame(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        p1 = np.asarray(self.start, dtype=float)
        axis = np.asarray(self.end, dtype=float) - p1
        length = float(np.linalg.norm(axis))
        u = axis / length
        rotation = np.array([[u[0], u[1], 0.0], [-u[1], u[0], 0.0], [0.0, 0.0, 1.0]])
        half = 0.5 * self.thickness
        lower = np.array([0.0, -half, self.base_depth])
        upper = np.array([length, half, self.base_depth + self.height])
        return np.array([p1[0], p1[1], 0.0]), rotation, lower, upper

    def intersect(self, origin: np.ndarray, dirs: np.ndarray, r_min: float) -> np.ndarray:
        anchor, rotation, lower, upper = self._frame()
        return _slab_intersect(
            rotation @ (origin - anchor), dirs @ rotation.T, lower, upper, r_min
        )

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        anchor, rotation, lower, upper = self._frame()
        return _box_sdf((points - anchor) @ rotation.T, lower, upper)


ObstaclePrimitive = Annotated[
    Union[Sphere, AxisAlignedBox, VerticalCylinder, WallSegment],
    Field(discriminator="type"),
]


class World(BaseModel):
    """Immutable obstacle set plus an optional operating volume."""

    model_config = ConfigDict(frozen=True)

    obstacles: List[ObstaclePrimitive] = Field(default_factory=list)
    bounds: Optional[AxisAlignedBox] = None

    def ray_cast_many(
        self, origin: np.ndarray, dirs: np.ndarray, r_min: float, r_max: float
    ) -> np.ndarray:
        """Ranges for a batch of unit directions; NaN where nothing lies in [r_min, r_max]."""
        origin = np.asarray(origin, dtype=float)
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        best = np.full(len(dirs), np.inf)
        for obstacle in self.obstacles:
            best = np.minimum(best, obstacle.intersect(origin, dirs, r_min))
        return np.where(best <= r_max, best, np.nan)

    def distance_many(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        best = np.full(len(points), np.inf)
        for obstacle in self.obstacles:
            best = np.minimum(best, obstacle.signed_distance(points))
        return best


def ray_cast(
    world: World,
    origin,
    direction,
    r_min: float,
    r_max: float,
    normalize: Optional[bool] = None,
) -> Optional[float]:
    """Smallest hit distance in [r_min, r_max] along a unit direction, or None."""
    if not 0.0 < r_min < r_max:
        raise ValueError(f"Invalid range window [{r_min}, {r_max}]")

    direction = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > config.RAY_UNIT_TOLERANCE:
        if normalize is None:
            normalize = config.normalize_rays
        if not normalize or norm == 0.0:
            raise ValueError(f"Ray direction must have unit norm, got {norm}")
        direction = direction / norm

    t = world.ray_cast_many(origin, direction[None, :], r_min, r_max)[0]
    return None if np.isnan(t) else float(t)


def distance_to_surface(world: World, point) -> float:
    """Signed distance to the nearest primitive surface (negative inside, +inf when empty)."""
    return float(world.distance_many(np.asarray(point, dtype=float)[None, :])[0])
