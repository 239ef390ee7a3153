"""
Forward-looking sonar emulation.

A horizontal fan of beams (beam 1 on the port edge, beam N on the starboard
edge) is cast from the vehicle position at a pivot elevation. Intensities
follow a binary hit/miss model; ranges exist only where the intensity clears
the detection threshold.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.schemas import PivotSweep, SonarConfig
from app.vehicle import VehicleState
from app.world import World

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SonarScan:
    """Per-beam ranges (NaN for no return) and intensities at one pivot angle."""

    pivot_angle: float
    ranges: np.ndarray
    intensities: np.ndarray
    azimuths: np.ndarray
    pose: VehicleState

    @property
    def n_beams(self) -> int:
        return len(self.intensities)

    @property
    def hits(self) -> np.ndarray:
        return ~np.isnan(self.ranges)


def beam_azimuths(heading: float, cfg: SonarConfig) -> np.ndarray:
    """World-frame azimuth of every beam, port edge first."""
    index = np.arange(1, cfg.n_beams + 1)
    return heading + 0.5 * cfg.fov_h - (index - 0.5) * cfg.beam_spacing


def _directions(azimuths: np.ndarray, elevations: np.ndarray) -> np.ndarray:
    """Unit vectors for every (elevation, azimuth) pair, elevation-major."""
    el = elevations[:, None]
    az = azimuths[None, :]
    dirs = np.stack(
        [
            np.cos(el) * np.cos(az),
            np.cos(el) * np.sin(az),
            np.sin(el) * np.ones_like(az),
        ],
        axis=-1,
    )
    return dirs.reshape(-1, 3)


def _subray_offsets(cfg: SonarConfig) -> np.ndarray:
    if cfg.elevation_subrays == 1:
        return np.zeros(1)
    half = 0.5 * cfg.vertical_beamwidth
    return np.linspace(-half, half, cfg.elevation_subrays)


def _cast(world: World, pose: VehicleState, pivots: Sequence[float], cfg: SonarConfig):
    azimuths = beam_azimuths(pose.psi, cfg)
    offsets = _subray_offsets(cfg)
    elevations = (np.asarray(pivots, dtype=float)[:, None] + offsets[None, :]).ravel()
    ranges = world.ray_cast_many(
        pose.position, _directions(azimuths, elevations), cfg.r_min, cfg.r_max
    )
    ranges = ranges.reshape(len(pivots), len(offsets), cfg.n_beams)
    # minimum return across the vertical beamwidth; NaN only when every sub-ray misses
    return azimuths, np.fmin.reduce(ranges, axis=1)


def _to_scan(
    pivot: float,
    ranges: np.ndarray,
    azimuths: np.ndarray,
    pose: VehicleState,
    cfg: SonarConfig,
    rng: Optional[np.random.Generator],
) -> SonarScan:
    hit = ~np.isnan(ranges)
    intensities = np.where(hit, cfg.intensity_hit, cfg.intensity_miss).astype(float)
    if cfg.intensity_noise > 0.0 and rng is not None:
        noise = rng.uniform(-cfg.intensity_noise, cfg.intensity_noise, cfg.n_beams)
        intensities = np.where(hit, intensities + noise, intensities)
        ranges = np.where(intensities >= cfg.intensity_threshold, ranges, np.nan)
    return SonarScan(
        pivot_angle=float(pivot),
        ranges=ranges,
        intensities=intensities,
        azimuths=azimuths,
        pose=pose,
    )


def scan(
    world: World,
    pose: VehicleState,
    pivot_angle: float,
    cfg: SonarConfig,
    rng: Optional[np.random.Generator] = None,
) -> SonarScan:
    if abs(pivot_angle) > np.pi / 2:
        raise ValueError(f"Pivot angle out of range: {pivot_angle}")
    azimuths, ranges = _cast(world, pose, [pivot_angle], cfg)
    return _to_scan(pivot_angle, ranges[0], azimuths, pose, cfg, rng)


def pivot_sweep(
    world: World,
    pose: VehicleState,
    sweep: PivotSweep,
    cfg: SonarConfig,
    rng: Optional[np.random.Generator] = None,
) -> List[SonarScan]:
    """One scan per sweep angle, in sweep order, with the pose frozen."""
    angles = sweep.angles
    azimuths, ranges = _cast(world, pose, angles, cfg)
    logger.debug(f"Pivot sweep over {len(angles)} angles at ({pose.x:.2f}, {pose.y:.2f}, {pose.z:.2f})")
    return [
        _to_scan(angle, ranges[k], azimuths, pose, cfg, rng)
        for k, angle in enumerate(angles)
    ]


def project_points(sonar_scan: SonarScan) -> np.ndarray:
    """World-frame points of every hit beam, shape (M, 3)."""
    hit = sonar_scan.hits
    ranges = sonar_scan.ranges[hit]
    az = sonar_scan.azimuths[hit]
    el = sonar_scan.pivot_angle
    pose = sonar_scan.pose
    return np.stack(
        [
            pose.x + ranges * np.cos(el) * np.cos(az),
            pose.y + ranges * np.cos(el) * np.sin(az),
            pose.z + ranges * np.sin(el),
        ],
        axis=1,
    )
