"""
Memoryless reference planners: artificial potential fields and the dynamic
window approach. Both see only the projected points of the current
horizontal scan and command planar motion at constant depth.
"""

import logging
import math
from typing import Sequence, Tuple

import numpy as np

from app.schemas import ApfConfig, DwaConfig, VehicleLimits
from app.sonar import SonarScan, project_points
from app.vehicle import VehicleState, wrap_angle

logger = logging.getLogger(__name__)

Command = Tuple[Tuple[float, float, float], float]


def _planar_points(sonar_scan: SonarScan) -> np.ndarray:
    return project_points(sonar_scan)[:, :2]


def apf_command(
    points_xy: np.ndarray, pose: VehicleState, goal: Sequence[float], cfg: ApfConfig
) -> Command:
    position = np.array([pose.x, pose.y])
    force = cfg.k_att * (np.asarray(goal[:2], dtype=float) - position)

    points_xy = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    if len(points_xy):
        offset = position - points_xy
        distance = np.linalg.norm(offset, axis=1)
        near = (distance > 0.0) & (distance < cfg.influence_distance)
        if np.any(near):
            d = distance[near]
            magnitude = cfg.k_rep * (1.0 / d - 1.0 / cfg.influence_distance) / d**2
            force = force + np.sum((magnitude / d)[:, None] * offset[near], axis=0)

    strength = float(np.linalg.norm(force))
    if strength <= cfg.stall_threshold:
        return (0.0, 0.0, 0.0), 0.0

    error = wrap_angle(math.atan2(force[1], force[0]) - pose.psi)
    # speed scales with the goal distance; the resultant only steers
    goal_distance = math.hypot(goal[0] - pose.x, goal[1] - pose.y)
    speed = min(cfg.speed_cap, cfg.k_att * goal_distance) * max(math.cos(error), 0.0)
    return (speed, 0.0, 0.0), cfg.yaw_gain * error


def apf_step(
    sonar_scan: SonarScan, pose: VehicleState, goal: Sequence[float], cfg: ApfConfig
) -> Command:
    return apf_command(_planar_points(sonar_scan), pose, goal, cfg)


def rollout(
    pose: VehicleState, speeds: np.ndarray, yaw_rates: np.ndarray, cfg: DwaConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Planar positions (K, T+1, 2) and final headings (K,) for constant (v, r) samples."""
    n_steps = max(1, math.ceil(cfg.horizon / cfg.sim_step - 1e-9))
    h = cfg.horizon / n_steps
    x = np.full(len(speeds), pose.x)
    y = np.full(len(speeds), pose.y)
    psi = np.full(len(speeds), pose.psi)
    path = [np.stack([x, y], axis=1)]
    for _ in range(n_steps):
        mid = psi + 0.5 * yaw_rates * h
        x = x + speeds * np.cos(mid) * h
        y = y + speeds * np.sin(mid) * h
        psi = psi + yaw_rates * h
        path.append(np.stack([x, y], axis=1))
    return np.stack(path, axis=1), psi


def dynamic_window(
    pose: VehicleState, cfg: DwaConfig, limits: VehicleLimits
) -> Tuple[np.ndarray, np.ndarray]:
    """Speed and yaw-rate samples reachable from the current state within one window period."""
    dv = cfg.v_accel * cfg.window_period
    dr = cfg.r_accel * cfg.window_period
    v_lo = min(max(pose.vx - dv, 0.0), limits.v_x_max)
    v_hi = min(max(pose.vx + dv, 0.0), limits.v_x_max)
    r_lo = min(max(pose.r - dr, -limits.r_max), limits.r_max)
    r_hi = min(max(pose.r + dr, -limits.r_max), limits.r_max)
    speeds, yaw_rates = np.meshgrid(
        np.linspace(v_lo, v_hi, cfg.v_samples),
        np.linspace(r_lo, r_hi, cfg.r_samples),
        indexing="ij",
    )
    return speeds.ravel(), yaw_rates.ravel()


def dwa_command(
    points_xy: np.ndarray,
    pose: VehicleState,
    goal: Sequence[float],
    cfg: DwaConfig,
    limits: VehicleLimits,
) -> Command:
    speeds, yaw_rates = dynamic_window(pose, cfg, limits)
    paths, headings = rollout(pose, speeds, yaw_rates, cfg)

    points_xy = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    if len(points_xy):
        gaps = paths[:, 1:, None, :] - points_xy[None, None, :, :]
        clearance = np.sqrt(np.sum(gaps**2, axis=-1)).min(axis=(1, 2))
        current = float(np.min(np.linalg.norm(points_xy - [pose.x, pose.y], axis=1)))
    else:
        clearance = np.full(len(speeds), np.inf)
        current = math.inf

    end = paths[:, -1, :]
    bearing = np.arctan2(goal[1] - end[:, 1], goal[0] - end[:, 0])
    heading_error = np.abs(np.angle(np.exp(1j * (bearing - headings))))
    score = (
        cfg.heading_weight * (1.0 - heading_error / math.pi)
        + cfg.clearance_weight * np.minimum(clearance, cfg.clearance_cap) / cfg.clearance_cap
        + cfg.speed_weight * speeds / limits.v_x_max
    )
    # inside the margin only moving rollouts that do not close in any further are admissible
    inadmissible = (clearance <= cfg.robot_radius) & ((clearance < current - 1e-9) | (speeds <= 0.0))
    score = np.where(inadmissible, -np.inf, score)

    if not np.any(np.isfinite(score)):
        logger.debug("Every DWA rollout collides, rotating in place")
        return (0.0, 0.0, 0.0), limits.r_max

    best = int(np.argmax(score))
    return (float(speeds[best]), 0.0, 0.0), float(yaw_rates[best])


def dwa_step(
    sonar_scan: SonarScan,
    pose: VehicleState,
    goal: Sequence[float],
    cfg: DwaConfig,
    limits: VehicleLimits,
) -> Command:
    return dwa_command(_planar_points(sonar_scan), pose, goal, cfg, limits)
