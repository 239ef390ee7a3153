"""
Reduced AUV kinematics with fixed pitch and roll.

Body-frame velocity references are clipped to the actuation limits, tracked
through a first-order lag and integrated into the world frame.
"""

import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from app.schemas import TrackingConfig, VehicleLimits


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.pi - ((math.pi - angle) % (2.0 * math.pi))
    # float modulo can round up to the full period
    return math.pi if wrapped <= -math.pi else wrapped


@dataclass(frozen=True)
class VehicleState:
    """Pose, body-frame velocities and time of the vehicle."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    r: float = 0.0
    t: float = 0.0

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def clip_references(
    v_ref: Sequence[float], r_ref: float, limits: VehicleLimits
) -> Tuple[np.ndarray, float]:
    vx = min(max(v_ref[0], 0.0), limits.v_x_max)
    vy = min(max(v_ref[1], -limits.v_y_max), limits.v_y_max)
    vz = min(max(v_ref[2], -limits.v_z_max), limits.v_z_max)
    r = min(max(r_ref, -limits.r_max), limits.r_max)
    return np.array([vx, vy, vz]), r


def integrate_pose(
    state: VehicleState,
    velocity: Sequence[float],
    yaw_rate: float,
    dt: float,
    integrator: str = "midpoint",
) -> Tuple[float, float, float, float]:
    """Advance the pose by dt under constant body velocity and yaw rate."""
    vx, vy, vz = velocity
    if integrator == "euler":
        heading = state.psi
    else:
        heading = state.psi + 0.5 * yaw_rate * dt
    c, s = math.cos(heading), math.sin(heading)
    x = state.x + (vx * c - vy * s) * dt
    y = state.y + (vx * s + vy * c) * dt
    z = state.z + vz * dt
    return float(x), float(y), float(z), float(wrap_angle(state.psi + yaw_rate * dt))


def step(
    state: VehicleState,
    v_ref: Sequence[float],
    r_ref: float,
    limits: VehicleLimits,
    tracking: TrackingConfig,
) -> VehicleState:
    v_cmd, r_cmd = clip_references(v_ref, r_ref, limits)
    dt = tracking.dt

    if tracking.tau > 0.0:
        alpha = 1.0 - math.exp(-dt / tracking.tau)
        current = np.array([state.vx, state.vy, state.vz])
        velocity = current + (v_cmd - current) * alpha
        yaw_rate = state.r + (r_cmd - state.r) * alpha
    else:
        velocity, yaw_rate = v_cmd, r_cmd

    x, y, z, psi = integrate_pose(state, velocity, yaw_rate, dt, tracking.integrator)
    return VehicleState(
        x=x,
        y=y,
        z=z,
        psi=psi,
        vx=float(velocity[0]),
        vy=float(velocity[1]),
        vz=float(velocity[2]),
        r=float(yaw_rate),
        t=state.t + dt,
    )


def advance(
    state: VehicleState,
    v_ref: Sequence[float],
    r_ref: float,
    limits: VehicleLimits,
    tracking: TrackingConfig,
    duration: float,
) -> VehicleState:
    """Hold references for one control period, sub-stepping at most tracking.dt."""
    n_steps = max(1, math.ceil(duration / tracking.dt - 1e-9))
    sub = tracking.model_copy(update={"dt": duration / n_steps})
    start_time = state.t
    for _ in range(n_steps):
        state = step(state, v_ref, r_ref, limits, sub)
    return replace(state, t=start_time + duration)


def goal_reached(state: VehicleState, goal: Sequence[float], epsilon: float) -> bool:
    return float(np.linalg.norm(state.position - np.asarray(goal, dtype=float))) <= epsilon
