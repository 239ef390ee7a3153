"""
Control barrier function safety filter.

Minimizes ||u - u_ref||^2 over the planar velocity of the active plane subject
to grad(h) . u >= -k h, with h = ||q_v - q_o||^2 - R_o^2 against the closest
remembered obstacle point. The velocity is kept inside the actuation limits
of the plane so clipping downstream cannot undo the constraint; a half-space
and a box admit a closed form, so no QP solver is involved.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.planners.scg import ContextOutput
from app.planners.spd2c import ManeuverMode
from app.schemas import CbfConfig, VehicleLimits
from app.vehicle import VehicleState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SafeReference:
    velocity: Tuple[float, float, float]
    plane: Optional[str] = None
    constraint_active: bool = False
    h: float = math.nan
    deviation: float = 0.0


def barrier(p_v: Sequence[float], p_o: Sequence[float], obstacle_radius: float) -> float:
    delta = np.asarray(p_v, dtype=float) - np.asarray(p_o, dtype=float)
    return float(delta @ delta - obstacle_radius**2)


def project_halfspace(
    u_ref: np.ndarray, gradient: np.ndarray, h: float, gain: float
) -> Tuple[np.ndarray, bool]:
    """Closest u to u_ref with gradient . u >= -gain * h; returns (u, constraint active)."""
    slack = gradient @ u_ref + gain * h
    if slack >= 0.0:
        return u_ref.copy(), False
    return u_ref - (slack / (gradient @ gradient)) * gradient, True


def project_halfspace_box(
    u_ref: np.ndarray,
    gradient: np.ndarray,
    h: float,
    gain: float,
    lower: np.ndarray,
    upper: np.ndarray,
) -> Tuple[np.ndarray, bool]:
    """Closest u to u_ref inside both the barrier half-space and the box [lower, upper]."""
    u, active = project_halfspace(u_ref, gradient, h, gain)
    if np.all(u >= lower) and np.all(u <= upper):
        return u, active

    clipped = np.clip(u_ref, lower, upper)
    if gradient @ clipped + gain * h >= 0.0:
        return clipped, False

    # the optimum lies on the constraint line, restricted to the box
    norm2 = gradient @ gradient
    foot = -gain * h * gradient / norm2
    tangent = np.array([-gradient[1], gradient[0]]) / math.sqrt(norm2)
    s_lo, s_hi = -math.inf, math.inf
    for i in range(2):
        if abs(tangent[i]) < 1e-12:
            if not lower[i] <= foot[i] <= upper[i]:
                s_lo, s_hi = math.inf, -math.inf
            continue
        a = (lower[i] - foot[i]) / tangent[i]
        b = (upper[i] - foot[i]) / tangent[i]
        s_lo, s_hi = max(s_lo, min(a, b)), min(s_hi, max(a, b))
    if s_lo > s_hi:
        logger.warning(f"Barrier constraint unreachable within actuation limits (h={h:.4f})")
        return np.clip(u, lower, upper), True

    s = min(max(float(tangent @ (u_ref - foot)), s_lo), s_hi)
    return foot + s * tangent, True


def filter_reference(
    v_ref: Sequence[float],
    state: VehicleState,
    ctx: Optional[ContextOutput],
    cfg: CbfConfig,
    limits: Optional[VehicleLimits] = None,
) -> SafeReference:
    v_ref = tuple(float(v) for v in v_ref)
    if ctx is None:
        return SafeReference(velocity=v_ref)

    # plane coordinates are aligned with the body: (surge, sway) or (surge, heave)
    c, s = math.cos(state.psi), math.sin(state.psi)
    p_o = ctx.point
    if ctx.mode is ManeuverMode.VERTICAL:
        plane = "XZ"
        q_v = np.array([c * state.x + s * state.y, state.z])
        q_o = np.array([c * p_o[0] + s * p_o[1], p_o[2]])
        h = barrier(q_v, q_o, cfg.obstacle_radius)
        gradient = 2.0 * (q_v - q_o)
        u_ref = np.array([v_ref[0], v_ref[2]])
        side = limits.v_z_max if limits else math.inf
    else:
        plane = "XY"
        q_v = np.array([state.x, state.y])
        q_o = np.array([p_o[0], p_o[1]])
        h = barrier(q_v, q_o, cfg.obstacle_radius)
        g = 2.0 * (q_v - q_o)
        gradient = np.array([c * g[0] + s * g[1], -s * g[0] + c * g[1]])
        u_ref = np.array([v_ref[0], v_ref[1]])
        side = limits.v_y_max if limits else math.inf

    if not np.any(gradient):
        logger.warning("Vehicle on top of the closest obstacle point, stopping planar motion")
        u, active = np.zeros(2), True
    elif limits is None:
        u, active = project_halfspace(u_ref, gradient, h, cfg.gain)
    else:
        lower = np.array([0.0, -side])
        upper = np.array([limits.v_x_max, side])
        u, active = project_halfspace_box(u_ref, gradient, h, cfg.gain, lower, upper)

    if plane == "XZ":
        velocity = (float(u[0]), v_ref[1], float(u[1]))
    else:
        velocity = (float(u[0]), float(u[1]), v_ref[2])

    return SafeReference(
        velocity=velocity,
        plane=plane,
        constraint_active=active,
        h=h,
        deviation=float(np.linalg.norm(u - u_ref)),
    )


def clip_yaw(r_ref: float, r_max: float) -> float:
    return min(max(r_ref, -r_max), r_max)
