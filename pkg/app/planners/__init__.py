"""
Planners Package

This package contains the decision and safety layers of the testbed:
- spd2c: Sonar-profile-guided directional decision policy
- scg: Radius-bounded obstacle point memory
- stcbf: Control barrier function safety filter
- baselines: APF and DWA reference planners
"""

from .spd2c import Decision, ManeuverMode, Spd2cPolicy
from .scg import ContextOutput, LocalMemory
from .stcbf import SafeReference, clip_yaw, filter_reference

__all__ = [
    "Decision",
    "ManeuverMode",
    "Spd2cPolicy",
    "ContextOutput",
    "LocalMemory",
    "SafeReference",
    "clip_yaw",
    "filter_reference",
]
