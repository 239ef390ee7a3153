"""
AUV Obstacle Avoidance Testbed

This package contains the simulation and planning components of the testbed,
including the obstacle world, sonar emulation, vehicle kinematics, the
sonar-guided policy with its memory and safety filter, baseline planners and
the episode harness with its CLI and HTTP surfaces.
"""

__version__ = "1.0.0"
