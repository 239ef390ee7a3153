import logging
import math
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml
from pydantic import ValidationError

from app.config import config
from app.schemas import ClutterSpec, ScenarioSpec
from app.vehicle import VehicleState
from app.world import Sphere, VerticalCylinder, World

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Raised for unreadable, malformed or physically invalid scenarios."""


def generate_clutter(spec: ScenarioSpec, clutter: ClutterSpec, seed: int) -> list:
    """Seeded obstacle placement that keeps clear of start, goal and each other."""
    rng = np.random.default_rng(seed)
    start = np.asarray(spec.start.position[:2])
    goal = np.asarray(spec.goal[:2])
    low = np.asarray(clutter.region_min)
    high = np.asarray(clutter.region_max)

    placed: List[tuple] = []
    obstacles = []
    attempts = 0
    while len(obstacles) < clutter.count and attempts < 200 * max(clutter.count, 1):
        attempts += 1
        center = rng.uniform(low, high)
        radius = float(rng.uniform(*clutter.radius_range))
        kind = clutter.kinds[int(rng.integers(len(clutter.kinds)))]

        clear = clutter.keep_out + radius
        if np.linalg.norm(center - start) < clear or np.linalg.norm(center - goal) < clear:
            continue
        if any(
            np.linalg.norm(center - c) < clutter.min_spacing + radius + r for c, r in placed
        ):
            continue

        placed.append((center, radius))
        if kind == "sphere":
            obstacles.append(
                Sphere(center=(float(center[0]), float(center[1]), spec.goal[2]), radius=radius)
            )
        else:
            obstacles.append(
                VerticalCylinder(
                    base_center=(float(center[0]), float(center[1]), clutter.base_depth),
                    radius=radius,
                    height=clutter.height,
                )
            )

    if len(obstacles) < clutter.count:
        logger.warning(f"Placed only {len(obstacles)} of {clutter.count} clutter obstacles")
    return obstacles


def build_world(spec: ScenarioSpec) -> World:
    obstacles = list(spec.world.obstacles)
    if spec.clutter is not None:
        obstacles.extend(generate_clutter(spec, spec.clutter, spec.seed))
    return World(obstacles=obstacles, bounds=spec.world.bounds)


def start_state(spec: ScenarioSpec) -> VehicleState:
    x, y, z = spec.start.position
    return VehicleState(x=x, y=y, z=z, psi=spec.start.heading)


def validate_scenario(spec: ScenarioSpec, world: World) -> None:
    start = np.asarray(spec.start.position, dtype=float)
    clearance = float(world.distance_many(start[None, :])[0])
    if clearance <= 0.0:
        raise ScenarioError(f"Start position {tuple(start)} lies inside an obstacle")
    if world.bounds is not None and not world.bounds.contains(np.asarray(spec.goal)):
        raise ScenarioError(f"Goal {spec.goal} lies outside the world bounds")
    if math.hypot(spec.goal[0] - start[0], spec.goal[1] - start[1]) == 0.0:
        logger.warning("Goal is straight above or below the start position")


class ScenarioLoader:
    def __init__(self, scenario_dir: Optional[str] = None):
        self.scenario_dir = Path(scenario_dir or config.SCENARIO_DIR)

    def resolve(self, name_or_path: str) -> Optional[Path]:
        """Find a scenario by path, falling back to the scenario directory."""
        path = Path(name_or_path)
        if path.exists():
            return path
        for candidate in (self.scenario_dir / path.name, self.scenario_dir / f"{path.name}.yaml"):
            if candidate.exists():
                return candidate
        return None

    def load(self, name_or_path: str, seed: Optional[int] = None) -> ScenarioSpec:
        path = self.resolve(name_or_path)
        if path is None:
            raise ScenarioError(f"Scenario not found: {name_or_path}")

        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ScenarioError(f"Error reading scenario {path}: {e}") from e

        if not isinstance(raw, dict):
            raise ScenarioError(f"Scenario {path} must be a mapping")
        if seed is not None:
            raw["seed"] = seed

        try:
            spec = ScenarioSpec.model_validate(raw)
        except ValidationError as e:
            raise ScenarioError(f"Invalid scenario {path}: {e}") from e

        validate_scenario(spec, build_world(spec))
        logger.info(f"Loaded scenario '{spec.name}' from {path} (seed {spec.seed})")
        return spec

    def list_scenarios(self) -> List[str]:
        if not self.scenario_dir.exists():
            return []
        return sorted(p.stem for p in self.scenario_dir.glob("*.yaml"))


scenario_loader = ScenarioLoader()
