"""
Test cases for scenario loading and clutter generation.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from app.scenario import ScenarioError, ScenarioLoader, build_world, generate_clutter
from app.schemas import ClutterSpec, ScenarioSpec
from app.world import VerticalCylinder, WallSegment

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "data" / "scenarios"

MINIMAL = """
name: minimal
goal: [30.0, 0.0, 0.0]
time_budget: 100.0
"""


@pytest.fixture
def loader():
    return ScenarioLoader(str(SCENARIO_DIR))


@pytest.fixture
def tmp_loader(tmp_path):
    return ScenarioLoader(str(tmp_path))


class TestScenarioLoader:
    """Test cases for reading scenario files."""

    def test_list_scenarios(self, loader):
        names = loader.list_scenarios()
        assert names == sorted(names)
        assert {"cluttered_field", "dead_end_corridor", "free_water", "full_width_wall"} <= set(names)

    def test_list_missing_directory(self, tmp_path):
        assert ScenarioLoader(str(tmp_path / "nowhere")).list_scenarios() == []

    @pytest.mark.parametrize("name", ["cluttered_field", "dead_end_corridor", "free_water", "full_width_wall"])
    def test_canonical_scenarios_load(self, loader, name):
        spec = loader.load(name)
        assert spec.name == name
        assert spec.time_budget > 0

    def test_wall_scenario(self, loader):
        spec = loader.load("full_width_wall.yaml")
        assert len(spec.world.obstacles) == 1
        assert isinstance(spec.world.obstacles[0], WallSegment)
        assert spec.goal == (45.0, 0.0, 0.0)

    def test_seed_override(self, loader):
        assert loader.load("cluttered_field", seed=7).seed == 7

    def test_load_by_path(self, tmp_loader, tmp_path):
        path = tmp_path / "minimal.yaml"
        path.write_text(MINIMAL)
        spec = tmp_loader.load(str(path))
        assert spec.name == "minimal"
        assert spec.control_period == 0.125
        assert spec.sonar.n_beams == 512

    def test_not_found(self, tmp_loader):
        assert tmp_loader.resolve("missing") is None
        with pytest.raises(ScenarioError):
            tmp_loader.load("missing")

    def test_malformed_yaml(self, tmp_loader, tmp_path):
        (tmp_path / "broken.yaml").write_text("goal: [1.0, 2.0\n")
        with pytest.raises(ScenarioError):
            tmp_loader.load("broken")

    def test_not_a_mapping(self, tmp_loader, tmp_path):
        (tmp_path / "listing.yaml").write_text("- a\n- b\n")
        with pytest.raises(ScenarioError):
            tmp_loader.load("listing")

    def test_missing_goal(self, tmp_loader, tmp_path):
        (tmp_path / "nogoal.yaml").write_text("time_budget: 10.0\n")
        with pytest.raises(ScenarioError):
            tmp_loader.load("nogoal")

    def test_unknown_obstacle_type(self, tmp_loader, tmp_path):
        (tmp_path / "odd.yaml").write_text(
            MINIMAL + "world:\n  obstacles:\n    - type: torus\n      radius: 1.0\n"
        )
        with pytest.raises(ScenarioError):
            tmp_loader.load("odd")

    def test_start_inside_obstacle(self, tmp_loader, tmp_path):
        (tmp_path / "inside.yaml").write_text(
            MINIMAL + "world:\n  obstacles:\n    - type: sphere\n      center: [0.0, 0.0, 0.0]\n      radius: 2.0\n"
        )
        with pytest.raises(ScenarioError):
            tmp_loader.load("inside")

    def test_goal_outside_bounds(self, tmp_loader, tmp_path):
        (tmp_path / "bounded.yaml").write_text(
            MINIMAL
            + "world:\n  bounds:\n    type: box\n"
            + "    min_corner: [-5.0, -5.0, -5.0]\n    max_corner: [10.0, 5.0, 5.0]\n"
        )
        with pytest.raises(ScenarioError):
            tmp_loader.load("bounded")

    def test_central_sector_beyond_beam_count(self, tmp_loader, tmp_path):
        """Test that a sector sized for 512 beams is rejected on a 256-beam sonar."""
        (tmp_path / "coarse.yaml").write_text(MINIMAL + "sonar:\n  n_beams: 256\nspd2c:\n  gap_length: 100\n")
        with pytest.raises(ScenarioError, match="central sector"):
            tmp_loader.load("coarse")

    def test_gap_length_beyond_beam_count(self):
        with pytest.raises(ValueError, match="gap length"):
            ScenarioSpec(
                goal=(30.0, 0.0, 0.0),
                time_budget=10.0,
                sonar={"n_beams": 128},
                spd2c={"central_sector": (20, 100)},
            )

    def test_mismatched_beam_gain(self):
        with pytest.raises(ValueError, match="k_r"):
            ScenarioSpec(
                goal=(30.0, 0.0, 0.0),
                time_budget=10.0,
                sonar={"n_beams": 256},
                spd2c={"k_r": 3.14159 / 1024, "central_sector": (50, 200)},
            )

    def test_matching_beam_gain_accepted(self):
        spec = ScenarioSpec(goal=(30.0, 0.0, 0.0), time_budget=10.0, spd2c={"k_r": math.pi / 1024})
        assert spec.spd2c.k_r == pytest.approx(spec.sonar.beam_spacing)

    def test_dwa_margin_inside_blind_zone(self):
        with pytest.raises(ValueError, match="blind zone"):
            ScenarioSpec(goal=(30.0, 0.0, 0.0), time_budget=10.0, dwa={"robot_radius": 1.5})

    def test_corridor_walls_are_thin(self, loader):
        spec = loader.load("dead_end_corridor")
        assert all(wall.thickness <= 0.1 for wall in spec.world.obstacles)
        assert spec.sonar.r_max < 60.0


class TestClutter:
    """Test cases for seeded clutter placement."""

    @pytest.fixture
    def spec(self):
        return ScenarioSpec(
            goal=(100.0, 0.0, 0.0),
            time_budget=400.0,
            clutter=ClutterSpec(count=12),
        )

    def test_deterministic(self, spec):
        assert build_world(spec) == build_world(spec)

    def test_seed_changes_layout(self, spec):
        other = spec.model_copy(update={"seed": 1})
        assert build_world(spec) != build_world(other)

    def test_placement_rules(self, spec):
        """Test keep-out around start and goal and the spacing between obstacles."""
        for seed in range(10):
            obstacles = generate_clutter(spec, spec.clutter, seed)
            assert 0 < len(obstacles) <= 12
            assert all(isinstance(o, VerticalCylinder) for o in obstacles)
            centers = np.array([o.base_center[:2] for o in obstacles])
            radii = np.array([o.radius for o in obstacles])
            for center, radius in zip(centers, radii):
                assert np.linalg.norm(center) >= spec.clutter.keep_out + radius
                assert np.linalg.norm(center - [100.0, 0.0]) >= spec.clutter.keep_out + radius
            for i in range(len(obstacles)):
                for j in range(i + 1, len(obstacles)):
                    gap = np.linalg.norm(centers[i] - centers[j])
                    assert gap >= spec.clutter.min_spacing + radii[i] + radii[j]

    def test_spheres_at_goal_depth(self):
        spec = ScenarioSpec(
            goal=(100.0, 0.0, -5.0),
            time_budget=400.0,
            clutter=ClutterSpec(count=5, kinds=["sphere"]),
        )
        obstacles = generate_clutter(spec, spec.clutter, 3)
        assert all(o.type == "sphere" and o.center[2] == -5.0 for o in obstacles)

    def test_empty_clutter(self, spec):
        assert generate_clutter(spec, ClutterSpec(count=0), 0) == []
