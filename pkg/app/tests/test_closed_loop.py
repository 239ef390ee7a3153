"""
Closed-loop scenario tests over the shipped scenario files.

These run whole episodes and take from seconds to a couple of minutes;
deselect them with -m "not slow".
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from app.harness import ordering_holds, run_batch, run_episode, summarize
from app.scenario import ScenarioLoader, build_world
from app.schemas import BatchRow

pytestmark = pytest.mark.slow

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "data" / "scenarios"
loader = ScenarioLoader(str(SCENARIO_DIR))


def true_clearance(spec, result) -> float:
    positions = np.array([[rec.x, rec.y, rec.z] for rec in result.records])
    return float(np.min(build_world(spec).distance_many(positions)))


class TestDeadEndCorridor:
    """Test cases for the tunnel with a sharp turn behind its inner corner."""

    @pytest.fixture(scope="class")
    def spec(self):
        return loader.load("dead_end_corridor")

    @pytest.fixture(scope="class")
    def eroas(self, spec):
        return run_episode(spec, "eroas")

    def test_eroas_reaches_goal(self, eroas):
        assert eroas.metrics.termination == "goal"

    @pytest.mark.parametrize("algo", ["apf", "dwa"])
    def test_memoryless_baselines_fail(self, spec, algo):
        assert run_episode(spec, algo).metrics.termination in ("collision", "timeout")

    def test_walls_kept_at_obstacle_radius(self, spec, eroas):
        """Test forward invariance against the true wall geometry, corner included."""
        assert true_clearance(spec, eroas) >= spec.cbf.obstacle_radius - 0.1

    def test_corner_rounded_outside_the_fan(self, spec, eroas):
        """Test that the inner corner is passed at close range while outside the beam fan."""
        corner = np.array([53.5, -6.5])
        outside = []
        for rec in eroas.records[:-1]:
            offset = corner - [rec.x, rec.y]
            bearing = np.arctan2(offset[1], offset[0]) - rec.psi
            bearing = (bearing + np.pi) % (2 * np.pi) - np.pi
            if np.linalg.norm(offset) < spec.cbf.obstacle_radius + 1.0 and abs(bearing) > spec.sonar.fov_h / 2:
                outside.append(rec.t)
        assert outside

    def test_runtime(self, spec):
        started = time.perf_counter()
        for algo in ("eroas", "apf", "dwa"):
            run_episode(spec, algo)
        assert time.perf_counter() - started < 30.0


class TestFullWidthWall:
    """Test cases for the climb over a wall spanning the sonar fan."""

    @pytest.fixture(scope="class")
    def spec(self):
        return loader.load("full_width_wall")

    @pytest.fixture(scope="class")
    def result(self, spec):
        return run_episode(spec, "eroas")

    def test_climbs_clear_of_the_crest(self, spec, result):
        wall = spec.world.obstacles[0]
        top = wall.base_depth + wall.height
        assert max(rec.z for rec in result.records) >= top + spec.cbf.obstacle_radius

    def test_returns_to_goal_depth(self, spec, result):
        assert result.metrics.success
        assert abs(result.records[-1].z - spec.goal[2]) <= spec.spd2c.goal_band

    def test_sweeps_are_scheduled(self, spec, result):
        """Test that pivot sweeps are taken on entry and then every sweep_every cycles at most."""
        events = result.metrics.pivot_events
        assert events > 0
        assert events <= result.metrics.cycles / spec.spd2c.sweep_every + 3
        swept = [i for i, rec in enumerate(result.records) if rec.pivot_event]
        assert all(b - a >= 2 for a, b in zip(swept, swept[1:]))

    def test_wall_kept_at_obstacle_radius(self, spec, result):
        assert true_clearance(spec, result) >= spec.cbf.obstacle_radius - 0.1


class TestClutteredField:
    """Test cases for the seeded pillar field."""

    N_SEEDS = 5

    @pytest.fixture(scope="class")
    def runs(self):
        runs = {}
        for seed in range(self.N_SEEDS):
            spec = loader.load("cluttered_field", seed=seed)
            runs[seed] = {algo: run_episode(spec, algo).metrics for algo in ("eroas", "dwa", "apf")}
        return runs

    def test_ordering_on_most_seeds(self, runs):
        """Test EROAS < DWA < APF in path length and angular jerk on all but one seed."""
        ordered = sum(ordering_holds(metrics, ("eroas", "dwa", "apf")) for metrics in runs.values())
        assert ordered >= self.N_SEEDS - 1

    def test_jerk_reduction_against_apf(self, runs):
        rows = [
            BatchRow(scenario="cluttered_field", algo=algo, seed=seed, metrics=m)
            for seed, metrics in runs.items()
            for algo, m in metrics.items()
        ]
        assert summarize(rows).jerk_reduction["cluttered_field/eroas_vs_apf"] >= 50.0


class TestForwardInvariance:
    """Test cases for barrier safety over many seeded fields."""

    N_SEEDS = 50

    def test_clearance_over_seeds(self):
        spec = loader.load("cluttered_field", seed=0)
        started = time.perf_counter()
        summary = run_batch([spec], ["eroas"], repetitions=self.N_SEEDS, workers=os.cpu_count() or 1)
        elapsed = time.perf_counter() - started

        assert len(summary.rows) == self.N_SEEDS
        assert all(row.error is None for row in summary.rows)
        worst = min(row.metrics.min_clearance for row in summary.rows)
        assert worst >= spec.cbf.obstacle_radius - 0.1
        assert elapsed < 120.0
