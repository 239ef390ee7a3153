"""
Test cases for the episode runner, metrics and batch execution.
"""

import math

import numpy as np
import pytest

from app.harness import (
    compute_metrics,
    ordering_holds,
    profile,
    run_batch,
    run_episode,
    summarize,
)
from app.recording import TrajectoryRecord
from app.schemas import BatchRow, Metrics, ScenarioSpec, SonarConfig, Spd2cConfig
from app.world import Sphere, World


def free_water(goal_x: float = 20.0, budget: float = 60.0, **extra) -> ScenarioSpec:
    return ScenarioSpec(name="free", goal=(goal_x, 0.0, 0.0), time_budget=budget, **extra)


def metrics_with_jerk(jerk: float, success: bool = True) -> Metrics:
    return Metrics(
        success=success,
        termination="goal" if success else "timeout",
        path_length=10.0,
        travel_time=20.0,
        min_clearance=4.0,
        avg_angular_jerk=jerk,
    )


class TestComputeMetrics:
    """Test cases for metrics over trajectory logs."""

    def test_straight_line(self):
        records = [TrajectoryRecord(t=t, x=t, y=0.0, z=0.0) for t in range(191)]
        metrics = compute_metrics(records, free_water(goal_x=190.0, budget=400.0))
        assert metrics.path_length == pytest.approx(190.0)
        assert metrics.travel_time == pytest.approx(190.0)
        assert metrics.success
        assert metrics.termination == "goal"
        assert metrics.avg_angular_jerk == 0.0

    def test_angular_jerk(self):
        records = [TrajectoryRecord(t=0.125 * i, x=0.0, y=0.0, z=0.0, r=r) for i, r in enumerate([0.0, 0.0, 0.1])]
        metrics = compute_metrics(records, free_water())
        assert metrics.avg_angular_jerk == pytest.approx(6.4)

    def test_stationary(self):
        records = [TrajectoryRecord(t=0.125 * i, x=0.0, y=0.0, z=0.0) for i in range(10)]
        metrics = compute_metrics(records, free_water())
        assert metrics.path_length == 0.0
        assert metrics.avg_angular_jerk == 0.0
        assert metrics.termination == "timeout"
        assert not metrics.success

    def test_short_log_has_zero_jerk(self):
        records = [TrajectoryRecord(t=0.0, x=0.0, y=0.0, z=0.0, r=0.3)]
        assert compute_metrics(records, free_water()).avg_angular_jerk == 0.0

    def test_empty_log(self):
        with pytest.raises(ValueError):
            compute_metrics([], free_water())

    def test_free_water_has_no_clearance(self):
        records = [TrajectoryRecord(t=0.0, x=0.0, y=0.0, z=0.0)]
        assert compute_metrics(records, free_water()).min_clearance is None

    def test_clearance_and_violations(self):
        """Test clearance against a sphere and the d_min violation count."""
        spec = free_water(world=World(obstacles=[Sphere(center=(5.0, 0.0, 0.0), radius=1.0)]))
        records = [
            TrajectoryRecord(t=0.0, x=0.0, y=0.0, z=0.0),
            TrajectoryRecord(t=1.0, x=2.5, y=0.0, z=0.0),
        ]
        metrics = compute_metrics(records, spec)
        assert metrics.min_clearance == pytest.approx(1.5)
        assert metrics.d_min_violations == 1

    def test_collision_inferred(self):
        spec = free_water(world=World(obstacles=[Sphere(center=(5.0, 0.0, 0.0), radius=1.0)]))
        records = [
            TrajectoryRecord(t=0.0, x=0.0, y=0.0, z=0.0),
            TrajectoryRecord(t=1.0, x=4.5, y=0.0, z=0.0),
        ]
        assert compute_metrics(records, spec).termination == "collision"

    def test_echoes_parameters(self):
        records = [TrajectoryRecord(t=0.0, x=0.0, y=0.0, z=0.0)]
        metrics = compute_metrics(records, free_water(), pivot_events=2)
        assert metrics.obstacle_radius == 3.0
        assert metrics.cbf_gain == 0.5
        assert metrics.pivot_events == 2
        assert metrics.pivot_cost_unmodelled


class TestRunEpisode:
    """Test cases for closed-loop episodes."""

    @pytest.mark.parametrize("algo", ["eroas", "eroas-nomem", "apf", "dwa"])
    def test_free_water_reaches_goal(self, algo):
        result = run_episode(free_water(), algo)
        assert result.metrics.success
        assert result.metrics.termination == "goal"
        assert result.metrics.path_length == pytest.approx(19.0, rel=0.02)
        assert result.records[-1].mode == "end"

    def test_free_water_has_no_pivots(self):
        result = run_episode(free_water(), "eroas")
        assert result.metrics.pivot_events == 0
        assert not any(rec.constraint_active for rec in result.records)

    def test_timeout(self):
        result = run_episode(free_water(budget=1.0), "eroas")
        assert result.metrics.termination == "timeout"
        assert not result.metrics.success
        assert result.metrics.travel_time == pytest.approx(1.0)
        assert result.metrics.cycles == 8

    def test_deterministic(self):
        spec = free_water(world=World(obstacles=[Sphere(center=(12.0, 1.0, 0.0), radius=1.5)]))
        first = run_episode(spec, "eroas")
        second = run_episode(spec, "eroas")
        columns = ("t", "x", "y", "z", "psi", "r")
        a = np.array([[getattr(rec, c) for c in columns] for rec in first.records])
        b = np.array([[getattr(rec, c) for c in columns] for rec in second.records])
        assert np.array_equal(a, b)

    def test_termination_exclusive(self):
        spec = free_water(world=World(obstacles=[Sphere(center=(12.0, 1.0, 0.0), radius=1.5)]))
        metrics = run_episode(spec, "dwa").metrics
        assert metrics.termination in ("goal", "collision", "timeout")
        assert metrics.success == (metrics.termination == "goal")

    def test_capture(self):
        result = run_episode(free_water(budget=0.5), "eroas", capture=True)
        assert len(result.scans) == 4
        assert len(result.decisions) == 4
        assert result.decisions[0]["mode"] == "horizontal"

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            run_episode(free_water(), "bug2")

    def test_free_water_straight_with_256_beams(self):
        """Test that a coarser sonar fan still drives straight at a goal dead ahead."""
        spec = free_water(
            sonar=SonarConfig(n_beams=256),
            spd2c=Spd2cConfig(central_sector=(50, 200), gap_length=75),
        )
        result = run_episode(spec, "eroas")
        assert result.metrics.success
        assert max(abs(rec.y) for rec in result.records) < 0.05
        assert max(abs(rec.psi) for rec in result.records) < SonarConfig(n_beams=256).beam_spacing

    def test_time_advances_by_control_period(self):
        result = run_episode(free_water(budget=1.0), "apf")
        times = [rec.t for rec in result.records]
        assert np.allclose(np.diff(times), 0.125)


class TestBatch:
    """Test cases for batch execution and summaries."""

    def test_cardinality(self):
        spec = free_water(goal_x=3.0, budget=20.0)
        summary = run_batch([spec], ["eroas", "apf", "dwa"], repetitions=5, workers=1)
        assert len(summary.rows) == 15
        pairs = {(row.algo, row.seed) for row in summary.rows}
        assert pairs == {(a, s) for a in ("eroas", "apf", "dwa") for s in range(5)}
        assert all(row.error is None for row in summary.rows)

    def test_summarize_medians(self):
        rows = [
            BatchRow(scenario="wall", algo="eroas", seed=s, metrics=metrics_with_jerk(j, ok))
            for s, (j, ok) in enumerate([(1.0, True), (2.0, True), (9.0, False)])
        ]
        summary = summarize(rows)
        entry = summary.medians["wall/eroas"]
        assert entry["avg_angular_jerk"] == 2.0
        assert entry["success_rate"] == pytest.approx(2.0 / 3.0)

    def test_jerk_reduction(self):
        rows = [
            BatchRow(scenario="wall", algo="eroas", seed=0, metrics=metrics_with_jerk(1.0)),
            BatchRow(scenario="wall", algo="apf", seed=0, metrics=metrics_with_jerk(4.0)),
            BatchRow(scenario="wall", algo="dwa", seed=0, metrics=metrics_with_jerk(2.0)),
        ]
        reduction = summarize(rows).jerk_reduction
        assert reduction["wall/eroas_vs_apf"] == pytest.approx(75.0)
        assert reduction["wall/eroas_vs_dwa"] == pytest.approx(50.0)

    def test_failed_rows_skipped(self):
        rows = [
            BatchRow(scenario="wall", algo="eroas", seed=0, error="boom"),
            BatchRow(scenario="wall", algo="apf", seed=0, metrics=metrics_with_jerk(4.0)),
        ]
        summary = summarize(rows)
        assert "wall/eroas" not in summary.medians
        assert summary.jerk_reduction == {}


class TestProfile:
    """Test cases for decision-loop timing."""

    def test_profile_report(self):
        report = profile(free_water(), n_cycles=20)
        assert report["cycles"] == 20
        assert report["budget_rate"] == pytest.approx(8.0)
        assert report["cycle_time_max"] >= report["cycle_time_median"] > 0.0
        assert math.isfinite(report["frame_rate"])


class TestOrdering:
    """Test cases for success-aware metric ordering."""

    def test_strict_ordering(self):
        metrics = {
            "eroas": metrics_with_jerk(1.0),
            "dwa": metrics_with_jerk(2.0),
            "apf": metrics_with_jerk(3.0),
        }
        metrics = {
            a: m.model_copy(update={"path_length": p})
            for (a, m), p in zip(metrics.items(), (100.0, 104.0, 112.0))
        }
        assert ordering_holds(metrics, ("eroas", "dwa", "apf"))
        assert not ordering_holds(metrics, ("apf", "dwa", "eroas"))

    def test_failed_baseline_ranks_last(self):
        """Test that a short crashed run never beats a completed one."""
        metrics = {
            "eroas": metrics_with_jerk(1.0).model_copy(update={"path_length": 110.0}),
            "dwa": metrics_with_jerk(2.0).model_copy(update={"path_length": 115.0}),
            "apf": metrics_with_jerk(0.5, success=False).model_copy(update={"path_length": 40.0}),
        }
        assert ordering_holds(metrics, ("eroas", "dwa", "apf"))

    def test_failed_lead_breaks_ordering(self):
        metrics = {
            "eroas": metrics_with_jerk(1.0, success=False),
            "dwa": metrics_with_jerk(2.0),
            "apf": metrics_with_jerk(3.0),
        }
        assert not ordering_holds(metrics, ("eroas", "dwa", "apf"))

    def test_jerk_reduction_uses_successful_runs(self):
        rows = [
            BatchRow(scenario="field", algo="eroas", seed=0, metrics=metrics_with_jerk(1.0)),
            BatchRow(scenario="field", algo="apf", seed=0, metrics=metrics_with_jerk(4.0)),
            BatchRow(scenario="field", algo="apf", seed=1, metrics=metrics_with_jerk(0.1, False)),
            BatchRow(scenario="field", algo="apf", seed=2, metrics=metrics_with_jerk(0.2, False)),
        ]
        reduction = summarize(rows).jerk_reduction
        assert reduction["field/eroas_vs_apf"] == pytest.approx(75.0)

    def test_jerk_reduction_falls_back_to_all_runs(self):
        rows = [
            BatchRow(scenario="field", algo="eroas", seed=0, metrics=metrics_with_jerk(1.0)),
            BatchRow(scenario="field", algo="apf", seed=0, metrics=metrics_with_jerk(2.0, False)),
        ]
        assert summarize(rows).jerk_reduction["field/eroas_vs_apf"] == pytest.approx(50.0)
