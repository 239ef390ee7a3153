import json
import os
import sys
import tempfile
import time
from pathlib import Path

# Add the app directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from app.config import config
from app.harness import ordering_holds, profile, run_batch, run_episode, summarize
from app.recording import write_trajectory
from app.scenario import scenario_loader
from app.schemas import BatchRow

BASELINES = ("apf", "dwa")


def check_forward_invariance(n_seeds: int = 50):
    """Clearance of every EROAS episode over seeded cluttered fields."""
    print(" Checking forward invariance over seeded cluttered fields...")
    spec = scenario_loader.load("cluttered_field", seed=0)
    workers = max(config.BATCH_WORKERS, os.cpu_count() or 1)
    started = time.perf_counter()
    summary = run_batch([spec], ["eroas"], repetitions=n_seeds, workers=workers)
    elapsed = time.perf_counter() - started

    bound = spec.cbf.obstacle_radius - 0.1
    failures = []
    for row in summary.rows:
        if row.error or row.metrics.min_clearance < bound:
            clearance = None if row.error else row.metrics.min_clearance
            failures.append({"seed": row.seed, "min_clearance": clearance, "error": row.error})
            print(f"   seed {row.seed}: clearance {clearance} below bound")
    clearances = [row.metrics.min_clearance for row in summary.rows if row.metrics]
    worst = min(clearances) if clearances else float("nan")

    print(
        f"   worst clearance {worst:.3f} m over {n_seeds} episodes in {elapsed:.1f} s "
        f"({workers} worker(s))"
    )
    return {
        "success": not failures and elapsed < 120.0,
        "worst_clearance": worst,
        "failures": failures,
        "runtime_s": elapsed,
    }


def check_dead_end_corridor():
    """EROAS escapes the dead end, memoryless baselines do not."""
    print("\n Checking dead-end corridor...")
    spec = scenario_loader.load("dead_end_corridor")
    outcomes = {}
    for algo in ("eroas", *BASELINES):
        metrics = run_episode(spec, algo).metrics
        outcomes[algo] = metrics.termination
        print(f"   {algo}: {metrics.termination} after {metrics.travel_time:.1f} s")

    success = outcomes["eroas"] == "goal" and all(outcomes[b] != "goal" for b in BASELINES)
    return {"success": success, "terminations": outcomes}


def check_cluttered_ordering(n_seeds: int = 5):
    """Path length and angular jerk ordering EROAS < DWA < APF per seed, failures ranked last."""
    print("\n Checking cluttered-field ordering...")
    rows = []
    holds = 0
    for seed in range(n_seeds):
        spec = scenario_loader.load("cluttered_field", seed=seed)
        metrics = {
            algo: run_episode(spec, algo).metrics for algo in ("eroas", "dwa", "apf")
        }
        rows.extend(
            BatchRow(scenario=spec.name, algo=algo, seed=seed, metrics=m)
            for algo, m in metrics.items()
        )
        ordered = ordering_holds(metrics, ("eroas", "dwa", "apf"))
        holds += ordered
        print(
            f"   seed {seed}: path "
            + ", ".join(f"{a}={m.path_length:.1f} ({m.termination})" for a, m in metrics.items())
            + f" | ordering {'holds' if ordered else 'violated'}"
        )

    summary = summarize(rows)
    reduction = summary.jerk_reduction.get("cluttered_field/eroas_vs_apf", 0.0)
    print(f"   jerk reduction vs APF: {reduction:.1f}%")
    return {
        "success": holds >= n_seeds - 1 and reduction >= 50.0,
        "seeds_ordered": holds,
        "jerk_reduction_vs_apf": reduction,
        "medians": summary.medians,
    }


def check_wall_climb():
    """Pivot sweep over a full-width wall, climb above it and return to goal depth."""
    print("\n Checking climb over full-width wall...")
    spec = scenario_loader.load("full_width_wall")
    result = run_episode(spec, "eroas")
    wall = spec.world.obstacles[0]
    wall_top = wall.base_depth + wall.height
    peak = max(rec.z for rec in result.records)
    final_depth_error = abs(result.records[-1].z - spec.goal[2])

    print(f"   pivot events {result.metrics.pivot_events}, peak depth {peak:.2f} m")
    success = (
        result.metrics.success
        and 0 < result.metrics.pivot_events <= result.metrics.cycles / spec.spd2c.sweep_every + 3
        and peak >= wall_top + spec.cbf.obstacle_radius
        and final_depth_error <= spec.spd2c.goal_band
    )
    return {
        "success": success,
        "pivot_events": result.metrics.pivot_events,
        "peak_z": peak,
        "final_depth_error": final_depth_error,
    }


def check_throughput():
    print("\n Checking decision-loop throughput...")
    report = profile(scenario_loader.load("cluttered_field"))
    print(
        f"   median cycle {1000 * report['cycle_time_median']:.3f} ms "
        f"({report['frame_rate']:.0f} Hz against {report['budget_rate']:.0f} Hz)"
    )
    return {"success": report["within_budget"], **report}


def check_determinism():
    print("\n Checking determinism...")
    spec = scenario_loader.load("full_width_wall")
    with tempfile.TemporaryDirectory() as tmp:
        first = write_trajectory(run_episode(spec, "eroas").records, Path(tmp) / "a.csv")
        second = write_trajectory(run_episode(spec, "eroas").records, Path(tmp) / "b.csv")
        identical = first.read_bytes() == second.read_bytes()
    print(f"   logs {'identical' if identical else 'differ'}")
    return {"success": identical}


def main():
    """Run every closed-loop acceptance check and save a report."""
    print(" Obstacle Avoidance Acceptance Suite")
    print("=" * 50)

    if not Path(config.SCENARIO_DIR).exists():
        print(f" Error: scenario directory '{config.SCENARIO_DIR}' not found.")
        return False

    checks = {
        "forward_invariance": check_forward_invariance,
        "dead_end_corridor": check_dead_end_corridor,
        "cluttered_ordering": check_cluttered_ordering,
        "wall_climb": check_wall_climb,
        "throughput": check_throughput,
        "determinism": check_determinism,
    }

    report = {"test_results": {}}
    for name, check in checks.items():
        try:
            report["test_results"][name] = check()
        except Exception as e:
            print(f" {name} failed with error: {e}")
            report["test_results"][name] = {"success": False, "error": str(e)}

    report_path = Path(config.OUTPUT_DIR) / "acceptance_report.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, default=float)
    print(f"\n Acceptance report saved to: {report_path}")

    print("\n" + "=" * 50)
    passed = [name for name, r in report["test_results"].items() if r["success"]]
    print(f" {len(passed)}/{len(checks)} checks passed")
    for name, result in report["test_results"].items():
        print(f"   {'PASS' if result['success'] else 'FAIL'}  {name}")

    return len(passed) == len(checks)


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
