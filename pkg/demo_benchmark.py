import sys
import json
from pathlib import Path

# Add the app directory to Python path
sys.path.insert(0, str(Path(__file__).parent))

from app.config import config
from app.harness import run_episode
from app.plots import emit_plots
from app.recording import write_metrics, write_trajectory
from app.scenario import ScenarioError, build_world, scenario_loader

COLUMNS = ("termination", "path_length", "travel_time", "avg_angular_jerk", "min_clearance", "pivot_events")


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def demonstrate_scenario(name: str, out_dir: Path) -> dict:
    """Run every algorithm on one scenario, save logs and comparison plots."""
    print(f"\n🌊 Scenario: {name}")
    print("-" * 60)

    spec = scenario_loader.load(name)
    world = build_world(spec)
    print(f"   {len(world.obstacles)} obstacles, goal {spec.goal}, budget {spec.time_budget:.0f} s")
    print("   " + "".join(f"{c:>18}" for c in ("algo",) + COLUMNS))

    logs = {}
    results = {}
    for algo in config.ALGORITHMS:
        result = run_episode(spec, algo)
        metrics = result.metrics
        logs[algo] = result.records
        results[algo] = metrics.model_dump()

        run_dir = out_dir / name / algo
        write_trajectory(result.records, run_dir / "trajectory.csv")
        write_metrics(metrics, run_dir / "metrics.json", extra={"scenario": name, "algo": algo})
        print("   " + "".join(f"{_cell(v):>18}" for v in (algo, *(getattr(metrics, c) for c in COLUMNS))))

    plots = emit_plots(logs, world=world, out_dir=out_dir / name, goal=spec.goal)
    print(f"   📈 {len(plots)} plots written to {out_dir / name}")
    return results


def main():
    """Main demonstration function."""
    print("🚀 Sonar-Guided Obstacle Avoidance Demonstration")
    print("=" * 60)
    print("Every canonical scenario is run with:")
    print("• eroas: gap policy, pivot sweeps, obstacle memory and barrier filter")
    print("• eroas-nomem: the same without memory across cycles")
    print("• apf: artificial potential field baseline")
    print("• dwa: dynamic window baseline")
    print("=" * 60)

    out_dir = Path(config.OUTPUT_DIR) / "demo"
    report = {"scenarios": {}}
    success = True

    for name in scenario_loader.list_scenarios():
        try:
            report["scenarios"][name] = demonstrate_scenario(name, out_dir)
        except ScenarioError as e:
            print(f"❌ Could not load scenario {name}: {e}")
            success = False

    report_path = out_dir / "demo_report.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)

    print("\n" + "=" * 60)
    print(f"📋 Demo report saved to: {report_path}")
    if success:
        print("🎉 All scenarios completed.")
        print("\n📋 Next Steps:")
        print("   1. Run the acceptance suite: python run_acceptance.py")
        print("   2. Start the API server: python -m app.api.main")
        print("   3. Try endpoints: http://localhost:8000/docs")
    else:
        print("❌ Some scenarios failed to load. Check the output above for details.")

    return success


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
