import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.config import config
from app.harness import profile, run_batch, run_episode
from app.plots import emit_plots
from app.recording import (
    read_trajectory,
    write_batch,
    write_decisions,
    write_metrics,
    write_scan_dump,
    write_trajectory,
)
from app.scenario import ScenarioError, build_world, scenario_loader

logger = logging.getLogger(__name__)

EXIT_CODES = {"goal": 0, "collision": 2, "timeout": 3}
EXIT_CONFIG_ERROR = 1


def _run(args) -> int:
    spec = scenario_loader.load(args.scenario, seed=args.seed)
    capture = args.dump_scans or args.dump_decisions
    result = run_episode(spec, args.algo, capture=capture)

    out_dir = Path(args.out) / f"{spec.name}_{args.algo}_seed{spec.seed}"
    write_trajectory(result.records, out_dir / "trajectory.csv")
    write_metrics(
        result.metrics,
        out_dir / "metrics.json",
        extra={"scenario": spec.name, "algo": args.algo, "seed": spec.seed},
    )
    if args.dump_scans:
        try:
            write_scan_dump(result.scans, out_dir / "scans.csv")
        except OSError as e:
            logger.warning(f"Could not write scan dump: {e}")
    if args.dump_decisions:
        try:
            write_decisions(result.decisions, out_dir / "decisions.jsonl")
        except OSError as e:
            logger.warning(f"Could not write decision dump: {e}")

    print(json.dumps(result.metrics.model_dump(), indent=2))
    return EXIT_CODES[result.metrics.termination]


def _batch(args) -> int:
    directory = Path(args.scenarios)
    paths = sorted(directory.glob("*.yaml")) if directory.is_dir() else [directory]
    if not paths:
        raise ScenarioError(f"No scenario files found in {directory}")
    specs = [scenario_loader.load(str(p)) for p in paths]

    summary = run_batch(specs, args.algos, repetitions=args.reps, workers=args.workers)
    write_batch(summary, Path(args.out))
    print(json.dumps({"medians": summary.medians, "jerk_reduction": summary.jerk_reduction}, indent=2))
    return 0


def _plot(args) -> int:
    logs = {}
    for path in args.log:
        label = Path(path).parent.name or Path(path).stem
        logs[label] = read_trajectory(Path(path))

    world = None
    goal = None
    if args.scenario:
        spec = scenario_loader.load(args.scenario)
        world = build_world(spec)
        goal = spec.goal
    for path in emit_plots(logs, world=world, out_dir=Path(args.out), goal=goal):
        print(path)
    return 0


def _profile(args) -> int:
    spec = scenario_loader.load(args.scenario, seed=args.seed)
    print(json.dumps(profile(spec, args.cycles), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Sonar-guided AUV obstacle avoidance testbed")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one closed-loop episode")
    run.add_argument("--scenario", required=True, help="Scenario file or name in the scenario directory")
    run.add_argument("--algo", choices=config.ALGORITHMS, default="eroas")
    run.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    run.add_argument("--dump-scans", action="store_true", help="Write every scan as CSV")
    run.add_argument("--dump-decisions", action="store_true", help="Write decisions as JSON lines")
    run.add_argument("--out", default=config.OUTPUT_DIR)
    run.set_defaults(handler=_run)

    batch = commands.add_parser("batch", help="Run scenarios x algorithms x seeds")
    batch.add_argument("--scenarios", default=config.SCENARIO_DIR, help="Scenario directory or file")
    batch.add_argument("--algos", nargs="+", choices=config.ALGORITHMS, default=["eroas", "apf", "dwa"])
    batch.add_argument("--reps", type=int, default=5)
    batch.add_argument("--workers", type=int, default=None)
    batch.add_argument("--out", default=config.OUTPUT_DIR)
    batch.set_defaults(handler=_batch)

    plot = commands.add_parser("plot", help="Plot one or more trajectory logs")
    plot.add_argument("--log", nargs="+", required=True, help="Trajectory CSV files")
    plot.add_argument("--scenario", default=None, help="Scenario for obstacle outlines")
    plot.add_argument("--out", default=config.OUTPUT_DIR)
    plot.set_defaults(handler=_plot)

    prof = commands.add_parser("profile", help="Time decide+filter against the control budget")
    prof.add_argument("--scenario", required=True)
    prof.add_argument("--cycles", type=int, default=200)
    prof.add_argument("--seed", type=int, default=None)
    prof.set_defaults(handler=_profile)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return args.handler(args)
    except ScenarioError as e:
        logger.error(f"Scenario error: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
