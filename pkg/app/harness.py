"""
Closed-loop episode runner, metrics and batch execution.

One control cycle reads the horizontal scan, asks the active planner for
nominal references, takes a pivot sweep when the policy requests one, feeds
every projected point to the obstacle memory, filters the references through
the barrier function, clips the yaw rate and advances the vehicle for one
control period.
"""

import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.config import config
from app.planners.baselines import apf_step, dwa_step
from app.planners.scg import LocalMemory
from app.planners.spd2c import Spd2cPolicy
from app.planners.stcbf import clip_yaw, filter_reference
from app.recording import TrajectoryRecord
from app.scenario import build_world, start_state, validate_scenario
from app.schemas import BatchRow, BatchSummary, Metrics, ScenarioSpec
from app.sonar import pivot_sweep, project_points, scan
from app.vehicle import VehicleState, advance, goal_reached
from app.world import World

logger = logging.getLogger(__name__)

MEDIAN_FIELDS = ("path_length", "travel_time", "avg_angular_jerk", "min_clearance")


@dataclass
class EpisodeResult:
    records: List[TrajectoryRecord]
    metrics: Metrics
    scans: List[tuple] = field(default_factory=list)
    decisions: List[dict] = field(default_factory=list)


def _clearance(world: World, state: VehicleState) -> float:
    return float(world.distance_many(state.position[None, :])[0])


def _termination(spec: ScenarioSpec, world: World, state: VehicleState) -> Optional[str]:
    if goal_reached(state, spec.goal, spec.goal_tolerance):
        return "goal"
    if _clearance(world, state) <= 0.0:
        return "collision"
    if state.t >= spec.time_budget - 1e-9:
        return "timeout"
    return None


def _record(state: VehicleState, **extra) -> TrajectoryRecord:
    return TrajectoryRecord(
        t=state.t,
        x=state.x,
        y=state.y,
        z=state.z,
        psi=state.psi,
        vx=state.vx,
        vy=state.vy,
        vz=state.vz,
        r=state.r,
        **extra,
    )


def run_episode(spec: ScenarioSpec, algo: str, capture: bool = False) -> EpisodeResult:
    """Run one closed-loop episode; collision and timeout end it without raising."""
    if algo not in config.ALGORITHMS:
        raise ValueError(f"Unknown algorithm '{algo}', expected one of {config.ALGORITHMS}")

    world = build_world(spec)
    validate_scenario(spec, world)
    rng = np.random.default_rng(spec.seed)
    state = start_state(spec)
    policy = Spd2cPolicy(spec.spd2c, spec.sonar, spec.sweep)
    memory = LocalMemory(**spec.memory.model_dump())
    uses_policy = algo.startswith("eroas")

    logger.info(
        f"Episode start: scenario '{spec.name}', algo {algo}, seed {spec.seed}, "
        f"{len(world.obstacles)} obstacles"
    )

    records: List[TrajectoryRecord] = []
    scans: List[tuple] = []
    decisions: List[dict] = []
    cycle_times: List[float] = []
    previous = None
    pending = None
    horizontal = None
    pivot_events = 0
    cycle = 0

    while True:
        termination = _termination(spec, world, state)
        if termination is not None:
            break

        if horizontal is None or cycle % spec.scan_every == 0:
            horizontal = scan(world, state, 0.0, spec.sonar, rng)
            if capture:
                scans.append((cycle, horizontal))

        swept = False
        ctx = None
        beam = 0
        pivot = math.nan
        if uses_policy:
            started = time.perf_counter()
            decision = policy.decide(horizontal, pending, state, spec.goal, previous)
            elapsed = time.perf_counter() - started

            pending = None
            points = [project_points(horizontal)]
            if decision.pivot_requested:
                pending = pivot_sweep(world, state, spec.sweep, spec.sonar, rng)
                swept = True
                pivot_events += 1
                logger.info(
                    f"Pivot sweep {pivot_events} at t={state.t:.2f} s, z={state.z:.2f} m "
                    f"({decision.mode.value})"
                )
                points.extend(project_points(s) for s in pending)
                if capture:
                    scans.extend((cycle, s) for s in pending)
            if algo == "eroas-nomem":
                memory.clear()
            memory.update(np.concatenate(points), state.position)

            started = time.perf_counter()
            ctx = memory.context(state.position, decision.mode)
            safe = filter_reference(decision.velocity, state, ctx, spec.cbf, spec.limits)
            cycle_times.append(elapsed + time.perf_counter() - started)

            v_ref, r_ref, mode = decision.velocity, decision.yaw_rate, decision.mode.value
            beam = decision.beam or 0
            if decision.pivot is not None:
                pivot = decision.pivot
            if capture:
                decisions.append({"cycle": cycle, "t": state.t, **decision.to_dict()})
            logger.debug(
                f"cycle {cycle}: {mode} beam={beam} pivot={pivot:.4f} "
                f"active={safe.constraint_active}"
            )
            previous = decision
        else:
            started = time.perf_counter()
            if algo == "apf":
                v_ref, r_ref = apf_step(horizontal, state, spec.goal, spec.apf)
            else:
                v_ref, r_ref = dwa_step(horizontal, state, spec.goal, spec.dwa, spec.limits)
            safe = filter_reference(v_ref, state, None, spec.cbf)
            cycle_times.append(time.perf_counter() - started)
            mode = "horizontal"
            if capture:
                decisions.append(
                    {"cycle": cycle, "t": state.t, "velocity": list(v_ref), "yaw_rate": r_ref}
                )

        r_cmd = clip_yaw(r_ref, spec.limits.r_max)
        records.append(
            _record(
                state,
                mode=mode,
                vx_ref=v_ref[0],
                vy_ref=v_ref[1],
                vz_ref=v_ref[2],
                vx_safe=safe.velocity[0],
                vy_safe=safe.velocity[1],
                vz_safe=safe.velocity[2],
                r_ref=r_ref,
                r_cmd=r_cmd,
                h=safe.h,
                constraint_active=safe.constraint_active,
                deviation=safe.deviation,
                memory_size=len(memory),
                closest_distance=ctx.distance if ctx is not None else math.nan,
                pivot_event=swept,
                beam=beam,
                pivot=pivot,
            )
        )

        if swept and spec.sonar.sweep_time_cost > 0.0:
            state = replace(state, t=state.t + spec.sonar.sweep_time_cost)
        state = advance(
            state, safe.velocity, r_cmd, spec.limits, spec.tracking, spec.control_period
        )
        cycle += 1

    records.append(_record(state, mode="end"))
    metrics = compute_metrics(
        records,
        spec,
        world=world,
        termination=termination,
        cycle_times=cycle_times,
        pivot_events=pivot_events,
    )
    logger.info(
        f"Episode end: {termination} after {cycle} cycles, path {metrics.path_length:.2f} m, "
        f"time {metrics.travel_time:.2f} s, jerk {metrics.avg_angular_jerk:.4f} rad/s^3"
    )
    return EpisodeResult(records=records, metrics=metrics, scans=scans, decisions=decisions)


def compute_metrics(
    records: Sequence[TrajectoryRecord],
    spec: ScenarioSpec,
    world: Optional[World] = None,
    termination: Optional[str] = None,
    cycle_times: Sequence[float] = (),
    pivot_events: Optional[int] = None,
) -> Metrics:
    if not records:
        raise ValueError("compute_metrics needs at least one trajectory record")
    world = world if world is not None else build_world(spec)

    positions = np.array([[rec.x, rec.y, rec.z] for rec in records])
    path_length = float(np.sum(np.linalg.norm(np.diff(positions, axis=0), axis=1)))
    travel_time = records[-1].t - records[0].t

    clearance = world.distance_many(positions)
    min_clearance = float(np.min(clearance))
    violations = int(np.sum(clearance < spec.d_min))
    if violations:
        logger.warning(f"{violations} logged positions closer than d_min={spec.d_min} m")

    yaw_rates = np.array([rec.r for rec in records])
    if len(yaw_rates) < 3:
        jerk = 0.0
    else:
        second = yaw_rates[2:] - 2.0 * yaw_rates[1:-1] + yaw_rates[:-2]
        jerk = float(np.mean(np.abs(second))) / spec.control_period**2

    if termination is None:
        last = records[-1]
        final = VehicleState(x=last.x, y=last.y, z=last.z)
        if goal_reached(final, spec.goal, spec.goal_tolerance):
            termination = "goal"
        elif clearance[-1] <= 0.0:
            termination = "collision"
        else:
            termination = "timeout"

    if pivot_events is None:
        pivot_events = sum(1 for rec in records if rec.pivot_event)

    times = np.asarray(cycle_times, dtype=float)
    return Metrics(
        success=termination == "goal",
        termination=termination,
        path_length=path_length,
        travel_time=travel_time,
        min_clearance=min_clearance if math.isfinite(min_clearance) else None,
        d_min_violations=violations,
        avg_angular_jerk=jerk,
        pivot_events=pivot_events,
        pivot_cost_unmodelled=pivot_events > 0 and spec.sonar.sweep_time_cost == 0.0,
        cycles=len(times),
        cycle_time_median=float(np.median(times)) if len(times) else 0.0,
        cycle_time_p95=float(np.percentile(times, 95)) if len(times) else 0.0,
        cycle_time_max=float(np.max(times)) if len(times) else 0.0,
        tracking_tau=spec.tracking.tau,
        obstacle_radius=spec.cbf.obstacle_radius,
        cbf_gain=spec.cbf.gain,
    )


def _run_job(job) -> BatchRow:
    spec, algo = job
    try:
        metrics = run_episode(spec, algo).metrics
        return BatchRow(scenario=spec.name, algo=algo, seed=spec.seed, metrics=metrics)
    except Exception as e:
        logger.error(f"Episode {spec.name}/{algo}/seed {spec.seed} failed: {e}")
        return BatchRow(scenario=spec.name, algo=algo, seed=spec.seed, error=str(e))


def _success_median(group: Sequence[Metrics], name: str) -> Optional[float]:
    """Median over the successful episodes, or over all of them when none succeeded."""
    successful = [m for m in group if m.success]
    values = [getattr(m, name) for m in (successful or group) if getattr(m, name) is not None]
    return float(np.median(values)) if values else None


def ordering_key(metrics: Metrics, name: str) -> tuple:
    """Sort key that ranks every failed episode after every successful one."""
    return (not metrics.success, getattr(metrics, name))


def ordering_holds(
    metrics_by_algo: Dict[str, Metrics],
    order: Sequence[str],
    fields: Sequence[str] = ("path_length", "avg_angular_jerk"),
) -> bool:
    """True when the first algorithm succeeded and the keys strictly increase along order."""
    if not metrics_by_algo[order[0]].success:
        return False
    return all(
        ordering_key(metrics_by_algo[a], name) < ordering_key(metrics_by_algo[b], name)
        for name in fields
        for a, b in zip(order, order[1:])
    )


def summarize(rows: Sequence[BatchRow]) -> BatchSummary:
    groups: Dict[str, List[Metrics]] = defaultdict(list)
    for row in rows:
        if row.metrics is not None:
            groups[f"{row.scenario}/{row.algo}"].append(row.metrics)

    medians: Dict[str, Dict[str, float]] = {}
    for key, group in groups.items():
        entry = {"success_rate": float(np.mean([m.success for m in group]))}
        for name in MEDIAN_FIELDS:
            values = [getattr(m, name) for m in group if getattr(m, name) is not None]
            if values:
                entry[name] = float(np.median(values))
        medians[key] = entry

    jerk_reduction: Dict[str, float] = {}
    for scenario in sorted({row.scenario for row in rows}):
        ours = _success_median(groups.get(f"{scenario}/eroas", []), "avg_angular_jerk")
        if ours is None:
            continue
        for baseline in ("apf", "dwa"):
            theirs = _success_median(groups.get(f"{scenario}/{baseline}", []), "avg_angular_jerk")
            if theirs:
                jerk_reduction[f"{scenario}/eroas_vs_{baseline}"] = 100.0 * (1.0 - ours / theirs)

    return BatchSummary(rows=list(rows), medians=medians, jerk_reduction=jerk_reduction)


def run_batch(
    specs: Sequence[ScenarioSpec],
    algos: Sequence[str],
    repetitions: int = 1,
    workers: Optional[int] = None,
) -> BatchSummary:
    """Every scenario x algorithm x seed; seeds count up from each scenario's own seed."""
    jobs = [
        (spec.model_copy(update={"seed": spec.seed + k}), algo)
        for spec in specs
        for algo in algos
        for k in range(repetitions)
    ]
    workers = workers or config.BATCH_WORKERS
    logger.info(f"Running batch of {len(jobs)} episodes with {workers} worker(s)")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job, jobs))
    else:
        rows = []
        for i, job in enumerate(jobs, 1):
            rows.append(_run_job(job))
            logger.info(f"Batch progress: {i}/{len(jobs)}")

    failed = sum(1 for row in rows if row.error)
    if failed:
        logger.warning(f"{failed} of {len(rows)} batch episodes failed")
    return summarize(rows)


def profile(spec: ScenarioSpec, n_cycles: int = 200) -> dict:
    """Decide+filter timing over at most n_cycles EROAS cycles."""
    budget = min(spec.time_budget, n_cycles * spec.control_period)
    result = run_episode(spec.model_copy(update={"time_budget": budget}), "eroas")
    metrics = result.metrics
    median = metrics.cycle_time_median
    return {
        "scenario": spec.name,
        "cycles": metrics.cycles,
        "cycle_time_median": median,
        "cycle_time_p95": metrics.cycle_time_p95,
        "cycle_time_max": metrics.cycle_time_max,
        "frame_rate": 1.0 / median if median > 0 else math.inf,
        "budget_rate": 1.0 / spec.control_period,
        "within_budget": median < spec.control_period,
    }
