"""
On-disk formats: trajectory logs and scan dumps as CSV, decision streams as
JSON lines, metrics and batch summaries as JSON. Every CSV starts with a
versioned schema comment line.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from app.schemas import BatchSummary, Metrics
from app.sonar import SonarScan

logger = logging.getLogger(__name__)

TRAJECTORY_SCHEMA = "# schema: trajectory-log v1"
SCAN_SCHEMA = "# schema: scan-dump v1"


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    x: float
    y: float
    z: float
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    r: float = 0.0
    mode: str = "horizontal"
    vx_ref: float = 0.0
    vy_ref: float = 0.0
    vz_ref: float = 0.0
    vx_safe: float = 0.0
    vy_safe: float = 0.0
    vz_safe: float = 0.0
    r_ref: float = 0.0
    r_cmd: float = 0.0
    h: float = math.nan
    constraint_active: bool = False
    deviation: float = 0.0
    memory_size: int = 0
    closest_distance: float = math.nan
    pivot_event: bool = False
    beam: int = 0
    pivot: float = math.nan


_FIELD_TYPES = {f.name: f.type for f in fields(TrajectoryRecord)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _parse(name: str, text: str):
    kind = _FIELD_TYPES[name]
    if kind in (bool, "bool"):
        return text == "1"
    if kind in (int, "int"):
        return int(text)
    if kind in (float, "float"):
        return float(text)
    return text


def write_trajectory(records: Sequence[TrajectoryRecord], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [f.name for f in fields(TrajectoryRecord)]
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(TRAJECTORY_SCHEMA + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(names)
        for record in records:
            writer.writerow([_format(getattr(record, n)) for n in names])
    logger.info(f"Wrote trajectory log with {len(records)} records to {path}")
    return path


def read_trajectory(path: Path) -> List[TrajectoryRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        header = f.readline().strip()
        if header != TRAJECTORY_SCHEMA:
            raise ValueError(f"Unsupported trajectory log schema in {path}: {header!r}")
        reader = csv.DictReader(f)
        return [
            TrajectoryRecord(**{k: _parse(k, v) for k, v in row.items()}) for row in reader
        ]


def write_scan_dump(scans: Iterable[tuple], path: Path) -> Path:
    """Dump (cycle, SonarScan) pairs, one row per beam."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SCAN_SCHEMA + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["cycle", "index", "azimuth", "pivot", "range", "intensity"])
        for cycle, sonar_scan in scans:
            _write_scan_rows(writer, cycle, sonar_scan)
    return path


def _write_scan_rows(writer, cycle: int, sonar_scan: SonarScan) -> None:
    for i in range(sonar_scan.n_beams):
        value = sonar_scan.ranges[i]
        writer.writerow(
            [
                cycle,
                i + 1,
                repr(float(sonar_scan.azimuths[i])),
                repr(sonar_scan.pivot_angle),
                -1 if math.isnan(value) else repr(float(value)),
                repr(float(sonar_scan.intensities[i])),
            ]
        )


def write_decisions(decisions: Iterable[dict], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for entry in decisions:
            f.write(json.dumps(entry) + "\n")
    return path


def write_metrics(metrics: Metrics, path: Path, extra: dict = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"schema": "metrics v1", **(extra or {}), "metrics": metrics.model_dump()}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    logger.info(f"Wrote metrics to {path}")
    return path


def write_batch(summary: BatchSummary, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs_path = out_dir / "batch_runs.csv"
    metric_names = list(Metrics.model_fields)
    with open(runs_path, "w", encoding="utf-8", newline="") as f:
        f.write("# schema: batch-runs v1\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["scenario", "algo", "seed", "error", *metric_names])
        for row in summary.rows:
            values = row.metrics.model_dump() if row.metrics else {}
            writer.writerow(
                [row.scenario, row.algo, row.seed, row.error or ""]
                + [_format(values[n]) if n in values else "" for n in metric_names]
            )

    summary_path = out_dir / "batch_summary.json"
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(
            {
                "schema": "batch-summary v1",
                "medians": summary.medians,
                "jerk_reduction": summary.jerk_reduction,
            },
            f,
            indent=2,
        )
    logger.info(f"Wrote batch results to {runs_path} and {summary_path}")
    return [runs_path, summary_path]
