"""Trace CSV files and JSON renderings of grasp outcomes."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

from .control import GraspOutcome
from .core import COLUMNS, GraspTrace, TraceSample
from .hardness import Constant, HardnessReport
from .scenario import FORMAT_VERSION, dumps


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def write_trace_csv(path, trace: GraspTrace, *, dims=None, digest: str = "", seed: int = 0):
    """Comment-line header (``# key: value``), then a column header row, then one row per frame."""
    header = {"format_version": FORMAT_VERSION, "frame_rate": repr(float(trace.frame_rate)),
              "scenario_digest": digest, "seed": seed}
    if dims is not None:
        header["dims"] = f"{dims.width}x{dims.height}@{dims.pitch!r}"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for s in trace:
            w.writerow([_fmt(getattr(s, c)) for c in COLUMNS])


def read_trace_csv(path) -> tuple[dict, GraspTrace]:
    header, rows = {}, []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].partition(":")
            header[k.strip()] = v.strip()
        else:
            body.append(line)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected trace columns {reader.fieldnames}")
    for r in reader:
        rows.append(TraceSample(float(r["t"]), float(r["delta"]), float(r["mean_normal"]),
                                float(r["max_normal"]), float(r["mean_shear"]), int(r["contact_area"])))
    if not rows:
        raise ValueError("trace file has no rows")
    return header, GraspTrace(tuple(rows), float(header["frame_rate"]))


def report_to_dict(report: Optional[HardnessReport]) -> Optional[dict]:
    if report is None:
        return None
    if report.rate is None:
        rate = None
    elif isinstance(report.rate, Constant):
        rate = {"kind": "constant", "c": report.rate.c, "max_rel_dev": report.rate.max_rel_dev}
    else:
        rate = {"kind": "variable", "slopes": list(report.rate.slopes), "max_rel_dev": report.rate.max_rel_dev}
    return {"c": report.c, "h": report.h, "rate": rate, "d2": report.d2,
            "delta_max": report.delta_max, "peak_force": report.peak_force}


def outcome_to_dict(outcome: GraspOutcome) -> dict:
    def mark(m):
        return None if m is None else {"t": m.t, "closure": m.closure}

    return {
        "terminated_by": outcome.terminated_by.value,
        "report": report_to_dict(outcome.report),
        "contact_at": mark(outcome.contact_at),
        "threshold_at": mark(outcome.threshold_at),
        "steps_taken": outcome.steps_taken,
        "slip_events": [{"t": e.t, "response_applied": e.response_applied, "clamped": e.clamped}
                        for e in outcome.slip_events],
        "phases": [[i, p.value] for i, p in outcome.phases],
        "frames": len(outcome.trace),
    }


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")
