"""Command-line entry point: grasp, compare, ripeness and slip runs from JSON scenarios.

Exit codes: 0 success, 1 invalid scenario or arguments, 2 failure while running.
"""
from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .classify import track_ripeness
from .control import GraspOutcome, run_grasp
from .scenario import Scenario, ScenarioError, parse_scenario
from .sim import ripen

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class RunError(RuntimeError):
    pass


def run_scenario(scenario: Scenario, *, fruit=None, with_slip: bool = False) -> GraspOutcome:
    inj = None
    if with_slip and scenario.slip_injection is not None:
        inj = (scenario.slip_injection.t_slip, scenario.slip_injection.drift)
    return run_grasp(fruit or scenario.fruit, scenario.sim, scenario.controller,
                     calib=scenario.decomposition, segmentation=scenario.segmentation,
                     slope=scenario.slope, slip_injection=inj)


def _meta(scenario: Scenario) -> dict:
    return {"seed": scenario.sim.seed, "scenario_digest": scenario.digest(), "fruit": scenario.fruit.name}


def _write_trace(path, outcome: GraspOutcome, scenario: Scenario):
    io.write_trace_csv(path, outcome.trace, dims=scenario.sim.dims, digest=scenario.digest(),
                       seed=scenario.sim.seed)


def cmd_grasp(scenario: Scenario, out: Path):
    outcome = run_scenario(scenario, with_slip=True)
    _write_trace(out / "trace.csv", outcome, scenario)
    io.write_json(out / "outcome.json", {**_meta(scenario), **io.outcome_to_dict(outcome)})
    return outcome


def _compare_row(scenario: Scenario):
    outcome = run_scenario(scenario)
    if outcome.report is None:
        raise RunError(f"{scenario.fruit.name}: grasp ended with {outcome.terminated_by.value}, no report")
    return scenario.fruit.name, outcome.report.h, outcome.steps_taken, outcome.report.peak_force


def cmd_compare(scenarios: list[Scenario], out: Path, jobs: int = 1):
    if len(scenarios) < 2:
        raise ScenarioError("compare needs at least two scenarios")
    rows, failed = [None] * len(scenarios), []
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            futures = [pool.submit(_compare_row, s) for s in scenarios]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except Exception as exc:  # reported below, after every run finished
                    results.append(exc)
    else:
        results = []
        for s in scenarios:
            try:
                results.append(_compare_row(s))
            except Exception as exc:
                results.append(exc)
    for i, r in enumerate(results):
        if isinstance(r, Exception):
            failed.append(f"scenario {i} ({scenarios[i].fruit.name}): {r}")
        else:
            rows[i] = r
    if failed:
        raise RunError("; ".join(failed))
    rows.sort(key=lambda r: -r[1])
    with open(out / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "h", "steps_taken", "peak_force"])
        for name, h, steps, peak in rows:
            w.writerow([name, repr(h), steps, repr(peak)])
    return rows


def cmd_ripeness(scenario: Scenario, out: Path):
    if scenario.days is None or len(scenario.days) < 2:
        raise ScenarioError("days: ripeness tracking needs at least two days")
    reports = []
    for day in scenario.days:
        outcome = run_scenario(scenario, fruit=ripen(scenario.fruit, day))
        if outcome.report is None:
            raise RunError(f"day {day}: grasp ended with {outcome.terminated_by.value}, no report")
        reports.append((day, outcome.report))
    traj = track_ripeness(reports)
    with open(out / "ripeness.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "h", "peak_force"])
        for p in traj.points:
            w.writerow([repr(p.day), repr(p.h), repr(p.peak_force)])
    io.write_json(out / "trends.json", {**_meta(scenario), "slope_trend": traj.slope_trend,
                                        "peak_trend": traj.peak_trend, "days": list(scenario.days)})
    return traj


def cmd_slip(scenario: Scenario, out: Path):
    if scenario.slip_injection is None:
        raise ScenarioError("slip_injection: required for the slip command")
    outcome = run_scenario(scenario, with_slip=True)
    _write_trace(out / "trace.csv", outcome, scenario)
    inj = scenario.slip_injection
    io.write_json(out / "slip_events.json", {
        **_meta(scenario),
        "injection": {"t_slip": inj.t_slip, "drift": inj.drift},
        "slip_events": io.outcome_to_dict(outcome)["slip_events"],
        "terminated_by": outcome.terminated_by.value,
    })
    return outcome


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tactile-hardness", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("grasp", "run one grasp, write trace.csv and outcome.json"),
                        ("compare", "grasp several fruits, write compare.csv sorted by hardness"),
                        ("ripeness", "grasp the ripened fruit on each scheduled day"),
                        ("slip", "grasp with injected slip, write slip_events.json")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, action="append" if name == "compare" else "store")
        sp.add_argument("--out", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=None)
        if name == "compare":
            sp.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = args.scenario if isinstance(args.scenario, list) else [args.scenario]
        scenarios = [parse_scenario(p) for p in paths]
        if args.seed is not None:
            scenarios = [s.with_seed(args.seed) for s in scenarios]
        if args.command == "compare":
            cmd_compare(scenarios, _outdir(args.out), args.jobs)
        else:
            {"grasp": cmd_grasp, "ripeness": cmd_ripeness, "slip": cmd_slip}[args.command](
                scenarios[0], _outdir(args.out))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RunError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _outdir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


if __name__ == "__main__":
    sys.exit(main())
