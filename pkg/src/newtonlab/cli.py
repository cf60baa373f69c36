"""Command-line front end.

Subcommands: run, basin, report, audit, problems. See ``newtonlab <cmd> -h``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from typing import Sequence

import numpy as np

from . import analysis
from .errors import (
    DimensionMismatchError,
    InvalidConstantsError,
    MalformedTraceError,
    MissingConstantsError,
    NewtonLabError,
    UnknownProblemError,
    UnsupportedProblemError,
    VariantMismatchError,
)
from .problems import ProblemInstance, builtin_problems, get_problem
from .solvers import SOLVERS, SolverConfig, Status, solve
from .traceio import read_trace, write_trace

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_NOT_CONVERGED = 2
EXIT_BUDGET = 3
EXIT_ERROR = 4
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_MISSING_CONSTANTS = 66

SOLVER_NAMES = [*SOLVERS, "newton-root"]

_STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.OSCILLATING: EXIT_NOT_CONVERGED,
    Status.DIVERGED: EXIT_NOT_CONVERGED,
    Status.MAX_ITERATIONS: EXIT_BUDGET,
    Status.ERROR: EXIT_ERROR,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}; use comma-separated numbers") from None


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(SolverConfig)}


def parse_overrides(pairs: Sequence[str], cfg: SolverConfig | None = None) -> SolverConfig:
    """Apply ``key=value`` overrides; dashes in keys may stand for underscores."""
    changes = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONFIG_TYPES:
            raise UsageError(f"bad --set {pair!r}; keys: {', '.join(_CONFIG_TYPES)}")
        try:
            changes[key] = int(value) if key in ("max_iterations", "oscillation_window") else float(value)
        except ValueError:
            raise UsageError(f"bad value in --set {pair!r}") from None
    try:
        return (cfg or SolverConfig()).replace(**changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_pairing(problem: ProblemInstance, solver: str) -> None:
    if solver == "newton-root" and not problem.is_root_problem:
        raise UsageError("newton-root only runs on example1-root")
    if problem.is_root_problem and solver != "newton-root":
        raise UsageError(f"{problem.name} is a root-finding problem; use --solver newton-root")


def cmd_run(args) -> int:
    problem = get_problem(args.problem)
    _check_pairing(problem, args.solver)
    cfg = analysis.config_for(problem, args.solver, parse_overrides(args.set))
    start = _vector(args.start) if args.start is not None else problem.start
    if start.shape != (problem.oracle.dimension,):
        raise UsageError(f"{problem.name} needs a start point with {problem.oracle.dimension} components")
    kwargs = {"target": problem.oracle.root} if args.solver == "newton-root" else {}
    try:
        result = solve(args.solver, problem.oracle, start, cfg, **kwargs)
    except (MissingConstantsError, InvalidConstantsError) as exc:
        raise UsageError(str(exc)) from None
    if args.output and args.output != "-":
        write_trace(result, problem.name, args.output)
    else:
        write_trace(result, problem.name, sys.stdout)
    print(f"{result.status.value}: {result.status_detail} ({result.iterations} steps)", file=sys.stderr)
    return _STATUS_EXIT[result.status]


def cmd_basin(args) -> int:
    problem = get_problem(args.problem)
    cfg = parse_overrides(args.set)
    try:
        cells = analysis.basin_map_1d(problem, args.solver, args.lo, args.hi, args.n, cfg,
                                      include_boundary=args.include_boundary, workers=args.workers)
    except (UnsupportedProblemError, MissingConstantsError, InvalidConstantsError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    out = open(args.output, "w", newline="") if args.output and args.output != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["start", "outcome", "iterations"])
        for c in cells:
            w.writerow([repr(c.start), c.outcome, c.iterations])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_report(args) -> int:
    problem = get_problem(args.problem)
    start = _vector(args.start) if args.start is not None else None
    try:
        report = analysis.region_report_for(problem, start, args.f_gap)
    except (DimensionMismatchError, InvalidConstantsError) as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps({"problem": problem.name, **report.to_dict()}, indent=2))
    return EXIT_OK


def cmd_audit(args) -> int:
    trace = read_trace(args.trace)
    m, L, M, x_star = args.m, args.L, args.M, args.x_star
    x_star = _vector(x_star) if x_star is not None else None
    # Fill unspecified constants from the run's own config.
    m = trace.result.config.m if m is None else m
    L = trace.result.config.L if L is None else L
    if L is None or (args.variant == "dnm" and m is None):
        raise UsageError("audit needs --L (and --m for dnm) unless the trace config records them")
    try:
        report = analysis.audit_decrease(trace.result, args.variant, m, L, x_star, M)
    except (VariantMismatchError, MissingConstantsError) as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps({"trace": str(args.trace), **report.to_dict()}, indent=2))
    return EXIT_OK if report.passed else EXIT_VIOLATIONS


def cmd_problems(args) -> int:
    for p in builtin_problems():
        c = p.constants
        consts = f"m={c.m:g} M={c.M:g} L={c.L:g}" if c else "root-finding"
        print(f"{p.name:30s} dim={p.oracle.dimension:<3d} {consts:32s} tags={','.join(p.tags)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="newtonlab", description="Newton-type methods with convergence-area analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a solver and write a JSON-lines trace")
    run.add_argument("--problem", required=True)
    run.add_argument("--solver", required=True, choices=SOLVER_NAMES)
    run.add_argument("--start", help="comma-separated start point (default: the problem's)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="SolverConfig override, repeatable")
    run.add_argument("--output", "-o", help="trace path (default: stdout)")
    run.set_defaults(func=cmd_run)

    basin = sub.add_parser("basin", help="map outcomes over a 1D grid of starts, as CSV")
    basin.add_argument("problem")
    basin.add_argument("solver", choices=SOLVER_NAMES)
    basin.add_argument("lo", type=float)
    basin.add_argument("hi", type=float)
    basin.add_argument("n", type=int)
    basin.add_argument("--output", "-o")
    basin.add_argument("--include-boundary", action="store_true",
                       help="add the known cycling starts to the grid")
    basin.add_argument("--workers", type=int, default=None)
    basin.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    basin.set_defaults(func=cmd_basin)

    report = sub.add_parser("report", help="convergence-area radii and step bounds as JSON")
    report.add_argument("problem")
    report.add_argument("--f-gap", type=float, default=None, help="override f(x0) - f*")
    report.add_argument("--start", help="start point for f(x0) and r0 (default: the problem's)")
    report.set_defaults(func=cmd_report)

    audit = sub.add_parser("audit", help="check a trace against the per-step decrease bounds")
    audit.add_argument("trace")
    audit.add_argument("--variant", required=True, choices=["dnm", "drnm"])
    audit.add_argument("--m", type=float)
    audit.add_argument("--L", type=float)
    audit.add_argument("--M", type=float)
    audit.add_argument("--x-star", help="comma-separated minimizer; enables the distance check")
    audit.set_defaults(func=cmd_audit)

    problems = sub.add_parser("problems", help="list the problem registry")
    problems.set_defaults(func=cmd_problems)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"newtonlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnknownProblemError, MalformedTraceError) as exc:
        print(f"newtonlab: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MissingConstantsError as exc:
        print(f"newtonlab: error: {exc}", file=sys.stderr)
        return EXIT_MISSING_CONSTANTS
    except NewtonLabError as exc:
        print(f"newtonlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
