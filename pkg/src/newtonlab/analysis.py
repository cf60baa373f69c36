"""Convergence-area radii, complexity bounds and trace auditing.

Formulas (m: strong convexity, M: Hessian Lipschitz, L: Hessian norm bound)::

    Newton area radius          2m / (3M)
    regularized area radius     2m / (3(M + 2L))
    reduced convexity m0        m (M/3 + 2L) / (M + 2L)
    DNM steps to enter area     9 L^2 M^2 (f(x0) - f*) / m^5
    DRNM steps to enter area    13.5 L^2 (M + 2L)^3 (1 + r0) (f(x0) - f*) / (m0 m)^3
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .directions import newton_step
from .errors import (
    InvalidConstantsError,
    MissingConstantsError,
    SingularTransformError,
    UnsupportedProblemError,
    VariantMismatchError,
)
from .problems import ProblemInstance, affine_transform, as_point, evaluate, get_problem
from .solvers import SolveResult, SolverConfig, Status, newton_root_1d, solve

# Distances below this are roundoff; no rate ratios are formed from them.
RATIO_FLOOR = 1e-13
AUDIT_TOL = 1e-12
DISTANCE_AUDIT_TOL = 1e-10

# Starting points where the classical iterations cycle instead of converging.
BASIN_BOUNDARIES = {
    "example1-root": (-2.0 / 3.0, 2.0 / 3.0),
    "example2-sqrt": (-1.0, 1.0),
}


def newton_area_radius(m: float, M: float) -> float | None:
    """Radius 2m/(3M) of the ball where classical Newton converges quadratically; None if M = 0."""
    if M == 0:
        return None
    return 2.0 * m / (3.0 * M)


def regularized_area_radius(m: float, M: float, L: float) -> float:
    return 2.0 * m / (3.0 * (M + 2.0 * L))


def reduced_convexity(m: float, M: float, L: float) -> float:
    """Curvature lower bound m0 valid throughout the regularized area."""
    return m * (M / 3.0 + 2.0 * L) / (M + 2.0 * L)


def dnm_step_bound(m: float, M: float, L: float, f_gap: float) -> float:
    return 9.0 * L ** 2 * M ** 2 * f_gap / m ** 5


def drnm_step_bound(m: float, M: float, L: float, r0: float, f_gap: float) -> float:
    m0 = reduced_convexity(m, M, L)
    return 13.5 * L ** 2 * (M + 2.0 * L) ** 3 * (1.0 + r0) * f_gap / (m0 * m) ** 3


@dataclass(frozen=True)
class RegionReport:
    newton_radius: float | None
    regularized_radius: float
    m0: float
    dnm_bound: float | None
    drnm_bound: float
    m: float
    M: float
    L: float
    r0: float
    f_gap: float
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "newton_radius": self.newton_radius,
            "regularized_radius": self.regularized_radius,
            "m0": self.m0,
            "dnm_bound": self.dnm_bound,
            "drnm_bound": self.drnm_bound,
            "inputs": {"m": self.m, "M": self.M, "L": self.L, "r0": self.r0, "f_gap": self.f_gap},
            "notes": list(self.notes),
        }


def region_report(m: float, M: float, L: float, f_gap: float, r0: float) -> RegionReport:
    """Radii and step bounds for one set of constants.

    With ``M == 0`` (a quadratic) the Newton radius is undefined and the DNM
    bound degenerates to 0; both are reported as None with a note.
    """
    m, M, L, f_gap, r0 = (float(v) for v in (m, M, L, f_gap, r0))
    if not (m > 0 and M >= 0 and L >= m and f_gap >= 0 and r0 >= 0):
        raise InvalidConstantsError(
            f"need m > 0, M >= 0, L >= m, f_gap >= 0, r0 >= 0; got m={m}, M={M}, L={L}, f_gap={f_gap}, r0={r0}"
        )
    notes = []
    dnm = dnm_step_bound(m, M, L, f_gap)
    if M == 0:
        notes.append("M = 0: Newton area radius undefined (unbounded area)")
        notes.append("Newton exact on quadratics: DNM bound evaluates to 0 and is not reported")
        dnm = None
    return RegionReport(
        newton_radius=newton_area_radius(m, M),
        regularized_radius=regularized_area_radius(m, M, L),
        m0=reduced_convexity(m, M, L),
        dnm_bound=dnm,
        drnm_bound=drnm_step_bound(m, M, L, r0, f_gap),
        m=m, M=M, L=L, r0=r0, f_gap=f_gap,
        notes=tuple(notes),
    )


def _ray_exit(oracle, center: np.ndarray, u: np.ndarray, level: float, s0: float) -> float:
    """Distance along unit ``u`` from ``center`` where f first exceeds ``level``."""
    phi = lambda s: oracle.value(center + s * u) - level
    if phi(0.0) >= 0.0:
        return 0.0
    hi = max(s0, 1e-8)
    for _ in range(200):
        if phi(hi) > 0.0:
            break
        hi *= 2.0
    else:
        return math.inf
    return brentq(phi, 0.0, hi, xtol=1e-14, rtol=1e-14)


def sublevel_radius(oracle, minimizer, x0, min_value: float | None = None, m: float | None = None,
                    angles: int = 720) -> float:
    """Radius of the smallest ball around the minimizer containing {f <= f(x0)}.

    Exact ray search in 1D and 2D (the sublevel set is convex and contains
    the minimizer). In higher dimensions returns the strong-convexity bound
    ``sqrt(2 (f(x0) - f*) / m)``.
    """
    xs = as_point(minimizer, oracle.dimension)
    x0 = as_point(x0, oracle.dimension)
    level = float(oracle.value(x0))
    f_star = float(oracle.value(xs)) if min_value is None else float(min_value)
    s0 = float(np.linalg.norm(x0 - xs))
    n = oracle.dimension
    if n == 1:
        return max(_ray_exit(oracle, xs, np.array([1.0]), level, s0),
                   _ray_exit(oracle, xs, np.array([-1.0]), level, s0))
    if n == 2:
        def radius(theta):
            return _ray_exit(oracle, xs, np.array([math.cos(theta), math.sin(theta)]), level, s0)

        thetas = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
        radii = np.array([radius(t) for t in thetas])
        k = int(np.argmax(radii))
        h = 2 * math.pi / angles
        res = minimize_scalar(lambda t: -radius(t), bounds=(thetas[k] - h, thetas[k] + h), method="bounded",
                              options={"xatol": 1e-10})
        return float(max(radii[k], -res.fun))
    if m is None:
        raise MissingConstantsError("the sublevel radius bound in dimension > 2 needs m")
    return math.sqrt(2.0 * max(level - f_star, 0.0) / m)


def region_report_for(problem: ProblemInstance | str, start=None, f_gap: float | None = None) -> RegionReport:
    """Region report from a problem's declared constants and a start point."""
    if isinstance(problem, str):
        problem = get_problem(problem)
    c = problem.constants
    if c is None or c.minimizer is None:
        raise MissingConstantsError(f"{problem.name} does not declare m, M, L and a minimizer")
    oracle = problem.oracle
    x0 = as_point(problem.start if start is None else start, oracle.dimension)
    f_star = c.min_value if c.min_value is not None else float(oracle.value(c.minimizer))
    gap = float(oracle.value(x0)) - f_star if f_gap is None else float(f_gap)
    r0 = c.r0 if c.r0 is not None else sublevel_radius(oracle, c.minimizer, x0, f_star, c.m)
    return region_report(c.m, c.M, c.L, gap, r0)


# -- rates -------------------------------------------------------------------


@dataclass(frozen=True)
class RateClassification:
    ratios: list[tuple[float, float, float]]
    steps: list[int]
    verdict: str


def _points(trace) -> np.ndarray:
    if isinstance(trace, SolveResult):
        trace = trace.trace
    pts = [getattr(r, "x", r) for r in trace]
    return np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p in pts])


def _stable(values) -> bool:
    # Some constant c has every value within 20% of c iff max <= 1.5 min.
    lo, hi = min(values), max(values)
    return lo > 0 and hi <= 1.5 * lo


def classify_rate(trace, x_star) -> RateClassification:
    """Estimate the convergence order of an iterate sequence towards ``x_star``.

    ``trace`` may be a SolveResult, a list of IterationRecord, or a sequence
    of points. A step s contributes ratios Δ_{s+1}/Δ_s^p (p = 1, 2, 3) when
    Δ_s > 1e-13 and Δ_{s+1} is above the rounding level of x_s. The verdict
    comes from the latest window of three consecutive steps whose ratios of
    some order stay within 20% of a constant, checked cubic first; linear
    also needs ratios below 1.
    """
    pts = _points(trace)
    xs = np.atleast_1d(np.asarray(x_star, dtype=float))
    deltas = np.linalg.norm(pts - xs, axis=1) if len(pts) else np.array([])
    eps = np.finfo(float).eps
    ratios, steps = [], []
    for s in range(len(deltas) - 1):
        d0, d1 = float(deltas[s]), float(deltas[s + 1])
        if d0 <= RATIO_FLOOR:
            continue
        if d1 <= 16 * eps * max(float(np.linalg.norm(pts[s])), float(np.linalg.norm(xs))):
            continue
        ratios.append((d1 / d0, d1 / d0 ** 2, d1 / d0 ** 3))
        steps.append(s)
    verdict = "inconclusive"
    if len(deltas) and (deltas[0] <= RATIO_FLOOR or (len(deltas) > 1 and deltas[1] <= RATIO_FLOOR)):
        verdict = "exact"
    else:
        # The latest stable window of three steps decides; higher orders win ties.
        for i in range(len(ratios) - 3, -1, -1):
            window = ratios[i:i + 3]
            if _stable([r[2] for r in window]):
                verdict = "cubic"
            elif _stable([r[1] for r in window]):
                verdict = "quadratic"
            elif _stable([r[0] for r in window]) and max(r[0] for r in window) < 1:
                verdict = "linear"
            else:
                continue
            break
    return RateClassification(ratios, steps, verdict)


def steps_to_enter(trace, x_star, radius: float) -> int | None:
    """Index of the first iterate within ``radius`` of ``x_star``."""
    pts = _points(trace)
    d = np.linalg.norm(pts - np.atleast_1d(np.asarray(x_star, dtype=float)), axis=1)
    hits = np.nonzero(d <= radius)[0]
    return int(hits[0]) if hits.size else None


def regularized_area_bound(m: float, M: float, L: float, delta: float) -> float:
    """Upper bound on the next distance for one unit regularized step from distance ``delta``."""
    c = M + 2.0 * L
    return c * delta ** 2 / (2.0 * (m - c * delta))


# -- audits ------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    index: int
    check: str
    observed: float
    required: float


@dataclass
class AuditReport:
    variant: str
    checked_steps: int
    violations: list[Violation] = field(default_factory=list)
    distance_checks: str = "not-applicable"

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "checked_steps": self.checked_steps,
            "distance_checks": self.distance_checks,
            "passed": self.passed,
            "violations": [asdict(v) for v in self.violations],
        }


_VARIANT_KIND = {"dnm": "newton", "drnm": "regularized"}


def audit_decrease(trace: SolveResult, variant: str, m: float | None, L: float, x_star=None,
                   M: float | None = None) -> AuditReport:
    """Check every step of a trace against the per-step decrease bounds.

    dnm:  Δf >= (m / 4L) λ^2, and with ``x_star`` also
          Δf >= (m^3 / 4L^2) |x - x*|^2 (outside the Newton area when M > 0).
    drnm: Δf >= t λ_r^2 / 2.

    Tolerances are 1e-12 absolute for the decrement bounds and 1e-10 for the
    distance bound.
    """
    if variant not in _VARIANT_KIND:
        raise VariantMismatchError(f"unknown audit variant {variant!r}")
    if trace.decrement_kind != _VARIANT_KIND[variant]:
        raise VariantMismatchError(
            f"{variant} audit needs a {_VARIANT_KIND[variant]} decrement, trace has {trace.decrement_kind!r}"
        )
    if variant == "dnm" and m is None:
        raise MissingConstantsError("dnm audit needs m")
    xs = None if x_star is None else np.atleast_1d(np.asarray(x_star, dtype=float))
    radius = newton_area_radius(m, M) if (variant == "dnm" and M) else None
    report = AuditReport(variant, 0)
    if variant == "dnm" and xs is not None:
        report.distance_checks = "applied"
    for r in trace.trace:
        if r.step_length <= 0:
            continue
        report.checked_steps += 1
        if variant == "dnm":
            need = 0.25 * (m / L) * r.decrement ** 2
        else:
            need = 0.5 * r.step_length * r.decrement ** 2
        if not r.f_decrease >= need - AUDIT_TOL:
            report.violations.append(Violation(r.index, "decrement", r.f_decrease, need))
        if variant == "dnm" and xs is not None:
            dist = float(np.linalg.norm(r.x - xs))
            if radius is None or dist > radius:
                need_d = m ** 3 / (4.0 * L ** 2) * dist ** 2
                if not r.f_decrease >= need_d - DISTANCE_AUDIT_TOL:
                    report.violations.append(Violation(r.index, "distance", r.f_decrease, need_d))
    return report


# -- basins ------------------------------------------------------------------


@dataclass(frozen=True)
class BasinCell:
    start: float
    outcome: str
    iterations: int


_OUTCOME = {
    Status.CONVERGED: "converged",
    Status.OSCILLATING: "oscillating",
    Status.DIVERGED: "diverged",
    Status.MAX_ITERATIONS: "budget",
    Status.ERROR: "error",
}


def config_for(problem: ProblemInstance, method: str, cfg: SolverConfig | None = None) -> SolverConfig:
    """Fill m and L from the problem's constants where the config leaves them unset.

    L is taken from any problem that declares it; m only from problems tagged
    strongly-convex, since a local m does not justify the DNM fallback step.
    """
    cfg = cfg or SolverConfig()
    c = problem.constants
    if c is None or method not in ("dnm", "drnm"):
        return cfg
    changes = {}
    if cfg.L is None:
        changes["L"] = c.L
    if method == "dnm" and cfg.m is None and "strongly-convex" in problem.tags:
        changes["m"] = c.m
    return cfg.replace(**changes) if changes else cfg


def basin_grid(problem_name: str, lo: float, hi: float, count: int, include_boundary: bool = False) -> np.ndarray:
    grid = np.linspace(lo, hi, count)
    bounds = [b for b in BASIN_BOUNDARIES.get(problem_name, ()) if lo <= b <= hi]
    near = lambda t: any(abs(t - b) <= 1e-12 * max(1.0, abs(b)) for b in bounds)
    grid = np.array([t for t in grid if not near(t)])
    if include_boundary:
        grid = np.sort(np.concatenate([grid, bounds]))
    return grid


def basin_map_1d(problem: ProblemInstance | str, method: str, lo: float, hi: float, count: int,
                 cfg: SolverConfig | None = None, include_boundary: bool = False,
                 workers: int | None = None) -> list[BasinCell]:
    """Run ``method`` from every point of a 1D grid and record the outcome.

    Grid points on the known cycling boundaries are dropped unless
    ``include_boundary`` is set, in which case the boundaries are added.
    For the root problem, ``newton`` runs the root iteration towards the
    declared root.
    """
    if isinstance(problem, str):
        problem = get_problem(problem)
    if problem.oracle.dimension != 1:
        raise UnsupportedProblemError(f"{problem.name} is not one-dimensional")
    if count < 2 or not lo < hi:
        raise ValueError("need count >= 2 and lo < hi")
    if problem.is_root_problem and method not in ("newton", "newton-root"):
        raise UnsupportedProblemError(f"{problem.name} only supports the root iteration")
    if not problem.is_root_problem and method == "newton-root":
        raise UnsupportedProblemError("newton-root needs a root-finding problem")
    cfg = config_for(problem, method, cfg)
    grid = basin_grid(problem.name, lo, hi, count, include_boundary)

    def cell(t0: float) -> BasinCell:
        if problem.is_root_problem:
            res = newton_root_1d(problem.oracle, t0, cfg, target=problem.oracle.root)
        else:
            res = solve(method, problem.oracle, [t0], cfg)
        return BasinCell(float(t0), _OUTCOME[res.status], res.iterations)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(cell, grid))
    return [cell(t) for t in grid]


# -- affine invariance -------------------------------------------------------


def affine_invariance_check(oracle, A, x0, steps: int) -> float:
    """Max over s <= steps of |y_s - A^{-1} x_s| for Newton on f and on f(A .)."""
    A = np.array(A, dtype=float)
    if A.shape != (oracle.dimension, oracle.dimension) or not np.all(np.isfinite(A)):
        raise SingularTransformError("transform must be a finite square matrix of the problem dimension")
    if np.linalg.cond(A) > 1e6:
        raise SingularTransformError("transform is singular or too ill-conditioned (cond > 1e6)")
    phi = affine_transform(oracle, A)
    x = as_point(x0, oracle.dimension).copy()
    y = np.linalg.solve(A, x)
    worst = 0.0
    for _ in range(steps):
        _, gx, Hx = evaluate(oracle, x)
        _, gy, Hy = evaluate(phi, y)
        x = x + newton_step(gx, Hx)
        y = y + newton_step(gy, Hy)
        worst = max(worst, float(np.linalg.norm(y - np.linalg.solve(A, x))))
    return worst
