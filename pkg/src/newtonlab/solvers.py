"""Newton-type iterations, each returning a full trace.

Every minimization solver shares one loop: evaluate, compute the direction and
its decrement, stop when the decrement is at most ``epsilon**1.5``, otherwise
pick a step length and move. Variants differ only in the direction (Newton or
regularized) and in the step rule.

Trace layout: one record per visited point. A record holds the point, its
value, gradient norm and decrement, plus the step taken from it. The last
record is the terminal point and has ``step_length == 0``.
"""

from __future__ import annotations

import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .directions import decrement_from, newton_step, regularized_step
from .errors import (
    ConvexityViolationError,
    EpsilonTooLargeError,
    HessianNotPositiveDefiniteError,
    InternalConsistencyError,
    InvalidConstantsError,
    MissingConstantsError,
    NonDescentError,
    OracleEvaluationError,
    StepUnderflowError,
)
from .problems import RootFunction, as_point, evaluate

DIVERGENCE_NORM = 1e12
OSCILLATION_TOL = 1e-9
# Slack, in units of eps*max(1, |f|), on every sufficient-decrease test.
F_ROUNDOFF = 4.0 * np.finfo(float).eps


class Status(str, Enum):
    CONVERGED = "converged"
    OSCILLATING = "oscillating"
    DIVERGED = "diverged"
    MAX_ITERATIONS = "max-iterations"
    ERROR = "error"


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-6
    max_iterations: int = 1000
    m: float | None = None
    L: float | None = None
    armijo_alpha: float = 0.5
    backtrack_rho: float = 0.5
    min_step: float = 1e-16
    oscillation_window: int = 8

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not 0 < self.armijo_alpha <= 0.5:
            raise ValueError("armijo_alpha must lie in (0, 0.5]")
        if not 0 < self.backtrack_rho < 1:
            raise ValueError("backtrack_rho must lie in (0, 1)")
        if not self.min_step > 0:
            raise ValueError("min_step must be positive")
        if int(self.oscillation_window) != self.oscillation_window or self.oscillation_window < 1:
            raise ValueError("oscillation_window must be a positive integer")
        for name in ("m", "L"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def tolerance(self) -> float:
        """Stopping threshold on the decrement."""
        return self.epsilon ** 1.5

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class IterationRecord:
    index: int
    x: np.ndarray
    f: float
    grad_norm: float
    decrement: float
    direction_norm: float
    step_length: float
    full_step_accepted: bool
    f_decrease: float


@dataclass
class SolveResult:
    status: Status
    final_x: np.ndarray
    trace: list[IterationRecord]
    status_detail: str = ""
    method: str = ""
    decrement_kind: str = ""
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def iterations(self) -> int:
        return sum(1 for r in self.trace if r.step_length > 0)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def points(self) -> np.ndarray:
        return np.array([r.x for r in self.trace])


def _sufficient(f_new: float, f: float, decrease: float) -> bool:
    """``f_new <= f + decrease`` up to roundoff in f; ``decrease`` is <= 0."""
    return f_new <= f + decrease + F_ROUNDOFF * max(1.0, abs(f))


def armijo_backtrack(line: Callable[[float], float], slope0: float, cfg: SolverConfig = SolverConfig(),
                     f0: float | None = None) -> float:
    """Largest t in {1, rho, rho^2, ...} meeting the Armijo condition.

    Parameters
    ----------
    line : callable
        ``t -> f(x + t d)``.
    slope0 : float
        Directional derivative ``(grad f(x), d)``; must be negative.
    cfg : SolverConfig
        Supplies ``armijo_alpha``, ``backtrack_rho`` and ``min_step``.
    f0 : float, optional
        ``line(0)`` if already known.

    Raises
    ------
    NonDescentError
        If ``slope0 >= 0``.
    StepUnderflowError
        If t drops below ``cfg.min_step``.
    """
    if not slope0 < 0:
        raise NonDescentError(f"not a descent direction (slope {slope0})")
    if f0 is None:
        f0 = float(line(0.0))
    t = 1.0
    while True:
        if _sufficient(float(line(t)), f0, cfg.armijo_alpha * t * slope0):
            return t
        t *= cfg.backtrack_rho
        if t < cfg.min_step:
            raise StepUnderflowError(f"backtracking step fell below {cfg.min_step}")


# Step rules: (oracle, x, f, g, d) -> (t, full_step_accepted, x_new, f_new)

def _full_step(oracle, x, f, g, d, cfg):
    x_new = x + d
    return 1.0, True, x_new, float(oracle.value(x_new))


def _fixed_fallback(fallback: Callable[[np.ndarray], float]):
    def rule(oracle, x, f, g, d, cfg):
        x_new = x + d
        f_new = float(oracle.value(x_new))
        if _sufficient(f_new, f, 0.5 * float(np.dot(g, d))):
            return 1.0, True, x_new, f_new
        t = fallback(g)
        x_new = x + t * d
        return t, False, x_new, float(oracle.value(x_new))
    return rule


def _backtracking(oracle, x, f, g, d, cfg):
    t = armijo_backtrack(lambda s: oracle.value(x + s * d), float(np.dot(g, d)), cfg, f0=f)
    x_new = x + t * d
    return t, t == 1.0, x_new, float(oracle.value(x_new))


def _terminal(index, x, f=math.nan, grad_norm=math.nan, decrement=math.nan):
    return IterationRecord(index, np.array(x, dtype=float), f, grad_norm, decrement, 0.0, 0.0, False, 0.0)


def _minimize(oracle, x0, cfg: SolverConfig, method: str, kind: str, rule, watch_cycles: bool = False):
    x = as_point(x0, oracle.dimension).copy()
    solve_direction = newton_step if kind == "newton" else regularized_step
    trace: list[IterationRecord] = []
    history: deque[np.ndarray] = deque(maxlen=cfg.oscillation_window + 1)

    def done(status, detail):
        return SolveResult(status, x.copy(), trace, detail, method, kind, cfg)

    for k in range(cfg.max_iterations + 1):
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_NORM:
            trace.append(_terminal(k, x))
            return done(Status.DIVERGED, f"|x| exceeded {DIVERGENCE_NORM:g}")
        try:
            f, g, H = evaluate(oracle, x)
        except OracleEvaluationError as exc:
            trace.append(_terminal(k, x))
            return done(Status.DIVERGED, str(exc))
        gn = float(np.linalg.norm(g))
        try:
            d = solve_direction(g, H)
            lam = decrement_from(g, d)
        except (HessianNotPositiveDefiniteError, ConvexityViolationError, InternalConsistencyError) as exc:
            trace.append(_terminal(k, x, f, gn))
            return done(Status.ERROR, f"{type(exc).__name__}: {exc}")

        if lam <= cfg.tolerance:
            trace.append(_terminal(k, x, f, gn, lam))
            return done(Status.CONVERGED, f"decrement {lam:.3e} <= epsilon^1.5")
        # Period >= 2 revisits only; a period-1 repeat would be a stall, not a cycle.
        if watch_cycles and any(np.max(np.abs(x - p)) <= OSCILLATION_TOL for p in list(history)[:-1]):
            trace.append(_terminal(k, x, f, gn, lam))
            return done(Status.OSCILLATING, "iterate revisited an earlier iterate")
        if k == cfg.max_iterations:
            trace.append(_terminal(k, x, f, gn, lam))
            return done(Status.MAX_ITERATIONS, f"no convergence in {cfg.max_iterations} steps")
        try:
            t, accepted, x_new, f_new = rule(oracle, x, f, g, d, cfg)
        except StepUnderflowError as exc:
            trace.append(_terminal(k, x, f, gn, lam))
            return done(Status.ERROR, f"StepUnderflowError: {exc}")
        trace.append(IterationRecord(k, x.copy(), f, gn, lam, float(np.linalg.norm(d)), float(t),
                                     bool(accepted), f - f_new))
        history.append(x.copy())
        x = np.asarray(x_new, dtype=float)
    raise AssertionError("unreachable")


def classical_newton(oracle, x0, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Pure Newton iteration ``x <- x - H^{-1} g``.

    Stops on convergence, on revisiting an earlier iterate (oscillation), on
    ``|x| > 1e12`` or a non-finite value (divergence), on a Hessian that is not
    positive definite (error) or on the iteration budget.
    """
    return _minimize(oracle, x0, cfg, "newton", "newton", _full_step, watch_cycles=True)


def _require_ml(cfg: SolverConfig) -> tuple[float, float]:
    if cfg.m is None or cfg.L is None:
        raise MissingConstantsError("dnm needs both m and L in the config")
    if not cfg.m <= cfg.L:
        raise InvalidConstantsError(f"need m <= L, got m={cfg.m}, L={cfg.L}")
    if not cfg.epsilon < cfg.m ** 2 / cfg.L:
        raise EpsilonTooLargeError(f"epsilon={cfg.epsilon} must be below m^2/L={cfg.m ** 2 / cfg.L}")
    return cfg.m, cfg.L


def dnm_fixed(oracle, x0, cfg: SolverConfig) -> SolveResult:
    """Damped Newton: full step when it halves the linear model decrease, else t = m/(2L)."""
    m, L = _require_ml(cfg)
    rule = _fixed_fallback(lambda g: m / (2.0 * L))
    return _minimize(oracle, x0, cfg, "dnm", "newton", rule)


def dnm_backtracking(oracle, x0, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Damped Newton with Armijo backtracking; needs no constants."""
    return _minimize(oracle, x0, cfg, "dnm-bt", "newton", _backtracking)


def rnm_pure(oracle, x0, cfg: SolverConfig = SolverConfig()) -> SolveResult:
    """Regularized Newton with unit steps: ``x <- x - (H + |g| I)^{-1} g``."""
    return _minimize(oracle, x0, cfg, "rnm", "regularized", _full_step)


def drnm(oracle, x0, cfg: SolverConfig) -> SolveResult:
    """Damped regularized Newton.

    The full step along the regularized direction r is taken when
    ``f(x + r) <= f(x) + 0.5 (g, r)``; otherwise the step is ``|g| / (2L)``.
    """
    if cfg.L is None:
        raise MissingConstantsError("drnm needs L in the config")
    L = cfg.L
    rule = _fixed_fallback(lambda g: float(np.linalg.norm(g)) / (2.0 * L))
    return _minimize(oracle, x0, cfg, "drnm", "regularized", rule)


def newton_root_1d(g: RootFunction, t0: float, cfg: SolverConfig = SolverConfig(),
                   target: float | None = None, target_tol: float = 1e-3) -> SolveResult:
    """Newton iteration ``t <- t - g(t)/g'(t)`` for a scalar root.

    Records store the residual g(t) in ``f``, |g'(t)| in ``grad_norm`` and
    |g(t)| in ``decrement``. Converges when |g(t)| <= epsilon.

    When ``target`` is given, reaching a different root (farther than
    ``target_tol`` from it) is reported as ``diverged``: the iteration has
    left the target's basin. The detail string names the root reached.
    """
    t = float(np.atleast_1d(t0)[0])
    trace: list[IterationRecord] = []
    history: deque[float] = deque(maxlen=cfg.oscillation_window + 1)

    def done(status, detail):
        return SolveResult(status, np.array([t]), trace, detail, "newton-root", "residual", cfg)

    for k in range(cfg.max_iterations + 1):
        if not math.isfinite(t) or abs(t) > DIVERGENCE_NORM:
            trace.append(_terminal(k, [t]))
            return done(Status.DIVERGED, f"|t| exceeded {DIVERGENCE_NORM:g}")
        r = float(g.value(t))
        dr = float(g.derivative(t))
        if abs(r) <= cfg.epsilon:
            trace.append(_terminal(k, [t], r, abs(dr), abs(r)))
            if target is not None and abs(t - target) > target_tol:
                return done(Status.DIVERGED, f"reached root {t!r} away from target root {target!r}")
            return done(Status.CONVERGED, f"|g(t)| = {abs(r):.3e} <= epsilon")
        if any(abs(t - p) <= OSCILLATION_TOL for p in list(history)[:-1]):
            trace.append(_terminal(k, [t], r, abs(dr), abs(r)))
            return done(Status.OSCILLATING, "iterate revisited an earlier iterate")
        if k == cfg.max_iterations:
            trace.append(_terminal(k, [t], r, abs(dr), abs(r)))
            return done(Status.MAX_ITERATIONS, f"no convergence in {cfg.max_iterations} steps")
        if dr == 0.0:
            trace.append(_terminal(k, [t], r, 0.0, abs(r)))
            return done(Status.ERROR, f"zero derivative at t={t!r}")
        step = -r / dr
        t_new = t + step
        r_new = float(g.value(t_new)) if math.isfinite(t_new) else math.inf
        trace.append(IterationRecord(k, np.array([t]), r, abs(dr), abs(r), abs(step), 1.0, True,
                                     abs(r) - abs(r_new)))
        history.append(t)
        t = t_new
    raise AssertionError("unreachable")


SOLVERS = {
    "newton": classical_newton,
    "dnm": dnm_fixed,
    "dnm-bt": dnm_backtracking,
    "rnm": rnm_pure,
    "drnm": drnm,
}


def solve(method: str, problem_oracle, x0, cfg: SolverConfig = SolverConfig(), **kwargs) -> SolveResult:
    """Dispatch by method name; ``newton-root`` expects a RootFunction."""
    if method == "newton-root":
        return newton_root_1d(problem_oracle, x0, cfg, **kwargs)
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown solver {method!r}") from None
    return fn(problem_oracle, x0, cfg)
