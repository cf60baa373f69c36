"""Newton and regularized Newton directions, decrements and conditioning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvexityViolationError,
    HessianNotPositiveDefiniteError,
    InternalConsistencyError,
    NotPositiveDefiniteError,
    ZeroGradientOrDirectionError,
)
from .linalg import extreme_eigenvalues, factor_spd, solve_spd
from .problems import evaluate

# Squared decrements in [-DECREMENT_CLAMP, 0) are roundoff and become 0.
DECREMENT_CLAMP = 1e-12


@dataclass(frozen=True)
class DirectionReport:
    direction: np.ndarray
    decrement: float
    kind: str
    quality: float
    gradient_norm: float


@dataclass(frozen=True)
class ConditioningReport:
    """Extreme Hessian eigenvalues and the two condition numbers at a point.

    Condition numbers are ratios min/max (at most 1). When the largest
    eigenvalue is 0 they are undefined and reported as None.
    """

    m_x: float
    M_x: float
    grad_norm: float
    cond_hessian: float | None
    cond_regularized: float | None
    gap: float | None

    @property
    def difference(self) -> float | None:
        if self.cond_hessian is None or self.cond_regularized is None:
            return None
        return self.cond_regularized - self.cond_hessian


def decrement_from(g: np.ndarray, d: np.ndarray) -> float:
    lam2 = -float(np.dot(g, d))
    if lam2 < 0.0:
        if lam2 < -DECREMENT_CLAMP:
            raise InternalConsistencyError(f"negative squared decrement {lam2:.3e}")
        lam2 = 0.0
    return float(np.sqrt(lam2))


def quality_of(g: np.ndarray, d: np.ndarray) -> float:
    gn = float(np.linalg.norm(g))
    dn = float(np.linalg.norm(d))
    if gn == 0.0 or dn == 0.0:
        raise ZeroGradientOrDirectionError("direction quality needs nonzero gradient and direction")
    return -float(np.dot(g, d)) / (gn * dn)


def _report(g: np.ndarray, d: np.ndarray, kind: str) -> DirectionReport:
    gn = float(np.linalg.norm(g))
    # At a stationary point the zero direction is optimal; quality is reported as 1.
    q = quality_of(g, d) if gn > 0.0 and np.any(d) else 1.0
    return DirectionReport(d, decrement_from(g, d), kind, q, gn)


def newton_step(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Solve ``H d = -g``; raises HessianNotPositiveDefiniteError."""
    try:
        F = factor_spd(H)
    except NotPositiveDefiniteError as exc:
        raise HessianNotPositiveDefiniteError(str(exc)) from exc
    return solve_spd(F, -g)


def regularized_step(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Solve ``(H + |g| I) r = -g``; zero at a stationary point."""
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        return np.zeros_like(g)
    try:
        F = factor_spd(H + gn * np.eye(g.size))
    except NotPositiveDefiniteError as exc:
        raise ConvexityViolationError(
            f"H + |g| I is not positive definite ({exc}); the objective is not convex here"
        ) from exc
    return solve_spd(F, -g)


def newton_direction(oracle, x) -> DirectionReport:
    _, g, H = evaluate(oracle, x)
    return _report(g, newton_step(g, H), "newton")


def regularized_direction(oracle, x) -> DirectionReport:
    _, g, H = evaluate(oracle, x)
    return _report(g, regularized_step(g, H), "regularized")


def steepest_direction(oracle, x) -> DirectionReport:
    _, g, _ = evaluate(oracle, x)
    gn = float(np.linalg.norm(g))
    d = -g / gn if gn > 0 else np.zeros_like(g)
    return _report(g, d, "steepest")


def direction_quality(oracle, x, d) -> float:
    """Cosine between ``d`` and the steepest descent direction at ``x``."""
    _, g, _ = evaluate(oracle, x)
    return quality_of(g, np.asarray(d, dtype=float))


def conditioning(oracle, x) -> ConditioningReport:
    _, g, H = evaluate(oracle, x)
    m_x, M_x = extreme_eigenvalues(H)
    gn = float(np.linalg.norm(g))
    if M_x <= 0.0:
        return ConditioningReport(m_x, M_x, gn, None, None, None)
    cond_h = m_x / M_x
    cond_r = (m_x + gn) / (M_x + gn)
    gap = gn * (1.0 - cond_h) / (M_x + gn)
    return ConditioningReport(m_x, M_x, gn, cond_h, cond_r, gap)
