"""Objective oracles and the built-in test problems.

An oracle is anything with ``dimension``, ``value``, ``gradient`` and
``hessian``; :class:`Objective` is the concrete container used throughout.
The piecewise-quadratic root problem is a :class:`RootFunction` instead, and
only the 1D root iteration accepts it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidConstantsError,
    OracleEvaluationError,
    SingularTransformError,
    UnknownProblemError,
)
from .linalg import symmetric

# max over t of 3|t|(1+t^2)^(-5/2): the Lipschitz constant of t -> (1+t^2)^(-3/2).
# Maximized numerically (attained at t = 0.5); equals 1.5 * 0.8**2.5.
SQRT_HESSIAN_LIPSCHITZ = 0.8586501033599193

DEFAULT_BOX = (-10.0, 10.0)


class ObjectiveOracle(Protocol):
    dimension: int

    def value(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    def hessian(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class AnalyticConstants:
    """Known constants of a problem.

    m is the strong-convexity constant, M the Lipschitz constant of the
    Hessian, L the bound on the Hessian norm. ``r0`` is the radius of the
    smallest ball around the minimizer containing the initial sublevel set;
    it depends on the start point, so built-ins leave it unset.
    """

    m: float
    M: float
    L: float
    minimizer: np.ndarray | None = None
    min_value: float | None = None
    r0: float | None = None

    def __post_init__(self):
        if not (self.m > 0 and self.L >= self.m and self.M >= 0):
            raise InvalidConstantsError(
                f"need 0 < m <= L and M >= 0, got m={self.m}, M={self.M}, L={self.L}"
            )
        if self.minimizer is not None:
            object.__setattr__(self, "minimizer", np.atleast_1d(np.asarray(self.minimizer, dtype=float)))


@dataclass(frozen=True)
class Objective:
    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    constants: AnalyticConstants | None = None


@dataclass(frozen=True)
class RootFunction:
    """Scalar residual g with derivative, for the 1D root iteration."""

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    root: float | None = None
    dimension: int = 1


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    oracle: Objective | RootFunction
    tags: tuple[str, ...] = ()
    start: np.ndarray | None = None
    box: tuple[float, float] = DEFAULT_BOX

    @property
    def is_root_problem(self) -> bool:
        return isinstance(self.oracle, RootFunction)

    @property
    def constants(self) -> AnalyticConstants | None:
        return getattr(self.oracle, "constants", None)


@dataclass(frozen=True)
class DerivativeCheckReport:
    gradient_error: float
    hessian_error: float
    threshold: float
    step: float

    @property
    def passed(self) -> bool:
        return self.gradient_error <= self.threshold and self.hessian_error <= self.threshold


def as_point(x, dimension: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dimension,):
        raise DimensionMismatchError(f"expected a point with {dimension} components, got shape {x.shape}")
    return x


def evaluate(oracle: ObjectiveOracle, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Return ``(f, gradient, hessian)`` at ``x``.

    Raises OracleEvaluationError on any non-finite input or output.
    """
    x = as_point(x, oracle.dimension)
    if not np.all(np.isfinite(x)):
        raise OracleEvaluationError(x, "point")
    f = float(oracle.value(x))
    if not np.isfinite(f):
        raise OracleEvaluationError(x, "value")
    g = np.atleast_1d(np.asarray(oracle.gradient(x), dtype=float))
    if g.shape != (oracle.dimension,) or not np.all(np.isfinite(g)):
        raise OracleEvaluationError(x, "gradient")
    H = np.atleast_2d(np.asarray(oracle.hessian(x), dtype=float))
    if H.shape != (oracle.dimension, oracle.dimension) or not np.all(np.isfinite(H)):
        raise OracleEvaluationError(x, "hessian")
    return f, g, symmetric(H)


def _central_difference(fun, x: np.ndarray, h: float) -> np.ndarray:
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(fun(x + e), dtype=float) - np.asarray(fun(x - e), dtype=float)) / (2 * h))
    return np.array(cols)


def _relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(exact))))
    return float(np.max(np.abs(approx - exact))) / scale


def check_oracle(oracle, x, h: float = 1e-6, threshold: float = 1e-4) -> DerivativeCheckReport:
    """Compare analytic derivatives with central differences at ``x``.

    The difference step is ``h * (1 + max|x|)``. Errors are max-norm errors
    divided by ``max(1, max|exact|)``. For a RootFunction only the derivative
    is checked and ``hessian_error`` is 0.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = as_point(x, oracle.dimension)
    step = h * (1.0 + float(np.max(np.abs(x))))
    if isinstance(oracle, RootFunction):
        t = float(x[0])
        fd = (oracle.value(t + step) - oracle.value(t - step)) / (2 * step)
        err = _relative_error(np.array([fd]), np.array([oracle.derivative(t)]))
        return DerivativeCheckReport(err, 0.0, threshold, step)
    _, g, H = evaluate(oracle, x)
    fd_grad = _central_difference(lambda z: np.array([oracle.value(z)]), x, step)[:, 0]
    fd_hess = _central_difference(oracle.gradient, x, step)
    return DerivativeCheckReport(
        _relative_error(fd_grad, g),
        _relative_error(0.5 * (fd_hess + fd_hess.T), H),
        threshold,
        step,
    )


def affine_transform(oracle: ObjectiveOracle, A) -> Objective:
    """The objective ``y -> f(A y)`` with chain-rule derivatives."""
    A = np.array(A, dtype=float)
    n = oracle.dimension
    if A.shape != (n, n):
        raise DimensionMismatchError(f"transform must be {n}x{n}, got {A.shape}")
    if np.linalg.matrix_rank(A) < n:
        raise SingularTransformError("transform is singular")
    return Objective(
        dimension=n,
        value=lambda y: oracle.value(A @ y),
        gradient=lambda y: A.T @ oracle.gradient(A @ y),
        hessian=lambda y: A.T @ oracle.hessian(A @ y) @ A,
    )


# -- built-in problems -------------------------------------------------------


def _example1_value(t: float) -> float:
    return -(t - 1.0) ** 2 + 1.0 if t >= 0 else (t + 1.0) ** 2 - 1.0


def _example1_derivative(t: float) -> float:
    return -2.0 * (t - 1.0) if t >= 0 else 2.0 * (t + 1.0)


def example1_root() -> ProblemInstance:
    """Piecewise quadratic residual; Newton from |t| = 2/3 cycles between +-2/3.

    The residual also vanishes at t = +-2; the declared root is 0.
    """
    return ProblemInstance(
        name="example1-root",
        oracle=RootFunction(_example1_value, _example1_derivative, root=0.0),
        tags=("1d-example", "root-finding"),
        start=np.array([0.5]),
    )


def example2_sqrt() -> ProblemInstance:
    """f(t) = sqrt(1 + t^2); classical Newton maps t to -t^3."""

    def value(x):
        return float(np.sqrt(1.0 + x[0] * x[0]))

    def gradient(x):
        return np.array([x[0] / np.sqrt(1.0 + x[0] * x[0])])

    def hessian(x):
        return np.array([[(1.0 + x[0] * x[0]) ** -1.5]])

    # m is the curvature at the minimizer only; f'' -> 0 as |t| grows.
    constants = AnalyticConstants(
        m=1.0, M=SQRT_HESSIAN_LIPSCHITZ, L=1.0, minimizer=np.zeros(1), min_value=1.0
    )
    return ProblemInstance(
        name="example2-sqrt",
        oracle=Objective(1, value, gradient, hessian, constants),
        tags=("1d-example", "convex"),
        start=np.array([0.5]),
    )


def quadratic_diag(*diagonal: float) -> ProblemInstance:
    d = np.array(diagonal if diagonal else (1.0, 100.0), dtype=float)
    if d.ndim != 1 or d.size == 0 or np.any(d <= 0):
        raise InvalidConstantsError("quadratic-diag needs positive diagonal entries")

    def value(x):
        return float(0.5 * np.dot(d * x, x))

    def gradient(x):
        return d * x

    def hessian(x):
        return np.diag(d)

    constants = AnalyticConstants(
        m=float(d.min()), M=0.0, L=float(d.max()), minimizer=np.zeros(d.size), min_value=0.0
    )
    return ProblemInstance(
        name="quadratic-diag:" + ",".join(_fmt(v) for v in d),
        oracle=Objective(d.size, value, gradient, hessian, constants),
        tags=("strongly-convex", "quadratic"),
        start=np.ones(d.size),
    )


def sqrt_plus_quadratic(mu: float = 1.0, n: int = 1) -> ProblemInstance:
    """f(x) = sum_i sqrt(1 + x_i^2) + mu/2 |x|^2, strongly convex with m = mu."""
    mu = float(mu)
    n = int(n)
    if mu <= 0 or n < 1:
        raise InvalidConstantsError("sqrt-plus-quadratic needs mu > 0 and n >= 1")

    def value(x):
        return float(np.sum(np.sqrt(1.0 + x * x)) + 0.5 * mu * np.dot(x, x))

    def gradient(x):
        return x / np.sqrt(1.0 + x * x) + mu * x

    def hessian(x):
        return np.diag((1.0 + x * x) ** -1.5 + mu)

    # Hessian is diagonal, so its spectral-norm Lipschitz constant is the 1D one.
    constants = AnalyticConstants(
        m=mu, M=SQRT_HESSIAN_LIPSCHITZ, L=mu + 1.0, minimizer=np.zeros(n), min_value=float(n)
    )
    name = f"sqrt-plus-quadratic:{_fmt(mu)}" + (f":n={n}" if n != 1 else "")
    return ProblemInstance(
        name=name,
        oracle=Objective(n, value, gradient, hessian, constants),
        tags=("strongly-convex",),
        start=np.full(n, 3.0),
    )


def _fmt(v: float) -> str:
    return f"{float(v):g}"


def builtin_problems() -> list[ProblemInstance]:
    return [
        example1_root(),
        example2_sqrt(),
        quadratic_diag(1.0, 100.0),
        sqrt_plus_quadratic(1.0),
        sqrt_plus_quadratic(1.0, n=10),
    ]


def get_problem(name: str) -> ProblemInstance:
    """Look up a problem by registry name.

    Parameters follow colons: ``quadratic-diag:1,100``,
    ``sqrt-plus-quadratic:1:n=50``.
    """
    base, *params = name.strip().split(":")
    try:
        if base == "example1-root" and not params:
            return example1_root()
        if base == "example2-sqrt" and not params:
            return example2_sqrt()
        if base == "quadratic-diag" and len(params) <= 1:
            diag = [float(v) for v in params[0].split(",")] if params else []
            return quadratic_diag(*diag)
        if base == "sqrt-plus-quadratic" and len(params) <= 2:
            mu, n = 1.0, 1
            for p in params:
                if p.startswith("n="):
                    n = int(p[2:])
                else:
                    mu = float(p)
            return sqrt_plus_quadratic(mu, n)
    except ValueError as exc:
        raise UnknownProblemError(f"bad parameters in problem name {name!r}: {exc}") from None
    known = ", ".join(p.name for p in builtin_problems())
    raise UnknownProblemError(f"unknown problem {name!r} (known: {known})")
