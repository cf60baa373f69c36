import math

import numpy as np
import pytest

from newtonlab.directions import (
    conditioning,
    decrement_from,
    direction_quality,
    newton_direction,
    regularized_direction,
    steepest_direction,
)
from newtonlab.errors import (
    ConvexityViolationError,
    HessianNotPositiveDefiniteError,
    InternalConsistencyError,
    ZeroGradientOrDirectionError,
)
from newtonlab.problems import Objective, builtin_problems, example2_sqrt, quadratic_diag, sqrt_plus_quadratic


def half_norm_sq(n=2):
    return Objective(n, lambda x: 0.5 * float(x @ x), lambda x: x.copy(), lambda x: np.eye(n))


def test_newton_direction_identity_hessian():
    rep = newton_direction(half_norm_sq(), [3.0, 4.0])
    np.testing.assert_allclose(rep.direction, [-3.0, -4.0])
    assert rep.decrement == pytest.approx(5.0, rel=1e-15)


def test_newton_direction_example2_is_cubic_map():
    rep = newton_direction(example2_sqrt().oracle, 0.5)
    assert rep.direction[0] == pytest.approx(-0.625, rel=1e-15)
    assert 0.5 + rep.direction[0] == pytest.approx(-0.125, rel=1e-15)


def test_newton_decrement_example2_t1():
    rep = newton_direction(example2_sqrt().oracle, 1.0)
    assert rep.decrement ** 2 == pytest.approx(math.sqrt(2), rel=1e-14)
    assert rep.decrement == pytest.approx(1.189207115002721, rel=1e-14)


def test_regularized_direction_half_square():
    oracle = Objective(1, lambda x: 0.5 * float(x @ x), lambda x: x.copy(), lambda x: np.eye(1))
    assert regularized_direction(oracle, [1.0]).direction[0] == pytest.approx(-0.5, rel=1e-15)


def test_regularized_direction_example2_t1():
    rep = regularized_direction(example2_sqrt().oracle, 1.0)
    assert rep.direction[0] == pytest.approx(-2.0 / 3.0, rel=1e-15)
    assert rep.decrement ** 2 == pytest.approx(math.sqrt(2) / 3.0, rel=1e-14)


@pytest.mark.parametrize("problem", [p for p in builtin_problems() if p.constants], ids=lambda p: p.name)
def test_directions_vanish_at_minimizer(problem):
    rep = regularized_direction(problem.oracle, problem.constants.minimizer)
    assert not np.any(rep.direction) and rep.decrement == 0.0
    assert newton_direction(problem.oracle, problem.constants.minimizer).decrement == 0.0


def test_steepest_quality_is_one():
    rep = steepest_direction(quadratic_diag(1, 100).oracle, [1.0, 1.0])
    assert rep.quality == pytest.approx(1.0, abs=1e-15)


def test_newton_quality_on_identity_hessian():
    assert direction_quality(half_norm_sq(), [3.0, 4.0], [-3.0, -4.0]) == pytest.approx(1.0, abs=1e-15)


def test_newton_quality_diag_1_100():
    rep = newton_direction(quadratic_diag(1, 100).oracle, [1.0, 1.0])
    np.testing.assert_allclose(rep.direction, [-1.0, -1.0])
    expected = 101.0 / (math.sqrt(10001.0) * math.sqrt(2.0))
    assert rep.quality == pytest.approx(expected, rel=1e-14)
    assert rep.quality >= 0.01


def test_quality_zero_vectors_raise():
    with pytest.raises(ZeroGradientOrDirectionError):
        direction_quality(half_norm_sq(), [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ZeroGradientOrDirectionError):
        direction_quality(half_norm_sq(), [1.0, 0.0], [0.0, 0.0])


def test_conditioning_diag_1_100():
    rep = conditioning(quadratic_diag(1, 100).oracle, [1.0, 0.0])
    assert rep.grad_norm == 1.0
    assert rep.cond_hessian == pytest.approx(0.01, rel=1e-15)
    assert rep.cond_regularized == pytest.approx(2.0 / 101.0, rel=1e-15)
    assert rep.gap == pytest.approx(rep.difference, abs=1e-15)
    assert rep.gap == pytest.approx(0.99 / 101.0, rel=1e-14)


def test_conditioning_identity_hessian_has_no_gap():
    rep = conditioning(half_norm_sq(), [3.0, 4.0])
    assert rep.cond_hessian == 1.0 and rep.gap == 0.0


def test_conditioning_at_minimizer():
    rep = conditioning(quadratic_diag(1, 100).oracle, [0.0, 0.0])
    assert rep.cond_regularized == rep.cond_hessian and rep.gap == 0.0


def test_decrement_clamp():
    assert decrement_from(np.array([1.0]), np.array([5e-13])) == 0.0
    with pytest.raises(InternalConsistencyError):
        decrement_from(np.array([1.0]), np.array([1e-6]))


def test_indefinite_hessian_errors():
    saddle = Objective(2, lambda x: 0.5 * (x[0] ** 2 - x[1] ** 2), lambda x: np.array([x[0], -x[1]]),
                       lambda x: np.diag([1.0, -1.0]))
    with pytest.raises(HessianNotPositiveDefiniteError):
        newton_direction(saddle, [1.0, 0.1])
    # ||g|| ~ 1.005 > 1 so H + ||g|| I is PD here, but not at a point with a small gradient.
    with pytest.raises(ConvexityViolationError):
        regularized_direction(saddle, [0.1, 0.1])


def test_regularized_quality_beats_newton_on_sqrt_plus_quadratic():
    oracle = sqrt_plus_quadratic(1, 3).oracle
    x = np.array([4.0, -0.2, 1.0])
    c = conditioning(oracle, x)
    assert regularized_direction(oracle, x).quality >= c.cond_regularized - 1e-10
    assert newton_direction(oracle, x).quality >= c.cond_hessian - 1e-10
