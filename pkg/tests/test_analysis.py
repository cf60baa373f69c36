import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from newtonlab.analysis import (
    affine_invariance_check,
    audit_decrease,
    basin_map_1d,
    classify_rate,
    config_for,
    dnm_step_bound,
    drnm_step_bound,
    newton_area_radius,
    reduced_convexity,
    region_report,
    region_report_for,
    regularized_area_bound,
    regularized_area_radius,
    steps_to_enter,
    sublevel_radius,
)
from newtonlab.errors import (
    InvalidConstantsError,
    MissingConstantsError,
    SingularTransformError,
    UnsupportedProblemError,
    VariantMismatchError,
)
from newtonlab.problems import example2_sqrt, get_problem, quadratic_diag, sqrt_plus_quadratic
from newtonlab.solvers import SolverConfig, classical_newton, dnm_fixed, drnm, rnm_pure

SPQ = sqrt_plus_quadratic(1)


# -- formulas --------------------------------------------------------------


def test_newton_radius():
    assert newton_area_radius(1, 3) == pytest.approx(2 / 9, rel=1e-15)
    assert newton_area_radius(1, 0) is None


def test_regularized_radius_and_m0():
    assert regularized_area_radius(1, 3, 2) == pytest.approx(2 / 21, rel=1e-15)
    assert reduced_convexity(1, 3, 2) == pytest.approx(5 / 7, rel=1e-15)


def test_dnm_bound():
    assert dnm_step_bound(1, 1, 1, 10) == pytest.approx(90.0, rel=1e-15)


def test_drnm_bound_by_hand():
    # m=1, M=3, L=2: m0 = 5/7, (M+2L)^3 = 343.
    expected = 13.5 * 4 * 343 * 2 * 10 / (5 / 7) ** 3
    assert drnm_step_bound(1, 3, 2, 1.0, 10.0) == pytest.approx(expected, rel=1e-14)


def test_region_report_fields():
    rep = region_report(1, 3, 2, 10, 1)
    assert rep.newton_radius == pytest.approx(2 / 9)
    assert rep.regularized_radius == pytest.approx(2 / 21)
    assert rep.m0 == pytest.approx(5 / 7)
    assert rep.dnm_bound == pytest.approx(9 * 4 * 9 * 10)
    assert rep.notes == ()


def test_region_report_quadratic_flags():
    rep = region_report(1, 0, 100, 10, 1)
    assert rep.newton_radius is None and rep.dnm_bound is None
    assert any("Newton exact on quadratics" in n for n in rep.notes)


@pytest.mark.parametrize("args", [(0, 1, 1, 1, 1), (1, -1, 1, 1, 1), (2, 1, 1, 1, 1), (1, 1, 1, -1, 1)])
def test_region_report_invalid(args):
    with pytest.raises(InvalidConstantsError):
        region_report(*args)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1.0, 1e3))
def test_regularized_radius_smaller(m, M, ratio):
    L = m * ratio
    assert regularized_area_radius(m, M, L) < newton_area_radius(m, M)


def test_region_report_for_builtin_all_positive():
    d = region_report_for("sqrt-plus-quadratic:1").to_dict()
    for key in ("newton_radius", "regularized_radius", "m0", "dnm_bound", "drnm_bound"):
        assert d[key] > 0


def test_region_report_for_missing_constants():
    with pytest.raises(MissingConstantsError):
        region_report_for("example1-root")


# -- sublevel radius -------------------------------------------------------


def test_sublevel_radius_1d_symmetric():
    assert sublevel_radius(example2_sqrt().oracle, [0.0], [3.0]) == pytest.approx(3.0, rel=1e-12)


def test_sublevel_radius_2d_ellipse():
    # {x^2/2 + 50 y^2 <= 50.5}: semi-axes sqrt(101) and sqrt(1.01).
    r0 = sublevel_radius(quadratic_diag(1, 100).oracle, [0.0, 0.0], [1.0, 1.0])
    assert r0 == pytest.approx(math.sqrt(101.0), rel=1e-9)


def test_sublevel_radius_high_dimension_bound():
    q = sqrt_plus_quadratic(1, 10)
    x0 = np.full(10, 3.0)
    gap = q.oracle.value(x0) - 10.0
    assert sublevel_radius(q.oracle, np.zeros(10), x0, 10.0, m=1.0) == pytest.approx(math.sqrt(2 * gap))
    with pytest.raises(MissingConstantsError):
        sublevel_radius(q.oracle, np.zeros(10), x0)


# -- rates -----------------------------------------------------------------


def test_classify_cubic_example2():
    rc = classify_rate(classical_newton(example2_sqrt().oracle, [0.5]), [0.0])
    assert rc.verdict == "cubic"
    for _, _, cubic in rc.ratios:
        assert cubic == pytest.approx(1.0, abs=1e-12)


def test_classify_exact_map():
    pts = [0.5]
    while abs(pts[-1]) > 1e-30:
        pts.append(-pts[-1] ** 3)
    rc = classify_rate(pts, 0.0)
    assert rc.verdict == "cubic"
    assert all(1 - 1e-10 <= c <= 1 + 1e-10 for _, _, c in rc.ratios)


def test_classify_exact_on_quadratic():
    res = classical_newton(quadratic_diag(1, 100).oracle, [3.0, 4.0])
    assert classify_rate(res, [0.0, 0.0]).verdict == "exact"


def test_classify_quadratic_rnm_inside_area():
    c = SPQ.constants
    k = c.M + 2 * c.L
    res = rnm_pure(SPQ.oracle, [0.9 * regularized_area_radius(c.m, c.M, c.L)])
    rc = classify_rate(res, [0.0])
    assert rc.verdict == "quadratic"
    d = np.abs(res.points()[:, 0])
    for s, (_, quad, _) in zip(rc.steps, rc.ratios):
        assert quad <= k / (2 * (c.m - k * d[s])) + 1e-9


def test_classify_linear_fixed_step_phase():
    res = dnm_fixed(SPQ.oracle, [5.0], SolverConfig(m=1, L=2))
    assert classify_rate(res, [0.0]).verdict == "linear"


def test_classify_inconclusive_short():
    assert classify_rate([1.0, 0.5], 0.0).verdict == "inconclusive"


def test_regularized_area_bound_formula():
    assert regularized_area_bound(1.0, 1.0, 1.0, 0.1) == pytest.approx(3 * 0.01 / (2 * 0.7))


def test_steps_to_enter():
    assert steps_to_enter([3.0, 1.0, 0.1, 0.0], 0.0, 0.5) == 2
    assert steps_to_enter([3.0, 2.0], 0.0, 0.5) is None


# -- audit -----------------------------------------------------------------


def test_audit_dnm_clean():
    c = SPQ.constants
    res = dnm_fixed(SPQ.oracle, [5.0], SolverConfig(m=c.m, L=c.L))
    rep = audit_decrease(res, "dnm", c.m, c.L, [0.0], c.M)
    assert rep.passed and rep.checked_steps == res.iterations and rep.distance_checks == "applied"


def test_audit_single_step_quadratic():
    q = quadratic_diag(1, 100)
    res = dnm_fixed(q.oracle, [1.0, 1.0], SolverConfig(m=1, L=100))
    rep = audit_decrease(res, "dnm", 1, 100)
    assert rep.passed and rep.checked_steps == 1 and rep.distance_checks == "not-applicable"


def test_audit_detects_corruption():
    c = SPQ.constants
    res = dnm_fixed(SPQ.oracle, [5.0], SolverConfig(m=c.m, L=c.L))
    res.trace[0] = dataclasses.replace(res.trace[0], f_decrease=res.trace[0].f_decrease / 2)
    rep = audit_decrease(res, "dnm", c.m, c.L)
    assert [v.index for v in rep.violations] == [0]


def test_audit_drnm_clean():
    res = drnm(example2_sqrt().oracle, [30.0], SolverConfig(L=1))
    assert audit_decrease(res, "drnm", None, 1.0).passed


def test_audit_variant_mismatch():
    res = drnm(example2_sqrt().oracle, [3.0], SolverConfig(L=1))
    with pytest.raises(VariantMismatchError):
        audit_decrease(res, "dnm", 1.0, 1.0)
    with pytest.raises(VariantMismatchError):
        audit_decrease(res, "bogus", 1.0, 1.0)


# -- basins ----------------------------------------------------------------


def test_basin_example1():
    for cell in basin_map_1d("example1-root", "newton", -0.95, 0.95, 39):
        assert (cell.outcome == "converged") == (abs(cell.start) < 2 / 3)
        assert cell.outcome in ("converged", "diverged")


def test_basin_example2():
    cells = basin_map_1d("example2-sqrt", "newton", -2, 2, 80)
    assert len(cells) == 80
    for cell in cells:
        assert (cell.outcome == "converged") == (abs(cell.start) < 1)


def test_basin_boundaries_opt_in():
    cells = basin_map_1d("example2-sqrt", "newton", -2, 2, 81, include_boundary=True)
    marked = {c.start: c.outcome for c in cells if abs(abs(c.start) - 1) < 1e-12}
    assert marked == {-1.0: "oscillating", 1.0: "oscillating"}
    cells = basin_map_1d("example1-root", "newton", -0.95, 0.95, 39, include_boundary=True)
    assert [c.outcome for c in cells if abs(abs(c.start) - 2 / 3) < 1e-12] == ["oscillating"] * 2


def test_basin_grid_drops_boundary_by_default():
    starts = [c.start for c in basin_map_1d("example2-sqrt", "newton", -2, 2, 81)]
    assert len(starts) == 79 and 1.0 not in starts


def test_basin_drnm_all_converged_parallel_matches_serial():
    cfg = SolverConfig(L=1)
    serial = basin_map_1d("example2-sqrt", "drnm", -50, 50, 64, cfg)
    assert all(c.outcome == "converged" for c in serial)
    assert basin_map_1d("example2-sqrt", "drnm", -50, 50, 64, cfg, workers=4) == serial


def test_basin_rejects_multidimensional():
    with pytest.raises(UnsupportedProblemError):
        basin_map_1d("quadratic-diag:1,100", "newton", -1, 1, 10)
    with pytest.raises(UnsupportedProblemError):
        basin_map_1d("example1-root", "drnm", -1, 1, 10)


def test_config_for_fills_constants():
    assert config_for(get_problem("example2-sqrt"), "drnm").L == 1.0
    assert config_for(get_problem("example2-sqrt"), "dnm").m is None
    cfg = config_for(SPQ, "dnm")
    assert (cfg.m, cfg.L) == (1.0, 2.0)
    assert config_for(SPQ, "drnm", SolverConfig(L=5.0)).L == 5.0


# -- affine invariance -----------------------------------------------------


def test_affine_identity():
    assert affine_invariance_check(SPQ.oracle, np.eye(1), [3.0], 6) == 0.0


def test_affine_scaling_quadratic():
    dev = affine_invariance_check(quadratic_diag(1, 100).oracle, 2 * np.eye(2), [1.0, 1.0], 5)
    assert dev <= 1e-12


def _well_conditioned(rng, n, cond):
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (U * np.geomspace(1.0, 1.0 / cond, n)) @ V.T


def test_affine_random_transform():
    rng = np.random.default_rng(7)
    q = sqrt_plus_quadratic(1, 5)
    A = _well_conditioned(rng, 5, 50.0)
    assert affine_invariance_check(q.oracle, A, rng.uniform(-2, 2, 5), 8) <= 1e-9


def test_affine_composition_smoke():
    rng = np.random.default_rng(11)
    q = sqrt_plus_quadratic(1, 3)
    A, B = _well_conditioned(rng, 3, 5.0), _well_conditioned(rng, 3, 5.0)
    x0 = rng.uniform(-1, 1, 3)
    dab = affine_invariance_check(q.oracle, A @ B, x0, 6)
    assert dab <= affine_invariance_check(q.oracle, A, x0, 6) + affine_invariance_check(q.oracle, B, x0, 6) + 1e-8


def test_affine_singular():
    with pytest.raises(SingularTransformError):
        affine_invariance_check(quadratic_diag(1, 100).oracle, [[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0], 3)
