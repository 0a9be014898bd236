import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypercauchy import geometry_lab as geo

PTS4 = geo.sample_points(4, 6, seed=1)
SLICE4 = geo.sample_points(4, 6, seed=1, time=0.0)


def poly(p):
    return p[0] ** 3 - 2 * p[0] * p[1] ** 2 + 0.5 * p[1]


# finite differences


@pytest.mark.parametrize("order", [2, 4])
def test_fd_exact_on_low_degree_polynomials(order):
    p = geo.sample_points(2, 5, seed=3)
    quad = lambda q: 3 * q[0] ** 2 - q[0] * q[1] + 2 * q[1]
    g = geo.fd_gradient(quad, p, 1e-2, order)
    assert np.max(np.abs(g[0] - (6 * p[0] - p[1]))) <= 1e-11
    assert np.max(np.abs(g[1] - (2 - p[0]))) <= 1e-11


@pytest.mark.parametrize("order", [2, 4])
def test_fd_jet_converges_at_declared_order(order):
    p = geo.sample_points(2, 5, seed=4)
    exact_xy = -4 * p[1]
    errs = []
    for h in (0.04, 0.02):
        # sin x sin y: the leading cross-stencil error terms add instead of cancelling
        _, _, hess = geo.fd_jet2(lambda q: np.sin(q[0]) * np.sin(q[1]) + poly(q), p, h, order)
        errs.append(np.max(np.abs(hess[0, 1] - (np.cos(p[0]) * np.cos(p[1]) + exact_xy))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.3)


def test_analytic_field_validation():
    with pytest.raises(ValueError):
        geo.AnalyticField(poly, fd_order=3)
    with pytest.raises(ValueError):
        geo.AnalyticField(poly, fd_step=0.0)
    with pytest.raises(ValueError):
        geo.AnalyticField(poly).check_points(np.array([[0.0], [2.0]]))


def test_chart_validation():
    with pytest.raises(ValueError):
        geo.MetricChart("sliced", 4)
    with pytest.raises(ValueError):
        geo.MetricChart("hyperbolic", 4)
    bad = geo.MetricChart("sliced", 4, beta=geo.constant_field(-1.0), slice_factor=geo.constant_field(1.0))
    with pytest.raises(ValueError):
        bad.check_positive(PTS4)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_clifford_generators(n):
    assert geo.clifford_defect(n) <= 1e-14


def test_codifferential_matches_closed_form():
    # A = (t^2 x1, x1 x2, 0, sin t); d*A = dA_t/dt - sum_j dA_j/dx_j = 2 t x1 - x2
    pot = geo.AnalyticField(lambda p: np.array([p[0] ** 2 * p[1], p[1] * p[2], 0 * p[0], np.sin(p[0])]))
    out = geo.codifferential_direct(pot, geo.MetricChart("minkowski", 4), PTS4, 1e-3)
    assert np.max(np.abs(out - (2 * PTS4[0] * PTS4[1] - PTS4[2]))) <= 1e-9


# conformal codifferential


@pytest.mark.parametrize("n", [2, 3, 4])
def test_codifferential_zero_exponent_exact(n):
    pts = geo.sample_points(n, 6, seed=2)
    rep = geo.check_conformal_codifferential(geo.random_two_form(n, 1), geo.constant_field(0.0), n, pts)
    assert rep.residual <= 1e-10


def test_codifferential_n4_exact_at_every_step():
    # with the gradient term gone the difference-quotient errors cancel algebraically
    rep = geo.check_conformal_codifferential(geo.random_two_form(4, 1), geo.random_scalar(4, 2), 4, PTS4)
    assert rep.exact
    assert max(rep.coarse_residuals) <= 1e-12 and rep.residual <= 1e-12


def test_codifferential_n3_full_formula():
    pts = geo.sample_points(3, 6, seed=2)
    rep = geo.check_conformal_codifferential(geo.random_two_form(3, 1), geo.random_scalar(3, 2), 3, pts)
    assert rep.residual <= 1e-7
    assert rep.order >= 1.9
    assert abs(rep.richardson_ratio / 4 - 1) <= 0.15


def test_codifferential_rejects_dimension():
    with pytest.raises(ValueError):
        geo.check_conformal_codifferential(geo.random_two_form(4, 1), geo.random_scalar(4, 2), 5, PTS4)


# Dirac covariance


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gauge_constant_function_exact(n):
    pts = geo.sample_points(n, 6, seed=5)
    rep = geo.check_dirac_covariance("gauge", geo.random_spinor(n, 1), geo.random_one_form(n, 2), geo.constant_field(0.4), n, 0.7, pts)
    assert rep.residual <= 1e-12


def test_gauge_uncoupled_identity():
    pts = geo.sample_points(3, 6, seed=5)
    rep = geo.check_dirac_covariance("gauge", geo.random_spinor(3, 1), geo.random_one_form(3, 2), geo.random_scalar(3, 3), 3, 0.0, pts)
    assert rep.residual <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gauge_covariance_order(n):
    pts = geo.sample_points(n, 6, seed=5)
    rep = geo.check_dirac_covariance("gauge", geo.random_spinor(n, 1), geo.random_one_form(n, 2), geo.random_scalar(n, 3), n, 0.7, pts)
    assert rep.residual <= 1e-7
    assert rep.exact or rep.order >= 1.9


def test_conformal_covariance_n4():
    rep = geo.check_dirac_covariance("conformal", geo.random_spinor(4, 1), geo.random_one_form(4, 2), geo.random_scalar(4, 3), 4, 0.7, PTS4)
    assert rep.residual <= 1e-7
    assert rep.exact or rep.order >= 1.9
    assert rep.extras["explicit_formula_gap"] <= 1e-7


def test_conformal_zero_exponent_reduces_to_flat():
    rep = geo.check_dirac_covariance("conformal", geo.random_spinor(4, 1), geo.random_one_form(4, 2), geo.constant_field(0.0), 4, 0.7, PTS4)
    assert rep.residual <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_current_scaling_slope(n):
    pts = geo.sample_points(n, 12, seed=6)
    rep = geo.check_dirac_covariance("current_scaling", geo.random_spinor(n, 1), None, geo.random_scalar(n, 3), n, 0.0, pts)
    assert rep.extras["slope"] == pytest.approx(-(n - 2), abs=1e-3)


def test_unknown_covariance_kind():
    with pytest.raises(ValueError):
        geo.check_dirac_covariance("spin", geo.random_spinor(2, 1), None, geo.random_scalar(2, 3), 2, 0.0, geo.sample_points(2))


# constraints


def test_constraints_of_zero_potential():
    zero = geo.constant_field(np.zeros(4))
    for chart in (geo.MetricChart("minkowski", 4), geo.sliced_chart()):
        reports = geo.check_constraints_3p1(zero, chart, SLICE4)
        assert reports["constraint_1"].residual == 0.0
        assert reports["constraint_2"].residual == 0.0


def test_constraints_minkowski():
    reports = geo.check_constraints_3p1(geo.random_one_form(4, 7), geo.MetricChart("minkowski", 4), SLICE4)
    for rep in reports.values():
        assert rep.residual <= 1e-7
        assert rep.exact or rep.order >= 1.9
        assert rep.extras["simplified_gap_1"] <= 1e-10
    # the second simplified expression agrees on static slices
    assert reports["constraint_2"].extras["simplified_gap_2"] <= 1e-10


def test_constraint_one_sliced():
    rep = geo.check_constraints_3p1(geo.random_one_form(4, 7), geo.sliced_chart(), SLICE4)["constraint_1"]
    assert rep.exact or rep.order >= 1.9


def test_constraint_two_sliced_corrected_form():
    rep = geo.check_constraints_3p1(geo.random_one_form(4, 7), geo.sliced_chart(), SLICE4, form="corrected")["constraint_2"]
    assert rep.residual <= 1e-7
    assert rep.order >= 1.9


@pytest.mark.xfail(strict=True, reason="printed coefficients drop the grad(lapse) frame term; residual stalls near 4e-3")
def test_constraint_two_sliced_printed_form():
    rep = geo.check_constraints_3p1(geo.random_one_form(4, 7), geo.sliced_chart(), SLICE4, form="printed")["constraint_2"]
    assert rep.order >= 1.9


def test_printed_and_corrected_agree_with_constant_lapse():
    chart = geo.sliced_chart(beta_amplitude=0.0)
    pot = geo.random_one_form(4, 7)
    a = geo.check_constraints_3p1(pot, chart, SLICE4, form="printed")["constraint_2"]
    b = geo.check_constraints_3p1(pot, chart, SLICE4, form="corrected")["constraint_2"]
    assert np.max(np.abs(a.rhs - b.rhs)) <= 1e-12


def test_constraints_reject_other_charts():
    with pytest.raises(ValueError):
        geo.check_constraints_3p1(geo.random_one_form(4, 7), geo.MetricChart("minkowski", 3), SLICE4)
    with pytest.raises(ValueError):
        geo.constraint_terms(geo.random_one_form(4, 7), geo.MetricChart("minkowski", 4), SLICE4, 1e-3, form="other")


# obstruction


def test_obstruction_closed_potential():
    # A = d(sin(t) x1 + x2 x3) is closed, so dA = 0
    pot = geo.AnalyticField(lambda p: np.array([np.cos(p[0]) * p[1], np.sin(p[0]), p[3], p[2]]))
    rep = geo.check_obstruction(pot, SLICE4)
    assert rep.residual <= 1e-12
    assert np.max(np.abs(rep.lhs)) <= 1e-9 and np.max(np.abs(rep.rhs)) <= 1e-9


def test_obstruction_order_on_random_potential():
    rep = geo.check_obstruction(geo.random_one_form(4, 8), SLICE4)
    assert rep.residual <= 1e-7
    assert rep.exact or rep.order >= 1.9


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 1000))
def test_periodic_slice_integral_vanishes(seed):
    rep = geo.check_obstruction(geo.periodic_one_form(4, seed), SLICE4)
    assert abs(rep.extras["slice_integral"]) <= 1e-8


def test_residual_rows_shape():
    rep = geo.check_obstruction(geo.random_one_form(4, 8), SLICE4)
    rows = rep.rows()
    assert len(rows) == SLICE4.shape[1]
    assert all(len(r) == len(geo.CSV_HEADER) for r in rows)
