import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypercauchy.estimates_lab import (
    RandomSuite,
    check_commutator,
    check_mollifier_gap,
    check_moser,
    commutator,
    commutator_operator_norm,
    moser_ratio,
)
from hypercauchy.grid_field import Field, GridSpec, Mollifier, l2_norm


def trig_oracle(coeffs, x, order):
    """order-th derivative of a0 + sum_k a_k cos kx + b_k sin kx, evaluated pointwise."""
    out = np.full_like(x, coeffs[0, 0] if order == 0 else 0.0)
    for k in range(1, len(coeffs)):
        a, b = coeffs[k]
        # d^n cos(kx) = k^n cos(kx + n pi/2)
        out += k**order * (a * np.cos(k * x + order * np.pi / 2) + b * np.sin(k * x + order * np.pi / 2))
    return out


def first_moser_oracle(raw, k):
    """Ratio of the first estimate by pointwise Leibniz products and trapezoid quadrature."""
    from math import comb

    x = np.linspace(0, 2 * np.pi, 4097)[:-1]
    dx = 2 * np.pi / x.size
    fd = [trig_oracle(raw[0], x, j) for j in range(k + 1)]
    gd = [trig_oracle(raw[1], x, j) for j in range(k + 1)]
    fgk = sum(np.sum(sum(comb(j, i) * fd[i] * gd[j - i] for i in range(j + 1)) ** 2) * dx for j in range(k + 1))
    fk = sum(np.sum(d**2) * dx for d in fd)
    gk = sum(np.sum(d**2) * dx for d in gd)
    xs = np.linspace(0, 2 * np.pi, 200001)
    fsup = np.max(np.abs(trig_oracle(raw[0], xs, 0)))
    gsup = np.max(np.abs(trig_oracle(raw[1], xs, 0)))
    return np.sqrt(fgk) / (fsup * np.sqrt(gk) + np.sqrt(fk) * gsup)


def test_suite_is_reproducible():
    a, b = RandomSuite(seed=3, count=4), RandomSuite(seed=3, count=4)
    assert np.array_equal(a.raw(), b.raw())
    assert not np.array_equal(a.raw(), RandomSuite(seed=4, count=4).raw())


def test_suite_rejects_small_grids_and_bad_fields():
    with pytest.raises(ValueError):
        RandomSuite(max_degree=8).members(16)
    with pytest.raises(ValueError):
        RandomSuite(count=0)
    with pytest.raises(ValueError):
        RandomSuite(dim=3)


def test_first_moser_ratio_matches_quadrature_oracle():
    suite = RandomSuite(seed=0, count=3, max_degree=8)
    f, g = suite.members(64)[0]
    raw = suite.raw()[0]
    # raw[:, mode, (cos, sin)] with modes 0..8 in one dimension
    ours, oracle = moser_ratio("first", f, g, 2), first_moser_oracle(raw, 2)
    # grid-sampled sup norms can only undershoot, so the ratio can only overshoot
    assert ours >= oracle * (1 - 1e-12)
    assert ours == pytest.approx(oracle, rel=1e-3)


def test_first_moser_resolution_stable():
    rep = check_moser("first", RandomSuite(seed=0, count=100, max_degree=8), 2)
    assert rep.finite
    assert rep.resolution_change <= 0.05


def test_second_moser_constant_f_gives_zero():
    spec = GridSpec(modes=64)
    f = Field.constant(spec, 2.0)
    g = Field.from_function(spec, lambda x: np.sin(3 * x) + np.cos(x))
    assert moser_ratio("second", f, g, 3) == 0.0


def test_third_moser_identity_composer_ratio_one():
    suite = RandomSuite(seed=1, count=5, max_degree=4)
    for f, _ in suite.members(64):
        # only top-order terms enter with F = id; lower orders are equal too
        assert moser_ratio("third", f - Field.constant(f.spec, f.coefficients[0, 0].real), None, 3, lambda v: v) == pytest.approx(1.0, rel=1e-12)


def test_third_moser_needs_composer():
    with pytest.raises(ValueError):
        check_moser("third", RandomSuite(count=2), 2)
    with pytest.raises(ValueError):
        check_moser("third", RandomSuite(count=2), 2, composer=np.cos)


def test_unknown_variant():
    with pytest.raises(ValueError):
        check_moser("fourth", RandomSuite(count=2), 2)


# commutator estimates

A64 = GridSpec(modes=64)


def test_constant_coefficient_commutator_vanishes():
    a = Field.constant(A64, 1.7)
    for form in ("zeroth", "lipschitz", "first_sobolev", "derivative"):
        rep = check_commutator(form, a, RandomSuite(count=5, max_degree=6), [0.1, 0.05])
        assert rep.max_ratio <= 1e-12


@pytest.mark.parametrize("coefficient", [np.sin, lambda x: np.exp(np.cos(x)) - 1])
def test_lipschitz_slope(coefficient):
    # the band must reach eps * |xi| > 1, otherwise smooth members show eps^2
    a = Field.from_function(GridSpec(modes=512), coefficient)
    eps = [2.0**-j for j in range(1, 6)]
    rep = check_commutator("lipschitz", a, RandomSuite(seed=2, count=5, max_degree=8), eps)
    assert 0.9 <= rep.slope <= 1.3
    assert rep.finite and np.isfinite(rep.max_ratio)


def test_derivative_form_bounded_in_frequency():
    spec = GridSpec(modes=256, kind="complex")
    a = Field.from_function(GridSpec(modes=256), np.sin)
    ratios = {}
    for q in (4, 8, 16, 32):
        v = Field.from_function(spec, lambda x: np.exp(1j * q * x))
        ratios[q] = check_commutator("derivative", a, [v], [0.5], worst_case=False).max_ratio
    assert max(ratios.values()) <= 2 * ratios[4]


def test_commutator_direct_convolution_oracle():
    # oracle: [a, J] e^{iqx} for a = sin has closed form via theta-hat values
    from hypercauchy.grid_field import bump_transform

    spec = GridSpec(modes=64, kind="complex")
    eps, q = 0.2, 5
    a = Field.from_function(spec, np.sin)
    v = Field.from_function(spec, lambda x: np.exp(1j * q * x))
    out = commutator(a, v, Mollifier(eps))
    th = lambda k: bump_transform(np.array([k * eps]))[0]
    x = spec.coordinates()[0]
    # sin * e^{iqx} = (e^{i(q+1)x} - e^{i(q-1)x}) / 2i
    expect = (th(q) - th(q + 1)) * np.exp(1j * (q + 1) * x) / 2j - (th(q) - th(q - 1)) * np.exp(1j * (q - 1) * x) / 2j
    assert np.max(np.abs(out.values[0] - expect)) <= 1e-12


def test_operator_norm_dominates_members():
    a = Field.from_function(A64, lambda x: np.cos(2 * x))
    m = Mollifier(0.1)
    opn = commutator_operator_norm("zeroth", a, m)
    for f, _ in RandomSuite(count=10, max_degree=8).members(64):
        assert l2_norm(commutator(a, f, m)) <= opn * l2_norm(f) * (1 + 1e-10)


def test_operator_norm_is_one_dimensional():
    with pytest.raises(ValueError):
        commutator_operator_norm("zeroth", Field.zeros(GridSpec(dim=2, modes=16)), Mollifier(0.1))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_commutator_ratios_finite_and_resolution_stable(seed):
    a = Field.from_function(A64, lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    suite = RandomSuite(seed=seed, count=5, max_degree=6)
    rep = check_commutator("first_sobolev", a, suite, [0.1, 0.02], worst_case=False)
    assert rep.finite
    assert rep.resolution_change <= 0.05


# mollifier gap


def test_mollifier_gap_at_least_linear_in_epsilon():
    # even kernel: smooth members converge like eps^2, the bound only claims eps
    rep = check_mollifier_gap(RandomSuite(count=10, max_degree=6), [0.2, 0.1, 0.05, 0.025])
    assert rep.slope >= 0.9
    assert rep.max_ratio <= 1.0
    assert rep.finite and rep.resolution_change <= 0.05
