import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hypercauchy import causal_induction as ci

LINEAR = ci.plan(lambda n: float(n), -1.0, 6)


def in_past_of_outside(x, t_low, radius, t_high):
    """Oracle: (t_low, x) lies in the causal past of {(t_high, y) : |y| >= radius - t_high}.

    Brute force over sampled y instead of the closed form.
    """
    edge = radius - t_high
    gap = t_high - t_low
    # the set is unbounded; sampling out to 40 covers every tested x with spacing below any gap
    half = np.linspace(edge, 40.0, 400001)
    ys = np.concatenate([half, -half])
    return bool(np.any(np.abs(x - ys) <= gap + 1e-12))


def region_contains(region, x):
    return any(
        (iv.lo < x or (iv.lo == x and iv.lo_closed)) and (x < iv.hi or (x == iv.hi and iv.hi_closed))
        for iv in region.intervals
    )


radii_steps = st.lists(st.floats(0.3, 3.0), min_size=7, max_size=7)


def plan_from_steps(steps, n_max=6):
    radii = np.cumsum(steps)
    r1 = math.log(radii[0]) - 0.5
    return ci.plan(list(radii), r1, n_max)


# plan


def test_linear_plan_sequences():
    assert LINEAR.tau[0] == pytest.approx(math.log(0.5), abs=1e-15)
    assert LINEAR.r_seq[:3] == (-1.0, -2.0, -3.0)
    assert LINEAR.t(2) == pytest.approx(math.exp(-2), abs=1e-15)


def test_first_regions():
    a1 = LINEAR.region(1, 3)
    assert a1.intervals == (ci.Interval(-1.0, 1.0, False, False),)
    a2 = LINEAR.region(2, 3)
    inner = 1 - 2 * math.exp(-1)
    assert inner == pytest.approx(0.264241, abs=1e-6)
    assert [(iv.lo, iv.hi) for iv in a2.intervals] == [(-2.0, -inner), (inner, 2.0)]
    assert a2.intervals[1].lo_closed and not a2.intervals[1].hi_closed


def test_plan_preconditions():
    with pytest.raises(ValueError):
        ci.plan([1.0, 1.0, 2.0], -1.0, 2)
    with pytest.raises(ValueError):
        ci.plan(lambda n: float(n), 0.0, 3)
    with pytest.raises(ValueError):
        ci.plan([1.0, 2.0], -1.0, 3)


@settings(max_examples=30, deadline=None)
@given(steps=radii_steps)
def test_slice_recursion_and_decay(steps):
    p = plan_from_steps(steps)
    for n in range(1, p.n_max + 1):
        assert p.r_seq[n] == min(p.r_seq[n - 1] - 1.0, p.tau[n - 1])
        assert p.t(n + 1) < p.t(n)
    assert p.t(p.n_max + 1) <= math.exp(p.r_seq[0] - p.n_max)


@settings(max_examples=20, deadline=None)
@given(steps=radii_steps, xs=st.lists(st.floats(-15.0, 15.0), min_size=10, max_size=10))
def test_regions_match_light_cone_oracle(steps, xs):
    p = plan_from_steps(steps)
    n = 4
    for i in range(2, n + 1):
        region = p.region(i, n)
        edge = p.R(i - 1) - 2 * p.t(i - 1)
        for x in xs:
            assume(abs(abs(x) - edge) > 1e-6 and abs(abs(x) - p.R(i)) > 1e-6)
            expect = in_past_of_outside(x, 0.0, p.R(i - 1), p.t(i - 1)) and abs(x) < p.R(i)
            assert region_contains(region, x) == expect
    terminal = p.region(n + 1, n)
    assert terminal.time == p.t(n + 1)
    edge = p.R(n) - 2 * p.t(n) + p.t(n + 1)
    for x in xs:
        assume(abs(abs(x) - edge) > 1e-6)
        assert region_contains(terminal, x) == in_past_of_outside(x, p.t(n + 1), p.R(n), p.t(n))


# separation and stabilization


def test_separation_on_long_linear_plan():
    verdicts = ci.verify_separation(ci.plan(lambda n: float(n), -1.0, 51))
    assert len(verdicts) == 50 and all(verdicts)


def test_tampered_plan_fails_at_first_step():
    verdicts = ci.verify_separation(ci.tampered(LINEAR, 2, 0.6))
    assert verdicts[0] is False
    assert all(verdicts[1:])


def test_single_slice_separation_vacuous():
    assert ci.verify_separation(ci.plan(lambda n: float(n), -1.0, 1)) == []


@settings(max_examples=30, deadline=None)
@given(steps=radii_steps)
def test_separation_holds_by_construction(steps):
    assert all(ci.verify_separation(plan_from_steps(steps)))


def test_stabilization_linear_plan():
    assert ci.verify_stabilization(LINEAR)
    assert ci.annulus_hits(LINEAR, 2) == [2, 3]


def test_stabilization_needs_four_steps():
    with pytest.raises(ValueError):
        ci.verify_stabilization(ci.plan(lambda n: float(n), -1.0, 3))


@settings(max_examples=30, deadline=None)
@given(steps=radii_steps)
def test_stabilization_property(steps):
    p = plan_from_steps(steps)
    assert ci.verify_stabilization(p)
    for i in range(1, 4):
        assert p.region(i, i + 2) == p.region(i, p.n_max)


# control sequences


def test_identity_propagator_passes_half_delta():
    seq = ci.propagate_bounds(LINEAR, 1.0)
    assert seq.a_table[2][:2] == [0.5, 0.5]
    assert all(a == 0.5 for row in seq.a_table.values() for a in row)


def test_halving_propagator_geometric():
    seq = ci.propagate_bounds(LINEAR, 1.0, ci.halving_propagator)
    assert seq.limits == [2.0**-i for i in range(1, LINEAR.n_max + 1)]


def test_b_factors_and_annulus_bounds():
    seq = ci.propagate_bounds(LINEAR, 1.0, ci.halving_propagator)
    for i, (a, b) in enumerate(zip(seq.limits, seq.b_table), start=1):
        assert b == pytest.approx(a / math.sqrt(LINEAR.limit_region(i).measure), rel=1e-15)
    assert seq.annulus_bounds[1] == min(seq.b_table[1], seq.b_table[2])


def test_non_monotone_propagator_rejected():
    with pytest.raises(ValueError):
        ci.propagate_bounds(LINEAR, 1.0, lambda tr, b: 1.0 / b)
    with pytest.raises(ValueError):
        ci.propagate_bounds(LINEAR, 0.0)


@settings(max_examples=20, deadline=None)
@given(steps=radii_steps, name=st.sampled_from(["identity", "halving", "lapse"]), delta=st.floats(1e-3, 10.0))
def test_control_sequences_stabilize(steps, name, delta):
    prop = {"identity": ci.identity_propagator, "halving": ci.halving_propagator, "lapse": ci.lapse_propagator}[name]
    seq = ci.propagate_bounds(plan_from_steps(steps), delta, prop)
    assert seq.stabilized()
    assert all(a > 0 for row in seq.a_table.values() for a in row)


# export


def test_plan_csv_and_diagram(tmp_path):
    path = tmp_path / "plan.csv"
    ci.write_plan_csv(LINEAR, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(ci.CSV_HEADER)
    assert len(lines) == LINEAR.n_max + 1
    text = ci.diagram(LINEAR, 3)
    assert text.count("\nA_") == 4
    assert "S_4" in text
