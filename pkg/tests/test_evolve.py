import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypercauchy.evolve import (
    BREAKDOWN,
    REACHED,
    SolveControls,
    breakdown_scan,
    energy_inequality_audit,
    integrate,
    lifetime_curve,
    loglog_slope,
    solve_family,
    uniqueness_probe,
)
from hypercauchy.grid_field import Field, GridSpec, Mollifier, l2_norm
from hypercauchy.system import HyperbolicSystem, advection, burgers, riccati_transport

S64 = GridSpec(modes=64)


def sine(spec=S64):
    return Field.from_function(spec, np.sin)


# controls


def test_controls_reject_bad_values():
    with pytest.raises(ValueError):
        SolveControls(rk_abs_tol=0.0)
    with pytest.raises(ValueError):
        SolveControls(breakdown_factor=1.0)
    with pytest.raises(ValueError):
        SolveControls(c1_breakdown_threshold=0.5).threshold_for(1.0)


def test_threshold_default_for_zero_data():
    assert SolveControls().threshold_for(0.0) == 1e3


# integrate


def test_advection_translates_sine():
    traj = integrate(advection(), sine(), Mollifier(1e-3), 1.0)
    assert traj.terminated_by == REACHED
    x = S64.coordinates()[0]
    assert np.max(np.abs(traj.final.values[0] - np.sin(x + 1.0))) <= 1e-4
    assert len(traj.times) == len(traj.hk_log) == len(traj.c1_log) == len(traj.energy_weighted_log)


def test_pure_source_growth_matches_exponential():
    sys = HyperbolicSystem.constant([[1.0]], [[[0.0]]], source=lambda t, x, u: u)
    traj = integrate(sys, Field.constant(S64, 1.0), Mollifier(1e-3), 1.0)
    assert np.max(np.abs(traj.final.values - np.e)) <= 1e-6


def test_zero_data_stays_zero():
    traj = integrate(riccati_transport(), Field.zeros(S64), Mollifier(0.1), 1.0)
    assert all(np.max(np.abs(u.coefficients)) == 0.0 for u in traj.states)


def test_integrate_rejects_mismatched_data():
    with pytest.raises(ValueError):
        integrate(advection(), Field.zeros(GridSpec(modes=16, width=2)), Mollifier(0.1), 1.0)
    with pytest.raises(ValueError):
        integrate(advection(), sine(), Mollifier(0.1), 0.0)


def test_integrate_is_bitwise_deterministic():
    a = integrate(riccati_transport(), 0.3 * sine(), Mollifier(0.05), 0.5)
    b = integrate(riccati_transport(), 0.3 * sine(), Mollifier(0.05), 0.5)
    assert a.times == b.times
    assert all(np.array_equal(u.coefficients, v.coefficients) for u, v in zip(a.states, b.states))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_skew_adjoint_generator_conserves_l2(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec(modes=32, width=2)
    c = rng.normal(size=(2, 3))
    f = Field.from_function(spec, lambda x: np.array([c[0, 0] * np.sin(x) + c[0, 1] * np.cos(2 * x), c[1, 2] * np.sin(3 * x)]))
    sys = HyperbolicSystem.constant(np.eye(2), [[[0.5, 1.0], [1.0, -0.2]]])
    traj = integrate(sys, f, Mollifier(0.05), 1.0, SolveControls(snapshot_interval=0.25))
    norms = [l2_norm(u) for u in traj.states]
    assert max(abs(n / norms[0] - 1) for n in norms) <= 1e-8


# families


def test_family_converges_for_advection():
    sched = [1e-1, 1e-2, 1e-3, 1e-4]
    rep = solve_family(advection(), sine(), sched, 1.0, SolveControls(snapshot_interval=0.25))
    assert rep.complete
    assert rep.order >= 0.45
    x = S64.coordinates()[0]
    assert np.max(np.abs(rep.accepted.final.values[0] - np.sin(x + 1.0))) <= 1e-4


def test_family_of_one_has_no_order():
    rep = solve_family(advection(), sine(), [0.1], 0.5)
    assert rep.order is None and rep.gaps == []
    assert rep.accepted is rep.trajectories[0]


def test_family_rejects_increasing_schedule():
    with pytest.raises(ValueError):
        solve_family(advection(), sine(), [0.01, 0.1], 0.5)


def test_family_marked_incomplete_on_breakdown():
    ctl = SolveControls(breakdown_factor=2.0)
    rep = solve_family(riccati_transport(), Field.constant(S64, 1.0), [0.1, 0.05], 1.5, ctl)
    assert not rep.complete and rep.order is None


def test_loglog_slope_of_power_law():
    x = np.array([1.0, 0.1, 0.01])
    assert loglog_slope(x, 3 * x**0.5) == pytest.approx(0.5, abs=1e-12)


# breakdown and lifetimes


def test_burgers_breakdown_near_one():
    # characteristics: u_x = cos / (1 - t cos) first blows up at t = 1
    spec = GridSpec(modes=256)
    rep = breakdown_scan(burgers(), sine(spec), SolveControls(breakdown_factor=10.0), 2.0)
    assert rep.broke_down
    assert 0.9 <= rep.breakdown_time <= 1.1


def test_advection_has_no_breakdown():
    rep = breakdown_scan(advection(), sine(), SolveControls(snapshot_interval=0.5), 10.0)
    assert not rep.broke_down and rep.terminated_by == REACHED
    hk = np.array(rep.trajectory.hk_log)
    assert np.all(np.isfinite(hk))
    assert np.max(np.abs(hk / hk[0] - 1)) <= 1e-8


def test_riccati_breakdown_near_one():
    rep = breakdown_scan(riccati_transport(), Field.constant(S64, 1.0), SolveControls(), 2.0)
    assert rep.terminated_by == BREAKDOWN
    assert rep.breakdown_time == pytest.approx(1.0, rel=0.1)


def test_lifetime_curve_inverse_amplitude():
    curve = lifetime_curve(riccati_transport(), Field.constant(S64, 1.0), [2.0, 1.0, 0.5, 0.0], SolveControls(), 3.0)
    by_amp = {p.amplitude: p for p in curve.points}
    for a in (2.0, 1.0, 0.5):
        assert by_amp[a].lifetime == pytest.approx(1 / a, rel=0.1)
    assert not by_amp[0.0].broke_down and by_amp[0.0].lifetime == 3.0
    assert curve.monotone


def test_lifetime_curve_refuses_quasilinear():
    with pytest.raises(ValueError):
        lifetime_curve(burgers(), sine(), [1.0], SolveControls(), 1.0)


# uniqueness


def test_uniqueness_probe_linear_growth():
    shape = Field.from_function(S64, lambda x: np.cos(3 * x))
    rep = uniqueness_probe(advection(), sine(), [0 * shape, 1e-6 * shape, 5e-7 * shape], Mollifier(1e-3), 1.0)
    assert rep.deterministic
    assert rep.divergences[0] == 0.0
    # transport preserves L2, so K = 1
    assert rep.growth_constants[1] == pytest.approx(1.0, rel=1e-6)
    assert rep.divergences[2] / rep.divergences[1] == pytest.approx(0.5, rel=0.2)


# energy audit


def test_audit_advection_energy_constant():
    traj = integrate(advection(), sine(), Mollifier(0.01), 1.0)
    rep = energy_inequality_audit(traj)
    assert rep.passed
    assert np.max(np.abs(rep.energy - rep.energy[0])) <= 1e-8 * rep.energy[0]


def test_audit_zero_solution():
    traj = integrate(advection(), Field.zeros(S64), Mollifier(0.01), 0.5)
    rep = energy_inequality_audit(traj)
    assert np.all(rep.energy == 0.0) and rep.passed


def test_audit_burgers_before_breakdown():
    traj = integrate(burgers(), sine(GridSpec(modes=128)), Mollifier(1e-3), 0.5, SolveControls(snapshot_interval=0.02))
    rep = energy_inequality_audit(traj)
    assert rep.passed
    assert np.all(np.isfinite(rep.envelope))


def test_audit_needs_three_snapshots():
    traj = integrate(advection(), sine(), Mollifier(0.01), 0.05)
    with pytest.raises(ValueError):
        energy_inequality_audit(traj)
