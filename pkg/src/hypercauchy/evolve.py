"""Time integration of mollified symmetric hyperbolic systems and the probes
built on it: epsilon families, C^1 breakdown scans, lifetime curves,
uniqueness/determinism probes and the energy-inequality audit.

The integrator is the Dormand-Prince 5(4) embedded pair.  After an accepted
step the step size may at most double, after a rejected one it is at least
halved.  Everything is deterministic: the same inputs always produce the
bitwise-identical trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .grid_field import (
    Field,
    Mollifier,
    c1_norm,
    derivative,
    l2_norm,
    multi_indices,
    sobolev_norm,
    weighted_inner,
)
from .system import HyperbolicSystem, mollified_rhs, validate_system

REACHED = "reached_t_end"
BREAKDOWN = "breakdown"
STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class SolveControls:
    """Tolerances, monitors and breakdown threshold for :func:`integrate`.

    ``c1_breakdown_threshold`` is absolute; when it is None the threshold is
    ``breakdown_factor`` times the initial C^1 norm (or ``breakdown_factor``
    itself for zero data).
    """

    rk_abs_tol: float = 1e-11
    rk_rel_tol: float = 1e-9
    max_step: float = 0.05
    c1_breakdown_threshold: float | None = None
    breakdown_factor: float = 1e3
    snapshot_interval: float = 0.05
    k_monitor: int = 4

    def __post_init__(self):
        if self.rk_abs_tol <= 0 or self.rk_rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0 or self.snapshot_interval <= 0:
            raise ValueError("max_step and snapshot_interval must be positive")
        if self.breakdown_factor <= 1:
            raise ValueError("breakdown_factor must exceed 1")
        if self.k_monitor < 0:
            raise ValueError("k_monitor must be nonnegative")

    def threshold_for(self, c1_initial: float) -> float:
        if self.c1_breakdown_threshold is not None:
            if self.c1_breakdown_threshold <= c1_initial:
                raise ValueError(
                    f"breakdown threshold {self.c1_breakdown_threshold} does not exceed "
                    f"the initial C1 norm {c1_initial}"
                )
            return float(self.c1_breakdown_threshold)
        return self.breakdown_factor * (c1_initial if c1_initial > 0 else 1.0)


@dataclass
class Trajectory:
    times: list
    states: list
    hk_log: list
    c1_log: list
    energy_weighted_log: list
    terminated_by: str
    threshold: float
    breakdown_time: float | None = None
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def final(self) -> Field:
        return self.states[-1]

    def csv_rows(self):
        return [
            (t, h, c, e)
            for t, h, c, e in zip(self.times, self.hk_log, self.c1_log, self.energy_weighted_log)
        ]


CSV_HEADER = ("t", "hk_norm", "c1_norm", "weighted_energy")


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


def _dp_step(rhs, t, y, h, k1):
    """One Dormand-Prince step; returns (y5, error estimate, last stage)."""
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(rhs(t + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks))
    return y5, err, ks[-1]


def weighted_energy(system: HyperbolicSystem, t: float, u: Field, k: int) -> float:
    """sum_{|alpha|<=k} (a0(t,x,u) d^alpha u, d^alpha u)."""
    const = getattr(system.a0, "constant", None)
    if const is not None and np.array_equal(const, np.eye(u.spec.width)):
        return sobolev_norm(u, k) ** 2
    x = u.spec.points()
    weight = system.a0(t, x, u.nodal())
    if const is None:
        weight = 0.5 * (weight + np.conj(np.swapaxes(weight, -1, -2)))
    total = 0.0
    for alpha in multi_indices(u.spec.dim, k):
        d = u
        for axis, order in enumerate(alpha):
            if order:
                d = derivative(d, axis, order)
        total += weighted_inner(d, d, weight).real
    return float(total)


def _initial_step(rhs, t0, y0, f0, atol, rtol, t_end, max_step):
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step, t_end)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, t_end)


def integrate(
    system: HyperbolicSystem,
    f: Field,
    m: Mollifier,
    t_end: float,
    ctl: SolveControls = SolveControls(),
    validate: bool = True,
) -> Trajectory:
    """Integrate du/dt = mollified_rhs(u) from u(0) = f up to t_end.

    Monitors (H^k norm, C^1 norm, weighted energy) are logged at every
    multiple of ``ctl.snapshot_interval`` and at the final time.  The run
    stops early with ``breakdown`` once the C^1 norm passes the threshold; the
    crossing time is then located by bisection inside the offending step.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if f.spec.width != system.width or f.spec.dim != system.dim:
        raise ValueError(f"initial data {f.spec} does not match the system")
    if validate:
        report = validate_system(system)
        if not report.passed:
            raise ValueError("system failed validation: " + "; ".join(report.failures))
    spec = f.spec

    def rhs(t, y):
        return mollified_rhs(system, m, t, Field(spec, y)).coefficients

    def monitors(t, y):
        u = Field(spec, y)
        return (
            u,
            sobolev_norm(u, ctl.k_monitor),
            c1_norm(u),
            weighted_energy(system, t, u, ctl.k_monitor),
        )

    atol, rtol = ctl.rk_abs_tol, ctl.rk_rel_tol
    y = np.array(f.coefficients)
    u0, hk0, c10, e0 = monitors(0.0, y)
    threshold = ctl.threshold_for(c10)
    traj = Trajectory([0.0], [u0], [hk0], [c10], [e0], REACHED, threshold)

    t = 0.0
    k1 = rhs(t, y)
    h = _initial_step(rhs, t, y, k1, atol, rtol, t_end, ctl.max_step)
    h_min = 1e-12 * t_end
    n_snap = 1
    while t < t_end:
        t_snap = min(n_snap * ctl.snapshot_interval, t_end)
        h_eff = min(h, t_snap - t, ctl.max_step)
        y_new, err, k7 = _dp_step(rhs, t, y, h_eff, k1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale)) if np.all(np.isfinite(y_new)) else np.inf
        if err_norm <= 1.0:
            traj.n_steps += 1
            landed = h_eff == t_snap - t
            t_prev, y_prev = t, y
            t = t_snap if landed else t + h_eff
            y, k1 = y_new, k7
            u = Field(spec, y)
            c1 = c1_norm(u)
            if not np.isfinite(c1) or c1 > threshold:
                traj.breakdown_time = _bisect_breakdown(rhs, spec, t_prev, y_prev, h_eff, threshold)
                _log(traj, t, *monitors(t, y))
                traj.terminated_by = BREAKDOWN
                return traj
            if landed:
                _log(traj, t, *monitors(t, y))
                n_snap += 1
            fac = 0.9 * err_norm ** (-0.2) if err_norm > 0 else 2.0
            # a step shortened only to hit a snapshot keeps the previous proposal
            h = max(h_eff * min(2.0, max(0.2, fac)), h if h_eff < h else 0.0)
        else:
            traj.n_rejected += 1
            fac = 0.9 * err_norm ** (-0.2) if np.isfinite(err_norm) else 0.2
            h = h_eff * max(0.2, min(0.5, fac))
            if h < h_min:
                traj.terminated_by = STEP_FAILURE
                return traj
    return traj


def _log(traj, t, u, hk, c1, energy):
    traj.times.append(t)
    traj.states.append(u)
    traj.hk_log.append(hk)
    traj.c1_log.append(c1)
    traj.energy_weighted_log.append(energy)


def _bisect_breakdown(rhs, spec, t0, y0, h, threshold, iterations=48) -> float:
    """Smallest s in (0, h] with C1(u(t0 + s)) > threshold, by bisection."""
    k1 = rhs(t0, y0)
    lo, hi = 0.0, h
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _dp_step(rhs, t0, y0, mid, k1)
        c1 = c1_norm(Field(spec, y_mid)) if np.all(np.isfinite(y_mid)) else np.inf
        if c1 > threshold:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * max(1.0, t0):
            break
    return t0 + hi


# epsilon families ---------------------------------------------------------------


@dataclass
class FamilyReport:
    epsilons: list
    trajectories: list
    gaps: list
    order: float | None
    complete: bool

    @property
    def accepted(self) -> Trajectory:
        return self.trajectories[-1]


def c0_l2_distance(a: Trajectory, b: Trajectory) -> float:
    """max over shared snapshot times of the L2 distance."""
    common = sorted(set(a.times) & set(b.times))
    ia = {t: i for i, t in enumerate(a.times)}
    ib = {t: i for i, t in enumerate(b.times)}
    return max(l2_norm(a.states[ia[t]] - b.states[ib[t]]) for t in common)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def solve_family(
    system: HyperbolicSystem, f: Field, eps_schedule, t_end: float, ctl: SolveControls = SolveControls()
) -> FamilyReport:
    """Integrate the mollified system for each epsilon and measure convergence.

    Gaps are C0-in-time L2 distances between consecutive members; the order is
    the log-log slope of those gaps against the coarser epsilon of each pair.
    """
    eps = [float(e) for e in eps_schedule]
    if not eps:
        raise ValueError("epsilon schedule is empty")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")
    validate_report = validate_system(system)
    if not validate_report.passed:
        raise ValueError("system failed validation: " + "; ".join(validate_report.failures))
    trajs = parallel_map(
        lambda e: integrate(system, f, Mollifier(e), t_end, ctl, validate=False), eps
    )
    complete = all(tr.terminated_by == REACHED for tr in trajs)
    gaps = []
    if complete:
        gaps = [c0_l2_distance(a, b) for a, b in zip(trajs, trajs[1:])]
    order = None
    if len(gaps) >= 2 and all(g > 0 for g in gaps):
        order = loglog_slope(eps[:-1], gaps)
    return FamilyReport(eps, trajs, gaps, order, complete)


# breakdown and lifetime -----------------------------------------------------------------


@dataclass
class BreakdownReport:
    breakdown_time: float | None
    terminated_by: str
    threshold: float
    trajectory: Trajectory

    @property
    def broke_down(self) -> bool:
        return self.terminated_by == BREAKDOWN


DEFAULT_SCAN_EPSILON = 1e-3


def breakdown_scan(
    system: HyperbolicSystem,
    f: Field,
    ctl: SolveControls,
    t_max: float,
    mollifier: Mollifier | None = None,
) -> BreakdownReport:
    """Run until the C^1 threshold is crossed or t_max is reached."""
    m = mollifier or Mollifier(DEFAULT_SCAN_EPSILON)
    traj = integrate(system, f, m, t_max, ctl)
    return BreakdownReport(traj.breakdown_time, traj.terminated_by, traj.threshold, traj)


@dataclass
class LifetimePoint:
    amplitude: float
    hk_norm: float
    lifetime: float
    broke_down: bool


@dataclass
class LifetimeCurve:
    points: list
    monotone: bool
    t_max: float

    def pairs(self):
        return [(p.hk_norm, p.lifetime) for p in self.points]


def lifetime_curve(
    system: HyperbolicSystem,
    f_base: Field,
    amplitudes,
    ctl: SolveControls,
    t_max: float,
    mollifier: Mollifier | None = None,
) -> LifetimeCurve:
    """Observed lifetime of a * f_base for each amplitude a.

    Only semilinear systems whose source vanishes at zero are accepted; for
    them u = 0 is a global solution and small data live long.  Points are
    returned sorted by initial H^k norm; ``monotone`` states that lifetimes do
    not increase with the norm.
    """
    if not (system.semilinear and system.punctured):
        raise ValueError("lifetime scans need a semilinear system with g(t, x, 0) = 0")

    def scan(a):
        report = breakdown_scan(system, a * f_base, ctl, t_max, mollifier)
        life = report.breakdown_time if report.broke_down else t_max
        return LifetimePoint(float(a), sobolev_norm(a * f_base, ctl.k_monitor), life, report.broke_down)

    points = sorted(parallel_map(scan, amplitudes), key=lambda p: (p.hk_norm, p.amplitude))
    lifetimes = [p.lifetime for p in points]
    monotone = all(b <= a for a, b in zip(lifetimes, lifetimes[1:]))
    return LifetimeCurve(points, monotone, t_max)


# uniqueness ---------------------------------------------------------------------


@dataclass
class DivergenceReport:
    delta_norms: list
    divergences: list
    growth_constants: list
    deterministic: bool

    @property
    def max_divergence(self) -> float:
        return max(self.divergences) if self.divergences else 0.0


def uniqueness_probe(
    system: HyperbolicSystem,
    f: Field,
    delta_perturbations,
    m: Mollifier,
    t_end: float,
    ctl: SolveControls = SolveControls(),
) -> DivergenceReport:
    """Compare the run from f with runs from f + delta, and repeat the base run."""
    base = integrate(system, f, m, t_end, ctl)
    repeat = integrate(system, f, m, t_end, ctl, validate=False)
    deterministic = base.times == repeat.times and all(
        np.array_equal(a.coefficients, b.coefficients) for a, b in zip(base.states, repeat.states)
    )
    deltas = list(delta_perturbations)
    runs = parallel_map(lambda d: integrate(system, f + d, m, t_end, ctl, validate=False), deltas)
    norms, divs, ks = [], [], []
    for d, run in zip(deltas, runs):
        nd = l2_norm(d)
        div = c0_l2_distance(base, run)
        norms.append(nd)
        divs.append(div)
        ks.append(div / nd if nd > 0 else 0.0)
    return DivergenceReport(norms, divs, ks, deterministic)


# energy audit -------------------------------------------------------------------


@dataclass
class AuditReport:
    times: np.ndarray
    energy: np.ndarray
    energy_rate: np.ndarray
    c1: np.ndarray
    phi: np.ndarray
    violations: int
    envelope: np.ndarray
    envelope_violations: int
    holdout_violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.envelope_violations == 0


def _monotone_fit(c1: np.ndarray, ratio: np.ndarray):
    order = np.argsort(c1, kind="stable")
    fitted = np.maximum.accumulate(ratio[order])
    knots = c1[order]

    def phi(c):
        idx = np.searchsorted(knots, c, side="right") - 1
        out = np.where(idx >= 0, fitted[np.clip(idx, 0, None)], 0.0)
        return out

    return phi


def energy_inequality_audit(traj: Trajectory, slack: float = 1e-6) -> AuditReport:
    """Audit dE/dt <= Phi(||u||_C1) (1 + E) along a trajectory.

    E is the logged weighted energy.  Phi is the smallest nondecreasing
    function satisfying the inequality at every snapshot.  The report also
    integrates the resulting Bihari-type envelope
    1 + E(t) <= (1 + E(0)) exp(int_0^t Phi(C1(s)) ds) and a hold-out test that
    fits Phi on even snapshots and checks the odd ones.
    """
    t = np.asarray(traj.times, float)
    e = np.asarray(traj.energy_weighted_log, float)
    c1 = np.asarray(traj.c1_log, float)
    if len(t) < 3:
        raise ValueError("the audit needs at least three snapshots")
    rate = np.gradient(e, t)
    ratio = np.maximum(rate, 0.0) / (1.0 + e)
    phi_fn = _monotone_fit(c1, ratio)
    phi = phi_fn(c1)
    tol = slack * (1.0 + np.abs(e))
    violations = int(np.sum(rate > phi * (1.0 + e) + tol))
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(t))])
    envelope = (1.0 + e[0]) * np.exp(integral) - 1.0
    env_viol = int(np.sum(e > envelope * (1.0 + 1e-3) + tol))
    even = _monotone_fit(c1[::2], ratio[::2])
    hold = int(np.sum(rate[1::2] > even(c1[1::2]) * (1.0 + e[1::2]) + tol[1::2]))
    return AuditReport(t, e, rate, c1, phi, violations, envelope, env_viol, hold)
