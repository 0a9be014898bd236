"""Experiment runners shared by the command-line driver and the acceptance suite.

Every runner takes a dict of already-validated parameters and returns an
:class:`Outcome`: a pass/fail verdict, human-readable summary lines, and CSV
tables (header plus rows) that the caller writes to disk.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import causal_induction as ci
from . import dirac_maxwell as dm
from . import geometry_lab as geo
from .estimates_lab import (
    COMMUTATOR_FORMS,
    CSV_HEADER as RATIO_HEADER,
    MOSER_VARIANTS,
    RandomSuite,
    check_commutator,
    check_mollifier_gap,
    check_moser,
)
from .evolve import (
    CSV_HEADER as TRAJECTORY_HEADER,
    REACHED,
    SolveControls,
    breakdown_scan,
    integrate,
    lifetime_curve,
    solve_family,
    uniqueness_probe,
)
from .grid_field import Field, GridSpec, Mollifier
from .system import BUNDLED_SYSTEMS, HyperbolicSystem


class ConfigError(ValueError):
    """A parameter is missing, unknown or out of range."""


@dataclass
class Outcome:
    kind: str
    passed: bool
    lines: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    texts: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)


# parameter parsing -----------------------------------------------------------------------


def _positive(cast):
    def parse(text):
        value = cast(text)
        if not value > 0:
            raise ConfigError(f"expected a positive value, got {text!r}")
        return value

    return parse


def _real(text):
    return float(text)


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise ConfigError(f"expected a nonnegative integer, got {text!r}")
    return value


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _positive_list(text):
    items = [float(s) for s in str(text).replace(",", " ").split()]
    if not items or any(not v > 0 for v in items):
        raise ConfigError(f"expected a list of positive numbers, got {text!r}")
    return items


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _choices(*options):
    def parse(text):
        items = [s for s in str(text).replace(",", " ").split()]
        bad = [s for s in items if s not in options]
        if not items or bad:
            raise ConfigError(f"expected a subset of {', '.join(options)}, got {text!r}")
        return items

    return parse


def _power_of_two(text):
    value = int(text)
    if value < 8 or value & (value - 1):
        raise ConfigError(f"modes must be a power of two >= 8, got {text!r}")
    return value


_pos_int = _positive(int)
_pos_real = _positive(float)
_systems = _choice(*BUNDLED_SYSTEMS)
_initials = _choice("sin", "cos", "constant")

_CONTROLS = {
    "rk_abs_tol": (_pos_real, 1e-11),
    "rk_rel_tol": (_pos_real, 1e-9),
    "max_step": (_pos_real, 0.05),
    "snapshot_interval": (_pos_real, 0.05),
    "breakdown_factor": (_pos_real, 1e3),
    "k_monitor": (_nonneg_int, 4),
}

SCHEMAS = {
    "solve": {
        "system": (_systems, "advection"),
        "modes": (_power_of_two, 64),
        "initial": (_initials, "sin"),
        "amplitude": (_real, 1.0),
        "epsilon": (_pos_real, 1e-3),
        "t_end": (_pos_real, 1.0),
        "hk_drift_tol": (_pos_real, None),
        **_CONTROLS,
    },
    "family": {
        "system": (_systems, "burgers"),
        "modes": (_power_of_two, 64),
        "initial": (_initials, "sin"),
        "amplitude": (_real, 1.0),
        "epsilons": (_positive_list, [2.0**-k for k in range(2, 8)]),
        "t_end": (_pos_real, 0.5),
        "min_order": (_pos_real, 0.45),
        **_CONTROLS,
    },
    "breakdown": {
        "system": (_systems, "burgers"),
        "modes": (_power_of_two, 256),
        "initial": (_initials, "sin"),
        "amplitude": (_real, 1.0),
        "epsilon": (_pos_real, 1e-3),
        "t_max": (_pos_real, 2.0),
        "expect_breakdown": (_bool, True),
        "window_lo": (_real, 0.9),
        "window_hi": (_real, 1.1),
        **{**_CONTROLS, "breakdown_factor": (_pos_real, 10.0)},
    },
    "lifetime": {
        "system": (_choice("riccati_transport"), "riccati_transport"),
        "modes": (_power_of_two, 64),
        "initial": (_initials, "constant"),
        "amplitudes": (_positive_list, [0.5, 1.0, 2.0]),
        "epsilon": (_pos_real, 1e-3),
        "t_max": (_pos_real, 4.0),
        "rel_tol": (_pos_real, 0.1),
        **_CONTROLS,
    },
    "moser": {
        "variants": (_choices(*MOSER_VARIANTS), list(MOSER_VARIANTS)),
        "seed": (_nonneg_int, 0),
        "count": (_pos_int, 100),
        "max_degree": (_pos_int, 8),
        "k": (_pos_int, 2),
        "stability_tol": (_pos_real, 0.05),
    },
    "commutator": {
        "forms": (_choices(*COMMUTATOR_FORMS), ["lipschitz"]),
        "coefficient": (_choice("sin", "cos2", "exp_cos"), "sin"),
        "modes": (_power_of_two, 512),
        "seed": (_nonneg_int, 2),
        "count": (_pos_int, 10),
        "max_degree": (_pos_int, 8),
        "epsilons": (_positive_list, [2.0**-k for k in range(1, 6)]),
        "slope_min": (_pos_real, 0.9),
        "slope_max": (_pos_real, 1.3),
    },
    "dm_demo": {
        "modes": (_power_of_two, 64),
        "t_end": (_pos_real, 1.0),
        "epsilon": (_pos_real, 1e-3),
        "drift_tol": (_pos_real, 1e-6),
        "lorenz_tol": (_pos_real, 1e-4),
        "violation": (_pos_real, 0.1),
        "control_time": (_pos_real, 0.5),
        "control_min": (_pos_real, 1e-2),
        "rk_abs_tol": (_pos_real, 1e-10),
        "rk_rel_tol": (_pos_real, 1e-10),
    },
    "geometry": {
        "constraint_form": (_choice("printed", "corrected"), "printed"),
        "seed": (_nonneg_int, 0),
        "points": (_pos_int, 8),
        "order_min": (_pos_real, 1.9),
        "residual_max": (_pos_real, 1e-7),
        "trivial_max": (_pos_real, 1e-12),
    },
    "causal": {
        "radius_step": (_pos_real, 1.0),
        "r1": (_real, -1.0),
        "n_max": (_pos_int, 51),
        "delta": (_pos_real, 1.0),
        "propagators": (_choices("identity", "halving", "lapse"), ["identity", "halving", "lapse"]),
    },
    "all": {
        "seed": (_nonneg_int, 0),
    },
}


def parse_parameters(kind: str, raw: dict, seed: int | None = None) -> dict:
    """Validate ``raw`` string parameters against the schema of ``kind``."""
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(SCHEMAS)}")
    schema = SCHEMAS[kind]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {kind}: {', '.join(unknown)}")
    out = {}
    for name, (parse, default) in schema.items():
        if name in raw:
            try:
                out[name] = parse(raw[name])
            except ConfigError as err:
                raise ConfigError(f"{name}: {err}") from None
            except ValueError:
                raise ConfigError(f"{name}: cannot parse {raw[name]!r}") from None
        else:
            out[name] = default
    if seed is not None:
        if "seed" not in schema:
            raise ConfigError(f"experiment kind {kind} takes no seed")
        out["seed"] = seed
    return out


# helpers ---------------------------------------------------------------------------------------


def _controls(p: dict) -> SolveControls:
    keys = [k for k in _CONTROLS if k in p]
    return SolveControls(**{k: p[k] for k in keys})


def _initial(p: dict, system: HyperbolicSystem) -> Field:
    spec = system.grid(p["modes"])
    shapes = {"sin": np.sin, "cos": np.cos, "constant": lambda x: np.ones_like(x)}
    return p.get("amplitude", 1.0) * Field.from_function(spec, shapes[p["initial"]])


def _trajectory_table(traj) -> tuple:
    return TRAJECTORY_HEADER, traj.csv_rows()


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# runners ----------------------------------------------------------------------------------


def run_solve(p: dict) -> Outcome:
    system = BUNDLED_SYSTEMS[p["system"]]()
    traj = integrate(system, _initial(p, system), Mollifier(p["epsilon"]), p["t_end"], _controls(p))
    hk = np.asarray(traj.hk_log)
    drift = float(np.max(np.abs(hk - hk[0])))
    ok = traj.terminated_by == REACHED
    if p["hk_drift_tol"] is not None:
        ok = ok and drift <= p["hk_drift_tol"]
    lines = [
        f"{p['system']}: {traj.terminated_by} at t = {traj.times[-1]:.6g} "
        f"({traj.n_steps} steps, {traj.n_rejected} rejected)",
        f"H^{p['k_monitor']} drift {drift:.3e}",
    ]
    return Outcome("solve", ok, lines, {"trajectory": _trajectory_table(traj)}, metrics={"hk_drift": drift})


def run_family(p: dict) -> Outcome:
    system = BUNDLED_SYSTEMS[p["system"]]()
    eps = sorted(p["epsilons"], reverse=True)
    report = solve_family(system, _initial(p, system), eps, p["t_end"], _controls(p))
    rows = [(a, b, g) for a, b, g in zip(eps, eps[1:], report.gaps)]
    ok = report.complete and report.order is not None and report.order >= p["min_order"]
    order = "none" if report.order is None else f"{report.order:.4f}"
    lines = [f"{p['system']}: fitted epsilon order {order} (need >= {p['min_order']}), complete = {report.complete}"]
    tables = {
        "gaps": (("epsilon_coarse", "epsilon_fine", "gap"), rows),
        "accepted": _trajectory_table(report.accepted),
    }
    return Outcome("family", ok, lines, tables, metrics={"order": report.order})


def run_breakdown(p: dict) -> Outcome:
    system = BUNDLED_SYSTEMS[p["system"]]()
    report = breakdown_scan(system, _initial(p, system), _controls(p), p["t_max"], Mollifier(p["epsilon"]))
    if p["expect_breakdown"]:
        t = report.breakdown_time
        ok = report.broke_down and p["window_lo"] <= t <= p["window_hi"]
        lines = [f"{p['system']}: breakdown at {t} (window [{p['window_lo']}, {p['window_hi']}])"]
    else:
        ok = report.terminated_by == REACHED
        lines = [f"{p['system']}: {report.terminated_by} up to t = {p['t_max']}"]
    tables = {"trajectory": _trajectory_table(report.trajectory)}
    return Outcome("breakdown", ok, lines, tables, metrics={"breakdown_time": report.breakdown_time})


def run_lifetime(p: dict) -> Outcome:
    system = BUNDLED_SYSTEMS[p["system"]]()
    base = _initial({**p, "amplitude": 1.0}, system)
    curve = lifetime_curve(system, base, p["amplitudes"], _controls(p), p["t_max"], Mollifier(p["epsilon"]))
    rows, ok = [], curve.monotone
    for pt in curve.points:
        predicted = min(1.0 / pt.amplitude, p["t_max"]) if pt.amplitude > 0 else p["t_max"]
        rel = abs(pt.lifetime - predicted) / predicted
        if p["initial"] == "constant":
            ok = ok and rel <= p["rel_tol"]
        rows.append((pt.amplitude, pt.hk_norm, pt.lifetime, int(pt.broke_down), predicted))
    lines = [f"amplitude {r[0]:g}: lifetime {r[2]:.4f} (closed form {r[4]:.4f})" for r in rows]
    lines.append(f"monotone in initial norm: {curve.monotone}")
    header = ("amplitude", "hk_norm", "lifetime", "broke_down", "closed_form")
    return Outcome("lifetime", ok, lines, {"curve": (header, rows)}, metrics={"monotone": curve.monotone})


def run_moser(p: dict) -> Outcome:
    suite = RandomSuite(seed=p["seed"], count=p["count"], max_degree=p["max_degree"])
    ok, lines, tables, metrics = True, [], {}, {}
    for variant in p["variants"]:
        report = check_moser(variant, suite, p["k"], composer=np.sin if variant == "third" else None)
        good = report.finite and report.resolution_change <= p["stability_tol"]
        ok = ok and good
        lines.append(
            f"{variant}: max ratio {report.max_ratio:.5g}, refined {report.max_ratio_refined:.5g}, "
            f"change {report.resolution_change:.2e} -> {_verdict(good)}"
        )
        tables[variant] = (RATIO_HEADER, report.rows)
        metrics[variant] = report.resolution_change
    return Outcome("moser", ok, lines, tables, metrics=metrics)


COEFFICIENTS = {
    "sin": np.sin,
    "cos2": lambda x: np.cos(2 * x),
    "exp_cos": lambda x: np.exp(np.cos(x)),
}


def run_commutator(p: dict) -> Outcome:
    a = Field.from_function(GridSpec(modes=p["modes"]), COEFFICIENTS[p["coefficient"]])
    suite = RandomSuite(seed=p["seed"], count=p["count"], max_degree=p["max_degree"])
    eps = sorted(p["epsilons"], reverse=True)
    ok, lines, tables, metrics = True, [], {}, {}
    for form in p["forms"]:
        report = check_commutator(form, a, suite, eps)
        good = report.finite
        if form == "lipschitz":
            good = good and p["slope_min"] <= report.slope <= p["slope_max"]
        ok = ok and good
        slope = "" if report.slope is None else f", slope {report.slope:.4f}"
        lines.append(f"{form}: max ratio {report.max_ratio:.5g}{slope} -> {_verdict(good)}")
        tables[form] = (RATIO_HEADER, report.rows)
        metrics[form] = report.slope
    return Outcome("commutator", ok, lines, tables, metrics=metrics)


def _dm_controls(p: dict) -> SolveControls:
    return SolveControls(rk_abs_tol=p["rk_abs_tol"], rk_rel_tol=p["rk_rel_tol"])


def run_dm_demo(p: dict) -> Outcome:
    state = dm.neutral_pair(p["modes"])
    ctl, m = _dm_controls(p), Mollifier(p["epsilon"])
    run = dm.evolve_dm(state, p["t_end"], ctl, m)
    violated = dm.with_potential(
        state,
        state.potential - Field.stack([
            Field.from_function(GridSpec(modes=p["modes"]), lambda x: p["violation"] * np.cos(x)),
            Field.zeros(GridSpec(modes=p["modes"])),
        ]),
        state.potential_dt,
    )
    control = dm.evolve_dm(violated, p["control_time"], ctl, m)
    charge, norms = run.charge_drift(), run.species_norm_drift()
    lorenz, control_lorenz = max(run.lorenz_log), control.lorenz_log[-1]
    conserved = charge <= p["drift_tol"] and norms <= p["drift_tol"]
    gauge_ok = lorenz <= p["lorenz_tol"] and control_lorenz > p["control_min"]
    lines = [
        f"charge drift {charge:.3e}, species norm drift {norms:.3e} (tol {p['drift_tol']:g}) -> {_verdict(conserved)}",
        f"Lorenz residual max {lorenz:.3e} (tol {p['lorenz_tol']:g}); violated control at "
        f"t = {p['control_time']:g}: {control_lorenz:.3e} (need > {p['control_min']:g}) -> {_verdict(gauge_ok)}",
    ]
    tables = {
        "run": (run.csv_header(), run.csv_rows()),
        "control": (control.csv_header(), control.csv_rows()),
    }
    metrics = {"charge_drift": charge, "norm_drift": norms, "lorenz_max": lorenz, "control_lorenz": control_lorenz}
    return Outcome("dm_demo", conserved and gauge_ok, lines, tables, metrics=metrics)


@dataclass
class GeometryRow:
    name: str
    residual: float
    order: float
    trivial: bool
    passed: bool


def geometry_rows(form: str = "printed", seed: int = 0, count: int = 8, order_min: float = 1.9,
                  residual_max: float = 1e-7, trivial_max: float = 1e-12) -> list:
    """Run every identity checker on the bundled fixtures."""
    rows = []

    def add(name, report, trivial=False):
        if trivial:
            ok = report.residual <= trivial_max
        else:
            ok = report.residual <= residual_max and (report.exact or report.order >= order_min)
        rows.append(GeometryRow(name, report.residual, report.order, trivial, ok))

    for n in (2, 3, 4):
        pts = geo.sample_points(n, count, seed)
        omega, u = geo.random_two_form(n, seed + 1), geo.random_scalar(n, seed + 2)
        add(f"codifferential_n{n}", geo.check_conformal_codifferential(omega, u, n, pts))
        add(f"codifferential_n{n}_trivial", geo.check_conformal_codifferential(omega, geo.constant_field(0.0), n, pts), True)
        psi, pot, f = geo.random_spinor(n, seed + 3), geo.random_one_form(n, seed + 4), geo.random_scalar(n, seed + 5)
        add(f"gauge_n{n}", geo.check_dirac_covariance("gauge", psi, pot, f, n, 0.7, pts))
        add(f"gauge_n{n}_trivial", geo.check_dirac_covariance("gauge", psi, pot, geo.constant_field(0.4), n, 0.7, pts), True)
        add(f"conformal_n{n}", geo.check_dirac_covariance("conformal", psi, pot, f, n, 0.7, pts))
        cur = geo.check_dirac_covariance("current_scaling", psi, pot, f, n, 0.7, pts)
        ok = abs(cur.extras["slope"] + (n - 2)) <= 1e-9 and cur.residual <= residual_max
        rows.append(GeometryRow(f"current_scaling_n{n}", cur.residual, cur.order, False, ok))
    pts = geo.sample_points(4, count, seed, time=0.0)
    pot = geo.random_one_form(4, seed + 7)
    for chart_name, chart in (("minkowski", geo.MetricChart("minkowski", 4)), ("sliced", geo.sliced_chart())):
        reports = geo.check_constraints_3p1(pot, chart, pts, form=form)
        for key, report in reports.items():
            add(f"{key}_{chart_name}", report)
    add("obstruction", geo.check_obstruction(geo.random_one_form(4, seed + 8), pts))
    return rows


def run_geometry(p: dict) -> Outcome:
    rows = geometry_rows(p["constraint_form"], p["seed"], p["points"], p["order_min"], p["residual_max"], p["trivial_max"])
    lines = [
        f"{r.name}: residual {r.residual:.3e}, order {r.order:.3g} -> {_verdict(r.passed)}" for r in rows
    ]
    table = (("check", "residual", "order", "trivial", "passed"),
             [(r.name, r.residual, r.order, int(r.trivial), int(r.passed)) for r in rows])
    return Outcome("geometry", all(r.passed for r in rows), lines, {"checks": table})


PROPAGATORS = {
    "identity": ci.identity_propagator,
    "halving": ci.halving_propagator,
    "lapse": ci.lapse_propagator,
}


def run_causal(p: dict) -> Outcome:
    step = p["radius_step"]
    plan = ci.plan(lambda n: step * n, p["r1"], p["n_max"])
    separation = ci.verify_separation(plan)
    stable = ci.verify_stabilization(plan)
    lines = [
        f"separation holds for n = 1..{len(separation)}: {all(separation)}",
        f"region stabilization and annulus property: {stable}",
    ]
    ok = all(separation) and stable
    control_rows = []
    for name in p["propagators"]:
        seq = ci.propagate_bounds(plan, p["delta"], PROPAGATORS[name])
        good = seq.stabilized()
        ok = ok and good
        lines.append(f"{name} propagator: a_1..a_4 = {[f'{a:.4g}' for a in seq.limits[:4]]}, stabilized {good}")
        for i, (a, b) in enumerate(zip(seq.limits, seq.b_table), start=1):
            lower = seq.annulus_bounds[i - 1] if i <= len(seq.annulus_bounds) else ""
            control_rows.append((name, i, a, b, lower))
    tables = {
        "plan": (ci.CSV_HEADER, ci.plan_rows(plan)),
        "controls": (("propagator", "i", "a_i", "b_i", "annulus_lower"), control_rows),
    }
    texts = {"diagram": ci.diagram(ci.plan(lambda n: step * n, p["r1"], 4)) + "\n"}
    return Outcome("causal", ok, lines, tables, texts)


# acceptance suite -------------------------------------------------------------------------------


@dataclass
class Check:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None = None
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        budget = f" budget {self.budget:g}s" if self.budget else ""
        return f"[{_verdict(self.passed)}] {self.number:2d} {self.title}: {self.detail} ({self.elapsed:.2f}s{budget})"


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def criterion_1(seed: int = 0) -> Check:
    eps = [2.0**-j for j in range(3, 11)]
    report, dt = _timed(lambda: check_mollifier_gap(RandomSuite(seed=seed + 1, count=20, max_degree=8), eps))
    ok = report.finite and report.slope >= 0.9 and dt < 10
    detail = f"max ratio {report.max_ratio:.4g}, slope {report.slope:.4f} (need >= 0.9)"
    return Check(1, "mollifier gap", ok, detail, dt, 10, {"slope": report.slope, "max_ratio": report.max_ratio})


def criterion_2(seed: int = 0) -> Check:
    out, dt = _timed(lambda: run_moser(parse_parameters("moser", {}, seed)))
    worst = max(out.metrics.values())
    ok = out.passed and dt < 60
    return Check(2, "Moser suites", ok, f"largest resolution change {worst:.2e} (need <= 5%)", dt, 60, out.metrics)


def criterion_3(seed: int = 0) -> Check:
    out, dt = _timed(lambda: run_family(parse_parameters("family", {})))
    order = out.metrics["order"]
    ok = out.passed and dt < 120
    return Check(3, "epsilon convergence rate", ok, f"Burgers at 64 modes, order {order:.4f} (need >= 0.45)", dt, 120, out.metrics)


def criterion_4(seed: int = 0) -> Check:
    (burg, adv), dt = _timed(lambda: (
        run_breakdown(parse_parameters("breakdown", {})),
        run_solve(parse_parameters("solve", {"t_end": "10", "snapshot_interval": "0.5", "hk_drift_tol": "1e-8"})),
    ))
    hk = [row[1] for row in adv.tables["trajectory"][1]]
    rel = max(abs(h / hk[0] - 1) for h in hk)
    ok = burg.passed and adv.passed and rel <= 1e-8
    detail = f"Burgers breakdown at t = {burg.metrics['breakdown_time']:.4f}; advection H4 drift {adv.metrics['hk_drift']:.2e} abs, {rel:.2e} rel"
    return Check(4, "extension criterion", ok, detail, dt, None, {"breakdown_time": burg.metrics["breakdown_time"], "hk_drift": rel})


def criterion_5(seed: int = 0) -> Check:
    out, dt = _timed(lambda: run_lifetime(parse_parameters("lifetime", {})))
    rows = out.tables["curve"][1]
    worst = max(abs(r[2] - r[4]) / r[4] for r in rows)
    detail = f"lifetimes {[round(float(r[2]), 4) for r in rows]} vs 1/c, worst rel error {worst:.3f}, monotone {out.metrics['monotone']}"
    return Check(5, "lifetime bound", out.passed, detail, dt, None, {"worst": worst})


def _linear_systems() -> dict:
    return {
        "advection": BUNDLED_SYSTEMS["advection"](),
        "wave_pair": HyperbolicSystem.constant(np.eye(2), [[[0.0, 1.0], [1.0, 0.0]]], name="wave_pair"),
    }


def criterion_6(seed: int = 0) -> Check:
    def body():
        results = {}
        for name, system in _linear_systems().items():
            spec = system.grid(64)
            f = Field.from_function(spec, lambda x: np.array([np.sin(x), np.cos(2 * x)][: system.width]))
            shape = Field.from_function(spec, lambda x: np.array([np.cos(3 * x), np.sin(x)][: system.width]))
            deltas = [d * shape for d in (1e-6, 5e-7, 2.5e-7)]
            report = uniqueness_probe(system, f, deltas, Mollifier(1e-3), 1.0)
            zero = uniqueness_probe(system, f, [0.0 * shape], Mollifier(1e-3), 1.0)
            ks = report.growth_constants
            spread = max(abs(k / ks[0] - 1) for k in ks)
            results[name] = (report.deterministic and zero.max_divergence == 0.0, spread)
        return results

    results, dt = _timed(body)
    ok = all(det and spread <= 0.2 for det, spread in results.values())
    detail = ", ".join(f"{k}: bitwise {d}, K spread {s:.2e}" for k, (d, s) in results.items())
    return Check(6, "uniqueness", ok, detail, dt, None)


def criterion_7(seed: int = 0) -> Check:
    p = parse_parameters("dm_demo", {})
    out, dt = _timed(lambda: run_dm_demo(p))
    m = out.metrics
    ok = m["charge_drift"] <= 1e-6 and m["norm_drift"] <= 1e-6 and dt < 60
    detail = f"charge drift {m['charge_drift']:.2e}, species norm drift {m['norm_drift']:.2e}"
    return Check(7, "Dirac-Maxwell conservation", ok, detail, dt, 60, m)


def criterion_8(seed: int = 0) -> Check:
    p = parse_parameters("dm_demo", {})
    state = dm.neutral_pair(p["modes"])
    spec = GridSpec(modes=p["modes"])

    def body():
        ctl, m = _dm_controls(p), Mollifier(p["epsilon"])
        run = dm.evolve_dm(state, 1.0, ctl, m)
        shift = Field.stack([Field.from_function(spec, lambda x: 0.1 * np.cos(x)), Field.zeros(spec)])
        bad = dm.with_potential(state, state.potential - shift, state.potential_dt)
        control = dm.evolve_dm(bad, 0.5, ctl, m)
        return max(run.lorenz_log), control.lorenz_log[-1]

    (good, bad), dt = _timed(body)
    ok = good <= 1e-4 and bad > 1e-2
    return Check(8, "Lorenz gauge propagation", ok, f"constrained max {good:.2e}, violated control at 0.5 {bad:.3e}", dt, None)


def criterion_9(seed: int = 0) -> Check:
    def body():
        worst = 0.0
        for s in range(100):
            integral, charge = dm.constraint_charge_identity(dm.random_state(seed + s))
            worst = max(worst, abs(integral - charge))
        pts = geo.sample_points(4, time=0.0)
        report = geo.check_obstruction(geo.periodic_one_form(4, seed + 8), pts)
        return worst, abs(report.extras["slice_integral"])

    (worst, integral), dt = _timed(body)
    ok = worst <= 1e-10 and integral <= 1e-8
    return Check(9, "neutrality obstruction", ok, f"identity gap {worst:.2e} over 100 states, slice integral {integral:.2e}", dt, None)


def criterion_10(seed: int = 0, form: str = "printed") -> Check:
    rows, dt = _timed(lambda: geometry_rows(form, seed))
    failing = [r for r in rows if not r.passed]
    ok = not failing and dt < 30
    if failing:
        detail = "failing: " + ", ".join(f"{r.name} (residual {r.residual:.2e}, order {r.order:.3g})" for r in failing)
    else:
        detail = f"{len(rows)} checks within order >= 1.9 and residual <= 1e-7"
    title = "identity lab" + ("" if form == "printed" else f" ({form} constraint 2)")
    return Check(10, title, ok, detail, dt, 30, {"failing": [r.name for r in failing]})


def criterion_11(seed: int = 0) -> Check:
    def body():
        p = ci.plan(lambda n: float(n), -1.0, 51)
        worst = 0.0
        for i in range(2, 52):
            lo = p.R(i - 1) - 2 * math.exp(p.r_seq[i - 2])
            iv = p.limit_region(i).intervals[-1]
            worst = max(worst, abs(iv.lo - lo), abs(iv.hi - i))
        sep = ci.verify_separation(p)
        stable = ci.verify_stabilization(p)
        controls = all(ci.propagate_bounds(p, 1.0, fn).stabilized() for fn in PROPAGATORS.values())
        return worst, all(sep) and len(sep) == 50, stable, controls

    (worst, sep, stable, controls), dt = _timed(body)
    ok = worst <= 1e-12 and sep and stable and controls and dt < 1
    detail = f"endpoint error {worst:.1e}, separation n<=50 {sep}, regions stable {stable}, controls stable {controls}"
    return Check(11, "causal construction", ok, detail, dt, 1)


CRITERIA: tuple = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
)


def narrative_check(checks: list) -> Check:
    ok = all(c.passed for c in checks)
    failed = [c.number for c in checks if not c.passed]
    detail = "criteria 1-11 jointly" + (f"; failing {failed}" if failed else " all pass")
    return Check(12, "desk-scale substitute for global existence", ok, detail, sum(c.elapsed for c in checks))


def run_all(p: dict) -> Outcome:
    checks = [fn(p["seed"]) for fn in CRITERIA]
    checks.append(narrative_check(checks))
    lines = [c.line() for c in checks]
    rows = [(c.number, c.title, int(c.passed), c.detail) for c in checks]
    return Outcome("all", all(c.passed for c in checks), lines, {"criteria": (("criterion", "title", "passed", "detail"), rows)})


RUNNERS: dict[str, Callable[[dict], Outcome]] = {
    "solve": run_solve,
    "family": run_family,
    "breakdown": run_breakdown,
    "lifetime": run_lifetime,
    "moser": run_moser,
    "commutator": run_commutator,
    "dm_demo": run_dm_demo,
    "geometry": run_geometry,
    "causal": run_causal,
    "all": run_all,
}
