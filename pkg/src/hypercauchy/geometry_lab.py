"""Finite-difference verification of the Dirac-Maxwell tensor identities.

Everything works pointwise on analytic inputs in flat coordinates of
R^{1,n-1} (n <= 4).  Points are arrays of shape (n, P) with coordinate 0 the
time; an evaluator maps such an array to values of shape (*value_shape, P).

Every checker evaluates both sides of an identity at step ``h`` and again at
two coarse steps, from which a Richardson order is estimated.  Residuals
that stay at round-off on the coarse steps are reported as exact (order inf).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-3
COARSE_STEPS = {2: (0.02, 0.01), 4: (0.1, 0.05)}
EXACT_TOL = 1e-11


@dataclass(frozen=True)
class AnalyticField:
    """A pure evaluator with its finite-difference settings and test box."""

    evaluator: Callable
    fd_step: float = DEFAULT_STEP
    fd_order: int = 2
    box: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.fd_order not in (2, 4):
            raise ValueError("fd_order must be 2 or 4")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")

    def __call__(self, p):
        return np.asarray(self.evaluator(p))

    def check_points(self, p) -> np.ndarray:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        lo, hi = self.box
        if np.any(p < lo) or np.any(p > hi):
            raise ValueError(f"points leave the test box [{lo}, {hi}]")
        return p


def constant_field(value) -> AnalyticField:
    value = np.asarray(value)

    def ev(p):
        return np.broadcast_to(value.reshape(value.shape + (1,)), value.shape + (p.shape[1],)).copy()

    return AnalyticField(ev)


# finite differences -------------------------------------------------------------


def _shift(p, axis, d):
    q = np.array(p, dtype=float)
    q[axis] += d
    return q


def fd_gradient(f, p, h, order=2) -> np.ndarray:
    """Central differences; result has shape (n, *value_shape, P)."""
    out = []
    for k in range(p.shape[0]):
        if order == 2:
            d = (f(_shift(p, k, h)) - f(_shift(p, k, -h))) / (2 * h)
        else:
            d = (
                -f(_shift(p, k, 2 * h))
                + 8 * f(_shift(p, k, h))
                - 8 * f(_shift(p, k, -h))
                + f(_shift(p, k, -2 * h))
            ) / (12 * h)
        out.append(d)
    return np.array(out)


def _mixed(f, p, i, j, h):
    q = lambda si, sj: f(_shift(_shift(p, i, si * h), j, sj * h))
    return (q(1, 1) - q(1, -1) - q(-1, 1) + q(-1, -1)) / (4 * h * h)


def fd_jet2(f, p, h, order=2):
    """Value, gradient and Hessian from compact central stencils.

    Hessian diagonal: 3-point (order 2) or 5-point (order 4) stencils;
    off-diagonal: the 4-point cross stencil, Richardson-combined for order 4.
    """
    n = p.shape[0]
    f0 = f(p)
    grad = fd_gradient(f, p, h, order)
    hess = np.zeros((n, n) + f0.shape, dtype=np.result_type(f0, float))
    for i in range(n):
        if order == 2:
            hess[i, i] = (f(_shift(p, i, h)) - 2 * f0 + f(_shift(p, i, -h))) / (h * h)
        else:
            hess[i, i] = (
                -f(_shift(p, i, 2 * h))
                + 16 * f(_shift(p, i, h))
                - 30 * f0
                + 16 * f(_shift(p, i, -h))
                - f(_shift(p, i, -2 * h))
            ) / (12 * h * h)
        for j in range(i + 1, n):
            m = _mixed(f, p, i, j, h)
            if order == 4:
                m = (4 * m - _mixed(f, p, i, j, 2 * h)) / 3
            hess[i, j] = hess[j, i] = m
    return f0, grad, hess


# metric machinery --------------------------------------------------------------------


def minkowski(n: int) -> np.ndarray:
    return np.diag([-1.0] + [1.0] * (n - 1))


@dataclass(frozen=True)
class MetricChart:
    """Flat, conformally flat (e^{2 expo} eta) or sliced (-beta dt^2 + a^2 delta) chart."""

    form: str = "minkowski"
    dim: int = 4
    expo: AnalyticField | None = None
    beta: AnalyticField | None = None
    slice_factor: AnalyticField | None = None

    def __post_init__(self):
        if self.form not in ("minkowski", "conformally_flat", "sliced"):
            raise ValueError(f"unknown chart form {self.form!r}")
        if not 2 <= self.dim <= 4:
            raise ValueError("dim must be between 2 and 4")
        if self.form == "conformally_flat" and self.expo is None:
            raise ValueError("a conformally flat chart needs an exponent field")
        if self.form == "sliced" and (self.beta is None or self.slice_factor is None):
            raise ValueError("a sliced chart needs beta and slice_factor")

    def lapse_and_factor(self, p):
        n = p.shape[1]
        if self.form == "sliced":
            return self.beta(p), self.slice_factor(p)
        return np.ones(n), np.ones(n)

    def check_positive(self, p):
        if self.form == "sliced":
            b, a = self.lapse_and_factor(p)
            if np.any(b <= 0) or np.any(a <= 0):
                raise ValueError("beta and slice_factor must be positive on the test box")

    def metric(self, p) -> np.ndarray:
        eta = minkowski(self.dim)[:, :, None] * np.ones(p.shape[1])
        if self.form == "minkowski":
            return eta
        if self.form == "conformally_flat":
            return np.exp(2 * self.expo(p)) * eta
        b, a = self.lapse_and_factor(p)
        g = a**2 * eta
        g[0, 0] = -b
        return g


def _inv(g):
    return np.moveaxis(np.linalg.inv(np.moveaxis(g, -1, 0)), 0, -1)


def christoffel_jet(metric, p, h, order=2):
    """Metric, its inverse, Gamma^d_ab and d_e Gamma^d_ab (index order e, d, a, b)."""
    g, dg, d2g = fd_jet2(metric, p, h, order)
    ginv = _inv(g)
    t = np.einsum("acbP->cabP", dg) + np.einsum("bcaP->cabP", dg) - dg
    gam = 0.5 * np.einsum("dcP,cabP->dabP", ginv, t)
    dt = np.einsum("eacbP->ecabP", d2g) + np.einsum("ebcaP->ecabP", d2g) - d2g
    dginv = -np.einsum("dxP,exyP,ycP->edcP", ginv, dg, ginv)
    dgam = 0.5 * (np.einsum("edcP,cabP->edabP", dginv, t) + np.einsum("dcP,ecabP->edabP", ginv, dt))
    return g, ginv, gam, dgam


def christoffel(metric, p, h, order=2):
    """Gamma^d_ab from first differences of the metric only."""
    g = metric(p)
    dg = fd_gradient(metric, p, h, order)
    ginv = _inv(g)
    t = np.einsum("acbP->cabP", dg) + np.einsum("bcaP->cabP", dg) - dg
    return 0.5 * np.einsum("dcP,cabP->dabP", ginv, t)


def ricci(gam, dgam) -> np.ndarray:
    """R_ab = d_c G^c_ab - d_b G^c_ac + G^c_cd G^d_ab - G^c_bd G^d_ac."""
    return (
        np.einsum("ccabP->abP", dgam)
        - np.einsum("bcacP->abP", dgam)
        + np.einsum("ccdP,dabP->abP", gam, gam)
        - np.einsum("cbdP,dacP->abP", gam, gam)
    )


# reports --------------------------------------------------------------------------------


@dataclass
class ResidualReport:
    name: str
    h: float
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float
    coarse_steps: tuple = ()
    coarse_residuals: tuple = ()
    order: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.order == np.inf

    @property
    def richardson_ratio(self) -> float:
        if len(self.coarse_residuals) < 2 or self.coarse_residuals[1] == 0:
            return np.inf
        return self.coarse_residuals[0] / self.coarse_residuals[1]

    def rows(self):
        """(point, lhs, rhs, residual, h, order): the worst component per point."""
        lhs = np.reshape(self.lhs, (-1, self.lhs.shape[-1]))
        rhs = np.reshape(self.rhs, (-1, self.rhs.shape[-1]))
        out = []
        for i in range(lhs.shape[-1]):
            diff = np.abs(lhs[:, i] - rhs[:, i])
            c = int(np.argmax(diff))
            out.append((i, complex(lhs[c, i]), complex(rhs[c, i]), float(diff[c]), self.h, self.order))
        return out


CSV_HEADER = ("point", "lhs", "rhs", "residual", "h", "order")


def _max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0


def residual_report(name, sides, h, order, extras=None) -> ResidualReport:
    """``sides(h)`` returns (lhs, rhs); evaluate at h and at the coarse pair."""
    lhs, rhs = sides(h)
    coarse = COARSE_STEPS[order]
    res = tuple(_max_abs(*sides(hc)) for hc in coarse)
    if res[0] <= EXACT_TOL:
        est = np.inf
    elif res[1] == 0:
        est = np.inf
    else:
        est = float(np.log(res[0] / res[1]) / np.log(coarse[0] / coarse[1]))
    return ResidualReport(name, h, lhs, rhs, _max_abs(lhs, rhs), coarse, res, est, extras or {})


# Clifford algebra ---------------------------------------------------------------------


def clifford_generators(n: int):
    """gamma_0..gamma_{n-1} with gamma_a gamma_b + gamma_b gamma_a = -2 eta_ab, and pairing gamma_0."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    if n == 2:
        gs = [sx, np.array([[0, 1], [-1, 0]], dtype=complex)]
    elif n == 3:
        gs = [sz, 1j * sx, 1j * sy]
    elif n == 4:
        eye, zero = np.eye(2), np.zeros((2, 2))
        gs = [np.block([[eye, zero], [zero, -eye]]).astype(complex)]
        gs += [np.block([[zero, s], [-s, zero]]) for s in (sx, sy, sz)]
    else:
        raise ValueError("n must be 2, 3 or 4")
    return np.array(gs), gs[0]


def clifford_defect(n: int) -> float:
    gs, pairing = clifford_generators(n)
    eta = minkowski(n)
    eye = np.eye(gs.shape[1])
    worst = 0.0
    for a in range(n):
        worst = max(worst, float(np.max(np.abs(pairing @ gs[a] - (pairing @ gs[a]).conj().T))))
        for b in range(n):
            worst = max(worst, float(np.max(np.abs(gs[a] @ gs[b] + gs[b] @ gs[a] + 2 * eta[a, b] * eye))))
    return worst


def _clifford_apply(gam, psi):
    return np.einsum("ij,jP->iP", gam, psi)


def dirac_operator(psi, potential, mu, n, p, h, order=2) -> np.ndarray:
    """D^A psi = i sum_a eps_a gamma_a d_a psi - mu sum_a eps_a A_a gamma_a psi."""
    gs, _ = clifford_generators(n)
    eps = np.diag(minkowski(n))
    dpsi = fd_gradient(psi, p, h, order)
    val = psi(p)
    out = np.zeros(val.shape, dtype=complex)
    a = potential(p) if potential is not None else None
    for k in range(n):
        out += 1j * eps[k] * _clifford_apply(gs[k], dpsi[k])
        if a is not None and mu != 0:
            out -= mu * eps[k] * a[k] * _clifford_apply(gs[k], val)
    return out


def conformal_dirac(phi, potential, mu, n, expo, p, h, order=2) -> np.ndarray:
    """Dirac operator of e^{2 expo} eta acting on phi, through the spin connection.

    Frame e_a = e^{-expo} d_a.  Connection one-form
    Omega_a = 1/4 sum_{b,c} eps_b eps_c g(nabla_{e_a} e_b, e_c) gamma_b gamma_c
    with g(nabla_{e_a} e_b, e_c) = e^{-expo}(Gamma^d_ab eta_dc - d_a expo eta_bc),
    the Christoffel symbols coming from differences of the rescaled metric.
    """
    gs, _ = clifford_generators(n)
    eta = minkowski(n)
    eps = np.diag(eta)
    chart = MetricChart("conformally_flat", n, expo=expo)
    gam = christoffel(chart.metric, p, h, order)
    u = expo(p)
    du = fd_gradient(expo, p, h, order)
    eu = np.exp(-u)
    conn = eu * (np.einsum("dabP,dc->abcP", gam, eta) - np.einsum("aP,bc->abcP", du, eta))
    val = phi(p)
    dphi = fd_gradient(phi, p, h, order)
    a = potential(p) if potential is not None else None
    out = np.zeros(val.shape, dtype=complex)
    for k in range(n):
        cov = eu * dphi[k]
        for b in range(n):
            for c in range(n):
                if b != c:
                    cov = cov + 0.25 * eps[b] * eps[c] * conn[k, b, c] * _clifford_apply(gs[b] @ gs[c], val)
        out += 1j * eps[k] * _clifford_apply(gs[k], cov)
        if a is not None and mu != 0:
            out -= mu * eps[k] * eu * a[k] * _clifford_apply(gs[k], val)
    return out


def conformal_dirac_explicit(phi, potential, mu, n, expo, p, h, order=2) -> np.ndarray:
    """e^{-expo}(D^A phi + i (n-1)/2 grad(expo) . phi), the closed-form alternative."""
    gs, _ = clifford_generators(n)
    eps = np.diag(minkowski(n))
    du = fd_gradient(expo, p, h, order)
    val = phi(p)
    corr = sum(eps[k] * du[k] * _clifford_apply(gs[k], val) for k in range(n))
    return np.exp(-expo(p)) * (dirac_operator(phi, potential, mu, n, p, h, order) + 0.5j * (n - 1) * corr)


def current(psi_values, n, vector=None) -> np.ndarray:
    """j_psi(X) = psi^* P X psi for X given by frame components (default d_t)."""
    gs, pairing = clifford_generators(n)
    x = np.zeros(n) if vector is None else np.asarray(vector, dtype=float)
    if vector is None:
        x[0] = 1.0
    mat = pairing @ np.einsum("a,aij->ij", x, gs)
    return np.einsum("iP,ij,jP->P", psi_values.conj(), mat, psi_values).real


# checkers ----------------------------------------------------------------------------------


def _setup(points, *fields):
    lead = next(f for f in fields if f is not None)
    p = lead.check_points(points)
    for f in fields:
        if f is not None:
            f.check_points(p)
    return p, lead.fd_step, lead.fd_order


def _codifferential_flat(omega, p, h, order):
    """(d*_eta omega)_b = -eta^{ac} d_c omega_ab."""
    eta_inv = minkowski(p.shape[0])
    dw = fd_gradient(omega, p, h, order)
    return -np.einsum("ac,cabP->bP", eta_inv, dw)


def check_conformal_codifferential(omega: AnalyticField, expo: AnalyticField, n: int, points) -> ResidualReport:
    """d*_{e^{2u} eta} omega against e^{-2u}(d*_eta omega - (n-4) grad u _| omega) for a 2-form."""
    if not 2 <= n <= 4:
        raise ValueError("n must be between 2 and 4")
    p, h0, order = _setup(points, omega, expo)
    if p.shape[0] != n:
        raise ValueError("points do not match the dimension")
    eta = minkowski(n)
    chart = MetricChart("conformally_flat", n, expo=expo)

    def sides(h):
        g = chart.metric(p)
        ginv = _inv(g)
        gam = christoffel(chart.metric, p, h, order)
        w = omega(p)
        dw = fd_gradient(omega, p, h, order)
        cov = dw - np.einsum("dcaP,dbP->cabP", gam, w) - np.einsum("dcbP,adP->cabP", gam, w)
        lhs = -np.einsum("acP,cabP->bP", ginv, cov)
        du = fd_gradient(expo, p, h, order)
        grad_u = np.einsum("ac,cP->aP", eta, du)
        contr = np.einsum("aP,abP->bP", grad_u, w)
        rhs = np.exp(-2 * expo(p)) * (_codifferential_flat(omega, p, h, order) - (n - 4) * contr)
        return lhs, rhs

    return residual_report("conformal_codifferential", sides, h0, order)


def check_dirac_covariance(
    kind: str,
    psi: AnalyticField,
    potential: AnalyticField | None,
    param: AnalyticField,
    n: int,
    mu: float,
    points,
) -> ResidualReport:
    """Gauge covariance, conformal covariance or current scaling of D^A.

    ``gauge``:     D^{A + df}(e^{-i mu f} psi) = e^{-i mu f} D^A psi
    ``conformal``: Dbar^A(e^{-(n-1)u/2} psi) = e^{-(n+1)u/2} D^A psi,  gbar = e^{2u} eta
    ``current_scaling``: log(jbar(d_t) / j(d_t)) regressed on u has slope -(n-2)
    """
    p, h0, order = _setup(points, psi, potential, param)
    if p.shape[0] != n:
        raise ValueError("points do not match the dimension")

    if kind == "gauge":
        f = param

        def sides(h):
            df = lambda q: fd_gradient(f, q, h, order)
            shifted = lambda q: (potential(q) if potential is not None else 0.0) + df(q)
            rotated = lambda q: np.exp(-1j * mu * f(q)) * psi(q)
            lhs = dirac_operator(rotated, shifted, mu, n, p, h, order)
            rhs = np.exp(-1j * mu * f(p)) * dirac_operator(psi, potential, mu, n, p, h, order)
            return lhs, rhs

        return residual_report("gauge_covariance", sides, h0, order)

    if kind == "conformal":
        u = param
        phi = AnalyticField(lambda q: np.exp(-0.5 * (n - 1) * u(q)) * psi(q), box=psi.box)

        def sides(h):
            lhs = conformal_dirac(phi, potential, mu, n, u, p, h, order)
            rhs = np.exp(-0.5 * (n + 1) * u(p)) * dirac_operator(psi, potential, mu, n, p, h, order)
            return lhs, rhs

        explicit = _max_abs(
            conformal_dirac(phi, potential, mu, n, u, p, h0, order),
            conformal_dirac_explicit(phi, potential, mu, n, u, p, h0, order),
        )
        return residual_report("conformal_covariance", sides, h0, order, {"explicit_formula_gap": explicit})

    if kind == "current_scaling":
        u = param(p)
        phi = np.exp(-0.5 * (n - 1) * u) * psi(p)
        j = current(psi(p), n)
        # d_t = e^{u} ebar_0, so Clifford multiplication by d_t in the rescaled frame is e^{u} gamma_0
        jbar = np.exp(u) * current(phi, n)
        ratio = np.log(jbar / j)
        slope, intercept = np.polyfit(u, ratio, 1)
        expected = -(n - 2) * u
        rep = ResidualReport(
            "current_scaling",
            0.0,
            ratio[None],
            expected[None],
            _max_abs(ratio, expected),
            order=np.inf,
            extras={"slope": float(slope), "expected_slope": float(-(n - 2)), "intercept": float(intercept)},
        )
        return rep

    raise ValueError(f"unknown covariance kind {kind!r}")


# 3+1 constraints ------------------------------------------------------------------------------


def _covariant_jets(potential, metric, p, h, order):
    a, da, d2a = fd_jet2(potential, p, h, order)
    g, ginv, gam, dgam = christoffel_jet(metric, p, h, order)
    nab = da - np.einsum("rkvP,rP->kvP", gam, a)
    dnab = d2a - np.einsum("erkvP,rP->ekvP", dgam, a) - np.einsum("rkvP,erP->ekvP", gam, da)
    nab2 = dnab - np.einsum("rekP,rvP->ekvP", gam, nab) - np.einsum("revP,krP->ekvP", gam, nab)
    return dict(a=a, da=da, d2a=d2a, g=g, ginv=ginv, gam=gam, dgam=dgam, nab=nab, dnab=dnab, nab2=nab2)


def rough_box(jets) -> np.ndarray:
    """(Box A)_v = -g^{ek} nabla_e nabla_k A_v."""
    return -np.einsum("ekP,ekvP->vP", jets["ginv"], jets["nab2"])


def hodge_box(jets) -> np.ndarray:
    """(dd* + d*d)A, i.e. the rough operator plus ric(A^sharp)."""
    ric = ricci(jets["gam"], jets["dgam"])
    return rough_box(jets) + np.einsum("vbP,bcP,cP->vP", ric, jets["ginv"], jets["a"])


def codifferential_direct(potential, chart: MetricChart, p, h, order=2) -> np.ndarray:
    """d*A = -(1/sqrt|g|) d_m (sqrt|g| g^{mv} A_v), by differences of the density."""

    def density(q):
        g = chart.metric(q)
        vol = np.sqrt(np.abs(np.linalg.det(np.moveaxis(g, -1, 0))))
        return vol, np.einsum("mvP,vP->mP", _inv(g), potential(q)) * vol

    flux = lambda q: density(q)[1]
    div = np.einsum("mmP->P", fd_gradient(flux, p, h, order))
    return -div / density(p)[0]


def constraint_terms(
    potential, chart: MetricChart, p, h, order=2, source="rough", form="printed"
) -> dict:
    """Both constraint expressions on the sliced chart, term by term.

    The current term J(d_t) is replaced by (Box A)(d_t) computed from the same
    jets; ``source`` selects the rough or the Hodge d'Alembertian.

    ``form="printed"`` uses the coefficients as printed: 1/beta on
    A_1(grad beta) and 1/(2 beta) on nabla_{grad beta} A_0(d_t).  Those hold
    only when grad beta = 0: the time derivative of a slice frame e_j has the
    normal part e_j(beta)/(2 beta) d_t, which the printed form drops.
    ``form="corrected"`` keeps it, giving 1/(2 beta) and 0 respectively.
    """
    if form not in ("printed", "corrected"):
        raise ValueError(f"unknown constraint form {form!r}")
    n = p.shape[0]
    jets = _covariant_jets(potential, chart.metric, p, h, order)
    beta, da_beta, _ = fd_jet2(lambda q: chart.lapse_and_factor(q)[0], p, h, order)
    a, da_a, _ = fd_jet2(lambda q: chart.lapse_and_factor(q)[1], p, h, order)
    nab, dnab, nab2, gam = jets["nab"], jets["dnab"], jets["nab2"], jets["gam"]
    sp = range(1, n)
    a_t = da_a[0]
    inv_a2 = a**-2
    b_form = nab[0]  # nabla_{d_t} A
    t = {}
    t["eq1"] = b_form[0] / beta - inv_a2 * sum(nab[j, j] for j in sp)
    t["T1"] = inv_a2 * sum(nab2[j, j, 0] for j in sp) + (n - 1) * a_t / (a * beta) * b_form[0]
    t["T2"] = -inv_a2 * sum(dnab[j, 0, j] - np.einsum("rP,rP->P", gam[:, j, j], b_form) for j in sp)
    t["T3"] = -(n - 1) * a_t / (a * beta) * b_form[0]
    c4, c5 = (1.0, 0.5) if form == "printed" else (0.5, 0.0)
    t["T4"] = c4 * inv_a2 / beta * sum(da_beta[j] * b_form[j] for j in sp)
    t["T5"] = c5 * inv_a2 / beta * sum(da_beta[j] * nab[j, 0] for j in sp)
    t["T6"] = a_t / a * inv_a2 * sum(nab[j, j] for j in sp)
    ric = ricci(gam, jets["dgam"])
    t["T7"] = np.einsum("vP,vrP,rP->P", ric[0], jets["ginv"], jets["a"])
    box = rough_box(jets) if source == "rough" else hodge_box(jets)
    t["T8"] = box[0]
    t["eq2"] = sum(t[f"T{i}"] for i in range(1, 9))
    t["jets"] = jets
    return t


def simplified_constraint_terms(potential, chart: MetricChart, p, h, order=2) -> tuple:
    """Simplified constraint expressions for unit lapse and slices g_t = a^2 delta."""
    n = p.shape[0]
    sp = range(1, n)
    jets = _covariant_jets(potential, chart.metric, p, h, order)
    a, da_a, d2a_a = fd_jet2(lambda q: chart.lapse_and_factor(q)[1], p, h, order)
    A, dA, d2A = jets["a"], jets["da"], jets["d2a"]
    m = n - 1
    w = da_a[0] / a
    dw = [(d2a_a[0, j] * a - da_a[0] * da_a[j]) / a**2 for j in range(n)]
    div_s = lambda comp, dcomp: -(a ** (-m)) * sum(
        (m - 2) * a ** (m - 3) * da_a[j] * comp[j] + a ** (m - 2) * dcomp[j] for j in sp
    )
    # d*_S of a slice 1-form X with d_j X_j supplied: -(1/a^m) d_j(a^{m-2} X_j)
    dstar_a = div_s(A, [dA[j, j] for j in range(n)])
    b_form = jets["nab"][0]
    dstar_b = div_s(b_form, [jets["dnab"][j, 0, j] for j in range(n)])
    lap_a0 = -(a ** (-m)) * sum(
        (m - 2) * a ** (m - 3) * da_a[j] * dA[j, 0] + a ** (m - 2) * d2A[j, j, 0] for j in sp
    )
    ric = ricci(jets["gam"], jets["dgam"])
    ric_term = np.einsum("vP,vrP,rP->P", ric[0], jets["ginv"], A)
    eq1 = dA[0, 0] + dstar_a + m * w * A[0]
    eq2 = (
        -lap_a0
        + dstar_b
        + 3 * w * dstar_a
        - a**-2 * sum(dw[j] * A[j] for j in sp)
        + 2 * m * w**2 * A[0]
        + ric_term
        + rough_box(jets)[0]
    )
    return eq1, eq2


def check_constraints_3p1(
    potential: AnalyticField, chart: MetricChart, points, source="rough", form="printed"
) -> dict:
    """Both constraint equations against direct differences of d*A.

    Returns ``{"constraint_1": report, "constraint_2": report}``; on unit-lapse
    charts the reports also carry the gap to the simplified forms.
    """
    p, h0, order = _setup(points, potential)
    if chart.dim != 4 or chart.form == "conformally_flat":
        raise ValueError("constraints are checked on four-dimensional sliced or flat charts")
    if p.shape[0] != 4:
        raise ValueError("points must be four-dimensional")
    chart.check_positive(p)

    def direct(h):
        return codifferential_direct(potential, chart, p, h, order)

    def direct_dt(h):
        f = lambda q: codifferential_direct(potential, chart, q, h, order)
        return fd_gradient(f, p, h, order)[0]

    def sides1(h):
        return direct(h), constraint_terms(potential, chart, p, h, order, source, form)["eq1"]

    def sides2(h):
        return direct_dt(h), constraint_terms(potential, chart, p, h, order, source, form)["eq2"]

    extras = {}
    beta = chart.lapse_and_factor(p)[0]
    if np.allclose(beta, 1.0, rtol=0, atol=1e-15):
        t = constraint_terms(potential, chart, p, h0, order, source, form)
        r1, r2 = simplified_constraint_terms(potential, chart, p, h0, order)
        extras = {"simplified_gap_1": _max_abs(r1, t["eq1"]), "simplified_gap_2": _max_abs(r2, t["eq2"])}
    return {
        "constraint_1": residual_report("constraint_1", sides1, h0, order, extras),
        "constraint_2": residual_report("constraint_2", sides2, h0, order, extras),
    }


# charge obstruction ------------------------------------------------------------------------------


def check_obstruction(potential: AnalyticField, points, slice_grid: int = 24) -> ResidualReport:
    """d*_S(nu _| dA) + (d*_M dA)(nu) on the slice t = 0 of Minkowski space.

    The first term uses nested differences of F = dA, the second compact
    2-jets of A.  The slice integral of (d*dA)(nu) over the periodic box
    [0, 2 pi)^{n-1} (trapezoid rule) is stored in ``extras``.
    """
    p, h0, order = _setup(points, potential)
    n = p.shape[0]

    def d_star_dA_nu(q, h):
        # (d*F)_t = sum_j (d_j d_t A_j - d_j^2 A_t)
        _, _, d2a = fd_jet2(potential, q, h, order)
        return sum(d2a[j, 0, j] - d2a[j, j, 0] for j in range(1, n))

    def sides(h):
        def nu_dA(q):
            da = fd_gradient(potential, q, h, order)
            return np.array([da[0, j] - da[j, 0] for j in range(n)])  # F_{t j}

        dnu = fd_gradient(nu_dA, p, h, order)
        lhs = -sum(dnu[j, j] for j in range(1, n))
        return lhs, -d_star_dA_nu(p, h)

    axes = np.meshgrid(*([np.arange(slice_grid) * 2 * np.pi / slice_grid] * (n - 1)), indexing="ij")
    grid = np.vstack([np.zeros(axes[0].size)] + [ax.ravel() for ax in axes])
    vals = d_star_dA_nu(grid, h0)
    integral = float(np.mean(vals) * (2 * np.pi) ** (n - 1))
    return residual_report("obstruction", sides, h0, order, {"slice_integral": integral})


# bundled fixtures ----------------------------------------------------------------------------------


def _trig_coeffs(seed, count, n, wave=0.7):
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-0.3, 0.3, size=count)
    k = rng.uniform(-wave, wave, size=(count, n))
    phase = rng.uniform(0, 2 * np.pi, size=count)
    return amp, k, phase


def random_scalar(n: int, seed: int = 0, terms: int = 3, wave: float = 0.7, **kw) -> AnalyticField:
    amp, k, phase = _trig_coeffs(seed, terms, n, wave)

    def ev(p):
        return np.einsum("t,tP->P", amp, np.sin(np.einsum("tn,nP->tP", k, p) + phase[:, None]))

    return AnalyticField(ev, **kw)


def random_one_form(n: int, seed: int = 0, **kw) -> AnalyticField:
    comps = [random_scalar(n, seed=seed * 31 + i + 1, **kw) for i in range(n)]
    return AnalyticField(lambda p: np.array([c(p) for c in comps]), **kw)


def random_two_form(n: int, seed: int = 0, **kw) -> AnalyticField:
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    comps = {ab: random_scalar(n, seed=seed * 37 + i + 1, **kw) for i, ab in enumerate(pairs)}

    def ev(p):
        out = np.zeros((n, n, p.shape[1]))
        for (a, b), c in comps.items():
            v = c(p)
            out[a, b], out[b, a] = v, -v
        return out

    return AnalyticField(ev, **kw)


def random_spinor(n: int, seed: int = 0, **kw) -> AnalyticField:
    size = 2 if n < 4 else 4
    re = [random_scalar(n, seed=seed * 41 + 2 * i + 1, **kw) for i in range(size)]
    im = [random_scalar(n, seed=seed * 41 + 2 * i + 2, **kw) for i in range(size)]
    offset = 0.5 + 0.1 * np.arange(size)

    def ev(p):
        return np.array([offset[i] + r(p) + 1j * m(p) for i, (r, m) in enumerate(zip(re, im))])

    return AnalyticField(ev, **kw)


def periodic_one_form(n: int, seed: int = 0, **kw) -> AnalyticField:
    """Integer spatial wavenumbers, so the potential is periodic on every slice."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-0.3, 0.3, size=(n, 3))
    k = rng.integers(-1, 2, size=(n, 3, n - 1))
    omega = rng.uniform(-0.7, 0.7, size=(n, 3))
    phase = rng.uniform(0, 2 * np.pi, size=(n, 3))

    def ev(p):
        arg = omega[..., None] * p[0] + np.einsum("ctj,jP->ctP", k, p[1:]) + phase[..., None]
        return np.einsum("ct,ctP->cP", amp, np.sin(arg))

    return AnalyticField(ev, **kw)


def sliced_chart(beta_amplitude: float = 0.1, a_rate: float = 0.05) -> MetricChart:
    """-beta dt^2 + a^2 delta with beta = 1 + 0.1 sin(x1), a = 1 + 0.05 t."""
    beta = AnalyticField(lambda p: 1.0 + beta_amplitude * np.sin(p[1]))
    factor = AnalyticField(lambda p: 1.0 + a_rate * p[0])
    return MetricChart("sliced", 4, beta=beta, slice_factor=factor)


def sample_points(n: int, count: int = 8, seed: int = 0, radius: float = 0.5, time=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    p = rng.uniform(-radius, radius, size=(n, count))
    if time is not None:
        p[0] = time
    return p
