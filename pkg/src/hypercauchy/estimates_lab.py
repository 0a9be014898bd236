"""Empirical constants for the inequality toolkit behind the energy estimates.

Each check evaluates ``LHS / RHS`` (the right-hand side without its unknown
constant) over a seeded suite of random real trigonometric polynomials and
reports the largest ratio, i.e. the empirical constant, together with how much
that constant moves when the computation is repeated on a grid twice as fine.

Checks:

* :func:`check_moser` for the product, commutator and composition estimates;
* :func:`check_commutator` for [A, J_eps] in four norms (p = 2);
* :func:`check_mollifier_gap` for ||(Id - J_eps) f||_{L2} <= C eps ||f||_{H1}.

Commutator constants are operator norms, so besides the suite members the
check includes, in one dimension, the exact worst case over the band-limited
space computed by a dense singular value decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._parallel import parallel_map
from .evolve import loglog_slope
from .grid_field import (
    TWO_PI,
    Field,
    GridSpec,
    Mollifier,
    c1_norm,
    derivative,
    gradient_power_norm,
    l2_norm,
    mollify,
    multi_indices,
    product,
    sobolev_norm,
    sup_norm,
)

MOSER_VARIANTS = ("first", "second", "third")
COMMUTATOR_FORMS = ("zeroth", "lipschitz", "first_sobolev", "derivative")
SUP_OVERSAMPLE = 4


@dataclass(frozen=True)
class RandomSuite:
    """Seeded family of real trigonometric polynomials.

    Member i is a pair (f_i, g_i) with independent uniform coefficients in
    [-amplitude, amplitude] on every cosine and sine mode with |xi_j| <= max_degree.
    """

    seed: int = 0
    count: int = 100
    max_degree: int = 8
    amplitude: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.count < 1 or self.max_degree < 0 or self.amplitude <= 0:
            raise ValueError("count >= 1, max_degree >= 0 and amplitude > 0 required")
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")

    def _lattice(self):
        d = self.max_degree
        pts = np.array(np.meshgrid(*([np.arange(-d, d + 1)] * self.dim), indexing="ij"))
        pts = pts.reshape(self.dim, -1).T
        # one representative of each +-xi pair
        keep = [tuple(p) for p in pts if tuple(p) >= tuple(-p)]
        return np.array(keep)

    def raw(self) -> np.ndarray:
        """Coefficients, shape (count, 2, n_modes, 2) for (f|g, mode, cos|sin)."""
        rng = np.random.default_rng(self.seed)
        n = len(self._lattice())
        return rng.uniform(-self.amplitude, self.amplitude, size=(self.count, 2, n, 2))

    def _field(self, coeffs: np.ndarray, modes: int) -> Field:
        spec = GridSpec(dim=self.dim, modes=modes)
        c = np.zeros(spec.shape, dtype=complex)
        for xi, (a, b) in zip(self._lattice(), coeffs):
            idx = tuple(int(k) % modes for k in xi)
            neg = tuple(int(-k) % modes for k in xi)
            if idx == neg:
                c[idx] += a
            else:
                # a cos(xi.x) + b sin(xi.x)
                c[idx] += 0.5 * (a - 1j * b)
                c[neg] += 0.5 * (a + 1j * b)
        return Field(spec, c)

    def members(self, modes: int) -> list:
        if 3 * self.max_degree >= modes:
            raise ValueError(f"{modes} modes cannot hold exact products of degree {self.max_degree}")
        raw = self.raw()
        return [(self._field(r[0], modes), self._field(r[1], modes)) for r in raw]


@dataclass
class RatioReport:
    name: str
    ratios: np.ndarray
    max_ratio: float
    resolution: int
    max_ratio_refined: float
    epsilons: np.ndarray | None = None
    slope: float | None = None
    rows: list = field(default_factory=list)

    @property
    def resolution_change(self) -> float:
        if self.max_ratio == 0:
            return 0.0 if self.max_ratio_refined == 0 else np.inf
        return abs(self.max_ratio_refined - self.max_ratio) / self.max_ratio

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.ratios))) and np.isfinite(self.max_ratio_refined)


CSV_HEADER = ("member", "ratio", "resolution", "epsilon")


def _default_resolution(degree: int, minimum: int = 64) -> int:
    m = minimum
    while m // 3 < 2 * degree:
        m *= 2
    return m


def _d_alpha(f: Field, alpha) -> Field:
    for axis, order in enumerate(alpha):
        if order:
            f = derivative(f, axis, order)
    return f


def _grad_sobolev(f: Field, k: int) -> float:
    return float(np.sqrt(sum(sobolev_norm(derivative(f, j), k) ** 2 for j in range(f.spec.dim))))


def _grad_sup(f: Field) -> float:
    grads = Field.stack([derivative(f, j) for j in range(f.spec.dim)])
    return sup_norm(grads, SUP_OVERSAMPLE)


def moser_ratio(variant: str, f: Field, g: Field, k: int, composer=None) -> float:
    """LHS / RHS of one Moser estimate for a single pair (f, g)."""
    if variant == "first":
        lhs = sobolev_norm(product(f, g), k)
        rhs = sup_norm(f, SUP_OVERSAMPLE) * sobolev_norm(g, k) + sobolev_norm(
            f, k
        ) * sup_norm(g, SUP_OVERSAMPLE)
        return lhs / rhs if rhs > 0 else 0.0
    if variant == "second":
        if k < 1:
            raise ValueError("the second estimate needs k >= 1")
        rhs = _grad_sobolev(f, k - 1) * sup_norm(g, SUP_OVERSAMPLE) + _grad_sup(f) * sobolev_norm(
            g, k - 1
        )
        # rounding floor of the commutator, so constant f counts as an exact zero
        floor = 1e-12 * sobolev_norm(f, k) * sobolev_norm(g, k)
        worst = 0.0
        for alpha in multi_indices(f.spec.dim, k):
            if sum(alpha) == 0:
                continue
            lhs = l2_norm(_d_alpha(product(f, g), alpha) - product(f, _d_alpha(g, alpha)))
            if lhs <= floor:
                continue
            worst = max(worst, lhs / rhs if rhs > 0 else np.inf)
        return worst
    if variant == "third":
        if composer is None:
            raise ValueError("the third estimate needs a composer F with F(0) = 0")
        fv = Field.from_values(f.spec, composer(f.values))
        worst = 0.0
        for alpha in multi_indices(f.spec.dim, k):
            rhs = gradient_power_norm(f, sum(alpha))
            lhs = l2_norm(_d_alpha(fv, alpha))
            worst = max(worst, lhs / rhs if rhs > 0 else 0.0 if lhs == 0 else np.inf)
        return worst
    raise ValueError(f"unknown Moser variant {variant!r}")


def check_moser(
    variant: str,
    suite: RandomSuite,
    k: int,
    composer: Callable | None = None,
    resolution: int | None = None,
) -> RatioReport:
    """Empirical constant of a Moser estimate over a random suite.

    ``first``:  ||fg||_{H^k} <= C (|f|_inf ||g||_{H^k} + ||f||_{H^k} |g|_inf)
    ``second``: ||d^a(fg) - f d^a g|| <= C (||grad f||_{H^{k-1}} |g|_inf
                                            + |grad f|_inf ||g||_{H^{k-1}})
    ``third``:  ||d^a F(f)|| <= C ||grad^{|a|} f||, F(0) = 0
    """
    if variant not in MOSER_VARIANTS:
        raise ValueError(f"unknown Moser variant {variant!r}")
    if variant == "third":
        if composer is None:
            raise ValueError("the third estimate needs a composer F with F(0) = 0")
        if abs(complex(composer(np.zeros(1))[0])) > 1e-14:
            raise ValueError("composer must satisfy F(0) = 0")
    base = resolution or _default_resolution(suite.max_degree, 128 if variant == "third" else 64)

    def ratios_at(modes):
        pairs = suite.members(modes)
        return np.array(parallel_map(lambda fg: moser_ratio(variant, fg[0], fg[1], k, composer), pairs))

    r1 = ratios_at(base)
    r2 = ratios_at(2 * base)
    rows = [(i, float(r), base, "") for i, r in enumerate(r1)]
    rows += [(i, float(r), 2 * base, "") for i, r in enumerate(r2)]
    return RatioReport(f"moser_{variant}", r1, float(np.max(r1)), base, float(np.max(r2)), rows=rows)


# commutator estimates ------------------------------------------------------


def commutator(a: Field, v: Field, m: Mollifier) -> Field:
    """[A, J_eps] v = A J_eps v - J_eps (A v)."""
    return product(a, mollify(v, m)) - mollify(product(a, v), m)


def _commutator_terms(form: str, a: Field, v: Field, m: Mollifier):
    """(LHS, ||v||) for one member; LHS already in the norm of the form."""
    if form == "derivative":
        lhs = max(l2_norm(commutator(a, derivative(v, j), m)) for j in range(v.spec.dim))
    else:
        cv = commutator(a, v, m)
        lhs = sobolev_norm(cv, 1) if form == "first_sobolev" else l2_norm(cv)
    return lhs, l2_norm(v)


def _scale(form: str, a: Field, eps: float) -> float:
    if form == "zeroth":
        return sup_norm(a, SUP_OVERSAMPLE)
    c1 = c1_norm(a, SUP_OVERSAMPLE)
    return eps * c1 if form == "lipschitz" else c1


def commutator_operator_norm(form: str, a: Field, m: Mollifier) -> float:
    """Exact norm of the form's operator on the dealiased band, by dense SVD (1-D)."""
    spec = a.spec.replace(kind="complex")
    if spec.dim != 1:
        raise ValueError("the dense worst case is implemented for one dimension")
    a = a.with_kind("complex")
    cut = spec.dealias_cutoff
    ks = np.arange(-cut, cut + 1)
    wn = spec.wavenumbers()[0]
    weight = np.sqrt(1.0 + wn**2) if form == "first_sobolev" else np.ones(spec.modes)
    cols = []
    for k in ks:
        c = np.zeros(spec.modes, dtype=complex)
        c[k % spec.modes] = 1.0 / np.sqrt(TWO_PI)  # unit L2 norm
        v = Field(spec, c)
        out = commutator(a, derivative(v, 0) if form == "derivative" else v, m)
        cols.append(np.sqrt(TWO_PI) * weight * out.coefficients[0])
    return float(np.linalg.svd(np.array(cols).T, compute_uv=False)[0])


def check_commutator(
    form: str,
    a_field: Field,
    suite: RandomSuite | Sequence[Field],
    eps_schedule: Sequence[float],
    worst_case: bool | None = None,
) -> RatioReport:
    """Empirical constant of the mollifier-commutator estimate in one of four forms.

    ``zeroth``        ||[A,J]v||       <= C ||A||_C0 ||v||
    ``lipschitz``     ||[A,J]v||       <= C eps ||A||_C1 ||v||
    ``first_sobolev`` ||[A,J]v||_{H1}  <= C ||A||_C1 ||v||
    ``derivative``    ||[A,J] d_j v||  <= C ||A||_C1 ||v||

    The computation runs on a_field's grid and again on a grid twice as fine.
    For the lipschitz form the log-log slope of the unnormalized constant
    against eps is also reported.
    """
    if form not in COMMUTATOR_FORMS:
        raise ValueError(f"unknown commutator form {form!r}")
    eps = np.array(sorted(eps_schedule, reverse=True), dtype=float)
    base = a_field.spec.modes
    if worst_case is None:
        worst_case = isinstance(suite, RandomSuite) and a_field.spec.dim == 1

    def members_at(modes):
        if isinstance(suite, RandomSuite):
            return [fg[0] for fg in suite.members(modes)]
        return [v.resample(modes) if v.spec.modes != modes else v for v in suite]

    def table_at(modes):
        a = a_field.resample(modes) if modes != base else a_field
        vs = members_at(modes)
        if vs and vs[0].spec.kind == "complex":
            a = a.with_kind("complex")
        out = np.zeros((len(eps), len(vs) + int(worst_case)))
        for i, e in enumerate(eps):
            m = Mollifier(e)
            scale = _scale(form, a, e)
            terms = parallel_map(lambda v: _commutator_terms(form, a, v, m), vs)
            for j, (lhs, nv) in enumerate(terms):
                out[i, j] = lhs / (scale * nv) if scale * nv > 0 else 0.0
            if worst_case:
                op = commutator_operator_norm(form, a, m)
                out[i, -1] = op / scale if scale > 0 else 0.0
        return out

    t1 = table_at(base)
    t2 = table_at(2 * base)
    per_eps = t1.max(axis=1)
    slope = None
    if form == "lipschitz" and len(eps) >= 2 and np.all(per_eps > 0):
        slope = loglog_slope(eps, per_eps * eps)
    rows = []
    for modes, tab in ((base, t1), (2 * base, t2)):
        for i, e in enumerate(eps):
            rows += [(j, float(r), modes, float(e)) for j, r in enumerate(tab[i])]
    return RatioReport(
        f"commutator_{form}",
        t1.max(axis=0),
        float(t1.max()),
        base,
        float(t2.max()),
        epsilons=eps,
        slope=slope,
        rows=rows,
    )


def check_mollifier_gap(
    suite: RandomSuite, eps_schedule: Sequence[float], resolution: int | None = None
) -> RatioReport:
    """||(Id - J_eps) f||_{L2} / (eps ||f||_{H1}) over the suite and schedule.

    ``slope`` is the log-log slope of the worst unnormalized ratio against eps.
    """
    eps = np.array(sorted(eps_schedule, reverse=True), dtype=float)
    base = resolution or _default_resolution(suite.max_degree)

    def table_at(modes):
        fs = [fg[0] for fg in suite.members(modes)]
        out = np.zeros((len(eps), len(fs)))
        for i, e in enumerate(eps):
            m = Mollifier(e)
            for j, f in enumerate(fs):
                out[i, j] = l2_norm(f - mollify(f, m)) / sobolev_norm(f, 1)
        return out

    t1 = table_at(base)
    t2 = table_at(2 * base)
    normalized = t1 / eps[:, None]
    slope = loglog_slope(eps, t1.max(axis=1))
    rows = [
        (j, float(normalized[i, j]), base, float(e)) for i, e in enumerate(eps) for j in range(t1.shape[1])
    ]
    return RatioReport(
        "mollifier_gap",
        normalized.max(axis=0),
        float(normalized.max()),
        base,
        float((t2 / eps[:, None]).max()),
        epsilons=eps,
        slope=slope,
        rows=rows,
    )
