"""Symmetric hyperbolic systems  a0(t,x,u) du/dt = sum_j a_j(t,x,u) d_j u + g(t,x,u).

Coefficient maps are plain vectorized callables.  Each receives

    t : float
    x : array (P, dim)     collocation or sample points
    u : array (P, N)       field values at those points

and returns either per-point matrices of shape (P, N, N) or a single constant
(N, N) matrix that is broadcast.  The source returns shape (P, N).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid_field import Field, GridSpec, Mollifier, dealias, derivative, mollify

SYMMETRY_TOL = 1e-10
PUNCTURE_TOL = 1e-12

CoefficientMap = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def constant_map(matrix) -> CoefficientMap:
    """Coefficient map returning the same matrix everywhere."""
    mat = np.array(matrix, dtype=complex)
    mat.setflags(write=False)

    def coefficient(t, x, u):
        return mat

    coefficient.constant = mat
    return coefficient


def zero_source(t, x, u):
    return np.zeros_like(u)


@dataclass(frozen=True)
class HyperbolicSystem:
    """Coefficients and structural flags of a first-order symmetric system."""

    a0: CoefficientMap
    a_spatial: tuple
    source: CoefficientMap = zero_source
    width: int = 1
    semilinear: bool = True
    punctured: bool = True
    positivity_floor: float = 1.0
    kind: str = "real"
    name: str = "system"

    @property
    def dim(self) -> int:
        return len(self.a_spatial)

    def grid(self, modes: int) -> GridSpec:
        return GridSpec(dim=self.dim, modes=modes, width=self.width, kind=self.kind)

    @classmethod
    def constant(cls, a0, a_spatial, source=None, **kwargs) -> HyperbolicSystem:
        a0 = np.atleast_2d(np.asarray(a0, dtype=complex))
        mats = [np.atleast_2d(np.asarray(a, dtype=complex)) for a in a_spatial]
        return cls(
            a0=constant_map(a0),
            a_spatial=tuple(constant_map(a) for a in mats),
            source=source if source is not None else zero_source,
            width=a0.shape[0],
            **kwargs,
        )


def _as_nodal(mat, n_points: int, width: int) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.shape == (width, width):
        return np.broadcast_to(mat, (n_points, width, width))
    return mat.reshape(n_points, width, width)


@dataclass
class ValidationReport:
    """Outcome of pointwise symmetry, positivity and puncture checks."""

    hermitian_defects: dict
    min_eigenvalue_a0: float
    puncture_defect: float
    positivity_floor: float
    n_samples: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def default_samples(
    system: HyperbolicSystem, probes: Sequence = (), n_t: int = 3, n_x: int = 8, t_max: float = 1.0
):
    """Fixed (t, x) lattice crossed with u = 0 and the given probe vectors."""
    xs = 2 * np.pi * np.arange(n_x) / n_x
    x = np.stack([g.ravel() for g in np.meshgrid(*([xs] * system.dim), indexing="ij")], -1)
    probes = [np.zeros(system.width)] + [np.asarray(p) for p in probes]
    samples = []
    for t in np.linspace(0.0, t_max, n_t):
        for p in probes:
            samples.append((float(t), x, np.broadcast_to(p, (len(x), system.width))))
    return samples


def validate_system(system: HyperbolicSystem, samples=None) -> ValidationReport:
    """Check symmetry of every coefficient, positivity of a0 and the puncture.

    ``samples`` is a list of (t, x, u) with x of shape (P, dim) and u of shape
    (P, N); by default :func:`default_samples` is used.
    """
    if samples is None:
        samples = default_samples(system)
    if not samples:
        raise ValueError("validation needs at least one sample")
    n = system.width
    names = ["a0"] + [f"a{j + 1}" for j in range(system.dim)]
    maps = [system.a0] + list(system.a_spatial)
    defects = dict.fromkeys(names, 0.0)
    min_eig = np.inf
    puncture = 0.0
    count = 0
    for t, x, u in samples:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = np.asarray(u)
        if u.ndim == 1:
            u = np.broadcast_to(u, (len(x), n))
        count += len(x)
        for name, fn in zip(names, maps):
            mat = _as_nodal(fn(t, x, u), len(x), n)
            d = np.max(np.abs(mat - np.conj(np.swapaxes(mat, -1, -2))))
            defects[name] = max(defects[name], float(d))
            if name == "a0":
                herm = 0.5 * (mat + np.conj(np.swapaxes(mat, -1, -2)))
                min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(herm))))
        if system.punctured:
            g0 = system.source(t, x, np.zeros((len(x), n), dtype=u.dtype))
            puncture = max(puncture, float(np.max(np.abs(g0))))
    failures = [
        f"{name} not Hermitian (defect {d:.3e})" for name, d in defects.items() if d > SYMMETRY_TOL
    ]
    if min_eig < system.positivity_floor:
        failures.append(
            f"a0 smallest eigenvalue {min_eig:.3e} below floor {system.positivity_floor:.3e}"
        )
    if puncture > PUNCTURE_TOL:
        failures.append(f"source does not vanish at u = 0 (defect {puncture:.3e})")
    return ValidationReport(defects, min_eig, puncture, system.positivity_floor, count, failures)


# second-order operators -------------------------------------------------------


@dataclass(frozen=True)
class SecondOrderOp:
    """u_tt = sum_ij A_ij d_i d_j u + sum_i B_i d_i u + c u_t + d u + p(t, x, u).

    ``principal`` maps (t, x) with x of shape (P, dim) to (P, dim, dim) or a
    constant (dim, dim) array.  ``drift`` (first-order coefficients B_i),
    ``damping`` (c) and ``potential`` (d) map (t, x) to arrays of shape
    (P, dim) / (P,) or constants.  The scalar coefficients act identically on
    each of the ``width`` components of u.  ``zeroth`` is the nonlinearity p.
    """

    principal: Callable
    dim: int = 1
    width: int = 1
    drift: Callable | None = None
    damping: Callable | None = None
    potential: Callable | None = None
    zeroth: Callable | None = None
    zeroth_vanishes: bool = True
    floor: float = 1.0


def _broadcast(value, shape):
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


def _prolonged_a0(a: np.ndarray, n: int, m: int) -> np.ndarray:
    p = len(a)
    out = np.zeros((p, (2 + n) * m, (2 + n) * m))
    out[:, : 2 * m, : 2 * m] = np.eye(2 * m)
    out[:, 2 * m :, 2 * m :] = np.einsum("pij,ab->piajb", a, np.eye(m)).reshape(p, n * m, n * m)
    return out


def _prolonged_spatial(a: np.ndarray, k: int, n: int, m: int) -> np.ndarray:
    out = np.zeros((len(a), (2 + n) * m, (2 + n) * m))
    for j in range(n):
        blk = a[:, k, j, None, None] * np.eye(m)
        out[:, m : 2 * m, (2 + j) * m : (3 + j) * m] = blk
        out[:, (2 + j) * m : (3 + j) * m, m : 2 * m] = blk
    return out


def prolong_second_order(op: SecondOrderOp, samples=None) -> HyperbolicSystem:
    """First-order symmetric system in the block vector (u, u_t, d_1 u, ..., d_n u).

    Each block has ``op.width`` components, so the system width is
    ``(2 + dim) * width``.  The a0 matrix is diag(1, 1, A) and the spatial
    matrix for axis k couples u_t and d_j u through A_kj, which keeps every
    coefficient symmetric.
    """
    n, m = op.dim, op.width

    if samples is None:
        xs = 2 * np.pi * np.arange(8) / 8
        pts = np.stack([g.ravel() for g in np.meshgrid(*([xs] * n), indexing="ij")], -1)
        samples = [(t, pts) for t in (0.0, 0.5, 1.0)]
    for t, x in samples:
        a = _broadcast(op.principal(t, x), (len(x), n, n))
        if np.max(np.abs(a - np.swapaxes(a, -1, -2))) > SYMMETRY_TOL:
            raise ValueError("principal part is not symmetric")
        if np.min(np.linalg.eigvalsh(a)) < op.floor:
            raise ValueError("principal part is not uniformly positive")

    def principal(t, x):
        return _broadcast(op.principal(t, x), (len(x), n, n))

    const = [np.asarray(op.principal(t, samples[0][1]), dtype=float) for t in (0.0, 0.5, 1.0)]
    if all(c.shape == (n, n) and np.array_equal(c, const[0]) for c in const):
        # constant principal part: the prolonged coefficients are constant too
        a0_const = constant_map(_prolonged_a0(const[0][None], n, m)[0])
        spatial_const = tuple(
            constant_map(_prolonged_spatial(const[0][None], k, n, m)[0]) for k in range(n)
        )
    else:
        a0_const = spatial_const = None

    def a0(t, x, u):
        return _prolonged_a0(principal(t, x), n, m)

    def spatial(k):
        def a_k(t, x, u):
            return _prolonged_spatial(principal(t, x), k, n, m)

        return a_k

    def source(t, x, u):
        p = len(x)
        val = u[:, :m]
        vel = u[:, m : 2 * m]
        grads = [u[:, (2 + j) * m : (3 + j) * m] for j in range(n)]
        out = np.zeros_like(u)
        out[:, :m] = vel
        acc = np.zeros_like(val)
        if op.drift is not None:
            b = _broadcast(op.drift(t, x), (p, n))
            for j in range(n):
                acc = acc + b[:, j, None] * grads[j]
        if op.damping is not None:
            acc = acc + _broadcast(op.damping(t, x), (p,))[:, None] * vel
        if op.potential is not None:
            acc = acc + _broadcast(op.potential(t, x), (p,))[:, None] * val
        if op.zeroth is not None:
            acc = acc + op.zeroth(t, x, val)
        out[:, m : 2 * m] = acc
        return out

    return HyperbolicSystem(
        a0=a0_const or a0,
        a_spatial=spatial_const or tuple(spatial(k) for k in range(n)),
        source=source,
        width=(2 + n) * m,
        semilinear=True,
        punctured=op.zeroth is None or op.zeroth_vanishes,
        positivity_floor=min(1.0, op.floor),
        name="prolonged",
    )


def second_order_residual(op: SecondOrderOp, t: float, u: Field, u_t: Field, u_tt: Field) -> Field:
    """op applied to u: -u_tt + sum A_ij d_i d_j u + B.grad u + c u_t + d u + p(u)."""
    spec = u.spec
    x = spec.points()
    p = len(x)
    n = spec.dim
    a = _broadcast(op.principal(t, x), (p, n, n))
    acc = -u_tt.nodal()
    for i in range(n):
        for j in range(n):
            acc = acc + a[:, i, j, None] * derivative(derivative(u, i), j).nodal()
    if op.drift is not None:
        b = _broadcast(op.drift(t, x), (p, n))
        for j in range(n):
            acc = acc + b[:, j, None] * derivative(u, j).nodal()
    if op.damping is not None:
        acc = acc + _broadcast(op.damping(t, x), (p,))[:, None] * u_t.nodal()
    if op.potential is not None:
        acc = acc + _broadcast(op.potential(t, x), (p,))[:, None] * u.nodal()
    if op.zeroth is not None:
        acc = acc + op.zeroth(t, x, u.nodal())
    return Field.from_nodal(spec, acc)


def system_residual(system: HyperbolicSystem, t: float, u: Field, u_t: Field) -> Field:
    """a0 u_t - sum_j a_j d_j u - g, evaluated at the collocation nodes."""
    spec = u.spec
    x = spec.points()
    un = u.nodal()
    p, w = un.shape
    res = np.einsum("pij,pj->pi", _as_nodal(system.a0(t, x, un), p, w), u_t.nodal())
    for j, a_j in enumerate(system.a_spatial):
        res = res - np.einsum("pij,pj->pi", _as_nodal(a_j(t, x, un), p, w), derivative(u, j).nodal())
    res = res - system.source(t, x, un)
    return Field.from_nodal(spec, res)


# mollified right-hand side ---------------------------------------------------


class PositivityError(ArithmeticError):
    """a0 failed to be positive definite at some collocation node."""


def _apply_matrix(mat, vec: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.ndim == 2:
        return vec @ mat.T
    return np.einsum("pij,pj->pi", mat, vec)


def _solve_a0(mat, rhs: np.ndarray, x: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    const = mat.ndim == 2
    if const and np.array_equal(mat, np.eye(mat.shape[0])):
        return rhs
    stack = mat[None] if const else mat
    try:
        chol = np.linalg.cholesky(stack)
    except np.linalg.LinAlgError:
        herm = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
        eig = np.linalg.eigvalsh(herm)[:, 0]
        node = int(np.argmin(eig))
        raise PositivityError(
            f"a0 not positive definite at node {node} (x = {x[node]}), "
            f"smallest eigenvalue {eig[node]:.3e}"
        ) from None
    if const:
        y = np.linalg.solve(chol[0], rhs.T)
        return np.linalg.solve(np.conj(chol[0]).T, y).T
    y = np.linalg.solve(chol, rhs[..., None])
    return np.linalg.solve(np.conj(np.swapaxes(chol, -1, -2)), y)[..., 0]


def mollified_rhs(system: HyperbolicSystem, m: Mollifier, t: float, u: Field) -> Field:
    """a0(J u)^-1 (J[sum_j a_j(J u) d_j(J u)] + J[g(J u)]) with J the mollifier.

    Nodal products are dealiased with the 2/3 rule and a0 is inverted node by
    node through a Cholesky factorization.
    """
    spec = u.spec
    ju = mollify(u, m)
    x = spec.points()
    jun = ju.nodal()
    acc = np.array(system.source(t, x, jun), dtype=complex)
    for j, a_j in enumerate(system.a_spatial):
        acc += _apply_matrix(a_j(t, x, jun), derivative(ju, j).nodal())
    inner_part = mollify(dealias(Field.from_nodal(spec, acc)), m)
    a0 = system.a0(t, x, jun)
    if getattr(system.a0, "constant", None) is not None and np.array_equal(
        system.a0.constant, np.eye(spec.width)
    ):
        return inner_part
    out = _solve_a0(a0, inner_part.nodal(), x)
    return dealias(Field.from_nodal(spec, out))


# bundled test systems ---------------------------------------------------------------


def advection(dim: int = 1) -> HyperbolicSystem:
    """du/dt = sum_j d_j u: exact translation, every Sobolev norm conserved."""
    return HyperbolicSystem.constant([[1.0]], [[[1.0]]] * dim, name="advection")


def _burgers_flux(t, x, u):
    return u[:, :, None]


def burgers() -> HyperbolicSystem:
    """Quasilinear du/dt = u du/dx; from f = sin the gradient blows up at t = 1."""
    return HyperbolicSystem(
        a0=constant_map([[1.0]]),
        a_spatial=(_burgers_flux,),
        semilinear=False,
        punctured=True,
        name="burgers",
    )


def _square(t, x, u):
    return u**2


def riccati_transport() -> HyperbolicSystem:
    """Semilinear du/dt = du/dx + u^2; constant data c lives until 1/c."""
    return HyperbolicSystem.constant([[1.0]], [[[1.0]]], source=_square, name="riccati_transport")


BUNDLED_SYSTEMS = {
    "advection": advection,
    "burgers": burgers,
    "riccati_transport": riccati_transport,
}
