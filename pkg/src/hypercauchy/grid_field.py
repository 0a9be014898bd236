"""Band-limited fields on the flat torus [0, 2*pi)^n, n = 1 or 2.

A :class:`Field` holds the Fourier coefficients ``c[xi]`` of a vector-valued
trigonometric polynomial

    f(x) = sum_xi c[xi] exp(i xi . x),     |xi_j| < modes/2,

together with a lazily computed copy of its values on the uniform
collocation grid.  Coefficients are stored in numpy FFT ordering with shape
``(width, modes, ..., modes)``.  The measure is plain Lebesgue measure on
[0, 2*pi)^n, so ``||1||_{L2}^2 = (2*pi)^n``.

Norms follow the derivative-sum convention
``||f||_{H^k}^2 = sum_{|alpha| <= k} ||d^alpha f||_{L2}^2`` and are evaluated
exactly from the coefficients.  Nonlinear products are dealiased with the
2/3 rule.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import j0

TWO_PI = 2.0 * np.pi
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Shape of a field: torus dimension, grid size, value width and kind."""

    dim: int = 1
    modes: int = 64
    width: int = 1
    kind: str = "real"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        m = self.modes
        if not isinstance(m, (int, np.integer)) or m < 8 or m & (m - 1):
            raise ValueError(f"modes must be a power of two >= 8, got {m}")
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.kind not in ("real", "complex"):
            raise ValueError(f"kind must be 'real' or 'complex', got {self.kind!r}")

    @property
    def circumference(self) -> float:
        return TWO_PI

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.modes,) * self.dim

    @property
    def n_points(self) -> int:
        return self.modes**self.dim

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.modes) ** self.dim

    @property
    def dealias_cutoff(self) -> int:
        """Largest |xi_j| kept by the 2/3 rule."""
        return self.modes // 3

    def replace(self, **changes) -> GridSpec:
        fields = dict(dim=self.dim, modes=self.modes, width=self.width, kind=self.kind)
        fields.update(changes)
        return GridSpec(**fields)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Collocation coordinates as broadcast arrays of shape ``self.shape``."""
        x = TWO_PI * np.arange(self.modes) / self.modes
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def points(self) -> np.ndarray:
        """Collocation nodes flattened to shape ``(n_points, dim)``."""
        return np.stack([c.ravel() for c in self.coordinates()], axis=-1)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, shaped to broadcast against ``shape``."""
        k = np.fft.fftfreq(self.modes, 1.0 / self.modes)
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.modes
            out.append(k.reshape(shape))
        return tuple(out)


def _conj_reflect(c: np.ndarray, dim: int) -> np.ndarray:
    """Return conj(c[-xi]) for coefficient arrays with leading width axis."""
    axes = tuple(range(1, dim + 1))
    return np.conj(np.roll(np.flip(c, axis=axes), 1, axis=axes))


@lru_cache(maxsize=None)
def _keep_mask(dim: int, modes: int, cutoff: int) -> np.ndarray:
    k = np.abs(np.fft.fftfreq(modes, 1.0 / modes))
    keep = k <= cutoff
    mask = keep
    for _ in range(dim - 1):
        mask = np.multiply.outer(mask, keep)
    mask = np.asarray(mask, dtype=bool)
    mask.setflags(write=False)
    return mask


class Field:
    """Immutable band-limited field with spectral and collocation views."""

    __slots__ = ("spec", "_coeffs", "_values")

    def __init__(self, spec: GridSpec, coefficients):
        c = np.array(coefficients, dtype=complex)
        if c.shape == spec.shape and spec.width == 1:
            c = c[None]
        if c.shape != (spec.width,) + spec.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match {(spec.width,) + spec.shape}"
            )
        # The Nyquist mode has no symmetric partner; it is dropped.
        nyq = spec.modes // 2
        for axis in range(1, spec.dim + 1):
            idx = [slice(None)] * c.ndim
            idx[axis] = nyq
            c[tuple(idx)] = 0.0
        if spec.kind == "real":
            c = 0.5 * (c + _conj_reflect(c, spec.dim))
        c.setflags(write=False)
        self.spec = spec
        self._coeffs = c
        self._values = None

    # construction -------------------------------------------------------

    @classmethod
    def from_values(cls, spec: GridSpec, values) -> Field:
        """Build a field from samples on the collocation grid."""
        v = np.asarray(values)
        if v.shape == spec.shape:
            v = v[None]
        if v.shape != (spec.width,) + spec.shape:
            raise ValueError(f"value shape {v.shape} does not match the grid")
        if spec.kind == "real":
            v = v.real
        axes = tuple(range(1, spec.dim + 1))
        return cls(spec, np.fft.fftn(v, axes=axes) / spec.n_points)

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> Field:
        """Sample ``fn(*coords)`` on the grid; ``fn`` may return (width, *shape)."""
        v = np.asarray(fn(*spec.coordinates()))
        v = np.broadcast_to(v, ((spec.width,) if v.ndim > spec.dim else ()) + spec.shape)
        return cls.from_values(spec, v)

    @classmethod
    def from_nodal(cls, spec: GridSpec, nodal) -> Field:
        """Inverse of :meth:`nodal`: ``nodal`` has shape (n_points, width)."""
        v = np.asarray(nodal).T.reshape((spec.width,) + spec.shape)
        return cls.from_values(spec, v)

    @classmethod
    def zeros(cls, spec: GridSpec) -> Field:
        return cls(spec, np.zeros((spec.width,) + spec.shape, dtype=complex))

    @classmethod
    def constant(cls, spec: GridSpec, value) -> Field:
        c = np.zeros((spec.width,) + spec.shape, dtype=complex)
        c[(slice(None),) + (0,) * spec.dim] = value
        return cls(spec, c)

    @classmethod
    def stack(cls, fields) -> Field:
        """Concatenate the components of fields on a common grid."""
        fields = list(fields)
        first = fields[0].spec
        for f in fields[1:]:
            if f.spec.dim != first.dim or f.spec.modes != first.modes:
                raise ValueError("cannot stack fields on different grids")
        kind = "complex" if any(f.spec.kind == "complex" for f in fields) else "real"
        width = sum(f.spec.width for f in fields)
        spec = first.replace(width=width, kind=kind)
        return cls(spec, np.concatenate([f.coefficients for f in fields], axis=0))

    # views ----------------------------------------------------------------

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs

    @property
    def values(self) -> np.ndarray:
        """Samples on the collocation grid, shape (width, *shape)."""
        if self._values is None:
            axes = tuple(range(1, self.spec.dim + 1))
            v = np.fft.ifftn(self._coeffs * self.spec.n_points, axes=axes)
            if self.spec.kind == "real":
                v = v.real
            v.setflags(write=False)
            self._values = v
        return self._values

    def nodal(self) -> np.ndarray:
        """Samples flattened to shape (n_points, width)."""
        return self.values.reshape(self.spec.width, -1).T

    def component(self, i: int) -> Field:
        return Field(self.spec.replace(width=1), self._coeffs[i : i + 1])

    def components(self) -> list[Field]:
        return [self.component(i) for i in range(self.spec.width)]

    def with_kind(self, kind: str) -> Field:
        return Field(self.spec.replace(kind=kind), self._coeffs)

    def resample(self, modes: int) -> Field:
        """Zero-pad or truncate the spectrum onto a grid with ``modes`` points."""
        spec = self.spec.replace(modes=modes)
        k_old = np.fft.fftfreq(self.spec.modes, 1.0 / self.spec.modes).astype(int)
        half = min(self.spec.modes, modes) // 2
        sel = np.nonzero(np.abs(k_old) < half)[0]
        c = np.zeros((self.spec.width,) + spec.shape, dtype=complex)
        dst = k_old[sel] % modes
        idx_src = np.ix_(*([np.arange(self.spec.width)] + [sel] * self.spec.dim))
        idx_dst = np.ix_(*([np.arange(self.spec.width)] + [dst] * self.spec.dim))
        c[idx_dst] = self._coeffs[idx_src]
        return Field(spec, c)

    def conj(self) -> Field:
        return Field(self.spec, _conj_reflect(self._coeffs, self.spec.dim))

    # arithmetic -------------------------------------------------------------

    def _check(self, other: Field):
        if self.spec != other.spec:
            raise ValueError(f"grid spec mismatch: {self.spec} vs {other.spec}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.spec, self._coeffs + other._coeffs)
        return self + Field.constant(self.spec, other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Field(self.spec, -self._coeffs)

    def __mul__(self, other):
        if isinstance(other, Field):
            return product(self, other)
        spec = self.spec
        if np.iscomplexobj(other) and np.imag(other) != 0:
            spec = spec.replace(kind="complex")
        return Field(spec, self._coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        s = self.spec
        return f"Field(dim={s.dim}, modes={s.modes}, width={s.width}, kind={s.kind})"


# differentiation and norms --------------------------------------------------


def derivative(field: Field, axis: int, order: int = 1) -> Field:
    """Spectral derivative d^order/dx_axis^order."""
    if not 0 <= axis < field.spec.dim:
        raise ValueError(f"axis {axis} out of range for dim {field.spec.dim}")
    k = field.spec.wavenumbers()[axis]
    return Field(field.spec, field.coefficients * (1j * k) ** order)


def multi_indices(dim: int, k: int):
    """All multi-indices alpha in N^dim with |alpha| <= k."""
    return [a for a in itertools.product(range(k + 1), repeat=dim) if sum(a) <= k]


def _symbol_weight(spec: GridSpec, k: int, exact_order: bool = False) -> np.ndarray:
    """sum over |alpha| <= k (or == k) of prod_j xi_j^(2 alpha_j)."""
    ks = spec.wavenumbers()
    w = np.zeros(spec.shape)
    for alpha in multi_indices(spec.dim, k):
        if exact_order and sum(alpha) != k:
            continue
        term = np.ones(spec.shape)
        for kj, aj in zip(ks, alpha):
            term = term * kj ** (2 * aj)
        w = w + term
    return w


def sobolev_norm(field: Field, k: int) -> float:
    """sqrt(sum_{|alpha|<=k} ||d^alpha f||^2_{L2}) evaluated via Parseval."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    power = np.sum(np.abs(field.coefficients) ** 2, axis=0)
    total = TWO_PI**field.spec.dim * np.sum(_symbol_weight(field.spec, k) * power)
    return float(np.sqrt(total))


def l2_norm(field: Field) -> float:
    return sobolev_norm(field, 0)


def gradient_power_norm(field: Field, m: int) -> float:
    """L2 norm of the full m-th derivative tensor, ||nabla^m f||."""
    power = np.sum(np.abs(field.coefficients) ** 2, axis=0)
    ks = field.spec.wavenumbers()
    k2 = sum(kj**2 for kj in ks)
    # sum over ordered index tuples of prod xi_{i_l}^2 equals |xi|^(2m)
    total = TWO_PI**field.spec.dim * np.sum(k2**m * power)
    return float(np.sqrt(total))


def inner(a: Field, b: Field) -> complex:
    """L2 pairing (a, b) = integral of sum_i a_i conj(b_i)."""
    a._check(b)
    return complex(TWO_PI**a.spec.dim * np.sum(a.coefficients * np.conj(b.coefficients)))


def sup_norm(field: Field, oversample: int = 1) -> float:
    """Max over the (optionally refined) grid of the pointwise Euclidean norm."""
    f = field.resample(field.spec.modes * oversample) if oversample > 1 else field
    return float(np.max(np.sqrt(np.sum(np.abs(f.values) ** 2, axis=0))))


def c1_norm(field: Field, oversample: int = 1) -> float:
    """Grid-sampled C^1 norm: sup|f| + sum_j sup|d_j f|.

    Sampling gives a lower bound of the true norm that converges as the grid
    is refined.
    """
    total = sup_norm(field, oversample)
    for axis in range(field.spec.dim):
        total += sup_norm(derivative(field, axis), oversample)
    return total


# products -------------------------------------------------------------------


def dealias(field: Field) -> Field:
    """Zero every mode with some |xi_j| above the 2/3-rule cutoff."""
    spec = field.spec
    mask = _keep_mask(spec.dim, spec.modes, spec.dealias_cutoff)
    return Field(spec, field.coefficients * mask)


def product(a: Field, b: Field) -> Field:
    """Componentwise product, dealiased with the 2/3 rule.

    Width-1 factors broadcast against wider ones.  The result is exact when
    both factors and their product lie inside the dealiasing band.
    """
    sa, sb = a.spec, b.spec
    if sa.dim != sb.dim or sa.modes != sb.modes:
        raise ValueError(f"grid spec mismatch: {sa} vs {sb}")
    if sa.width != sb.width and 1 not in (sa.width, sb.width):
        raise ValueError(f"width mismatch: {sa.width} vs {sb.width}")
    kind = "complex" if "complex" in (sa.kind, sb.kind) else "real"
    spec = sa.replace(width=max(sa.width, sb.width), kind=kind)
    va = dealias(a).values
    vb = dealias(b).values
    return dealias(Field.from_values(spec, va * vb))


# mollifier ------------------------------------------------------------------

_GL_NODES = 256


@lru_cache(maxsize=None)
def _bump_constant(dim: int) -> float:
    """Normalizing constant c of c*exp(-1/(1-|x|^2)) on the unit ball."""
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    if dim == 1:
        return 1.0 / np.sum(w * np.exp(-1.0 / (1.0 - x**2)))
    r = 0.5 * (x + 1.0)
    return 1.0 / np.sum(0.5 * w * np.exp(-1.0 / (1.0 - r**2)) * TWO_PI * r)


@lru_cache(maxsize=None)
def _bump_quadrature(dim: int):
    """Radial quadrature nodes and weights already multiplied by the density."""
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    c = _bump_constant(dim)
    if dim == 1:
        return x, w * c * np.exp(-1.0 / (1.0 - x**2))
    r = 0.5 * (x + 1.0)
    return r, 0.5 * w * c * np.exp(-1.0 / (1.0 - r**2)) * TWO_PI * r


def bump_transform(omega, dim: int = 1) -> np.ndarray:
    """Fourier transform of the unit-mass radial bump at frequency |omega|."""
    om = np.abs(np.asarray(omega, dtype=float))
    r, wd = _bump_quadrature(dim)
    flat = om.reshape(-1)
    out = np.empty_like(flat)
    kernel = np.cos if dim == 1 else j0
    for start in range(0, flat.size, 4096):
        chunk = flat[start : start + 4096]
        out[start : start + 4096] = kernel(np.outer(chunk, r)) @ wd
    return out.reshape(om.shape)


def bump_density(radius, dim: int = 1) -> np.ndarray:
    """The normalized bump theta as a function of |x| (zero for |x| >= 1)."""
    rr = np.abs(np.asarray(radius, dtype=float))
    out = np.zeros_like(rr)
    inside = rr < 1.0
    out[inside] = _bump_constant(dim) * np.exp(-1.0 / (1.0 - rr[inside] ** 2))
    return out


class Mollifier:
    """Convolution with theta_eps(x) = eps^-n theta(x/eps) on the torus.

    On band-limited fields this is the Fourier multiplier theta_hat(eps xi),
    which is real, even, equal to 1 at xi = 0 and bounded by 1.
    """

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        if epsilon > np.pi:
            raise ValueError("epsilon above pi would wrap the kernel around the torus")
        self.epsilon = float(epsilon)
        self._cache: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def kernel_multiplier(self, spec: GridSpec) -> np.ndarray:
        key = (spec.dim, spec.modes)
        with self._lock:
            mult = self._cache.get(key)
            if mult is None:
                ks = spec.wavenumbers()
                radius = np.sqrt(sum(k.astype(float) ** 2 for k in ks))
                mult = bump_transform(self.epsilon * radius, spec.dim)
                mult.setflags(write=False)
                self._cache[key] = mult
        return mult

    def __repr__(self):
        return f"Mollifier(epsilon={self.epsilon:g})"


def mollify(field: Field, m: Mollifier) -> Field:
    return Field(field.spec, field.coefficients * m.kernel_multiplier(field.spec))


# weighted pairing -------------------------------------------------------------


def _nodal_weight(weight, spec: GridSpec) -> np.ndarray:
    w = np.asarray(weight)
    n = spec.width
    if w.shape == (n, n):
        return w[None]
    if w.shape == spec.shape + (n, n):
        return w.reshape(spec.n_points, n, n)
    if w.shape == (spec.n_points, n, n):
        return w
    raise ValueError(f"weight shape {w.shape} incompatible with width {n}")


def weighted_inner(a: Field, b: Field, weight) -> complex:
    """Grid quadrature of <W a, b> = integral of conj(b)^T W a.

    ``weight`` is a constant (N, N) matrix or nodal samples of shape
    (*grid, N, N) or (n_points, N, N); every sample must be Hermitian.
    """
    a._check(b)
    w = _nodal_weight(weight, a.spec)
    defect = np.max(np.abs(w - np.conj(np.swapaxes(w, -1, -2))))
    if defect > HERMITIAN_TOL:
        raise ValueError(f"weight is not Hermitian (defect {defect:.3e})")
    wa = np.einsum("pij,pj->pi", w, a.nodal())
    return complex(a.spec.cell_volume * np.sum(np.conj(b.nodal()) * wa))
