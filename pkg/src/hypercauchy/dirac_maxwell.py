"""Massless Dirac-Maxwell in Lorenz gauge on R_t x T^1.

Conventions (validated by tests rather than assumed):

* Clifford relation X.Y + Y.X = -2 g(X, Y) with g = diag(-1, 1);
* spinor pairing <psi, phi> = phi^* P psi, so j_psi(X) = psi^* P X psi and the
  positive form is beta = P gamma0;
* the Dirac operator is D^A = i(-gamma0 d_t + gamma1 d_x) - mu(-A_t gamma0 + A_x gamma1),
  and multiplying D^A psi = 0 by P gamma0 gives the symmetric form
  beta d_t psi = (P gamma1) d_x psi + beta i mu (-A_t + A_x Gamma) psi,  Gamma = gamma0 gamma1;
* d*A = d_t A_t - d_x A_x and the wave equation is d_t^2 A_mu - d_x^2 A_mu = J_mu,
  with J_mu = sum_l mu_l j_l(d_mu).

With these signs d*J = 0 on solutions, so d*A solves the free wave equation
and Lorenz gauge propagates from data satisfying the two constraints.

The packed state of width 2N + 6 is
``[psi^1 (2), ..., psi^N (2), A_t, A_x, dA_t/dt, dA_x/dt, dA_t/dx, dA_x/dx]``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolve import SolveControls, Trajectory, integrate
from .grid_field import TWO_PI, Field, GridSpec, Mollifier, dealias, derivative, sup_norm
from .system import HyperbolicSystem, constant_map

CLIFFORD_TOL = 1e-13
POTENTIAL_NAMES = ("t", "x")
N_POTENTIAL = 6


class ChargeObstructionError(ValueError):
    """Raised when constrained data are requested for a state with nonzero total charge."""


@dataclass(frozen=True)
class CliffordRep:
    gamma0: np.ndarray
    gamma1: np.ndarray
    pairing: np.ndarray

    def __post_init__(self):
        for name in ("gamma0", "gamma1", "pairing"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        defects = self.defects()
        bad = {k: v for k, v in defects.items() if v > CLIFFORD_TOL}
        if bad:
            raise ValueError(f"invalid Clifford representation: {bad}")
        if np.min(np.linalg.eigvalsh(self.beta)) <= 0:
            raise ValueError("beta pairing is not positive definite")

    @classmethod
    def standard(cls) -> CliffordRep:
        g0 = np.array([[0, 1], [1, 0]])
        g1 = np.array([[0, 1], [-1, 0]])
        return cls(g0, g1, g0)

    def defects(self) -> dict:
        eye = np.eye(2)
        g0, g1, p = self.gamma0, self.gamma1, self.pairing
        herm = lambda m: float(np.max(np.abs(m - m.conj().T)))
        return {
            "gamma0_squared": float(np.max(np.abs(g0 @ g0 - eye))),
            "gamma1_squared": float(np.max(np.abs(g1 @ g1 + eye))),
            "anticommutator": float(np.max(np.abs(g0 @ g1 + g1 @ g0))),
            "pairing_hermitian": herm(p),
            # real currents <=> P gamma_a Hermitian
            "current_t": herm(p @ g0),
            "current_x": herm(p @ g1),
        }

    @property
    def beta(self) -> np.ndarray:
        return self.pairing @ self.gamma0

    @property
    def flux(self) -> np.ndarray:
        """P gamma1, the matrix of j(d_x)."""
        return self.pairing @ self.gamma1

    @property
    def chirality(self) -> np.ndarray:
        return self.gamma0 @ self.gamma1

    def current(self, psi: np.ndarray, axis: int) -> np.ndarray:
        """j_psi(d_axis) for spinor samples of shape (2, ...)."""
        mat = self.beta if axis == 0 else self.flux
        return np.einsum("i...,ij,j...->...", psi.conj(), mat, psi).real


@dataclass(frozen=True)
class Species:
    charge_mu: float
    spinor: Field
    mass: float = 0.0

    def __post_init__(self):
        if self.mass != 0.0:
            raise ValueError("only massless species are supported")
        if not np.isfinite(self.charge_mu):
            raise ValueError("charge must be finite")
        if self.spinor.spec.width != 2 or self.spinor.spec.dim != 1:
            raise ValueError("a spinor is a width-2 field on the circle")


@dataclass(frozen=True)
class DMState:
    """Spinor species plus the potential and its prolonged first derivatives.

    ``potential``, ``potential_dt`` and ``potential_dx`` are width-2 real
    fields ordered (t, x).
    """

    species: tuple
    potential: Field
    potential_dt: Field
    potential_dx: Field

    @property
    def charges(self) -> tuple:
        return tuple(s.charge_mu for s in self.species)

    @property
    def spec(self) -> GridSpec:
        return self.potential.spec

    @classmethod
    def zero(cls, charges, modes: int = 64) -> DMState:
        cspec = GridSpec(modes=modes, width=2, kind="complex")
        rspec = GridSpec(modes=modes, width=2)
        return cls(
            tuple(Species(mu, Field.zeros(cspec)) for mu in charges),
            Field.zeros(rspec),
            Field.zeros(rspec),
            Field.zeros(rspec),
        )

    def pack(self) -> Field:
        parts = [s.spinor.with_kind("complex") for s in self.species]
        parts += [f.with_kind("complex") for f in (self.potential, self.potential_dt, self.potential_dx)]
        return Field.stack(parts)

    @classmethod
    def unpack(cls, u: Field, charges) -> DMState:
        n = len(charges)
        if u.spec.width != 2 * n + N_POTENTIAL:
            raise ValueError(f"packed width {u.spec.width} does not fit {n} species")
        c = u.coefficients
        cspec = u.spec.replace(width=2, kind="complex")
        rspec = u.spec.replace(width=2, kind="real")
        species = tuple(Species(mu, Field(cspec, c[2 * i : 2 * i + 2])) for i, mu in enumerate(charges))
        b = 2 * n
        return cls(
            species,
            Field(rspec, c[b : b + 2]),
            Field(rspec, c[b + 2 : b + 4]),
            Field(rspec, c[b + 4 : b + 6]),
        )


# system assembly ---------------------------------------------------------------


def _wave_block() -> np.ndarray:
    a = np.zeros((N_POTENTIAL, N_POTENTIAL))
    for v, w in ((2, 4), (3, 5)):
        a[v, w] = a[w, v] = 1.0
    return a


def build_dm_system(charges, rep: CliffordRep | None = None) -> HyperbolicSystem:
    """Dirac blocks for each species plus the prolonged wave equation for A.

    All coupling (mu A.psi and the current J) sits in the source, so the
    system is semilinear with constant coefficients and a punctured source.
    """
    rep = rep or CliffordRep.standard()
    charges = tuple(float(mu) for mu in charges)
    n = len(charges)
    width = 2 * n + N_POTENTIAL
    a0 = np.eye(width, dtype=complex)
    a1 = np.zeros((width, width), dtype=complex)
    for i in range(n):
        a0[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = rep.beta
        a1[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = rep.flux
    a1[2 * n :, 2 * n :] = _wave_block()
    beta, chi = rep.beta, rep.chirality
    b = 2 * n

    def source(t, x, u):
        out = np.zeros_like(u, dtype=complex)
        a_t = u[:, b].real[:, None]
        a_x = u[:, b + 1].real[:, None]
        j_t = np.zeros(len(u))
        j_x = np.zeros(len(u))
        for i, mu in enumerate(charges):
            psi = u[:, 2 * i : 2 * i + 2]
            if mu != 0.0:
                rot = -a_t * psi + a_x * (psi @ chi.T)
                out[:, 2 * i : 2 * i + 2] = 1j * mu * (rot @ beta.T)
            j_t += mu * rep.current(psi.T, 0)
            j_x += mu * rep.current(psi.T, 1)
        out[:, b] = u[:, b + 2].real
        out[:, b + 1] = u[:, b + 3].real
        out[:, b + 2] = j_t
        out[:, b + 3] = j_x
        return out

    floor = min(1.0, float(np.min(np.linalg.eigvalsh(rep.beta))))
    return HyperbolicSystem(
        a0=constant_map(a0),
        a_spatial=(constant_map(a1),),
        source=source,
        width=width,
        semilinear=True,
        punctured=True,
        positivity_floor=floor * (1 - 1e-12),
        kind="complex",
        name=f"dirac_maxwell[{n}]",
    )


# charges and constraints --------------------------------------------------------


def _torus_integral(f: Field) -> float:
    """Integral over the circle of a scalar field (exact grid quadrature)."""
    return float(TWO_PI * f.coefficients[0, 0].real)


def current_fields(state: DMState, rep: CliffordRep | None = None) -> Field:
    """J_psi(d_t), J_psi(d_x) as a width-2 real field, sampled on the grid."""
    rep = rep or CliffordRep.standard()
    vals = np.zeros((2,) + state.spec.shape)
    for s in state.species:
        psi = s.spinor.values
        vals[0] += s.charge_mu * rep.current(psi, 0)
        vals[1] += s.charge_mu * rep.current(psi, 1)
    return Field.from_values(state.spec.replace(width=2, kind="real"), vals)


def species_norms(state: DMState, rep: CliffordRep | None = None) -> list:
    """Integral of <e_0 . psi^l, psi^l> for each species."""
    rep = rep or CliffordRep.standard()
    return [float(TWO_PI * np.mean(rep.current(s.spinor.values, 0))) for s in state.species]


def total_charge(state: DMState, rep: CliffordRep | None = None) -> float:
    return float(sum(s.charge_mu * q for s, q in zip(state.species, species_norms(state, rep))))


def lorenz_residual(state: DMState) -> tuple[Field, float]:
    """d*A = dA_t/dt - dA_x/dx from the prolonged blocks, and its sup norm."""
    res = state.potential_dt.component(0) - state.potential_dx.component(1)
    return res, sup_norm(res)


def constraint_fields(state: DMState, rep: CliffordRep | None = None) -> tuple[Field, Field]:
    """The two constraint expressions on a slice.

    1. d*A itself;
    2. d_t(d*A) with the second time derivative eliminated through the wave
       equation: d_x^2 A_t - d_x(dA_x/dt) + J_t.
    """
    a_t, a_x = state.potential.components()
    dt_t, dt_x = state.potential_dt.components()
    res1 = dt_t - derivative(a_x, 0)
    j_t = current_fields(state, rep).component(0)
    res2 = derivative(a_t, 0, 2) - derivative(dt_x, 0) + j_t
    return res1, res2


def constraint_residual_1p1(state: DMState, rep: CliffordRep | None = None) -> tuple[float, float]:
    res1, res2 = constraint_fields(state, rep)
    return sup_norm(res1), sup_norm(res2)


def constraint_charge_identity(state: DMState, rep: CliffordRep | None = None) -> tuple[float, float]:
    """(integral of constraint 2, total charge); equal for every state."""
    return _torus_integral(constraint_fields(state, rep)[1]), total_charge(state, rep)


def _inverse_laplacian(f: Field) -> Field:
    k = f.spec.wavenumbers()[0]
    with np.errstate(divide="ignore"):
        mult = np.where(k == 0, 0.0, -1.0 / k**2)
    return Field(f.spec, f.coefficients * mult)


def lorenz_initial_data(
    species, a_x: Field, a_x_dt: Field, rep: CliffordRep | None = None, charge_tol: float = 1e-12
) -> DMState:
    """Complete (psi, A_x, dA_x/dt) to data satisfying both constraints.

    A_t solves d_x^2 A_t = d_x(dA_x/dt) - J_t (mean zero) and dA_t/dt = dA_x/dx.
    The Poisson problem is solvable only for zero total charge; otherwise
    :class:`ChargeObstructionError` is raised.
    """
    rep = rep or CliffordRep.standard()
    species = tuple(species)
    spec = a_x.spec.replace(width=1, kind="real")
    a_x = dealias(a_x.with_kind("real"))
    a_x_dt = dealias(a_x_dt.with_kind("real"))
    species = tuple(Species(s.charge_mu, dealias(s.spinor)) for s in species)
    zero = Field.zeros(spec)
    probe = DMState(species, Field.stack([zero, zero]), Field.stack([zero, zero]), Field.stack([zero, zero]))
    j_t = current_fields(probe, rep).component(0)
    charge = _torus_integral(j_t)
    scale = max(1.0, sum(abs(mu) * q for mu, q in zip(probe.charges, species_norms(probe, rep))))
    if abs(charge) > charge_tol * scale:
        raise ChargeObstructionError(
            f"total charge {charge:.3e} is nonzero; the second constraint has no periodic solution"
        )
    a_t = _inverse_laplacian(derivative(a_x_dt, 0) - j_t)
    a_t_dt = derivative(a_x, 0)
    return with_potential(probe, Field.stack([a_t, a_x]), Field.stack([a_t_dt, a_x_dt]))


def with_potential(state: DMState, potential: Field, potential_dt: Field) -> DMState:
    """Replace the potential; the prolonged x-derivatives are recomputed."""
    potential = potential.with_kind("real")
    potential_dt = potential_dt.with_kind("real")
    return DMState(state.species, potential, potential_dt, derivative(potential, 0))


def gauge_transform(
    state: DMState,
    f: Field,
    f_dt: Field,
    rep: CliffordRep | None = None,
    f_dtt: Field | None = None,
) -> DMState:
    """psi^l -> exp(-i mu_l f) psi^l,  A -> A + df.

    ``f_dtt`` defaults to d_x^2 f, i.e. a gauge function solving the free wave
    equation, which keeps the Lorenz condition and the wave form intact.
    """
    f = f.with_kind("real")
    f_dt = f_dt.with_kind("real")
    f_x = derivative(f, 0)
    f_xx = derivative(f, 0, 2)
    f_dtt = f_xx if f_dtt is None else f_dtt.with_kind("real")
    f_dt_x = derivative(f_dt, 0)
    cspec = state.spec.replace(width=2, kind="complex")
    species = []
    for s in state.species:
        phase = np.exp(-1j * s.charge_mu * f.values[0])
        species.append(Species(s.charge_mu, Field.from_values(cspec, s.spinor.values * phase)))
    return DMState(
        tuple(species),
        state.potential + Field.stack([f_dt, f_x]),
        state.potential_dt + Field.stack([f_dtt, f_dt_x]),
        state.potential_dx + Field.stack([f_dt_x, f_xx]),
    )


# evolution --------------------------------------------------------------------------


@dataclass
class DMTrajectory:
    trajectory: Trajectory
    charges: tuple
    times: list = field(default_factory=list)
    charge_log: list = field(default_factory=list)
    species_norm_log: list = field(default_factory=list)
    lorenz_log: list = field(default_factory=list)

    @property
    def states(self) -> list:
        return [DMState.unpack(u, self.charges) for u in self.trajectory.states]

    @property
    def final(self) -> DMState:
        return DMState.unpack(self.trajectory.final, self.charges)

    def csv_header(self) -> tuple:
        return ("t", "charge", *(f"norm_{i}" for i in range(len(self.charges))), "lorenz_sup")

    def csv_rows(self):
        return [
            (t, q, *norms, lz)
            for t, q, norms, lz in zip(self.times, self.charge_log, self.species_norm_log, self.lorenz_log)
        ]

    def charge_drift(self) -> float:
        """Largest charge change relative to the total absolute charge sum |mu_l| N_l."""
        q0 = self.charge_log[0]
        scale = sum(abs(mu) * n for mu, n in zip(self.charges, self.species_norm_log[0]))
        if scale == 0:
            scale = 1.0
        return max(abs(q - q0) for q in self.charge_log) / scale

    def species_norm_drift(self) -> float:
        n = np.array(self.species_norm_log)
        if n.size == 0:
            return 0.0
        ref = np.where(n[0] > 0, n[0], 1.0)
        return float(np.max(np.abs(n - n[0]) / ref))


DEFAULT_EPSILON = 1e-3


def evolve_dm(
    initial: DMState,
    t_end: float,
    ctl: SolveControls | None = None,
    m: Mollifier | None = None,
    rep: CliffordRep | None = None,
) -> DMTrajectory:
    """Integrate the packed system and log charge, species norms and d*A."""
    rep = rep or CliffordRep.standard()
    ctl = ctl or SolveControls()
    m = m or Mollifier(DEFAULT_EPSILON)
    system = build_dm_system(initial.charges, rep)
    traj = integrate(system, initial.pack(), m, t_end, ctl)
    out = DMTrajectory(traj, initial.charges)
    for t, u in zip(traj.times, traj.states):
        state = DMState.unpack(u, initial.charges)
        out.times.append(t)
        out.charge_log.append(total_charge(state, rep))
        out.species_norm_log.append(species_norms(state, rep))
        out.lorenz_log.append(lorenz_residual(state)[1])
    return out


# initial-data files ------------------------------------------------------------------


def _spectrum_section(f: Field) -> dict:
    c = f.coefficients[0]
    k = np.fft.fftfreq(f.spec.modes, 1.0 / f.spec.modes).astype(int)
    return {str(int(k[i])): f"{float(c[i].real)!r} {float(c[i].imag)!r}" for i in np.nonzero(c)[0]}


def write_initial_data(state: DMState, path) -> None:
    """Plain-text spectra: one section per scalar component, ``mode = re im``."""
    cfg = configparser.ConfigParser()
    cfg["grid"] = {"modes": str(state.spec.modes), "charges": ", ".join(repr(float(mu)) for mu in state.charges)}
    for i, s in enumerate(state.species):
        for j, comp in enumerate(s.spinor.components()):
            cfg[f"spinor.{i}.{j}"] = _spectrum_section(comp)
    for name, f in (("potential", state.potential), ("potential_dt", state.potential_dt)):
        for axis, comp in zip(POTENTIAL_NAMES, f.components()):
            cfg[f"{name}.{axis}"] = _spectrum_section(comp)
    with open(path, "w") as fh:
        cfg.write(fh)


def _read_spectrum(cfg, section: str, spec: GridSpec) -> Field:
    c = np.zeros(spec.modes, dtype=complex)
    if cfg.has_section(section):
        for key, val in cfg[section].items():
            k = int(key)
            if abs(k) >= spec.modes // 2:
                raise ValueError(f"mode {k} in [{section}] does not fit {spec.modes} modes")
            re, im = (float(v) for v in val.split())
            c[k % spec.modes] = complex(re, im)
    return Field(spec, c)


def read_initial_data(path) -> DMState:
    cfg = configparser.ConfigParser()
    if not cfg.read(Path(path)):
        raise FileNotFoundError(path)
    modes = cfg.getint("grid", "modes")
    raw = cfg.get("grid", "charges", fallback="").strip()
    charges = [float(v) for v in raw.split(",")] if raw else []
    cspec = GridSpec(modes=modes, kind="complex")
    rspec = GridSpec(modes=modes)
    species = tuple(
        Species(mu, Field.stack([_read_spectrum(cfg, f"spinor.{i}.{j}", cspec) for j in range(2)]))
        for i, mu in enumerate(charges)
    )
    pot = Field.stack([_read_spectrum(cfg, f"potential.{a}", rspec) for a in POTENTIAL_NAMES])
    pot_dt = Field.stack([_read_spectrum(cfg, f"potential_dt.{a}", rspec) for a in POTENTIAL_NAMES])
    return DMState(species, pot, pot_dt, derivative(pot, 0))


# bundled states ------------------------------------------------------------------------


def _random_trig(rng, spec: GridSpec, degree: int, amplitude: float) -> Field:
    c = np.zeros((spec.width,) + spec.shape, dtype=complex)
    for k in range(-degree, degree + 1):
        c[:, k % spec.modes] = amplitude * (rng.uniform(-1, 1, spec.width) + 1j * rng.uniform(-1, 1, spec.width))
    f = Field(spec, c)
    return f if spec.kind == "complex" else Field.from_values(spec, f.values.real)


def random_state(seed: int = 0, modes: int = 32, charges=(1.0, -0.7), degree: int = 3, amplitude: float = 0.3) -> DMState:
    """Unconstrained state: random spinors, potential and time derivative."""
    rng = np.random.default_rng(seed)
    cspec = GridSpec(modes=modes, width=2, kind="complex")
    rspec = GridSpec(modes=modes, width=2)
    species = tuple(Species(float(mu), _random_trig(rng, cspec, degree, amplitude)) for mu in charges)
    potential = _random_trig(rng, rspec, degree, amplitude)
    potential_dt = _random_trig(rng, rspec, degree, amplitude)
    zero = DMState.zero(charges, modes).potential
    return with_potential(DMState(species, zero, zero, zero), potential, potential_dt)


def neutral_pair(modes: int = 64, rep: CliffordRep | None = None) -> DMState:
    """Two species of charge +1 and -1 with equal norms, completed to Lorenz data."""
    cspec = GridSpec(modes=modes, width=2, kind="complex")
    rspec = GridSpec(modes=modes)
    psi1 = Field.from_function(cspec, lambda x: np.array([0.3 * np.exp(1j * x) + 0.1, 0.2 * np.cos(2 * x) + 0.05j]))
    psi2 = Field.from_function(cspec, lambda x: np.array([0.2 * np.sin(x) + 0.1j, 0.25 * np.exp(-1j * x)]))
    zero = DMState.zero((1.0,), modes)
    n1 = species_norms(DMState((Species(1.0, psi1),), zero.potential, zero.potential, zero.potential), rep)[0]
    n2 = species_norms(DMState((Species(1.0, psi2),), zero.potential, zero.potential, zero.potential), rep)[0]
    species = (Species(1.0, psi1), Species(-1.0, psi2 * np.sqrt(n1 / n2)))
    a_x = Field.from_function(rspec, lambda x: 0.1 * np.sin(x))
    a_x_dt = Field.from_function(rspec, lambda x: 0.05 * np.cos(2 * x))
    return lorenz_initial_data(species, a_x, a_x_dt, rep)
