"""Exhaustion, slicing and control-sequence bookkeeping in 1+1 Minkowski space.

Geometry: the initial surface is S_inf = {t = 0}, the temporal function is
T = ln t on t > 0, the exhaustion is C_n = (-R_n, R_n) and K_n = D^+(C_n) is
the open triangle |x| + t < R_n.  Slices are S_n = {t = t_n}, t_n = e^{r_n}.

Closed forms used throughout:

* tau_n = ln((R_{n+1} - R_n) / 2), the lowest point of J^+(closure C_n) on the
  boundary of K_{n+1};
* J^-(S_i minus K_i) meets t = s in {|x| >= R_i - 2 t_i + s};
* A_1 = C_1, A_{i+1} = {R_i - 2 t_i <= |x| < R_{i+1}} on S_inf, and the
  terminal region of step n is {|x| >= R_n - 2 t_n + t_{n+1}} on S_{n+1}.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    @property
    def empty(self) -> bool:
        if self.lo < self.hi:
            return False
        return not (self.lo == self.hi and self.lo_closed and self.hi_closed)

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def intersect(self, other: Interval) -> Interval:
        if self.lo > other.lo or (self.lo == other.lo and not self.lo_closed):
            lo, lo_c = self.lo, self.lo_closed
        else:
            lo, lo_c = other.lo, other.lo_closed
        if self.hi < other.hi or (self.hi == other.hi and not self.hi_closed):
            hi, hi_c = self.hi, self.hi_closed
        else:
            hi, hi_c = other.hi, other.hi_closed
        return Interval(lo, hi, lo_c, hi_c)

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{self.lo:.6g}, {self.hi:.6g}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class Region:
    """A union of disjoint x-intervals on the slice t = time (slice 0 is S_inf)."""

    intervals: tuple
    slice_index: int
    time: float

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(iv for iv in self.intervals if not iv.empty))

    @property
    def empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> float:
        return sum(iv.length for iv in self.intervals)

    def intersect(self, other: Region) -> Region:
        out = [a.intersect(b) for a in self.intervals for b in other.intervals]
        return Region(tuple(out), self.slice_index, self.time)

    def meets(self, other: Region) -> bool:
        return not self.intersect(other).empty

    def __str__(self):
        body = " U ".join(str(iv) for iv in self.intervals) or "{}"
        return f"{body} @ t={self.time:.6g}"


def symmetric_band(inner: float, outer: float, inner_closed=True, outer_closed=False) -> tuple:
    """{inner <= |x| < outer} as one or two intervals (one when inner <= 0)."""
    if inner <= 0:
        return (Interval(-outer, outer, outer_closed, outer_closed),)
    return (
        Interval(-outer, -inner, outer_closed, inner_closed),
        Interval(inner, outer, inner_closed, outer_closed),
    )


@dataclass(frozen=True)
class CausalPlan:
    radii: tuple  # R_1 .. R_{n_max+1}
    r_seq: tuple  # r_1 .. r_{n_max+1}
    t_seq: tuple  # t_n = e^{r_n}
    tau: tuple  # tau_1 .. tau_{n_max}
    n_max: int

    def R(self, n: int) -> float:
        return self.radii[n - 1]

    def t(self, n: int) -> float:
        return self.t_seq[n - 1]

    def exhaustion(self, n: int) -> Region:
        return Region((Interval(-self.R(n), self.R(n), False, False),), 0, 0.0)

    def region(self, i: int, n: int) -> Region:
        """A_i^{(n)} for 1 <= i <= n + 1."""
        if not 1 <= i <= n + 1 or n > self.n_max:
            raise IndexError(f"A_{i}^({n}) is not defined on this plan")
        if i == 1:
            return self.exhaustion(1)
        if i <= n:
            return Region(symmetric_band(self.R(i - 1) - 2 * self.t(i - 1), self.R(i)), 0, 0.0)
        edge = self.R(n) - 2 * self.t(n) + self.t(n + 1)
        return Region(symmetric_band(edge, math.inf, outer_closed=False), n + 1, self.t(n + 1))

    def regions(self, n: int) -> list:
        return [self.region(i, n) for i in range(1, n + 2)]

    def limit_region(self, i: int) -> Region:
        return self.region(i, max(i, 1))

    def annulus(self, i: int) -> Region:
        """D_i = C_i minus C_{i-1} (D_1 = C_1)."""
        if i == 1:
            return self.exhaustion(1)
        return Region(symmetric_band(self.R(i - 1), self.R(i)), 0, 0.0)

    def inner_part(self, n: int) -> Region:
        """I_{n+1}^{(n)}: the terminal region inside K_{n+1}."""
        s = self.t(n + 1)
        k = Region((Interval(-(self.R(n + 1) - s), self.R(n + 1) - s, False, False),), n + 1, s)
        return self.region(n + 1, n).intersect(k)

    def outer_part(self, n: int) -> Region:
        """O_{n+1}^{(n)} = S_{n+1} minus K_{n+1}."""
        s = self.t(n + 1)
        return Region(symmetric_band(self.R(n + 1) - s, math.inf), n + 1, s)


def plan(radii, r1: float, n_max: int) -> CausalPlan:
    """Radii R_1 < R_2 < ... (a sequence or a callable n -> R_n), first slice r1."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if callable(radii):
        rs = tuple(float(radii(n)) for n in range(1, n_max + 2))
    else:
        rs = tuple(float(r) for r in radii)
        if len(rs) < n_max + 1:
            raise ValueError(f"need {n_max + 1} radii for n_max = {n_max}")
        rs = rs[: n_max + 1]
    if rs[0] <= 0 or any(b <= a for a, b in zip(rs, rs[1:])):
        raise ValueError("radii must be positive and strictly increasing")
    if not r1 < math.log(rs[0]):
        raise ValueError(f"r1 = {r1} must lie below sup T on D^+(C_1) = ln R_1 = {math.log(rs[0])}")
    r_seq = [float(r1)]
    tau = []
    for n in range(1, n_max + 1):
        tau_n = math.log((rs[n] - rs[n - 1]) / 2)
        tau.append(tau_n)
        r_seq.append(min(r_seq[-1] - 1.0, tau_n))
    t_seq = tuple(math.exp(r) for r in r_seq)
    return CausalPlan(rs, tuple(r_seq), t_seq, tuple(tau), n_max)


def verify_separation(p: CausalPlan) -> list:
    """Per n: J^-(S_{n+1} minus K_{n+1}) misses C_n, i.e. R_{n+1} - 2 t_{n+1} >= R_n."""
    return [p.R(n + 1) - 2 * p.t(n + 1) >= p.R(n) for n in range(1, p.n_max)]


def annulus_hits(p: CausalPlan, i: int) -> list:
    """Indices j with D_i meeting the limit region A_j."""
    d = p.annulus(i)
    return [j for j in range(1, p.n_max + 1) if d.meets(p.limit_region(j))]


def verify_stabilization(p: CausalPlan) -> bool:
    """A_i^{(n)} = A_i^{(m)} for m, n > i + 1, and D_i meets only A_i, A_{i+1}."""
    if p.n_max < 4:
        raise ValueError("stabilization needs n_max >= 4")
    for i in range(1, p.n_max + 1):
        steps = [n for n in range(i + 2, p.n_max + 1)]
        if any(p.region(i, n) != p.region(i, steps[0]) for n in steps[1:]):
            return False
    for i in range(1, p.n_max):
        hits = annulus_hits(p, i)
        if not set(hits) <= {i, i + 1}:
            return False
    return True


# control sequences -------------------------------------------------------------------


@dataclass(frozen=True)
class Transport:
    """Bound transport from ``source`` up to ``target`` (kind: inner or outer)."""

    kind: str
    step: int
    source: Region
    target: Region


Propagator = Callable[[Transport, float], float]


def identity_propagator(transport: Transport, bound: float) -> float:
    return bound


def halving_propagator(transport: Transport, bound: float) -> float:
    return bound / 2


def lapse_propagator(transport: Transport, bound: float) -> float:
    """Loses a factor e^{-gap} over the time gap between the two slices."""
    return bound * math.exp(-(transport.target.time - transport.source.time))


PROBE_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)


def _check_monotone(propagator: Propagator, transport: Transport, bound: float):
    probes = [bound * f for f in PROBE_FACTORS]
    vals = [propagator(transport, b) for b in probes]
    if any(v <= 0 or not math.isfinite(v) for v in vals):
        raise ValueError(f"propagator returned a non-positive bound on {transport.kind} step {transport.step}")
    if any(b < a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"propagator is not monotone on {transport.kind} step {transport.step}")


@dataclass
class ControlSequence:
    delta: float
    a_table: dict  # n -> [a_1^{(n)}, ..., a_{n+1}^{(n)}]
    limits: list  # a_1, a_2, ... (stabilized)
    b_table: list  # b_i = a_i / sqrt(|A_i|)
    annulus_bounds: list  # lower b on D_i
    transports: list = field(default_factory=list)

    def stabilized(self) -> bool:
        for n, row in self.a_table.items():
            for m, other in self.a_table.items():
                for i in range(1, min(n, m) - 1):
                    if row[i - 1] != other[i - 1]:
                        return False
        return True


def propagate_bounds(p: CausalPlan, delta: float, propagator: Propagator = identity_propagator) -> ControlSequence:
    """Materialize the control sequences a^{(n)} for n = 1 .. n_max.

    Step 1 is the split (delta/2, delta/2) on A_1^{(1)} and A_2^{(1)}.  Step n+1
    keeps a_i^{(n)} for i <= n and replaces the last bound by the propagated
    bounds for the inner part (on A_{n+1}^{(n+1)}) and the outer part (on
    A_{n+2}^{(n+1)}).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    table = {1: [delta / 2, delta / 2]}
    transports = []
    for n in range(1, p.n_max):
        last = table[n][-1]
        inner = Transport("inner", n, p.region(n + 1, n + 1), p.inner_part(n))
        outer = Transport("outer", n, p.region(n + 2, n + 1), p.outer_part(n))
        for tr in (inner, outer):
            _check_monotone(propagator, tr, last)
        transports += [inner, outer]
        table[n + 1] = table[n][:n] + [propagator(inner, last), propagator(outer, last)]
    limits = table[p.n_max][: p.n_max]
    b = [a / math.sqrt(p.limit_region(i).measure) for i, a in enumerate(limits, start=1)]
    lower = []
    for i in range(1, p.n_max):
        hits = annulus_hits(p, i)
        lower.append(min(b[j - 1] for j in hits))
    return ControlSequence(delta, table, limits, b, lower, transports)


# export ------------------------------------------------------------------------------------


CSV_HEADER = ("n", "R_n", "r_n", "t_n", "tau_n", "region_inner", "region_outer")


def plan_rows(p: CausalPlan) -> list:
    """Per n: R_n, r_n, t_n, tau_n and the limit region A_n as {inner <= |x| < outer}."""
    rows = []
    for n in range(1, p.n_max + 1):
        ivs = p.limit_region(n).intervals
        right = ivs[-1]
        inner = 0.0 if len(ivs) == 1 else right.lo
        tau = p.tau[n - 1] if n <= len(p.tau) else ""
        rows.append((n, p.R(n), p.r_seq[n - 1], p.t(n), tau, inner, right.hi))
    return rows


def write_plan_csv(p: CausalPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        w.writerows(plan_rows(p))


def diagram(p: CausalPlan, n: int | None = None, width: int = 72) -> str:
    """Plain-text picture of the regions of step n on the right half-line x >= 0."""
    n = p.n_max if n is None else n
    x_max = p.R(n + 1)
    scale = (width - 1) / x_max

    def bar(region: Region, mark: str) -> str:
        cells = [" "] * width
        for iv in region.intervals:
            lo, hi = max(iv.lo, 0.0), min(iv.hi, x_max)
            for c in range(int(round(lo * scale)), int(round(hi * scale)) + 1):
                if 0 <= c < width:
                    cells[c] = mark
        return "".join(cells)

    lines = [f"step n = {n}: regions A_i^(n) on x >= 0, x in [0, {x_max:.4g}]"]
    for i, region in enumerate(p.regions(n), start=1):
        where = "S_inf" if region.slice_index == 0 else f"S_{region.slice_index} (t={region.time:.3g})"
        lines.append(f"A_{i:<3d}|{bar(region, '#' if i % 2 else '=')}| {where}")
    ticks = [" "] * width
    for k in range(1, n + 2):
        c = int(round(p.R(k) * scale))
        if c < width:
            ticks[c] = "|"
    lines.append("C_n  |" + "".join(ticks) + "| boundaries R_1..R_" + str(n + 1))
    return "\n".join(lines)


def tampered(p: CausalPlan, index: int, time: float) -> CausalPlan:
    """Copy of the plan with t_index overridden (for negative controls)."""
    t_seq = list(p.t_seq)
    t_seq[index - 1] = time
    r_seq = list(p.r_seq)
    r_seq[index - 1] = math.log(time)
    return replace(p, t_seq=tuple(t_seq), r_seq=tuple(r_seq))
