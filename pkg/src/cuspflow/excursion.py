"""Cusp excursions of the unipotent flow g_t = u^-_t on PSL(2, Z[i]) \\ SL(2, C).

The cusp distance of Gamma g is log of the maximal height over the orbit of
g . e_n, i.e. -log of the squared length of a shortest primitive vector in
the Z[i]-lattice spanned by the rows of g.  Flowing right by u^-_delta maps a
row (alpha, beta) to (alpha + delta beta, beta), so an orbit is followed by
updating a reduced basis and re-reducing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .picard import (
    HaarBatch,
    gauss_reduce,
    haar_batch,
    mobius_c,
    reduce_to_max_height,
    u_lower_c,
)
from .vahlen import UpperHalfPoint, VahlenMatrix, dist_hyp

N_DIM = 2


# ----------------------------------------------------------------------------
# reduced lattice bases


class ReducedRows:
    """Batch of reduced bases (r1, r2) with r2 shortest; components stored as four complex arrays."""

    def __init__(self, g: np.ndarray):
        g = np.asarray(g, dtype=complex).reshape(-1, 2, 2)
        r1, r2 = gauss_reduce(g[:, 0, :], g[:, 1, :])
        self.a1, self.b1 = r1[:, 0].copy(), r1[:, 1].copy()
        self.a2, self.b2 = r2[:, 0].copy(), r2[:, 1].copy()

    def __len__(self) -> int:
        return len(self.a1)

    def flow(self, delta: float) -> None:
        """Right-multiply every lattice by u^-_delta and restore reducedness."""
        self.a1 += delta * self.b1
        self.a2 += delta * self.b2
        self._reduce()

    def _reduce(self, max_iter: int = 1000) -> None:
        a1, b1, a2, b2 = self.a1, self.b1, self.a2, self.b2
        for _ in range(max_iter):
            n1 = a1.real**2 + a1.imag**2 + b1.real**2 + b1.imag**2
            n2 = a2.real**2 + a2.imag**2 + b2.real**2 + b2.imag**2
            swap = n2 > n1
            if swap.any():
                a1, a2 = np.where(swap, -a2, a1), np.where(swap, a1, a2)
                b1, b2 = np.where(swap, -b2, b1), np.where(swap, b1, b2)
                n2 = np.where(swap, n1, n2)
            mu = (a1 * np.conj(a2) + b1 * np.conj(b2)) / n2
            k = np.round(mu.real) + 1j * np.round(mu.imag)
            if not np.any(k):
                break
            a1 = a1 - k * a2
            b1 = b1 - k * b2
        else:
            raise RuntimeError("lattice reduction did not terminate")
        self.a1, self.b1, self.a2, self.b2 = a1, b1, a2, b2

    @property
    def shortest_norm_sq(self) -> np.ndarray:
        return np.abs(self.a2) ** 2 + np.abs(self.b2) ** 2

    @property
    def distance(self) -> np.ndarray:
        return -np.log(self.shortest_norm_sq)


def cusp_distance_c(g: np.ndarray) -> np.ndarray:
    """log of the maximal height over Gamma g . e_n, batched over leading axes."""
    g = np.asarray(g, dtype=complex)
    return ReducedRows(g).distance.reshape(g.shape[:-2])


# ----------------------------------------------------------------------------
# orbit state


@dataclass
class OrbitState:
    """A lift g of x = Gamma g at time ``time``, with cached reduction."""

    base: np.ndarray
    time: float = 0.0
    gamma: np.ndarray | None = field(default=None, repr=False)
    h_max: float | None = None

    @classmethod
    def from_vahlen(cls, g: VahlenMatrix, time: float = 0.0) -> OrbitState:
        from .picard import vahlen_to_complex

        return cls(vahlen_to_complex(g), time)

    @property
    def current(self) -> np.ndarray:
        return self.base @ u_lower_c(self.time)

    def reduce(self, radius: int = 10_000):
        """Certified maximal-height reduction of the current point."""
        g = self.current
        z, h = mobius_c(g, 0j, 1.0)
        red = reduce_to_max_height(UpperHalfPoint((float(z.real), float(z.imag)), float(h)), radius)
        if not red.certified:
            red = reduce_to_max_height(UpperHalfPoint((float(z.real), float(z.imag)), float(h)), 100 * radius)
        self.gamma, self.h_max = red.gamma, red.h_max
        return red

    def advanced(self, dt: float) -> OrbitState:
        return OrbitState(self.base, self.time + dt)


def cusp_distance(x: OrbitState) -> float:
    """log h_max of the current point, via the certified reduction."""
    red = x.reduce()
    if not red.certified:
        raise RuntimeError("reduction could not be certified")
    return math.log(red.h_max)


def flow_step_distance(delta: float) -> float:
    """dist_G(e, g_delta): hyperbolic displacement of the basepoint by u^-_delta."""
    z, h = mobius_c(u_lower_c(delta), 0j, 1.0)
    return dist_hyp(UpperHalfPoint((0.0, 0.0), 1.0), UpperHalfPoint((float(z.real), float(z.imag)), float(h)))


# ----------------------------------------------------------------------------
# orbit series


@dataclass
class ExcursionSeries:
    times: np.ndarray
    dist: np.ndarray
    running_ratio: np.ndarray
    failures: int = 0

    def rows(self, sample_id: int = 0, seed: int | None = None):
        for t, d, r in zip(self.times, self.dist, self.running_ratio):
            yield (sample_id, seed, float(t), float(d), float(r))


def orbit_distances(g: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cusp distances of Gamma g g_t for each lift in g (batch) at increasing times (from 0)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    rows = ReducedRows(g)
    out = np.empty((len(rows), len(times)))
    prev = 0.0
    for j, t in enumerate(times):
        if t != prev:
            rows.flow(t - prev)
            prev = t
        out[:, j] = rows.distance
    return out


def _running_ratio(times, dist):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(times > 1, dist / np.log(times), np.nan)
    # nan until log t > 0; fmax skips it afterwards
    return np.fmax.accumulate(ratio, axis=-1)


def orbit_excursion(x0: OrbitState, T: float, stride: float = 1.0) -> ExcursionSeries:
    if T < 10 or stride <= 0:
        raise ValueError("need T >= 10 and stride > 0")
    count = int(math.floor(T / stride + 1e-9))
    times = x0.time + stride * np.arange(1, count + 1)
    d = orbit_distances(x0.base[None], times)[0]
    return ExcursionSeries(times, d, _running_ratio(times, d))


# ----------------------------------------------------------------------------
# Haar samples


def haar_sample(seed: int) -> OrbitState:
    """One Haar-random point of Gamma \\ G, deterministic in ``seed``."""
    batch = haar_batch(np.random.default_rng(seed), 1, chunk=64)
    return OrbitState(batch.g[0])


def haar_lifts(rng: np.random.Generator, count: int) -> HaarBatch:
    return haar_batch(rng, count)


# ----------------------------------------------------------------------------
# logarithm law


def loglaw_ratio(dist: np.ndarray, times: np.ndarray, T: float) -> np.ndarray:
    """max over t <= T of dist(t), divided by log T (last axis is time)."""
    mask = times <= T
    return np.max(dist[..., mask], axis=-1) / math.log(T)


@dataclass
class LoglawSummary:
    T: float
    samples: int
    median: float
    q25: float
    q75: float
    values: np.ndarray = field(repr=False)

    def to_record(self) -> dict:
        return {"T": self.T, "samples": self.samples, "median": self.median, "iqr": [self.q25, self.q75]}


def _summary(T, vals) -> LoglawSummary:
    q25, med, q75 = np.percentile(vals, [25, 50, 75])
    return LoglawSummary(T, len(vals), float(med), float(q25), float(q75), vals)


def loglaw_statistic(sample_count: int, T: float | list[float], seed: int, stride: float = 1.0):
    """Per-sample log-law statistic for Haar-random starting points.

    With a list of horizons, one orbit run serves all of them and a list of
    summaries is returned.
    """
    horizons = [T] if np.isscalar(T) else list(T)
    top = max(horizons)
    rng = np.random.default_rng(seed)
    g = haar_batch(rng, sample_count).g
    times = stride * np.arange(1, int(top / stride) + 1)
    d = orbit_distances(g, times)
    out = [_summary(h, loglaw_ratio(d, times, h)) for h in horizons]
    return out[0] if np.isscalar(T) else out


# ----------------------------------------------------------------------------
# Borel-Cantelli counters


def shrinking_radii(ells: np.ndarray, eps: float, sign: int) -> np.ndarray:
    return (1 + sign * eps) / N_DIM * np.log(ells)


def borel_cantelli_counts(g: np.ndarray, eps: float, sign: int, L: int, horizons: list[int]) -> np.ndarray:
    """#{l in [L, T] : dist(x g_l) > r_l} for each lift and each horizon T (shape (samples, horizons))."""
    top = max(horizons)
    ells = np.arange(L, top + 1, dtype=float)
    d = orbit_distances(g, ells)
    hits = d > shrinking_radii(ells, eps, sign)
    cum = np.cumsum(hits, axis=-1)
    return np.stack([cum[:, h - L] for h in horizons], axis=-1)


def borel_cantelli_counter(x0: OrbitState, eps: float, sign: int, L: int, T: int) -> int:
    return int(borel_cantelli_counts(x0.current[None], eps, sign, L, [T])[0, 0])


# ----------------------------------------------------------------------------
# the sets D_m


@dataclass(frozen=True)
class DmSpec:
    m: int
    eps: float = 0.1
    radius_shift: float = 0.0  # added to every r_l; +inf empties the set

    @property
    def p(self) -> int:
        return 2 * self.m

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.m, self.p + 1)

    def r(self, ell):
        return (1 - self.eps) / N_DIM * np.log(ell) + self.radius_shift

    def tau(self, ell):
        return self.r(ell) - 2 * np.log(ell) + math.log(2)

    def measure_sum(self) -> float:
        """sum over l in [m, 2m] of e^{-n r_l}."""
        return float(np.sum(np.exp(-N_DIM * self.r(self.ells))))

    def volume(self) -> float:
        """Closed-form measure of D_m for e^{-2t} dt dx: each slab is (pi/4) e^{-2 r_l} / 2."""
        return float(np.sum(math.pi / 4 * np.exp(-N_DIM * self.r(self.ells)) / 2))


def in_slab(c, d, r) -> np.ndarray:
    """Bottom row (c, d) lies in Q A(r) B^-: |d|^2 <= e^{-r} and |d^{-1} c| < 1/2."""
    dd = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return (dd > 0) & (dd <= np.exp(-r)) & (np.abs(c) ** 2 < 0.25 * dd)


@dataclass
class Membership:
    member: np.ndarray
    witness: np.ndarray
    unknown: np.ndarray


def dm_membership(g: np.ndarray, spec: DmSpec) -> Membership:
    """Membership of Gamma g (batch) in Y_{D_m}.

    For l in [m, 2m] a bottom row in Q A(r_l) B^- has squared length below
    (5/4) e^{-r_l}; when that is < 1 it can only be the shortest vector, so
    checking the reduced basis is exhaustive.  Otherwise the verdict is
    unknown and counted as non-member.
    """
    g = np.asarray(g, dtype=complex).reshape(-1, 2, 2)
    ells = spec.ells.astype(float)
    rs = spec.r(ells)
    conclusive = 1.25 * np.exp(-rs) < 1
    rows = ReducedRows(g)
    member = np.zeros(len(rows), dtype=bool)
    unknown = np.zeros(len(rows), dtype=bool)
    witness = np.full(len(rows), -1)
    prev = 0.0
    for ell, r, ok in zip(ells, rs, conclusive):
        rows.flow(ell - prev)
        prev = ell
        hit = in_slab(rows.a2, rows.b2, r) & ~member
        if not ok:
            unknown |= ~member
            continue
        witness[hit] = int(ell)
        member |= hit
    unknown &= ~member
    return Membership(member, witness, unknown)


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SigmaEstimate:
    m: int
    rate: float
    ci: tuple[float, float]
    samples: int
    unknown: int
    flagged: bool

    def to_record(self) -> dict:
        return {"m": self.m, "rate": self.rate, "ci95": list(self.ci), "samples": self.samples, "unknown": self.unknown, "flagged": self.flagged}


def estimate_sigma_Ym(spec: DmSpec, sample_count: int, seed: int, lifts: np.ndarray | None = None) -> SigmaEstimate:
    g = haar_batch(np.random.default_rng(seed), sample_count).g if lifts is None else lifts
    res = dm_membership(g, spec)
    k = int(res.member.sum())
    n_unknown = int(res.unknown.sum())
    flagged = n_unknown > 0.05 * len(g)
    level = 0.99 if flagged else 0.95
    return SigmaEstimate(spec.m, k / len(g), wilson_interval(k, len(g), level), len(g), n_unknown, flagged)


def dm_volume_mc(spec: DmSpec, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo measure of D_m in the (t, x) chart of Q \\ G with density e^{-2t} dt dx.

    Points Q a_t u^-_x are drawn from a box covering every slab, moved by a
    random element of Q (which must not matter) and tested with the group
    criterion at each l.  Returns (estimate, standard error).
    """
    m, p = spec.m, spec.p
    t_lo = float(spec.r(m))
    x = rng.uniform(-p - 0.5, -m + 0.5, samples) + 1j * rng.uniform(-0.5, 0.5, samples)
    t = t_lo + rng.exponential(0.5, samples)
    box = (p - m + 1) * 1.0 * math.exp(-2 * t_lo) / 2
    g = np.zeros((samples, 2, 2), dtype=complex)
    e = np.exp(t / 2)
    g[:, 0, 0] = e
    g[:, 1, 0] = x / e
    g[:, 1, 1] = 1 / e
    # left multiplication by q = u_y diag(w, 1/w) with |w| = 1
    y = rng.normal(size=samples) + 1j * rng.normal(size=samples)
    w = np.exp(2j * np.pi * rng.uniform(size=samples))
    q = np.zeros_like(g)
    q[:, 0, 0] = w
    q[:, 0, 1] = y / w
    q[:, 1, 1] = 1 / w
    g = q @ g
    hit = np.zeros(samples, dtype=bool)
    for ell in spec.ells:
        h = g @ u_lower_c(float(ell))
        hit |= in_slab(h[:, 1, 0], h[:, 1, 1], float(spec.r(ell)))
    frac = hit.mean()
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


def k_ell_sample(spec: DmSpec, ell: int, rng: np.random.Generator, count: int) -> np.ndarray:
    """K-parts of Q a_{t0} u^-_{x - l} with |x| < 1/2, as SU(2) matrices."""
    rad = 0.5 * np.sqrt(rng.uniform(size=count))
    x = rad * np.exp(2j * np.pi * rng.uniform(size=count))
    g = np.zeros((count, 2, 2), dtype=complex)
    g[:, 0, 0] = 1
    g[:, 1, 0] = x - ell
    g[:, 1, 1] = 1
    c, d = g[:, 1, 0], g[:, 1, 1]
    nrm = np.sqrt(np.abs(c) ** 2 + np.abs(d) ** 2)
    k = np.zeros_like(g)
    k[:, 1, 0] = c / nrm
    k[:, 1, 1] = d / nrm
    k[:, 0, 0] = np.conj(k[:, 1, 1])
    k[:, 0, 1] = -np.conj(k[:, 1, 0])
    return k


def tau_inclusion_check(spec: DmSpec, ell: int, rng: np.random.Generator, count: int, depth: float = 5.0) -> float:
    """Fraction of A(tau_l) x K(l) samples that land in Q A(r_l) B^- g_{-l} (should be 1)."""
    k = k_ell_sample(spec, ell, rng, count)
    t = float(spec.tau(ell)) + rng.uniform(0, depth, count)
    a = np.zeros_like(k)
    a[:, 0, 0] = np.exp(t / 2)
    a[:, 1, 1] = np.exp(-t / 2)
    h = a @ k @ u_lower_c(float(ell))
    return float(in_slab(h[:, 1, 0], h[:, 1, 1], float(spec.r(ell))).mean())


def relation_defect(ell: float, rng: np.random.Generator, count: int) -> float:
    """max |t - (t0 - log(1 + |x - l|^2))| for a_t k = q a_{t0} u^-_{x-l}."""
    x = rng.uniform(-0.5, 0.5, count) + 1j * rng.uniform(-0.5, 0.5, count)
    t0 = rng.uniform(-3, 3, count)
    y = rng.normal(size=count) + 1j * rng.normal(size=count)
    w = np.exp(2j * np.pi * rng.uniform(size=count))
    g = np.zeros((count, 2, 2), dtype=complex)
    e = np.exp(t0 / 2)
    g[:, 0, 0] = e
    g[:, 1, 0] = (x - ell) / e
    g[:, 1, 1] = 1 / e
    q = np.zeros_like(g)
    q[:, 0, 0] = w
    q[:, 0, 1] = y / w
    q[:, 1, 1] = 1 / w
    g = q @ g
    t = -np.log(np.abs(g[:, 1, 0]) ** 2 + np.abs(g[:, 1, 1]) ** 2)
    return float(np.max(np.abs(t - (t0 - np.log1p(np.abs(x - ell) ** 2)))))


# ----------------------------------------------------------------------------
# unipotent normal form


def unipotent_normalizer(g: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """(k, eta) with k in SU(2), eta > 0 and k^{-1} u^-_eta k = g up to sign.

    g must be unipotent (trace +-2, g != +-I).
    """
    g = np.asarray(g, dtype=complex)
    sign = 1.0 if np.trace(g).real > 0 else -1.0
    X = sign * g - np.eye(2)
    if np.max(np.abs(X)) < tol:
        raise ValueError("identity has no normal form")
    if abs(np.trace(g) - 2 * sign) > 1e-8 * max(1.0, np.max(np.abs(g))):
        raise ValueError("not unipotent")
    # image of the nilpotent part; k sends it to the e_2 axis
    col = X[:, 0] if np.linalg.norm(X[:, 0]) >= np.linalg.norm(X[:, 1]) else X[:, 1]
    v = col / np.linalg.norm(col)
    k = np.array([[v[1], -v[0]], [np.conj(v[0]), np.conj(v[1])]], dtype=complex)
    Y = k @ X @ np.linalg.inv(k)
    phase = np.angle(Y[1, 0])
    m = np.diag([np.exp(1j * phase / 2), np.exp(-1j * phase / 2)])
    k = m @ k
    Y = k @ X @ np.linalg.inv(k)
    eta = float(Y[1, 0].real)
    return k, eta


def random_unipotent(rng: np.random.Generator) -> np.ndarray:
    """h u_x h^{-1} with h random in SL(2, C) and x random nonzero."""
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h /= np.sqrt(np.linalg.det(h))
    x = rng.normal() + 1j * rng.normal()
    u = np.array([[1, x], [0, 1]], dtype=complex)
    return h @ u @ np.linalg.inv(h)
