"""Eisenstein series for PSL(2, Z[i]) on H^3: truncated sums, constant terms, C(s).

Conventions.  A group element g in SL(2, C) has Iwasawa height e^t with
t = -log(|c|^2 + |d|^2) read off its bottom row, and sphere point
X = 2 conj(c) d / (|c|^2 + |d|^2) (complex part) plus a real third coordinate.
The spherical function is phi_s(g) = e^{st}; the degree-m highest-weight
harmonic is conj(X)^m = (x_0 - i x_1)^m.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .harmonics import SmoothProfile, pm_eval, smooth_step
from .picard import (
    GaussianInt,
    canonical_nonzero,
    coprime_residues,
    euler_phi,
    gauss_reduce,
    haar_batch,
    covolume,
    nak_c,
    sample_su2,
)

N_DIM = 2


class ConvergenceWarning(UserWarning):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class CosetRep:
    c: GaussianInt
    d: GaussianInt


@dataclass(frozen=True)
class TruncationParams:
    """N bounds |c|^2; ``window`` is the radius in the u = z + d/c plane summed exactly."""

    N: int = 20
    quad_points: int = 64
    window: float = 1.5
    max_terms: int = 10_000_000

    def tail_estimate(self, s: float, h: float) -> float:
        return tail_beyond_N(s, h, self.N)


def enumerate_cosets(N: int) -> list[CosetRep]:
    """Double-coset representatives: canonical c with |c|^2 <= N, d coprime mod c, plus (0, 1)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    out = [CosetRep(GaussianInt(0, 0), GaussianInt(1, 0))]
    for c in canonical_nonzero(N):
        out.extend(CosetRep(c, d) for d in coprime_residues(c))
    return out


def coset_count(N: int) -> int:
    """len(enumerate_cosets(N)), from Euler's function alone."""
    return 1 + sum(euler_phi(c) for c in canonical_nonzero(N))


@lru_cache(maxsize=None)
def _families(N: int) -> tuple[tuple[complex, float, np.ndarray], ...]:
    """Per canonical c: (c, |c|^2, array of d0 / c for coprime residues d0)."""
    out = []
    for c in canonical_nonzero(N):
        cz = complex(c.re, c.im)
        ds = np.array([complex(d.re, d.im) for d in coprime_residues(c)])
        out.append((cz, float(c.norm()), ds / cz))
    return tuple(out)


def coset_weight_sum(s: float, N: int | None) -> float:
    """sum over canonical c (|c|^2 <= N, or all c if N is None) of phi(c) |c|^{-2s}."""
    if N is None:
        return dedekind_zeta(s - 1) / dedekind_zeta(s)
    return float(sum(euler_phi(c) * float(c.norm()) ** (-s) for c in canonical_nonzero(N)))


def dirichlet_beta(s: float) -> float:
    return float((special.zeta(s, 0.25) - special.zeta(s, 0.75)) / 4**s)


def dedekind_zeta(s: float) -> float:
    """zeta of Q(i): zeta(s) * beta(s)."""
    return float(special.zeta(s) * dirichlet_beta(s))


def scattering_exact(s: float) -> float:
    """Closed-form C(s) for the Picard lattice (reference value)."""
    return math.pi / (s - 1) * dedekind_zeta(s - 1) / dedekind_zeta(s)


# ----------------------------------------------------------------------------
# term evaluation


def _row_weight(C, D, s, m):
    """(|C|^2 + |D|^2)^{-s} conj(X)^m for bottom rows (C, D)."""
    tot = np.abs(C) ** 2 + np.abs(D) ** 2
    val = tot ** (-s)
    if m:
        val = val * (2 * C * np.conj(D) / tot) ** m
    return val


def _fixed_k(m: int) -> np.ndarray:
    """K element whose sphere point is (1, 0, 0) so that conj(X)^m = 1 there."""
    r = 1 / math.sqrt(2)
    return np.array([[r, -r], [r, r]], dtype=complex)


def term_profile(u, h, s, m, k):
    """Contribution of (c, d) divided by |c|^{-2s}, as a function of u = z + d/c."""
    C = h * k[0, 0] + u * k[1, 0]
    D = h * k[0, 1] + u * k[1, 1]
    return _row_weight(C, D, s, m) * h**s


def _z_h(g: np.ndarray) -> tuple[complex, float]:
    c, d = g[1]
    den = abs(c) ** 2 + abs(d) ** 2
    z = (g[0, 0] * np.conj(c) + g[0, 1] * np.conj(d)) / den
    return complex(z), 1 / den


def _k_of(g: np.ndarray) -> np.ndarray:
    z, h = _z_h(g)
    r = math.sqrt(h)
    inv_na = np.array([[1 / r, -z / r], [0, r]], dtype=complex)
    return inv_na @ g


def _coprime_mask(c, d: np.ndarray) -> np.ndarray:
    a = np.broadcast_to(np.asarray(c, dtype=complex), np.shape(d)).copy()
    b = d.astype(complex)
    while np.any(b != 0):
        nz = b != 0
        q = np.zeros_like(a)
        q[nz] = a[nz] / b[nz]
        q = np.round(q.real) + 1j * np.round(q.imag)
        a, b = np.where(nz, b, a), np.where(nz, a - q * b, 0)
    return np.abs(a) ** 2 == 1


def _window_terms(z: complex, h: float, k: np.ndarray, s: float, m: int, trunc: TruncationParams):
    """Exact sum over (c, d) with |c|^2 <= N and |z + d/c| < window, plus per-c remainder bounds."""
    total = 0j
    bound = 0.0
    count = 0
    rho = trunc.window
    for c, cc, _ in _families(trunc.N):
        mod = math.sqrt(cc)
        centre = -c * z
        r = rho * mod
        xs = np.arange(math.ceil(centre.real - r), math.floor(centre.real + r) + 1)
        ys = np.arange(math.ceil(centre.imag - r), math.floor(centre.imag + r) + 1)
        d = (xs[:, None] + 1j * ys[None, :]).ravel()
        u = z + d / c
        d = d[np.abs(u) < rho]
        d = d[_coprime_mask(c, d)]
        count += len(d)
        if count > trunc.max_terms:
            raise BudgetExceeded(f"more than {trunc.max_terms} terms")
        u = z + d / c
        total += cc ** (-s) * np.sum(term_profile(u, h, s, m, k))
        bound += window_remainder_bound(s, h, mod, rho)
    return total, bound, count


def window_remainder_bound(s: float, h: float, mod_c: float, rho: float) -> float:
    """Upper bound for the terms of one c with |u| >= rho (all lattice d, |X| <= 1)."""
    delta = 1 / (math.sqrt(2) * mod_c)
    a = rho - 2 * delta
    if a <= 0:
        return math.inf
    return mod_c ** (2 - 2 * s) * 2 * math.pi * h**s * (1 + delta / a) * (a * a + h * h) ** (1 - s) / (2 * (s - 1))


def _full_plane_bound(s: float, h: float) -> float:
    """sum over all d of one c, divided by |c|^{2-2s}."""
    line = math.sqrt(math.pi) * special.gamma(s - 0.5) / (2 * special.gamma(s))
    return h**s * (
        math.pi / 2 * h ** (-2 * s) + math.pi * h ** (2 - 2 * s) / (s - 1) + math.sqrt(2) * math.pi * line * h ** (1 - 2 * s)
    )


def tail_beyond_N(s: float, h: float, N: int) -> float:
    """Upper bound for all terms with |c|^2 > N (requires s > 2)."""
    if s <= 2:
        return math.inf
    a = math.sqrt(N) - math.sqrt(2)
    if a <= 0:
        return math.inf
    d0 = 1 / math.sqrt(2)
    csum = math.pi / 2 * (a ** (4 - 2 * s) / (2 * s - 4) + d0 * a ** (3 - 2 * s) / (2 * s - 3))
    return _full_plane_bound(s, h) * csum


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    tail_bound: float
    terms: int
    conditional: bool = False


def _eval_g(m: int, s: float, g: np.ndarray, trunc: TruncationParams) -> SeriesValue:
    conditional = s <= N_DIM
    if conditional:
        warnings.warn("Re(s) <= 2: the series converges only conditionally", ConvergenceWarning, stacklevel=3)
    z, h = _z_h(g)
    k = _k_of(g)
    ident = complex(_row_weight(g[1, 0], g[1, 1], s, m))
    body, bound, count = _window_terms(z, h, k, s, m, trunc)
    bound += tail_beyond_N(s, h, trunc.N)
    return SeriesValue(ident + body, bound, count + 1, conditional)


def eisenstein_eval(s: float, z: complex, h: float, trunc: TruncationParams = TruncationParams()) -> SeriesValue:
    """Spherical series at the point (z, h) of H^3."""
    g = nak_c(np.array(z), np.array(h), np.eye(2, dtype=complex))
    return _eval_g(0, s, g, trunc)


def eisenstein_nonspherical_eval(m: int, s: float, g: np.ndarray, trunc: TruncationParams = TruncationParams()) -> SeriesValue:
    """sum over cosets of phi_s(gamma g) conj(X(gamma g))^m, for g in SL(2, C)."""
    return _eval_g(m, s, np.asarray(g, dtype=complex), trunc)


def fixed_term_sum(s: float, m: int, g: np.ndarray, terms: list[tuple[complex, complex]]) -> complex:
    """Sum over an explicit list of bottom rows (c, d); used for finite differences."""
    g = np.asarray(g, dtype=complex)
    rows = np.array(terms, dtype=complex)
    C = rows[:, 0] * g[0, 0] + rows[:, 1] * g[1, 0]
    D = rows[:, 0] * g[0, 1] + rows[:, 1] * g[1, 1]
    return complex(np.sum(_row_weight(C, D, s, m)))


def window_term_list(z: complex, trunc: TruncationParams, extra: float = 0.5) -> list[tuple[complex, complex]]:
    """Bottom rows (c, d) summed by the windowed evaluation near z (window enlarged by ``extra``)."""
    out = [(0j, 1 + 0j)]
    rho = trunc.window + extra
    for c, cc, _ in _families(trunc.N):
        centre = -c * z
        r = rho * math.sqrt(cc)
        xs = np.arange(math.ceil(centre.real - r), math.floor(centre.real + r) + 1)
        ys = np.arange(math.ceil(centre.imag - r), math.floor(centre.imag + r) + 1)
        d = (xs[:, None] + 1j * ys[None, :]).ravel()
        d = d[np.abs(z + d / c) < rho]
        d = d[_coprime_mask(c, d)]
        out.extend((c, dd) for dd in d)
    return out


def raising_consistency(s: float, m: int, g: np.ndarray, trunc: TruncationParams, step: float = 1e-3) -> float:
    """Relative gap between R^+ applied to the degree-m sum and (s + m) times the degree-(m+1) sum.

    Both sides use one fixed set of cosets, so the check is term-by-term exact
    up to finite-difference error.
    """
    from .lie import lie_derivative_numeric, raising_matrix
    from .picard import complex_to_vahlen, vahlen_to_complex

    g = np.asarray(g, dtype=complex)
    z, _ = _z_h(g)
    terms = window_term_list(z, trunc)
    lhs = lie_derivative_numeric(
        raising_matrix(N_DIM), lambda gv: fixed_term_sum(s, m, vahlen_to_complex(gv), terms), complex_to_vahlen(g), step
    )
    rhs = (s + m) * fixed_term_sum(s, m + 1, g, terms)
    return abs(lhs - rhs) / abs(rhs)


def laplacian_residual(s: float, z: complex, h: float, trunc: TruncationParams, step: float = 1e-3) -> float:
    """|(Delta + s(2 - s)) E| / |E| by central differences on a fixed term set."""
    terms = window_term_list(z, trunc)

    def E(zz, hh):
        return fixed_term_sum(s, 0, nak_c(np.array(zz), np.array(hh), np.eye(2, dtype=complex)), terms).real

    e0 = E(z, h)
    dxx = (E(z + step, h) - 2 * e0 + E(z - step, h)) / step**2
    dyy = (E(z + 1j * step, h) - 2 * e0 + E(z - 1j * step, h)) / step**2
    dhh = (E(z, h + step) - 2 * e0 + E(z, h - step)) / step**2
    dh = (E(z, h + step) - E(z, h - step)) / (2 * step)
    lap = h * h * (dxx + dyy + dhh) - h * dh
    return abs(lap + s * (2 - s) * e0) / abs(e0)


# ----------------------------------------------------------------------------
# constant term


def _window(r, rho):
    return 1 - smooth_step((r - rho) / rho)


@lru_cache(maxsize=None)
def _polar_rule(rho: float, radial: int = 96, angular: int = 64):
    """Nodes and weights (in du) covering |u| >= rho."""
    x, w = special.roots_legendre(radial)
    x, w = (x + 1) / 2, w / 2
    r_mid = rho + rho * x
    w_mid = rho * w
    # |u| >= 2 rho via r = 2 rho / v
    r_tail = 2 * rho / x
    w_tail = 2 * rho * w / x**2
    r = np.concatenate([r_mid, r_tail])
    wr = np.concatenate([w_mid, w_tail]) * r
    theta = 2 * np.pi * np.arange(angular) / angular
    u = (r[:, None] * np.exp(1j * theta[None, :])).ravel()
    wt = (wr[:, None] * np.full(angular, 2 * np.pi / angular)[None, :]).ravel()
    return u, wt


def _windowed_cell_integral(h, s, m, k, shifts, rho, q, batch=16):
    """Trapezoid over the unit square of sum_shift sum_{lattice k} chi F(z + shift + k)."""
    g = (np.arange(q) + 0.5) / q
    zz = (g[:, None] + 1j * g[None, :]).ravel()
    reach = int(math.ceil(2 * rho)) + 1
    lat = np.arange(-reach - 1, reach + 1)
    trans = (lat[:, None] + 1j * lat[None, :]).ravel()
    grid = zz[:, None] + trans[None, :]
    shifts = np.atleast_1d(shifts)
    total = 0j
    for i in range(0, len(shifts), batch):
        u = grid[None, :, :] + shifts[i : i + batch, None, None]
        r = np.abs(u)
        live = r < 2 * rho
        ul = u[live]
        total += np.sum(_window(r[live], rho) * term_profile(ul, h, s, m, k))
    return total / len(zz)


def _remainder_integral(h, s, m, k, rho):
    u, w = _polar_rule(float(rho))
    chi = _window(np.abs(u), rho)
    return np.sum(w * (1 - chi) * term_profile(u, h, s, m, k))


def constant_term_numeric(m: int, s: float, h: float, trunc: TruncationParams = TruncationParams()) -> complex:
    """Unit-square average of the truncated series at u_x a_{log h} k.

    The identity coset contributes h^s exactly.  Every other coset with
    |c|^2 <= N enters through a windowed periodic sum integrated by the
    tensor trapezoid rule plus the integral of what the window removes.
    """
    k = _fixed_k(m)
    rho = trunc.window
    total = complex(h**s)
    rem = _remainder_integral(h, s, m, k, rho)
    count = 1
    for c, cc, shifts in _families(trunc.N):
        count += len(shifts)
        if count > trunc.max_terms:
            raise BudgetExceeded(f"more than {trunc.max_terms} cosets")
        # d0/c reduced mod Z[i]: the periodic sum only sees the class of the shift
        red = shifts - (np.floor(shifts.real) + 1j * np.floor(shifts.imag))
        cell = _windowed_cell_integral(h, s, m, k, red, rho, trunc.quad_points)
        total += cc ** (-s) * (cell + len(shifts) * rem)
    return total


DEFAULT_HEIGHTS = (0.8, 1.2, 1.8, 2.5, 3.5)


@dataclass
class ConstantTermFit:
    m: int
    s: float
    heights: tuple
    values: np.ndarray
    leading: complex
    secondary: complex
    residual: float
    condition: float

    @property
    def coefficient(self) -> complex:
        """Second coefficient divided by P_m(s) (phi(k) = 1 for the fixed k)."""
        return self.secondary / pm_eval(N_DIM, self.m, self.s)


def fit_constant_term(m: int, s: float, trunc: TruncationParams = TruncationParams(), heights=DEFAULT_HEIGHTS) -> ConstantTermFit:
    hs = np.asarray(heights, dtype=float)
    vals = np.array([constant_term_numeric(m, s, float(h), trunc) for h in hs])
    # scale rows by 1/h^s so both unknowns enter with comparable weight
    A = np.stack([np.ones_like(hs), hs ** (N_DIM - 2 * s)], axis=1)
    b = vals / hs**s
    cond = float(np.linalg.cond(A))
    if cond > 1e8:
        raise ValueError(f"ill-conditioned fit (cond {cond:.2e})")
    coef, *_ = np.linalg.lstsq(A.astype(complex), b, rcond=None)
    resid = float(np.max(np.abs(A @ coef - b) / np.abs(b)))
    return ConstantTermFit(m, s, tuple(hs), vals, complex(coef[0]), complex(coef[1]), resid, cond)


@dataclass
class CEstimate:
    s: float
    m: int
    N: int
    truncated: float
    full: float
    err: float
    leading: float
    residual: float

    def to_record(self) -> dict:
        return {
            "s": self.s,
            "m": self.m,
            "N": self.N,
            "C_truncated": self.truncated,
            "C_estimate": self.full,
            "err": self.err,
            "leading": self.leading,
            "fit_residual": self.residual,
        }


def estimate_C(s: float, m: int = 0, trunc: TruncationParams = TruncationParams(), heights=DEFAULT_HEIGHTS) -> CEstimate:
    """C(s) from the constant term of the degree-m series.

    ``truncated`` is the coefficient of the truncated series; ``full`` rescales
    it by the ratio of the complete coset weight sum to the truncated one.
    """
    if not N_DIM < s <= 3:
        raise ValueError("need 2 < s <= 3")
    fit = fit_constant_term(m, s, trunc, heights)
    trunc_c = fit.coefficient.real
    ratio = coset_weight_sum(s, None) / coset_weight_sum(s, trunc.N)
    full = trunc_c * ratio
    err = abs(full) * fit.residual + abs(fit.coefficient.imag) * ratio
    return CEstimate(s, m, trunc.N, trunc_c, full, err, fit.leading.real, fit.residual)


# ----------------------------------------------------------------------------
# incomplete Eisenstein series


class UnboundedSupport(ValueError):
    pass


@dataclass
class TestFunction:
    """f(u a_t k) = v(t) phi(sphere point of k); phi takes (..., 3) arrays."""

    __test__ = False  # not a pytest class

    v: SmoothProfile
    phi: Callable[[np.ndarray], np.ndarray]

    def from_rows(self, C, D):
        tot = np.abs(C) ** 2 + np.abs(D) ** 2
        t = -np.log(tot)
        w = 2 * np.conj(C) * D / tot
        sph = np.stack([w.real, w.imag, (np.abs(D) ** 2 - np.abs(C) ** 2) / tot], axis=-1)
        return self.v(t) * self.phi(sph)


def incomplete_eisenstein(f: TestFunction, g: np.ndarray) -> np.ndarray:
    """Theta_f at a batch of group elements g (shape (..., 2, 2)).

    Only bottom rows of norm at most e^{-tau} contribute, tau the lower end of
    supp v; these are the short primitive vectors of Z[i]^2 g.
    """
    lo, hi = f.v.support
    if not math.isfinite(lo):
        raise UnboundedSupport("profile must have compact support")
    bound = math.exp(-lo)
    g = np.asarray(g, dtype=complex)
    flat = g.reshape(-1, 2, 2)
    r1, r2 = gauss_reduce(flat[:, 0, :], flat[:, 1, :])
    n2 = np.sum(np.abs(r2) ** 2, axis=-1)
    out = np.zeros(len(flat), dtype=complex)
    fast = bound * n2 < 1
    hit = fast & (n2 <= bound)
    if hit.any():
        out[hit] = f.from_rows(r2[hit, 0], r2[hit, 1])
    for i in np.flatnonzero(~fast):
        out[i] = sum(f.from_rows(C, D) for C, D in short_primitive_vectors(r1[i], r2[i], bound))
    return out.reshape(g.shape[:-2])


def short_primitive_vectors(r1: np.ndarray, r2: np.ndarray, bound: float):
    """Primitive vectors of Z[i] r1 + Z[i] r2 with squared norm <= bound, one per unit class."""
    M = np.stack([r1, r2])
    Minv = np.linalg.inv(M)
    ra = int(math.sqrt(bound) * np.linalg.norm(Minv[:, 0])) + 1
    rb = int(math.sqrt(bound) * np.linalg.norm(Minv[:, 1])) + 1
    ga = np.arange(-ra, ra + 1)
    gb = np.arange(-rb, rb + 1)
    a = (ga[:, None] + 1j * ga[None, :]).ravel()
    b = (gb[:, None] + 1j * gb[None, :]).ravel()
    a, b = (x.ravel() for x in np.meshgrid(a, b, indexing="ij"))
    v = a[:, None] * r1[None, :] + b[:, None] * r2[None, :]
    lead = np.where(a != 0, a, b)
    keep = (lead.real > 0) & (lead.imag >= 0) & (np.sum(np.abs(v) ** 2, axis=-1) <= bound)
    keep[keep] = _coprime_mask(a[keep], b[keep])
    return [(row[0], row[1]) for row in v[keep]]


@dataclass
class UnfoldingResult:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    rel_err: float
    flagged: bool = field(default=False)


def unfolding_check(
    f: TestFunction,
    F: Callable[[np.ndarray], np.ndarray],
    samples: int,
    rng: np.random.Generator,
) -> UnfoldingResult:
    """Monte-Carlo estimates of int_{Gamma\\G} Theta_f F d(sigma) and of its unfolded form.

    sigma is the Haar probability measure.  The unfolded side integrates
    f F e^{-2t} over the unit square x supp(v) x K, halved because
    diag(i, -i) lies in the stabiliser of the cusp, and divided by the covolume.
    """
    batch = haar_batch(rng, samples)
    g = batch.g
    lhs_vals = np.real(incomplete_eisenstein(f, g) * F(g))
    lo, hi = f.v.support
    z = rng.uniform(0, 1, samples) + 1j * rng.uniform(0, 1, samples)
    # t with density proportional to e^{-2t} on [lo, hi]
    mass = (math.exp(-2 * lo) - math.exp(-2 * hi)) / 2
    u = rng.uniform(0, 1, samples)
    t = -0.5 * np.log(np.exp(-2 * lo) - u * (np.exp(-2 * lo) - np.exp(-2 * hi)))
    k = sample_su2(rng, samples)
    g2 = nak_c(z, np.exp(t), k)
    rhs_vals = np.real(f.from_rows(g2[:, 1, 0], g2[:, 1, 1]) * F(g2)) * mass / (2 * covolume())
    lhs, rhs = float(lhs_vals.mean()), float(rhs_vals.mean())
    lhs_se = float(lhs_vals.std(ddof=1) / math.sqrt(samples))
    rhs_se = float(rhs_vals.std(ddof=1) / math.sqrt(samples))
    scale = max(abs(lhs), abs(rhs))
    rel = abs(lhs - rhs) / scale if scale else 0.0
    flagged = scale > 0 and math.hypot(lhs_se, rhs_se) > 0.02 * scale
    return UnfoldingResult(lhs, rhs, lhs_se, rhs_se, rel, flagged)


# ----------------------------------------------------------------------------
# L^2 bound for incomplete Eisenstein series


def scattering_residue(eps=(1e-3, 2e-3, 4e-3, 8e-3)) -> float:
    """Res_{s=2} C(s), extrapolating (s - 2) C(s) to s = 2 with a quadratic fit."""
    e = np.asarray(eps)
    vals = np.array([x * scattering_exact(2 + x) for x in e])
    return float(np.polyfit(e, vals, 2)[-1])


@dataclass
class ThetaBound:
    lhs: float
    lhs_se: float
    rhs: float
    c0: float
    l1: float
    l2_sq: float

    @property
    def holds(self) -> bool:
        return self.lhs - 2 * self.lhs_se <= self.rhs


def theta_norm_bound(f: TestFunction, samples: int, rng: np.random.Generator, sphere_degree: int = 24) -> ThetaBound:
    """Monte-Carlo ||Theta_f||^2 against (2 ||f||_2^2 + c_0 ||f||_1^2) / (index * covolume).

    Norms of f are taken on Q \\ G with e^{-2t} dt dk, dk a probability measure;
    Picard has no poles of C(s) in (1, 2), so no further terms enter.
    """
    from .harmonics import SphereQuadrature

    vals = np.abs(incomplete_eisenstein(f, haar_batch(rng, samples).g)) ** 2
    quad = SphereQuadrature(N_DIM, sphere_degree)
    phi = np.abs(quad.sample(f.phi))
    l1 = f.v.moment(N_DIM).real * float(quad.integrate(phi))
    l2_sq = f.v.moment(N_DIM, 2).real * float(quad.integrate(phi**2))
    c0 = scattering_residue()
    rhs = float((2 * l2_sq + c0 * l1**2) / (2 * covolume()))
    return ThetaBound(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), rhs, c0, l1, l2_sq)
