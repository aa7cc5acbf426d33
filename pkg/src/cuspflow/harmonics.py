"""Harmonic analysis on S^n and the moment functionals built from it.

All sphere integrals use the rotation-invariant probability measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

S_GRID_POINTS = 64


# ----------------------------------------------------------------------------
# P_m(s)


def pm_eval(n: int, m: int, s: complex) -> complex:
    """prod_{k<m} (n - s + k) / (s + k), with P_0 = 1."""
    out = 1.0 + 0j
    for k in range(m):
        if s + k == 0:
            raise ZeroDivisionError(f"P_{m}(s) has a pole at s = {-k}")
        out *= (n - s + k) / (s + k)
    return out


def pm_log(n: int, m: int, s: float) -> float:
    """log P_m(s) for real s in (n/2, n), summed factor by factor."""
    if not n / 2 < s < n:
        raise ValueError("need n/2 < s < n")
    return float(sum(math.log((n - s + k) / (s + k)) for k in range(m)))


def pm_asymptotic_residual(n: int, m: int, s: float) -> float:
    """log P_m(s) - (n - 2s) log(m + 1)."""
    return pm_log(n, m, s) - (n - 2 * s) * math.log(m + 1)


def s_grid(n: int, points: int = S_GRID_POINTS) -> np.ndarray:
    return np.linspace(n / 2 + 0.01, n - 0.01, points)


# ----------------------------------------------------------------------------
# sphere quadrature


@dataclass(frozen=True)
class SphereQuadrature:
    """Product Gauss-Jacobi rule in theta_0..theta_{n-2} times trapezoid in theta_{n-1}.

    Exact for polynomials in (x_0..x_n) of total degree <= ``degree``.
    """

    n: int
    degree: int

    @cached_property
    def _rule(self):
        n, deg = self.n, self.degree
        q = deg // 2 + 1
        axes_nodes, axes_weights = [], []
        for i in range(n - 1):
            k = n - 1 - i  # power of sin(theta_i) in the surface element
            a = (k - 1) / 2
            u, w = special.roots_jacobi(q, a, a)
            axes_nodes.append(np.arccos(u))
            axes_weights.append(w)
        M = deg + 1
        axes_nodes.append(2 * np.pi * np.arange(M) / M)
        axes_weights.append(np.full(M, 2 * np.pi / M))
        grids = np.meshgrid(*axes_nodes, indexing="ij")
        wgrids = np.meshgrid(*axes_weights, indexing="ij")
        theta = np.stack([g.ravel() for g in grids], axis=-1)
        weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
        weights = weights / weights.sum()
        return theta, weights, (q, M)

    @property
    def angles(self) -> np.ndarray:
        return self._rule[0]

    @property
    def weights(self) -> np.ndarray:
        return self._rule[1]

    @cached_property
    def points(self) -> np.ndarray:
        theta = self.angles
        n = self.n
        x = np.empty((theta.shape[0], n + 1))
        prod = np.ones(theta.shape[0])
        for i in range(n):
            x[:, i] = prod * np.cos(theta[:, i])
            prod = prod * np.sin(theta[:, i])
        x[:, n] = prod
        return x

    def integrate(self, values: np.ndarray) -> complex:
        return np.tensordot(self.weights, values, axes=(0, 0))

    def sample(self, phi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return np.asarray(phi(self.points))


def quadrature_for(n: int, m_max: int) -> SphereQuadrature:
    return SphereQuadrature(n, 2 * m_max + 8)


def harmonic_dimension(n: int, m: int) -> int:
    """dim of degree-m harmonics on S^n."""
    if m == 0:
        return 1
    return math.comb(m + n, n) - math.comb(m + n - 2, n)


def zonal_kernels(n: int, m_max: int, t: np.ndarray) -> np.ndarray:
    """Reproducing kernels of degree 0..m_max harmonics (probability measure on S^n), stacked on axis 0."""
    if n < 2:
        raise ValueError("need n >= 2")
    lam = (n - 1) / 2
    t = np.asarray(t, dtype=float)
    c = np.empty((m_max + 1,) + t.shape)
    c[0] = 1.0
    if m_max >= 1:
        c[1] = 2 * lam * t
    for k in range(1, m_max):
        c[k + 1] = (2 * (k + lam) * t * c[k] - (k + 2 * lam - 1) * c[k - 1]) / (k + 1)
    for m in range(m_max + 1):
        at_one = special.binom(m + 2 * lam - 1, m)
        c[m] *= harmonic_dimension(n, m) / at_one
    return c


class QuadratureUnderResolved(RuntimeError):
    pass


def degree_projection_norms(
    values: np.ndarray,
    m_max: int,
    quad: SphereQuadrature,
    method: str = "auto",
    parseval_tol: float = 1e-2,
) -> np.ndarray:
    """||phi_m||_2^2 for m = 0..m_max from samples of phi at the quadrature nodes.

    ``method`` is "harmonics" (n = 2, spherical harmonics plus FFT) or "zonal"
    (any n, double sum against the zonal kernels).  The Parseval defect
    relative to ||phi||_2^2 must stay below ``parseval_tol``.
    """
    values = np.asarray(values, dtype=complex)
    if method == "auto":
        method = "harmonics" if quad.n == 2 else "zonal"
    if method == "harmonics":
        norms = _projection_norms_s2(values, m_max, quad)
    elif method == "zonal":
        norms = _projection_norms_zonal(values, m_max, quad)
    else:
        raise ValueError(f"unknown method {method!r}")
    total = float(np.real(quad.integrate(np.abs(values) ** 2)))
    defect = abs(total - norms.sum())
    if total > 0 and defect > parseval_tol * total:
        raise QuadratureUnderResolved(f"Parseval defect {defect / total:.2e} exceeds tolerance")
    return norms


def _projection_norms_zonal(values, m_max, quad, chunk=256):
    x = quad.points
    fw = values * quad.weights
    out = np.zeros(m_max + 1)
    for i in range(0, len(x), chunk):
        gram = np.clip(x[i : i + chunk] @ x.T, -1.0, 1.0)
        kern = zonal_kernels(quad.n, m_max, gram)
        out += np.real(np.einsum("i,mij,j->m", np.conj(fw[i : i + chunk]), kern, fw))
    return out


def _projection_norms_s2(values, m_max, quad):
    if quad.n != 2:
        raise ValueError("spherical-harmonic path needs n = 2")
    q, M = quad._rule[2]
    if M <= 2 * m_max:
        raise QuadratureUnderResolved("azimuthal resolution too low for m_max")
    theta0 = quad.angles.reshape(q, M, 2)[:, 0, 0]
    polar_w = quad.weights.reshape(q, M).sum(axis=1)
    grid = values.reshape(q, M)
    # Fourier coefficients in the azimuth: (1/M) sum_j f e^{-ik phi_j}
    fhat = np.fft.fft(grid, axis=1) / M
    leg = special.sph_legendre_p_all(m_max, m_max, theta0)[0]  # (l, 2m+1, q)
    out = np.zeros(m_max + 1)
    # probability measure: <f, Y> = sum_i w_i fhat_k(i) P_l^k(theta_i) * sqrt(4 pi)
    for k in range(-m_max, m_max + 1):
        coeff = leg[:, k, :] @ (polar_w * fhat[:, k % M])
        out += 4 * np.pi * np.abs(coeff) ** 2
    return out


def lp_norm(values: np.ndarray, quad: SphereQuadrature, p: float) -> float:
    return float(np.real(quad.integrate(np.abs(values) ** p))) ** (1 / p)


# ----------------------------------------------------------------------------
# profiles in t and product test functions


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1 / np.where(x > 0, x, 1)), 0.0)
    b = np.where(x < 1, np.exp(-1 / np.where(x < 1, 1 - x, 1)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothProfile:
    """Smoothed indicator: 1 on [lo, hi], 0 outside [lo - ramp, hi + ramp]."""

    lo: float
    hi: float
    ramp: float = 0.1

    def __post_init__(self):
        if not (self.hi >= self.lo and self.ramp > 0):
            raise ValueError("need hi >= lo and ramp > 0")

    @property
    def support(self) -> tuple[float, float]:
        return self.lo - self.ramp, self.hi + self.ramp

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return smooth_step((t - self.lo) / self.ramp + 1) * smooth_step((self.hi - t) / self.ramp + 1)

    def moment(self, s: complex, power: int = 1) -> complex:
        """int v(t)^power e^{-s t} dt: closed form on the plateau, Gauss-Legendre on the ramps."""
        a, b = self.support
        nodes, weights = _ramp_rule()
        total = _exp_integral(s, self.lo, self.hi)
        for lo, hi in ((a, self.lo), (self.hi, b)):
            t = lo + (hi - lo) * nodes
            total += (hi - lo) * np.sum(weights * self(t) ** power * np.exp(-s * t))
        return complex(total)

    def moment_reference(self, s: float, power: int = 1) -> float:
        """Adaptive-quadrature version of ``moment`` for real s."""
        a, b = self.support
        val, _ = integrate.quad(lambda t: float(self(t)) ** power * math.exp(-s * t), a, b, points=[self.lo, self.hi], limit=400, epsabs=0, epsrel=1e-10)
        return val


@lru_cache(maxsize=None)
def _ramp_rule(points: int = 160):
    x, w = special.roots_legendre(points)
    return (x + 1) / 2, w / 2


def _exp_integral(s: complex, lo: float, hi: float) -> complex:
    if s == 0:
        return hi - lo
    return (np.exp(-s * lo) - np.exp(-s * hi)) / s


@dataclass
class ProductTestFunction:
    """f(a_t k) = v(t) phi(k) with phi given as a function of the sphere point."""

    v: SmoothProfile
    phi: Callable[[np.ndarray], np.ndarray]
    n: int = 2
    m_max: int = 32
    _norms: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, t, sphere):
        return self.v(t) * self.phi(sphere)

    @property
    def quadrature(self) -> SphereQuadrature:
        return quadrature_for(self.n, self.m_max)

    def degree_norms(self) -> np.ndarray:
        if self._norms is None:
            q = self.quadrature
            self._norms = degree_projection_norms(q.sample(self.phi), self.m_max, q)
        return self._norms


# ----------------------------------------------------------------------------
# M_f and the A_lambda condition


def m_f_eval(n: int, f: ProductTestFunction, s: float) -> float:
    """(sum_m P_m(s) ||phi_m||^2) |int v e^{-st} dt|^2."""
    norms = f.degree_norms()
    weight = sum(float(np.real(pm_eval(n, m, s))) * norms[m] for m in range(len(norms)))
    return weight * abs(f.v.moment(s)) ** 2


def m_f_tilde_eval(n: int, f: ProductTestFunction, s: float) -> float:
    """As m_f_eval with P_m(s) replaced by (m + 1)^{n - 2s}."""
    norms = f.degree_norms()
    weight = sum((m + 1) ** (n - 2 * s) * norms[m] for m in range(len(norms)))
    return weight * abs(f.v.moment(s)) ** 2


def a_lambda_ratio(n: int, v: SmoothProfile, s: float) -> float:
    num = abs(v.moment(s))
    m1 = v.moment(n).real
    m2 = v.moment(n, power=2).real
    if m1 <= 0 or m2 <= 0:
        raise ZeroDivisionError("profile vanishes identically")
    return num / (m1 ** (2 * s / n - 1) * m2 ** (1 - s / n))


def a_lambda_check(n: int, v: SmoothProfile, lam: float, grid: np.ndarray | None = None) -> tuple[bool, float]:
    grid = s_grid(n) if grid is None else grid
    worst = max(a_lambda_ratio(n, v, float(s)) for s in grid)
    return worst <= lam, worst


def moment_bounds(n: int, v: SmoothProfile, tau: float, s_values: np.ndarray | None = None) -> dict[str, float]:
    """Normalised moments against e^{-n tau}: the quantities bounded in the profile construction."""
    s_values = s_grid(n) if s_values is None else s_values
    scale = math.exp(n * tau)
    return {
        "first": v.moment(n).real * scale,
        "second": v.moment(n, 2).real * scale,
        "s_max": max(abs(v.moment(float(s))) * math.exp(float(s) * tau) for s in s_values),
    }


def profile_ratio_bound(n: int, s: float) -> float:
    """(5/n) / (1/(3n))^{s/n}, the bound implied by the moment constraints."""
    return 5 * 3 ** (s / n) * n ** (s / n - 1)


# ----------------------------------------------------------------------------
# Chen-type bound


@dataclass
class ChenReport:
    constant: float
    per_function: list[float]
    split_constant: float


def chen_bound_check(
    corpus: list[Callable[[np.ndarray], np.ndarray]],
    m_max: int,
    n: int = 2,
    s_values: np.ndarray | None = None,
) -> ChenReport:
    """Empirical constants in ||phi_m||^2 <~ (m+1)^{n-1} ||phi||_1^2 and in the splitting bound."""
    quad = quadrature_for(n, m_max)
    s_values = s_grid(n, 16) if s_values is None else s_values
    per, split = [], []
    ms = np.arange(m_max + 1)
    for phi in corpus:
        vals = quad.sample(phi)
        norms = degree_projection_norms(vals, m_max, quad)
        l1 = lp_norm(vals, quad, 1)
        l2 = lp_norm(vals, quad, 2)
        per.append(float(np.max(norms / ((ms + 1) ** (n - 1) * l1 ** 2))))
        for s in s_values:
            lhs = float(np.sum(norms * (ms + 1) ** (n - 2 * s)))
            rhs = l1 ** (2 * (2 * s / n - 1)) * l2 ** (4 * (1 - s / n))
            split.append(lhs / rhs)
    return ChenReport(max(per), per, max(split))


def random_corpus(rng: np.random.Generator, count: int, n: int = 2, max_kappa: float = 150.0):
    """Random test functions on S^n: zonal spikes, smoothed caps and low-degree polynomials."""
    out = []
    for j in range(count):
        axis = rng.normal(size=n + 1)
        axis /= np.linalg.norm(axis)
        kind = j % 3
        if kind == 0:
            kappa = rng.uniform(1, max_kappa)
            out.append(lambda x, a=axis, k=kappa: np.exp(k * (x @ a - 1)))
        elif kind == 1:
            width = rng.uniform(0.2, 1.0)
            out.append(lambda x, a=axis, w=width: smooth_step((x @ a - 1 + w) / (0.5 * w)))
        else:
            coef = rng.normal(size=(n + 1, n + 1))
            lin = rng.normal(size=n + 1)
            out.append(lambda x, c=coef, l_=lin: np.einsum("...i,ij,...j->...", x, c, x) + x @ l_ + 0.3)
    return out
