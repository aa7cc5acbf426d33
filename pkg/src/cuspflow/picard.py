"""The Picard lattice PSL(2, Z[i]) acting on H^3.

For n = 2 the Vahlen entries live in span{1, e_1}, identified with C via
e_1 -> i, and the group is SL(2, C).  Heights are maximised by finding a
shortest primitive vector of the Z[i]-lattice spanned by the rows of a lift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .clifford import CliffordElement
from .vahlen import UpperHalfPoint, VahlenMatrix


@dataclass(frozen=True, order=True)
class GaussianInt:
    re: int
    im: int

    def __add__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re + o.re, self.im + o.im)

    def __sub__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re - o.re, self.im - o.im)

    def __neg__(self) -> GaussianInt:
        return GaussianInt(-self.re, -self.im)

    def __mul__(self, o: GaussianInt) -> GaussianInt:
        return GaussianInt(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def conj(self) -> GaussianInt:
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_unit(self) -> bool:
        return self.norm() == 1

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def divround(self, o: GaussianInt) -> GaussianInt:
        """Nearest Gaussian integer to self / o (exact integer arithmetic)."""
        num = self * o.conj()
        den = o.norm()
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian integer")
        return GaussianInt(_round_div(num.re, den), _round_div(num.im, den))

    def __mod__(self, o: GaussianInt) -> GaussianInt:
        return self - self.divround(o) * o

    def canonical(self) -> GaussianInt:
        """The associate with re > 0 and im >= 0 (zero maps to zero)."""
        z = self
        for _ in range(4):
            if z.re > 0 and z.im >= 0:
                return z
            z = z * I
        return z


def _round_div(a: int, b: int) -> int:
    # round half up, b > 0
    return (2 * a + b) // (2 * b)


ZERO = GaussianInt(0, 0)
ONE = GaussianInt(1, 0)
I = GaussianInt(0, 1)
UNITS = (ONE, I, GaussianInt(-1, 0), GaussianInt(0, -1))


def gaussian_gcd(a: GaussianInt, b: GaussianInt) -> GaussianInt:
    while not b.is_zero():
        a, b = b, a % b
    return a


def coprime(a: GaussianInt, b: GaussianInt) -> bool:
    return gaussian_gcd(a, b).is_unit()


def canonical_pair(c: GaussianInt, d: GaussianInt) -> tuple[GaussianInt, GaussianInt]:
    """Representative of {u(c, d) : u unit}: first nonzero entry in the canonical quadrant."""
    lead = c if not c.is_zero() else d
    for u in UNITS:
        if (lead * u).canonical() == lead * u:
            return c * u, d * u
    raise ValueError("zero pair")


# ----------------------------------------------------------------------------
# complex fast path


def vahlen_to_complex(g: VahlenMatrix) -> np.ndarray:
    if g.n != 2:
        raise ValueError("complex model requires n = 2")
    return np.array([[complex(e.coeffs[0], e.coeffs[1]) for e in (g.a, g.b)],
                     [complex(e.coeffs[0], e.coeffs[1]) for e in (g.c, g.d)]])


def complex_to_vahlen(m: np.ndarray) -> VahlenMatrix:
    def ce(z: complex) -> CliffordElement:
        return CliffordElement(2, (float(z.real), float(z.imag), 0.0, 0.0))

    return VahlenMatrix(ce(m[0, 0]), ce(m[0, 1]), ce(m[1, 0]), ce(m[1, 1]))


def mobius_c(m: np.ndarray, z, h):
    """Vectorised action of SL(2, C) (shape (..., 2, 2)) on (z, h)."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    w = c * z + d
    den = np.abs(w) ** 2 + np.abs(c) ** 2 * h * h
    z_new = ((a * z + b) * np.conj(w) + a * np.conj(c) * h * h) / den
    return z_new, h / den


def iwasawa_c(m: np.ndarray):
    """(t, sphere point (x0, x1, x2)) from the bottom row, vectorised."""
    c, d = m[..., 1, 0], m[..., 1, 1]
    cc, dd = np.abs(c) ** 2, np.abs(d) ** 2
    tot = cc + dd
    w = 2 * np.conj(c) * d / tot
    return -np.log(tot), np.stack([w.real, w.imag, (dd - cc) / tot], axis=-1)


def lift(z: complex, h: float) -> np.ndarray:
    """u_z a_{log h}: maps the basepoint to (z, h)."""
    r = math.sqrt(h)
    return np.array([[r, z / r], [0, 1 / r]], dtype=complex)


def u_c(x: complex) -> np.ndarray:
    return np.array([[1, x], [0, 1]], dtype=complex)


def u_lower_c(x: complex) -> np.ndarray:
    return np.array([[1, 0], [x, 1]], dtype=complex)


def a_c(t: float) -> np.ndarray:
    return np.array([[math.exp(t / 2), 0], [0, math.exp(-t / 2)]], dtype=complex)


GEN_T = np.array([[1, 1], [0, 1]], dtype=complex)
GEN_TI = np.array([[1, 1j], [0, 1]], dtype=complex)
GEN_S = np.array([[0, -1], [1, 0]], dtype=complex)


# ----------------------------------------------------------------------------
# height maximisation


def gauss_round(z):
    return np.round(np.real(z)) + 1j * np.round(np.imag(z))


def _hermitian(u, v):
    return np.sum(u * np.conj(v), axis=-1)


def gauss_reduce(r1: np.ndarray, r2: np.ndarray, track: bool = False, max_iter: int = 10_000):
    """Gauss reduction over Z[i] of the rows (r1, r2) (vectorised over leading axes).

    On return r2 is a shortest nonzero vector of the lattice Z[i] r1 + Z[i] r2.
    With ``track`` the unimodular transform U (rows r1, r2 = U @ input rows) is
    returned too; its entries are Gaussian integers stored as complex floats.
    """
    r1 = np.array(r1, dtype=complex)
    r2 = np.array(r2, dtype=complex)
    shape = r1.shape[:-1]
    if track:
        U = np.zeros(shape + (2, 2), dtype=complex)
        U[..., 0, 0] = 1
        U[..., 1, 1] = 1
    active = np.ones(shape, dtype=bool)
    for _ in range(max_iter):
        n1 = np.sum(np.abs(r1) ** 2, axis=-1)
        n2 = np.sum(np.abs(r2) ** 2, axis=-1)
        swap = active & (n2 > n1)
        if swap.any():
            t = r1[swap].copy()
            r1[swap] = -r2[swap]
            r2[swap] = t
            if track:
                tu = U[swap, 0].copy()
                U[swap, 0] = -U[swap, 1]
                U[swap, 1] = tu
            n2 = np.where(swap, n1, n2)
        mu = _hermitian(r1, r2) / n2
        k = gauss_round(mu)
        move = active & (k != 0)
        if not move.any():
            break
        k = np.where(move, k, 0)
        r1 = r1 - k[..., None] * r2
        if track:
            U[..., 0, :] = U[..., 0, :] - k[..., None] * U[..., 1, :]
        active = move
    else:
        raise RuntimeError("Gauss reduction did not terminate")
    if track:
        return r1, r2, U
    return r1, r2


@dataclass(frozen=True)
class Reduction:
    gamma: np.ndarray  # Gaussian-integer entries, det 1
    h_max: float
    z: complex
    certified: bool


def reduce_to_max_height(p: UpperHalfPoint, radius: int = 10_000) -> Reduction:
    """gamma in SL(2, Z[i]) maximising the height of gamma . p.

    The candidate comes from Gauss reduction; it is then certified by an
    exhaustive search over bottom rows (c, d) with |c|^2 h^2 below the candidate
    denominator, as long as that search needs at most ``radius`` values of c.
    """
    z = complex(p.x[0], p.x[1])
    h = p.h
    g = lift(z, h)
    _, _, U = gauss_reduce(g[0], g[1], track=True)
    gamma = np.round(U.real) + 1j * np.round(U.imag)
    c, d = gamma[1]
    best = abs(c * z + d) ** 2 + abs(c) ** 2 * h * h
    certified = _certify(z, h, best, radius)
    z_new, h_new = mobius_c(gamma, z, h)
    return Reduction(gamma, float(h_new), complex(z_new), certified)


def _certify(z: complex, h: float, best: float, radius: int) -> bool:
    cmax_sq = best / (h * h)
    if math.pi * cmax_sq + 4 * math.sqrt(cmax_sq) + 1 > radius:
        return False
    slack = 1e-12 * best
    r = int(math.isqrt(int(cmax_sq)) + 1)
    for cr in range(-r, r + 1):
        for ci in range(-r, r + 1):
            c = complex(cr, ci)
            rem = best - abs(c) ** 2 * h * h
            if rem <= slack:
                continue
            centre = -c * z
            rad = math.sqrt(rem)
            for dr in range(math.ceil(centre.real - rad), math.floor(centre.real + rad) + 1):
                for di in range(math.ceil(centre.imag - rad), math.floor(centre.imag + rad) + 1):
                    d = complex(dr, di)
                    if abs(c * z + d) ** 2 < rem - slack and (cr, ci, dr, di) != (0, 0, 0, 0):
                        if coprime(GaussianInt(cr, ci), GaussianInt(dr, di)):
                            return False
    return True


def max_height_batch(z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Maximal height over the orbit, vectorised (Gauss reduction, no certificate)."""
    z = np.asarray(z, dtype=complex)
    h = np.asarray(h, dtype=float)
    r = np.sqrt(h)
    r1 = np.stack([r + 0j, z / r], axis=-1)
    r2 = np.stack([np.zeros_like(z), 1 / r + 0j], axis=-1)
    _, s = gauss_reduce(r1, r2)
    return 1.0 / np.sum(np.abs(s) ** 2, axis=-1)


def in_fundamental_domain(z: complex, h: float, tol: float = 0.0) -> bool:
    """Standard domain: |Re z|, |Im z| <= 1/2 and |z|^2 + h^2 >= 1."""
    return abs(z.real) <= 0.5 + tol and abs(z.imag) <= 0.5 + tol and abs(z) ** 2 + h * h >= 1 - tol


# ----------------------------------------------------------------------------
# arithmetic of Z[i]


@lru_cache(maxsize=None)
def coprime_residues(c: GaussianInt) -> tuple[GaussianInt, ...]:
    """Representatives d mod c with gcd(c, d) a unit, taken in the box around 0."""
    nc = c.norm()
    if nc == 0:
        raise ValueError("c must be nonzero")
    seen = {}
    r = math.isqrt(nc) + 1
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            d = GaussianInt(a, b)
            red = d % c
            if red not in seen and coprime(c, red):
                seen[red] = red
    out = tuple(sorted(seen))
    if len(out) != euler_phi(c):
        raise AssertionError("residue enumeration incomplete")
    return out


def euler_phi_bruteforce(c: GaussianInt) -> int:
    """#(Z[i]/c)^* by counting units in the residue box (reference implementation)."""
    nc = c.norm()
    count = 0
    for a in range(nc):
        for b in range(nc):
            if coprime(c, GaussianInt(a, b)):
                count += 1
    # the box Z/nc x Z/nc covers Z[i]/c exactly nc times
    return count // nc


def _two_squares(p: int) -> GaussianInt:
    a = 1
    while True:
        b2 = p - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            return GaussianInt(a, b)
        a += 1


def gaussian_prime_norms(c: GaussianInt) -> list[int]:
    """Norms of the distinct Gaussian primes dividing c."""
    n = c.norm()
    if n == 0:
        raise ValueError("c must be nonzero")
    out = []
    p = 2
    rest = n
    while p * p <= rest or rest > 1:
        if p * p > rest:
            p = rest
        if rest % p == 0:
            while rest % p == 0:
                rest //= p
            if p == 2:
                out.append(2)
            elif p % 4 == 3:
                out.append(p * p)
            else:
                pi = _two_squares(p)
                for q in (pi, pi.conj()):
                    if (c * q.conj()).re % p == 0 and (c * q.conj()).im % p == 0:
                        out.append(p)
        p += 1
    return out


@lru_cache(maxsize=None)
def euler_phi(c: GaussianInt) -> int:
    """#(Z[i]/c)^* = N(c) prod (1 - 1/N(pi)) over prime divisors pi."""
    val = c.norm()
    for q in gaussian_prime_norms(c):
        val = val // q * (q - 1)
    return val


def canonical_nonzero(limit: int) -> Iterator[GaussianInt]:
    """Nonzero Gaussian integers c (canonical associates) with |c|^2 <= limit, by norm."""
    r = math.isqrt(limit)
    vals = [GaussianInt(a, b) for a in range(1, r + 1) for b in range(0, r + 1) if a * a + b * b <= limit]
    return iter(sorted(vals, key=lambda c: (c.norm(), c.re, c.im)))


# ----------------------------------------------------------------------------
# Haar sampling on Gamma \ G

T0 = math.log(1 / math.sqrt(2))  # lowest height in the standard domain is 1/sqrt(2)


def sample_su2(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform elements of K = SU(2), shape (size, 2, 2)."""
    q = rng.normal(size=(size, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    q1 = q[:, 0] + 1j * q[:, 1]
    q2 = q[:, 2] + 1j * q[:, 3]
    k = np.empty((size, 2, 2), dtype=complex)
    k[:, 0, 0] = np.conj(q2)
    k[:, 0, 1] = -np.conj(q1)
    k[:, 1, 0] = q1
    k[:, 1, 1] = q2
    return k


def nak_c(z, h, k):
    """Batched u_z a_{log h} k."""
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(np.asarray(h, dtype=float))
    top = np.stack([r + 0j, z / r], axis=-1)
    bot = np.stack([np.zeros_like(z), 1 / r + 0j], axis=-1)
    return np.stack([top, bot], axis=-2) @ k


@dataclass(frozen=True)
class HaarBatch:
    z: np.ndarray
    h: np.ndarray
    k: np.ndarray
    proposals: int

    @property
    def g(self) -> np.ndarray:
        return nak_c(self.z, self.h, self.k)

    @property
    def acceptance(self) -> float:
        return len(self.z) / self.proposals


class SamplerError(RuntimeError):
    pass


def haar_batch(rng: np.random.Generator, size: int, chunk: int = 65536) -> HaarBatch:
    """Haar-distributed points of Gamma \\ G by rejection from a Siegel box.

    Proposals: z uniform on [-1/2, 1/2]^2, t - T0 ~ Exp(rate 2) (density e^{-2t}),
    k uniform on K; a proposal is kept iff the identity already attains the
    maximal height.
    """
    zs, hs, ks = [], [], []
    have = proposals = 0
    while have < size:
        z = rng.uniform(-0.5, 0.5, chunk) + 1j * rng.uniform(-0.5, 0.5, chunk)
        t = T0 + rng.exponential(0.5, chunk)
        k = sample_su2(rng, chunk)
        h = np.exp(t)
        keep = max_height_batch(z, h) <= h * (1 + 1e-12)
        need = size - have
        idx = np.flatnonzero(keep)[:need]
        # count proposals only up to the last one used, so the rate is unbiased
        proposals += int(idx[-1]) + 1 if len(idx) == need else chunk
        zs.append(z[idx])
        hs.append(h[idx])
        ks.append(k[idx])
        have += len(idx)
        if proposals >= 10_000 and have < 0.01 * proposals:
            raise SamplerError("rejection rate above 99%")
    return HaarBatch(np.concatenate(zs), np.concatenate(hs), np.concatenate(ks), proposals)


def covolume() -> float:
    """Haar volume of PSL(2, Z[i]) \\ G with dg = e^{-2t} dx dt dk, dk a probability."""
    from scipy.special import zeta

    beta2 = (zeta(2, 0.25) - zeta(2, 0.75)) / 16
    return 2 * zeta(2) * beta2 / math.pi**2
