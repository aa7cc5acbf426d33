"""Vahlen matrices over C_n acting on upper half-space H^{n+1}.

A group element is a 2x2 matrix (a, b; c, d) with entries in C_n that avoid
the vertical generator e_n.  Points of H^{n+1} are x + h e_n with x in V^{n-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clifford import CliffordElement, CliffordError, cl_mul

DEFAULT_TOL = 1e-9
RENORMALIZE_EVERY = 32


class VahlenError(ValueError):
    pass


def _scalar(n: int, x) -> CliffordElement:
    return CliffordElement.scalar(n, x)


@dataclass(frozen=True)
class VahlenMatrix:
    a: CliffordElement
    b: CliffordElement
    c: CliffordElement
    d: CliffordElement

    @property
    def n(self) -> int:
        return self.a.n

    @classmethod
    def identity(cls, n: int, one=1) -> VahlenMatrix:
        return cls(_scalar(n, one), _scalar(n, 0), _scalar(n, 0), _scalar(n, one))

    def entries(self) -> tuple[CliffordElement, ...]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: VahlenMatrix) -> VahlenMatrix:
        return vahlen_mul(self, other)

    def __neg__(self) -> VahlenMatrix:
        return VahlenMatrix(-self.a, -self.b, -self.c, -self.d)

    def scale(self, x) -> VahlenMatrix:
        return VahlenMatrix(self.a * x, self.b * x, self.c * x, self.d * x)

    def to_float(self) -> VahlenMatrix:
        return VahlenMatrix(*(e.to_float() for e in self.entries()))

    def pseudo_determinant(self) -> CliffordElement:
        return cl_mul(self.a, self.d.star()) - cl_mul(self.b, self.c.star())

    def close_to(self, other: VahlenMatrix, tol: float, up_to_sign: bool = True) -> bool:
        if all(x.close_to(y, tol) for x, y in zip(self.entries(), other.entries())):
            return True
        return up_to_sign and all(x.close_to(-y, tol) for x, y in zip(self.entries(), other.entries()))

    def max_abs(self) -> float:
        return max(e.max_abs() for e in self.entries())


def vahlen_check(g: VahlenMatrix, tol: float = DEFAULT_TOL) -> bool:
    """The defining conditions: ab*, cd* in V^{n-1}, ad* - bc* = 1, no e_n in entries."""
    n = g.n
    if any(e.n != n for e in g.entries()):
        return False
    if any(e.uses_generator(n, tol) for e in g.entries()):
        return False
    scale = max(1.0, g.max_abs() ** 2)
    if not cl_mul(g.a, g.b.star()).in_vector_space(n - 1, tol * scale):
        return False
    if not cl_mul(g.c, g.d.star()).in_vector_space(n - 1, tol * scale):
        return False
    return g.pseudo_determinant().close_to(_scalar(n, 1), tol * scale)


def vahlen_mul(g: VahlenMatrix, h: VahlenMatrix) -> VahlenMatrix:
    if g.n != h.n:
        raise VahlenError("dimension mismatch")
    return VahlenMatrix(
        cl_mul(g.a, h.a) + cl_mul(g.b, h.c),
        cl_mul(g.a, h.b) + cl_mul(g.b, h.d),
        cl_mul(g.c, h.a) + cl_mul(g.d, h.c),
        cl_mul(g.c, h.b) + cl_mul(g.d, h.d),
    )


def vahlen_inverse(g: VahlenMatrix) -> VahlenMatrix:
    return VahlenMatrix(g.d.star(), -g.b.star(), -g.c.star(), g.a.star())


def renormalize(g: VahlenMatrix) -> VahlenMatrix:
    """Rescale so that the pseudo-determinant is exactly 1 (float drift control)."""
    delta = float(g.pseudo_determinant().scalar_part)
    if delta <= 0:
        raise VahlenError("pseudo-determinant is not positive")
    return g.scale(1.0 / math.sqrt(delta))


def vahlen_product(factors: Sequence[VahlenMatrix], every: int = RENORMALIZE_EVERY) -> VahlenMatrix:
    """Left-to-right product with periodic renormalisation."""
    if not factors:
        raise VahlenError("empty product")
    out = factors[0]
    for k, f in enumerate(factors[1:], start=1):
        out = vahlen_mul(out, f)
        if k % every == 0:
            out = renormalize(out)
    return out


def canonical_sign(g: VahlenMatrix, tol: float = 1e-12) -> VahlenMatrix:
    """Pick the representative of {g, -g} whose first nonzero d (else c) coefficient is positive."""
    for entry in (g.d, g.c):
        for x in entry.coeffs:
            if abs(x) > tol:
                return g if x > 0 else -g
    return g


# ----------------------------------------------------------------------------
# standard subgroups


def _horizontal(n: int, x: Sequence) -> CliffordElement:
    if len(x) != n:
        raise VahlenError(f"horizontal vectors in V^{n - 1} have {n} components")
    return CliffordElement.vector(n, list(x))


def make_u(n: int, x: Sequence) -> VahlenMatrix:
    one = _scalar(n, 1)
    return VahlenMatrix(one, _horizontal(n, x), _scalar(n, 0), one)


def make_u_lower(n: int, x: Sequence) -> VahlenMatrix:
    one = _scalar(n, 1)
    return VahlenMatrix(one, _scalar(n, 0), _horizontal(n, x), one)


def make_a(n: int, t: float) -> VahlenMatrix:
    return VahlenMatrix(_scalar(n, math.exp(t / 2)), _scalar(n, 0), _scalar(n, 0), _scalar(n, math.exp(-t / 2)))


def make_flow(n: int, t: float) -> VahlenMatrix:
    """g_t = u^-_t with scalar parameter t."""
    return make_u_lower(n, [t] + [0] * (n - 1))


# ----------------------------------------------------------------------------
# points and the Moebius action


@dataclass(frozen=True)
class UpperHalfPoint:
    x: tuple
    h: float

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise VahlenError("height must be positive")

    @classmethod
    def basepoint(cls, n: int) -> UpperHalfPoint:
        return cls((0.0,) * n, 1.0)

    def to_clifford(self) -> CliffordElement:
        n = len(self.x)
        v = CliffordElement.vector(n, list(self.x))
        return v + CliffordElement.blade(n, [n], self.h)


class BoundaryError(VahlenError):
    """The point is mapped to the boundary or to infinity."""


def clifford_group_inverse(y: CliffordElement, tol: float = DEFAULT_TOL) -> CliffordElement:
    nsq = y.norm_sq(tol)
    if abs(nsq) <= tol * tol:
        raise BoundaryError("cv + d has zero norm")
    return y.conj() / nsq


def mobius_apply(g: VahlenMatrix, p: UpperHalfPoint) -> UpperHalfPoint:
    n = g.n
    if len(p.x) != n:
        raise VahlenError("point dimension does not match the group")
    v = p.to_clifford()
    num = cl_mul(g.a, v) + g.b
    den = cl_mul(g.c, v) + g.d
    w = cl_mul(num, clifford_group_inverse(den))
    comps = w.vector_components(n)
    h = float(comps[n])
    if not h > 0:
        raise BoundaryError("image lies on the boundary")
    return UpperHalfPoint(tuple(float(c) for c in comps[:n]), h)


def dist_hyp(p: UpperHalfPoint, q: UpperHalfPoint) -> float:
    dx2 = sum((a - b) ** 2 for a, b in zip(p.x, q.x))
    arg = (dx2 + (p.h - q.h) ** 2) / (2 * p.h * q.h)
    # acosh(1 + arg) computed stably for small arg
    return math.log1p(arg + math.sqrt(arg * (arg + 2)))


# ----------------------------------------------------------------------------
# sphere points and angles


def sphere_point(c: CliffordElement, d: CliffordElement) -> np.ndarray:
    """Cartesian (x_0..x_n) of (2 conj(c) d + (|d|^2 - |c|^2) e_n) / (|c|^2 + |d|^2)."""
    n = c.n
    cc = float(c.norm_sq()) if not c.is_zero() else 0.0
    dd = float(d.norm_sq()) if not d.is_zero() else 0.0
    w = cl_mul(c.conj(), d) * 2
    comps = [float(x) for x in w.vector_components(n - 1)]
    comps.append(dd - cc)
    return np.array(comps) / (cc + dd)


def angles_from_cartesian(x: Sequence[float]) -> np.ndarray:
    """theta_0..theta_{n-2} in [0, pi], theta_{n-1} in [0, 2 pi)."""
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    theta = np.zeros(n)
    tail = np.sqrt(np.cumsum(x[::-1] ** 2)[::-1])
    for i in range(n - 1):
        theta[i] = math.acos(max(-1.0, min(1.0, x[i] / tail[i]))) if tail[i] > 0 else 0.0
    theta[n - 1] = math.atan2(x[n], x[n - 1]) % (2 * math.pi)
    return theta


def cartesian_from_angles(theta: Sequence[float]) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    x = np.zeros(n + 1)
    prod = 1.0
    for i in range(n):
        x[i] = prod * math.cos(theta[i])
        prod *= math.sin(theta[i])
    x[n] = prod
    return x


def k_from_sphere(x: Sequence[float]) -> VahlenMatrix:
    """A K element whose sphere point is x (x_n = cos alpha)."""
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    alpha = math.acos(max(-1.0, min(1.0, x[n])))
    horiz = x[:n]
    r = float(np.linalg.norm(horiz))
    w = horiz / r if r > 1e-300 else np.eye(n)[0]
    ca, sa = math.cos(alpha / 2), math.sin(alpha / 2)
    wv = CliffordElement.vector(n, list(w))
    return VahlenMatrix(_scalar(n, ca), -wv * sa, wv.conj() * sa, _scalar(n, ca))


def is_in_K(g: VahlenMatrix, tol: float = DEFAULT_TOL) -> bool:
    image = mobius_apply(g, UpperHalfPoint.basepoint(g.n))
    return abs(image.h - 1) <= tol and all(abs(v) <= tol for v in image.x)


# ----------------------------------------------------------------------------
# decompositions


@dataclass(frozen=True)
class IwasawaCoords:
    u: tuple
    t: float
    k: VahlenMatrix

    @property
    def sphere(self) -> np.ndarray:
        return sphere_point(self.k.c, self.k.d)

    def compose(self) -> VahlenMatrix:
        n = self.k.n
        return vahlen_mul(vahlen_mul(make_u(n, self.u), make_a(n, self.t)), self.k)


def iwasawa_t(g: VahlenMatrix) -> float:
    return -math.log(_nsq(g.c) + _nsq(g.d))


def _nsq(x: CliffordElement) -> float:
    return 0.0 if x.is_zero() else float(x.norm_sq())


def iwasawa_decompose(g: VahlenMatrix) -> IwasawaCoords:
    n = g.n
    t = iwasawa_t(g)
    image = mobius_apply(g, UpperHalfPoint.basepoint(n))
    u = image.x
    k = vahlen_mul(make_a(n, -t), vahlen_mul(make_u(n, [-v for v in u]), g))
    return IwasawaCoords(u, t, k)


def iwasawa_sphere(g: VahlenMatrix) -> tuple[float, np.ndarray]:
    """(t, sphere point) straight from the bottom row, without forming k."""
    return iwasawa_t(g), sphere_point(g.c, g.d)


@dataclass(frozen=True)
class NAMinusCoords:
    t: float
    x_minus: tuple


def naminus_parts(g: VahlenMatrix, tol: float = 1e-12):
    """Return (y, m, t, x) with g = u_y * m * a_t * u^-_x and m = diag(m1, m2) in M."""
    n = g.n
    dd = _nsq(g.d)
    if dd <= tol * tol:
        raise VahlenError("d = 0: NA^- coordinates undefined")
    mod = math.sqrt(dd)
    d_inv = g.d.conj() / dd
    x = cl_mul(d_inv, g.c)
    y = cl_mul(g.b, d_inv)
    t = -math.log(dd)
    m1 = (g.a - cl_mul(y, g.c)) * mod
    m2 = g.d / mod
    return y, (m1, m2), t, x


def naminus_decompose(g: VahlenMatrix) -> NAMinusCoords:
    _, _, t, x = naminus_parts(g)
    n = g.n
    return NAMinusCoords(t, tuple(float(v) for v in x.vector_components(n - 1)))


def naminus_compose(y, m, t, x) -> VahlenMatrix:
    m1, m2 = m
    n = m1.n
    zero = _scalar(n, 0)
    one = _scalar(n, 1)
    mid = VahlenMatrix(m1, zero, zero, m2)
    return vahlen_product(
        [VahlenMatrix(one, y, zero, one), mid, make_a(n, t), VahlenMatrix(one, zero, x, one)]
    )


# ----------------------------------------------------------------------------
# exponential map


def _mat_mul(x, y):
    return (
        cl_mul(x[0], y[0]) + cl_mul(x[1], y[2]),
        cl_mul(x[0], y[1]) + cl_mul(x[1], y[3]),
        cl_mul(x[2], y[0]) + cl_mul(x[3], y[2]),
        cl_mul(x[2], y[1]) + cl_mul(x[3], y[3]),
    )


def _mat_norm(x) -> float:
    # max row sum of coefficient l1 norms; submultiplicative for Clifford products
    return max(x[0].l1() + x[1].l1(), x[2].l1() + x[3].l1())


def matrix_exp(X: Sequence[CliffordElement], y: float, tol: float = 1e-17, max_terms: int = 200) -> VahlenMatrix:
    """exp(y X) by power series, stopping once the remainder bound is below tol."""
    X = tuple(e.to_float() * y for e in X)
    n = X[0].n
    rho = _mat_norm(X)
    one, zero = _scalar(n, 1.0), _scalar(n, 0.0)
    total = [one, zero, zero, one]
    term = (one, zero, zero, one)
    bound_scale = math.exp(rho)
    log_fact = 0.0
    for k in range(1, max_terms + 1):
        term = tuple(e / k for e in _mat_mul(term, X))
        total = [s + e for s, e in zip(total, term)]
        log_fact += math.log(k + 1)
        if rho == 0 or (k + 1) * math.log(rho) - log_fact + math.log(bound_scale) < math.log(tol):
            return VahlenMatrix(*total)
    raise VahlenError("power series did not converge within the term cap")
