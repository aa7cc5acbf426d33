"""Lie-algebra structure of K inside the Vahlen group and Lie derivatives.

Matrices are 4-tuples ``(a, b, c, d)`` of CliffordElements.  Complexified
elements are pairs ``(real, imag)`` of such matrices.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .clifford import CliffordElement, cl_mul
from .vahlen import (
    VahlenMatrix,
    angles_from_cartesian,
    iwasawa_sphere,
    matrix_exp,
    vahlen_mul,
)

HALF = Fraction(1, 2)


class CoordinateSingularity(ValueError):
    """The coordinate function is not differentiable at this point."""


def _zero(n):
    return CliffordElement.zero(n)


def _s(n, x):
    return CliffordElement.scalar(n, x)


def _e(n, *idx):
    return CliffordElement.blade(n, list(idx))


def zero_matrix(n: int):
    z = _zero(n)
    return (z, z, z, z)


def mat_add(x, y):
    return tuple(a + b for a, b in zip(x, y))


def mat_scale(x, c):
    return tuple(a * c for a in x)


def mat_mul(x, y):
    return (
        cl_mul(x[0], y[0]) + cl_mul(x[1], y[2]),
        cl_mul(x[0], y[1]) + cl_mul(x[1], y[3]),
        cl_mul(x[2], y[0]) + cl_mul(x[3], y[2]),
        cl_mul(x[2], y[1]) + cl_mul(x[3], y[3]),
    )


def mat_equal(x, y, tol=0) -> bool:
    return all(a.close_to(b, tol) for a, b in zip(x, y))


def bracket(x, y):
    """[X, Y] = XY - YX."""
    return mat_add(mat_mul(x, y), mat_scale(mat_mul(y, x), -1))


def L(n: int, i: int, j: int):
    """Basis element L_{i,j} of k_C, with L_{i,i} = 0 and L_{j,i} = -L_{i,j}."""
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"indices must lie in [0, {n}]")
    if i == j:
        return zero_matrix(n)
    if i > j:
        return mat_scale(L(n, j, i), -1)
    z = _zero(n)
    if i >= 1 and j <= n - 1:
        w = _e(n, i, j) * (-HALF)
        return (w, z, z, w)
    if i == 0 and j <= n - 1:
        w = _e(n, j) * (-HALF)
        return (w, z, z, -w)
    if i >= 1 and j == n:
        w = _e(n, i) * HALF
        return (z, w, w, z)
    return (z, _s(n, HALF), _s(n, -HALF), z)


# complexified matrices ---------------------------------------------------------


def cpair(re, im=None):
    n = re[0].n
    return (re, im if im is not None else zero_matrix(n))


def c_add(x, y):
    return (mat_add(x[0], y[0]), mat_add(x[1], y[1]))


def c_scale(x, c: complex):
    """Multiply by a complex scalar with rational or float parts."""
    a, b = (c.real, c.imag) if isinstance(c, complex) else c if isinstance(c, tuple) else (c, 0)
    return (
        mat_add(mat_scale(x[0], a), mat_scale(x[1], -b)),
        mat_add(mat_scale(x[1], a), mat_scale(x[0], b)),
    )


def c_bracket(x, y):
    """[A + iB, C + iD] = [A,C] - [B,D] + i([A,D] + [B,C])."""
    a, b = x
    c, d = y
    re = mat_add(bracket(a, c), mat_scale(bracket(b, d), -1))
    im = mat_add(bracket(a, d), bracket(b, c))
    return (re, im)


def c_equal(x, y, tol=0) -> bool:
    return mat_equal(x[0], y[0], tol) and mat_equal(x[1], y[1], tol)


def c_is_zero(x) -> bool:
    return all(e.is_zero() for m in x for e in m)


def I_times(x):
    """Multiply a complex pair by sqrt(-1)."""
    return (mat_scale(x[1], -1), x[0])


# verification batteries ---------------------------------------------------------


@dataclass
class IdentityReport:
    name: str
    n: int
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.violations


def comr_rhs(n, i, j, l, m):
    """Right-hand side delta_jl L_im - delta_il L_jm - delta_jm L_il + delta_im L_jl."""
    out = zero_matrix(n)
    if j == l:
        out = mat_add(out, L(n, i, m))
    if i == l:
        out = mat_add(out, mat_scale(L(n, j, m), -1))
    if j == m:
        out = mat_add(out, mat_scale(L(n, i, l), -1))
    if i == m:
        out = mat_add(out, L(n, j, l))
    return out


def verify_commutator_table(n: int) -> IdentityReport:
    """Check the commutator relations for every index quadruple in exact arithmetic."""
    if not 2 <= n <= 5:
        raise ValueError("commutator table supported for 2 <= n <= 5")
    report = IdentityReport("commutator table", n)
    basis = {(i, j): L(n, i, j) for i in range(n + 1) for j in range(n + 1)}
    for (i, j), x in basis.items():
        for (l, m), y in basis.items():
            report.checked += 1
            if not mat_equal(bracket(x, y), comr_rhs(n, i, j, l, m)):
                report.violations.append((i, j, l, m))
    return report


def rank(n: int) -> int:
    return (n + 1) // 2


def cartan_basis(n: int):
    """H_i = sqrt(-1) L_{2i, 2i+1}, i < k."""
    return [I_times(cpair(L(n, 2 * i, 2 * i + 1))) for i in range(rank(n))]


def positive_root_vectors(n: int):
    """List of (label, weights on H_0..H_{k-1}, root vector)."""
    k = rank(n)
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            a = c_add(cpair(L(n, 2 * i, 2 * j)), c_scale(cpair(L(n, 2 * i + 1, 2 * j)), (0, -1)))
            b = c_add(cpair(L(n, 2 * i + 1, 2 * j + 1)), c_scale(cpair(L(n, 2 * i, 2 * j + 1)), (0, 1)))
            for sign, label in ((1, "+"), (-1, "-")):
                weights = [0] * k
                weights[i] = 1
                weights[j] = sign
                vec = c_add(a, c_scale(b, (-sign, 0)))
                out.append((f"eps{i}{label}eps{j}", weights, vec))
    if (n + 1) % 2 == 1:
        for l_ in range(k):
            vec = c_add(cpair(L(n, 2 * l_, 2 * k)), c_scale(cpair(L(n, 2 * l_ + 1, 2 * k)), (0, -1)))
            weights = [0] * k
            weights[l_] = 1
            out.append((f"eps{l_}", weights, vec))
    return out


def verify_root_spaces(n: int) -> IdentityReport:
    """[H_j, X_alpha] = alpha(H_j) X_alpha for every listed positive root, plus [H_i, H_j] = 0."""
    if n + 1 < 3:
        raise ValueError("root spaces need n + 1 >= 3")
    report = IdentityReport("root spaces", n)
    hs = cartan_basis(n)
    for a, ha in enumerate(hs):
        for b, hb in enumerate(hs):
            report.checked += 1
            if not c_is_zero(c_bracket(ha, hb)):
                report.violations.append(("cartan", a, b))
    for label, weights, vec in positive_root_vectors(n):
        if c_is_zero(vec):
            report.violations.append((label, "zero vector"))
            continue
        for j, h in enumerate(hs):
            report.checked += 1
            if not c_equal(c_bracket(h, vec), c_scale(vec, (weights[j], 0))):
                report.violations.append((label, j))
    return report


def B1(n: int):
    z, one = _zero(n), _s(n, 1)
    return (z, one, one, z)


def B2(n: int):
    z, e1 = _zero(n), _e(n, 1)
    return (z, e1, -e1, z)


def raising_matrix(n: int):
    """R^+ = -1/2 B_1 + (sqrt(-1)/2) B_2 as a complex pair."""
    return (mat_scale(B1(n), -HALF), mat_scale(B2(n), HALF))


def verify_raising_weights(n: int) -> IdentityReport:
    """[H, R^+] = eps_0(H) R^+ and [R^+, X_alpha] = 0 for positive roots."""
    report = IdentityReport("raising weights", n)
    r = raising_matrix(n)
    for j, h in enumerate(cartan_basis(n)):
        report.checked += 1
        expected = r if j == 0 else (zero_matrix(n), zero_matrix(n))
        if not c_equal(c_bracket(h, r), expected):
            report.violations.append(("H", j))
    for label, _, vec in positive_root_vectors(n):
        report.checked += 1
        if not c_is_zero(c_bracket(r, vec)):
            report.violations.append(("root", label))
    return report


# coordinate functions -------------------------------------------------------------


def t_coord(g: VahlenMatrix) -> float:
    return iwasawa_sphere(g)[0]


def theta_coords(g: VahlenMatrix) -> np.ndarray:
    return angles_from_cartesian(iwasawa_sphere(g)[1])


def theta_coord(i: int) -> Callable[[VahlenMatrix], float]:
    def f(g: VahlenMatrix) -> float:
        return float(theta_coords(g)[i])

    f.__name__ = f"theta{i}"
    return f


def phi_sm_eval(s: complex, m: int, g: VahlenMatrix) -> complex:
    """e^{st} (x_0 - sqrt(-1) x_1)^m at the Iwasawa coordinates of g."""
    t, x = iwasawa_sphere(g)
    return cmath.exp(s * t) * complex(x[0], -x[1]) ** m


@lru_cache(maxsize=4096)
def _exp_cached(X, y: float) -> VahlenMatrix:
    return matrix_exp(X, y)


def _wrap(delta: float, period: float | None) -> float:
    if period is None:
        return delta
    return (delta + period / 2) % period - period / 2


def _central(X, f, g, h, period):
    plus = f(vahlen_mul(g, _exp_cached(X, h)))
    minus = f(vahlen_mul(g, _exp_cached(X, -h)))
    return _wrap(plus - minus, period) / (2 * h) if period else (plus - minus) / (2 * h)


def lie_derivative_numeric(
    X,
    f: Callable[[VahlenMatrix], complex],
    g: VahlenMatrix,
    step: float = 1e-3,
    richardson: bool = True,
    period: float | None = None,
) -> complex:
    """d/dy f(g exp(yX)) at y = 0; X may be a real matrix or a complex pair."""
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-7, 1e-3]")
    if isinstance(X[0], tuple):
        re = lie_derivative_numeric(X[0], f, g, step, richardson, period)
        if all(e.is_zero() for e in X[1]):
            return re
        return re + 1j * lie_derivative_numeric(X[1], f, g, step, richardson, period)
    if all(e.is_zero() for e in X):
        return 0.0
    X = tuple(e.to_float() for e in X)
    d1 = _central(X, f, g, step, period)
    if not richardson:
        return d1
    d2 = _central(X, f, g, step / 2, period)
    return (4 * d2 - d1) / 3


def _check_regular(g: VahlenMatrix, margin: float = 1e-6) -> np.ndarray:
    theta = theta_coords(g)
    if abs(math.sin(theta[0])) < margin:
        raise CoordinateSingularity("sin(theta_0) vanishes")
    return theta


def closed_form_coefficients(theta) -> dict[str, tuple[float, float, float]]:
    """Closed-form (t', theta_0', theta_1') under B_1 and B_2."""
    t0, t1 = theta[0], theta[1]
    return {
        "B1": (-2 * math.cos(t0), -2 * math.sin(t0), 0.0),
        "B2": (
            -2 * math.sin(t0) * math.cos(t1),
            2 * math.cos(t0) * math.cos(t1),
            -2 * math.sin(t1) / math.sin(t0),
        ),
    }


def numeric_coefficients(g: VahlenMatrix, step: float = 1e-3) -> dict[str, tuple[float, float, float]]:
    n = g.n
    _check_regular(g)
    last = 2 * math.pi if n == 2 else None
    out = {}
    for name, X in (("B1", B1(n)), ("B2", B2(n))):
        out[name] = (
            lie_derivative_numeric(X, t_coord, g, step),
            lie_derivative_numeric(X, theta_coord(0), g, step),
            lie_derivative_numeric(X, theta_coord(1), g, step, period=last),
        )
    return out


def raising_apply(s: complex, m: int, g: VahlenMatrix, step: float = 1e-3) -> complex:
    """R^+ phi_{s,m} at g via finite differences."""
    _check_regular(g)
    return lie_derivative_numeric(raising_matrix(g.n), lambda h: phi_sm_eval(s, m, h), g, step)
