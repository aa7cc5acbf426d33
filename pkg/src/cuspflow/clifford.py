"""Arithmetic in the Clifford algebra C_n with generators e_1..e_n, e_i^2 = -1.

Basis blades e_I are indexed by bitmasks: bit ``i - 1`` set means e_i occurs.
Coefficients may be ``Fraction``/``int`` (exact) or ``float``; the algebra code
never assumes one or the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Iterable, Sequence

MAX_GENERATORS = 8


class CliffordError(ValueError):
    """Invalid Clifford-algebra input (dimension mismatch, singular element, ...)."""


@lru_cache(maxsize=None)
def blade_product(a: int, b: int) -> tuple[int, int]:
    """Return ``(sign, mask)`` such that ``e_a * e_b == sign * e_mask``.

    The sign counts the transpositions needed to sort the concatenated word
    plus one factor of -1 for every generator that meets itself.
    """
    swaps = 0
    shifted = a >> 1
    while shifted:
        swaps += bin(shifted & b).count("1")
        shifted >>= 1
    swaps += bin(a & b).count("1")
    return (-1 if swaps & 1 else 1), a ^ b


def grade(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


def _star_sign(mask: int) -> int:
    r = grade(mask)
    return -1 if (r * (r - 1) // 2) & 1 else 1


def _prime_sign(mask: int) -> int:
    return -1 if grade(mask) & 1 else 1


def _conj_sign(mask: int) -> int:
    return _star_sign(mask) * _prime_sign(mask)


@dataclass(frozen=True)
class CliffordElement:
    n: int
    coeffs: tuple

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_GENERATORS:
            raise CliffordError(f"generator count must be in [1, {MAX_GENERATORS}], got {self.n}")
        if len(self.coeffs) != 1 << self.n:
            raise CliffordError("coefficient vector must have length 2**n")

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> CliffordElement:
        return cls(n, (0,) * (1 << n))

    @classmethod
    def scalar(cls, n: int, value) -> CliffordElement:
        coeffs = [0] * (1 << n)
        coeffs[0] = value
        return cls(n, tuple(coeffs))

    @classmethod
    def from_dict(cls, n: int, terms: dict[int, object]) -> CliffordElement:
        coeffs = [0] * (1 << n)
        for mask, value in terms.items():
            if mask >= 1 << n:
                raise CliffordError(f"mask {mask} outside C_{n}")
            coeffs[mask] = coeffs[mask] + value
        return cls(n, tuple(coeffs))

    @classmethod
    def blade(cls, n: int, indices: Sequence[int], coeff=1) -> CliffordElement:
        """The word ``coeff * e_{i1} e_{i2} ...`` in the given order."""
        sign, mask = 1, 0
        for i in indices:
            if not 1 <= i <= n:
                raise CliffordError(f"generator e_{i} not in C_{n}")
            s, mask = blade_product(mask, 1 << (i - 1))
            sign *= s
        return cls.from_dict(n, {mask: sign * coeff})

    @classmethod
    def vector(cls, n: int, components: Sequence) -> CliffordElement:
        """x_0 + x_1 e_1 + ... + x_i e_i."""
        if len(components) > n + 1:
            raise CliffordError("too many vector components")
        terms = {0: components[0]} if components else {}
        for i, x in enumerate(components[1:], start=1):
            terms[1 << (i - 1)] = x
        return cls.from_dict(n, terms)

    # linear structure ---------------------------------------------------
    def _check(self, other: CliffordElement) -> None:
        if self.n != other.n:
            raise CliffordError(f"dimension mismatch: C_{self.n} vs C_{other.n}")

    def __add__(self, other):
        if isinstance(other, CliffordElement):
            self._check(other)
            return CliffordElement(self.n, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))
        if isinstance(other, Real):
            return self + CliffordElement.scalar(self.n, other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return CliffordElement(self.n, tuple(-x for x in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (CliffordElement, Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CliffordElement):
            return cl_mul(self, other)
        if isinstance(other, Real):
            return CliffordElement(self.n, tuple(x * other for x in self.coeffs))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Real):
            return CliffordElement(self.n, tuple(other * x for x in self.coeffs))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Real):
            return CliffordElement(self.n, tuple(x / other for x in self.coeffs))
        return NotImplemented

    # involutions ----------------------------------------------------------
    def star(self) -> CliffordElement:
        return CliffordElement(self.n, tuple(_star_sign(m) * x for m, x in enumerate(self.coeffs)))

    def prime(self) -> CliffordElement:
        return CliffordElement(self.n, tuple(_prime_sign(m) * x for m, x in enumerate(self.coeffs)))

    def conj(self) -> CliffordElement:
        return CliffordElement(self.n, tuple(_conj_sign(m) * x for m, x in enumerate(self.coeffs)))

    # queries ---------------------------------------------------------------
    @property
    def scalar_part(self):
        return self.coeffs[0]

    def terms(self) -> dict[int, object]:
        return {m: x for m, x in enumerate(self.coeffs) if x != 0}

    def max_abs(self) -> float:
        return max(abs(float(x)) for x in self.coeffs)

    def l1(self) -> float:
        return sum(abs(float(x)) for x in self.coeffs)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(x) <= tol for x in self.coeffs)

    def is_scalar(self, tol: float = 0.0) -> bool:
        return all(abs(x) <= tol for x in self.coeffs[1:])

    def in_vector_space(self, i: int, tol: float = 0.0) -> bool:
        """Membership in V^i = span{1, e_1, ..., e_i}."""
        allowed = {0} | {1 << k for k in range(i)}
        return all(abs(x) <= tol for m, x in enumerate(self.coeffs) if m not in allowed)

    def vector_components(self, i: int | None = None) -> tuple:
        i = self.n if i is None else i
        return (self.coeffs[0],) + tuple(self.coeffs[1 << k] for k in range(i))

    def uses_generator(self, i: int, tol: float = 0.0) -> bool:
        bit = 1 << (i - 1)
        return any(abs(x) > tol for m, x in enumerate(self.coeffs) if m & bit)

    def close_to(self, other: CliffordElement, tol: float) -> bool:
        self._check(other)
        return all(abs(x - y) <= tol for x, y in zip(self.coeffs, other.coeffs))

    def norm_sq(self, tol: float = 1e-9):
        """Scalar ``x * conj(x)``; raises if the product is not scalar."""
        prod = cl_mul(self, self.conj())
        scale = max(1.0, abs(float(prod.coeffs[0])))
        if not prod.is_scalar(tol * scale if not _is_exact(prod) else 0):
            raise CliffordError("x * conj(x) is not a scalar; element is not in the Clifford group")
        return prod.coeffs[0]

    def to_float(self) -> CliffordElement:
        return CliffordElement(self.n, tuple(float(x) for x in self.coeffs))

    def embed(self, n: int) -> CliffordElement:
        """View in C_n for n >= self.n (masks are unchanged)."""
        if n < self.n:
            raise CliffordError("can only embed into a larger algebra")
        return CliffordElement(n, self.coeffs + (0,) * ((1 << n) - len(self.coeffs)))

    def __repr__(self) -> str:
        parts = []
        for m, x in enumerate(self.coeffs):
            if x != 0:
                word = "".join(f"e{i + 1}" for i in range(self.n) if m >> i & 1)
                parts.append(f"{x}{'*' + word if word else ''}")
        return f"C{self.n}(" + (" + ".join(parts) if parts else "0") + ")"


def _is_exact(x: CliffordElement) -> bool:
    return all(isinstance(c, (int, Fraction)) for c in x.coeffs)


def cl_mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Geometric product."""
    if a.n != b.n:
        raise CliffordError(f"dimension mismatch: C_{a.n} vs C_{b.n}")
    out = [0] * (1 << a.n)
    bterms = [(mb, y) for mb, y in enumerate(b.coeffs) if y != 0]
    for ma, x in enumerate(a.coeffs):
        if x == 0:
            continue
        for mb, y in bterms:
            sign, m = blade_product(ma, mb)
            out[m] = out[m] + x * y if sign > 0 else out[m] - x * y
    return CliffordElement(a.n, tuple(out))


def involution_star(a: CliffordElement) -> CliffordElement:
    return a.star()


def involution_prime(a: CliffordElement) -> CliffordElement:
    return a.prime()


def conjugate(a: CliffordElement) -> CliffordElement:
    return a.conj()


@dataclass(frozen=True)
class VectorElement:
    """x_0 + x_1 e_1 + ... + x_i e_i, an element of V^i."""

    components: tuple

    @property
    def i(self) -> int:
        return len(self.components) - 1

    def to_clifford(self, n: int) -> CliffordElement:
        return CliffordElement.vector(n, self.components)

    def norm_sq(self):
        return sum(x * x for x in self.components)


@dataclass(frozen=True)
class CliffordGroupElement:
    """An element of T_n together with a factorisation into nonzero vectors."""

    value: CliffordElement
    certificate: tuple[CliffordElement, ...]

    @classmethod
    def from_factors(cls, factors: Sequence[CliffordElement | VectorElement], n: int | None = None):
        elems = []
        for f in factors:
            if isinstance(f, VectorElement):
                if n is None:
                    raise CliffordError("n required to embed VectorElement factors")
                f = f.to_clifford(n)
            if not f.in_vector_space(f.n, tol=0):
                raise CliffordError("certificate factors must be vectors")
            if all(x == 0 for x in f.vector_components()):
                raise CliffordError("certificate factor has zero norm")
            elems.append(f)
        if not elems:
            raise CliffordError("empty certificate")
        value = elems[0]
        for f in elems[1:]:
            value = cl_mul(value, f)
        return cls(value, tuple(elems))

    def verify(self, tol: float = 1e-12) -> bool:
        value = self.certificate[0]
        for f in self.certificate[1:]:
            value = cl_mul(value, f)
        return value.close_to(self.value, tol * max(1.0, self.value.max_abs()))


def _vector_norm_sq(v: CliffordElement):
    if not v.in_vector_space(v.n, tol=0):
        raise CliffordError("not a vector")
    return sum(x * x for x in v.vector_components())


def cl_norm(v) -> float:
    """|v| for a vector or a certified Clifford-group element."""
    if isinstance(v, VectorElement):
        return math.sqrt(v.norm_sq())
    if isinstance(v, CliffordGroupElement):
        return math.prod(math.sqrt(_vector_norm_sq(f)) for f in v.certificate)
    if isinstance(v, CliffordElement):
        nsq = v.norm_sq()
        if nsq < 0:
            raise CliffordError("negative norm square")
        return math.sqrt(nsq)
    raise TypeError(f"unsupported type {type(v).__name__}")


def vector_inverse(v: CliffordElement) -> CliffordElement:
    nsq = _vector_norm_sq(v)
    if nsq == 0:
        raise CliffordError("singular element (zero norm)")
    return v.conj() / nsq


def cl_inverse(v: CliffordGroupElement | CliffordElement):
    """Inverse in T_n: reversed list of factor inverses."""
    if isinstance(v, CliffordGroupElement):
        inverses = [vector_inverse(f) for f in reversed(v.certificate)]
        return CliffordGroupElement.from_factors(inverses)
    nsq = v.norm_sq()
    if nsq == 0:
        raise CliffordError("singular element (zero norm)")
    return v.conj() / nsq
