import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_vahlen
from cuspflow.clifford import CliffordElement
from cuspflow.vahlen import (
    BoundaryError,
    UpperHalfPoint,
    VahlenError,
    VahlenMatrix,
    angles_from_cartesian,
    canonical_sign,
    cartesian_from_angles,
    dist_hyp,
    is_in_K,
    k_from_sphere,
    iwasawa_decompose,
    make_a,
    make_flow,
    make_u,
    make_u_lower,
    matrix_exp,
    mobius_apply,
    naminus_compose,
    naminus_decompose,
    naminus_parts,
    vahlen_check,
    vahlen_inverse,
    vahlen_mul,
    vahlen_product,
)
from cuspflow.lie import B1, B2

finite = st.floats(-3, 3, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([2, 3, 4])


def scalar(n, x):
    return CliffordElement.scalar(n, x)


def test_identity_and_products():
    g = random_vahlen(2, np.random.default_rng(0))
    assert vahlen_mul(VahlenMatrix.identity(2), g).close_to(g, 1e-14)
    assert vahlen_mul(make_u(2, [1, 2]), make_u(2, [3, -1])) == make_u(2, [4, 1])
    assert vahlen_mul(make_a(2, 0.3), make_a(2, 0.5)).close_to(make_a(2, 0.8), 1e-14)
    assert make_a(3, 0).close_to(VahlenMatrix.identity(3), 0)
    assert vahlen_mul(make_flow(2, 1.5), make_flow(2, -0.5)).close_to(make_flow(2, 1.0), 0)
    assert vahlen_check(make_u(2, [0, 1]))


def test_mobius_examples():
    base = UpperHalfPoint.basepoint(2)
    p = mobius_apply(make_u(2, [0.5, -2.0]), base)
    assert p.x == (0.5, -2.0) and p.h == 1.0
    assert mobius_apply(make_a(2, 0.7), base).h == pytest.approx(math.exp(0.7), rel=1e-15)
    one, zero = scalar(2, 1), scalar(2, 0)
    S = VahlenMatrix(zero, -one, one, zero)
    q = mobius_apply(S, base)
    assert q.h == pytest.approx(1.0) and max(map(abs, q.x)) < 1e-15


def test_boundary_signalled():
    one, zero = scalar(2, 1), scalar(2, 0)
    with pytest.raises(VahlenError):
        UpperHalfPoint((0.0, 0.0), 0.0)
    # a degenerate matrix sends everything to the boundary
    bad = VahlenMatrix(one, zero, zero, zero)
    with pytest.raises(BoundaryError):
        mobius_apply(bad, UpperHalfPoint.basepoint(2))


def test_distance_examples():
    base = UpperHalfPoint.basepoint(2)
    for t in (0.0, 0.3, 2.0, 10.0):
        assert dist_hyp(base, mobius_apply(make_a(2, t), base)) == pytest.approx(t, abs=1e-12)
    assert dist_hyp(base, base) == 0.0


def test_iwasawa_examples():
    c = iwasawa_decompose(make_a(2, 0.4))
    assert c.t == pytest.approx(0.4) and max(map(abs, c.u)) < 1e-15
    assert c.k.close_to(VahlenMatrix.identity(2), 1e-14)
    c = iwasawa_decompose(make_u(2, [0.3, 0.1]))
    assert c.t == 0.0 and c.u == pytest.approx((0.3, 0.1))
    assert c.sphere == pytest.approx([0, 0, 1])


def test_naminus_examples():
    c = naminus_decompose(make_a(2, 0.9))
    assert c.t == pytest.approx(0.9) and c.x_minus == pytest.approx((0, 0))
    c = naminus_decompose(make_u_lower(2, [0.2, -0.4]))
    assert c.t == 0.0 and c.x_minus == pytest.approx((0.2, -0.4))
    g = vahlen_product([make_u(2, [1.0, 0.5]), make_a(2, -0.3), make_u_lower(2, [0.25, 0.75])])
    c = naminus_decompose(g)
    assert c.t == pytest.approx(-0.3) and c.x_minus == pytest.approx((0.25, 0.75))
    one, zero = scalar(2, 1), scalar(2, 0)
    with pytest.raises(VahlenError):
        naminus_decompose(VahlenMatrix(zero, -one, one, zero))


def test_matrix_exp_closed_forms():
    for y in (0.0, 0.37, -1.2, 2.5):
        e1 = CliffordElement.blade(2, [1])
        ch, sh = math.cosh(y), math.sinh(y)
        assert matrix_exp(B1(2), y).close_to(VahlenMatrix(scalar(2, ch), scalar(2, sh), scalar(2, sh), scalar(2, ch)), 1e-13, up_to_sign=False)
        assert matrix_exp(B2(2), y).close_to(VahlenMatrix(scalar(2, ch), e1 * sh, e1 * -sh, scalar(2, ch)), 1e-13, up_to_sign=False)


def test_spherical_angle_convention():
    theta = angles_from_cartesian([0, 0, -1.0])
    assert 0 <= theta[-1] < 2 * math.pi
    rng = np.random.default_rng(4)
    for n in (2, 3, 5):
        for _ in range(50):
            th = rng.uniform(0.1, math.pi - 0.1, size=n)
            th[-1] = rng.uniform(0.1, 2 * math.pi - 0.1)
            assert angles_from_cartesian(cartesian_from_angles(th)) == pytest.approx(th, abs=1e-10)


@given(seeds, dims)
def test_products_stay_vahlen(seed, n):
    rng = np.random.default_rng(seed)
    g = random_vahlen(n, rng)
    h = random_vahlen(n, rng)
    assert vahlen_check(g) and vahlen_check(vahlen_mul(g, h))
    assert vahlen_mul(g, vahlen_inverse(g)).close_to(VahlenMatrix.identity(n), 1e-9)


def test_long_products_renormalized():
    rng = np.random.default_rng(8)
    factors = []
    for _ in range(100):
        x = rng.normal(size=3)
        factors += [k_from_sphere(x / np.linalg.norm(x)), make_u(2, list(0.2 * rng.normal(size=2))), make_a(2, 0.2 * rng.normal())]
    g = vahlen_product(factors)
    assert vahlen_check(g, tol=1e-9)
    assert float(g.pseudo_determinant().scalar_part) == pytest.approx(1.0, abs=1e-12)


@given(seeds, dims)
def test_group_action(seed, n):
    rng = np.random.default_rng(seed)
    g, h = random_vahlen(n, rng), random_vahlen(n, rng)
    p = UpperHalfPoint(tuple(rng.normal(size=n)), float(rng.uniform(0.2, 3)))
    lhs = mobius_apply(vahlen_mul(g, h), p)
    rhs = mobius_apply(g, mobius_apply(h, p))
    scale = max(1.0, lhs.h, *map(abs, lhs.x))
    assert abs(lhs.h - rhs.h) <= 1e-9 * scale
    assert max(abs(a - b) for a, b in zip(lhs.x, rhs.x)) <= 1e-9 * scale


@given(seeds, dims)
def test_distance_invariant(seed, n):
    rng = np.random.default_rng(seed)
    g = random_vahlen(n, rng)
    p = UpperHalfPoint(tuple(rng.normal(size=n)), float(rng.uniform(0.2, 3)))
    q = UpperHalfPoint(tuple(rng.normal(size=n)), float(rng.uniform(0.2, 3)))
    d = dist_hyp(p, q)
    assert d >= 0 and d == pytest.approx(dist_hyp(q, p), abs=1e-12)
    assert dist_hyp(mobius_apply(g, p), mobius_apply(g, q)) == pytest.approx(d, abs=1e-9)


@given(seeds, dims)
def test_iwasawa_round_trip(seed, n):
    g = random_vahlen(n, np.random.default_rng(seed))
    c = iwasawa_decompose(g)
    assert c.compose().close_to(g, 1e-10)
    assert is_in_K(c.k)
    assert mobius_apply(g, UpperHalfPoint.basepoint(n)).h == pytest.approx(math.exp(c.t), rel=1e-12)
    assert float(np.sum(c.sphere**2)) == pytest.approx(1.0)


@given(seeds, dims)
def test_naminus_round_trip(seed, n):
    g = random_vahlen(n, np.random.default_rng(seed))
    y, m, t, x = naminus_parts(g)
    assert naminus_compose(y, m, t, x).close_to(g, 1e-9)
    d_norm = math.sqrt(float(g.d.norm_sq()))
    assert t == pytest.approx(-2 * math.log(d_norm))


@given(seeds, st.floats(-2, 2), st.integers(2, 3))
def test_horospherical_bound(seed, tau, n):
    """q a_s u^-_x with s >= tau and |x| < 1/2 has Iwasawa t >= tau - log 2."""
    rng = np.random.default_rng(seed)
    s = tau + rng.exponential()
    x = rng.normal(size=n)
    x *= rng.uniform(0, 0.5) / np.linalg.norm(x)
    q = vahlen_product([make_u(n, list(rng.normal(size=n))), make_u(n, [0] * n)])
    g = vahlen_product([q, make_a(n, s), make_u_lower(n, list(x))])
    assert iwasawa_decompose(g).t >= tau - math.log(2)


@given(seeds)
def test_canonical_sign_is_idempotent(seed):
    g = random_vahlen(2, np.random.default_rng(seed))
    c = canonical_sign(g)
    assert c.close_to(g, 1e-15) and canonical_sign(-g) == c
