import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuspflow.harmonics import (
    ProductTestFunction,
    QuadratureUnderResolved,
    SmoothProfile,
    SphereQuadrature,
    a_lambda_check,
    a_lambda_ratio,
    chen_bound_check,
    degree_projection_norms,
    harmonic_dimension,
    lp_norm,
    m_f_eval,
    m_f_tilde_eval,
    moment_bounds,
    pm_asymptotic_residual,
    pm_eval,
    pm_log,
    profile_ratio_bound,
    quadrature_for,
    random_corpus,
    s_grid,
    zonal_kernels,
)


def pm_exact(n, m, s):
    out = Fraction(1)
    for k in range(m):
        out *= Fraction(n - s + k) / Fraction(s + k)
    return out


# P_m ------------------------------------------------------------------------


def test_pm_examples():
    assert pm_eval(2, 0, 1.7) == 1
    for m in (1, 2, 5):
        assert pm_eval(2, m, 2) == 0
        assert pm_eval(3, m, 3) == 0
    assert pm_eval(2, 1, 1.25) == pytest.approx((2 - 1.25) / 1.25)
    assert pm_eval(2, 1, 2.5) == pytest.approx(-0.2)
    assert pm_eval(2, 2, 2.5) == pytest.approx(-1 / 35)


def test_pm_pole_signalled():
    with pytest.raises(ZeroDivisionError):
        pm_eval(2, 3, -2)


def test_pm_matches_rational_oracle():
    for n, m, s in [(2, 7, Fraction(3, 2)), (3, 5, Fraction(7, 4)), (4, 9, Fraction(5, 2))]:
        assert pm_eval(n, m, float(s)).real == pytest.approx(float(pm_exact(n, m, s)), rel=1e-13)


@given(st.integers(2, 6), st.integers(0, 40), st.floats(-50, 50))
def test_pm_unimodular_on_critical_line(n, m, r):
    assert abs(pm_eval(n, m, n / 2 + 1j * r)) == pytest.approx(1.0, abs=1e-12)


def test_residual_closed_form_at_three_halves():
    # for n = 2, s = 3/2 the product telescopes to 1 / (2m + 1)
    for m in (1, 10, 100, 1000, 10_000):
        assert pm_log(2, m, 1.5) == pytest.approx(-math.log(2 * m + 1), rel=1e-12)
        assert pm_asymptotic_residual(2, m, 1.5) == pytest.approx(math.log((m + 1) / (2 * m + 1)), abs=1e-10)


def test_residual_band_and_cauchy():
    assert pm_asymptotic_residual(2, 0, 1.5) == 0.0
    res = [pm_asymptotic_residual(2, m, 1.5) for m in (10, 100, 1000, 10_000)]
    assert max(res[1:]) - min(res[1:]) < 0.2
    diffs = np.abs(np.diff(res))
    assert np.all(diffs[1:] < diffs[:-1])


@given(st.floats(1.05, 1.95))
def test_residual_bounded_for_any_s(s):
    res = [pm_asymptotic_residual(2, m, s) for m in (100, 1000, 10_000)]
    assert max(res) - min(res) < 0.2


def test_s_grid_shape():
    g = s_grid(2)
    assert len(g) == 64 and g[0] == pytest.approx(1.01) and g[-1] == pytest.approx(1.99)


# quadrature and projections ----------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_quadrature_integrates_monomials(n):
    q = SphereQuadrature(n, 8)
    x = q.points
    assert np.allclose(np.sum(x**2, axis=1), 1)
    assert q.integrate(np.ones(len(x))) == pytest.approx(1)
    # E[x_0^2] = 1/(n+1), E[x_0^4] = 3/((n+1)(n+3)), E[x_0^2 x_1^2] = 1/((n+1)(n+3))
    assert q.integrate(x[:, 0] ** 2) == pytest.approx(1 / (n + 1))
    assert q.integrate(x[:, -1] ** 4) == pytest.approx(3 / ((n + 1) * (n + 3)))
    assert q.integrate(x[:, 0] ** 2 * x[:, 1] ** 2) == pytest.approx(1 / ((n + 1) * (n + 3)))


def test_harmonic_dimensions():
    assert [harmonic_dimension(2, m) for m in range(5)] == [1, 3, 5, 7, 9]
    assert [harmonic_dimension(3, m) for m in range(4)] == [1, 4, 9, 16]


def test_zonal_kernel_at_pole_is_dimension():
    k = zonal_kernels(3, 6, np.array([1.0]))
    assert k[:, 0] == pytest.approx([harmonic_dimension(3, m) for m in range(7)])


def test_projection_examples_s2():
    q = quadrature_for(2, 8)
    x = q.points
    const = degree_projection_norms(np.full(len(x), 2.0), 8, q)
    assert const[0] == pytest.approx(4) and np.allclose(const[1:], 0, atol=1e-13)
    lin = degree_projection_norms(x[:, 0] - 1j * x[:, 1], 8, q)
    assert lin[1] == pytest.approx(2 / 3) and np.allclose(np.delete(lin, 1), 0, atol=1e-13)
    sq = degree_projection_norms(x[:, 0] ** 2, 8, q)
    assert sq[0] == pytest.approx(1 / 9) and sq[2] == pytest.approx(4 / 45)
    assert np.allclose(sq[[1, 3, 4, 5, 6, 7, 8]], 0, atol=1e-13)


@pytest.mark.parametrize("n", [3, 4])
def test_projection_examples_higher_spheres(n):
    q = quadrature_for(n, 2)
    x = q.points
    sq = degree_projection_norms(x[:, 0] ** 2, 2, q)
    e2, e4 = 1 / (n + 1), 3 / ((n + 1) * (n + 3))
    assert sq[0] == pytest.approx(e2**2) and sq[2] == pytest.approx(e4 - e2**2)


def test_methods_agree_on_s2():
    rng = np.random.default_rng(3)
    q = quadrature_for(2, 12)
    phi = random_corpus(rng, 3)[0]
    vals = q.sample(phi)
    a = degree_projection_norms(vals, 12, q, method="harmonics", parseval_tol=1.0)
    b = degree_projection_norms(vals, 12, q, method="zonal", parseval_tol=1.0)
    assert np.allclose(a, b, atol=1e-12)


def test_parseval_defect_signalled():
    q = quadrature_for(2, 4)
    x = q.points
    with pytest.raises(QuadratureUnderResolved):
        degree_projection_norms(np.exp(40 * (x[:, 0] - 1)), 4, q)


@given(st.integers(0, 2**32 - 1))
def test_parseval_closure_for_polynomials(seed):
    rng = np.random.default_rng(seed)
    q = quadrature_for(2, 6)
    x = q.points
    c = rng.normal(size=(3, 3))
    vals = np.einsum("ni,ij,nj->n", x, c, x) + x @ rng.normal(size=3)
    norms = degree_projection_norms(vals, 6, q, parseval_tol=1e-10)
    assert norms.sum() == pytest.approx(lp_norm(vals, q, 2) ** 2)


# profiles and M_f ------------------------------------------------------------------


def test_profile_shape():
    v = SmoothProfile(1.0, 2.0, 0.25)
    assert v(1.5) == 1 and v(0.7) == 0 and v(2.3) == 0
    assert 0 < v(0.9) < 1
    assert v.support == (0.75, 2.25)
    with pytest.raises(ValueError):
        SmoothProfile(2.0, 1.0)


@given(st.floats(-2, 2), st.floats(0, 4), st.floats(0.05, 0.5), st.floats(0.6, 2.0))
def test_profile_moments_match_adaptive_quadrature(lo, width, ramp, s):
    v = SmoothProfile(lo, lo + width, ramp)
    for power in (1, 2):
        assert v.moment(s, power).real == pytest.approx(v.moment_reference(s, power), rel=1e-8)


def test_m_f_constant_phi():
    v = SmoothProfile(0.0, 1.0, 0.2)
    f = ProductTestFunction(v, lambda x: np.full(x.shape[:-1], 3.0), m_max=8)
    for s in (1.2, 1.7):
        assert m_f_eval(2, f, s) == pytest.approx(9 * abs(v.moment(s)) ** 2)


def test_m_f_degree_one_phi():
    v = SmoothProfile(0.0, 1.0, 0.2)
    f = ProductTestFunction(v, lambda x: x[..., 0] - 1j * x[..., 1], m_max=8)
    s = 1.4
    assert m_f_eval(2, f, s) == pytest.approx(pm_eval(2, 1, s).real * 2 / 3 * abs(v.moment(s)) ** 2)


def test_m_f_comparable_to_tilde():
    rng = np.random.default_rng(0)
    v = SmoothProfile(0.0, 1.0, 0.2)
    ratios = []
    for phi in random_corpus(rng, 6, max_kappa=30):
        f = ProductTestFunction(v, phi, m_max=32)
        for s in (1.1, 1.5, 1.9):
            ratios.append(m_f_eval(2, f, s) / m_f_tilde_eval(2, f, s))
    # P_m(s) / (m+1)^{2-2s} lies in [e^{-0.7}, 1] for these s
    assert 0.4 < min(ratios) and max(ratios) <= 1 + 1e-12


# A_lambda ----------------------------------------------------------------------------


def test_a_lambda_ratio_is_one_at_s_equal_n():
    v = SmoothProfile(0.5, 3.0, 0.1)
    assert a_lambda_ratio(2, v, 2.0) == pytest.approx(1.0)


def test_a_lambda_rejects_empty_profile():
    v = SmoothProfile(0.0, 0.0, 1e-3)
    with pytest.raises(ZeroDivisionError):
        a_lambda_ratio(2, SmoothProfile(800.0, 800.0, 1e-3), 1.5)
    assert a_lambda_ratio(2, v, 1.5) > 0


@pytest.mark.parametrize("tau", [-8.0, -2.0, 0.0, 3.0])
def test_smoothed_indicator_ratio_uniform_in_tau(tau):
    ok, worst = a_lambda_check(2, SmoothProfile(tau, tau + 10, 0.05), 15.0)
    assert ok and worst < 2


def test_profile_ratio_bound_below_fifteen():
    assert all(profile_ratio_bound(2, s) < 15 for s in s_grid(2))


def test_moment_bounds_keys():
    b = moment_bounds(2, SmoothProfile(0.0, 10.0, 0.05), 0.0)
    assert set(b) == {"first", "second", "s_max"}
    assert 1 / 6 <= b["first"] <= 1.5


# Chen-type bound ------------------------------------------------------------------------


def test_chen_constant_phi():
    report = chen_bound_check([lambda x: np.ones(x.shape[:-1])], 8)
    assert report.constant == pytest.approx(1.0)


def test_chen_constant_stable_across_corpora():
    consts = []
    for seed in (0, 1):
        report = chen_bound_check(random_corpus(np.random.default_rng(seed), 9), 64)
        assert np.isfinite(report.constant) and np.isfinite(report.split_constant)
        consts.append(report.split_constant)
    assert max(consts) / min(consts) < 3
