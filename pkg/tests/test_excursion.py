import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import random_sl2c
from cuspflow.excursion import (
    DmSpec,
    OrbitState,
    ReducedRows,
    borel_cantelli_counter,
    borel_cantelli_counts,
    cusp_distance,
    cusp_distance_c,
    dm_membership,
    dm_volume_mc,
    estimate_sigma_Ym,
    flow_step_distance,
    haar_sample,
    loglaw_ratio,
    loglaw_statistic,
    orbit_distances,
    orbit_excursion,
    random_unipotent,
    relation_defect,
    shrinking_radii,
    tau_inclusion_check,
    unipotent_normalizer,
    wilson_interval,
)
from cuspflow.picard import GEN_S, GEN_T, GEN_TI, a_c, haar_batch, lift, mobius_c, u_c, u_lower_c
from cuspflow.vahlen import UpperHalfPoint, dist_hyp

seeds = st.integers(0, 2**32 - 1)


def random_gamma(rng, length=6):
    gens = [GEN_T, GEN_TI, GEN_S, np.linalg.inv(GEN_T), np.linalg.inv(GEN_TI)]
    g = np.eye(2, dtype=complex)
    for i in rng.integers(0, len(gens), length):
        g = g @ gens[i]
    return g


# cusp distance ---------------------------------------------------------------------------


def test_basepoint_distance_zero():
    assert cusp_distance(OrbitState(np.eye(2, dtype=complex))) == pytest.approx(0.0, abs=1e-12)


def test_deep_point_distance_is_log_height():
    for t in (2.0, 5.0, 9.0):
        assert cusp_distance(OrbitState(a_c(t))) == pytest.approx(t)
        assert cusp_distance_c(a_c(t)) == pytest.approx(t)


def test_low_point_reduces_by_inversion():
    assert cusp_distance_c(lift(0j, 0.1)) == pytest.approx(math.log(10))


@given(seeds)
def test_distance_is_gamma_invariant(seed):
    rng = np.random.default_rng(seed)
    g = random_sl2c(rng, 5)
    gam = random_gamma(rng)
    assert np.allclose(cusp_distance_c(gam @ g), cusp_distance_c(g), atol=1e-9)


def test_batched_and_certified_distances_agree():
    rng = np.random.default_rng(3)
    for g in random_sl2c(rng, 20):
        assert cusp_distance(OrbitState(g)) == pytest.approx(float(cusp_distance_c(g)), abs=1e-9)


def test_distance_close_to_hyperbolic_distance():
    rng = np.random.default_rng(4)
    for g in random_sl2c(rng, 50):
        x = OrbitState(g)
        red = x.reduce()
        z, h = mobius_c(red.gamma @ g, 0j, 1.0)
        z = complex(z) - complex(round(z.real), round(z.imag))
        d = dist_hyp(UpperHalfPoint((0.0, 0.0), 1.0), UpperHalfPoint((z.real, z.imag), float(h)))
        assert abs(d - math.log(red.h_max)) <= 1.5


# orbits -------------------------------------------------------------------------------


def test_orbit_series_from_basepoint():
    series = orbit_excursion(OrbitState(np.eye(2, dtype=complex)), 200)
    assert len(series.times) == 200
    assert np.all(np.isfinite(series.running_ratio[1:]))
    assert np.all(np.diff(series.running_ratio[1:]) >= 0)


def test_orbit_rejects_short_horizon():
    with pytest.raises(ValueError):
        orbit_excursion(OrbitState(np.eye(2, dtype=complex)), 5)


@given(seeds)
def test_orbit_continuity(seed):
    x = OrbitState(haar_batch(np.random.default_rng(seed), 1).g[0])
    s = orbit_excursion(x, 300, stride=0.5)
    assert np.all(np.abs(np.diff(s.dist)) <= flow_step_distance(0.5) + 1e-9)


def test_doubled_stride_within_continuity_bound():
    x = haar_sample(11)
    fine = orbit_excursion(x, 2000, stride=1.0)
    coarse = orbit_excursion(x, 2000, stride=2.0)
    assert np.allclose(coarse.dist, fine.dist[1::2])
    gap = np.nanmax(fine.dist) - np.nanmax(coarse.dist)
    assert 0 <= gap <= flow_step_distance(1.0)


def test_orbit_matches_direct_reduction():
    x = haar_sample(2)
    s = orbit_excursion(x, 50)
    for t, d in zip(s.times[::7], s.dist[::7]):
        assert d == pytest.approx(float(cusp_distance_c(x.base @ u_lower_c(t))), abs=1e-8)


def test_orbit_rows_layout():
    s = orbit_excursion(haar_sample(0), 10)
    row = next(s.rows(3, 9))
    assert row[:3] == (3, 9, 1.0)


# log law -----------------------------------------------------------------------------------


def test_loglaw_statistic_dominates_endpoint():
    g = haar_batch(np.random.default_rng(0), 30).g
    times = np.arange(1, 1001, dtype=float)
    d = orbit_distances(g, times)
    stat = loglaw_ratio(d, times, 1000)
    assert np.all(stat >= d[:, -1] / math.log(1000))


def test_loglaw_two_seeds_indistinguishable():
    a = loglaw_statistic(60, 2000, seed=1)
    b = loglaw_statistic(60, 2000, seed=2)
    assert stats.ks_2samp(a.values, b.values).pvalue > 0.01
    assert a.q25 <= a.median <= a.q75


# Borel-Cantelli ------------------------------------------------------------------------------


def test_zero_radius_counts_positive_distance():
    g = haar_batch(np.random.default_rng(0), 5).g
    ells = np.arange(10, 201, dtype=float)
    d = orbit_distances(g, ells)
    counts = borel_cantelli_counts(g, eps=1.0, sign=-1, L=10, horizons=[200])
    assert np.array_equal(counts[:, 0], np.sum(d > 0, axis=1))


def test_counts_monotone_in_horizon_and_sign():
    g = haar_batch(np.random.default_rng(1), 20).g
    plus = borel_cantelli_counts(g, 0.5, +1, 10, [500, 1000, 2000])
    minus = borel_cantelli_counts(g, 0.5, -1, 10, [500, 1000, 2000])
    assert np.all(np.diff(plus, axis=1) >= 0) and np.all(minus >= plus)


def test_single_counter_matches_batch():
    x = haar_sample(4)
    assert borel_cantelli_counter(x, 0.5, -1, 10, 300) == borel_cantelli_counts(x.current[None], 0.5, -1, 10, [300])[0, 0]


def test_shrinking_radii():
    assert shrinking_radii(np.array([math.e]), 0.5, 1)[0] == pytest.approx(0.75)


# D_m -----------------------------------------------------------------------------------------


def test_dm_spec_basics():
    spec = DmSpec(10)
    assert spec.p == 20 and list(spec.ells) == list(range(10, 21))
    assert np.all(np.diff(spec.r(spec.ells)) > 0)
    for m in (1, 10, 100, 1000):
        assert DmSpec(m).measure_sum() >= 1


@given(seeds, st.integers(10, 40))
def test_constructed_point_is_member(seed, m):
    rng = np.random.default_rng(seed)
    spec = DmSpec(m)
    ell0 = int(rng.integers(m, 2 * m + 1))
    s = float(spec.r(ell0)) + rng.uniform(0.01, 3)
    b = rng.uniform(-0.35, 0.35) + 1j * rng.uniform(-0.35, 0.35)
    w = np.exp(1j * rng.uniform(0, 2 * math.pi))
    q = u_c(complex(*rng.normal(size=2))) @ np.diag([w, 1 / w])
    g = q @ a_c(s) @ u_lower_c(b) @ u_lower_c(-ell0)
    res = dm_membership(random_gamma(rng) @ g, spec)
    assert res.member[0] and m <= res.witness[0] <= ell0


def test_member_implies_excursion():
    spec = DmSpec(20)
    g = haar_batch(np.random.default_rng(9), 3000).g
    res = dm_membership(g, spec)
    idx = np.flatnonzero(res.member)
    assert len(idx) > 100
    for i in idx[:200]:
        ell = res.witness[i]
        d = float(cusp_distance_c(g[i] @ u_lower_c(float(ell))))
        assert d >= float(spec.r(ell)) - math.log(2)


def test_infinite_radius_gives_zero_rate():
    est = estimate_sigma_Ym(DmSpec(10, radius_shift=math.inf), 500, seed=0)
    assert est.rate == 0 and est.ci[0] == 0


def test_nested_specs_are_nested():
    g = haar_batch(np.random.default_rng(5), 4000).g
    loose = dm_membership(g, DmSpec(20, eps=0.1)).member
    tight = dm_membership(g, DmSpec(20, eps=0.05)).member
    assert np.all(loose[tight])


def test_membership_gamma_invariant():
    rng = np.random.default_rng(6)
    g = haar_batch(rng, 500).g
    spec = DmSpec(10)
    a = dm_membership(g, spec).member
    b = dm_membership(random_gamma(rng) @ g, spec).member
    assert np.array_equal(a, b)


def test_wilson_interval_covers_rate():
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi
    assert wilson_interval(0, 50)[0] == 0


def test_dm_volume_matches_closed_form():
    spec = DmSpec(10)
    est, se = dm_volume_mc(spec, 100_000, np.random.default_rng(0))
    assert abs(est - spec.volume()) <= max(4 * se, 0.02 * spec.volume())


def test_tau_inclusion_and_relation():
    rng = np.random.default_rng(0)
    spec = DmSpec(20)
    assert tau_inclusion_check(spec, 25, rng, 2000) == 1.0
    assert relation_defect(7.0, rng, 2000) < 1e-12


# unipotent normal form ------------------------------------------------------------------------


@given(seeds)
def test_unipotent_normalizer(seed):
    rng = np.random.default_rng(seed)
    g = random_unipotent(rng)
    k, eta = unipotent_normalizer(g)
    assert np.allclose(k @ np.conj(k.T), np.eye(2), atol=1e-9)
    assert eta > 0
    rebuilt = np.linalg.inv(k) @ u_lower_c(eta) @ k
    assert min(np.max(np.abs(rebuilt - g)), np.max(np.abs(rebuilt + g))) <= 1e-9 * max(1.0, np.max(np.abs(g)))


def test_normalizer_rejects_non_unipotent():
    with pytest.raises(ValueError):
        unipotent_normalizer(np.eye(2, dtype=complex))
    with pytest.raises(ValueError):
        unipotent_normalizer(a_c(1.0))


def test_reduced_rows_shortest():
    g = random_sl2c(np.random.default_rng(1), 10)
    rows = ReducedRows(g)
    assert np.all(rows.shortest_norm_sq <= np.abs(rows.a1) ** 2 + np.abs(rows.b1) ** 2 + 1e-12)
