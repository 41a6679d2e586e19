from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, stats

from subspace_evt.errors import AmbiguousMultiplicityError, InvalidInputError
from subspace_evt.evt import (
    EvtCalibration,
    GenGamma,
    aligned_distance,
    calibrate,
    compute_lambdas,
    detect_multiplicity,
    gengamma_survival,
    gumbel_cdf,
    gumbel_quantile,
    ks_distance_to_gumbel,
    normalizing_sequences,
    oracle_statistic,
    tail_constant_A,
)
from subspace_evt.generate import random_frame

mp.mp.dps = 40


def _mp_sequences(lam1, ell, n):
    lam1, n = mp.mpf(lam1), mp.mpf(n)
    L = mp.log(n)
    a = mp.sqrt(lam1) / (2 * mp.sqrt(L))
    b = mp.sqrt(lam1) * (mp.sqrt(L) + (ell - 2) * mp.log(L) / (4 * mp.sqrt(L)) - mp.loggamma(mp.mpf(ell) / 2) / (2 * mp.sqrt(L)))
    return float(a), float(b)


def test_lambdas_iid_closed_form():
    np.testing.assert_allclose(compute_lambdas([3.0, 2.0, 1.0]), [2.0, 0.5, 2 / 9], rtol=1e-12)
    s = np.array([7.0, 4.0, 2.5])
    np.testing.assert_allclose(compute_lambdas(s, D=1.7), 2 * 1.7 / s[::-1] ** 2, rtol=1e-12)


def test_lambdas_diagonal_rank_one():
    rng = np.random.default_rng(0)
    m = 30
    V = random_frame(m, 1, rng)
    D = rng.uniform(0.5, 2.0, m)
    lam = compute_lambdas([4.0], V, D)
    assert lam[0] == pytest.approx(2 * np.sum(D * V[:, 0] ** 2) / 16, rel=1e-12)


def test_lambdas_diagonal_matches_identity_case():
    rng = np.random.default_rng(1)
    V = random_frame(40, 3, rng)
    s = np.array([5.0, 3.0, 2.0])
    np.testing.assert_allclose(compute_lambdas(s, V, np.full(40, 2.0)), compute_lambdas(s, D=2.0), rtol=1e-12)


def test_lambdas_equal_singular_values():
    lam = compute_lambdas([2.0, 2.0, 2.0])
    assert detect_multiplicity(lam) == 3


def test_lambdas_similarity_invariant():
    rng = np.random.default_rng(2)
    V = random_frame(50, 4, rng)
    D = rng.uniform(0.5, 3.0, 50)
    s = np.array([9.0, 6.0, 4.0, 3.0])
    perm = np.array([2, 0, 3, 1])
    np.testing.assert_allclose(compute_lambdas(s, V, D), compute_lambdas(s[perm], V[:, perm], D), rtol=1e-10)


def test_lambdas_errors():
    with pytest.raises(InvalidInputError):
        compute_lambdas([1.0, -1.0])
    with pytest.raises(InvalidInputError):
        compute_lambdas([1.0], np.ones((3, 1)) / math.sqrt(3), np.array([1.0, 0.0, 1.0]))


@pytest.mark.parametrize("lam,ell", [((2, 2, 0.5), 2), ((2, 0.5, 0.2222), 1), ((2, 2, 2), 3)])
def test_detect_multiplicity(lam, ell):
    assert detect_multiplicity(np.array(lam, dtype=float)) == ell


def test_detect_multiplicity_ambiguous():
    with pytest.raises(AmbiguousMultiplicityError):
        detect_multiplicity(np.array([2.0, 2.0 * (1 - 5e-9), 0.5]))


def test_tail_constant_examples():
    assert tail_constant_A([2.0], 1) == 1.0
    assert tail_constant_A([2.0, 2.0], 2) == 1.0
    lam = [2.0, 0.5, 2 / 9]
    oracle = float(mp.sqrt((1 - mp.mpf("0.5") / 2) * (1 - (mp.mpf(2) / 9) / 2)))
    assert tail_constant_A(lam, 1) == pytest.approx(oracle, rel=1e-14)
    assert oracle == pytest.approx(math.sqrt(2 / 3), rel=1e-14)


def test_tail_constant_scale_invariant():
    lam = np.array([2.0, 0.5, 2 / 9])
    assert tail_constant_A(lam * 4.0, 1) == tail_constant_A(lam, 1)


def test_normalizing_sequences_extended_precision():
    a, b = normalizing_sequences(2.0, 1, 100)
    assert (a, b) == pytest.approx(_mp_sequences(2, 1, 100), rel=1e-13)
    assert a == pytest.approx(0.329505, abs=5e-7)
    # the extended-precision oracle gives b_n = 2.5946503...
    assert b == pytest.approx(2.594632, rel=1e-5)


def test_normalizing_sequences_vanishing_corrections():
    n = math.exp(math.e)
    _, b = normalizing_sequences(1.0, 2, n)
    assert b == pytest.approx(math.sqrt(math.e), rel=1e-14)


@pytest.mark.parametrize("ell", [1, 2, 3, 5])
def test_normalizing_sequences_homogeneous(ell):
    a1, b1 = normalizing_sequences(1.3, ell, 500)
    a2, b2 = normalizing_sequences(2.6, ell, 500)
    assert a2 == pytest.approx(math.sqrt(2) * a1, rel=1e-14)
    assert b2 == pytest.approx(math.sqrt(2) * b1, rel=1e-14)
    assert (a1, b1) == pytest.approx(_mp_sequences(1.3, ell, 500), rel=1e-13)


def test_normalizing_sequences_errors():
    with pytest.raises(InvalidInputError):
        normalizing_sequences(1.0, 1, 2)
    with pytest.raises(InvalidInputError):
        normalizing_sequences(0.0, 1, 10)


def test_calibration_invariants():
    cal = calibrate([3.0, 2.0, 1.0], 100)
    assert cal.ell == 1 and cal.A == pytest.approx(math.sqrt(2 / 3))
    assert calibrate([5.0], 100).A == 1.0
    with pytest.raises(InvalidInputError):
        EvtCalibration(np.array([1.0]), 1, 1.5, 1.0, 0.0, 10)


def test_oracle_statistic_zero_distance_and_affine():
    U0 = random_frame(60, 2, np.random.default_rng(3))
    cal = calibrate([4.0, 2.0], 60)
    assert oracle_statistic(U0, U0, cal) == pytest.approx(-cal.b_n / cal.a_n + cal.log_A, abs=1e-12)
    Uhat = random_frame(60, 2, np.random.default_rng(4))
    d = aligned_distance(Uhat, U0)
    wide = EvtCalibration(cal.lambdas, cal.ell, cal.A, 2 * cal.a_n, cal.b_n, 60)
    assert wide.standardize(d) - wide.log_A == pytest.approx((cal.standardize(d) - cal.log_A) / 2, rel=1e-14)


def test_gumbel_helpers():
    assert gumbel_cdf(0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert gumbel_quantile(0.95) == pytest.approx(2.970195, abs=1e-6)
    assert gumbel_quantile(gumbel_cdf(1.7)) == pytest.approx(1.7, abs=1e-12)
    for q in (0.0, 1.0):
        with pytest.raises(InvalidInputError):
            gumbel_quantile(q)


def test_gengamma_rayleigh_and_half_normal():
    xs = np.linspace(0.1, 6, 30)
    ray = GenGamma(3.0, 2)
    np.testing.assert_allclose(gengamma_survival(xs, ray), np.exp(-(xs**2) / 3.0), rtol=1e-13)
    assert ray.remainder_bound(5.0) == 0.0
    half = GenGamma(2.0, 1)
    np.testing.assert_allclose(gengamma_survival(xs, half), 2 * stats.norm.sf(xs), rtol=1e-12)
    assert gengamma_survival(0.0, half) == 1.0
    assert gengamma_survival(-1.0, half) == 1.0


@pytest.mark.parametrize("lam1,ell", [(2.0, 1), (0.7, 2), (1.0, 3), (3.0, 5)])
def test_gengamma_density_integrates_to_one(lam1, ell):
    g = GenGamma(lam1, ell)
    total, err = integrate.quad(lambda x: float(g.pdf(x)), 0, np.inf, epsabs=1e-12)
    assert abs(total - 1) <= 1e-8


@pytest.mark.parametrize("ell", [1, 3, 4])
def test_gengamma_expansion_within_remainder(ell):
    lam1 = 1.5
    g = GenGamma(lam1, ell)
    for x in np.linspace(3 * math.sqrt(lam1), 8 * math.sqrt(lam1), 12):
        exact = gengamma_survival(x, g)
        rel = exact / float(g.sf_leading_term(x)) - 1
        assert abs(rel) <= float(g.remainder_bound(x)) * (1 + 1e-9)


def test_ks_quantile_grid():
    k = 1000
    x = gumbel_quantile((np.arange(1, k + 1) - 0.5) / k)
    assert ks_distance_to_gumbel(x) <= 0.0005 + 1 / (2 * k)


def test_ks_constant_sample():
    c = 0.4
    F = float(gumbel_cdf(c))
    assert ks_distance_to_gumbel(np.full(50, c)) >= max(F, 1 - F) - 1e-12


def test_ks_iid_draws_dkw():
    x = stats.gumbel_r.rvs(size=100_000, random_state=5)
    assert ks_distance_to_gumbel(x) <= 1.95 / math.sqrt(1e5)


def test_ks_needs_two_samples():
    with pytest.raises(InvalidInputError):
        ks_distance_to_gumbel([1.0])
