import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpcn.specfun import (
    lambert_w0,
    log_beta,
    rvq_error_bound,
    rvq_error_mean,
    rvq_error_sample,
)


@pytest.mark.parametrize("x, expected", [
    (0.0, 0.0),
    (math.e, 1.0),
    # Newton on w e^w = 1, cross-checked against mpmath below
    (1.0, 0.5671432904097838),
    (-1 / math.e, -1.0),
])
def test_lambert_w0_values(x, expected):
    assert lambert_w0(x) == pytest.approx(expected, abs=1e-15)


def test_lambert_w0_omega_constant_matches_mpmath():
    assert lambert_w0(1.0) == pytest.approx(float(mpmath.lambertw(1)), rel=1e-15)


def test_lambert_w0_domain_error():
    with pytest.raises(ValueError):
        lambert_w0(-0.4)


def test_lambert_w0_round_trip_grid():
    xs = np.concatenate([
        -1 / math.e + np.logspace(-6, math.log10(1 / math.e), 500),
        np.logspace(-8, 6, 500),
    ])
    w = lambert_w0(xs)
    resid = np.abs(w * np.exp(w) - xs) / np.maximum(1.0, np.abs(xs))
    assert resid.max() <= 1e-10
    assert np.all(w >= -1)


@given(st.floats(min_value=-1 / math.e + 1e-12, max_value=1e12, allow_nan=False))
@settings(max_examples=300)
def test_lambert_w0_round_trip_property(x):
    w = lambert_w0(x)
    assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x)) + 1e-15


def test_lambert_w0_against_mpmath_spot_checks():
    for x in [-0.3678, -0.2, 1e-10, 0.5, 7.0, 123.4, 1e5, 1e9]:
        assert lambert_w0(x) == pytest.approx(float(mpmath.lambertw(x)), rel=1e-13, abs=1e-15)


def test_log_beta_matches_lgamma_and_large_arguments():
    assert log_beta(3.0, 4.0) == pytest.approx(math.log(1 / 60))
    p, q = 2.0 ** 40, 10 / 9
    exact = float(mpmath.log(mpmath.beta(p, q)))
    assert log_beta(p, q) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("M", [2, 3, 10, 64])
def test_rvq_mean_without_feedback(M):
    assert rvq_error_mean(0, M) == pytest.approx(1 - 1 / M, rel=1e-12)


def test_rvq_mean_matches_mpmath_closed_form():
    for n, M in [(1, 4), (3.5, 10), (10, 4), (40, 8)]:
        N = mpmath.mpf(2) ** n
        exact = float(N * mpmath.beta(N, mpmath.mpf(M) / (M - 1)))
        assert rvq_error_mean(n, M) == pytest.approx(exact, rel=1e-10)


def test_rvq_mean_huge_codebook_is_finite():
    v = rvq_error_mean(2000, 4)
    assert 0 <= v < rvq_error_bound(2000, 4)
    assert rvq_error_mean(1500, 1000) == pytest.approx(
        math.gamma(1000 / 999) * 2 ** (-1500 / 999), rel=1e-9)


def test_rvq_mean_n10_m4_against_beta_minimum_draws():
    # min of N iid Beta(M-1,1) = (min U)^(1/(M-1)) with min U ~ Beta(1, N)
    rng = np.random.default_rng(7)
    n, M = 10, 4
    z = rng.beta(1.0, 2.0 ** n, size=1_000_000) ** (1 / (M - 1))
    se = z.std(ddof=1) / np.sqrt(z.size)
    assert abs(rvq_error_mean(n, M) - z.mean()) < 3 * se


@pytest.mark.parametrize("n", [0.5, 1, 4, 10, 25.3, 100])
@pytest.mark.parametrize("M", [2, 4, 10, 32])
def test_rvq_mean_below_bound(n, M):
    assert rvq_error_mean(n, M) < rvq_error_bound(n, M)


@pytest.mark.parametrize("n", [1 / math.log(2), 1, 3, 8])
@pytest.mark.parametrize("M", [2, 4, 10])
def test_pareto_sufficient_condition(n, M):
    xi = np.linspace(0, 1, 101)
    assert np.all(rvq_error_mean(n, M) < ((M - 1) * xi + 1) / (M * xi + 1))


def test_rvq_sample_examples():
    assert rvq_error_sample(0, 2, 0.25) == pytest.approx(0.25)
    assert rvq_error_sample(7, 5, 0.0) == 0.0
    # hand evaluation of (1 - 0.5**(1/8))**(1/3)
    assert rvq_error_sample(3, 4, 0.5) == pytest.approx(0.4361999840005423, rel=1e-12)


def test_rvq_sample_quantile_matches_explicit_codebook():
    # empirical median of explicit 8-codeword RVQ in C^4
    rng = np.random.default_rng(3)
    M, trials = 4, 20000
    errs = np.empty(trials)
    for i in range(trials):
        g = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        cb = rng.standard_normal((8, M)) + 1j * rng.standard_normal((8, M))
        cb /= np.linalg.norm(cb, axis=1, keepdims=True)
        errs[i] = 1 - np.max(np.abs(cb.conj() @ g) ** 2) / np.linalg.norm(g) ** 2
    frac_below = np.mean(errs <= rvq_error_sample(3, M, 0.5))
    assert abs(frac_below - 0.5) < 3 * np.sqrt(0.25 / trials)


@pytest.mark.parametrize("n", [0, 1, 4, 10])
@pytest.mark.parametrize("M", [2, 4, 10])
def test_rvq_sampler_mean(n, M):
    rng = np.random.default_rng(1000 * n + M)
    z = rvq_error_sample(n, M, rng.random(100_000))
    se = z.std(ddof=1) / np.sqrt(z.size)
    assert abs(z.mean() - rvq_error_mean(n, M)) < 4 * se


def test_rvq_sample_vectorized_and_monotone_in_u():
    u = np.linspace(0, 1, 11)
    z = rvq_error_sample(2.5, 6, u)
    assert z.shape == u.shape
    assert np.all(np.diff(z) >= 0) and z[0] == 0 and z[-1] == pytest.approx(1.0)
