import math

import numpy as np
import pytest

from wpcn.optimizer import (
    SingularMixingError,
    _v_vector,
    asymptotics,
    fairness_radius,
    grid_oracle,
    optimal_alpha,
    optimal_beta,
    optimal_xi,
    run_algorithm1,
    sherman_morrison_inverse,
    wit_rate_farthest,
)
from wpcn.rates import (
    DecisionVariables,
    FeedbackApproximationError,
    forward_rates,
    mixing_matrix,
    sinr_decomposition,
)
from wpcn.specfun import lambert_w0
from wpcn.system import path_loss

M_SWEEP = [8, 16, 32, 64, 128, 256, 512, 1024, 2048]


@pytest.fixture(scope="module")
def optimum():
    from wpcn import default_config
    return run_algorithm1(default_config())


@pytest.fixture(scope="module")
def sweep():
    from wpcn import default_config
    c = default_config()
    return {M: run_algorithm1(c.replace(M=M)) for M in M_SWEEP}


def rate_family(beta, g):
    return (1 - beta) * np.log2(1 + beta * g)


# ---------------------------------------------------------------- energy weights and radius

def test_sherman_morrison_matches_direct_inverse():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        M = int(rng.integers(3, 40))
        K = int(rng.integers(1, M))
        s2 = rng.uniform(0, 0.95 * (M - 1) / M, K)
        direct = np.linalg.inv(mixing_matrix(s2, M))
        worst = max(worst, np.max(np.abs(direct - sherman_morrison_inverse(s2, M))))
    assert worst <= 1e-10


def test_v_vector_domain_error():
    with pytest.raises(SingularMixingError):
        _v_vector([0.1, 0.95], 10)


def test_optimal_xi_single_wd():
    xi, part = optimal_xi([1e-5], [0.3], 8)
    assert xi.tolist() == [1.0]
    assert part.fair_set == (0,) and part.unfair_set == ()


def test_optimal_xi_full_csi_large_m_tends_to_inverse_square(cfg):
    b = path_loss(cfg)
    xi, _ = optimal_xi(b, np.zeros(cfg.K), 10 ** 7)
    np.testing.assert_allclose(xi, b ** -2 / np.sum(b ** -2), atol=1e-6)


def test_optimal_xi_partition_invariants(cfg):
    rng = np.random.default_rng(8)
    for _ in range(50):
        K = int(rng.integers(1, 7))
        M = int(rng.integers(K + 1, 40))
        d = np.sort(rng.uniform(1, 20, K))
        c = cfg.replace(M=M, d=d)
        s2 = rng.uniform(0, 0.9 * (M - 1) / M, K)
        xi, part = optimal_xi(path_loss(c), s2, M)
        assert np.all(xi >= 0) and xi.sum() == pytest.approx(1.0, abs=1e-12)
        assert set(part.fair_set) | set(part.unfair_set) == set(range(K))
        assert not set(part.fair_set) & set(part.unfair_set)
        assert K - 1 in part.fair_set
        assert np.all(xi[list(part.fair_set)] > 0)


def test_fair_set_sinr_equality(cfg):
    rng = np.random.default_rng(9)
    for _ in range(50):
        K = int(rng.integers(2, 7))
        M = int(rng.integers(K + 1, 64))
        c = cfg.replace(M=M, d=np.sort(rng.uniform(1, 20, K)))
        b = path_loss(c)
        s2 = rng.uniform(0, 0.8 * (M - 1) / M, K)
        xi, part = optimal_xi(b, s2, M)
        scale = c.B * 0.2 * c.s_max * (M - K) / c.sigma2_un
        snr = scale * b ** 2 * (mixing_matrix(s2, M) @ xi)
        fair = snr[list(part.fair_set)]
        assert np.ptp(fair) <= 1e-9 * fair.mean()
        unfair = list(part.unfair_set)
        if unfair:
            assert np.all(snr[unfair] > fair.mean())


def test_fairness_radius_consistency_random_geometries(cfg):
    rng = np.random.default_rng(10)
    for _ in range(100):
        K = int(rng.integers(1, 7))
        M = int(rng.integers(K + 1, 48))
        d = np.sort(rng.uniform(1, 25, K))
        c = cfg.replace(M=M, d=d, delta=rng.uniform(2, 4))
        s2 = rng.uniform(0, 0.9 * (M - 1) / M, K)
        _, part = optimal_xi(path_loss(c), s2, M, d, c.delta)
        r = part.fairness_radius
        for k in range(K):
            if k in part.unfair_set:
                assert d[k] < r + 1e-9
            else:
                assert d[k] >= r - 1e-9


def test_fairness_radius_full_csi(cfg):
    # sigma2 = 0 gives v = 1/(M-1) and r = (M+K-1)**(-1/(2 delta)) * ||d||_{2 delta}
    rng = np.random.default_rng(4)
    for _ in range(20):
        K = int(rng.integers(1, 6))
        M = int(rng.integers(K + 1, 200))
        d = np.sort(rng.uniform(1, 30, K))
        delta = rng.uniform(2, 4)
        r = fairness_radius(np.zeros(K), d, delta, M)
        exact = (M + K - 1) ** (-1 / (2 * delta)) * np.linalg.norm(d, 2 * delta)
        assert r == pytest.approx(exact, rel=1e-12)
    # the farthest WD dominates the norm for the default geometry
    d = np.array(cfg.d)
    assert fairness_radius(np.zeros(4), d, 3.0, 10) == pytest.approx(13 ** (-1 / 6) * 10, rel=0.05)


def test_fairness_radius_single_wd_below_distance():
    r = fairness_radius([0.2], [7.0], 3.0, 10)
    v = 1 / (9 - 10 * 0.2)
    assert r == pytest.approx((7.0 ** 6 * v / (1 + v)) ** (1 / 6))
    assert r < 7.0


# ---------------------------------------------------------------- DL band share

def test_optimal_beta_power_clamp():
    assert optimal_beta(1e6, 0.5, 1e5, 1e-4) == pytest.approx(0.05)


def test_optimal_beta_grid_oracle_at_1e3():
    grid = np.arange(1e-4, 1.0, 1e-4)
    best = grid[np.argmax(rate_family(grid, 1e3))]
    assert abs(optimal_beta(1e3, 1e9, 1.0, 1.0) - best) <= 2e-4


@pytest.mark.parametrize("g", [0.5, 4.0, 37.0, 1e3, 1e6, 1e10])
def test_optimal_beta_stationarity(g):
    beta = optimal_beta(g, 1e9, 1.0, 1.0)
    h = 1e-6 * beta
    slope = (rate_family(beta + h, g) - rate_family(beta - h, g)) / (2 * h)
    assert abs(slope) <= 1e-6 * math.log2(1 + g)


def test_asymptotic_beta_plug_in():
    g = math.e * 1e3
    assert 1 / lambert_w0(math.e * g) == pytest.approx(1 / lambert_w0(math.e ** 2 * 1e3))


# ---------------------------------------------------------------- feedback share

def test_optimal_alpha_without_loss_is_zero():
    assert optimal_alpha(1e3, 0.0, 1e-3, 1e5, 10, 0.2) == 0.0
    assert optimal_alpha(1e3, 1e-9, 1e-3, 1e5, 10, 0.2) == 0.0


def test_optimal_alpha_never_one(cfg, optimum):
    sd = sinr_decomposition(cfg, optimum.vars.beta, optimum.vars.xi)
    a = optimal_alpha(sd.gamma_max[-1], sd.gamma_maxloss[-1], cfg.T, cfg.B, cfg.M,
                      optimum.vars.beta)
    assert 0.0 <= a < 1.0


def test_optimal_alpha_vs_fine_grid(cfg, optimum):
    beta, xi = optimum.vars.beta, optimum.vars.xi
    sd = sinr_decomposition(cfg, beta, xi)
    g, gl = sd.gamma_max[-1], sd.gamma_maxloss[-1]
    a_star = optimal_alpha(g, gl, cfg.T, cfg.B, cfg.M, beta)
    grid = np.arange(0, 0.5, 1e-3)
    rates = []
    for a in grid:
        try:
            rates.append(wit_rate_farthest(a, g, gl, cfg.T, cfg.B, cfg.M, beta))
        except FeedbackApproximationError:
            rates.append(-np.inf)
    i = int(np.argmax(rates))
    assert abs(a_star - grid[i]) <= 0.01
    assert wit_rate_farthest(a_star, g, gl, cfg.T, cfg.B, cfg.M, beta) >= rates[i] * (1 - 5e-3)


def _feasible_alpha_rates(cfg, beta, xi, step=1e-3):
    sd = sinr_decomposition(cfg, beta, xi)
    g, gl = sd.gamma_max[-1], sd.gamma_maxloss[-1]
    out = []
    for a in np.arange(step, 1.0, step):
        try:
            out.append(wit_rate_farthest(a, g, gl, cfg.T, cfg.B, cfg.M, beta))
        except FeedbackApproximationError:
            if out:
                break
    return g, np.array(out)


def test_wit_rate_concave_in_alpha(cfg):
    rng = np.random.default_rng(12)
    tested = 0
    for _ in range(40):
        M = int(rng.integers(6, 128))
        c = cfg.replace(M=M)
        beta = rng.uniform(0.02, 1.0)
        xi = rng.dirichlet(np.ones(c.K))
        g, r = _feasible_alpha_rates(c, beta, xi)
        if g < 4 or len(r) < 3:
            continue
        second = r[2:] - 2 * r[1:-1] + r[:-2]
        assert np.max(second) / np.max(r) <= 1e-6
        tested += 1
    assert tested >= 10


def test_wit_rate_unimodal_in_beta(cfg):
    rng = np.random.default_rng(13)
    for _ in range(20):
        alpha = rng.uniform(0.02, 0.2)
        xi = rng.dirichlet(np.ones(cfg.K))
        rates = []
        for beta in np.linspace(1e-3, 0.999, 999):
            rates.append(forward_rates(cfg, DecisionVariables(alpha, beta, xi)).r_w[-1])
        signs = np.sign(np.diff(rates))
        signs = signs[signs != 0]
        assert np.count_nonzero(np.diff(signs)) <= 1


# ---------------------------------------------------------------- outer loop

def test_default_optimum(optimum):
    assert optimum.converged
    assert optimum.vars.alpha == pytest.approx(0.0558, abs=3e-3)
    assert optimum.vars.beta == pytest.approx(0.1802, abs=5e-3)
    assert optimum.partition.unfair_set == (0, 1)
    assert optimum.partition.fair_set == (2, 3)


def test_optimum_rate_structure(optimum):
    rw = optimum.report.r_w
    fair = rw[list(optimum.partition.fair_set)]
    assert np.ptp(fair) <= 1e-6 * fair.mean()
    assert np.all(rw[list(optimum.partition.unfair_set)] > fair.max())
    assert optimum.report.min_rate == pytest.approx(fair.min())


def test_optimum_fairness_radius_separates_sets(cfg, optimum):
    r = optimum.partition.fairness_radius
    d = np.array(cfg.d)
    assert np.all(d[list(optimum.partition.unfair_set)] < r)
    assert np.all(d[list(optimum.partition.fair_set)] >= r)


def test_algorithm1_min_rate_nearly_monotone(optimum):
    # a dip of ~4e-8 relative occurs once the partition settles
    rates = np.array([h["min_rate"] for h in optimum.history])
    assert np.all(np.diff(rates) >= -1e-7 * rates[:-1])


@pytest.mark.xfail(strict=True, reason="min rate dips by ~4e-8 relative at iteration 4")
def test_algorithm1_min_rate_monotone_1e9(optimum):
    rates = np.array([h["min_rate"] for h in optimum.history])
    assert np.all(np.diff(rates) >= -1e-9 * rates[:-1])


def test_algorithm1_single_wd(cfg):
    res = run_algorithm1(cfg.replace(d=[6.0], M=4))
    assert res.vars.xi.tolist() == [1.0]
    assert res.converged
    assert 0 <= res.vars.alpha < 0.2
    sd = sinr_decomposition(cfg.replace(d=[6.0], M=4), res.vars.beta, [1.0])
    gamma = sd.gamma_max[0] - sd.gamma_maxloss[0] * res.report.sigma2_uf[0]
    # beta is the Lambert-W stationary point for the current slope
    assert res.vars.beta == pytest.approx(
        optimal_beta(gamma / res.vars.beta, 1e9, 1.0, 1.0), rel=1e-6)


def test_asymptotic_init_reaches_same_optimum(cfg, optimum):
    res = run_algorithm1(cfg, asymptotic_init=True)
    assert res.vars.alpha == pytest.approx(optimum.vars.alpha, abs=1e-7)
    assert res.vars.beta == pytest.approx(optimum.vars.beta, abs=1e-7)
    np.testing.assert_allclose(res.vars.xi, optimum.vars.xi, atol=1e-7)


# ---------------------------------------------------------------- asymptotics

def test_asymptotic_xi_equal_distances(cfg):
    a = asymptotics(cfg.replace(d=[5.0, 5.0, 5.0], M=16))
    np.testing.assert_allclose(a.xi_asym, np.full(3, 1 / 3))


def test_asymptotic_xi_default(cfg):
    d6 = np.array(cfg.d) ** 6
    np.testing.assert_allclose(asymptotics(cfg).xi_asym, d6 / d6.sum(), rtol=1e-12)


def test_asymptotic_trends_beta_and_radius(sweep):
    betas = [sweep[M].vars.beta for M in M_SWEEP]
    radii = [sweep[M].partition.fairness_radius for M in M_SWEEP]
    assert np.all(np.diff(betas) < 0)
    assert np.all(np.diff(radii) < 0)
    scaled = [r * M ** (1 / 6) for r, M in zip(radii, M_SWEEP)]
    assert max(scaled) < 2 * min(scaled)


@pytest.mark.xfail(strict=True, reason="alpha* rises up to M=256 before decaying")
def test_asymptotic_trend_alpha(sweep):
    alphas = [sweep[M].vars.alpha for M in M_SWEEP]
    assert np.all(np.diff(alphas) < 0)


def test_large_m_envelopes(cfg):
    c = cfg.replace(M=2000)
    res = run_algorithm1(c)
    a = asymptotics(c)
    assert res.vars.alpha <= 1.5 * math.log(2) / math.log(2000)
    assert res.vars.beta <= 1.5 / math.log(a.gamma_bar_K)


@pytest.mark.xfail(strict=True, reason="max |xi - xi_asym| is 0.0135 at M=2000")
def test_large_m_xi_close_to_asymptote(cfg):
    c = cfg.replace(M=2000)
    res = run_algorithm1(c)
    assert np.max(np.abs(res.vars.xi - asymptotics(c).xi_asym)) < 1e-2


# ---------------------------------------------------------------- grid oracle

def test_grid_oracle_single_point(cfg):
    res = grid_oracle(cfg, alphas=[0.05], betas=[0.2])
    assert (res.alpha, res.beta) == (0.05, 0.2)
    assert res.r_w_min == pytest.approx(
        np.nanmax(res.min_rate))


def test_grid_oracle_invalid_points_are_nan(cfg):
    res = grid_oracle(cfg, alphas=[0.0, 0.05], betas=[0.2])
    assert np.isnan(res.min_rate[0, 0]) and res.alpha == 0.05


def test_grid_oracle_beta_matches_lambert_beta_without_feedback_loss(cfg):
    # with alpha large the feedback error is negligible, so the min rate in
    # beta follows (1-beta) log2(1 + beta*gbar_K)
    betas = np.linspace(0.0005, 1.0, 2000)
    res = grid_oracle(cfg, alphas=[0.5], betas=betas)
    b = path_loss(cfg)
    xi = np.linalg.solve(mixing_matrix(np.zeros(cfg.K), cfg.M), b ** -2)
    xi, _ = optimal_xi(b, np.zeros(cfg.K), cfg.M)
    gbar = sinr_decomposition(cfg, 1.0, xi).gamma_max[-1]
    assert abs(res.beta - optimal_beta(gbar, cfg.P_b, cfg.B, cfg.s_max)) <= 1e-3
