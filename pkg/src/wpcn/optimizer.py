"""Max-min WIT rate optimizer.

The solver alternates three closed-form updates until the energy weights
stop moving:

* ``beta`` from the stationary point of ``(1-beta) log2(1 + beta*gbar)``
  (a Lambert-W expression), clipped by the power budget;
* ``alpha`` from a fixed-point iteration on the stationarity condition of
  the farthest WD's rate;
* ``xi`` by solving the equal-SINR linear system on the fair set and
  dropping WDs whose weight would be negative.

:func:`grid_oracle` maximizes the same objective by exhaustive search and
shares none of the ``alpha``/``beta`` formulas, so it can check them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rates import (
    ConvergenceError,
    DecisionVariables,
    FeedbackApproximationError,
    RateReport,
    feedback_error_closed_form,
    feedback_exponent,
    forward_rates,
    mixing_matrix,
    sinr_decomposition,
)
from .specfun import lambert_w0
from .system import SystemConfig, path_loss, validate

__all__ = [
    "SingularMixingError",
    "FairnessPartition",
    "OptimizationResult",
    "Asymptotics",
    "GridOracleResult",
    "sherman_morrison_inverse",
    "optimal_xi",
    "fairness_radius",
    "optimal_beta",
    "optimal_alpha",
    "wit_rate_farthest",
    "equilibrium_xi",
    "rates_at",
    "run_algorithm1",
    "asymptotics",
    "grid_oracle",
]

XI_TOL = 1e-8
ALPHA_TOL = 1e-9
MAX_OUTER = 500
MAX_INNER = 200


class SingularMixingError(ArithmeticError):
    """A fair-set mixing submatrix is (near) singular: some WD lacks feedback."""


@dataclass(frozen=True)
class FairnessPartition:
    """Fair / unfair WD index sets (0-based) plus the fairness geometry."""

    fair_set: tuple
    unfair_set: tuple
    fairness_radius: float
    common_rate: float = math.nan


@dataclass
class OptimizationResult:
    vars: DecisionVariables
    partition: FairnessPartition
    report: RateReport
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class Asymptotics:
    xi_asym: np.ndarray
    beta_asym: float
    alpha_asym: float
    rf_asym_order: float
    gamma_bar_K: float


@dataclass(frozen=True)
class GridOracleResult:
    alpha: float
    beta: float
    r_w_min: float
    alphas: np.ndarray
    betas: np.ndarray
    min_rate: np.ndarray  # shape (n_alpha, n_beta); NaN where the model is invalid


def _v_vector(sigma2_uf, M):
    den = (M - 1.0) - M * np.asarray(sigma2_uf, dtype=float)
    if np.any(den <= 0):
        raise SingularMixingError(
            "feedback error >= (M-1)/M for some WD; mixing matrix not invertible")
    return 1.0 / den


def sherman_morrison_inverse(sigma2_uf, M: int) -> np.ndarray:
    """Inverse of the mixing matrix as ``diag(v) - v v^T / (1 + 1^T v)``.

    The matrix is ``diag(1/v) + 1 1^T`` with ``v = 1 / ((M-1) - M*sigma2)``.
    """
    v = _v_vector(sigma2_uf, M)
    return np.diag(v) - np.outer(v, v) / (1.0 + v.sum())


def fairness_radius(sigma2_uf, d, delta: float, M: int) -> float:
    """Distance below which a WD's equal-rate energy weight would be negative.

    ``r_f = (v^T d**(2 delta) / (1 + 1^T v)) ** (1 / (2 delta))``.
    """
    v = _v_vector(sigma2_uf, M)
    d = np.asarray(d, dtype=float)
    return float((v @ d ** (2 * delta) / (1.0 + v.sum())) ** (1.0 / (2 * delta)))


def optimal_xi(b, sigma2_uf, M: int, d=None, delta=None):
    """Max-min energy weights and the fair/unfair partition.

    Starting from all WDs in the fair set, solve ``Mix_ff xi_f = b_f**-2``,
    move every index with a negative weight to the unfair set and repeat.

    Parameters
    ----------
    b : array_like
        Large-scale fading vector.
    sigma2_uf : array_like
        Feedback errors; must satisfy ``sigma2 < (M-1)/M`` on the fair set.
    M : int
        Antenna count.
    d, delta : optional
        Distances and path-loss exponent; when given, the partition carries
        the fairness radius of the final fair set.

    Returns
    -------
    xi : ndarray
        Non-negative, sums to one.
    partition : FairnessPartition
    """
    b = np.asarray(b, dtype=float)
    s2 = np.asarray(sigma2_uf, dtype=float)
    K = len(b)
    fair = np.arange(K)
    for _ in range(K):
        _v_vector(s2[fair], M)
        sub = mixing_matrix(s2[fair], M)
        w = np.linalg.solve(sub, b[fair] ** -2.0)
        w /= w.sum()
        neg = w < 0
        if not neg.any():
            break
        fair = fair[~neg]
    xi = np.zeros(K)
    xi[fair] = w
    unfair = tuple(int(k) for k in np.setdiff1d(np.arange(K), fair))
    radius = math.nan
    if d is not None and delta is not None:
        radius = fairness_radius(s2[fair], np.asarray(d, float)[fair], delta, M)
    return xi, FairnessPartition(tuple(int(k) for k in fair), unfair, radius)


def optimal_beta(gamma_bar: float, P_b: float, B: float, s_max: float) -> float:
    """DL bandwidth ratio maximizing ``(1-beta) log2(1 + beta*gamma_bar)``.

    The stationary point is ``(g+1)/(g W0(e(g+1))) - 1/g``; the power budget
    caps it at ``P_b / (B s_max)``.
    """
    g = float(gamma_bar)
    if g <= 0:
        raise ValueError("gamma_bar must be positive")
    cap = min(1.0, P_b / (B * s_max))
    if g < 1e-8:
        # series limit of the stationary point as g -> 0
        free = 0.5
    else:
        free = (g + 1.0) / (g * lambert_w0(math.e * (g + 1.0))) - 1.0 / g
    return min(free, cap)


def wit_rate_farthest(alpha, gamma_max, gamma_maxloss, T, B, M, beta):
    """WIT rate of one WD as a function of ``alpha`` at fixed SINR terms."""
    s2 = feedback_error_closed_form(gamma_max, gamma_maxloss, alpha, T, B, M)
    gamma = max(gamma_max - gamma_maxloss * s2, 0.0)
    return (1.0 - alpha) * (1.0 - beta) * B * math.log2(1.0 + gamma)


def _alpha_grid_fallback(gmax, gloss, T, B, M, beta, hi=0.5, step=1e-4):
    best_a, best_r = 0.0, -math.inf
    for a in np.arange(0.0, hi + step / 2, step):
        try:
            r = wit_rate_farthest(a, gmax, gloss, T, B, M, beta)
        except FeedbackApproximationError:
            continue
        if r > best_r:
            best_a, best_r = float(a), r
    return best_a


def optimal_alpha(gamma_max_K, gamma_maxloss_K, T, B, M, beta,
                  tol=ALPHA_TOL, max_iter=MAX_INNER) -> float:
    """Feedback time ratio for the farthest WD.

    Iterates ``alpha <- num / log2(x(alpha))`` from ``alpha = 0`` where
    ``num = (M-1)/(T B (1-beta)) * log2(gl (T B (1-beta)/(M-1) + 1) / (1+g))``
    and ``x(alpha)`` is the closed-form SINR term. The result is whichever of
    ``{0, alpha_inf}`` gives the larger WIT rate (ties go to 0). A negative
    ``num`` means feedback cannot pay for itself and 0 is returned.

    Raises
    ------
    ConvergenceError
        If the iteration does not settle within ``max_iter`` steps.
    """
    g, gl = float(gamma_max_K), float(gamma_maxloss_K)
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly inside (0, 1)")
    if gl <= 0.0:
        return 0.0
    f = T * B * (1.0 - beta) / (M - 1.0)
    log_arg = gl * (f + 1.0) / (1.0 + g)
    if log_arg <= 1.0:
        return 0.0
    num = math.log2(log_arg) / f
    a_prev, a = 0.0, 0.0
    converged = False
    try:
        for _ in range(max_iter):
            e = feedback_exponent(a, T, B, M)
            den_inner = (1.0 + g) ** (e + 1.0) - e * gl
            if den_inner <= 0:
                raise FeedbackApproximationError("alpha iterate left the valid region")
            x = 1.0 + g - (1.0 + g) * gl / den_inner
            if x <= 1.0:
                raise FeedbackApproximationError("alpha iterate gives non-positive rate")
            a_prev, a = a, num / math.log2(x)
            if not 0.0 <= a < 1.0:
                raise FeedbackApproximationError(f"alpha iterate {a} outside [0, 1)")
            if abs(a - a_prev) < tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(
                f"alpha iteration did not converge in {max_iter} steps", a, a_prev)
        r_inf = wit_rate_farthest(a, g, gl, T, B, M, beta)
    except FeedbackApproximationError:
        return _alpha_grid_fallback(g, gl, T, B, M, beta)
    r0 = wit_rate_farthest(0.0, g, gl, T, B, M, beta)
    return a if r_inf > r0 else 0.0


def _sigma2(config, alpha, beta, xi):
    sd = sinr_decomposition(config, beta, xi)
    s2 = feedback_error_closed_form(sd.gamma_max, sd.gamma_maxloss, alpha,
                                    config.T, config.B, config.M)
    return sd, np.atleast_1d(s2)


def _partition_with_rate(partition, report):
    fair = list(partition.fair_set)
    return FairnessPartition(partition.fair_set, partition.unfair_set,
                             partition.fairness_radius,
                             float(np.mean(report.r_w[fair])))


def run_algorithm1(config: SystemConfig, asymptotic_init: bool = False,
                   xi_tol: float = XI_TOL, alpha_tol: float = ALPHA_TOL,
                   max_outer: int = MAX_OUTER) -> OptimizationResult:
    """Alternating optimization of ``(beta, alpha, xi)`` for max-min WIT rate.

    Each outer step updates ``beta``, then ``alpha``, then ``xi`` (with the
    fair/unfair partition), recomputing the feedback error in between. It
    stops when ``||xi change||_2 < xi_tol`` and both ``|alpha change|`` and
    ``|beta change|`` are below ``alpha_tol``.

    ``asymptotic_init`` starts from the large-antenna values instead of
    ``alpha = 0, beta = P_b/(B s_max)``.
    """
    validate(config)
    b = path_loss(config)
    K = config.K
    if asymptotic_init:
        asym = asymptotics(config)
        alpha, beta, xi = asym.alpha_asym, min(asym.beta_asym, config.beta_max), asym.xi_asym
    else:
        alpha, beta = 0.0, config.beta_max
        xi = b ** -2.0 / np.sum(b ** -2.0)
    history = []
    converged = False
    partition = None
    it = 0
    for it in range(1, max_outer + 1):
        sd, s2 = _sigma2(config, alpha, beta, xi)
        gamma_K = sd.gamma_max[K - 1] - sd.gamma_maxloss[K - 1] * s2[K - 1]
        if gamma_K <= 0:
            # K = 1 without feedback leaves no SINR; use the perfect-CSI slope
            gamma_K = sd.gamma_max[K - 1]
        beta_old = beta
        beta = optimal_beta(gamma_K / beta, config.P_b, config.B, config.s_max)

        sd = sinr_decomposition(config, beta, xi)
        alpha_old = alpha
        alpha = optimal_alpha(sd.gamma_max[K - 1], sd.gamma_maxloss[K - 1],
                              config.T, config.B, config.M, beta)

        _, s2 = _sigma2(config, alpha, beta, xi)
        xi_new, partition = optimal_xi(b, s2, config.M, config.distances, config.delta)
        dxi = float(np.linalg.norm(xi_new - xi))
        xi = xi_new
        report = forward_rates(config, DecisionVariables(alpha, beta, xi))
        history.append({"iteration": it, "alpha": alpha, "beta": beta,
                        "min_rate": report.min_rate, "dxi": dxi})
        if (dxi < xi_tol and abs(alpha - alpha_old) < alpha_tol
                and abs(beta - beta_old) < alpha_tol):
            converged = True
            break

    vars = DecisionVariables(alpha, beta, xi)
    report = forward_rates(config, vars)
    # partition radius must describe the final feedback errors
    _, partition = optimal_xi(b, report.sigma2_uf, config.M, config.distances, config.delta)
    partition = FairnessPartition(partition.fair_set, partition.unfair_set,
                                  partition.fairness_radius,
                                  float(np.mean(report.r_w[list(partition.fair_set)])))
    return OptimizationResult(vars, partition, report, it, converged, history)


def asymptotics(config: SystemConfig) -> Asymptotics:
    """Large-antenna limits of the optimal variables for this geometry.

    ``xi_asym`` is ``b**-2`` normalized; ``beta_asym = 1/W0(e * gbar_K)``
    where ``gbar_K`` is the farthest WD's perfect-CSI SINR per unit ``beta``;
    ``alpha_asym = ln2 / W0(T B g ln(g) ln2 / (M-1))`` with ``g`` the
    perfect-CSI SINR at ``beta_asym``. ``rf_asym_order`` is the coefficient
    ``c`` in ``r_f ~ c * M**(-1/(2 delta))`` from the full-CSI radius.
    """
    validate(config)
    b = path_loss(config)
    xi = b ** -2.0 / np.sum(b ** -2.0)
    K = config.K
    gbar = float(sinr_decomposition(config, 1.0, xi).gamma_max[K - 1])
    beta = 1.0 / lambert_w0(math.e * gbar)
    g = float(sinr_decomposition(config, beta, xi).gamma_max[K - 1])
    arg = config.T * config.B * g * math.log(g) * math.log(2.0) / (config.M - 1.0)
    alpha = math.log(2.0) / lambert_w0(arg)
    two_delta = 2.0 * config.delta
    rf_full = (config.M + K - 1.0) ** (-1.0 / two_delta) * np.linalg.norm(config.distances, two_delta)
    return Asymptotics(xi, float(beta), float(alpha),
                       float(rf_full * config.M ** (1.0 / two_delta)), gbar)


def equilibrium_xi(config: SystemConfig, alpha: float, beta: float,
                   tol: float = 1e-12, max_iter: int = 200):
    """Energy weights consistent with their own feedback errors at ``(alpha, beta)``.

    Alternates ``xi -> sigma2(xi) -> optimal_xi(sigma2)`` from the
    asymptotic weights. Raises the underlying error if the point is outside
    the model's validity region.
    """
    b = path_loss(config)
    xi = b ** -2.0 / np.sum(b ** -2.0)
    partition = None
    for _ in range(max_iter):
        _, s2 = _sigma2(config, alpha, beta, xi)
        xi_new, partition = optimal_xi(b, s2, config.M)
        if np.max(np.abs(xi_new - xi)) < tol:
            return xi_new, partition
        xi = xi_new
    return xi, partition


def rates_at(config: SystemConfig, alpha: float, beta: float):
    """Rate report at ``(alpha, beta)`` with equilibrium ``xi``, or None if invalid."""
    try:
        xi, _ = equilibrium_xi(config, alpha, beta)
        return forward_rates(config, DecisionVariables(alpha, beta, xi))
    except (SingularMixingError, FeedbackApproximationError, np.linalg.LinAlgError):
        return None


def default_grid(config: SystemConfig, n_alpha: int, n_beta: int,
                 alpha_range=(0.0, 0.5), beta_range=None):
    if beta_range is None:
        beta_range = (0.0, config.beta_max)
    if n_alpha == 1:
        alphas = np.array([alpha_range[0]])
    else:
        alphas = np.linspace(alpha_range[0], alpha_range[1], n_alpha)
    if n_beta == 1:
        betas = np.array([beta_range[1]])
    else:
        # beta = 0 harvests nothing; start one step in
        betas = np.linspace(beta_range[0], beta_range[1], n_beta + 1)[1:]
    return alphas, betas


def grid_oracle(config: SystemConfig, n_alpha: int = 200, n_beta: int = 200,
                alpha_range=(0.0, 0.5), beta_range=None,
                alphas=None, betas=None) -> GridOracleResult:
    """Exhaustive search of the min WIT rate over an ``(alpha, beta)`` grid.

    ``xi`` is re-optimized at every grid point; points where the model is
    invalid (e.g. ``alpha = 0``, where no WD feeds back) are skipped. The
    argmax breaks ties toward smaller ``alpha`` and then smaller ``beta``.
    """
    validate(config)
    if alphas is None or betas is None:
        ga, gb = default_grid(config, n_alpha, n_beta, alpha_range, beta_range)
        alphas = ga if alphas is None else np.asarray(alphas, float)
        betas = gb if betas is None else np.asarray(betas, float)
    table = np.full((len(alphas), len(betas)), np.nan)
    for i, a in enumerate(alphas):
        for j, be in enumerate(betas):
            rep = rates_at(config, float(a), float(be))
            if rep is not None:
                table[i, j] = rep.min_rate
    if np.all(np.isnan(table)):
        raise ValueError("no valid point on the grid")
    # first occurrence in C order = smallest alpha, then smallest beta
    flat = int(np.nanargmax(table))
    i, j = np.unravel_index(flat, table.shape)
    return GridOracleResult(float(alphas[i]), float(betas[j]), float(table[i, j]),
                            np.asarray(alphas), np.asarray(betas), table)
