"""Closed-form forward model: SINR decomposition, feedback error and WIT rates.

Given the decision variables (feedback time ratio ``alpha``, DL bandwidth
ratio ``beta`` and energy weights ``xi``), the UL SINR of every WD splits into
a perfect-CSI part ``gamma_max`` and a loss ``gamma_maxloss * sigma2`` caused
by the quantized DL channel feedback. The feedback error itself depends on
the rate (more rate, more feedback bits), which is resolved either by the
first-order closed form or by the fixed-point iteration it approximates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .system import SystemConfig, path_loss

__all__ = [
    "FeedbackApproximationError",
    "ConvergenceError",
    "DecisionVariables",
    "SinrDecomposition",
    "RateReport",
    "mixing_matrix",
    "harvested_energy",
    "sinr_decomposition",
    "feedback_exponent",
    "feedback_error_closed_form",
    "implicit_rate_solve",
    "forward_rates",
]

XI_SUM_TOL = 1e-12


class FeedbackApproximationError(ArithmeticError):
    """The first-order feedback-error formula left its small-perturbation regime."""


class ConvergenceError(RuntimeError):
    """An iteration hit its cap; ``last`` and ``previous`` hold the final iterates."""

    def __init__(self, msg, last=None, previous=None):
        super().__init__(msg)
        self.last = last
        self.previous = previous


@dataclass(frozen=True)
class DecisionVariables:
    """Optimization triple ``(alpha, beta, xi)``."""

    alpha: float
    beta: float
    xi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float).copy())
        self.xi.setflags(write=False)

    def check(self, config: SystemConfig | None = None) -> list[str]:
        errs = []
        if not 0.0 <= self.alpha <= 1.0:
            errs.append("0 <= alpha <= 1 violated")
        if not 0.0 <= self.beta <= 1.0:
            errs.append("0 <= beta <= 1 violated")
        if np.any(self.xi < 0):
            errs.append("xi >= 0 violated")
        if abs(self.xi.sum() - 1.0) > XI_SUM_TOL * max(1, len(self.xi)):
            errs.append("sum(xi) == 1 violated")
        if config is not None:
            if len(self.xi) != config.K:
                errs.append(f"xi has {len(self.xi)} entries, expected K={config.K}")
            if self.beta * config.B * config.s_max > config.P_b * (1 + 1e-12):
                errs.append("beta*B*s_max <= P_b violated")
        return errs

    def validate(self, config: SystemConfig | None = None) -> "DecisionVariables":
        errs = self.check(config)
        if errs:
            raise ValueError("; ".join(errs))
        return self


@dataclass(frozen=True)
class SinrDecomposition:
    gamma_max: np.ndarray
    gamma_maxloss: np.ndarray
    gamma: np.ndarray | None = None


@dataclass(frozen=True)
class RateReport:
    """Per-WD analytic outcome of one operating point (rates in bit/s)."""

    sigma2_uf: np.ndarray
    sinr: SinrDecomposition
    r: np.ndarray
    r_w: np.ndarray
    r_f: np.ndarray
    n_bits: np.ndarray

    @property
    def min_rate(self) -> float:
        return float(np.min(self.r_w))


def mixing_matrix(sigma2_uf, M: int) -> np.ndarray:
    """K x K mixing power matrix: ``M*(1 - sigma2_k)`` on the diagonal, 1 elsewhere."""
    s2 = np.asarray(sigma2_uf, dtype=float)
    if np.any((s2 < 0) | (s2 > 1)):
        raise ValueError("feedback errors must lie in [0, 1]")
    m = np.ones((len(s2), len(s2)))
    np.fill_diagonal(m, M * (1.0 - s2))
    return m


def harvested_energy(config: SystemConfig, beta: float, xi, sigma2_uf):
    """Expected harvested energy per frame and the resulting UL power.

    Returns
    -------
    epsilon : ndarray
        ``T B beta s_max * b * (Mix @ xi)`` in joules.
    p_u : ndarray
        UL transmit power ``epsilon / T`` in watts.
    """
    b = path_loss(config)
    eps = config.T * config.B * beta * config.s_max * b * (mixing_matrix(sigma2_uf, config.M) @ np.asarray(xi, float))
    return eps, eps / config.T


def _sinr_scale(config: SystemConfig, beta: float) -> float:
    return config.B * beta * config.s_max * (config.M - config.K) / config.sigma2_un


def sinr_decomposition(config: SystemConfig, beta: float, xi) -> SinrDecomposition:
    """Perfect-CSI SINR and the maximum feedback loss scale.

    ``gamma_max = c * b**2 * (((M-1) I + 1 1^T) xi)`` and
    ``gamma_maxloss = c * M * b**2 * xi`` with ``c = B beta s_max (M-K) / sigma2``.
    """
    xi = np.asarray(xi, dtype=float)
    b2 = path_loss(config) ** 2
    c = _sinr_scale(config, beta)
    gmax = c * b2 * ((config.M - 1) * xi + xi.sum())
    gloss = c * config.M * b2 * xi
    return SinrDecomposition(gmax, gloss)


def feedback_exponent(alpha: float, T: float, B: float, M: int) -> float:
    """``alpha T B / (M - 1)``: feedback bits per log2-unit of SINR."""
    return alpha * T * B / (M - 1.0)


def feedback_error_closed_form(gamma_max, gamma_maxloss, alpha, T, B, M):
    """First-order closed form of the feedback quantization error.

    ``sigma2 = (1+g) / ((1+g)**(1+e) - e*gl)`` with ``e = alpha T B/(M-1)``.
    Works elementwise on arrays.

    Raises
    ------
    FeedbackApproximationError
        If the denominator is not positive or the result exceeds 1, i.e. the
        loss term is too large for the linearization to hold.
    """
    g = np.asarray(gamma_max, dtype=float)
    gl = np.asarray(gamma_maxloss, dtype=float)
    e = feedback_exponent(alpha, T, B, M)
    base = 1.0 + g
    den = base * np.power(base, e) - e * gl
    if np.any(den <= 0):
        raise FeedbackApproximationError(
            f"feedback-error denominator <= 0 (alpha={alpha}); loss term too large")
    s2 = base / den
    if np.any(s2 > 1.0 + 1e-12):
        raise FeedbackApproximationError(f"feedback error {np.max(s2)} > 1 (alpha={alpha})")
    s2 = np.clip(s2, 0.0, 1.0)
    return float(s2) if s2.ndim == 0 else s2


def implicit_rate_solve(gamma_max, gamma_maxloss, alpha, T, B, M, beta=0.0,
                        rtol=1e-10, max_iter=10_000):
    """Solve ``x = 1 + g - gl * x**(-e)`` by direct iteration from ``x = 1 + g``.

    This is the implicit rate equation without the linearization, so it serves
    as an independent check of :func:`feedback_error_closed_form`.

    Returns
    -------
    rate : float
        Total UL rate ``(1-beta) B log2(x)`` [bit/s].
    sigma2 : float
        Implied feedback error ``x**(-e)``.
    """
    g = float(gamma_max)
    gl = float(gamma_maxloss)
    e = feedback_exponent(alpha, T, B, M)
    x_prev = 1.0 + g
    for _ in range(max_iter):
        x = 1.0 + g - gl * x_prev ** (-e)
        if x <= 0:
            raise ConvergenceError("fixed-point iterate left x > 0", x, x_prev)
        if abs(x - x_prev) < rtol * x:
            return (1.0 - beta) * B * math.log2(x), x ** (-e)
        x_prev = x
    raise ConvergenceError(f"no convergence in {max_iter} iterations, gap {abs(x - x_prev)}",
                           x, x_prev)


def forward_rates(config: SystemConfig, vars: DecisionVariables) -> RateReport:
    """Per-WD rates at one operating point.

    The feedback error comes from the closed form; the SINR is
    ``gamma_max - gamma_maxloss * sigma2`` and the WIT rate is
    ``(1-alpha)(1-beta) B log2(1 + gamma)``.
    """
    alpha, beta = vars.alpha, vars.beta
    sd = sinr_decomposition(config, beta, vars.xi)
    s2 = feedback_error_closed_form(sd.gamma_max, sd.gamma_maxloss, alpha,
                                    config.T, config.B, config.M)
    s2 = np.atleast_1d(s2)
    gamma = np.maximum(sd.gamma_max - sd.gamma_maxloss * s2, 0.0)
    r = (1.0 - beta) * config.B * np.log2(1.0 + gamma)
    r_f = alpha * r
    return RateReport(
        sigma2_uf=s2,
        sinr=SinrDecomposition(sd.gamma_max, sd.gamma_maxloss, gamma),
        r=r,
        r_w=(1.0 - alpha) * r,
        r_f=r_f,
        n_bits=config.T * r_f,
    )
