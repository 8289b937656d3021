"""Monte-Carlo channel simulator used to check the closed forms.

Each realization draws Rayleigh UL/DL channels, quantizes every DL channel
direction with an exact RVQ error sample, steers energy with the weighted
sum of fed-back directions, and measures harvested energy and ZF-detector
rates. Realization ``i`` uses its own RNG stream spawned from the master
seed, so adding trials never changes earlier draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rates import DecisionVariables, RateReport, forward_rates
from .specfun import rvq_error_mean, rvq_error_sample
from .system import SystemConfig, path_loss, validate

__all__ = [
    "IllConditionedChannel",
    "ChannelRealization",
    "TrialStats",
    "ForwardExperiment",
    "ParetoReport",
    "realization_rng",
    "complex_gaussian",
    "generate_channels",
    "apply_rvq",
    "rvq_codebook_error",
    "beamformer",
    "harvest_and_rates",
    "run_forward_experiment",
    "expected_energy",
    "pareto_check",
    "reference_scenarios",
]

COND_LIMIT = 1e12
MIN_FEEDBACK_BITS = 1.0


class IllConditionedChannel(ArithmeticError):
    """UL Gram matrix too ill-conditioned for the ZF detector."""


@dataclass
class ChannelRealization:
    H_u: np.ndarray
    H_d: np.ndarray
    G_u: np.ndarray
    G_d: np.ndarray
    seed: int
    g_tilde_d: np.ndarray | None = None
    w: np.ndarray | None = None
    rvq_error: np.ndarray | None = None


@dataclass(frozen=True)
class TrialStats:
    mean: np.ndarray
    std_err: np.ndarray
    trials: int

    @classmethod
    def from_samples(cls, samples) -> "TrialStats":
        x = np.asarray(samples, dtype=float)
        n = x.shape[0]
        if n < 2:
            raise ValueError("need at least two trials for a standard error")
        return cls(x.mean(axis=0), x.std(axis=0, ddof=1) / np.sqrt(n), n)


@dataclass
class ForwardExperiment:
    """Simulated vs analytic WIT rates for one operating point."""

    vars: DecisionVariables
    simulated: TrialStats  # r_w [bit/s]
    energy: TrialStats  # epsilon [J]
    analytic: RateReport
    n_bits: np.ndarray
    bits_floored: np.ndarray
    discarded: int


@dataclass
class ParetoReport:
    leak: float
    n_bits: np.ndarray
    eps_lemma: TrialStats
    eps_leaked: TrialStats
    diff: TrialStats  # paired eps_lemma - eps_leaked
    dominates: np.ndarray
    asserted: bool

    @property
    def ok(self) -> bool:
        return bool(np.all(self.dominates)) if self.asserted else True


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for realization ``index`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def complex_gaussian(rng, shape) -> np.ndarray:
    """iid CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_channels(config: SystemConfig, rng_seed: int, index: int = 0,
                      rng=None) -> ChannelRealization:
    """Draw Rayleigh UL/DL channels, ``G = H diag(sqrt(b))``."""
    if rng is None:
        rng = realization_rng(rng_seed, index)
    shape = (config.M, config.K)
    H_u = complex_gaussian(rng, shape)
    H_d = complex_gaussian(rng, shape)
    sb = np.sqrt(path_loss(config))
    return ChannelRealization(H_u, H_d, H_u * sb, H_d * sb, rng_seed)


def apply_rvq(g_d_k, n_bits, rng, z=None):
    """Quantized unit direction of ``g_d_k`` with an exact RVQ error.

    Draws ``z`` from the RVQ error law (unless given) and returns
    ``g_tilde = sqrt(1-z) ghat + sqrt(z) u`` with ``u`` uniform on the unit
    sphere of the orthogonal complement of ``ghat``. Then
    ``sin^2(angle(g_tilde, g)) == z`` by construction.

    Returns
    -------
    g_tilde : ndarray
    z : float
    """
    g = np.asarray(g_d_k, dtype=complex)
    norm = np.linalg.norm(g)
    if norm == 0:
        raise ValueError("cannot quantize a zero channel vector")
    ghat = g / norm
    M = g.shape[0]
    if z is None:
        z = rvq_error_sample(n_bits, M, rng.random())
    u = complex_gaussian(rng, M)
    u -= ghat * np.vdot(ghat, u)
    u /= np.linalg.norm(u)
    return np.sqrt(1.0 - z) * ghat + np.sqrt(z) * u, float(z)


def rvq_codebook_error(g, n_bits: int, rng) -> float:
    """Brute-force RVQ: nearest of ``2**n_bits`` isotropic codewords.

    Only meant as an independent check of :func:`apply_rvq` for small
    ``n_bits``; returns ``sin^2`` of the angle to the chosen codeword.
    """
    g = np.asarray(g, dtype=complex)
    M = g.shape[0]
    cb = complex_gaussian(rng, (2 ** int(n_bits), M))
    cb /= np.linalg.norm(cb, axis=1, keepdims=True)
    ghat = g / np.linalg.norm(g)
    cos2 = np.abs(cb.conj() @ ghat) ** 2
    return float(1.0 - cos2.max())


def beamformer(g_tilde_all, xi, normalize: bool = False):
    """Energy beamformer ``w = G_tilde @ sqrt(xi)``.

    Parameters
    ----------
    g_tilde_all : ndarray, shape (M, K)
        Unit-norm fed-back directions as columns.
    xi : array_like
        Energy weights.
    normalize : bool
        Rescale ``w`` to unit norm. By default ``w`` is left as is: its
        squared norm is one in expectation and the expected harvested energy
        then matches the mixing-matrix formula exactly.

    Returns
    -------
    w : ndarray, shape (M,)
    """
    w = np.asarray(g_tilde_all) @ np.sqrt(np.asarray(xi, dtype=float))
    if normalize:
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise ArithmeticError("beamformer collapsed to zero; resample")
        w = w / nrm
    return w


def harvest_and_rates(realization: ChannelRealization, config: SystemConfig,
                      vars: DecisionVariables):
    """Harvested energy and ZF WIT rates for one realization.

    ``realization.w`` must be set. DL noise is neglected; the ZF SINR of
    WD k is ``p_k / (sigma2 [(G_u^H G_u)^-1]_kk)``.

    Returns
    -------
    epsilon : ndarray
        Harvested energy per WD [J].
    r_w : ndarray
        ``(1-alpha)(1-beta) B log2(1 + sinr)`` [bit/s].

    Raises
    ------
    IllConditionedChannel
        If ``cond(G_u^H G_u) > 1e12``.
    """
    if config.M <= config.K:
        raise ValueError("ZF detection needs M > K")
    alpha, beta = vars.alpha, vars.beta
    proj = realization.G_d.conj().T @ realization.w
    eps = config.T * config.B * beta * config.s_max * np.abs(proj) ** 2
    p_u = eps / config.T
    gram = realization.G_u.conj().T @ realization.G_u
    if np.linalg.cond(gram) > COND_LIMIT:
        raise IllConditionedChannel("UL Gram matrix ill-conditioned")
    noise_gain = np.real(np.diag(np.linalg.inv(gram)))
    sinr = p_u / (config.sigma2_un * noise_gain)
    r_w = (1.0 - alpha) * (1.0 - beta) * config.B * np.log2(1.0 + sinr)
    return eps, r_w


def _quantize_all(real: ChannelRealization, n_bits, rng):
    M, K = real.G_d.shape
    gt = np.empty((M, K), dtype=complex)
    zs = np.empty(K)
    for k in range(K):
        gt[:, k], zs[k] = apply_rvq(real.G_d[:, k], n_bits[k], rng)
    real.g_tilde_d = gt
    real.rvq_error = zs
    return real


def _simulate(config, vars, n_bits, trials, seed):
    eps_all, rw_all = [], []
    discarded = 0
    for i in range(trials):
        rng = realization_rng(seed, i)
        real = generate_channels(config, seed, rng=rng)
        _quantize_all(real, n_bits, rng)
        real.w = beamformer(real.g_tilde_d, vars.xi)
        try:
            eps, rw = harvest_and_rates(real, config, vars)
        except IllConditionedChannel:
            discarded += 1
            continue
        eps_all.append(eps)
        rw_all.append(rw)
    return np.array(eps_all), np.array(rw_all), discarded


def run_forward_experiment(config: SystemConfig, scenario: DecisionVariables,
                           trials: int = 1000, seed: int = 0,
                           n_bits=None) -> ForwardExperiment:
    """Simulate one operating point and pair it with the analytic rates.

    Feedback bits default to the analytic ``T * r_f`` per WD, floored at one
    bit; ``bits_floored`` marks WDs where the floor was applied (then the
    simulation and the closed form describe different feedback loads).
    """
    validate(config)
    scenario.validate(config)
    if trials < 2:
        raise ValueError("need at least two trials")
    analytic = forward_rates(config, scenario)
    raw = analytic.n_bits if n_bits is None else np.broadcast_to(
        np.asarray(n_bits, float), (config.K,))
    floored = raw < MIN_FEEDBACK_BITS
    bits = np.where(floored, MIN_FEEDBACK_BITS, raw)
    eps, rw, discarded = _simulate(config, scenario, bits, trials, seed)
    return ForwardExperiment(scenario, TrialStats.from_samples(rw),
                             TrialStats.from_samples(eps), analytic,
                             bits, floored, discarded)


def expected_energy(config: SystemConfig, beta: float, xi, n_bits) -> np.ndarray:
    """Closed-form mean energy using the exact RVQ mean error for ``n_bits``."""
    from .rates import harvested_energy

    s2 = np.array([rvq_error_mean(float(n), config.M)
                   for n in np.broadcast_to(np.asarray(n_bits, float), (config.K,))])
    return harvested_energy(config, beta, xi, s2)[0]


def _orthogonal_unit(G_tilde, rng):
    M = G_tilde.shape[0]
    q, _ = np.linalg.qr(G_tilde)
    u = complex_gaussian(rng, M)
    u -= q @ (q.conj().T @ u)
    return u / np.linalg.norm(u)


def pareto_check(config: SystemConfig, trials: int = 2000, n_bits=4.0,
                 leak: float = 0.1, xi=None, beta: float = 0.1,
                 seed: int = 0) -> ParetoReport:
    """Compare the weighted-direction beamformer with a leaky variant.

    The leaky beamformer moves a fraction ``leak`` of the energy weight onto
    a random direction orthogonal to every fed-back channel. With at least
    one feedback bit per WD the weighted-direction beamformer should harvest
    no less energy at any WD; dominance is checked as
    ``mean(eps - eps_leaked) >= -3 s.e.`` on paired draws. Below one bit the
    comparison is reported but not asserted.
    """
    validate(config)
    K = config.K
    xi = np.full(K, 1.0 / K) if xi is None else np.asarray(xi, float)
    bits = np.broadcast_to(np.asarray(n_bits, float), (K,)).copy()
    e_lemma, e_leak = [], []
    scale = config.T * config.B * beta * config.s_max
    for i in range(trials):
        rng = realization_rng(seed, i)
        real = generate_channels(config, seed, rng=rng)
        _quantize_all(real, bits, rng)
        w = beamformer(real.g_tilde_d, xi)
        u = _orthogonal_unit(real.g_tilde_d, rng)
        w_leak = beamformer(real.g_tilde_d, (1.0 - leak) * xi) + np.sqrt(leak) * u
        e_lemma.append(scale * np.abs(real.G_d.conj().T @ w) ** 2)
        e_leak.append(scale * np.abs(real.G_d.conj().T @ w_leak) ** 2)
    e_lemma = np.array(e_lemma)
    e_leak = np.array(e_leak)
    diff = TrialStats.from_samples(e_lemma - e_leak)
    dominates = diff.mean >= -3.0 * diff.std_err
    return ParetoReport(leak, bits, TrialStats.from_samples(e_lemma),
                        TrialStats.from_samples(e_leak), diff, dominates,
                        bool(np.all(bits >= MIN_FEEDBACK_BITS)))


def reference_scenarios(K: int, alpha: float = 0.05, beta: float = 0.1):
    """Single-WD beams ``e_1..e_K`` followed by the uniform split."""
    eye = np.eye(K)
    out = [DecisionVariables(alpha, beta, eye[k]) for k in range(K)]
    out.append(DecisionVariables(alpha, beta, np.full(K, 1.0 / K)))
    return out
