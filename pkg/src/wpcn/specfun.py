"""Special functions: principal-branch Lambert W, log-beta and the RVQ error law.

The random-vector-quantization (RVQ) error of a ``2**n`` entry isotropic
codebook in ``C^M`` is the minimum of ``2**n`` independent ``Beta(M-1, 1)``
variates. Both its mean and an exact inverse-CDF sampler are provided here;
codebook sizes are treated as real numbers so that fractional bit counts work.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "lambert_w0",
    "log_beta",
    "rvq_error_mean",
    "rvq_error_bound",
    "rvq_error_sample",
]

_INV_E = math.exp(-1.0)
_W_TOL = 1e-14
_W_MAXITER = 50
# above this the Stirling expansion of lgamma(p + q) - lgamma(p) is exact to ~1e-16
_LARGE_P = 1e8


def _w0_seed(x: float) -> float:
    if x < -0.25:
        # branch-point series in p = sqrt(2 (e x + 1))
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if x < 3.0:
        return math.log1p(x) * (1.0 - 0.25 * math.log1p(x)) if x > 0 else x * (1.0 - x)
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1 - l2 + l2 / l1


def _lambert_w0_scalar(x: float) -> float:
    if math.isnan(x):
        return math.nan
    if x < -_INV_E:
        # -1/e itself is not exactly representable; allow one ulp of slack
        if x < -_INV_E - 4 * math.ulp(_INV_E):
            raise ValueError(f"lambert_w0 is undefined for x < -1/e (got {x!r})")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = _w0_seed(x)
    for _ in range(_W_MAXITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= _W_TOL * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def lambert_w0(x):
    """Principal branch ``W0`` of the Lambert W function.

    Solves ``w * exp(w) = x`` for ``w >= -1`` using Halley's iteration from
    an asymptotic / branch-point initial guess.

    Parameters
    ----------
    x : float or array_like
        Argument(s), each ``>= -1/e``.

    Returns
    -------
    float or ndarray
        ``W0(x)``; scalar input gives a Python float.

    Raises
    ------
    ValueError
        If any ``x < -1/e``.
    """
    if np.ndim(x) == 0:
        return _lambert_w0_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    out = np.fromiter((_lambert_w0_scalar(v) for v in arr.ravel()), float, arr.size)
    return out.reshape(arr.shape)


def _lgamma_ratio(p: float, q: float) -> float:
    """``lgamma(p + q) - lgamma(p)``, stable for huge ``p``."""
    if p < _LARGE_P:
        return math.lgamma(p + q) - math.lgamma(p)
    return q * math.log(p) + q * (q - 1.0) / (2.0 * p)


def log_beta(p: float, q: float) -> float:
    """Natural log of the beta function ``B(p, q)`` for ``p, q > 0``."""
    if p <= 0 or q <= 0:
        raise ValueError("log_beta needs positive arguments")
    if p < q:
        p, q = q, p
    return math.lgamma(q) - _lgamma_ratio(p, q)


def _log_codebook_size(n_bits: float, M: int) -> float:
    if M < 2:
        raise ValueError(f"need M >= 2 antennas, got {M}")
    if n_bits < 0:
        raise ValueError(f"feedback bits must be non-negative, got {n_bits}")
    return n_bits * math.log(2.0)


def rvq_error_mean(n_bits: float, M: int) -> float:
    """Mean RVQ error ``E[sin^2(angle)] = 2**n * B(2**n, M/(M-1))``.

    Evaluated entirely in log space so that ``n_bits`` in the thousands is
    fine. ``n_bits`` may be fractional.
    """
    log_n = _log_codebook_size(n_bits, M)
    q = M / (M - 1.0)
    n_cb = math.exp(log_n) if log_n < 700.0 else math.inf
    if math.isinf(n_cb) or n_cb >= _LARGE_P:
        # Stirling: log N + lgamma(q) - q log N - q(q-1)/(2N)
        tail = 0.0 if math.isinf(n_cb) else q * (q - 1.0) / (2.0 * n_cb)
        return math.exp(math.lgamma(q) + (1.0 - q) * log_n - tail)
    return math.exp(log_n + log_beta(n_cb, q))


def rvq_error_bound(n_bits, M: int):
    """Upper bound ``2**(-n/(M-1))`` on :func:`rvq_error_mean`."""
    return np.exp2(-np.asarray(n_bits, dtype=float) / (M - 1.0))


def rvq_error_sample(n_bits, M: int, u):
    """Inverse-CDF draw of the RVQ error for uniform ``u`` in ``[0, 1]``.

    The minimum of ``N = 2**n_bits`` iid ``Beta(M-1, 1)`` variables has CDF
    ``1 - (1 - z**(M-1))**N``; inverting gives
    ``z = (1 - (1 - u)**(1/N))**(1/(M-1))``. ``-expm1(log1p(-u)/N)`` keeps
    precision when ``N`` is large.
    """
    n_bits = np.asarray(n_bits, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(n_bits < 0):
        raise ValueError("feedback bits must be non-negative")
    if M < 2:
        raise ValueError(f"need M >= 2 antennas, got {M}")
    with np.errstate(divide="ignore"):
        inv_n = np.exp2(-n_bits)
        base = -np.expm1(np.log1p(-u) * inv_n)
    z = np.power(np.clip(base, 0.0, 1.0), 1.0 / (M - 1.0))
    return float(z) if z.ndim == 0 else z
