"""
Random vector quantization of the DL channel
============================================

Each WD feeds back n bits by picking the closest of 2**n random unit
vectors. The squared sine of the angle to the true channel is the minimum
of 2**n Beta(M-1, 1) variables, so it can be sampled directly instead of
searching a codebook.
"""

import numpy as np

from wpcn import (
    default_config,
    feedback_error_closed_form,
    implicit_rate_solve,
    pareto_check,
    rvq_error_mean,
    rvq_error_sample,
    sinr_decomposition,
)
from wpcn.montecarlo import complex_gaussian, rvq_codebook_error

rng = np.random.default_rng(1)
M = 4

# Direct sampling against an explicit 8-word codebook.
direct = rvq_error_sample(3, M, rng.random(20000))
brute = np.array([rvq_codebook_error(complex_gaussian(rng, M), 3, rng) for _ in range(20000)])
print(f"mean error, 3 bits, M={M}: exact {rvq_error_mean(3, M):.5f}, "
      f"sampled {direct.mean():.5f}, codebook {brute.mean():.5f}")
for n in [0, 1, 2, 4, 8, 16, 32]:
    print(f"  n={n:>2} bits  E[sin^2] = {rvq_error_mean(n, M):.3e}   bound 2^(-n/(M-1)) = "
          f"{2.0 ** (-n / (M - 1)):.3e}")

# The feedback error depends on the rate, which depends on the error. The
# closed form linearizes this loop; iterating it directly is the check.
cfg = default_config()
sd = sinr_decomposition(cfg, 0.1, [0.25] * 4)
print("\nWD  sigma2 closed form   sigma2 fixed point   rate rel. diff")
for k in range(cfg.K):
    s2 = feedback_error_closed_form(sd.gamma_max[k], sd.gamma_maxloss[k], 0.05, cfg.T, cfg.B, cfg.M)
    rate, s2_fp = implicit_rate_solve(sd.gamma_max[k], sd.gamma_maxloss[k], 0.05,
                                      cfg.T, cfg.B, cfg.M, beta=0.1)
    gamma = sd.gamma_max[k] - sd.gamma_maxloss[k] * s2
    rate_cf = 0.9 * cfg.B * np.log2(1 + gamma)
    print(f"{k + 1:>2}  {s2:.6e}         {s2_fp:.6e}         {abs(rate_cf / rate - 1):.1e}")

# Moving 10% of the beam energy off the fed-back directions never helps
# once every WD sends at least one bit.
rep = pareto_check(cfg, trials=2000, n_bits=4.0, leak=0.1)
print("\nenergy gain of the weighted-direction beamformer over a leaky one [nJ]:")
print(np.round(rep.diff.mean * 1e9, 3), "+/-", np.round(rep.diff.std_err * 1e9, 3),
      "dominates:", rep.ok)
