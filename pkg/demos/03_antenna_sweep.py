"""
Growing the antenna array
=========================

More HAP antennas sharpen the energy beams, so the rates of the near WDs
approach the far ones and the fairness radius shrinks. We sweep M and
compare the optimum with its large-M closed forms.
"""

import math

import numpy as np

from wpcn import asymptotics, default_config, run_algorithm1

cfg = default_config()
Ms = [8, 16, 32, 64, 128, 256, 512, 1024, 2048]

print("    M   alpha   beta    radius  radius*M^(1/2d)  rate gap  feedback bits (WD4)")
for M in Ms:
    c = cfg.replace(M=M)
    res = run_algorithm1(c)
    rw = res.report.r_w
    gap = (rw.max() - rw.min()) / res.partition.common_rate
    r = res.partition.fairness_radius
    print(f"{M:>5}   {res.vars.alpha:.4f}  {res.vars.beta:.4f}  {r:6.3f}  "
          f"{r * M ** (1 / (2 * c.delta)):14.3f}  {gap:8.4f}  {res.report.n_bits[-1]:8.1f}")

# The gap closes slowly: the number of feedback bits stays near a hundred
# while the codebook would need to grow with M for the error to vanish.

print("\n    M   alpha/(ln2/lnM)  beta*ln(gbar_K)  |xi - xi_asym|_1")
for M in Ms[3:]:
    c = cfg.replace(M=M)
    res = run_algorithm1(c)
    a = asymptotics(c)
    print(f"{M:>5}   {res.vars.alpha / (math.log(2) / math.log(M)):15.3f}  "
          f"{res.vars.beta * math.log(a.gamma_bar_K):15.3f}  "
          f"{np.abs(res.vars.xi - a.xi_asym).sum():15.4f}")
