"""
False alarms and power on synthetic Wigner streams
==================================================

Observations are ``s_t x_t x_t^T + W_t / sqrt(n)`` with AR(1) Wigner noise.
While ``s_t < 1`` the top eigenvalue stays near the bulk edge 2; once the
strengths move to ``[1, 1 + delta]`` it separates to about ``s + 1/s``.
"""

import numpy as np

from spikemon.experiments import ExperimentPlan, run_pfa, run_power
from spikemon.synth import SignalSpec, WignerStreamSpec, stream_eigenvalues

###############################################################################
# One stream with a change 100 steps into monitoring.

lam = stream_eigenvalues(WignerStreamSpec(n=100, phi_seed=1, noise_seed=2),
                         SignalSpec(regime="supercritical", delta=1.0, kstar=100),
                         m=200, length=400)
print("mean lambda before / after:", lam[:300].mean().round(3), lam[300:].mean().round(3))

###############################################################################
# A small size experiment.  Full-size runs use 1000 replications;
# 100 keep this script short.

plan = ExperimentPlan(m_grid=(200,), n_grid=(10,), replications=100, seed=3)
for row in run_pfa(plan):
    print(f"alpha={row.alpha:.2f}  PFA={row.value:.3f}")

###############################################################################
# Power and detection delay for an early and a late change.

plan = ExperimentPlan(m_grid=(200,), n_grid=(10,), alphas=(0.05,), replications=50,
                      delta_grid=(0.5,), kstar_grid=(50, 250), seed=4)
for row in run_power(plan):
    print(f"k*={row.kstar:3d}  {row.metric:10s} {row.value:.3f}")
