"""
The self-normalized detector on a hand-made series
==================================================

The detector only sees the largest eigenvalue of each matrix.  Training
values fix a centering and a scale; every new value updates a running
statistic that is compared with a critical value.
"""

import numpy as np

from spikemon.core import EigenSeries
from spikemon.detector import DetectorState, compute_vm, gamma_path, monitor

###############################################################################
# The smallest case: training (0, 1), one monitoring value 1.

state = DetectorState.from_training([0.0, 1.0])
print("V_m   =", compute_vm([0.0, 1.0], n=1))
print("Gamma =", state.update(1.0))  # 4/3

###############################################################################
# A noisy series whose mean moves up by 0.05 after 100 monitoring steps.
# The statistic is unchanged by affine maps of the eigenvalues.

rng = np.random.default_rng(0)
lam = 2.0 + 0.02 * rng.standard_normal(600)
lam[400:] += 0.05
path = gamma_path(lam, m=300, n=25)
print("max Gamma before the shift:", path[:100].max().round(2))
print("max Gamma overall         :", path.max().round(2))
print("affine copy agrees        :", np.allclose(gamma_path(3 * lam - 1, 300, 25), path))

verdict = monitor(EigenSeries(lam[:300], m=300, n=25), lam[300:], threshold=6.9)
print("alarm:", verdict.alarmed, "at k =", verdict.k_hat)
