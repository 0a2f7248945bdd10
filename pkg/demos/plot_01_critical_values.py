"""
Critical values of the limit statistic
======================================

The monitor compares its statistic with an upper quantile of ``L(m, T)``,
a functional of Brownian motion that is simulated from partial sums of
standard normals.  This script draws the statistic, reads off the 90% and
95% quantiles and shows how they move with the ratio ``T / m``.
"""

import numpy as np

from spikemon.quantiles import QuantileRequest, quantiles_of_L, simulate_replications

###############################################################################
# A few thousand draws at m = T = 500 take about a second.

draws = simulate_replications(500, 500, seed=7, replications=10_000)
print("P(L > 0)      :", np.mean(draws > 0).round(3))
print("mean, median  :", draws.mean().round(3), np.median(draws).round(3))

table = quantiles_of_L(QuantileRequest(500, 500, (0.05, 0.10), 10_000, seed=7))
for row in table.rows:
    print(f"q_{1 - row.alpha:.2f} = {row.quantile:.3f}")

###############################################################################
# The maximum runs over k <= T, i.e. over the Brownian time x = k / m up to
# T / m.  Holding T fixed while shrinking m therefore lengthens the search
# and raises the quantile; holding T / m fixed does not.

for m, T in [(200, 500), (500, 500), (200, 200), (1000, 1000)]:
    q = quantiles_of_L(QuantileRequest(m, T, (0.05,), 5000, seed=1)).rows[0].quantile
    print(f"m={m:5d} T={T:5d} T/m={T / m:4.1f}  q_0.95={q:.3f}")
