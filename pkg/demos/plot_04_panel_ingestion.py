"""
From a daily sensor panel to a matrix stream
============================================

Readings from several locations are deseasonalized with a smoothed
calendar-day profile fitted on past years.  Each day's residual vector
becomes a rank-one matrix whose top eigenvalue is its squared norm.  A
common shock that hits all locations at once shows up in that norm.
"""

import datetime as dt

import numpy as np

from spikemon.core import EigenSeries
from spikemon.detector import monitor
from spikemon.eigen import largest_eigenvalues
from spikemon.ingest import PanelSeries, deseasonalize, fit_seasonal, outer_product_stream
from spikemon.quantiles import QuantileRequest, quantiles_of_L

rng = np.random.default_rng(5)
n_loc = 8


def calendar(start, count):
    out, d = [], start
    while len(out) < count:
        if (d.month, d.day) != (2, 29):
            out.append(d)
        d += dt.timedelta(days=1)
    return out


season = 20 + 5 * np.sin(2 * np.pi * np.arange(365) / 365)[:, None] * np.ones(n_loc)

###############################################################################
# Five years of history fix the profile.

hist_dates = calendar(dt.date(2015, 1, 1), 5 * 365)
history = PanelSeries(range(n_loc), hist_dates,
                      np.tile(season, (5, 1)) + rng.standard_normal((5 * 365, n_loc)))
model = fit_seasonal(history, window=30)

###############################################################################
# The monitored year gets a shared shock from day 250 on.

dates = calendar(dt.date(2020, 1, 1), 365)
values = season + rng.standard_normal((365, n_loc))
values[250:] += 2.5 * rng.standard_normal((115, 1))
resid = deseasonalize(PanelSeries(range(n_loc), dates, values), model)
lam = largest_eigenvalues(outer_product_stream(resid))

m = 200
q = quantiles_of_L(QuantileRequest(m, 165, (0.05,), 5000, seed=0)).rows[0].quantile
verdict = monitor(EigenSeries(lam[:m], m=m, n=n_loc), lam[m:], threshold=q)
print(f"threshold {q:.2f}; alarm on {dates[m + verdict.k_hat - 1]}" if verdict.alarmed
      else "no alarm")
