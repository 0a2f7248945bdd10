"""Monte Carlo critical values for the monitoring statistic.

The limit of ``sup_k Gamma(k)`` under the null is approximated by
replacing the eigenvalues with i.i.d. standard normals::

    W(l) = N_1 + ... + N_l
    L(m, T) = max_{k=1..T} m^2/(m+k) * (W(m+k) - (m+k)/m W(m))
                                     / sum_{t=1..m} |W(t) - (t/m) W(m)|

Replication ``r`` draws its normals from the PCG64 substream keyed by
``(seed, r, attempt)`` (numpy's ziggurat normal sampler), so results do not
depend on the number of workers.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import QuantileRow, QuantileTable, read_quantile_table, substream, \
    write_quantile_table

__all__ = ["QuantileRequest", "simulate_L", "simulate_many", "simulate_replications",
           "nearest_rank", "quantiles_of_L", "cached_quantiles"]

log = logging.getLogger(__name__)

_CHUNK = 500


@dataclass(frozen=True)
class QuantileRequest:
    m: int
    T: int
    alphas: tuple
    replications: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.alphas:
            raise ValueError("at least one alpha is required")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {a}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _statistic(normals: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Numerator maxima and denominators for a ``(R, m+T)`` block of normals."""
    w = np.cumsum(normals, axis=1)
    wm = w[:, m - 1:m]
    t = np.arange(1, m + 1)
    den = np.abs(w[:, :m] - t / m * wm).sum(axis=1)
    k = np.arange(1, normals.shape[1] - m + 1)
    num = (m * m / (m + k)) * (w[:, m:] - (m + k) / m * wm)
    return num.max(axis=1), den


def simulate_L(m: int, T: int, seed: int = 0, replication_index: int = 0,
               normals=None) -> float:
    """One draw of ``L(m, T)``.

    ``normals`` (length ``m + T``) bypasses the generator; it exists for
    hand-checkable tests.
    """
    if m < 2 or T < 1:
        raise ValueError("need m >= 2 and T >= 1")
    if normals is not None:
        z = np.asarray(normals, dtype=np.float64).reshape(1, -1)
        if z.shape[1] != m + T:
            raise ValueError(f"expected {m + T} normals, got {z.shape[1]}")
        num, den = _statistic(z, m)
        if den[0] == 0.0:
            raise ZeroDivisionError("denominator of L(m, T) is zero")
        return float(num[0] / den[0])
    return float(simulate_many(m, T, seed, [replication_index])[0])


def _draw(m: int, T: int, seed: int, r: int, attempt: int) -> np.ndarray:
    return substream(seed, r, attempt).standard_normal(m + T)


def simulate_many(m: int, T: int, seed: int, indices: Sequence[int]) -> np.ndarray:
    """``L(m, T)`` for each replication index, in the order given."""
    indices = list(indices)
    if not indices:
        return np.empty(0)
    block = np.stack([_draw(m, T, seed, r, 0) for r in indices])
    num, den = _statistic(block, m)
    for pos in np.flatnonzero(den == 0.0):
        attempt = 0
        while den[pos] == 0.0:
            attempt += 1
            log.warning("zero denominator at replication %d; resampling (attempt %d)",
                        indices[pos], attempt)
            z = _draw(m, T, seed, indices[pos], attempt)[None, :]
            n1, d1 = _statistic(z, m)
            num[pos], den[pos] = n1[0], d1[0]
    return num / den


def _chunk_job(args):
    m, T, seed, lo, hi = args
    return simulate_many(m, T, seed, range(lo, hi))


def simulate_replications(m: int, T: int, seed: int, replications: int,
                          workers: int = 1) -> np.ndarray:
    """All ``replications`` draws; identical output for any ``workers``."""
    jobs = [(m, T, seed, lo, min(lo + _CHUNK, replications))
            for lo in range(0, replications, _CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    return np.concatenate(parts)


def nearest_rank(sorted_draws: np.ndarray, level: float) -> float:
    """The ``ceil(level * R)``-th order statistic (1-based) of sorted draws."""
    r = len(sorted_draws)
    # guard against 0.95 * 10000 evaluating to 9500.000000000002
    rank = max(1, math.ceil(level * r - 1e-9))
    return float(sorted_draws[min(rank, r) - 1])


def quantiles_of_L(req: QuantileRequest, workers: int = 1) -> QuantileTable:
    draws = np.sort(simulate_replications(req.m, req.T, req.seed,
                                          req.replications, workers))
    rows = [QuantileRow(req.m, req.T, a, nearest_rank(draws, 1.0 - a),
                        req.replications, req.seed) for a in req.alphas]
    return QuantileTable(rows)


def cached_quantiles(req: QuantileRequest, path=None, workers: int = 1) -> QuantileTable:
    """Like :func:`quantiles_of_L`, but reads and extends a CSV cache at ``path``.

    Any missing alpha triggers a full simulation, since all alphas of a
    request share one draw set.
    """
    cache = QuantileTable()
    if path is not None and os.path.exists(path):
        cache = read_quantile_table(path)
    hits = [cache.get(req.m, req.T, a, req.replications, req.seed) for a in req.alphas]
    if all(h is not None for h in hits):
        return QuantileTable([QuantileRow(req.m, req.T, a, q, req.replications, req.seed)
                              for a, q in zip(req.alphas, hits)])
    fresh = quantiles_of_L(req, workers)
    if path is not None:
        write_quantile_table(cache.merge(fresh), path)
    return fresh
