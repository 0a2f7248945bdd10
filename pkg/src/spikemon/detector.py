"""Self-normalized monitoring statistic for a stream of largest eigenvalues.

With training eigenvalues ``lam_1..lam_m`` and monitoring eigenvalues
``lam_{m+1}, lam_{m+2}, ...``::

    V_m  = n^(2/3) / m^(3/2) * sum_{t<=m} |S_t - (t/m) S_m|
    D(k) = n^(2/3) sqrt(m) / (m+k) * (sum_{t=m+1}^{m+k} lam_t - (k/m) S_m)
    Gamma(k) = D(k) / V_m

where ``S_t`` is the partial sum of the training eigenvalues.  An alarm is
raised at the first ``k`` with ``Gamma(k) > threshold``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import EigenSeries, MonitorVerdict

__all__ = [
    "DegenerateNormalizerError",
    "DetectorState",
    "compute_vm",
    "compute_dm",
    "gamma",
    "gamma_path",
    "monitor",
]

log = logging.getLogger(__name__)

# above this length partial sums are compensated
_KAHAN_MIN = 100_000


class DegenerateNormalizerError(ValueError):
    """The training normalizer is zero (e.g. constant training eigenvalues)."""


def _partial_sums(x: np.ndarray) -> np.ndarray:
    if x.size <= _KAHAN_MIN:
        return np.cumsum(x)
    out = np.empty_like(x)
    s = c = 0.0
    for i, v in enumerate(x.tolist()):
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


def _training_array(train) -> np.ndarray:
    x = np.asarray(train, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError(f"training sample needs m >= 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("training eigenvalues must be finite")
    return x


def compute_vm(train: Sequence[float], n: int = 1) -> float:
    """Normalizer from the training eigenvalues.

    Returns 0.0 (with a warning) for constant training data; :func:`gamma`
    refuses to divide by it.
    """
    x = _training_array(train)
    m = x.size
    # the bridge S_t - (t/m) S_m ignores a common shift; removing x[0] makes
    # constant data give exactly zero and reduces cancellation
    s = _partial_sums(x - x[0])
    t = np.arange(1, m + 1)
    vm = n ** (2 / 3) / m ** 1.5 * float(np.abs(s - t / m * s[-1]).sum())
    if vm == 0.0:
        log.warning("normalizer V_m is exactly zero (constant training sample)")
    return vm


@dataclass
class DetectorState:
    """Running sums for online evaluation of ``Gamma(k)``.

    ``m``, ``n``, ``train_sum`` and ``v_m`` are fixed after training;
    ``mon_sum`` and ``k`` advance by one observation per :meth:`update`.
    """

    m: int
    n: int
    train_sum: float
    v_m: float
    threshold: float = math.inf
    mon_sum: float = 0.0
    k: int = 0

    @classmethod
    def from_training(cls, train: Sequence[float], n: int = 1,
                      threshold: float = math.inf) -> "DetectorState":
        x = _training_array(train)
        return cls(m=x.size, n=int(n), train_sum=float(_partial_sums(x)[-1]),
                   v_m=compute_vm(x, n), threshold=float(threshold))

    def update(self, lam: float) -> float:
        """Consume the next monitoring eigenvalue and return ``Gamma(k)``."""
        lam = float(lam)
        if not math.isfinite(lam):
            raise ValueError("eigenvalues must be finite")
        self.mon_sum += lam
        self.k += 1
        return gamma(self, self.k)


def compute_dm(state: DetectorState, k: int) -> float:
    if k < 1 or k != state.k:
        raise ValueError(f"state holds k={state.k} monitoring values, asked for k={k}")
    m = state.m
    return (state.n ** (2 / 3) * math.sqrt(m) / (m + k)
            * (state.mon_sum - k / m * state.train_sum))


def gamma(state: DetectorState, k: int) -> float:
    if state.v_m <= 0.0:
        raise DegenerateNormalizerError(
            "V_m = 0: constant training eigenvalues cannot be monitored")
    return compute_dm(state, k) / state.v_m


def gamma_path(lambdas, m: int, n: int = 1) -> np.ndarray:
    """Vectorized ``Gamma(k)`` for ``k = 1 .. len(lambdas) - m``."""
    x = np.asarray(lambdas, dtype=np.float64)
    vm = compute_vm(x[:m], n)
    if vm <= 0.0:
        raise DegenerateNormalizerError(
            "V_m = 0: constant training eigenvalues cannot be monitored")
    s_m = _partial_sums(x[:m])[-1]
    mon = _partial_sums(x[m:])
    k = np.arange(1, mon.size + 1)
    dm = n ** (2 / 3) * math.sqrt(m) / (m + k) * (mon - k / m * s_m)
    return dm / vm


def first_exceedance(path: np.ndarray, threshold: float) -> int | None:
    """1-based index of the first entry strictly above ``threshold``."""
    hits = np.flatnonzero(path > threshold)
    return int(hits[0]) + 1 if hits.size else None


def monitor(train: EigenSeries, stream: Iterable[float], threshold: float,
            max_k: int | None = None, continue_after_alarm: bool = False
            ) -> MonitorVerdict:
    """Run the sequential test.

    Values of ``train`` beyond its first ``m`` are treated as the start of the
    monitoring stream, followed by ``stream``.  Stops at the first alarm
    unless ``continue_after_alarm`` is set, in which case the trace runs to
    ``max_k`` or the end of the stream.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if max_k is not None and max_k < 1:
        raise ValueError("max_k must be positive")
    state = DetectorState.from_training(train.training, train.n, threshold)
    if state.v_m <= 0.0:
        raise DegenerateNormalizerError(
            "V_m = 0: constant training eigenvalues cannot be monitored")

    trace = []
    k_hat = None
    for lam in itertools.chain(train.monitoring, stream):
        if max_k is not None and state.k >= max_k:
            break
        g = state.update(lam)
        trace.append((state.k, g))
        if k_hat is None and g > threshold:
            k_hat = state.k
            if not continue_after_alarm:
                break
    return MonitorVerdict(alarmed=k_hat is not None, k_hat=k_hat,
                          gamma_trace=tuple(trace))

