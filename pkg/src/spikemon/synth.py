"""Synthetic streams of deformed Wigner matrices.

Each observation is ``M_t = s_t x_t x_t^T + W_t / sqrt(n)`` where

* ``W_t`` is a Wigner matrix whose entries follow independent AR(1)
  recursions ``W_t = Phi * W_{t-1} + sqrt(1 - Phi*Phi) * eps_t`` (entrywise),
  so every entry is stationary with unit variance and the bulk edge sits
  at 2;
* ``x_t`` is a standard normal vector scaled to unit length, redrawn at
  every ``t``;
* ``s_t`` follows a law on ``[0, 1]`` up to the change point and the same law
  rescaled to ``[1, 1 + delta]`` afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import SymMatrix, substream
from .eigen import largest_eigenvalues

__all__ = [
    "WignerStreamSpec",
    "SignalSpec",
    "gen_phi",
    "next_wigner",
    "gen_spike",
    "gen_stream",
    "wigner_matrix",
    "spiked_matrix",
    "stream_eigenvalues",
]

LAWS = ("uniform01", "beta24", "custom")


@dataclass(frozen=True)
class WignerStreamSpec:
    n: int
    phi_seed: int = 0
    noise_seed: int = 0
    burn_in: int = 50
    phi_range: tuple = (-0.5, 0.5)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        lo, hi = self.phi_range
        if not -1.0 < lo < hi < 1.0:
            raise ValueError(f"phi_range must be a subinterval of (-1, 1), got {self.phi_range}")


@dataclass(frozen=True)
class SignalSpec:
    """Law of the signal strengths.

    ``law`` is ``"uniform01"``, ``"beta24"`` or ``"custom"``; the latter
    takes ``table`` as ``(value, probability)`` pairs with values in
    ``[0, 1]``.  With ``regime="supercritical"`` the strengths after
    observation ``m + kstar`` are ``1 + delta * v`` for ``v`` drawn from
    the same law.
    """

    law: str = "uniform01"
    regime: str = "subcritical"
    delta: float | None = None
    kstar: int = 0
    table: tuple | None = None

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}; expected one of {LAWS}")
        if self.regime not in ("subcritical", "supercritical"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == "supercritical" and not (self.delta is not None and self.delta > 0):
            raise ValueError("supercritical regime needs delta > 0")
        if self.kstar < 0:
            raise ValueError("kstar must be nonnegative")
        if self.law == "custom":
            if not self.table:
                raise ValueError("custom law needs a (value, probability) table")
            vals, probs = zip(*self.table)
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError("custom law values must lie in [0, 1]")
            if any(p < 0 for p in probs) or not np.isclose(sum(probs), 1.0):
                raise ValueError("custom law probabilities must be a distribution")

    def draw_base(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.law == "uniform01":
            return rng.uniform(0.0, 1.0, size)
        if self.law == "beta24":
            return rng.beta(2.0, 4.0, size)
        vals, probs = zip(*self.table)
        p = np.asarray(probs, dtype=np.float64)
        return np.asarray(vals, dtype=np.float64)[rng.choice(len(vals), size=size, p=p / p.sum())]

    def strengths(self, base: np.ndarray, t: np.ndarray, m: int) -> np.ndarray:
        """Map base variates at 1-based times ``t`` to signal strengths."""
        if self.regime == "subcritical":
            return base
        after = t > m + self.kstar
        return np.where(after, 1.0 + self.delta * base, base)


def _packed_normals(rng: np.random.Generator, n: int, size=None) -> np.ndarray:
    p = n * (n + 1) // 2
    return rng.standard_normal(p if size is None else (size, p))


def wigner_matrix(n: int, rng: np.random.Generator) -> SymMatrix:
    """Symmetric matrix with i.i.d. N(0, 1) entries on and above the diagonal."""
    return SymMatrix(n, _packed_normals(rng, n))


def spiked_matrix(n: int, s: float, rng: np.random.Generator) -> np.ndarray:
    """One dense ``s x x^T + W / sqrt(n)`` with fresh Wigner noise and direction."""
    w = wigner_matrix(n, rng).dense() / np.sqrt(n)
    x = gen_spike(n, rng)
    return w + s * np.outer(x, x)


def gen_phi(spec: WignerStreamSpec) -> SymMatrix:
    """Symmetric matrix of AR coefficients, uniform on ``spec.phi_range``."""
    lo, hi = spec.phi_range
    rng = substream(spec.phi_seed, 0)
    p = spec.n * (spec.n + 1) // 2
    return SymMatrix(spec.n, rng.uniform(lo, hi, p))


def _ar_step(prev: np.ndarray, phi: np.ndarray, scale: np.ndarray,
             eps: np.ndarray) -> np.ndarray:
    return phi * prev + scale * eps


def next_wigner(prev: SymMatrix, phi: SymMatrix, rng: np.random.Generator) -> SymMatrix:
    if prev.n != phi.n:
        raise ValueError("prev and phi must have the same dimension")
    f = phi.packed
    eps = _packed_normals(rng, prev.n)
    return SymMatrix(prev.n, _ar_step(prev.packed, f, np.sqrt(1.0 - f * f), eps))


def gen_spike(n: int, rng) -> np.ndarray:
    """Uniformly distributed unit vector in R^n.

    ``rng`` may be a Generator or an integer seed.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = substream(rng, 0)
    y = rng.standard_normal(n)
    return y / np.linalg.norm(y)


def _packed_blocks(wspec: WignerStreamSpec, sspec: SignalSpec, m: int, length: int,
                   block: int, phi: SymMatrix | None = None) -> Iterator[np.ndarray]:
    """Packed-triangle observations ``M_1 .. M_length`` in ``(b, p)`` blocks."""
    if length < m:
        raise ValueError("length must be at least m")
    n = wspec.n
    phi = gen_phi(wspec) if phi is None else phi
    f = phi.packed
    scale = np.sqrt(1.0 - f * f)
    noise_rng = substream(wspec.noise_seed, 0)
    spike_rng = substream(wspec.noise_seed, 1)
    signal_rng = substream(wspec.noise_seed, 2)
    iu0, iu1 = np.triu_indices(n)
    root_n = np.sqrt(n)

    w = _packed_normals(noise_rng, n)
    if wspec.burn_in:
        for eps in _packed_normals(noise_rng, n, wspec.burn_in):
            w = _ar_step(w, f, scale, eps)

    for lo in range(0, length, block):
        b = min(block, length - lo)
        eps = _packed_normals(noise_rng, n, b)
        out = np.empty_like(eps)
        for i in range(b):
            w = _ar_step(w, f, scale, eps[i])
            out[i] = w
        out /= root_n
        y = spike_rng.standard_normal((b, n))
        x = y / np.linalg.norm(y, axis=1, keepdims=True)
        s = sspec.strengths(sspec.draw_base(signal_rng, b), np.arange(lo + 1, lo + b + 1), m)
        out += s[:, None] * x[:, iu0] * x[:, iu1]
        yield out


def _unpack(packed: np.ndarray, n: int) -> np.ndarray:
    iu0, iu1 = np.triu_indices(n)
    dense = np.empty((packed.shape[0], n, n))
    dense[:, iu0, iu1] = packed
    dense[:, iu1, iu0] = packed
    return dense


def gen_stream(wspec: WignerStreamSpec, sspec: SignalSpec, m: int, length: int) -> list:
    """The ``length`` observations following the burn-in, as SymMatrix objects."""
    return [SymMatrix(wspec.n, row)
            for blk in _packed_blocks(wspec, sspec, m, length, 256) for row in blk]


def stream_eigenvalues(wspec: WignerStreamSpec, sspec: SignalSpec, m: int, length: int,
                       phi: SymMatrix | None = None, block: int = 128) -> np.ndarray:
    """Largest eigenvalues of :func:`gen_stream` without materializing the stream."""
    return np.concatenate([largest_eigenvalues(_unpack(blk, wspec.n))
                           for blk in _packed_blocks(wspec, sspec, m, length, block, phi)])
