"""Shared domain types and the CSV file formats.

Matrix-stream files are long CSV with header ``t,i,j,value``: one row per
triangle cell ``i <= j`` for every time point, 1-based indices, ``t``
contiguous from 1.  Quantile tables use ``m,T,alpha,quantile,replications,seed``.
"""

from __future__ import annotations

import contextlib
import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ParseError",
    "SymMatrix",
    "EigenSeries",
    "MonitorVerdict",
    "QuantileRow",
    "QuantileTable",
    "read_matrix_stream",
    "write_matrix_stream",
    "read_quantile_table",
    "write_quantile_table",
    "derive_seed",
    "substream",
]

MATRIX_HEADER = ("t", "i", "j", "value")
QUANTILE_HEADER = ("m", "T", "alpha", "quantile", "replications", "seed")


class ParseError(ValueError):
    """Malformed input file; ``line`` is the 1-based line number (0 if global)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _tri_size(n: int) -> int:
    return n * (n + 1) // 2


class SymMatrix:
    """Dense real symmetric matrix stored as its packed triangle.

    The packed order is that of ``numpy.triu_indices(n)``, i.e. row ``i``
    holds columns ``j >= i``.  Instances are immutable.
    """

    __slots__ = ("_n", "_packed")

    def __init__(self, n: int, packed):
        n = int(n)
        if n < 1:
            raise ValueError("dimension must be positive")
        arr = np.array(packed, dtype=np.float64).ravel()
        if arr.size != _tri_size(n):
            raise ValueError(
                f"expected {_tri_size(n)} packed entries for n={n}, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.flags.writeable = False
        self._n = n
        self._packed = arr

    @classmethod
    def from_dense(cls, a) -> "SymMatrix":
        """Build from a full square array; any asymmetry at all is rejected."""
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric")
        return cls(a.shape[0], a[np.triu_indices(a.shape[0])])

    @property
    def n(self) -> int:
        return self._n

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def dense(self) -> np.ndarray:
        n = self._n
        out = np.empty((n, n))
        iu = np.triu_indices(n)
        out[iu] = self._packed
        out.T[iu] = self._packed
        return out

    def __getitem__(self, ij):
        i, j = ij
        if i > j:
            i, j = j, i
        n = self._n
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(ij)
        # offset of row i in triu packing
        return float(self._packed[i * n - i * (i - 1) // 2 + (j - i)])

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._packed, other._packed)

    def __hash__(self):
        return hash((self._n, self._packed.tobytes()))

    def __repr__(self):
        return f"SymMatrix(n={self._n})"


@dataclass(frozen=True)
class EigenSeries:
    """Largest eigenvalues in time order; the first ``m`` are the training sample."""

    lambdas: tuple
    m: int
    n: int = 1

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if len(lam) < self.m:
            raise ValueError(f"need at least m={self.m} values, got {len(lam)}")
        if not all(math.isfinite(v) for v in lam):
            raise ValueError("eigenvalues must be finite")

    @property
    def training(self) -> tuple:
        return self.lambdas[: self.m]

    @property
    def monitoring(self) -> tuple:
        return self.lambdas[self.m:]


@dataclass(frozen=True)
class MonitorVerdict:
    alarmed: bool
    k_hat: int | None
    gamma_trace: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.alarmed != (self.k_hat is not None):
            raise ValueError("alarmed must be true exactly when k_hat is set")


@dataclass(frozen=True)
class QuantileRow:
    m: int
    T: int
    alpha: float
    quantile: float
    replications: int
    seed: int

    @property
    def key(self) -> tuple:
        return (self.m, self.T, self.alpha, self.replications, self.seed)


@dataclass
class QuantileTable:
    """Monte Carlo critical values, unique per (m, T, alpha, replications, seed)."""

    rows: list = field(default_factory=list)

    def __post_init__(self):
        seen = {}
        for row in self.rows:
            if not math.isfinite(row.quantile):
                raise ValueError(f"non-finite quantile in row {row}")
            seen[row.key] = row
        self.rows = sorted(seen.values(), key=lambda r: r.key)

    def get(self, m, T, alpha, replications=None, seed=None) -> float | None:
        """Quantile for ``(m, T, alpha)``; ``None`` if absent.

        Without ``replications``/``seed`` the row with the most replications
        wins.
        """
        hits = [r for r in self.rows
                if r.m == m and r.T == T and math.isclose(r.alpha, alpha)
                and (replications is None or r.replications == replications)
                and (seed is None or r.seed == seed)]
        if not hits:
            return None
        return max(hits, key=lambda r: (r.replications, -r.seed)).quantile

    def merge(self, other: "QuantileTable") -> "QuantileTable":
        return QuantileTable(list(self.rows) + list(other.rows))


def read_matrix_stream(path) -> list:
    """Parse a matrix-stream CSV into a list of :class:`SymMatrix`, ordered by t."""
    cells: dict[int, dict[tuple[int, int], float]] = {}
    first_line: dict[int, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MATRIX_HEADER:
            raise ParseError(f"expected header {','.join(MATRIX_HEADER)}", 1)
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
            try:
                t, i, j = (int(c) for c in row[:3])
                v = float(row[3])
            except ValueError as exc:
                raise ParseError(f"bad field ({exc})", lineno) from None
            if t < 1 or i < 1 or j < 1:
                raise ParseError("indices are 1-based", lineno)
            if i > j:
                raise ParseError(f"cell ({i},{j}) has i > j", lineno)
            if not math.isfinite(v):
                raise ParseError("non-finite value", lineno)
            slot = cells.setdefault(t, {})
            if (i, j) in slot:
                raise ParseError(f"duplicate cell t={t} ({i},{j})", lineno)
            slot[(i, j)] = v
            first_line.setdefault(t, lineno)

    if not cells:
        return []
    ts = sorted(cells)
    if ts != list(range(1, len(ts) + 1)):
        missing = next(t for t in range(1, ts[-1] + 1) if t not in cells)
        raise ParseError(f"time points must be contiguous from 1; t={missing} missing")

    out = []
    n = None
    for t in ts:
        slot = cells[t]
        n_t = max(j for _, j in slot)
        if n is None:
            n = n_t
        elif n_t != n:
            raise ParseError(
                f"t={t} has dimension {n_t}, expected {n}", first_line[t])
        iu = np.triu_indices(n)
        packed = np.empty(_tri_size(n))
        for k, (i, j) in enumerate(zip(iu[0] + 1, iu[1] + 1)):
            try:
                packed[k] = slot[(int(i), int(j))]
            except KeyError:
                raise ParseError(
                    f"missing cell t={t} ({i},{j})", first_line[t]) from None
        out.append(SymMatrix(n, packed))
    return out


def write_matrix_stream(matrices: Sequence[SymMatrix], path) -> None:
    matrices = list(matrices)
    if not matrices:
        raise ValueError("cannot write an empty matrix stream")
    n = matrices[0].n
    if any(mat.n != n for mat in matrices):
        raise ValueError("all matrices in a stream must share one dimension")
    iu = np.triu_indices(n)
    rows_i = (iu[0] + 1).tolist()
    rows_j = (iu[1] + 1).tolist()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MATRIX_HEADER)
        for t, mat in enumerate(matrices, start=1):
            # repr() is the shortest exact round-trip form
            w.writerows(zip([t] * len(rows_i), rows_i, rows_j,
                            map(repr, mat.packed.tolist())))


def read_quantile_table(path) -> QuantileTable:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != QUANTILE_HEADER:
            raise ParseError(f"expected header {','.join(QUANTILE_HEADER)}", 1)
        for row in reader:
            if not row:
                continue
            try:
                m, T, alpha, q, reps, seed = row
                rows.append(QuantileRow(int(m), int(T), float(alpha), float(q),
                                        int(reps), int(seed)))
            except ValueError as exc:
                raise ParseError(f"bad row ({exc})", reader.line_num) from None
    return QuantileTable(rows)


def write_quantile_table(table: QuantileTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(QUANTILE_HEADER)
        for r in table.rows:
            w.writerow([r.m, r.T, repr(r.alpha), repr(r.quantile),
                        r.replications, r.seed])


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for the substream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent PCG64 generator keyed by ``(seed, *keys)``.

    Keying by replication index makes Monte Carlo output independent of how
    replications are scheduled across workers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def as_dense(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.dense()
    return np.asarray(a, dtype=np.float64)



@contextlib.contextmanager
def open_output(target):
    """Yield a text handle for a path, or pass an open file object through."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh
