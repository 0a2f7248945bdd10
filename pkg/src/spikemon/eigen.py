"""Algebraically largest eigenvalue of a real symmetric matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .core import as_dense

__all__ = ["EigenOptions", "IterationLimitError", "largest_eigenvalue",
           "largest_eigenvalues", "gershgorin_bound"]

DENSE_MAX_N = 512


class IterationLimitError(RuntimeError):
    """Iterative solver hit ``max_iterations``; ``best`` is the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class EigenOptions:
    """Solver controls.

    ``method`` is ``"auto"`` (dense up to ``dense_max_n``, Lanczos above),
    ``"dense"`` or ``"iterative"``.  ``max_iterations=None`` means
    ``10 * n + 1000``.
    """

    rel_tolerance: float = 1e-10
    max_iterations: int | None = None
    method: str = "auto"
    dense_max_n: int = DENSE_MAX_N

    def __post_init__(self):
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.method not in ("auto", "dense", "iterative"):
            raise ValueError(f"unknown method {self.method!r}")

    def iterations_for(self, n: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 10 * n + 1000


def gershgorin_bound(a: np.ndarray) -> float:
    """Upper bound ``max_i sum_j |a_ij|`` on the spectral radius."""
    return float(np.abs(a).sum(axis=1).max())


def _dense(a: np.ndarray) -> float:
    n = a.shape[0]
    w = scipy.linalg.eigh(a, eigvals_only=True, subset_by_index=(n - 1, n - 1),
                          driver="evr", check_finite=False)
    return float(w[0])


def _iterative(a: np.ndarray, opts: EigenOptions) -> float:
    # Shifting by the Gershgorin bound makes A + cI positive semidefinite, so
    # the largest-magnitude eigenvalue of the shifted operator is the
    # algebraic maximum.  Lanczos converges far faster than plain power
    # iteration when lambda_max sits at the bulk edge.
    n = a.shape[0]
    c = gershgorin_bound(a)
    shifted = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda v: a @ v + c * v, dtype=np.float64)
    v0 = np.ones(n) / np.sqrt(n)
    try:
        w = scipy.sparse.linalg.eigsh(shifted, k=1, which="LM", v0=v0,
                                      tol=opts.rel_tolerance * 1e-2,
                                      maxiter=opts.iterations_for(n),
                                      return_eigenvectors=False)
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        best = float(exc.eigenvalues[0]) - c if len(exc.eigenvalues) else None
        raise IterationLimitError(
            f"Lanczos did not converge in {opts.iterations_for(n)} iterations",
            best=best) from None
    return float(w[0]) - c


def largest_eigenvalue(a, opts: EigenOptions | None = None) -> float:
    """Largest (not largest-magnitude) eigenvalue of ``a``.

    ``a`` may be a :class:`SymMatrix` or a symmetric ndarray; for arrays only
    the lower triangle is referenced on the dense path.
    """
    opts = opts or EigenOptions()
    a = as_dense(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    method = opts.method
    if method == "auto":
        method = "dense" if n <= opts.dense_max_n else "iterative"
    if method == "dense":
        return _dense(a)
    return _iterative(a, opts)


def largest_eigenvalues(stack, opts: EigenOptions | None = None) -> np.ndarray:
    """:func:`largest_eigenvalue` over a sequence of matrices or an ``(T, n, n)`` array."""
    if isinstance(stack, np.ndarray) and stack.ndim == 3:
        opts = opts or EigenOptions()
        n = stack.shape[1]
        if n <= opts.dense_max_n and opts.method != "iterative":
            if not np.all(np.isfinite(stack)):
                raise ValueError("matrix entries must be finite")
            if n < 64:
                # batched LAPACK beats per-matrix calls for small n
                return np.linalg.eigvalsh(stack)[:, -1].copy()
            return np.fromiter((_dense(a) for a in stack), float, len(stack))
    return np.array([largest_eigenvalue(a, opts) for a in stack], dtype=np.float64)

