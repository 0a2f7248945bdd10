import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikemon.core import SymMatrix
from spikemon.eigen import EigenOptions, IterationLimitError, largest_eigenvalue, \
    largest_eigenvalues


def _sym(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


def _charpoly_max(a):
    """Independent oracle: real roots of det(xI - A)."""
    roots = np.roots(np.poly(a))
    return float(np.max(roots.real))


def test_diagonal():
    assert largest_eigenvalue(SymMatrix.from_dense(np.diag([1.0, 2.0, 3.0]))) == pytest.approx(3.0)


def test_algebraic_not_magnitude():
    assert largest_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0, abs=1e-14)
    # |lambda_min| > lambda_max
    assert largest_eigenvalue(np.diag([-5.0, 1.0])) == pytest.approx(1.0)


def test_one_by_one():
    assert largest_eigenvalue(SymMatrix(1, [-4.5])) == -4.5


def test_random_6x6_against_charpoly():
    a = _sym(np.random.default_rng(6), 6)
    assert largest_eigenvalue(a) == pytest.approx(_charpoly_max(a), abs=1e-8)


@pytest.mark.parametrize("n", [2, 7, 40])
def test_iterative_matches_dense(n):
    a = _sym(np.random.default_rng(n), n) / np.sqrt(n)
    dense = largest_eigenvalue(a, EigenOptions(method="dense"))
    it = largest_eigenvalue(a, EigenOptions(method="iterative"))
    assert it == pytest.approx(dense, rel=1e-10)
    assert dense == pytest.approx(np.linalg.eigvalsh(a)[-1], rel=1e-12)


def test_auto_uses_lanczos_above_threshold():
    rng = np.random.default_rng(1)
    a = _sym(rng, 600) / np.sqrt(600)
    assert largest_eigenvalue(a) == pytest.approx(np.linalg.eigvalsh(a)[-1], rel=1e-10)


def test_iteration_limit_carries_best():
    a = _sym(np.random.default_rng(3), 60) / np.sqrt(60)
    with pytest.raises(IterationLimitError) as exc:
        largest_eigenvalue(a, EigenOptions(method="iterative", max_iterations=1,
                                           rel_tolerance=1e-14))
    assert exc.value.best is None or np.isfinite(exc.value.best)


def test_options_validation():
    with pytest.raises(ValueError):
        EigenOptions(rel_tolerance=0)
    with pytest.raises(ValueError):
        EigenOptions(max_iterations=0)
    assert EigenOptions().iterations_for(10) == 1100


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        largest_eigenvalue(np.array([[np.nan, 0], [0, 1.0]]))


def test_batch_matches_single():
    rng = np.random.default_rng(2)
    for n in (5, 80):
        stack = np.stack([_sym(rng, n) for _ in range(6)])
        batch = largest_eigenvalues(stack)
        single = [largest_eigenvalue(a) for a in stack]
        np.testing.assert_allclose(batch, single, rtol=1e-12)
    mats = [SymMatrix.from_dense(a) for a in stack]
    np.testing.assert_allclose(largest_eigenvalues(mats), batch, rtol=1e-12)


matrices = st.integers(1, 8).flatmap(
    lambda n: st.integers(0, 2 ** 32 - 1).map(lambda s: _sym(np.random.default_rng(s), n)))


@settings(max_examples=50, deadline=None)
@given(matrices, st.floats(-50, 50))
def test_shift_equivariance(a, c):
    lhs = largest_eigenvalue(a + c * np.eye(len(a)))
    assert lhs == pytest.approx(largest_eigenvalue(a) + c, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(matrices, st.floats(1e-3, 1e3))
def test_scale_equivariance(a, s):
    assert largest_eigenvalue(s * a) == pytest.approx(s * largest_eigenvalue(a), rel=1e-9,
                                                      abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(matrices, st.integers(0, 2 ** 32 - 1))
def test_rayleigh_bound(a, seed):
    v = np.random.default_rng(seed).standard_normal(len(a))
    v /= np.linalg.norm(v)
    assert v @ a @ v <= largest_eigenvalue(a) + 1e-8


def test_rigidity_pure_noise():
    # |lambda - 2| <= n^(-2/3) n^(1/4) for Wigner W/sqrt(n), sigma = 1
    from spikemon.synth import wigner_matrix
    n, draws = 400, 200
    rng = np.random.default_rng(11)
    lam = np.array([largest_eigenvalue(wigner_matrix(n, rng).dense() / np.sqrt(n))
                    for _ in range(draws)])
    bound = n ** (-2 / 3) * n ** 0.25
    assert np.sum(np.abs(lam - 2) <= bound) >= 195


def test_delocalization_supercritical():
    from spikemon.synth import spiked_matrix
    rng = np.random.default_rng(12)
    lam = [largest_eigenvalue(spiked_matrix(400, 2.0, rng)) for _ in range(200)]
    assert abs(np.mean(lam) - 2.5) <= 0.1
