from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from elastoplast.exceptions import SolverFailure
from elastoplast.linalg import energy_norm, from_triplets, is_symmetric, restricted_solve, sandwich


def random_spd(n, seed=0, density=0.3):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng)
    return (A @ A.T + n * sp.identity(n)).tocsr()


class TestTriplets:
    def test_duplicates_are_summed(self):
        A = from_triplets([0, 0, 1], [1, 1, 0], [1.0, 2.5, 4.0], 2, 2)
        assert A.toarray().tolist() == [[0.0, 3.5], [4.0, 0.0]]

    def test_empty(self):
        A = from_triplets([], [], [], 3, 4)
        assert A.shape == (3, 4) and A.nnz == 0

    @pytest.mark.parametrize("i,j", [([3], [0]), ([0], [-1])])
    def test_out_of_range(self, i, j):
        with pytest.raises(ValueError):
            from_triplets(i, j, [1.0], 3, 3)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 5),
                              st.floats(-10, 10, allow_nan=False)), max_size=40))
    def test_matches_dense_accumulation(self, entries):
        dense = np.zeros((5, 6))
        for i, j, v in entries:
            dense[i, j] += v
        i, j, v = (list(t) for t in zip(*entries)) if entries else ([], [], [])
        assert np.allclose(from_triplets(i, j, v, 5, 6).toarray(), dense)


class TestSandwich:
    def test_matches_dense(self):
        rng = np.random.default_rng(1)
        B = sp.random(12, 7, density=0.4, random_state=rng).tocsr()
        D = sp.diags(rng.uniform(1, 2, 12)).tocsr()
        assert np.allclose(sandwich(B, D).toarray(), B.toarray().T @ D.toarray() @ B.toarray())

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sandwich(sp.identity(3), sp.identity(4))
        with pytest.raises(ValueError):
            sandwich(sp.identity(3), sp.csr_matrix(np.ones((3, 2))))

    def test_symmetry_check(self):
        assert is_symmetric(random_spd(20))
        A = random_spd(20).tolil()
        A[0, 1] += 1.0
        assert not is_symmetric(A)


class TestEnergyNorm:
    def test_value(self):
        K = sp.diags([4.0, 9.0]).tocsr()
        assert energy_norm(K, [1.0, 1.0]) == pytest.approx(np.sqrt(13.0))

    def test_round_off_clamped(self):
        K = sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert energy_norm(K, [1.0, 1.0 + 1e-17]) == 0.0


class TestRestrictedSolve:
    @pytest.mark.parametrize("method", ["direct", "cg"])
    def test_against_dense(self, method):
        n = 40
        K = random_spd(n, seed=2)
        rng = np.random.default_rng(3)
        free = rng.random(n) > 0.3
        rhs = rng.normal(size=n)
        x = restricted_solve(K, rhs, free, method=method)
        f = np.flatnonzero(free)
        ref = np.linalg.solve(K.toarray()[np.ix_(f, f)], rhs[f])
        assert np.allclose(x[f], ref, rtol=1e-8)
        assert np.all(x[~free] == 0)

    def test_zero_rhs_and_no_free_dofs(self):
        K = random_spd(5)
        assert np.all(restricted_solve(K, np.zeros(5), np.ones(5, bool)) == 0)
        assert np.all(restricted_solve(K, np.ones(5), np.zeros(5, bool)) == 0)

    def test_column_major_mask(self):
        K = random_spd(6)
        mask = np.array([[True, False, True], [True, True, False]])  # (dim, n_n)
        x = restricted_solve(K, np.ones(6), mask)
        assert np.all(x[~mask.ravel(order="F")] == 0)

    def test_singular_matrix_fails(self):
        K = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SolverFailure):
            restricted_solve(K, np.array([1.0, 0.0]), np.ones(2, bool))

    def test_cg_rejects_indefinite_diagonal(self):
        K = sp.diags([1.0, -1.0]).tocsr()
        with pytest.raises(SolverFailure):
            restricted_solve(K, np.ones(2), np.ones(2, bool), method="cg")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            restricted_solve(random_spd(3), np.ones(3), np.ones(3, bool), method="qr")
