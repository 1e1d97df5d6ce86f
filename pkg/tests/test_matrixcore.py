import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import metzler_matrices, strongly_connected
from patchgrowth import (
    NumericalError,
    SpectralError,
    is_irreducible,
    is_metzler,
    matrix_exponential,
    nonnegative_eigenvectors,
    perron_root,
    spectral_abscissa,
)
from patchgrowth.matrixcore import gap_tolerance


def taylor_expm(M, t=1.0, terms=40):
    """Independent oracle: scaled Taylor series followed by squaring."""
    A = np.asarray(M, float) * t
    s = max(0, int(np.ceil(np.log2(max(np.abs(A).sum(axis=0).max(), 1e-300)))) + 1)
    B = A / 2.0**s
    E = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ B / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


class TestPredicates:
    def test_metzler(self):
        assert is_metzler([[-5, 1], [0, 3]])
        assert not is_metzler([[0, -1e-3], [1, 0]])

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 5), st.floats(0.0, 1.0), st.integers(0, 2**31))
    def test_irreducible_matches_scc(self, n, density, seed):
        rng = np.random.default_rng(seed)
        M = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < density)
        assert is_irreducible(M) == strongly_connected(M)

    def test_irreducible_tolerance(self):
        M = np.array([[0.0, 1e-14], [1.0, 0.0]])
        assert is_irreducible(M)
        assert not is_irreducible(M, tol=1e-12)

    def test_one_by_one_is_irreducible(self):
        assert is_irreducible([[0.0]])


class TestSpectralAbscissa:
    @settings(max_examples=60, deadline=None)
    @given(metzler_matrices())
    def test_matches_dense_eigenvalues(self, M):
        res = spectral_abscissa(M)
        w = np.linalg.eigvals(M)
        assert res.lambda_max == pytest.approx(w.real.max(), abs=1e-9 * (1 + np.abs(w).max()))

    @settings(max_examples=60, deadline=None)
    @given(metzler_matrices())
    def test_simple_eigvec_is_nonnegative_eigenvector(self, M):
        res = spectral_abscissa(M)
        if not res.simple:
            return
        v = res.eigvec
        assert v is not None
        assert np.all(v >= 0) and v.sum() == pytest.approx(1.0)
        scale = 1 + np.abs(M).max()
        assert np.abs(M @ v - res.lambda_max * v).max() < 1e-7 * scale

    def test_docstring_case(self):
        res = spectral_abscissa([[-0.5, 0.0], [0.0, 0.5]])
        assert res.lambda_max == 0.5 and res.simple
        assert res.eigvec.tolist() == [0.0, 1.0]

    def test_non_simple_zero_column_sum(self):
        L = np.array([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
        res = spectral_abscissa(L)
        assert res.lambda_max == pytest.approx(0.0, abs=1e-12)
        assert not res.simple
        assert np.allclose(np.sort(res.eigenvalues.real), [-2, 0, 0], atol=1e-12)

    def test_gap_tolerance_scales(self):
        assert gap_tolerance(0.0) == 1e-9
        assert gap_tolerance(-9.0) == pytest.approx(1e-8)

    def test_nonnegative_eigenvectors_lists_saddle(self):
        # good patch 3, poor patches 1 and 2 mixed at rate m = 1
        A = np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 0.0], [0.0, 0.0, 1.0]])
        vecs = nonnegative_eigenvectors(A)
        lams = [lam for lam, _ in vecs]
        assert lams == pytest.approx([1.0, -1.0])
        assert np.allclose(vecs[0][1], [0, 0, 1])
        assert np.allclose(vecs[1][1], [0.5, 0.5, 0])


class TestPerron:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**31))
    def test_positive_matrix(self, n, seed):
        A = np.random.default_rng(seed).uniform(0.01, 2.0, (n, n))
        res = perron_root(A)
        assert res.mu == pytest.approx(np.abs(np.linalg.eigvals(A)).max(), rel=1e-12)
        assert np.all(res.pi > 0) and res.pi.sum() == pytest.approx(1.0)
        assert np.allclose(A @ res.pi, res.mu * res.pi, rtol=1e-10, atol=1e-14)

    def test_permutation_matrix(self):
        res = perron_root([[0.0, 1.0], [1.0, 0.0]])
        assert res.mu == pytest.approx(1.0)
        assert np.allclose(res.pi, [0.5, 0.5])

    @pytest.mark.parametrize("N", [[[1.0, 0.0], [1.0, 1.0]], [[1.0, -0.5], [1.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]])
    def test_rejects(self, N):
        with pytest.raises(SpectralError):
            perron_root(N)


class TestExpm:
    @settings(max_examples=40, deadline=None)
    @given(metzler_matrices(), st.floats(0.0, 3.0))
    def test_matches_taylor(self, M, t):
        E = matrix_exponential(M, t)
        ref = taylor_expm(M, t)
        assert np.allclose(E, ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())

    @settings(max_examples=40, deadline=None)
    @given(metzler_matrices(), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_semigroup_and_positivity(self, M, s, t):
        Es, Et, Est = matrix_exponential(M, s), matrix_exponential(M, t), matrix_exponential(M, s + t)
        assert np.allclose(Es @ Et, Est, rtol=1e-9, atol=1e-12 * np.abs(Est).max())
        assert Est.min() >= -1e-14 * np.abs(Est).max()

    def test_zero_time_is_identity(self):
        E = matrix_exponential(np.full((3, 3), 7.0), 0.0)
        assert np.array_equal(E, np.eye(3))

    def test_overflow_raises(self):
        with pytest.raises(NumericalError):
            matrix_exponential([[1000.0]], 10.0)
