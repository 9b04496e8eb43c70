import numpy as np
import pytest

from tracial import (
    CMatrix,
    OrthoProjection,
    invariance_defect,
    kernel_projection,
    normalized_trace,
    operator_norm,
    projection_from_basis,
    range_projection,
    schur,
    svd,
    trace_norm2,
)


def jordan(n):
    data = np.zeros((n, n), dtype=complex)
    data[np.arange(n - 1), np.arange(1, n)] = 1.0
    return CMatrix(data)


def ginibre(n, seed):
    rng = np.random.default_rng(seed)
    return CMatrix((rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2))


def haar(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return CMatrix(q * (d / np.abs(d)))


class TestCMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            CMatrix(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            CMatrix([[np.nan, 0], [0, 1]])
        with pytest.raises(ValueError):
            CMatrix([[np.inf, 0], [0, 1]])

    def test_immutable(self):
        m = CMatrix([[1, 0], [0, 1]])
        with pytest.raises(ValueError):
            m.data[0, 0] = 5.0

    def test_arithmetic(self):
        a = CMatrix([[1, 2], [3, 4]])
        b = CMatrix([[0, 1], [1, 0]])
        assert np.allclose((a + b).data, [[1, 3], [4, 4]])
        assert np.allclose((a - b).data, [[1, 1], [2, 4]])
        assert np.allclose((2 * a).data, [[2, 4], [6, 8]])
        assert np.allclose((a @ b).data, [[2, 1], [4, 3]])
        assert np.allclose(a.adjoint().data, [[1, 3], [2, 4]])

    def test_digest_stable(self):
        a = ginibre(5, 0)
        assert a.digest() == CMatrix(a.data).digest()
        assert a.digest() != ginibre(5, 1).digest()


class TestTrace:
    def test_identity(self):
        assert normalized_trace(CMatrix.identity(4)) == 1.0

    def test_diagonal_mean(self):
        assert normalized_trace(CMatrix(np.diag([1.0, 2.0, 3.0]))) == 2.0

    def test_jordan_zero(self):
        assert normalized_trace(jordan(2)) == 0.0

    def test_linear(self):
        a, b = ginibre(6, 1), ginibre(6, 2)
        lhs = normalized_trace(CMatrix(2.0 * a.data + 3.0 * b.data))
        rhs = 2.0 * normalized_trace(a) + 3.0 * normalized_trace(b)
        assert abs(lhs - rhs) < 1e-14


class TestTraceNorm:
    def test_identity(self):
        assert trace_norm2(CMatrix.identity(7)) == pytest.approx(1.0)

    def test_jordan(self):
        assert trace_norm2(jordan(2)) == pytest.approx(np.sqrt(0.5))

    def test_diag_hand_value(self):
        assert trace_norm2(CMatrix(np.diag([0.1, 0.5]))) == pytest.approx(np.sqrt(0.13))

    def test_matches_singular_values(self):
        for seed in range(25):
            t = ginibre(int(np.random.default_rng(seed).integers(2, 20)), seed)
            s = np.array(svd(t).singular_values)
            direct = trace_norm2(t)
            assert abs(direct ** 2 - np.sum(s ** 2) / t.n) <= 1e-10 * max(direct ** 2, 1e-300)

    def test_unitary_invariance(self):
        t = ginibre(9, 3)
        for seed in range(10):
            u, v = haar(9, 100 + seed), haar(9, 200 + seed)
            assert trace_norm2(u @ t @ v) == pytest.approx(trace_norm2(t), abs=1e-10)


class TestOperatorNorm:
    def test_diagonal(self):
        assert operator_norm(CMatrix(np.diag([0.1, 0.5]))) == pytest.approx(0.5)

    def test_jordan(self):
        assert operator_norm(jordan(2)) == pytest.approx(1.0)

    def test_zero(self):
        assert operator_norm(CMatrix.zeros(5)) == 0.0

    def test_matches_svd_random(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(2, 65))
            t = CMatrix(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            top = svd(t).singular_values[0]
            assert abs(operator_norm(t) - top) <= 1e-9 * top

    def test_degenerate_top(self):
        assert operator_norm(haar(12, 5)) == pytest.approx(1.0, abs=1e-12)


class TestSchur:
    def test_upper_triangular_fixed(self):
        t = CMatrix(np.triu(np.random.default_rng(0).standard_normal((5, 5))))
        dec = schur(t)
        assert np.array_equal(dec.q.data, np.eye(5, dtype=complex))
        assert np.array_equal(dec.u.data, t.data)

    def test_hermitian_diagonalized(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        h = CMatrix((a + a.conj().T) / 2)
        dec = schur(h)
        off = dec.u.data - np.diag(np.diagonal(dec.u.data))
        assert np.max(np.abs(off)) < 1e-10
        assert np.max(np.abs(np.imag(dec.eigenvalues))) < 1e-10

    def test_reconstruction_random(self):
        t = ginibre(32, 11)
        dec = schur(t)
        resid = np.linalg.norm(dec.reconstruct().data - t.data)
        assert resid <= 1e-10 * max(1.0, np.linalg.norm(t.data))

    def test_deterministic(self):
        t = ginibre(16, 9)
        d1, d2 = schur(t), schur(CMatrix(t.data))
        assert np.array_equal(d1.q.data, d2.q.data)
        assert np.array_equal(d1.u.data, d2.u.data)


class TestSvd:
    def test_diag_absolute_values(self):
        dec = svd(CMatrix(np.diag([0.5, -0.1])))
        assert dec.singular_values == pytest.approx((0.5, 0.1))

    def test_rank_one(self):
        v = np.array([3.0, 4.0, 0.0]) / 5.0
        dec = svd(CMatrix(np.outer(v, v)))
        assert dec.singular_values == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)

    def test_unitarity(self):
        t = ginibre(16, 2)
        dec = svd(t)
        for u in (dec.left.data, dec.right.data):
            assert np.linalg.norm(u @ u.conj().T - np.eye(16)) <= 1e-12 * 16
        svals = np.array(dec.singular_values)
        assert np.all(np.diff(svals) <= 0)
        assert np.all(svals >= 0)


class TestProjections:
    def test_range_diag(self):
        p = range_projection(CMatrix(np.diag([1.0, 0.0])), 1e-9)
        assert p.rank == 1
        assert np.allclose(p.matrix.data, np.diag([1.0, 0.0]))

    def test_range_invertible(self):
        t = ginibre(6, 8)
        p = range_projection(t, 1e-9)
        assert p.rank == 6
        assert np.allclose(p.matrix.data, np.eye(6), atol=1e-10)

    def test_jordan_column_space(self):
        p = range_projection(jordan(2), 1e-9)
        assert p.rank == 1
        assert np.allclose(p.matrix.data, np.diag([1.0, 0.0]), atol=1e-12)

    def test_kernel_diag(self):
        p = kernel_projection(CMatrix(np.diag([1.0, 0.0])), 1e-9)
        assert p.rank == 1
        assert np.allclose(p.matrix.data, np.diag([0.0, 1.0]))

    def test_kernel_invertible(self):
        assert kernel_projection(ginibre(6, 8), 1e-9).rank == 0

    def test_jordan_null_space(self):
        p = kernel_projection(jordan(2), 1e-9)
        assert p.rank == 1
        assert np.allclose(p.matrix.data, np.diag([1.0, 0.0]), atol=1e-12)

    def test_rank_split_sums_to_n(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            r = int(rng.integers(0, n + 1))
            if r == 0:
                t = CMatrix.zeros(n)
            else:
                a = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
                b = rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))
                t = CMatrix(a @ b)
            assert range_projection(t).rank + kernel_projection(t).rank == n

    def test_rejects_bad_rank_tol(self):
        with pytest.raises(ValueError):
            range_projection(jordan(2), 0.0)

    def test_projection_validation(self):
        with pytest.raises(ValueError):
            OrthoProjection(CMatrix([[0.5, 0.0], [0.0, 0.0]]), 1)
        with pytest.raises(ValueError):
            OrthoProjection(CMatrix(np.eye(2)), 1)

    def test_projection_from_basis_rejects_skew(self):
        with pytest.raises(ValueError):
            projection_from_basis(np.array([[1.0], [1.0]]))

    def test_complement(self):
        p = projection_from_basis(np.eye(4)[:, :1])
        q = p.complement()
        assert q.rank == 3
        assert np.allclose(p.matrix.data + q.matrix.data, np.eye(4))


def test_invariance_defect_jordan():
    p = OrthoProjection(CMatrix(np.diag([1.0, 0.0])), 1)
    assert invariance_defect(jordan(2), p) == 0.0
