import math

import numpy as np
import pytest

from seqgauss import (
    InvalidInputError,
    NotPSDError,
    SymMat,
    eigen,
    gaussian_w2,
    pos_neg_parts,
    psd_project,
    sqrt_psd,
    trace_norm,
)


def eig2x2(a, b, c):
    """Closed-form eigenvalues of [[a, b], [b, c]] (independent 2x2 oracle)."""
    half_tr = 0.5 * (a + c)
    disc = math.sqrt(max(half_tr * half_tr - (a * c - b * b), 0.0))
    return half_tr + disc, half_tr - disc


def random_symmetric(rng, d):
    a = rng.standard_normal((d, d))
    return 0.5 * (a + a.T)


def random_psd(rng, d, dof=None):
    a = rng.standard_normal((d, dof or d))
    return a @ a.T / d


class TestEigen:
    def test_identity(self):
        dec = eigen(np.eye(2))
        np.testing.assert_allclose(dec.values, [1.0, 1.0])

    def test_diagonal(self):
        dec = eigen(np.diag([3.0, -1.0]))
        np.testing.assert_allclose(dec.values, [3.0, -1.0])
        # axis eigenvectors up to sign
        assert abs(abs(dec.vectors[0, 0]) - 1.0) < 1e-12
        assert abs(abs(dec.vectors[1, 1]) - 1.0) < 1e-12

    def test_2x2_against_closed_form(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        dec = eigen(m)
        np.testing.assert_allclose(dec.values, eig2x2(2, 1, 2), atol=1e-12)
        v0 = dec.vectors[:, 0]
        np.testing.assert_allclose(np.abs(v0), [1 / math.sqrt(2)] * 2, atol=1e-12)

    def test_zero_matrix(self):
        dec = eigen(np.zeros((3, 3)))
        np.testing.assert_allclose(dec.values, 0.0)
        np.testing.assert_allclose(dec.vectors @ dec.vectors.T, np.eye(3), atol=1e-12)

    def test_invariants_random(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            d = int(rng.integers(1, 11))
            dec = eigen(random_symmetric(rng, d))
            assert np.all(np.diff(dec.values) <= 1e-12)
            gram = dec.vectors.T @ dec.vectors
            assert np.linalg.norm(gram - np.eye(d)) <= 1e-10
            m = random_symmetric(rng, d)
            dec = eigen(m)
            err = np.linalg.norm(dec.reconstruct() - m)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(m))

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            eigen(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestTraceNorm:
    def test_rank_one_outer(self):
        x = np.array([3.0, 4.0])
        assert trace_norm(np.outer(x, x)) == pytest.approx(float(x @ x), abs=1e-12)

    def test_diagonal(self):
        assert trace_norm(np.diag([-1.0, 2.0])) == pytest.approx(3.0)

    def test_zero(self):
        assert trace_norm(np.zeros((4, 4))) == 0.0

    def test_matches_eigen_sum(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = random_symmetric(rng, int(rng.integers(1, 11)))
            assert trace_norm(m) == pytest.approx(float(np.abs(eigen(m).values).sum()), abs=1e-9)


class TestPosNegParts:
    def test_diagonal(self):
        plus, minus, absd = pos_neg_parts(np.diag([-1.0, 2.0]))
        np.testing.assert_allclose(plus, np.diag([0.0, 2.0]), atol=1e-12)
        np.testing.assert_allclose(minus, np.diag([1.0, 0.0]), atol=1e-12)
        np.testing.assert_allclose(absd, np.diag([1.0, 2.0]), atol=1e-12)

    def test_psd_input_passthrough(self):
        rng = np.random.default_rng(2)
        m = random_psd(rng, 4)
        plus, minus, absd = pos_neg_parts(m)
        np.testing.assert_allclose(plus, m, atol=1e-10)
        np.testing.assert_allclose(minus, 0.0, atol=1e-10)
        np.testing.assert_allclose(absd, m, atol=1e-10)

    def test_covariance_difference(self):
        plus, minus, absd = pos_neg_parts(np.diag([1.0, 2.0]) - np.diag([2.0, 1.0]))
        np.testing.assert_allclose(plus, np.diag([0.0, 1.0]), atol=1e-12)
        np.testing.assert_allclose(minus, np.diag([1.0, 0.0]), atol=1e-12)
        assert np.trace(absd) == pytest.approx(2.0)

    def test_split_properties_random(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = random_symmetric(rng, int(rng.integers(1, 9)))
            plus, minus, absd = pos_neg_parts(m)
            scale = max(1.0, np.linalg.norm(m))
            assert np.linalg.norm(plus - minus - m) <= 1e-8 * scale
            assert np.linalg.norm(plus @ minus) <= 1e-8 * scale ** 2
            assert np.linalg.eigvalsh(plus).min() >= -1e-10 * scale
            assert np.linalg.eigvalsh(minus).min() >= -1e-10 * scale
            np.testing.assert_allclose(absd, plus + minus)


class TestPsdProject:
    def test_clips_tiny_negative(self):
        out = psd_project(np.diag([1.0, -1e-12]), tol=0.0)
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-15)

    def test_idempotent_and_fixes_psd(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            m = random_psd(rng, 5)
            np.testing.assert_allclose(psd_project(m), m, atol=1e-10)
            s = random_symmetric(rng, 5)
            once = psd_project(s)
            np.testing.assert_allclose(psd_project(once), once, atol=1e-10)

    def test_2x2_closed_form(self):
        # eigenvalues (3, -1); keeping only 3 gives the all-1.5 matrix
        out = psd_project(np.array([[1.0, 2.0], [2.0, 1.0]]))
        np.testing.assert_allclose(out, np.full((2, 2), 1.5), atol=1e-12)

    def test_negative_tol_rejected(self):
        with pytest.raises(InvalidInputError):
            psd_project(np.eye(2), tol=-1.0)


class TestSqrtPsd:
    def test_diagonal(self):
        np.testing.assert_allclose(sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_identity(self):
        np.testing.assert_allclose(sqrt_psd(np.eye(3)), np.eye(3), atol=1e-12)

    def test_squares_back(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        root = sqrt_psd(m)
        np.testing.assert_allclose(root @ root, m, atol=1e-12)
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = random_psd(rng, int(rng.integers(1, 9)))
            root = sqrt_psd(p)
            err = np.linalg.norm(root @ root - p)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(p))
            assert np.linalg.eigvalsh(root).min() >= -1e-10

    def test_not_psd_raises(self):
        with pytest.raises(NotPSDError):
            sqrt_psd(np.diag([1.0, -0.1]))


class TestGaussianW2:
    def test_equal_is_zero(self):
        rng = np.random.default_rng(6)
        m = random_psd(rng, 4)
        assert gaussian_w2(m, m) == pytest.approx(0.0, abs=1e-7)

    def test_commuting_diagonal_closed_form(self):
        # sqrt(sum (sqrt(l1_i) - sqrt(l2_i))^2) for commuting matrices
        value = gaussian_w2(np.diag([1.0, 4.0]), np.diag([4.0, 1.0]))
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-10)

    def test_zero_target(self):
        m = np.diag([2.0, 3.0])
        assert gaussian_w2(m, np.zeros((2, 2))) == pytest.approx(math.sqrt(5.0), abs=1e-10)

    def test_symmetry_and_separation(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = random_psd(rng, 3)
            b = random_psd(rng, 3)
            assert gaussian_w2(a, b) == pytest.approx(gaussian_w2(b, a), abs=1e-8)
            assert gaussian_w2(a, b) > 1e-6  # independent draws differ

    def test_not_psd_raises(self):
        with pytest.raises(NotPSDError):
            gaussian_w2(np.diag([1.0, -1.0]), np.eye(2))


class TestSymMat:
    def test_round_trip_exactly_symmetric(self):
        rng = np.random.default_rng(8)
        m = random_symmetric(rng, 5)
        sym = SymMat.from_full(m)
        full = sym.full()
        np.testing.assert_allclose(full, m, atol=1e-15)
        assert np.array_equal(full, full.T)

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidInputError):
            SymMat.from_full(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_bad_lengths_rejected(self):
        with pytest.raises(InvalidInputError):
            SymMat(2, [1.0, 2.0])
        with pytest.raises(InvalidInputError):
            SymMat(0, [])

    def test_ops_accept_symmat(self):
        sym = SymMat.from_full(np.diag([4.0, 1.0]))
        assert trace_norm(sym) == pytest.approx(5.0)
        np.testing.assert_allclose(sqrt_psd(sym), np.diag([2.0, 1.0]), atol=1e-12)
