import numpy as np
import pytest
from hypothesis import given, strategies as st

from kic.errors import DimensionError
from kic.numkernel import (DEFAULT_TRUNCATION, TruncationRule, eig, normalize_phase, pinv, spectral_order,
                           svd)


def random_orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q


def test_svd_diagonal_exact():
    f = svd(np.diag([3.0, 2.0, 1.0]), TruncationRule.exact())
    np.testing.assert_array_equal(f.singular_values, [3.0, 2.0, 1.0])
    # sign convention makes the largest entry of each left vector positive
    np.testing.assert_allclose(f.left_vectors, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(f.right_vectors, np.eye(3), atol=1e-15)


def test_svd_rank_cap():
    f = svd(np.diag([3.0, 2.0, 1.0]), TruncationRule.rank_cap(2))
    np.testing.assert_array_equal(f.singular_values, [3.0, 2.0])
    assert f.rank == 2


def test_relative_threshold_drops_tiny_values(rng):
    U0, V0 = random_orthonormal(rng, 5, 3), random_orthonormal(rng, 3, 3)
    M = U0 @ np.diag([5.0, 1e-14, 0.0]) @ V0.T
    assert svd(M, TruncationRule.relative(1e-10)).rank == 1


def test_exact_rule_drops_zero_singular_values():
    f = svd(np.zeros((3, 2)), TruncationRule.exact())
    assert f.rank == 0
    np.testing.assert_array_equal(pinv(np.zeros((3, 2)), TruncationRule.exact()), np.zeros((2, 3)))


def test_reconstruct(rng):
    M = rng.standard_normal((4, 6))
    np.testing.assert_allclose(svd(M).reconstruct(), M, atol=1e-13)


def test_pinv_identity():
    np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3), atol=1e-15)


def test_pinv_row_vector():
    np.testing.assert_allclose(pinv([[2.0, 0.0]]), [[0.5], [0.0]], atol=1e-15)


def test_pinv_penrose_full_rank(rng):
    M = rng.standard_normal((4, 6))
    P = pinv(M)
    np.testing.assert_allclose(M @ P @ M, M, atol=1e-8)
    np.testing.assert_allclose(P @ M @ P, P, atol=1e-8)
    np.testing.assert_allclose((M @ P).T, M @ P, atol=1e-8)
    np.testing.assert_allclose((P @ M).T, P @ M, atol=1e-8)


@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 8), cols=st.integers(1, 8), data=st.data())
def test_pinv_penrose_low_rank(seed, rows, cols, data):
    rank = data.draw(st.integers(1, min(rows, cols)))
    r = np.random.default_rng(seed)
    M = r.standard_normal((rows, rank)) @ r.standard_normal((rank, cols))
    P = pinv(M)
    scale = np.linalg.norm(M) * np.linalg.norm(P)
    assert np.linalg.norm(M @ P @ M - M) <= 1e-8 * np.linalg.norm(M)
    assert np.linalg.norm(P @ M @ P - P) <= 1e-8 * np.linalg.norm(P)
    assert np.linalg.norm((M @ P).T - M @ P) <= 1e-8 * scale
    assert np.linalg.norm((P @ M).T - P @ M) <= 1e-8 * scale


@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 8), cols=st.integers(1, 8))
def test_pinv_matches_numpy_on_generic_matrices(seed, rows, cols):
    M = np.random.default_rng(seed).standard_normal((rows, cols))
    np.testing.assert_allclose(pinv(M), np.linalg.pinv(M), atol=1e-9)


@pytest.mark.parametrize("bad", [np.zeros((0, 3)), np.zeros(3), np.zeros((2, 2, 2))])
def test_svd_rejects_bad_shapes(bad):
    with pytest.raises(DimensionError):
        svd(bad)


def test_truncation_parse_round_trip():
    for text in ("exact", "rank:3", "rel:1e-08"):
        assert str(TruncationRule.parse(text)) == text
    assert TruncationRule.parse("rel:1e-12").tau == DEFAULT_TRUNCATION.tau
    for bad in ("rank", "rel:x", "fancy", "exact:1"):
        with pytest.raises(ValueError):
            TruncationRule.parse(bad)


def test_eig_diagonal_order():
    np.testing.assert_allclose(eig(np.diag([0.1, 1.5])).eigenvalues, [1.5, 0.1])


def test_eig_rotation_conjugate_pair():
    lam = eig(np.array([[0.0, -1.0], [1.0, 0.0]])).eigenvalues
    # equal moduli: ascending argument puts +i (pi/2) before -i (3pi/2)
    np.testing.assert_allclose(lam, [1j, -1j], atol=1e-15)


def test_eig_companion_cube_roots():
    companion = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = np.exp(2j * np.pi * np.arange(3) / 3)
    np.testing.assert_allclose(eig(companion).eigenvalues, roots, atol=1e-12)


def test_eig_rejects_rectangular():
    with pytest.raises(DimensionError):
        eig(np.ones((2, 3)))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_eig_residuals_and_phase(seed, n):
    A = np.random.default_rng(seed).standard_normal((n, n))
    ed = eig(A)
    lam, V, W = ed.eigenvalues, ed.right_vectors, ed.left_vectors
    nA = np.linalg.norm(A, 2)
    assert np.max(np.linalg.norm(A @ V - V * lam, axis=0)) <= 1e-8 * nA
    assert np.max(np.linalg.norm(W.conj().T @ A - lam[:, None] * W.conj().T, axis=1)) <= 1e-8 * nA
    for vecs in (V, W):
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=0), 1.0, atol=1e-12)
        pivots = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(n)]
        assert np.all(np.abs(pivots.imag) <= 1e-12) and np.all(pivots.real > 0)
    mods = np.abs(lam)
    assert np.all(np.diff(mods) <= 1e-10 * max(mods[0], 1.0))


def test_spectral_order_ties_by_argument():
    vals = np.array([-1.0, 1j, 1.0, -1j, 0.5])
    np.testing.assert_array_equal(spectral_order(vals), [2, 1, 0, 3, 4])


def test_normalize_phase_makes_pivot_real_positive():
    v = np.array([[1j], [-3j], [0.5]])
    out = normalize_phase(v)
    assert out[1, 0] == pytest.approx(np.abs(out[1, 0]))
    assert np.linalg.norm(out) == pytest.approx(1.0)
