import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charcorr.linalg import (LogComplex, block2x2, cauchy_binet_sum, determinant,
                             determinant_by_cofactors, ishikawa_wakayama_sum, kron, lc_sum,
                             mp_determinant, mp_pfaffian, pfaffian, pfaffian_by_pairings,
                             vandermonde)


def cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def antisym(rng, n):
    A = cplx(rng, n, n)
    return A - A.T


def test_logcomplex_roundtrip_and_zero():
    v = LogComplex.from_complex(-3 + 4j)
    assert v.to_complex() == pytest.approx(-3 + 4j)
    assert LogComplex.from_complex(0).is_zero()
    assert (v * LogComplex.zero()).is_zero()
    with pytest.raises(ZeroDivisionError):
        v / LogComplex.zero()


def test_logcomplex_avoids_overflow():
    big = LogComplex(2000.0)
    assert (big / big.scale(-1.0)).to_complex() == pytest.approx(math.e)
    s = lc_sum([big, big])
    assert s.log_magnitude == pytest.approx(2000 + math.log(2))


def test_determinant_examples(rng):
    assert determinant(np.eye(3)).to_complex() == pytest.approx(1)
    assert determinant(np.diag([2, 3])).to_complex() == pytest.approx(6)
    assert determinant([[1, 2], [2, 4]]).is_zero() or abs(determinant([[1, 2], [2, 4]]).to_complex()) < 1e-12
    with pytest.raises(ValueError):
        determinant(np.ones((2, 3)))


def test_pfaffian_examples():
    assert pfaffian([[0, 3], [-3, 0]]).to_complex() == pytest.approx(3)
    A = np.zeros((4, 4))
    A[0, 1], A[0, 2], A[0, 3], A[1, 2], A[1, 3], A[2, 3] = 1, 2, 3, 4, 5, 6
    A = A - A.T
    assert pfaffian(A).to_complex() == pytest.approx(1 * 6 - 2 * 5 + 3 * 4)
    with pytest.raises(ValueError):
        pfaffian(np.ones((2, 2)))
    with pytest.raises(ValueError):
        pfaffian(np.zeros((3, 3)))


def test_vandermonde_examples():
    assert vandermonde([1, 2, 3]).to_complex() == pytest.approx(2)
    assert vandermonde([1, 1]).is_zero()


def test_kron_and_block():
    M = np.arange(4.0).reshape(2, 2)
    K = kron(np.eye(2), M)
    assert np.allclose(K[:2, :2], M) and np.allclose(K[2:, 2:], M) and not K[:2, 2:].any()
    assert kron(np.ones((2, 3)), np.ones((4, 5))).shape == (8, 15)
    with pytest.raises(ValueError):
        block2x2(np.eye(2), np.eye(3), np.eye(2), np.eye(2))


def test_block_determinant_identity(rng):
    X = cplx(rng, 2, 2)
    Z = np.diag([1.3, 0.7])
    W = np.diag([0.9, 1.6])
    N = 3
    inner = np.eye(2) + np.linalg.inv(Z) @ X @ np.linalg.inv(W) @ X.conj().T
    lhs = (determinant(inner) * determinant(Z @ W)) ** N
    rhs = determinant(block2x2(Z, X, -X.conj().T, W)) ** N
    assert lhs.rel_diff(rhs) < 1e-10


@given(st.integers(0, 2 ** 32 - 1))
def test_determinant_multiplicative(seed):
    rng = np.random.default_rng(seed)
    A, B = cplx(rng, 5, 5), cplx(rng, 5, 5)
    assert (determinant(A) * determinant(B)).rel_diff(determinant(A @ B)) < 1e-9


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 4, 6]))
def test_pfaffian_square_and_expansion(seed, n):
    rng = np.random.default_rng(seed)
    A = antisym(rng, n)
    pf = pfaffian(A)
    assert (pf ** 2).rel_diff(determinant(A)) < 1e-10
    assert pf.rel_diff(LogComplex.from_complex(pfaffian_by_pairings(A))) < 1e-10


@given(st.integers(0, 2 ** 32 - 1))
def test_pfaffian_congruence(seed):
    rng = np.random.default_rng(seed)
    A, B = antisym(rng, 6), cplx(rng, 6, 6)
    assert pfaffian(B @ A @ B.T).rel_diff(determinant(B) * pfaffian(A)) < 1e-9


@given(st.integers(0, 2 ** 32 - 1))
def test_determinant_matches_cofactors(seed):
    rng = np.random.default_rng(seed)
    A = cplx(rng, 5, 5)
    assert determinant(A).rel_diff(LogComplex.from_complex(determinant_by_cofactors(A))) < 1e-10


def test_cauchy_binet(rng):
    A, B = cplx(rng, 3, 5), cplx(rng, 5, 3)
    assert LogComplex.from_complex(cauchy_binet_sum(A, B)).rel_diff(determinant(A @ B)) < 1e-10


def test_ishikawa_wakayama(rng):
    A, B = antisym(rng, 6), cplx(rng, 4, 6)
    assert LogComplex.from_complex(ishikawa_wakayama_sum(B, A)).rel_diff(pfaffian(B @ A @ B.T)) < 1e-10


def test_extended_precision_routes_agree(rng):
    import mpmath as mp
    A = antisym(rng, 6)
    with mp.workdps(30):
        pf = complex(mp_pfaffian(A.tolist()))
        det = complex(mp_determinant(A.tolist()))
    assert pf == pytest.approx(pfaffian(A).to_complex(), rel=1e-11)
    assert det == pytest.approx(determinant(A).to_complex(), rel=1e-11)
