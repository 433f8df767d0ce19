import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from charcorr import special as sp


def brute_even_odd(L, f, z, w):
    s = 0j
    for a in range(L):
        for b in range(a, L):
            s += f(2 * a) * f(2 * b + 1) * (z ** (2 * a) * w ** (2 * b + 1) - z ** (2 * b + 1) * w ** (2 * a))
    return s


def test_incexp_examples():
    assert complex(sp.kernel_incexp(3, 1.0, 1.0)) == pytest.approx(2.5)
    assert complex(sp.kernel_incexp(1, 7.0, 3.0)) == 1
    with pytest.raises(ValueError):
        sp.kernel_incexp(0, 1, 1)


@given(st.complex_numbers(max_magnitude=2.2), st.complex_numbers(max_magnitude=2.2))
def test_incexp_limit(z, w):
    v = complex(sp.kernel_incexp(60, z, w))
    assert v == pytest.approx(np.exp(z * w), rel=1e-12, abs=1e-300)


@given(st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3), st.integers(1, 40))
def test_incexp_scaled(z, w, N):
    a = complex(sp.kernel_incexp_scaled(N, z, w))
    b = complex(sp.kernel_incexp(N, z, w)) * math.exp(-(abs(z) ** 2 + abs(w) ** 2) / 2)
    assert a == pytest.approx(b, rel=1e-11, abs=1e-14)


def test_incexp_scaled_large_arguments_finite():
    z = np.sqrt(300) * 0.9
    v = sp.kernel_incexp_scaled(300, z, z)
    assert np.isfinite(v) and 0 < abs(v) <= 300


def test_trunc_kernel_series():
    N, M = 7, 4
    z, w = 0.3 + 0.2j, 0.5 - 0.1j
    direct = sum(math.comb(N - M + l, l) * (z * w) ** l for l in range(5))
    assert complex(sp.kernel_trunc(N, M, 5, z, w)) == pytest.approx(direct)
    # all terms: negative binomial series
    assert complex(sp.kernel_trunc(N, M, 400, z, w)) == pytest.approx((1 - z * w) ** (-(N - M + 1)))
    assert sp.kernel_trunc_weight(N, M, 2) == pytest.approx(math.log(math.factorial(5) / 2))


@given(st.integers(1, 6), st.complex_numbers(max_magnitude=1.5), st.complex_numbers(max_magnitude=1.5))
def test_ginse_kernel_matches_double_sum(L, z, w):
    got = complex(sp.kernel_ginse(L, z, w))
    ref = brute_even_odd(L, lambda m: 1 / math.gamma(m / 2 + 1), z, w)
    assert got == pytest.approx(ref, rel=1e-11, abs=1e-12)


@given(st.integers(1, 5), st.integers(0, 3), st.integers(0, 3),
       st.complex_numbers(max_magnitude=0.9), st.complex_numbers(max_magnitude=0.9))
def test_tse_kernel_matches_double_sum(M, d, extra, z, w):
    N = M + d
    L = M + extra
    f = lambda m: math.gamma(m / 2 + d + 1) / math.gamma(m / 2 + 1)
    got = complex(sp.kernel_tse(N, M, z, w, L=L))
    assert got == pytest.approx(brute_even_odd(L, f, z, w), rel=1e-11, abs=1e-12)


@given(st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2))
def test_skew_kernels_antisymmetric(z, w):
    for K in (lambda a, b: sp.kernel_ginse(4, a, b), lambda a, b: sp.kernel_tse(6, 3, a, b)):
        assert complex(K(z, w)) == pytest.approx(-complex(K(w, z)), rel=1e-12, abs=1e-12)


@given(st.floats(-6, 6), st.floats(-6, 6))
def test_edge_kernel_against_mpmath(x, y):
    ref = float(mp.e ** (x * y) * mp.erfc((x + y) / mp.sqrt(2)) / 2)
    assert sp.kernel_edge(x, y) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_edge_kernel_rejects_complex():
    with pytest.raises(TypeError):
        sp.kernel_edge(1 + 1j, 0.0)


def test_barnes_g_examples():
    assert sp.log_barnes_g(1) == 0.0
    assert math.exp(sp.log_barnes_g(5)) == pytest.approx(12)
    with pytest.raises(ValueError):
        sp.log_barnes_g(0)


@given(st.floats(0.05, 30))
def test_barnes_g_against_mpmath(z):
    assert sp.log_barnes_g(z) == pytest.approx(float(mp.log(mp.barnesg(z))), abs=1e-11, rel=1e-12)


@given(st.floats(0.05, 20))
def test_barnes_g_recursion(z):
    assert sp.log_barnes_g(z + 1) - sp.log_barnes_g(z) == pytest.approx(math.lgamma(z), abs=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_barnes_g_duplication(k):
    lhs = sp.log_barnes_g(k + 1) + sp.log_barnes_g(k + 0.5)
    rhs = (sp.log_barnes_g(0.5) + k / 2 * math.log(math.pi) + (k - k * k) * math.log(2)
           + sum(math.lgamma(2 * j + 1) for j in range(k)))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(st.floats(0.2, 5), st.floats(0.2, 5))
def test_selberg_k1_is_beta(a, b):
    assert sp.selberg(1, a, b, 0.7) == pytest.approx(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def test_selberg_gamma_zero_factorizes():
    beta = math.lgamma(1.5) + math.lgamma(2.5) - math.lgamma(4.0)
    assert sp.selberg(3, 1.5, 2.5, 0.0) == pytest.approx(3 * beta)


def test_selberg_k2_quadrature():
    val, _ = integrate.dblquad(lambda y, x: abs(x - y), 0, 1, 0, 1, epsabs=1e-12)
    assert math.exp(sp.selberg(2, 1, 1, 0.5)) == pytest.approx(val, rel=1e-6)
    with pytest.raises(ValueError):
        sp.selberg(2, 1, 1, -0.9)


@pytest.mark.parametrize("N", [2, 5, 10])
def test_unitary_dual_volume_k1(N):
    val, _ = integrate.quad(lambda t: math.pi * (1 + t) ** (-N - 2), 0, np.inf, epsrel=1e-13)
    assert math.exp(sp.log_dual_volume("unitary", N, 1)) == pytest.approx(val, rel=1e-8)
    assert sp.log_dual_volume("orthogonal", N, 1) == pytest.approx(sp.log_dual_volume("unitary", N, 1))
