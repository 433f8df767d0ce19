import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import gammainc
from scipy.stats import norm

from charcorr.asymptotics import (
    AsymptoticRegime,
    convergence_report,
    exact,
    exact_moment_integer,
    exact_moment_noninteger,
    lse_top_cdf,
    predict,
    two_point_exact,
    two_point_prediction,
)
from charcorr.correlators import CorrelatorSpec, evaluate_confluent


# regime validation

@pytest.mark.parametrize("kwargs", [
    dict(regime="Nope"),
    dict(regime="RealBulk", x=1.5, zeta=(0.1, 0.2)),
    dict(regime="RealBulk", x=0.2, zeta=(0.1,)),
    dict(regime="RealBulk", x=0.2j, zeta=(0.1, 0.2)),
    dict(regime="ComplexBulk", x=0.3, zeta=(0.1,), xi=(0.2,)),
    dict(regime="ComplexBulk", x=1.2j, zeta=(0.1,), xi=(0.2,)),
    dict(regime="ComplexEdge", x=0.5j, zeta=(0.1,), xi=(0.2,)),
    dict(regime="ComplexEdge", x=1j, zeta=(0.1j,), xi=(0.2,)),
    dict(regime="RealEdge", zeta=(0.1, 0.2j)),
    dict(regime="IntegerMoment", x=0.1),
    dict(regime="IntegerMoment", x=0.1, k=0),
    dict(regime="NonIntegerMoment", gamma=-0.6),
    dict(regime="NonIntegerMoment", gamma=0.5, x=0.1),
    dict(regime="TwoPoint", zeta=(1.0,), xi=(1.0,), k1=1, k2=1),
    dict(regime="TwoPoint", zeta=(1.0,), xi=(-1.0,), k1=0, k2=1),
])
def test_invalid_regimes(kwargs):
    with pytest.raises(ValueError):
        AsymptoticRegime(**kwargs)


def test_points_scaling():
    r = AsymptoticRegime("ComplexEdge", x=1j, zeta=(0.5,), xi=(-0.5,))
    z, w = r.points(4)
    assert z == pytest.approx(1j + 0.5 / (-1j * 2))
    assert w == pytest.approx(-1j - 0.5 / (1j * 2))
    assert AsymptoticRegime("RealEdge", zeta=(0.2, 0.4)).points(16) == [1.05, 1.1]


def test_repeated_offsets_rejected_by_predictor():
    r = AsymptoticRegime("RealBulk", x=0.1, zeta=(0.3, 0.3))
    with pytest.raises(ValueError):
        predict(r, 10)


# predictor closed forms

@given(st.floats(-0.9, 0.9), st.integers(2, 400))
def test_integer_moment_k1_formula(x, N):
    r = AsymptoticRegime("IntegerMoment", x=x, k=1)
    want = -N * (1 - x * x) + 0.5 * math.log(N) + 0.5 * math.log(2 * math.pi)
    assert predict(r, N).log_magnitude == pytest.approx(want, abs=1e-10)


@given(st.floats(-0.8, 0.8), st.floats(-2, 2), st.floats(-2, 2), st.integers(2, 300))
def test_real_bulk_k1_formula(x, a, b, N):
    if abs(a - b) < 1e-3:
        return
    r = AsymptoticRegime("RealBulk", x=x, zeta=(a, b))
    want = (a * b - N * (1 - x * x) + math.sqrt(N) * x * (a + b)
            + 0.5 * math.log(N) + 0.5 * math.log(2 * math.pi))
    assert predict(r, N).log_magnitude == pytest.approx(want, rel=1e-10, abs=1e-9)


def test_noninteger_gamma_zero_is_one():
    r = AsymptoticRegime("NonIntegerMoment", gamma=0.0)
    assert predict(r, 50).log_magnitude == pytest.approx(0.0, abs=1e-12)
    assert exact_moment_noninteger(0.0, 50) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_integer_and_noninteger_predictors_agree(k):
    a = predict(AsymptoticRegime("IntegerMoment", x=0.0, k=k), 80)
    b = predict(AsymptoticRegime("NonIntegerMoment", gamma=float(k)), 80)
    assert a.log_magnitude == pytest.approx(b.log_magnitude, abs=1e-10)


def test_complex_bulk_k1_is_exponential():
    z, a, b = 0.3 + 0.4j, 0.2 - 0.1j, 0.5 + 0.3j
    N = 40
    r = AsymptoticRegime("ComplexBulk", x=z, zeta=(a,), xi=(b,))
    got = predict(r, N).to_complex()
    want = (np.exp(a * b - N * (1 - abs(z) ** 2) + math.sqrt(N) * (z.conjugate() * a + z * b))
            * math.sqrt(2 * math.pi * N))
    assert got == pytest.approx(want, rel=1e-10)


# exact finite-N routes against the confluent closed form

def test_noninteger_exact_small():
    assert math.exp(exact_moment_noninteger(1.0, 2)) == pytest.approx(0.5)


@pytest.mark.parametrize("N,k", [(4, 1), (4, 2), (6, 2), (8, 3)])
def test_moments_at_origin_match_confluent(N, k):
    ref = evaluate_confluent(CorrelatorSpec("ginoe", N, k, z=[0.0] * (2 * k))).scale(-N * k * math.log(N))
    assert exact_moment_noninteger(float(k), N) == pytest.approx(ref.log_magnitude, abs=1e-9)
    assert exact_moment_integer(k, 0.0, N) == pytest.approx(ref.log_magnitude, abs=1e-9)


@pytest.mark.parametrize("N,k,x", [(6, 1, 0.3), (6, 2, -0.5), (10, 2, 0.7)])
def test_integer_moment_off_origin_matches_confluent(N, k, x):
    s = math.sqrt(N)
    ref = evaluate_confluent(CorrelatorSpec("ginoe", N, k, z=[s * x] * (2 * k))).scale(-N * k * math.log(N))
    assert exact_moment_integer(k, x, N) == pytest.approx(ref.log_magnitude, abs=1e-9)


def test_integer_moment_monte_carlo(rng):
    N, x, n = 6, 0.4, 200_000
    G = rng.standard_normal((n, N, N)) / math.sqrt(N)
    d = np.linalg.det(G - x * np.eye(N)) ** 2
    est, se = d.mean(), d.std(ddof=1) / math.sqrt(n)
    assert abs(est - math.exp(exact_moment_integer(1, x, N))) < 5 * se


def test_exact_rejects_odd_N():
    with pytest.raises(ValueError):
        exact(AsymptoticRegime("RealBulk", x=0.1, zeta=(0.1, 0.2)), 7)


# convergence

def test_real_bulk_converges():
    r = AsymptoticRegime("RealBulk", x=0.3, zeta=(0.1, 0.4))
    rep = convergence_report(r, [20, 50, 100])
    assert rep.monotone
    assert rep.rows[-1].error < 0.01


def test_noninteger_converges():
    rep = convergence_report(AsymptoticRegime("NonIntegerMoment", gamma=0.5), [20, 50, 100])
    assert rep.monotone
    assert rep.rows[-1].error < 0.01
    assert [row["N"] for row in rep.table()] == [20, 50, 100]


def test_real_edge_error_follows_edgeworth_rate():
    # at k = 1 the exact value is a Poisson tail; the one-term Edgeworth
    # correction predicts relative error c / sqrt(N)
    a, b = 0.1, 0.4
    s = a + b
    c = norm.pdf(s) / norm.sf(s) * ((0.5 - a * b + s * s / 2) - (s * s - 1) / 6)
    r = AsymptoticRegime("RealEdge", zeta=(a, b))
    errs = [convergence_report(r, [N]).rows[0].error * math.sqrt(N) for N in (200, 800)]
    assert errs[1] == pytest.approx(c, rel=0.02)
    assert abs(errs[1] - c) < abs(errs[0] - c)


# LSE top eigenvalue distribution

@given(st.floats(0, 40))
def test_lse_single_eigenvalue(x):
    assert lse_top_cdf(1, 1, x) == pytest.approx(1 - (1 + x) * math.exp(-x), abs=1e-12)
    assert lse_top_cdf(2, 1, x) == pytest.approx(gammainc(4, x), abs=1e-12)
    assert lse_top_cdf(1, 3, x) == lse_top_cdf(3, 1, x)


def _lse2_quadrature(a, x):
    def dens(l1, l2):
        return (l1 * l2) ** a * math.exp(-l1 - l2) * (l1 - l2) ** 4
    num, _ = integrate.dblquad(dens, 0, x, 0, x, epsabs=1e-13, epsrel=1e-11)
    den, _ = integrate.dblquad(dens, 0, np.inf, 0, np.inf, epsabs=1e-13, epsrel=1e-11)
    return num / den


@pytest.mark.parametrize("k1,k2,x", [(2, 2, 3.0), (2, 2, 10.0), (3, 2, 6.0)])
def test_lse_two_eigenvalues_quadrature(k1, k2, x):
    a = 2 * abs(k1 - k2) + 1
    assert lse_top_cdf(k1, k2, x) == pytest.approx(_lse2_quadrature(a, x), rel=1e-7)


def test_lse_limits_and_monotone():
    xs = np.linspace(0, 40, 81)
    for k1, k2 in [(1, 1), (2, 2), (3, 2)]:
        F = [lse_top_cdf(k1, k2, x) for x in xs]
        assert F[0] == 0.0
        assert np.all(np.diff(F) >= -1e-15)
        assert lse_top_cdf(k1, k2, math.inf) == pytest.approx(1.0)
    with pytest.raises(NotImplementedError):
        lse_top_cdf(3, 3, 1.0)
    with pytest.raises(ValueError):
        lse_top_cdf(1, 1, -1.0)


# two-point merging

def test_two_point_prediction_finite_at_merge():
    # F(t) ~ t^2 / 2 for k1 = k2 = 1, so the ratio tends to N^2 / 2
    N = 30
    vals = [two_point_prediction(AsymptoticRegime("TwoPoint", zeta=(d,), xi=(0.0,), k1=1, k2=1), N)
            .to_complex().real for d in (1e-1, 1e-2, 1e-3)]
    assert vals[-1] == pytest.approx(N * N / 2, rel=1e-5)
    assert abs(vals[-1] - N * N / 2) < abs(vals[0] - N * N / 2)


def test_two_point_exact_approaches_prediction():
    r = AsymptoticRegime("TwoPoint", x=0.0, zeta=(1.0,), xi=(-1.0,), k1=1, k2=1)
    errs = [abs(two_point_exact(r, N).to_complex().real / predict(r, N).to_complex().real - 1)
            for N in (50, 100, 200)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_two_point_wide_separation_factorizes():
    # F -> 1, leaving the bare |x - y|^{-4} factor
    N = 30
    r = AsymptoticRegime("TwoPoint", zeta=(12.0,), xi=(0.0,), k1=1, k2=1)
    gap = 12.0 / math.sqrt(N)
    assert two_point_prediction(r, N).to_complex().real == pytest.approx(gap ** -4, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_block_pfaffian_reduces_to_determinant(k, rng):
    from charcorr.linalg import determinant, pfaffian
    zeta = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    xi = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    K = np.exp(np.outer(zeta, xi))
    B = np.block([[np.zeros((k, k)), K], [-K.T, np.zeros((k, k))]])
    got = pfaffian(B).to_complex()
    want = (-1) ** (k * (k - 1) // 2) * determinant(K).to_complex()
    assert got == pytest.approx(want, rel=1e-10)
