import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charcorr.correlators import (CoincidentPointsError, CorrelatorSpec, ExtrapolationError, charsum,
                                  closed_form, duality_rhs, evaluate_confluent, mc_correlator,
                                  orthogonality_check, orthogonality_constant, splitting_check)
from charcorr.verify import random_spec

pts = st.complex_numbers(max_magnitude=1.2)


# exact small-N averages from Wick's theorem ---------------------------------------

@given(pts, pts)
def test_ginue_single_entry(z, w):
    v = closed_form(CorrelatorSpec("ginue", 1, 1, z=[z], w=[w])).to_complex()
    assert v == pytest.approx(1 + z * w, rel=1e-12, abs=1e-12)


@given(pts, pts.filter(lambda c: True))
def test_ginoe_two_by_two(x, y):
    if abs(x - y) < 1e-3:
        return
    v = closed_form(CorrelatorSpec("ginoe", 2, 1, z=[x, y])).to_complex()
    assert v == pytest.approx((1 + x * y) ** 2 + 1, rel=1e-9, abs=1e-9)


@given(pts, pts)
def test_ginse_single_quaternion(a, b):
    if abs(a - b) < 1e-3:
        return
    v = closed_form(CorrelatorSpec("ginse", 1, 1, z=[a, b])).to_complex()
    assert v == pytest.approx(1.5 + a * a + b * b + a * a * b * b + a * b, rel=1e-9, abs=1e-9)


@given(pts, pts)
def test_truncated_single_entry(z, w):
    v = closed_form(CorrelatorSpec("tue", 2, 1, z=[z], w=[w], M=1)).to_complex()
    assert v == pytest.approx(0.5 + z * w, rel=1e-12, abs=1e-12)
    if abs(z - w) > 1e-3:
        v = closed_form(CorrelatorSpec("toe", 2, 1, z=[z, w], M=1)).to_complex()
        assert v == pytest.approx(0.5 + z * w, rel=1e-9, abs=1e-9)


@given(pts, pts)
def test_tse_single_quaternion(a, b):
    if abs(a - b) < 1e-3:
        return
    v = closed_form(CorrelatorSpec("tse", 2, 1, z=[a, b], M=1)).to_complex()
    ref = 0.3 + (a * a + b * b) / 2 + a * a * b * b + a * b / 2
    assert v == pytest.approx(ref, rel=1e-9, abs=1e-9)


# route equivalence and symmetries ----------------------------------------------------

@given(st.sampled_from(["ginue", "ginoe", "ginse", "tue", "toe", "tse"]), st.integers(1, 2),
       st.integers(1, 2), st.integers(0, 2 ** 32 - 1))
def test_charsum_equals_closed_form(ens, half, k, seed):
    rng = np.random.default_rng(seed)
    N = 2 * half if ens in ("ginoe", "toe") else int(rng.integers(1, 5))
    M = int(rng.integers(1, N + 1)) if ens in ("tue", "toe", "tse") else None
    s = random_spec(ens, N, k, rng, M)
    assert charsum(s).rel_diff(closed_form(s)) < 1e-9


@given(st.integers(0, 2 ** 32 - 1))
def test_closed_form_symmetric_in_points(seed):
    rng = np.random.default_rng(seed)
    s = random_spec("toe", 4, 2, rng, M=3)
    perm = rng.permutation(4)
    t = s.with_points([s.z[i] for i in perm])
    assert closed_form(s).rel_diff(closed_form(t)) < 1e-9
    s = random_spec("ginue", 3, 2, rng)
    t = s.with_points(s.z[::-1], s.w[::-1])
    assert closed_form(s).rel_diff(closed_form(t)) < 1e-9


def test_large_n_stays_finite():
    s = CorrelatorSpec("ginoe", 300, 1, z=[10.0, 11.0])
    v = closed_form(s)
    assert math.isfinite(v.log_magnitude) and v.log_magnitude > 700


def test_extended_precision_agrees(rng):
    s = random_spec("ginse", 3, 2, rng)
    assert closed_form(s).rel_diff(closed_form(s, dps=30)) < 1e-10


# validation --------------------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        CorrelatorSpec("ginoe", 3, 1, z=[0.1, 0.2])
    with pytest.raises(ValueError):
        CorrelatorSpec("ginue", 2, 1, z=[0.1])
    with pytest.raises(ValueError):
        CorrelatorSpec("tue", 2, 1, z=[0.1], w=[0.2], M=3)
    with pytest.raises(ValueError):
        CorrelatorSpec("gue", 2, 1, z=[0.1], w=[0.2])
    with pytest.raises(ValueError):
        CorrelatorSpec("ginoe", 2, 1, z=[0.1, 0.2], omega=np.eye(3))
    s = CorrelatorSpec("ginue", 2, 1, z=[0.1], w=[0.2], omega=np.diag([1.0, 2.0]))
    with pytest.raises(ValueError):
        closed_form(s)


def test_coincident_points_raise():
    with pytest.raises(CoincidentPointsError):
        closed_form(CorrelatorSpec("ginoe", 2, 1, z=[0.3, 0.3]))


# confluent limit ---------------------------------------------------------------------

def test_confluent_examples():
    assert evaluate_confluent(CorrelatorSpec("ginoe", 2, 1, z=[0, 0])).to_complex() == pytest.approx(2, rel=1e-8)
    # E|det G|^4 over 4x4 GinUE: prod_{j=1}^{4} j (j+1)
    v = evaluate_confluent(CorrelatorSpec("ginue", 4, 2, z=[0, 0], w=[0, 0])).to_complex()
    assert v == pytest.approx(math.prod(j * (j + 1) for j in range(1, 5)), rel=1e-8)


def test_confluent_matches_nearby_closed_form():
    s = CorrelatorSpec("ginse", 2, 2, z=[0.3, 0.3, -0.2 + 0.1j, 0.5])
    v, err = evaluate_confluent(s, return_error=True)
    near = closed_form(s.with_points([0.3, 0.3 + 1e-5, -0.2 + 0.1j, 0.5]), dps=40)
    assert v.rel_diff(near) < 1e-4 and err < 1e-5


def test_confluent_distinct_points_passthrough(rng):
    s = random_spec("tue", 3, 1, rng, M=2)
    assert evaluate_confluent(s).rel_diff(closed_form(s)) < 1e-14


def test_confluent_extrapolation_failure():
    with pytest.raises(ExtrapolationError):
        evaluate_confluent(CorrelatorSpec("ginoe", 4, 2, z=[0.1] * 4), rtol=1e-30)


# orthogonality constants -------------------------------------------------------------

def test_orthogonality_constants_examples():
    assert orthogonality_constant("ginue", (1,), 5) == 5
    assert orthogonality_constant("tue", (1,), 5, 2) == pytest.approx(2 / 5)
    assert orthogonality_constant("ginoe", (1,), 4) == 0
    assert orthogonality_constant("ginoe", (2,), 4) == 4
    assert orthogonality_constant("ginse", (1,), 2) == 0
    assert orthogonality_constant("ginse", (1, 1), 2) == 2


@pytest.mark.parametrize("ens,mu,lam,N,M", [
    ("ginue", (2, 1), (2, 1), 3, None), ("ginue", (2,), (1, 1), 3, None),
    ("tue", (1, 1), (1, 1), 4, 2), ("ginoe", (), (2, 2), 4, None), ("toe", (), (2,), 4, 3),
    ("ginse", (), (1, 1), 2, None), ("tse", (), (2, 2), 3, 2)])
def test_orthogonality_by_monte_carlo(ens, mu, lam, N, M):
    r = orthogonality_check(ens, mu, lam, N, 40000, 21, M)
    assert r.passed(5)


@pytest.mark.parametrize("case,eta,N", [("gaussian", (1,), None), ("gaussian", (2,), None),
                                        ("gaussian", (1, 1), None), ("heavy", (1,), 6),
                                        ("heavy", (1, 1), 6)])
def test_splitting_by_monte_carlo(case, eta, N):
    A = np.diag([0.7, 1.2])
    B = np.array([[0.5, 0.2], [0.1, 0.9]])
    r = splitting_check(case, eta, A, B, 40000, 8, N)
    assert r.passed(5)


def test_splitting_wick_value():
    # eta = (2) with 1 x 1 sources a, b: E (a b |x|^2)^2 = 2 a^2 b^2
    r = splitting_check("gaussian", (2,), [[0.8]], [[1.5]], 40000, 2)
    assert r.prediction == pytest.approx(2 * 0.8 ** 2 * 1.5 ** 2)


# Monte Carlo routes ------------------------------------------------------------------

def test_mc_is_deterministic_across_workers():
    s = CorrelatorSpec("toe", 4, 1, z=[0.5, -0.4], M=2)
    a = mc_correlator(s, 5000, 3, workers=1)
    b = mc_correlator(s, 5000, 3, workers=3)
    assert a == b
    c = duality_rhs(s, 5000, 3, workers=1)
    d = duality_rhs(s, 5000, 3, workers=2)
    assert c == d


@pytest.mark.parametrize("spec", [
    CorrelatorSpec("ginoe", 2, 1, z=[0.2, 0.5], omega=np.diag([1.0, 0.4])),
    CorrelatorSpec("ginse", 2, 1, z=[0.2, 0.5], omega=np.diag([1.0, 0.6, 1.0, 0.6])),
    CorrelatorSpec("ginue", 2, 1, z=[0.3j], w=[0.5], omega=np.diag([1.0, 0.5]),
                   sigma=np.diag([0.8, 1.0])),
])
def test_general_sources_mc_vs_dual(spec):
    m = mc_correlator(spec, 40000, 4)
    d = duality_rhs(spec, 40000, 4)
    assert abs(m.mean - d.mean) < 5 * math.hypot(m.stderr, d.stderr)


def test_duality_rejects_zero_point():
    with pytest.raises(ValueError):
        duality_rhs(CorrelatorSpec("tue", 3, 1, z=[0.0], w=[0.2], M=2), 1000, 1)


def test_full_truncation_is_haar_unitary():
    # M = N keeps the whole Haar matrix: E det(z - U) det(w - U^*) = sum_l (zw)^l
    z, w = 0.5, 0.4 + 0.1j
    s = CorrelatorSpec("tue", 3, 1, z=[z], w=[w], M=3)
    want = sum((z * w) ** l for l in range(4))
    assert closed_form(s).to_complex() == pytest.approx(want, rel=1e-12)
    est = mc_correlator(s, 20000, 1)
    assert est.zscore(want) < 5


def test_truncation_approaches_ginibre():
    # an M x M corner of a large Haar matrix looks like G / sqrt(N)
    N, M, z, w = 200, 3, 0.7, 0.5
    s = math.sqrt(N)
    a = closed_form(CorrelatorSpec("tue", N, 1, z=[z / s], w=[w / s], M=M)).scale(M * math.log(N))
    b = closed_form(CorrelatorSpec("ginue", M, 1, z=[z], w=[w]))
    assert a.rel_diff(b) < 0.02
