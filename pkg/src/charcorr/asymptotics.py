"""Large-N behaviour of real Ginibre correlators and moments.

The matrix is normalized as ``G_N = G / sqrt(N)`` so that the spectrum fills
the unit disc. Every predictor comes with an exact finite-N reference:

* correlators at distinct points use the Pfaffian closed form in extended
  precision;
* integer moments ``E|det(G_N - x)|^{2k}`` use the character expansion at
  ``2k`` equal points, a sum of positive terms;
* non-integer moments at ``x = 0`` use the Gamma-product formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from . import special as sp
from .correlators import CorrelatorSpec, MCEstimate, closed_form, evaluate_confluent
from .ensembles import run_chunks, sample_batch, EnsembleTag
from .linalg import LogComplex, determinant, lc_sum, pfaffian, vandermonde
from .partitions import BoxShape, Partition, complement, conjugate, enumerate_box, log_pochhammer
from .symfunc import log_schur_principal

__all__ = [
    "AsymptoticRegime",
    "REGIMES",
    "predict",
    "exact",
    "exact_moment_noninteger",
    "exact_moment_integer",
    "convergence_report",
    "ConvergenceRow",
    "lse_top_cdf",
    "two_point_prediction",
    "two_point_check",
    "TwoPointReport",
]

REGIMES = ("RealBulk", "RealEdge", "ComplexBulk", "ComplexEdge", "IntegerMoment",
           "NonIntegerMoment", "TwoPoint")
LOG_2PI = math.log(2 * math.pi)
EXACT_DPS = 30


@dataclass(frozen=True)
class AsymptoticRegime:
    """Scaling regime and its fixed data.

    Parameters
    ----------
    regime : str
        One of :data:`REGIMES`.
    x : complex
        Base point: real ``x`` for ``RealBulk``, ``IntegerMoment`` and
        ``TwoPoint``; non-real ``z`` for the complex regimes (``|z| < 1`` in
        the bulk, ``|z| = 1`` at the edge). Ignored at the real edge.
    zeta, xi : tuple
        Microscopic offsets. Real regimes use ``2k`` offsets ``zeta``;
        complex regimes ``k`` each of ``zeta`` and ``xi``; ``TwoPoint`` one each.
    k : int
        Moment order for ``IntegerMoment``.
    gamma : float
        Exponent for ``NonIntegerMoment``.
    k1, k2 : int
        Exponents for ``TwoPoint``.
    """

    regime: str
    x: complex = 0.0
    zeta: tuple = ()
    xi: tuple = ()
    k: int | None = None
    gamma: float | None = None
    k1: int | None = None
    k2: int | None = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        object.__setattr__(self, "zeta", tuple(complex(c) for c in self.zeta))
        object.__setattr__(self, "xi", tuple(complex(c) for c in self.xi))
        object.__setattr__(self, "x", complex(self.x))
        r = self.regime
        x = self.x
        if r in ("RealBulk", "IntegerMoment", "TwoPoint"):
            if x.imag != 0 or not abs(x.real) < 1:
                raise ValueError(f"{r} needs a real base point in (-1, 1)")
        if r in ("ComplexBulk", "ComplexEdge"):
            if x.imag == 0:
                raise ValueError(f"{r} needs a non-real base point")
            if r == "ComplexBulk" and not abs(x) < 1:
                raise ValueError("ComplexBulk needs |z| < 1")
            if r == "ComplexEdge" and abs(abs(x) - 1) > 1e-12:
                raise ValueError("ComplexEdge needs |z| = 1")
            if len(self.zeta) != len(self.xi) or not self.zeta:
                raise ValueError(f"{r} needs k offsets zeta and k offsets xi")
        if r in ("RealBulk", "RealEdge"):
            if not self.zeta or len(self.zeta) % 2:
                raise ValueError(f"{r} needs an even, positive number of offsets")
        if r in ("RealEdge", "ComplexEdge"):
            if any(c.imag != 0 for c in self.zeta + self.xi):
                raise ValueError("edge regimes take real offsets only")
        if r == "IntegerMoment" and (self.k is None or int(self.k) != self.k or self.k < 1):
            raise ValueError("IntegerMoment needs an integer k >= 1")
        if r == "NonIntegerMoment":
            if self.gamma is None or not self.gamma > -0.5:
                raise ValueError("NonIntegerMoment needs gamma > -1/2")
            if x != 0:
                raise ValueError("NonIntegerMoment is asserted at x = 0 only")
        if r == "TwoPoint":
            if len(self.zeta) != 1 or len(self.xi) != 1:
                raise ValueError("TwoPoint needs one offset zeta and one offset xi")
            if any(v is None or int(v) != v or v < 1 for v in (self.k1, self.k2)):
                raise ValueError("TwoPoint needs integers k1, k2 >= 1")
            if any(c.imag != 0 for c in self.zeta + self.xi) or self.zeta == self.xi:
                raise ValueError("TwoPoint needs distinct real offsets")

    @property
    def order(self) -> int:
        """Number of characteristic polynomial pairs."""
        if self.regime in ("RealBulk", "RealEdge"):
            return len(self.zeta) // 2
        if self.regime in ("ComplexBulk", "ComplexEdge"):
            return len(self.zeta)
        if self.regime == "IntegerMoment":
            return int(self.k)
        if self.regime == "TwoPoint":
            return int(self.k1 + self.k2)
        raise ValueError("non-integer moments have no integer order")

    def points(self, N: int) -> list[complex]:
        """Macroscopic points ``z_j`` at size ``N``."""
        s = math.sqrt(N)
        r = self.regime
        if r == "RealBulk":
            return [self.x + c / s for c in self.zeta]
        if r == "RealEdge":
            return [1 + c / s for c in self.zeta]
        if r == "ComplexBulk":
            z = self.x
            return [z + c / s for c in self.zeta] + [z.conjugate() + c / s for c in self.xi]
        if r == "ComplexEdge":
            z = self.x
            return ([z + c / (z.conjugate() * s) for c in self.zeta]
                    + [z.conjugate() + c / (z * s) for c in self.xi])
        raise ValueError(f"{r} has no distinct evaluation points")


def _pf_over_vdm(kernel, zeta: Sequence[complex]) -> LogComplex:
    z = np.array(zeta, dtype=np.complex128)
    n = len(z)
    A = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i + 1, n):
            A[i, j] = (z[j] - z[i]) * kernel(z[i], z[j])
            A[j, i] = -A[i, j]
    return pfaffian(A) / vandermonde(z)


def _check_offsets(v: Sequence[complex]) -> None:
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            if v[i] == v[j]:
                raise ValueError("predictor divides by a Vandermonde; offsets must be distinct")


def predict(regime: AsymptoticRegime, N: int) -> LogComplex:
    """Leading large-N asymptotic value of the normalized correlator or moment."""
    if N < 1:
        raise ValueError("N must be positive")
    r = regime.regime
    logN = math.log(N)
    sN = math.sqrt(N)
    if r == "RealBulk":
        k = regime.order
        x = regime.x.real
        _check_offsets(regime.zeta)
        shape = _pf_over_vdm(lambda a, b: np.exp(a * b), regime.zeta)
        expo = -N * k * (1 - x * x) + sN * x * sum(regime.zeta)
        return shape * LogComplex.from_complex(np.exp(1j * expo.imag)).scale(
            expo.real + (k * k - k / 2) * logN + k / 2 * LOG_2PI)
    if r == "RealEdge":
        k = regime.order
        _check_offsets(regime.zeta)
        shape = _pf_over_vdm(lambda a, b: sp.kernel_edge(a.real, b.real), regime.zeta)
        return shape.scale(sN * sum(regime.zeta).real + (k * k - k / 2) * logN + k / 2 * LOG_2PI)
    if r in ("ComplexBulk", "ComplexEdge"):
        k = regime.order
        z = regime.x
        _check_offsets(regime.zeta)
        _check_offsets(regime.xi)
        zeta = np.array(regime.zeta)
        xi = np.array(regime.xi)
        if r == "ComplexBulk":
            K = np.exp(np.outer(zeta, xi))
            expo = -N * k * (1 - abs(z) ** 2) + sN * np.sum(z.conjugate() * zeta + z * xi)
        else:
            K = sp.kernel_edge(xi.real[:, None], zeta.real[None, :]).T
            expo = sN * np.sum(zeta + xi)
        shape = determinant(K) / (vandermonde(zeta) * vandermonde(xi))
        pref = LogComplex.from_complex(2 * z.imag) ** (-k * (k - 1))
        return (shape * pref * LogComplex.from_complex(np.exp(1j * expo.imag))).scale(
            expo.real + k * k / 2 * logN + k / 2 * LOG_2PI)
    if r == "IntegerMoment":
        k = regime.order
        x = regime.x.real
        return LogComplex(-N * k * (1 - x * x) + (k * k - k / 2) * logN + k / 2 * LOG_2PI
                          - math.fsum(math.lgamma(2 * j + 1) for j in range(k)))
    if r == "NonIntegerMoment":
        g = float(regime.gamma)
        return LogComplex(-N * g + (g * g - g / 2) * math.log(N / 2) + g * LOG_2PI
                          + sp.log_barnes_g(0.5) - sp.log_barnes_g(g + 1) - sp.log_barnes_g(g + 0.5))
    return two_point_prediction(regime, N)


def exact_moment_noninteger(gamma: float, N: int) -> float:
    """``log E|det G_N|^{2 gamma}`` for even ``N`` from the Gamma product.

    Examples
    --------
    >>> round(math.exp(exact_moment_noninteger(1.0, 2)), 12)
    0.5
    """
    if not gamma > -0.5:
        raise ValueError("gamma must exceed -1/2")
    if N < 2 or N % 2:
        raise ValueError("N must be a positive even integer")
    j = np.arange(N) / 2
    terms = gammaln(gamma + 0.5 + j) - gammaln(0.5 + j)
    return math.fsum(terms.tolist()) + gamma * N * (math.log(2) - math.log(N))


def exact_moment_integer(k: int, x: float, N: int) -> float:
    """``log E|det(G_N - x)|^{2k}`` for even ``N`` and real ``x``.

    The character expansion at ``2k`` equal points ``sqrt(N) x`` has only
    positive terms, indexed by partitions ``eta`` in an ``N x k`` box; the
    Schur factor is the hook-content evaluation ``s_lam(1^{2k})``.
    """
    if N < 2 or N % 2:
        raise ValueError("N must be a positive even integer")
    if k < 1:
        raise ValueError("k must be positive")
    x = float(x)
    box = BoxShape(2 * k, N)
    logs = []
    lx = math.log(abs(x)) + 0.5 * math.log(N) if x != 0 else None
    for eta in enumerate_box(BoxShape(N, k)):
        mu = conjugate(Partition([2 * p for p in eta]))
        lam = complement(mu, box)
        size = sum(lam)
        if size and lx is None:
            continue
        lp, sgn = log_pochhammer(N / 2, 2, eta)
        if sgn == 0:
            continue
        s = (size * lx if size else 0.0) + log_schur_principal(lam, 2 * k) + sum(eta) * math.log(2) + lp
        logs.append(s)
    logs = np.array(logs)
    m = logs.max()
    return float(m + math.log(math.fsum(np.exp(logs - m).tolist())) - N * k * math.log(N))


def exact(regime: AsymptoticRegime, N: int) -> LogComplex:
    """Exact finite-N value matching :func:`predict`."""
    r = regime.regime
    if r == "NonIntegerMoment":
        return LogComplex(exact_moment_noninteger(float(regime.gamma), N))
    if r == "IntegerMoment":
        return LogComplex(exact_moment_integer(regime.order, regime.x.real, N))
    if r == "TwoPoint":
        return two_point_exact(regime, N)
    if N % 2:
        raise ValueError("exact real Ginibre values need even N")
    k = regime.order
    pts = [math.sqrt(N) * c for c in regime.points(N)]
    val = closed_form(CorrelatorSpec("ginoe", N, k, z=pts), dps=EXACT_DPS)
    return val.scale(-N * k * math.log(N))


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    exact: LogComplex
    predicted: LogComplex

    @property
    def ratio(self) -> complex:
        q = self.exact / self.predicted
        return q.to_complex()

    @property
    def error(self) -> float:
        return abs(self.ratio - 1)


@dataclass
class ConvergenceReport:
    regime: AsymptoticRegime
    rows: list = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        """Whether ``|ratio - 1|`` is non-increasing over the N grid."""
        errs = [r.error for r in self.rows]
        return all(b <= a for a, b in zip(errs, errs[1:]))

    def table(self) -> list[dict]:
        return [{"N": r.N, "ratio_re": r.ratio.real, "ratio_im": r.ratio.imag,
                 "abs_ratio_minus_1": r.error} for r in self.rows]


def convergence_report(regime: AsymptoticRegime, N_list: Sequence[int]) -> ConvergenceReport:
    """Exact-to-predicted ratios over an increasing grid of ``N``."""
    rep = ConvergenceReport(regime)
    for N in sorted(N_list):
        rep.rows.append(ConvergenceRow(N, exact(regime, N), predict(regime, N)))
    return rep


# two-point merging ----------------------------------------------------------------

def lse_top_cdf(k1: int, k2: int, x: float) -> float:
    """Distribution function of the largest eigenvalue of a small LSE.

    The ensemble has ``n = min(k1, k2)`` eigenvalues with density
    proportional to ``prod lam^a e^{-lam} |Delta(lam)|^4`` on ``(0, inf)`` and
    ``a = 2 |k1 - k2| + 1``. For ``n <= 2`` the probability of ``[0, x]^n``
    factorizes into regularized incomplete gamma functions after expanding
    the Vandermonde power.

    Examples
    --------
    >>> round(lse_top_cdf(1, 1, 2.0), 12) == round(1 - 3 * math.exp(-2.0), 12)
    True
    """
    if k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    n = min(k1, k2)
    a = 2 * abs(k1 - k2) + 1
    if n == 1:
        return float(gammainc(a + 1, x))
    if n > 2:
        raise NotImplementedError("lse_top_cdf supports min(k1, k2) <= 2")
    if math.isinf(x):
        return 1.0
    # (l1 - l2)^4 = sum_m C(4, m) (-1)^m l1^m l2^(4-m)
    num = []
    den = []
    for m in range(5):
        c = math.comb(4, m) * (-1) ** m
        g1 = gammaln(a + m + 1)
        g2 = gammaln(a + 5 - m)
        den.append(c * math.exp(g1 + g2))
        num.append(c * math.exp(g1 + g2) * gammainc(a + m + 1, x) * gammainc(a + 5 - m, x))
    return float(min(1.0, max(0.0, math.fsum(num) / math.fsum(den))))


def two_point_prediction(regime: AsymptoticRegime, N: int) -> LogComplex:
    """``|x - y|^{-4 k1 k2} F(N (x - y)^2)`` with ``x - y = (zeta - xi)/sqrt(N)``."""
    k1, k2 = int(regime.k1), int(regime.k2)
    gap = abs(regime.zeta[0] - regime.xi[0]) / math.sqrt(N)
    F = lse_top_cdf(k1, k2, N * gap * gap)
    return LogComplex.from_complex(F).scale(-4 * k1 * k2 * math.log(gap))


def _two_point_points(regime: AsymptoticRegime, N: int) -> tuple[float, float]:
    s = math.sqrt(N)
    return regime.x.real + regime.zeta[0].real / s, regime.x.real + regime.xi[0].real / s


def two_point_exact(regime: AsymptoticRegime, N: int) -> LogComplex:
    """Exact finite-N moment ratio through the confluent closed form."""
    k1, k2 = int(regime.k1), int(regime.k2)
    x, y = _two_point_points(regime, N)
    s = math.sqrt(N)

    def merged(pts):
        k = len(pts) // 2
        return evaluate_confluent(CorrelatorSpec("ginoe", N, k, z=[s * p for p in pts]))

    num = merged([x] * (2 * k1) + [y] * (2 * k2))
    den = merged([x] * (2 * k1)) * merged([y] * (2 * k2))
    return num / den


@dataclass(frozen=True)
class TwoPointReport:
    ratio: MCEstimate
    prediction: float
    exact: float | None
    nse: float

    @property
    def zscore(self) -> float:
        return self.ratio.zscore(self.prediction)

    @property
    def passed(self) -> bool:
        return self.zscore <= self.nse


def two_point_check(k1: int, k2: int, x0: float, zeta: float, xi: float, N: int, n: int,
                    seed: int, nse: float = 5.0, workers: int | None = None,
                    with_exact: bool = True) -> TwoPointReport:
    """Monte Carlo of the two-point moment ratio against the LSE prediction.

    The three expectations share the same GinOE draws; the ratio's standard
    error follows from the delta method with their sample covariance.
    """
    reg = AsymptoticRegime("TwoPoint", x=x0, zeta=(zeta,), xi=(xi,), k1=k1, k2=k2)
    if n < 2:
        raise ValueError("n must be at least 2")
    x, y = _two_point_points(reg, N)
    s = math.sqrt(N)

    def chunk(c, count):
        G = sample_batch(EnsembleTag.GinOE, {"N": N}, seed, c, count, stream=5)[0] / s
        eye = np.eye(N)
        _, lx = np.linalg.slogdet(G - x * eye)
        _, ly = np.linalg.slogdet(G - y * eye)
        a = 2 * k1 * lx
        b = 2 * k2 * ly
        return np.stack([a, b], axis=1)

    logs = run_chunks(chunk, n, workers)
    # shift by the largest log so the products stay in range
    ca = float(logs[:, 0].max())
    cb = float(logs[:, 1].max())
    A = np.exp(logs[:, 0] - ca)
    B = np.exp(logs[:, 1] - cb)
    AB = A * B
    ma, mb, mab = A.mean(), B.mean(), AB.mean()
    ratio = mab / (ma * mb)
    # delta method for f(mab, ma, mb) = mab / (ma mb)
    grad = np.array([1 / (ma * mb), -mab / (ma * ma * mb), -mab / (ma * mb * mb)])
    cov = np.cov(np.stack([AB, A, B]), ddof=1) / n
    se = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    est = MCEstimate(complex(ratio), se, n, seed)
    pred = two_point_prediction(reg, N).to_complex().real
    ex = two_point_exact(reg, N).to_complex().real if with_exact else None
    return TwoPointReport(est, pred, ex, nse)
