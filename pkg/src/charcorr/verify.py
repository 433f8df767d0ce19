"""Verification suites behind ``charcorr verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` records. A check compares an
observed quantity with an expected one under a stated tolerance; for Monte
Carlo checks the error is a z-score and the tolerance a number of standard
errors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy.special import eval_legendre

from . import special as sp
from .asymptotics import AsymptoticRegime, convergence_report, predict, two_point_check
from .correlators import CorrelatorSpec, charsum, closed_form, duality_rhs, mc_correlator
from .ensembles import EnsembleTag, dual_heavy_volume
from .linalg import (cauchy_binet_sum, determinant, ishikawa_wakayama_sum, pfaffian)
from .measures import (PartitionMeasure, correlator_from_measure, direct_normalization,
                       group_integral_check, normalization, top_row_cdf)
from .partitions import (BoxShape, Partition, complement, conjugate, deformed_hooks, double,
                         enumerate_box, hook_product, pochhammer, repeat)
from .symfunc import dual_cauchy_check, schur_principal

__all__ = ["Check", "SUITES", "run_suite", "MC_NSE",
           "route_configs", "random_spec", "quadrature_dual_volume"]

MC_NSE = 5.0
EXACT_RTOL = 1e-9


@dataclass(frozen=True)
class Check:
    """One verification outcome.

    ``metric`` is ``"rel"`` (relative difference), ``"abs"``, ``"z"``
    (standard errors) or ``"exact"`` (0 when equal, 1 otherwise).
    """

    suite: str
    name: str
    observed: float
    expected: float
    error: float
    tolerance: float
    metric: str

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _rel(a: complex, b: complex) -> float:
    den = max(abs(a), abs(b))
    return abs(a - b) / den if den else 0.0


def _exact(suite: str, name: str, failures: int, total: int) -> Check:
    return Check(suite, name, float(total - failures), float(total), float(failures > 0), 0.0, "exact")


# identities ------------------------------------------------------------------------

def _mpq(q: Fraction):
    return mp.mpf(q.numerator) / q.denominator


_ALPHAS = (Fraction(1, 2), Fraction(1), Fraction(2))
_US = (Fraction(3), Fraction(9, 2), Fraction(7))


def _identity_checks(rng: np.random.Generator) -> list[Check]:
    S = "identities"
    out = []
    box44 = BoxShape(4, 4)
    parts44 = list(enumerate_box(box44))
    bad = sum(conjugate(conjugate(p)) != p or complement(complement(p, box44), box44) != p
              for p in parts44)
    out.append(_exact(S, "conjugate and complement are involutions (4x4 box)", bad, len(parts44)))

    box = BoxShape(3, 4)
    parts = list(enumerate_box(box))
    bad = n = 0
    for a in _ALPHAS:
        for u in _US:
            for p in parts:
                n += 1
                lhs = a ** (-p.weight()) * pochhammer(a * u, 1 / a, conjugate(p))
                rhs = (-1) ** p.weight() * pochhammer(-u, a, p)
                bad += lhs != rhs
    out.append(_exact(S, "coefficient reflection under conjugation", bad, n))

    # complement form, with 1/Gamma so that poles give exact zeros
    err = 0.0
    k, N = box.rows, box.cols
    with mp.workdps(30):
        for a in _ALPHAS:
            for u in _US:
                for p in parts:
                    pt = complement(p, box)
                    rhs = mp.mpf(-1) ** p.weight()
                    for j in range(1, k + 1):
                        rhs *= mp.gamma(_mpq(u + Fraction(j - 1) / a + 1))
                        rhs *= mp.rgamma(_mpq(pt.part(j - 1) + u - N + Fraction(k - j) / a + 1))
                    lhs = _mpq(pochhammer(-u, a, p))
                    err = max(err, _rel(complex(lhs), complex(rhs)))
    out.append(Check(S, "coefficient via complement partition", err, 0.0, err, 1e-12, "rel"))

    bad = n = 0
    for u in _US:
        for p in parts:
            n += 2
            bad += pochhammer(u, 1, double(p)) != 4 ** p.weight() * pochhammer(u / 2, 2, p) * pochhammer((u + 1) / 2, 2, p)
            bad += pochhammer(u, 1, repeat(p)) != pochhammer(u, Fraction(1, 2), p) * pochhammer(u - 1, Fraction(1, 2), p)
    out.append(_exact(S, "doubled and repeated hypergeometric coefficients", bad, n))

    bad = n = 0
    for p in parts:
        up2, lo2 = deformed_hooks(p, 2)
        uph, loh = deformed_hooks(p, Fraction(1, 2))
        n += 2 + len(_ALPHAS)
        bad += lo2 * up2 != hook_product(double(p))
        bad += 4 ** p.weight() * loh * uph != hook_product(repeat(p))
        for a in _ALPHAS:
            bad += deformed_hooks(conjugate(p), a)[0] != a ** p.weight() * deformed_hooks(p, 1 / a)[1]
    out.append(_exact(S, "deformed hook products", bad, n))

    bad = n = 0
    for N in (3, 4, 5):
        for p in enumerate_box(BoxShape(3, 3)):
            n += 1
            bad += Fraction(hook_product(p)) != pochhammer(N, 1, p) / schur_principal(p, N)
    out.append(_exact(S, "hook product from Schur at the identity", bad, n))

    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    y = rng.normal(size=3) + 1j * rng.normal(size=3)
    r = dual_cauchy_check(x, y)
    out.append(Check(S, "dual Cauchy identity k=N=3", r, 0.0, r, 1e-11, "rel"))

    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    A = A - A.T
    e = _rel((pfaffian(A) ** 2).to_complex(), determinant(A).to_complex())
    out.append(Check(S, "Pfaffian squared equals determinant", e, 0.0, e, 1e-10, "rel"))

    A = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    B = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    e = _rel(cauchy_binet_sum(A, B), determinant(A @ B).to_complex())
    out.append(Check(S, "Cauchy-Binet minor sum", e, 0.0, e, 1e-10, "rel"))

    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    A = A - A.T
    B = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
    e = _rel(ishikawa_wakayama_sum(B, A), pfaffian(B @ A @ B.T).to_complex())
    out.append(Check(S, "Ishikawa-Wakayama minor-Pfaffian sum", e, 0.0, e, 1e-10, "rel"))

    e = 0.0
    for k in (1, 2, 3):
        lhs = sp.log_barnes_g(k + 1) + sp.log_barnes_g(k + 0.5)
        rhs = (sp.log_barnes_g(0.5) + k / 2 * math.log(math.pi) + (k - k * k) * math.log(2)
               + math.fsum(math.lgamma(2 * j + 1) for j in range(k)))
        e = max(e, abs(lhs - rhs))
    out.append(Check(S, "Barnes G duplication", e, 0.0, e, 1e-12, "abs"))
    return out


# routes ------------------------------------------------------------------------------

ENSEMBLES = ("ginue", "ginoe", "ginse", "tue", "toe", "tse")


def random_spec(ensemble: str, N: int, k: int, rng: np.random.Generator, M: int | None = None) -> CorrelatorSpec:
    """``CorrelatorSpec`` with random points in the disc of radius 0.9."""
    def pts(m):
        r = 0.9 * np.sqrt(rng.uniform(size=m))
        return r * np.exp(2j * np.pi * rng.uniform(size=m))

    if ensemble in ("ginue", "tue"):
        return CorrelatorSpec(ensemble, N, k, z=pts(k), w=pts(k), M=M)
    return CorrelatorSpec(ensemble, N, k, z=pts(2 * k), M=M)


def route_configs() -> list[CorrelatorSpec]:
    """One small configuration per ensemble for the Monte Carlo routes."""
    return [
        CorrelatorSpec("ginue", 4, 2, z=[0.3 + 0.2j, -0.4], w=[0.5, 0.1 - 0.3j]),
        CorrelatorSpec("ginoe", 4, 1, z=[0.3, -0.5]),
        CorrelatorSpec("tue", 4, 1, z=[0.6], w=[0.5 + 0.2j], M=2),
        CorrelatorSpec("toe", 4, 1, z=[0.5, -0.4], M=2),
        CorrelatorSpec("ginse", 2, 1, z=[0.5, 0.3 + 0.2j]),
        CorrelatorSpec("tse", 2, 1, z=[0.5, 0.3 + 0.2j], M=1),
    ]


def omega_config() -> CorrelatorSpec:
    return CorrelatorSpec("ginue", 3, 1, z=[0.4], w=[0.6], omega=np.diag([1.0, 1.0, 0.5]))


def charsum_checks(reps: int, seed: int, Ns=range(2, 7), ks=(1, 2)) -> list[Check]:
    """Character sum against closed form, worst relative error per ensemble."""
    rng = np.random.default_rng(seed)
    out = []
    for e in ENSEMBLES:
        worst = 0.0
        count = 0
        for N in Ns:
            Ms = range(1, N) if e in ("tue", "toe", "tse") else [None]
            for M in Ms:
                for k in ks:
                    if e in ("ginoe", "toe") and N % 2:
                        continue
                    for _ in range(reps):
                        s = random_spec(e, N, k, rng, M)
                        worst = max(worst, charsum(s).rel_diff(closed_form(s)))
                        count += 1
        out.append(Check("routes", f"{e} charsum vs closed form ({count} cases)", worst, 0.0,
                         worst, EXACT_RTOL, "rel"))
    return out


def _z_check(suite, name, est, value) -> Check:
    return Check(suite, name, float(np.real(est.mean)), float(np.real(value)),
                 est.zscore(value), MC_NSE, "z")


def mc_route_checks(n: int, seed: int, workers=None, dual: bool = True) -> list[Check]:
    out = []
    for s in route_configs():
        cf = closed_form(s).to_complex()
        out.append(_z_check("routes", f"{s.ensemble} N={s.N} k={s.k} mc vs closed form",
                            mc_correlator(s, n, seed, workers), cf))
        if dual:
            out.append(_z_check("routes", f"{s.ensemble} N={s.N} k={s.k} dual vs closed form",
                                duality_rhs(s, n, seed, workers), cf))
    if dual:
        s = omega_config()
        m = mc_correlator(s, n, seed, workers)
        d = duality_rhs(s, n, seed, workers)
        se = math.hypot(m.stderr, d.stderr)
        z = abs(m.mean - d.mean) / se
        out.append(Check("routes", "ginue N=3 non-identity omega dual vs mc", float(np.real(d.mean)),
                         float(np.real(m.mean)), z, MC_NSE, "z"))
    return out


def _routes(seed: int, n: int, workers) -> list[Check]:
    return charsum_checks(3, seed) + mc_route_checks(n, seed, workers)


# normalization constants -------------------------------------------------------------

def quadrature_dual_volume(family: str, N: int) -> float:
    """Total mass of the ``k = 1`` heavy-tailed dual weight by quadrature.

    ``unitary`` and ``orthogonal`` reduce to ``pi * int_0^inf (1 + t)^(-N-2) dt``
    (the antisymmetric ``2 x 2`` case has ``XX^+ = |a|^2 I``). For the complex
    symmetric ``[[a, b], [b, c]]`` the diagonal phase freedom makes ``a`` and
    ``b`` real; the phase of ``c`` integrates to a Legendre function, leaving a
    triple integral over squared moduli.
    """
    if family in ("unitary", "orthogonal"):
        val, _ = integrate.quad(lambda t: (1 + t) ** (-N - 2), 0, np.inf, epsabs=0, epsrel=1e-13)
        return math.pi * val
    if family != "symplectic":
        raise ValueError(f"unknown family {family!r}")
    p = N + 3

    def f(ta, tb, tc):
        A = 1 + ta + 2 * tb + tc + ta * tc + tb * tb
        B = 2 * math.sqrt(ta * tc) * tb
        D = math.sqrt((A - B) * (A + B))
        return 2 * math.pi * D ** (-p) * eval_legendre(p - 1, A / D)

    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.nquad(f, [[0, np.inf]] * 3, opts={"epsrel": 1e-11, "epsabs": 0})
    # r dr = dt / 2 for each modulus; a and b carry a full 2 pi phase each
    return val * math.pi ** 2 / 2


_HEAVY_FAMILY = {"unitary": EnsembleTag.DualHeavyTUE, "orthogonal": EnsembleTag.DualHeavyTOE,
                 "symplectic": EnsembleTag.DualHeavyTSE}


def constant_checks(n: int, seed: int, workers=None, Ns=(2, 5)) -> list[Check]:
    out = []
    for fam in _HEAVY_FAMILY:
        for N in Ns:
            q = quadrature_dual_volume(fam, N)
            c = math.exp(sp.log_dual_volume(fam, N, 1))
            out.append(Check("constants", f"{fam} k=1 N={N} quadrature", q, c, _rel(q, c), 1e-8, "rel"))
    for fam, tag, N in (("unitary", _HEAVY_FAMILY["unitary"], 4), ("orthogonal", _HEAVY_FAMILY["orthogonal"], 4),
                        ("symplectic", _HEAVY_FAMILY["symplectic"], 4)):
        est = dual_heavy_volume(tag, {"N": N, "k": 2}, n, seed, workers)
        c = math.exp(sp.log_dual_volume(fam, N, 2))
        out.append(_z_check("constants", f"{fam} k=2 N={N} importance sampling", est, c))
    return out


# measures ----------------------------------------------------------------------------

def random_measure(ensemble: str, k: int, rng: np.random.Generator, d: int | None = None) -> PartitionMeasure:
    trunc = ensemble in ("tue", "toe")
    hi = 0.9 if trunc else 2.0
    m = 2 * k if ensemble in ("ginoe", "toe") else k
    z = rng.uniform(0.1, hi, m)
    w = () if ensemble in ("ginoe", "toe") else rng.uniform(0.1, hi, k)
    return PartitionMeasure(ensemble, k, z, w, d)


def measure_identity_checks(seed: int, Ns=(2, 4, 6)) -> list[Check]:
    """Normalization and ``Z * C * P(eta_1 <= L)`` against the closed forms."""
    rng = np.random.default_rng(seed)
    out = []
    for e in ("ginue", "tue", "ginoe", "toe"):
        trunc = e in ("tue", "toe")
        for k in (1, 2):
            worst_z = worst_c = 0.0
            for N in Ns:
                Ms = range(1, N) if trunc else [None]
                for M in Ms:
                    m = random_measure(e, k, rng, (N - M) if trunc else None)
                    a, b = normalization(m), direct_normalization(m)
                    worst_z = max(worst_z, abs(math.expm1(a - b)))
                    spec = CorrelatorSpec(e, N, k, z=m.z, w=m.w or None, M=M)
                    worst_c = max(worst_c, correlator_from_measure(m, N, M).rel_diff(closed_form(spec)))
            out.append(Check("measures", f"{e} k={k} normalization direct vs closed", worst_z, 0.0,
                             worst_z, EXACT_RTOL, "rel"))
            out.append(Check("measures", f"{e} k={k} correlator from top-row law", worst_c, 0.0,
                             worst_c, EXACT_RTOL, "rel"))
    return out


def _measures(seed: int, n: int, workers) -> list[Check]:
    out = measure_identity_checks(seed)
    rng = np.random.default_rng(seed)
    bad = 0
    for e in ("ginue", "tue", "ginoe", "toe"):
        m = random_measure(e, 2, rng, 1 if e in ("tue", "toe") else None)
        c = [top_row_cdf(m, L) for L in range(-1, 12)]
        bad += any(b < a for a, b in zip(c, c[1:])) or c[0] != 0.0
    out.append(_exact("measures", "top-row CDF monotone and zero below the empty box", bad, 4))
    for kind, p in (("hciz", {"z": [0.3, 0.8], "w": [0.5, 1.1]}),
                    ("orlov", {"z": [0.3, 0.8], "w": [0.5, 0.6], "d": 2}),
                    ("cse-exp", {"z": [0.3, 0.8, 0.5, 1.1]}),
                    ("cse-det", {"z": [0.3, 0.8, 0.5, 0.6], "d": 1})):
        r = group_integral_check(kind, p, n, seed, workers)
        out.append(_z_check("measures", f"{kind} k=2 group integral", r.estimate, r.prediction))
    return out


# asymptotics -------------------------------------------------------------------------

def asymptotic_cases() -> list[tuple[AsymptoticRegime, list[int], float]]:
    """Regimes with their N grid and the threshold on ``|ratio - 1|`` at the largest N."""
    big = [50, 100, 200]
    mid = [20, 50, 100]
    return [
        (AsymptoticRegime("RealBulk", x=0.3, zeta=(0.2, -0.1)), big, 0.05),
        (AsymptoticRegime("RealEdge", zeta=(0.1, 0.4)), big, 0.05),
        (AsymptoticRegime("ComplexBulk", x=0.3 + 0.4j, zeta=(0.2,), xi=(-0.1,)), big, 0.05),
        (AsymptoticRegime("IntegerMoment", x=0.3, k=1), big, 0.05),
        (AsymptoticRegime("IntegerMoment", x=0.3, k=2), big, 0.05),
        (AsymptoticRegime("NonIntegerMoment", gamma=0.5), mid, 0.02),
        (AsymptoticRegime("NonIntegerMoment", gamma=0.7), mid, 0.02),
        (AsymptoticRegime("NonIntegerMoment", gamma=1.3), mid, 0.02),
    ]


def asymptotic_checks() -> list[Check]:
    S = "asymptotics"
    out = []
    for reg, grid, tol in asymptotic_cases():
        rep = convergence_report(reg, grid)
        last = rep.rows[-1]
        label = f"{reg.regime} " + (f"k={reg.k} " if reg.k else "") + (
            f"gamma={reg.gamma} " if reg.gamma is not None else "")
        out.append(Check(S, f"{label}|ratio-1| at N={last.N}", last.ratio.real, 1.0, last.error, tol, "abs"))
        out.append(_exact(S, f"{label}error non-increasing over N={grid}", int(not rep.monotone), 1))
    e = 0.0
    for k in (1, 2, 3):
        for N in (10, 100):
            a = predict(AsymptoticRegime("IntegerMoment", x=0.0, k=k), N)
            b = predict(AsymptoticRegime("NonIntegerMoment", gamma=float(k)), N)
            e = max(e, abs(a.log_magnitude - b.log_magnitude))
    out.append(Check(S, "integer and non-integer moment predictors agree at gamma=k", e, 0.0, e, 1e-10, "abs"))
    return out


def two_point_checks(n: int, seed: int, workers=None) -> list[Check]:
    r = two_point_check(1, 1, 0.0, 1.0, -1.0, 50, n, seed, nse=MC_NSE, workers=workers)
    return [Check("asymptotics", "two-point moment ratio k1=k2=1 N=50", float(r.ratio.mean.real),
                  r.prediction, r.zscore, MC_NSE, "z")]


def _asymptotics(seed: int, n: int, workers) -> list[Check]:
    return asymptotic_checks() + two_point_checks(n, seed, workers)


# dispatch ----------------------------------------------------------------------------

SUITES: dict[str, Callable[[int, int, object], list[Check]]] = {
    "identities": lambda seed, n, workers: _identity_checks(np.random.default_rng(seed)),
    "routes": _routes,
    "constants": lambda seed, n, workers: constant_checks(n, seed, workers),
    "measures": _measures,
    "asymptotics": _asymptotics,
}


def run_suite(name: str, seed: int = 12345, n: int = 20000, workers=None) -> list[Check]:
    """Run one suite, or every suite for ``name="all"``."""
    if name == "all":
        return [c for key in SUITES for c in SUITES[key](seed, n, workers)]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES) + ['all']}")
    return SUITES[name](seed, n, workers)
