"""Averages of products of characteristic polynomials.

Four routes are provided for the six ensembles GinUE, TUE, GinOE, TOE,
GinSE and TSE:

* :func:`closed_form`: determinant or Pfaffian of a kernel matrix divided by
  Vandermonde determinants;
* :func:`charsum`: exact finite sum over partitions in a box, weighted by the
  Schur orthogonality constants of the ensemble;
* :func:`mc_correlator`: Monte Carlo of the defining average, the only route
  that accepts general sources ``Omega`` and ``Sigma``;
* :func:`duality_rhs`: Monte Carlo of the ``k``-dimensional dual integral.

Complex ensembles take ``k`` points ``z`` and ``k`` points ``w`` and average
``prod_j det(Omega G - z_j) det(Sigma G^+ - w_j)``. Real and quaternionic
ensembles take ``2k`` points ``z`` and average ``prod_j det(Omega G - z_j)``.
Quaternionic matrices are ``2N x 2N`` complex, so each factor is a degree
``2N`` polynomial.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath as mp
import numpy as np

from . import _kernels
from . import special as sp
from .ensembles import EnsembleTag, MCEstimate, dual_heavy_expectation, run_chunks, sample_batch
from .linalg import (
    LogComplex,
    NumericalError,
    determinant,
    mp_determinant,
    mp_pfaffian,
    pfaffian,
    vandermonde,
)
from .partitions import (
    BoxShape,
    Partition,
    complement,
    conjugate,
    count_box,
    enumerate_box,
    hook_product,
    pochhammer,
)
from .symfunc import schur_many, schur_of_matrices

__all__ = [
    "CorrelatorSpec",
    "CoincidentPointsError",
    "ExtrapolationError",
    "CheckResult",
    "closed_form",
    "charsum",
    "mc_correlator",
    "duality_rhs",
    "orthogonality_check",
    "splitting_check",
    "evaluate_confluent",
    "orthogonality_constant",
    "ENSEMBLES",
    "MIN_SEPARATION",
    "MAX_BOX_PARTITIONS",
]

ENSEMBLES = ("ginue", "tue", "ginoe", "toe", "ginse", "tse")
COMPLEX = ("ginue", "tue")
TRUNCATED = ("tue", "toe", "tse")
MIN_SEPARATION = 1e-8
MAX_BOX_PARTITIONS = 10 ** 7


class CoincidentPointsError(NumericalError):
    """Evaluation points closer than the Vandermonde division tolerates."""


class ExtrapolationError(NumericalError):
    """The confluent extrapolation did not settle."""


def _as_points(v) -> tuple[complex, ...]:
    if v is None:
        return ()
    if np.isscalar(v):
        v = [v]
    return tuple(complex(x) for x in v)


def _as_source(S, dim: int, name: str):
    if S is None:
        return None
    S = np.asarray(S, dtype=np.complex128)
    if S.ndim == 0:
        S = S * np.eye(dim)
    if S.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim} x {dim}, got shape {S.shape}")
    return S


@dataclass(frozen=True)
class CorrelatorSpec:
    """Parameters of a correlator.

    Parameters
    ----------
    ensemble : str
        One of ``ginue, tue, ginoe, toe, ginse, tse``.
    N : int
        Matrix size (quaternionic size for ``ginse``/``tse``).
    k : int
        Number of pairs (complex) or half the number of points (real, quaternion).
    z, w : sequence of complex
        Evaluation points; ``w`` only for complex ensembles.
    M : int, optional
        Truncation size.
    omega, sigma : array, optional
        Multiplicative sources; ``None`` means identity. ``sigma`` only for
        complex ensembles.
    """

    ensemble: str
    N: int
    k: int
    z: tuple = ()
    w: tuple = ()
    M: int | None = None
    omega: np.ndarray | None = field(default=None, compare=False)
    sigma: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        ens = str(EnsembleTag.parse(self.ensemble).value)
        if ens not in ENSEMBLES:
            raise ValueError(f"{self.ensemble!r} is not a correlator ensemble")
        object.__setattr__(self, "ensemble", ens)
        for name in ("N", "k"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if ens in TRUNCATED:
            if self.M is None:
                raise ValueError(f"{ens} needs the truncation size M")
            if int(self.M) != self.M or not (1 <= self.M <= self.N):
                raise ValueError(f"need 1 <= M <= N, got M={self.M}, N={self.N}")
            object.__setattr__(self, "M", int(self.M))
        elif self.M is not None:
            raise ValueError(f"{ens} takes no truncation size")
        if ens in ("ginoe", "toe") and self.N % 2:
            raise ValueError("real ensembles are supported for even N only")
        z = _as_points(self.z)
        w = _as_points(self.w)
        if ens in COMPLEX:
            if len(z) != self.k or len(w) != self.k:
                raise ValueError(f"{ens} needs k={self.k} points z and k points w")
        else:
            if len(z) != 2 * self.k:
                raise ValueError(f"{ens} needs 2k={2 * self.k} points z")
            if w:
                raise ValueError(f"{ens} takes no w points")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "omega", _as_source(self.omega, self.source_dim, "omega"))
        if self.sigma is not None and ens not in COMPLEX:
            raise ValueError(f"{ens} takes no sigma source")
        object.__setattr__(self, "sigma", _as_source(self.sigma, self.source_dim, "sigma"))

    @property
    def size(self) -> int:
        """Size of the averaged matrix (truncated size for truncations)."""
        return self.M if self.ensemble in TRUNCATED else self.N

    @property
    def source_dim(self) -> int:
        return 2 * self.size if self.ensemble in ("ginse", "tse") else self.size

    @property
    def identity_sources(self) -> bool:
        eye = np.eye(self.source_dim)
        return all(S is None or np.array_equal(S, eye) for S in (self.omega, self.sigma))

    def with_points(self, z, w=None) -> "CorrelatorSpec":
        return CorrelatorSpec(self.ensemble, self.N, self.k, tuple(z),
                              tuple(w) if w is not None else (), self.M, self.omega, self.sigma)

    def params(self) -> dict:
        d = {"N": self.N, "k": self.k, "z": [[c.real, c.imag] for c in self.z]}
        if self.w:
            d["w"] = [[c.real, c.imag] for c in self.w]
        if self.M is not None:
            d["M"] = self.M
        return d


def _require_identity(spec: CorrelatorSpec, route: str) -> None:
    if not spec.identity_sources:
        raise ValueError(f"{route} holds for identity sources only; use mc_correlator")


def _point_scale(pts) -> float:
    return max([1.0] + [abs(c) for c in pts])


def _check_distinct(pts: Sequence[complex], scale: float) -> None:
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) < MIN_SEPARATION * scale:
                raise CoincidentPointsError(
                    f"points {pts[i]} and {pts[j]} coincide; use evaluate_confluent")


# closed forms -----------------------------------------------------------------

def _log_prefactor(spec: CorrelatorSpec) -> float:
    N, k, M = spec.N, spec.k, spec.M
    lg = math.lgamma
    e = spec.ensemble
    if e == "ginue":
        return math.fsum(lg(N + j) for j in range(1, k + 1))
    if e == "tue":
        return math.fsum([lg(M + j) - lg(N + j) for j in range(1, k + 1)] + [k * lg(N - M + 1)])
    if e == "ginoe":
        return math.fsum(lg(N + 2 * j - 1) for j in range(1, k + 1))
    if e == "toe":
        return math.fsum([lg(M + 2 * j - 1) - lg(N + 2 * j - 1) for j in range(1, k + 1)]
                         + [k * lg(N - M + 1)])
    if e == "ginse":
        return math.fsum([lg(N + j / 2 + 0.5) for j in range(1, 2 * k + 1)]
                         + [k * sp.ginse_log_leading()])
    return math.fsum([lg(M + j / 2 + 0.5) - lg(N + j / 2 + 0.5) for j in range(1, 2 * k + 1)]
                     + [k * sp.tse_log_leading(N, M)])


def _kernel_entries(spec: CorrelatorSpec, a, b, scaled: bool):
    """Kernel values on the grids ``a`` (rows) and ``b`` (columns)."""
    N, k, M = spec.N, spec.k, spec.M
    e = spec.ensemble
    if e == "ginue":
        f = sp.kernel_incexp_scaled if scaled else sp.kernel_incexp
        return f(N + k, a, b)
    if e == "tue":
        return sp.kernel_trunc(N, M, M + k, a, b)
    if e == "ginoe":
        f = sp.kernel_incexp_scaled if scaled else sp.kernel_incexp
        return (b - a) * f(N + 2 * k - 1, a, b)
    if e == "toe":
        return (b - a) * sp.kernel_trunc(N, M, M + 2 * k - 1, a, b)
    if e == "ginse":
        return sp.kernel_ginse(N + k, a, b, normalized=True)
    return sp.kernel_tse(N, M, a, b, L=M + k, normalized=True)


def _uses_gaussian_scaling(spec) -> bool:
    return spec.ensemble in ("ginue", "ginoe")


def _closed_ratio_float(spec: CorrelatorSpec) -> LogComplex:
    z = np.array(spec.z)
    scaled = _uses_gaussian_scaling(spec)
    if spec.ensemble in COMPLEX:
        w = np.array(spec.w)
        K = _kernel_entries(spec, z[:, None], w[None, :], scaled)
        val = determinant(K) / (vandermonde(z) * vandermonde(w))
        if scaled:
            val = val.scale(float(np.sum(np.abs(z) ** 2 + np.abs(w) ** 2)) / 2)
        return val
    n = len(z)
    A = np.zeros((n, n), dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    A[iu] = _kernel_entries(spec, z[iu[0]], z[iu[1]], scaled)
    A = A - A.T
    val = pfaffian(A) / vandermonde(z)
    if scaled:
        val = val.scale(float(np.sum(np.abs(z) ** 2)) / 2)
    return val


def _mp_vandermonde(x):
    out = mp.mpc(1)
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out *= x[j] - x[i]
    return out


def _closed_ratio_mp(spec: CorrelatorSpec, z, w=None):
    """Kernel determinant or Pfaffian over Vandermonde in the current mp precision."""
    zo = np.array([mp.mpc(c) for c in z], dtype=object)
    if spec.ensemble in COMPLEX:
        wo = np.array([mp.mpc(c) for c in w], dtype=object)
        K = _kernel_entries(spec, zo[:, None], wo[None, :], False)
        num = mp_determinant(mp.matrix(K.tolist()))
        return num / (_mp_vandermonde(zo) * _mp_vandermonde(wo))
    n = len(zo)
    A = [[mp.mpc(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = np.asarray(_kernel_entries(spec, zo[i], zo[j], False), dtype=object).item()
            A[i][j] = v
            A[j][i] = -v
    return mp_pfaffian(A) / _mp_vandermonde(zo)


def _lc_from_mp(v) -> LogComplex:
    if v == 0:
        return LogComplex.zero()
    r = abs(v)
    ph = complex(v / r)
    return LogComplex(float(mp.log(r)), ph / abs(ph))


def closed_form(spec: CorrelatorSpec, dps: int | None = None) -> LogComplex:
    """Closed-form correlator for identity sources.

    Parameters
    ----------
    dps : int, optional
        Evaluate the kernel ratio in ``mpmath`` with this many digits. Useful
        when points are close and the Vandermonde division cancels digits.

    Raises
    ------
    CoincidentPointsError
        If two points of ``z`` (or of ``w``) are closer than
        ``MIN_SEPARATION * max(1, |points|)``.
    ValueError
        For non-identity sources.

    Examples
    --------
    >>> closed_form(CorrelatorSpec("ginue", 1, 1, z=[1], w=[1])).to_complex()
    (2+0j)
    """
    _require_identity(spec, "closed_form")
    scale = _point_scale(spec.z + spec.w)
    _check_distinct(spec.z, scale)
    _check_distinct(spec.w, scale)
    pref = LogComplex(_log_prefactor(spec))
    if dps is None:
        return pref * _closed_ratio_float(spec)
    with mp.workdps(dps):
        return pref * _lc_from_mp(_closed_ratio_mp(spec, spec.z, spec.w))


# character sums -----------------------------------------------------------------

def orthogonality_constant(ensemble: str, mu, N: int, M: int | None = None):
    """Expected Schur function attached to the complement ``mu``, as a Fraction.

    For complex ensembles this is ``E[s_mu(G) s_mu(G^+)]`` (zero off the
    diagonal); for real and quaternionic ones ``E[s_mu(G)]``. Returns zero when
    the partition is outside the support.
    """
    e = str(EnsembleTag.parse(ensemble).value)
    mu = Partition(mu)
    if e == "ginue":
        return Fraction(pochhammer(N, 1, mu))
    if e == "tue":
        if len(mu) > M:
            return Fraction(0)
        return Fraction(pochhammer(M, 1, mu)) / pochhammer(N, 1, mu)
    if e in ("ginoe", "toe"):
        if any(p % 2 for p in mu):
            return Fraction(0)
        eta = Partition([p // 2 for p in mu])
        if e == "ginoe":
            return 2 ** eta.weight() * Fraction(pochhammer(Fraction(N, 2), 2, eta))
        if len(mu) > M:
            return Fraction(0)
        return Fraction(pochhammer(Fraction(M, 2), 2, eta)) / pochhammer(Fraction(N, 2), 2, eta)
    if e in ("ginse", "tse"):
        parts = tuple(mu)
        if len(parts) % 2 or any(parts[i] != parts[i + 1] for i in range(0, len(parts), 2)):
            return Fraction(0)
        eta = Partition(parts[::2])
        if e == "ginse":
            return Fraction(pochhammer(2 * N, Fraction(1, 2), eta)) / 2 ** eta.weight()
        if len(mu) > 2 * M:
            return Fraction(0)
        return Fraction(pochhammer(2 * M, Fraction(1, 2), eta)) / pochhammer(2 * N, Fraction(1, 2), eta)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def _charsum_box(spec: CorrelatorSpec) -> BoxShape:
    k, e = spec.k, spec.ensemble
    if e == "ginue":
        return BoxShape(k, spec.N)
    if e == "tue":
        return BoxShape(k, spec.M)
    if e == "ginoe":
        return BoxShape(2 * k, spec.N)
    if e == "toe":
        return BoxShape(2 * k, spec.M)
    if e == "ginse":
        return BoxShape(2 * k, 2 * spec.N)
    return BoxShape(2 * k, 2 * spec.M)


def charsum(spec: CorrelatorSpec) -> LogComplex:
    """Exact partition sum for identity sources.

    ``sum_lambda s_lambda(z) [s_lambda(w)] c(mu')`` over the box, where
    ``mu`` is the complement of ``lambda`` in the box and ``c`` is
    :func:`orthogonality_constant`. Partitions outside the support of ``c``
    (odd conjugates for real ensembles, non-repeated ones for quaternionic
    ensembles) contribute zero.

    Raises
    ------
    ValueError
        If the box holds more than ``MAX_BOX_PARTITIONS`` partitions.
    """
    _require_identity(spec, "charsum")
    box = _charsum_box(spec)
    if count_box(box) > MAX_BOX_PARTITIONS:
        raise ValueError(f"box {box.rows}x{box.cols} is too large to enumerate")
    parts, weights = [], []
    for lam in enumerate_box(box):
        c = orthogonality_constant(spec.ensemble, conjugate(complement(lam, box)), spec.N, spec.M)
        if c:
            parts.append(lam)
            weights.append(float(c))
    weights = np.array(weights)
    terms = schur_many(parts, spec.z) * weights
    if spec.ensemble in COMPLEX:
        terms = terms * schur_many(parts, spec.w)
    return LogComplex.from_complex(complex(math.fsum(terms.real) + 1j * math.fsum(terms.imag)))


# Monte Carlo ----------------------------------------------------------------------

_MATRIX_TAG = {
    "ginue": EnsembleTag.GinUE,
    "tue": EnsembleTag.TUE,
    "ginoe": EnsembleTag.GinOE,
    "toe": EnsembleTag.TOE,
    "ginse": EnsembleTag.GinSE,
    "tse": EnsembleTag.TSE,
}


def _dims(spec) -> dict:
    d = {"N": spec.N}
    if spec.M is not None:
        d["M"] = spec.M
    return d


def _log_charpolys(A: np.ndarray, points) -> tuple[np.ndarray, np.ndarray]:
    """``sum_j log det(A - p_j)`` for a stack ``A`` as ``(log_abs, phase)``."""
    n, m, _ = A.shape
    eye = np.eye(m)
    la = np.zeros(n)
    ph = np.ones(n, dtype=np.complex128)
    for p in points:
        l, s = _kernels.batch_logdet(A - p * eye)
        la = la + l
        ph = ph * s
    return la, ph


def _plain_estimate(vals: np.ndarray, n: int, seed: int) -> MCEstimate:
    mean = complex(np.mean(vals))
    se = math.sqrt(float(np.sum(np.abs(vals - mean) ** 2)) / (n - 1) / n)
    return MCEstimate(mean, se, n, seed)


def _values(la, ph):
    with np.errstate(over="ignore", under="ignore"):
        return ph * np.exp(la)


def mc_correlator(spec: CorrelatorSpec, n: int, seed: int, workers: int | None = None,
                  stream: int = 0) -> MCEstimate:
    """Sample mean of the defining product of characteristic polynomials."""
    if n < 2:
        raise ValueError("n must be at least 2")
    tag = _MATRIX_TAG[spec.ensemble]
    dims = _dims(spec)

    def chunk(c, count):
        G = sample_batch(tag, dims, seed, c, count, stream)[0].astype(np.complex128)
        A = G if spec.omega is None else spec.omega @ G
        la, ph = _log_charpolys(A, spec.z)
        if spec.ensemble in COMPLEX:
            Gh = np.conj(np.swapaxes(G, -1, -2))
            B = Gh if spec.sigma is None else spec.sigma @ Gh
            l2, p2 = _log_charpolys(B, spec.w)
            la, ph = la + l2, ph * p2
        return _values(la, ph)

    return _plain_estimate(run_chunks(chunk, n, workers), n, seed)


def _grouped_eigs(spec: CorrelatorSpec, kind: str) -> list[tuple[complex, int]]:
    """Eigenvalues of the source product with multiplicities.

    ``kind`` is ``"os"`` (Omega Sigma), ``"ot"`` (Omega Omega^T) or ``"oh"``
    (Omega Omega^+, Kramers pairs merged).
    """
    dim = spec.source_dim
    if spec.omega is None and spec.sigma is None:
        return [(1.0 + 0j, dim // 2 if kind == "oh" else dim)]
    O = spec.omega if spec.omega is not None else np.eye(dim)
    if kind == "os":
        S = spec.sigma if spec.sigma is not None else np.eye(dim)
        ev = np.linalg.eigvals(O @ S)
    elif kind == "ot":
        ev = np.linalg.eigvals(O @ O.T)
    else:
        ev = np.linalg.eigvalsh(O @ O.conj().T)
        pairs = ev.reshape(-1, 2)
        tol = 1e-8 * max(1.0, float(np.abs(ev).max()))
        if np.abs(pairs[:, 0] - pairs[:, 1]).max() > tol:
            raise ValueError("omega has no quaternionic structure (unpaired singular values)")
        ev = pairs.mean(axis=1)
    out: dict[complex, int] = {}
    for a in ev:
        out[complex(a)] = out.get(complex(a), 0) + 1
    return list(out.items())


def _dual_values(spec: CorrelatorSpec, X: np.ndarray) -> np.ndarray:
    k = spec.k
    e = spec.ensemble
    z = np.array(spec.z)
    la = np.zeros(len(X))
    ph = np.ones(len(X), dtype=np.complex128)
    Xh = np.conj(np.swapaxes(X, -1, -2))
    if e in COMPLEX:
        w = np.array(spec.w)
        K = (X / z[:, None]) @ (Xh / w[:, None])
        base = spec.size * (np.sum(np.log(z.astype(complex))) + np.sum(np.log(w.astype(complex))))
        for a, mult in _grouped_eigs(spec, "os"):
            l, s = _kernels.batch_logdet(np.eye(k) + a * K)
            la, ph = la + mult * l, ph * s ** mult
        return _values(la, ph) * cmath.exp(base)
    if e in ("ginoe", "toe"):
        Z = np.diag(z)
        sign = (-1) ** k
        for a, mult in _grouped_eigs(spec, "ot"):
            r = cmath.sqrt(a)
            top = np.concatenate([r * X, np.broadcast_to(Z, X.shape)], axis=-1)
            bot = np.concatenate([np.broadcast_to(-Z, X.shape), r * Xh], axis=-1)
            l, s = _kernels.batch_logpf(np.concatenate([top, bot], axis=-2))
            la, ph = la + mult * l, ph * (sign * s) ** mult
        return _values(la, ph)
    K = (X / z[:, None]) @ (Xh / z[:, None])
    base = 2 * spec.size * np.sum(np.log(z.astype(complex)))
    for a, mult in _grouped_eigs(spec, "oh"):
        l, s = _kernels.batch_logdet(np.eye(2 * k) + a * K)
        la, ph = la + mult * l, ph * s ** mult
    return _values(la, ph) * cmath.exp(base)


_GAUSS_DUAL = {"ginue": EnsembleTag.DualGaussComplex, "ginoe": EnsembleTag.DualGaussAntisym,
               "ginse": EnsembleTag.DualGaussSym}
_HEAVY_DUAL = {"tue": EnsembleTag.DualHeavyTUE, "toe": EnsembleTag.DualHeavyTOE,
               "tse": EnsembleTag.DualHeavyTSE}


def duality_rhs(spec: CorrelatorSpec, n: int, seed: int, workers: int | None = None,
                stream: int = 0) -> MCEstimate:
    """Monte Carlo of the dual ``k``-dimensional integral.

    Gaussian duals (Ginibre ensembles) are sampled directly; the heavy-tailed
    duals of truncations use self-normalized importance sampling. For real
    ensembles each factor ``det(Z) det(I + a K)^{1/2}`` is evaluated as the
    polynomial branch ``(-1)^k Pf([[sqrt(a) X, Z], [-Z, sqrt(a) X^+]])``.

    Raises
    ------
    ValueError
        If an evaluation point is zero.
    ReliabilityError
        If importance sampling degenerates.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if any(c == 0 for c in spec.z + spec.w):
        raise ValueError("dual integrals need nonzero evaluation points")
    e = spec.ensemble
    if e in _GAUSS_DUAL:
        tag = _GAUSS_DUAL[e]

        def chunk(c, count):
            X = sample_batch(tag, {"k": spec.k}, seed, c, count, stream)[0]
            return _dual_values(spec, X)

        return _plain_estimate(run_chunks(chunk, n, workers), n, seed)
    return dual_heavy_expectation(_HEAVY_DUAL[e], {"N": spec.N, "k": spec.k},
                                  lambda X: _dual_values(spec, X), n, seed, workers, stream)


# spot checks ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    estimate: MCEstimate
    prediction: complex

    @property
    def zscore(self) -> float:
        return self.estimate.zscore(self.prediction)

    def passed(self, nse: float = 4.0) -> bool:
        return self.zscore <= nse


def orthogonality_check(ensemble: str, mu, lam, N: int, n: int, seed: int, M: int | None = None,
                        workers: int | None = None) -> CheckResult:
    """MC of a Schur average against its orthogonality constant.

    Complex ensembles: ``E[s_mu(G) s_lam(G^+)]``, predicted as
    ``delta_{mu lam} [N]_lam`` (``[M]_lam / [N]_lam`` for truncations).
    Real and quaternionic ensembles: ``E[s_lam(G)]`` (``mu`` is ignored).
    """
    e = str(EnsembleTag.parse(ensemble).value)
    mu, lam = Partition(mu), Partition(lam)
    tag = _MATRIX_TAG[e]
    dims = {"N": N} if M is None else {"N": N, "M": M}

    def chunk(c, count):
        G = sample_batch(tag, dims, seed, c, count, stream=2)[0].astype(np.complex128)
        v = schur_of_matrices(lam, G if e not in COMPLEX else np.conj(np.swapaxes(G, -1, -2)))
        if e in COMPLEX:
            v = v * schur_of_matrices(mu, G)
        return v

    est = _plain_estimate(run_chunks(chunk, n, workers), n, seed)
    if e in COMPLEX and mu != lam:
        pred = 0.0
    else:
        pred = float(orthogonality_constant(e, lam, N, M))
    return CheckResult(est, complex(pred))


def splitting_check(case: str, eta, A, B, n: int, seed: int, N: int | None = None,
                    workers: int | None = None) -> CheckResult:
    """MC of ``E_X s_eta(A X^+ B X)`` over a dual measure.

    ``case="gaussian"``: ``X`` complex Ginibre, prediction
    ``s_eta(A) s_eta(B) h_eta`` with ``h_eta`` the hook product.
    ``case="heavy"``: ``X`` with density ``det(I + XX^+)^(-N-2k)``,
    prediction ``s_eta(A) s_eta(B) h_eta / ((-1)^|eta| [-N]_eta)``.
    """
    eta = Partition(eta)
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError("A and B must be square of the same size")
    k = A.shape[0]
    sA = schur_many([eta], np.linalg.eigvals(A))[0] if k else 1.0
    sB = schur_many([eta], np.linalg.eigvals(B))[0] if k else 1.0
    base = sA * sB * hook_product(eta)

    def f(X):
        Xh = np.conj(np.swapaxes(X, -1, -2))
        return schur_of_matrices(eta, A @ Xh @ B @ X)

    if case == "gaussian":
        def chunk(c, count):
            return f(sample_batch(EnsembleTag.DualGaussComplex, {"k": k}, seed, c, count, stream=3)[0])

        est = _plain_estimate(run_chunks(chunk, n, workers), n, seed)
        return CheckResult(est, complex(base))
    if case == "heavy":
        if N is None:
            raise ValueError("the heavy-tailed case needs N")
        est = dual_heavy_expectation(EnsembleTag.DualHeavyTUE, {"N": N, "k": k}, f, n, seed,
                                     workers, stream=3)
        den = (-1) ** eta.weight() * pochhammer(-N, 1, eta)
        if den == 0:
            raise ValueError("(-1)^|eta| [-N]_eta vanishes for this eta")
        return CheckResult(est, complex(base / float(den)))
    raise ValueError(f"unknown splitting case {case!r}")


# confluent evaluation ----------------------------------------------------------------

def _groups(pts: Sequence[complex], tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, p in enumerate(pts):
        for g in groups:
            if abs(pts[g[0]] - p) < tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _split(pts, groups, eps: float):
    out = list(pts)
    for g in groups:
        m = len(g)
        if m == 1:
            continue
        c = pts[g[0]]
        for j, i in enumerate(g):
            out[i] = c + eps * cmath.exp(2j * math.pi * j / m)
    return out


def _error_exponents(sizes: list[int]) -> tuple[int, int]:
    # the error is a series in eps^s over sums of group sizes; the two
    # smallest such sums are among the sizes themselves and twice the minimum
    sizes = [s for s in sizes if s > 1]
    e1, e2 = sorted(set(sizes) | {2 * min(sizes)})[:2]
    return e1, e2


def evaluate_confluent(spec: CorrelatorSpec, eps: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                       dps: int = 50, rtol: float = 1e-5, return_error: bool = False):
    """Closed form at coincident points by splitting and extrapolation.

    Each group of ``m`` coincident points is replaced by ``c + eps * omega^j``
    with ``omega`` an ``m``-th root of unity. Symmetry makes the error a
    series in ``eps^m``, so the values at the three ``eps`` are combined by
    a Richardson step that removes the two leading error terms. The split
    evaluations run in ``mpmath`` with ``dps`` digits.

    Raises
    ------
    ExtrapolationError
        If the extrapolated value and its one-step estimate differ by more
        than ``rtol`` relative.
    """
    _require_identity(spec, "evaluate_confluent")
    scale = _point_scale(spec.z + spec.w)
    tol = MIN_SEPARATION * scale
    gz = _groups(spec.z, tol)
    gw = _groups(spec.w, tol) if spec.w else []
    sizes = [len(g) for g in gz + gw]
    if max(sizes) == 1:
        val = closed_form(spec)
        return (val, 0.0) if return_error else val
    e1, e2 = _error_exponents(sizes)
    eps = [float(x) * scale for x in eps]
    if len(eps) != 3:
        raise ValueError("the stencil needs three step sizes")
    with mp.workdps(dps):
        vals = []
        for h in eps:
            z = _split(spec.z, gz, h)
            w = _split(spec.w, gw, h) if spec.w else None
            vals.append(_closed_ratio_mp(spec, z, w))
        h = [mp.mpf(x) for x in eps]
        sol = mp.lu_solve(mp.matrix([[1, x ** e1, x ** e2] for x in h]), mp.matrix(vals))
        best = sol[0]
        one = mp.lu_solve(mp.matrix([[1, x ** e1] for x in h[1:]]), mp.matrix(vals[1:]))[0]
        err = float(abs(best - one) / abs(best)) if best != 0 else float(abs(one))
        if err > rtol:
            raise ExtrapolationError(f"confluent extrapolation error {err:.2e} exceeds {rtol:g}")
        val = LogComplex(_log_prefactor(spec)) * _lc_from_mp(best)
    return (val, err) if return_error else val
