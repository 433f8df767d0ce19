"""Probability measures on partitions attached to the correlators.

For positive parameters the Schur weights of the character expansions are
nonnegative and, once normalized, define a measure on partitions. The
correlator then equals a normalization constant times an explicit factorial
constant times the probability that the top row fits in the box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .correlators import CheckResult
from .ensembles import EnsembleTag, run_chunks, sample_batch, symplectic_form
from .ensembles import MCEstimate, chunk_rng
from .linalg import LogComplex, determinant, pfaffian, vandermonde
from .partitions import BoxShape, Partition, count_box, enumerate_box, repeat
from .symfunc import schur_many

__all__ = [
    "PartitionMeasure",
    "normalization",
    "direct_normalization",
    "top_row_cdf",
    "log_box_constant",
    "correlator_from_measure",
    "sample_partition",
    "sample_partitions",
    "group_integral_check",
    "TAIL_RTOL",
]

TAIL_RTOL = 1e-12
MAX_SUPPORT = 10 ** 7
_KINDS = ("ginue", "tue", "ginoe", "toe")


@dataclass(frozen=True)
class PartitionMeasure:
    """Partition measure with Schur weights.

    Parameters
    ----------
    ensemble : {"ginue", "tue", "ginoe", "toe"}
    k : int
    z : sequence of float
        ``k`` values for complex ensembles, ``2k`` for real ones.
    w : sequence of float, optional
        ``k`` values, complex ensembles only.
    d : int, optional
        ``N - M`` for truncations.

    Complex ensembles weight every partition with at most ``k`` parts;
    real ensembles weight only partitions with even conjugate (rows repeated
    in pairs), with at most ``2k`` parts. Parameters must be positive, and
    lie in ``(0, 1)`` for truncations.
    """

    ensemble: str
    k: int
    z: tuple
    w: tuple = ()
    d: int | None = None

    def __post_init__(self):
        e = str(EnsembleTag.parse(self.ensemble).value)
        if e not in _KINDS:
            raise ValueError(f"no partition measure for {self.ensemble!r}")
        object.__setattr__(self, "ensemble", e)
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        z = tuple(float(x) for x in self.z)
        w = tuple(float(x) for x in self.w)
        nz = self.k if e in ("ginue", "tue") else 2 * self.k
        if len(z) != nz:
            raise ValueError(f"{e} measure needs {nz} z parameters")
        if e in ("ginue", "tue"):
            if len(w) != self.k:
                raise ValueError(f"{e} measure needs {self.k} w parameters")
        elif w:
            raise ValueError(f"{e} measure takes no w parameters")
        hi = 1.0 if e in ("tue", "toe") else math.inf
        if any(not (0 < x < hi) for x in z + w):
            rng = "(0, 1)" if hi == 1.0 else "(0, inf)"
            raise ValueError(f"{e} measure parameters must lie in {rng}")
        if e in ("tue", "toe"):
            if self.d is None or int(self.d) != self.d or self.d < 0:
                raise ValueError("truncated measures need d = N - M >= 0")
            object.__setattr__(self, "d", int(self.d))
        elif self.d is not None:
            raise ValueError(f"{e} measure takes no d")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    @property
    def real(self) -> bool:
        return self.ensemble in ("ginoe", "toe")

    def log_weights(self, parts: list[Partition]) -> np.ndarray:
        """Unnormalized log weights of partitions in the support."""
        k, d = self.k, self.d
        lg = math.lgamma
        out = np.empty(len(parts))
        if not parts:
            return out
        sz = schur_many(parts, self.z).real
        sw = schur_many(parts, self.w).real if not self.real else None
        for i, p in enumerate(parts):
            if self.real:
                rows = [p.part(2 * j - 1) + 2 * (k - j) for j in range(1, k + 1)]
            else:
                rows = [p.part(j - 1) + k - j for j in range(1, k + 1)]
            s = -sum(lg(r + 1) for r in rows)
            if d is not None:
                s += sum(lg(r + d + 1) for r in rows)
            v = sz[i] if sw is None else sz[i] * sw[i]
            out[i] = s + math.log(v) if v > 0 else -math.inf
        return out

    def column(self, L: int) -> list[Partition]:
        """Support partitions whose first part equals ``L``."""
        return [p for p in self._box(L) if p.part(0) == L]

    def _box(self, L: int) -> Iterator[Partition]:
        if self.real:
            for q in enumerate_box(BoxShape(self.k, L)):
                yield repeat(q)
        else:
            yield from enumerate_box(BoxShape(self.k, L))

    def box(self, L: int) -> list[Partition]:
        """Support partitions with first part at most ``L``."""
        if count_box(BoxShape(self.k, L)) > MAX_SUPPORT:
            raise ValueError("box too large to enumerate")
        return list(self._box(L))


def normalization(m: PartitionMeasure) -> float:
    """Log of the normalization constant in closed form.

    Raises
    ------
    ValueError
        If parameters coincide.
    """
    z = np.array(m.z)
    d = m.d
    if len(set(m.z)) < len(m.z) or len(set(m.w)) < len(m.w):
        raise ValueError("closed-form normalization needs distinct parameters")
    if not m.real:
        w = np.array(m.w)
        if m.ensemble == "ginue":
            K = np.exp(np.outer(z, w))
            pre = 0.0
        else:
            K = (1 - np.outer(z, w)) ** (-(d + 1))
            pre = m.k * math.lgamma(d + 1)
        val = determinant(K) / (vandermonde(z) * vandermonde(w))
    else:
        dz = z[None, :] - z[:, None]
        zz = np.outer(z, z)
        if m.ensemble == "ginoe":
            A = dz * np.exp(zz)
            pre = 0.0
        else:
            A = dz * (1 - zz) ** (-(d + 1))
            pre = m.k * math.lgamma(d + 1)
        val = pfaffian(A) / vandermonde(z)
    if val.is_zero() or abs(val.phase - 1) > 1e-8:
        raise ValueError("normalization is not positive; check the parameters")
    return val.log_magnitude + pre


def _accumulate(m: PartitionMeasure, L_max: int | None = None):
    """Column masses ``c_L`` (log-scaled to a common reference) until the tail is negligible."""
    cols: list[np.ndarray] = []
    parts: list[list[Partition]] = []
    total = 0.0
    ref = None
    L = 0
    small = 0
    while True:
        col = m.column(L)
        lw = m.log_weights(col)
        if ref is None:
            ref = float(lw.max())
        w = np.exp(lw - ref)
        cols.append(w)
        parts.append(col)
        mass = float(w.sum())
        total += mass
        done = L_max is not None and L >= L_max
        if L_max is None:
            # the column masses eventually decay faster than geometrically;
            # stop after two successive negligible columns
            small = small + 1 if mass < TAIL_RTOL * total else 0
            done = small >= 2
        if done:
            return parts, cols, ref
        L += 1
        if count_box(BoxShape(m.k, L)) > MAX_SUPPORT:
            raise ValueError("adaptive cutoff exceeded the enumeration limit")


def direct_normalization(m: PartitionMeasure) -> float:
    """Log normalization by summing weights up to an adaptive cutoff."""
    _, cols, ref = _accumulate(m)
    return ref + math.log(math.fsum(float(c.sum()) for c in cols))


def top_row_cdf(m: PartitionMeasure, L: int) -> float:
    """``P(eta_1 <= L)``; zero for negative ``L``."""
    if L < 0:
        return 0.0
    parts, cols, ref = _accumulate(m)
    total = math.fsum(float(c.sum()) for c in cols)
    if L >= len(cols):
        return 1.0
    return min(1.0, math.fsum(float(c.sum()) for c in cols[:L + 1]) / total)


def log_box_constant(m: PartitionMeasure, N: int, M: int | None = None) -> float:
    """Log of the factorial constant between the correlator and ``Z * P``."""
    k = m.k
    lg = math.lgamma
    if m.ensemble == "ginue":
        return math.fsum(lg(N + j) for j in range(1, k + 1))
    if m.ensemble == "ginoe":
        return math.fsum(lg(N + 2 * j - 1) for j in range(1, k + 1))
    if M is None or N - M != m.d:
        raise ValueError("truncated measures need M with N - M = d")
    if m.ensemble == "tue":
        return math.fsum(lg(M + j) - lg(N + j) for j in range(1, k + 1))
    return math.fsum(lg(M + 2 * j - 1) - lg(N + 2 * j - 1) for j in range(1, k + 1))


def correlator_from_measure(m: PartitionMeasure, N: int, M: int | None = None) -> LogComplex:
    """``Z * C * P(eta_1 <= L)`` with ``L = N`` (``L = M`` for truncations)."""
    if m.ensemble in ("ginoe", "toe") and N % 2:
        raise ValueError("real ensembles need even N")
    L = M if m.ensemble in ("tue", "toe") else N
    p = top_row_cdf(m, L)
    return LogComplex.from_complex(p).scale(normalization(m) + log_box_constant(m, N, M))


@lru_cache(maxsize=32)
def _support_table(m: PartitionMeasure):
    # cached: the table is immutable and measures are hashable
    parts, cols, _ = _accumulate(m)
    flat = [p for col in parts for p in col]
    w = np.concatenate(cols)
    cdf = np.cumsum(w)
    return flat, cdf / cdf[-1]


def sample_partitions(m: PartitionMeasure, n: int, seed: int) -> list[Partition]:
    """``n`` independent draws by inverse CDF over the truncated support."""
    flat, cdf = _support_table(m)
    u = chunk_rng(seed, 900, 0).random(n)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(flat) - 1)
    return [flat[i] for i in idx]


def sample_partition(m: PartitionMeasure, rng: np.random.Generator) -> Partition:
    flat, cdf = _support_table(m)
    i = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(flat) - 1)
    return flat[i]


# group integrals -------------------------------------------------------------

def _plain(vals, n, seed) -> MCEstimate:
    mean = complex(np.mean(vals))
    se = math.sqrt(float(np.sum(np.abs(vals - mean) ** 2)) / (n - 1) / n)
    return MCEstimate(mean, se, n, seed)


def group_integral_check(kind: str, params: dict, n: int, seed: int,
                         workers: int | None = None) -> CheckResult:
    """MC of a group integral against its determinant or Pfaffian form.

    ``kind`` and ``params``:

    * ``"hciz"``: ``z, w`` (length ``k``); ``E exp Tr(U Z U^+ W)`` over ``U(k)``.
    * ``"orlov"``: ``z, w, d``; ``E det(I - U Z U^+ W)^(-(d + k))``.
    * ``"cse-exp"``: ``z`` (length ``2k``); ``E exp(Tr(U Z U^+ Z^D) / 2)``
      over the circular symplectic ensemble.
    * ``"cse-det"``: ``z, d``; ``E det(I - U Z U^+ Z^D)^(-(d + 2k - 1)/2)``.

    ``Z^D = J^{-1} Z^T J`` swaps the two halves of the diagonal.
    """
    z = np.asarray(params["z"], dtype=float)
    d = params.get("d")
    if kind in ("hciz", "orlov"):
        w = np.asarray(params["w"], dtype=float)
        k = len(z)
        if len(w) != k:
            raise ValueError("z and w must have the same length")
        if k > 3:
            raise ValueError("group integral checks are limited to k <= 3")
        tag, dims = EnsembleTag.HaarU, {"N": k}
        ens = "ginue" if kind == "hciz" else "tue"
        meas = PartitionMeasure(ens, k, z, w, d if kind == "orlov" else None)
        const = math.fsum(math.lgamma(l + 1) for l in range(k))
        if kind == "orlov":
            const = math.fsum(math.lgamma(d + l + 1) - math.lgamma(l + 1) for l in range(k))
        W = np.diag(w)
    elif kind in ("cse-exp", "cse-det"):
        if len(z) % 2:
            raise ValueError("CSE integrals take 2k parameters")
        k = len(z) // 2
        if k > 3:
            raise ValueError("group integral checks are limited to k <= 3")
        tag, dims = EnsembleTag.CSE, {"k": k}
        ens = "ginoe" if kind == "cse-exp" else "toe"
        meas = PartitionMeasure(ens, k, z, (), d if kind == "cse-det" else None)
        if kind == "cse-exp":
            const = -math.fsum(math.lgamma(2 * j + 1) for j in range(k))
        else:
            const = math.fsum(math.lgamma(d + 2 * j + 1) - math.lgamma(2 * j + 1) for j in range(k))
        J = symplectic_form(k)
        W = -J @ np.diag(z).T @ J
    else:
        raise ValueError(f"unknown group integral {kind!r}")
    Z = np.diag(z)
    logZ = normalization(meas)
    if kind == "hciz":
        pred = math.exp(logZ + const)
    else:
        pred = math.exp(logZ - const)
    size = Z.shape[0]

    def chunk(c, count):
        U = sample_batch(tag, dims, seed, c, count, stream=4)[0]
        A = U @ Z @ np.conj(np.swapaxes(U, -1, -2)) @ W
        if kind == "hciz":
            return np.exp(np.trace(A, axis1=1, axis2=2))
        if kind == "cse-exp":
            return np.exp(np.trace(A, axis1=1, axis2=2) / 2)
        sign, la = np.linalg.slogdet(np.eye(size) - A)
        if kind == "orlov":
            return np.exp(-(d + k) * (la + np.log(sign)))
        # the spectrum of A is Kramers degenerate, so det(I - A) is the square
        # of a product over pairs and is real positive for parameters in (0, 1)
        return np.exp(-(d + 2 * k - 1) / 2 * la)

    vals = run_chunks(chunk, n, workers)
    return CheckResult(_plain(vals, n, seed), complex(pred))
