"""Dense complex linear algebra with log-domain scalar returns.

Determinants and Pfaffians are returned as :class:`LogComplex` values so that
prefactors like ``(N + 2k)!`` never pass through linear scale. Batched
variants used by the Monte Carlo code live in :mod:`charcorr._kernels`.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "LogComplex",
    "determinant",
    "pfaffian",
    "vandermonde",
    "kron",
    "block2x2",
    "check_antisymmetric",
    "cauchy_binet_sum",
    "ishikawa_wakayama_sum",
    "pfaffian_by_pairings",
    "determinant_by_cofactors",
    "ANTISYMMETRY_RTOL",
    "NumericalError",
    "lc_sum",
    "mp_pfaffian",
    "mp_determinant",
]

ANTISYMMETRY_RTOL = 1e-10


class NumericalError(RuntimeError):
    """A computation could not deliver a trustworthy value."""


@dataclass(frozen=True)
class LogComplex:
    """A complex number stored as ``phase * exp(log_magnitude)``.

    Zero is encoded by ``log_magnitude = -inf`` and ``phase = 0``.
    """

    log_magnitude: float
    phase: complex = 1.0 + 0.0j

    @classmethod
    def from_complex(cls, c: complex) -> "LogComplex":
        c = complex(c)
        if c == 0:
            return cls.zero()
        r = abs(c)
        return cls(math.log(r), c / r)

    @classmethod
    def from_log(cls, log_abs: float, sign: complex = 1.0) -> "LogComplex":
        if sign == 0 or log_abs == -math.inf:
            return cls.zero()
        return cls(float(log_abs), complex(sign) / abs(sign))

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf, 0j)

    @classmethod
    def one(cls) -> "LogComplex":
        return cls(0.0, 1.0 + 0j)

    def is_zero(self) -> bool:
        return self.log_magnitude == -math.inf

    def to_complex(self) -> complex:
        if self.is_zero():
            return 0j
        try:
            return self.phase * math.exp(self.log_magnitude)
        except OverflowError:
            return complex(math.copysign(math.inf, self.phase.real) if self.phase.real else 0.0,
                           math.copysign(math.inf, self.phase.imag) if self.phase.imag else 0.0)

    def __complex__(self) -> complex:
        return self.to_complex()

    def __mul__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        if self.is_zero() or other.is_zero():
            return LogComplex.zero()
        return LogComplex(self.log_magnitude + other.log_magnitude, _unit(self.phase * other.phase))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogComplex":
        if not isinstance(other, LogComplex):
            other = LogComplex.from_complex(other)
        if other.is_zero():
            raise ZeroDivisionError("division by a zero LogComplex")
        if self.is_zero():
            return LogComplex.zero()
        return LogComplex(self.log_magnitude - other.log_magnitude, _unit(self.phase / other.phase))

    def __pow__(self, n: int) -> "LogComplex":
        n = int(n)
        if self.is_zero():
            return LogComplex.one() if n == 0 else LogComplex.zero()
        return LogComplex(n * self.log_magnitude, _unit(self.phase ** n))

    def __neg__(self) -> "LogComplex":
        return LogComplex(self.log_magnitude, -self.phase)

    def conjugate(self) -> "LogComplex":
        return LogComplex(self.log_magnitude, self.phase.conjugate())

    def scale(self, log_factor: float) -> "LogComplex":
        """Multiply by ``exp(log_factor)``."""
        if self.is_zero():
            return self
        return LogComplex(self.log_magnitude + log_factor, self.phase)

    def __add__(self, other) -> "LogComplex":
        return lc_sum([self, other if isinstance(other, LogComplex) else LogComplex.from_complex(other)])

    __radd__ = __add__

    def __sub__(self, other) -> "LogComplex":
        other = other if isinstance(other, LogComplex) else LogComplex.from_complex(other)
        return self + (-other)

    def as_dict(self) -> dict:
        lm = self.log_magnitude
        return {
            "log_magnitude": lm if math.isfinite(lm) else ("-inf" if lm < 0 else "inf"),
            "phase_re": self.phase.real,
            "phase_im": self.phase.imag,
        }

    def rel_diff(self, other: "LogComplex") -> float:
        """``|a - b| / max(|a|, |b|)`` evaluated without overflow."""
        if self.is_zero() and other.is_zero():
            return 0.0
        m = max(self.log_magnitude, other.log_magnitude)
        a = self.phase * math.exp(self.log_magnitude - m) if not self.is_zero() else 0j
        b = other.phase * math.exp(other.log_magnitude - m) if not other.is_zero() else 0j
        return abs(a - b) / max(abs(a), abs(b))


def _unit(c: complex) -> complex:
    r = abs(c)
    return c / r if r else 0j


def lc_sum(terms: Iterable[LogComplex]) -> LogComplex:
    """Sum of ``LogComplex`` values, rescaled by the largest magnitude."""
    terms = [t for t in terms if not t.is_zero()]
    if not terms:
        return LogComplex.zero()
    m = max(t.log_magnitude for t in terms)
    s = sum(t.phase * math.exp(t.log_magnitude - m) for t in terms)
    return LogComplex.from_complex(s).scale(m)


def _square(M, name: str = "matrix") -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def determinant(M) -> LogComplex:
    """Determinant by LU with partial pivoting, accumulated in log form."""
    A = _square(M).astype(np.complex128)
    la, ph = _kernels.batch_logdet(A[None])
    return LogComplex.from_log(la[0], ph[0])


def check_antisymmetric(A: np.ndarray, rtol: float = ANTISYMMETRY_RTOL) -> None:
    scale = np.abs(A).max() if A.size else 0.0
    if scale and np.abs(A + A.T).max() > rtol * scale:
        raise ValueError("matrix is not antisymmetric within tolerance")


def pfaffian(A) -> LogComplex:
    """Pfaffian via Parlett-Reid reduction with column pivoting.

    Raises
    ------
    ValueError
        For odd dimension or when ``A + A^T`` is not negligible relative to
        ``max|A|``.
    """
    A = _square(A).astype(np.complex128)
    if A.shape[0] % 2:
        raise ValueError("Pfaffian needs an even dimension")
    check_antisymmetric(A)
    la, ph = _kernels.batch_logpf(A[None])
    return LogComplex.from_log(la[0], ph[0])


def vandermonde(x: Sequence[complex]) -> LogComplex:
    """``prod_{i<j} (x_j - x_i)``."""
    x = [complex(v) for v in x]
    out = LogComplex.one()
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out = out * LogComplex.from_complex(x[j] - x[i])
    return out


def kron(A, B) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise ValueError("kron expects two matrices")
    return np.kron(A, B)


def block2x2(A, B, C, D) -> np.ndarray:
    """Assemble ``[[A, B], [C, D]]`` after checking conformability."""
    A, B, C, D = (np.atleast_2d(np.asarray(m)) for m in (A, B, C, D))
    if A.shape[0] != B.shape[0] or C.shape[0] != D.shape[0]:
        raise ValueError("row blocks do not conform")
    if A.shape[1] != C.shape[1] or B.shape[1] != D.shape[1]:
        raise ValueError("column blocks do not conform")
    return np.block([[A, B], [C, D]])


# Small-instance oracles for the identity suites. They are exhaustive and only
# meant for matrices of size ~8.

def determinant_by_cofactors(M) -> complex:
    A = _square(M).astype(np.complex128)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return complex(A[0, 0])
    total = 0j
    for j in range(n):
        minor = np.delete(np.delete(A, 0, axis=0), j, axis=1)
        total += (-1) ** j * A[0, j] * determinant_by_cofactors(minor)
    return total


def pfaffian_by_pairings(A) -> complex:
    """Pfaffian from its expansion along the first row (exponential cost)."""
    A = _square(A).astype(np.complex128)
    n = A.shape[0]
    if n % 2:
        raise ValueError("Pfaffian needs an even dimension")
    if n == 0:
        return 1.0 + 0j
    total = 0j
    rest = list(range(1, n))
    for pos, j in enumerate(rest):
        keep = [i for i in rest if i != j]
        sub = A[np.ix_(keep, keep)]
        total += (-1) ** pos * A[0, j] * pfaffian_by_pairings(sub)
    return total


def cauchy_binet_sum(A, B) -> complex:
    """``sum_S det(A[:, S]) det(B[S, :])`` over all column subsets ``S``."""
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    m, n = A.shape
    if B.shape != (n, m):
        raise ValueError("shapes must be (m, n) and (n, m)")
    total = 0j
    for S in itertools.combinations(range(n), m):
        S = list(S)
        total += determinant(A[:, S]).to_complex() * determinant(B[S, :]).to_complex()
    return total


def ishikawa_wakayama_sum(B, A) -> complex:
    """``sum_S det(B[:, S]) Pf(A[S, S])`` over all ``m``-subsets ``S``.

    ``B`` is ``m x n`` with ``m`` even and ``A`` is ``n x n`` antisymmetric.
    The sum equals ``Pf(B A B^T)``.
    """
    B = np.asarray(B, dtype=np.complex128)
    A = np.asarray(A, dtype=np.complex128)
    m, n = B.shape
    total = 0j
    for S in itertools.combinations(range(n), m):
        S = list(S)
        total += determinant(B[:, S]).to_complex() * pfaffian(A[np.ix_(S, S)]).to_complex()
    return total


def mp_pfaffian(A):
    """Parlett-Reid Pfaffian for ``mpmath`` matrices (list of lists or ``mp.matrix``)."""
    import mpmath as mp

    n = A.rows if hasattr(A, "rows") else len(A)
    a = [[mp.mpc(A[i, j] if hasattr(A, "rows") else A[i][j]) for j in range(n)] for i in range(n)]
    res = mp.mpc(1)
    for k in range(0, n - 1, 2):
        p = max(range(k + 1, n), key=lambda r: abs(a[r][k]))
        if p != k + 1:
            a[k + 1], a[p] = a[p], a[k + 1]
            for row in a:
                row[k + 1], row[p] = row[p], row[k + 1]
            res = -res
        piv = a[k][k + 1]
        if piv == 0:
            return mp.mpc(0)
        res *= piv
        for i in range(k + 2, n):
            ti = a[k][i] / piv
            vi = a[i][k + 1]
            for j in range(k + 2, n):
                a[i][j] += ti * a[j][k + 1] - vi * a[k][j] / piv
    return res


def mp_determinant(A):
    import mpmath as mp

    n = A.rows if hasattr(A, "rows") else len(A)
    if n == 0:
        return mp.mpc(1)
    return mp.det(A if hasattr(A, "rows") else mp.matrix(A))
