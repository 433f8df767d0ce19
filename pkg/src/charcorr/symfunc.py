"""Schur functions and the symmetric-function identities built on them."""
from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .partitions import (
    BoxShape,
    Partition,
    conjugate,
    deformed_hooks,
    enumerate_box,
    pochhammer,
)

__all__ = [
    "schur",
    "schur_many",
    "schur_ssyt",
    "schur_principal",
    "log_schur_principal",
    "dual_cauchy_check",
    "jack_at_identity",
    "schur_of_matrices",
    "COINCIDENT_RTOL",
]

# relative pairwise distance below which the bialternant is abandoned
COINCIDENT_RTOL = 1e-6


def _min_separation(x: np.ndarray) -> float:
    n = len(x)
    if n < 2:
        return math.inf
    d = np.abs(x[:, None] - x[None, :])
    d[np.diag_indices(n)] = math.inf
    return float(d.min())


@lru_cache(maxsize=4096)
def _ssyt_content(shape: tuple[int, ...], n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Weight vectors of all semistandard tableaux with entries ``< n``, with multiplicity."""
    cells = [(i, j) for i, r in enumerate(shape) for j in range(r)]
    counts: Counter = Counter()
    filling: dict[tuple[int, int], int] = {}

    def rec(c: int, weight: list[int]):
        if c == len(cells):
            counts[tuple(weight)] += 1
            return
        i, j = cells[c]
        lo = 0
        if j > 0:
            lo = filling[(i, j - 1)]
        if i > 0:
            lo = max(lo, filling[(i - 1, j)] + 1)
        # entries in column j below row i need room: value + (rows left in column) < n
        col_len = sum(1 for r in shape if r > j)
        hi = n - (col_len - i)
        for v in range(lo, hi + 1):
            filling[(i, j)] = v
            weight[v] += 1
            rec(c + 1, weight)
            weight[v] -= 1
        filling.pop((i, j), None)

    rec(0, [0] * n)
    return tuple(counts.items())


def schur_ssyt(p, x: Sequence[complex]) -> complex:
    """Schur function as a sum over semistandard Young tableaux.

    Exact for coincident arguments; cost grows with the number of tableaux,
    so it is meant for ``|p|`` up to about a dozen.
    """
    p = Partition(p)
    x = np.asarray(x, dtype=np.complex128)
    n = len(x)
    if len(p) > n:
        return 0j
    total = 0j
    for weight, mult in _ssyt_content(tuple(p), n):
        term = complex(mult)
        for xi, e in zip(x, weight):
            if e:
                term *= xi ** e
        total += term
    return total


def _bialternant_many(parts: Sequence[Partition], x: np.ndarray) -> np.ndarray:
    n = len(x)
    top = max((q.part(0) for q in parts), default=0) + n
    powers = x[:, None] ** np.arange(top)[None, :]
    cols = np.array([[q.part(j) + n - 1 - j for j in range(n)] for q in parts], dtype=int)
    num = np.linalg.det(powers[:, cols].transpose(1, 0, 2))
    den = np.linalg.det(powers[:, np.arange(n - 1, -1, -1)])
    return num / den


def schur_many(parts: Sequence, x: Sequence[complex]) -> np.ndarray:
    """Schur functions of several partitions at the same point set."""
    parts = [Partition(q) for q in parts]
    x = np.asarray(x, dtype=np.complex128)
    n = len(x)
    out = np.zeros(len(parts), dtype=np.complex128)
    if not parts:
        return out
    ok = [i for i, q in enumerate(parts) if len(q) <= n]
    if not ok:
        return out
    if n == 0:
        for i in ok:
            out[i] = 1.0
        return out
    scale = float(np.abs(x).max())
    if scale == 0 or _min_separation(x) < COINCIDENT_RTOL * scale:
        for i in ok:
            out[i] = schur_ssyt(parts[i], x)
        return out
    out[ok] = _bialternant_many([parts[i] for i in ok], x)
    return out


def schur(p, x: Sequence[complex]) -> complex:
    """Schur function ``s_p(x)``.

    Uses the bialternant ``det(x_i^{p_j + n - j}) / det(x_i^{n - j})`` for
    well separated points and the tableau sum otherwise.

    Examples
    --------
    >>> schur((2, 1), [1, 1, 1]).real
    8.0
    """
    return complex(schur_many([p], x)[0])


def log_schur_principal(p, n: int) -> float:
    """``log s_p(1, ..., 1)`` with ``n`` ones, by the hook-content formula.

    Returns ``-inf`` when ``p`` has more than ``n`` parts.
    """
    p = Partition(p)
    if len(p) > n:
        return -math.inf
    pc = conjugate(p)
    s = []
    for i, j in p.boxes():
        hook = p[i] - j + pc[j] - i - 1
        s.append(math.log(n + j - i) - math.log(hook))
    return math.fsum(s)


def schur_principal(p, n: int, scale=1):
    """``s_p(scale, ..., scale)`` with ``n`` equal arguments (exact for rational scale)."""
    p = Partition(p)
    if len(p) > n:
        return 0
    pc = conjugate(p)
    num = 1
    den = 1
    for i, j in p.boxes():
        num *= n + j - i
        den *= p[i] - j + pc[j] - i - 1
    return Fraction(num, den) * scale ** p.weight()


def dual_cauchy_check(x: Sequence[complex], y: Sequence[complex]) -> float:
    """Relative residual of the dual Cauchy identity.

    ``prod_{i,j} (1 + y_j x_i)`` against ``sum_p s_p(x) s_{p'}(y)`` over the
    ``len(x) x len(y)`` box.
    """
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    lhs = complex(np.prod(1 + np.outer(x, y)))
    box = list(enumerate_box(BoxShape(len(x), len(y))))
    sx = schur_many(box, x)
    sy = schur_many([conjugate(q) for q in box], y)
    rhs = complex(np.sum(sx * sy))
    scale = max(abs(lhs), float(np.sum(np.abs(sx * sy))))
    return abs(lhs - rhs) / scale


def jack_at_identity(alpha, p, N: int):
    """Jack polynomial ``P^(alpha)_p`` evaluated at ``N`` ones.

    ``alpha^{|p|} [N/alpha]^{(alpha)}_p / h_p(alpha)`` with the lower deformed
    hook product; exact for rational ``alpha``.
    """
    p = Partition(p)
    if len(p) > N:
        raise ValueError("partition has more parts than variables")
    a = Fraction(alpha)
    _, lower = deformed_hooks(p, a)
    return a ** p.weight() * pochhammer(Fraction(N) / a, a, p) / lower


def schur_of_matrices(p, A: np.ndarray) -> np.ndarray:
    """``s_p`` of the eigenvalues of each matrix in a stack ``(n, m, m)``.

    Complete symmetric functions ``h_r`` come from traces of powers via
    Newton's identities and are assembled by the Jacobi-Trudi determinant,
    so no eigenvalues are computed.
    """
    p = Partition(p)
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError("expected a stack of square matrices")
    n = A.shape[0]
    if len(p) > A.shape[1]:
        return np.zeros(n, dtype=np.complex128)
    l = len(p)
    if l == 0:
        return np.ones(n, dtype=np.complex128)
    top = p.part(0) + l - 1
    pw = np.empty((n, top + 1), dtype=np.complex128)
    P = A.copy()
    for r in range(1, top + 1):
        pw[:, r] = np.trace(P, axis1=1, axis2=2)
        if r < top:
            P = P @ A
    h = np.zeros((n, top + 1), dtype=np.complex128)
    h[:, 0] = 1
    for r in range(1, top + 1):
        h[:, r] = np.sum(pw[:, 1:r + 1] * h[:, r - 1::-1], axis=1) / r
    JT = np.zeros((n, l, l), dtype=np.complex128)
    for i in range(l):
        for j in range(l):
            idx = p.part(i) - i + j
            if 0 <= idx <= top:
                JT[:, i, j] = h[:, idx]
    return np.linalg.det(JT)
