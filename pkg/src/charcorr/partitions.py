"""Integer partitions, Young-diagram operations and hook products.

Partitions are immutable and hashable. Exact arithmetic (``int`` and
``fractions.Fraction``) is used wherever the inputs allow it; floating point
inputs fall back to a log-domain product with explicit sign tracking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Sequence

__all__ = [
    "Partition",
    "BoxShape",
    "conjugate",
    "complement",
    "double",
    "repeat",
    "is_even",
    "is_repeated",
    "hook_product",
    "deformed_hooks",
    "pochhammer",
    "log_pochhammer",
    "enumerate_box",
    "count_box",
]


class Partition(tuple):
    """A weakly decreasing tuple of positive integers.

    Trailing zeros are stripped on construction, so ``Partition((2, 1, 0))``
    equals ``Partition((2, 1))``. Indexing past the length returns 0 through
    :meth:`part`; plain tuple indexing keeps the usual semantics.
    """

    __slots__ = ()

    def __new__(cls, parts: Sequence[int] = ()):
        parts = [int(p) for p in parts]
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be weakly decreasing: {parts}")
        while parts and parts[-1] == 0:
            parts.pop()
        return super().__new__(cls, parts)

    def __repr__(self) -> str:
        return f"Partition({tuple(self)})"

    def part(self, j: int) -> int:
        """Zero-based part ``j``, reading missing parts as 0."""
        return self[j] if j < len(self) else 0

    def length(self) -> int:
        return len(self)

    def weight(self) -> int:
        return sum(self)

    def padded(self, k: int) -> tuple[int, ...]:
        if len(self) > k:
            raise ValueError(f"{self!r} has more than {k} parts")
        return tuple(self) + (0,) * (k - len(self))

    def boxes(self) -> Iterator[tuple[int, int]]:
        """Cells ``(row, col)`` of the Young diagram, zero-based."""
        for i, p in enumerate(self):
            for j in range(p):
                yield i, j

    def fits(self, box: "BoxShape") -> bool:
        return len(self) <= box.rows and self.part(0) <= box.cols

    def conjugate(self) -> "Partition":
        return conjugate(self)


@dataclass(frozen=True)
class BoxShape:
    """A ``rows`` x ``cols`` rectangle of the Young lattice."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("box dimensions must be nonnegative")


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(p)


def conjugate(p) -> Partition:
    """Transpose of the Young diagram."""
    p = _as_partition(p)
    if not p:
        return p
    return Partition([sum(1 for x in p if x > j) for j in range(p[0])])


def complement(p, box: BoxShape) -> Partition:
    """Reversed complement of ``p`` inside ``box``.

    Part ``j`` of the result is ``cols - p[rows - j - 1]``.
    """
    p = _as_partition(p)
    if not p.fits(box):
        raise ValueError(f"{p!r} does not fit in a {box.rows}x{box.cols} box")
    k = box.rows
    return Partition([box.cols - p.part(k - j - 1) for j in range(k)])


def double(p) -> Partition:
    """Multiply every part by two."""
    return Partition([2 * x for x in _as_partition(p)])


def repeat(p) -> Partition:
    """List every part twice."""
    return Partition([x for x in _as_partition(p) for _ in range(2)])


def is_even(p) -> bool:
    return all(x % 2 == 0 for x in _as_partition(p))


def is_repeated(p) -> bool:
    """True when parts come in equal consecutive pairs, (a, a, b, b, ...)."""
    p = _as_partition(p)
    q = tuple(p) + ((0,) if len(p) % 2 else ())
    return all(q[2 * i] == q[2 * i + 1] for i in range(len(q) // 2))


def _arm_leg(p: Partition, pc: Partition, i: int, j: int) -> tuple[int, int]:
    return p[i] - j - 1, pc[j] - i - 1


def hook_product(p) -> int:
    """Product of all hook lengths of ``p``."""
    p = _as_partition(p)
    pc = conjugate(p)
    out = 1
    for i, j in p.boxes():
        a, l = _arm_leg(p, pc, i, j)
        out *= a + l + 1
    return out


def deformed_hooks(p, alpha) -> tuple[Fraction, Fraction]:
    """Upper and lower deformed hook products.

    Returns
    -------
    (upper, lower) : tuple of Fraction
        ``upper = prod(alpha*arm + leg + alpha)`` and
        ``lower = prod(alpha*arm + leg + 1)``. Both reduce to
        :func:`hook_product` at ``alpha = 1``.
    """
    p = _as_partition(p)
    a = Fraction(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    pc = conjugate(p)
    upper = Fraction(1)
    lower = Fraction(1)
    for i, j in p.boxes():
        arm, leg = _arm_leg(p, pc, i, j)
        upper *= a * arm + leg + a
        lower *= a * arm + leg + 1
    return upper, lower


def _is_exact(x) -> bool:
    return isinstance(x, (int, Rational)) and not isinstance(x, bool)


def _factors(u, alpha, p: Partition):
    for j, pj in enumerate(p):
        base = u - j / alpha if not _is_exact(alpha) else u - Fraction(j) / Fraction(alpha)
        for i in range(pj):
            yield base + i


def log_pochhammer(u: float, alpha, p) -> tuple[float, int]:
    """Generalized hypergeometric coefficient in log form.

    Parameters
    ----------
    u : float
    alpha : positive number
    p : Partition

    Returns
    -------
    (log_abs, sign) : tuple
        ``sign`` is 0 when the coefficient vanishes, in which case
        ``log_abs`` is ``-inf``.

    Notes
    -----
    The coefficient is ``prod_j Gamma(u - (j-1)/alpha + p_j) / Gamma(u - (j-1)/alpha)``
    which is evaluated as the finite rising product
    ``prod_j prod_{i<p_j} (u - (j-1)/alpha + i)``. The product form is a
    polynomial in ``u`` and so stays finite where individual Gamma factors
    have poles.
    """
    p = _as_partition(p)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    total = []
    sign = 1
    for f in _factors(float(u), float(alpha), p):
        if f == 0:
            return -math.inf, 0
        if f < 0:
            sign = -sign
        total.append(math.log(abs(f)))
    return math.fsum(total), sign


def pochhammer(u, alpha, p):
    """Generalized hypergeometric coefficient ``[u]^{(alpha)}_p``.

    Exact (``Fraction``) when ``u`` and ``alpha`` are rational, otherwise a
    float computed through :func:`log_pochhammer`.

    Examples
    --------
    >>> pochhammer(5, 1, Partition((2,)))
    Fraction(30, 1)
    """
    p = _as_partition(p)
    if _is_exact(u) and _is_exact(alpha):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        out = Fraction(1)
        for f in _factors(Fraction(u), Fraction(alpha), p):
            out *= f
        return out
    la, s = log_pochhammer(u, alpha, p)
    return s * math.exp(la) if s else 0.0


def enumerate_box(box: BoxShape) -> Iterator[Partition]:
    """All partitions fitting ``box`` in colexicographic order.

    Padded part vectors are compared from the last part to the first, so
    the empty partition comes first and the full rectangle last.
    """
    k, n = box.rows, box.cols

    def rec(j: int, lo: int, tail: tuple[int, ...]):
        # j: zero-based index of the part being chosen, filled from the bottom row up
        if j < 0:
            yield Partition(tail)
            return
        for v in range(lo, n + 1):
            yield from rec(j - 1, v, (v,) + tail)

    if k == 0:
        yield Partition(())
        return
    yield from rec(k - 1, 0, ())


def count_box(box: BoxShape) -> int:
    """Number of partitions fitting ``box``, ``C(rows + cols, rows)``."""
    return math.comb(box.rows + box.cols, box.rows)
