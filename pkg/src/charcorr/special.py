"""Scalar special functions and correlation kernels.

The kernel sums are evaluated by forward term recurrences whose ratios are
integer fractions, so the same code runs on numpy complex arrays and on
numpy object arrays holding ``mpmath`` numbers (used by the extended
precision confluent evaluator).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, erfc, erfcx, gammaln

__all__ = [
    "kernel_incexp",
    "kernel_incexp_scaled",
    "kernel_trunc_weight",
    "kernel_trunc",
    "kernel_ginse",
    "kernel_tse",
    "even_odd_kernel",
    "kernel_edge",
    "log_barnes_g",
    "selberg",
    "log_dual_volume",
    "log_factorial",
]

LOG_2PI = math.log(2 * math.pi)


def log_factorial(n) -> float:
    return float(gammaln(np.asarray(n, dtype=float) + 1))


def _arr(x):
    if isinstance(x, np.ndarray):
        return x
    a = np.asarray(x)
    if a.dtype.kind in "biufc":
        return a.astype(np.complex128)
    return np.asarray(x, dtype=object)


def _one_like(x):
    return x * 0 + 1


def kernel_incexp(N: int, z, w):
    """Truncated exponential ``sum_{j<N} (zw)^j / j!``.

    Examples
    --------
    >>> complex(kernel_incexp(3, 1.0, 1.0))
    (2.5+0j)
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    zw = _arr(z) * _arr(w)
    t = _one_like(zw)
    s = t
    for j in range(1, N):
        t = t * zw / j
        s = s + t
    return s


def kernel_incexp_scaled(N: int, z, w):
    """``kernel_incexp(N, z, w) * exp(-(|z|^2 + |w|^2) / 2)`` without overflow.

    Every partial term is bounded by one in modulus, which keeps the sum
    finite for the ``N ~ 300`` arguments used by the asymptotic checks.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    zw = z * w
    t = np.exp(-(np.abs(z) ** 2 + np.abs(w) ** 2) / 2).astype(np.complex128)
    s = t.copy()
    for j in range(1, N):
        t = t * zw / j
        s = s + t
    return s


def kernel_trunc_weight(N: int, M: int, l: int) -> float:
    """``log((N - M + l)! / l!)``."""
    if not (0 <= M <= N) or l < 0:
        raise ValueError("need 0 <= M <= N and l >= 0")
    return float(gammaln(N - M + l + 1) - gammaln(l + 1))


def kernel_trunc(N: int, M: int, L: int, z, w):
    """``sum_{l<L} (N-M+l)!/((N-M)! l!) (zw)^l``.

    The ``(N-M)!`` normalization keeps the leading term at one; multiply by
    ``exp(kernel_trunc_weight(N, M, 0))`` for the unnormalized sum.
    """
    if not (0 <= M <= N) or L < 1:
        raise ValueError("need 0 <= M <= N and L >= 1")
    d = N - M
    zw = _arr(z) * _arr(w)
    t = _one_like(zw)
    s = t
    for l in range(L - 1):
        t = t * zw * (d + l + 1) / (l + 1)
        s = s + t
    return s


def even_odd_kernel(L: int, even_ratio, odd_ratio, z, w):
    """Antisymmetric double sum over even/odd exponent pairs.

    Computes ``sum_{0<=a<=b<L} e_a o_b (z^{2a} w^{2b+1} - z^{2b+1} w^{2a})``
    where ``e_0 = o_0 = 1`` and ``e_{a+1}/e_a``, ``o_{b+1}/o_b`` are given by
    ``even_ratio(a)`` and ``odd_ratio(b)`` as ``(numerator, denominator)``
    integer pairs.
    """
    z = _arr(z)
    w = _arr(w)
    z2 = z * z
    w2 = w * w
    ez = _one_like(z * w)
    ew = ez
    oz = ez * z
    ow = ez * w
    cum_z = ez
    cum_w = ew
    total = cum_z * ow - cum_w * oz
    for b in range(1, L):
        p, q = even_ratio(b - 1)
        ez = ez * z2 * p / q
        ew = ew * w2 * p / q
        p, q = odd_ratio(b - 1)
        oz = oz * z2 * p / q
        ow = ow * w2 * p / q
        cum_z = cum_z + ez
        cum_w = cum_w + ew
        total = total + cum_z * ow - cum_w * oz
    return total


def _ginse_ratios():
    return (lambda a: (1, a + 1)), (lambda b: (2, 2 * b + 3))


def _tse_ratios(d: int):
    return (lambda a: (a + d + 1, a + 1)), (lambda b: (2 * b + 2 * d + 3, 2 * b + 3))


def ginse_log_leading(N: int | None = None) -> float:
    """Log of the product of the two leading weights of :func:`kernel_ginse`."""
    return float(-gammaln(1.5))


def tse_log_leading(N: int, M: int) -> float:
    d = N - M
    return float(gammaln(d + 1) + gammaln(d + 1.5) - gammaln(1.5))


def kernel_ginse(N: int, z, w, normalized: bool = False):
    """Quaternion Ginibre skew kernel of order ``N``.

    ``sum_{0<=a<=b<N} (z^{2a} w^{2b+1} - z^{2b+1} w^{2a}) / (a! Gamma(b + 3/2))``.
    With ``normalized=True`` the overall factor ``1/Gamma(3/2)`` is dropped.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    er, orr = _ginse_ratios()
    k = even_odd_kernel(N, er, orr, z, w)
    return k if normalized else k * math.exp(ginse_log_leading())


def kernel_tse(N: int, M: int, z, w, L: int | None = None, normalized: bool = False):
    """Truncated-symplectic skew kernel.

    ``sum_{0<=a<=b<L} f(2a) f(2b+1) (z^{2a} w^{2b+1} - z^{2b+1} w^{2a})`` with
    ``f(m) = Gamma(m/2 + N - M + 1) / Gamma(m/2 + 1)``; ``L`` defaults to ``M``.
    With ``normalized=True`` the factor ``f(0) f(1)`` is dropped.
    """
    if not (1 <= M <= N):
        raise ValueError("need 1 <= M <= N")
    L = M if L is None else L
    er, orr = _tse_ratios(N - M)
    k = even_odd_kernel(L, er, orr, z, w)
    return k if normalized else k * math.exp(tse_log_leading(N, M))


def kernel_edge(xi, zeta):
    """Real edge kernel ``exp(xi*zeta) * erfc((xi + zeta)/sqrt(2)) / 2``."""
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if np.iscomplexobj(xi) or np.iscomplexobj(zeta):
        raise TypeError("edge kernel takes real arguments")
    u = (xi + zeta) / math.sqrt(2)
    with np.errstate(over="ignore", under="ignore"):
        pos = 0.5 * np.exp(xi * zeta - u * u) * erfcx(np.where(u >= 0, u, 0.0))
        neg = 0.5 * np.exp(xi * zeta) * erfc(np.where(u < 0, u, 0.0))
    out = np.where(u >= 0, pos, neg)
    return out if out.ndim else float(out)


# Barnes G -----------------------------------------------------------------

def _asym_coeffs(nterms: int = 6):
    B = bernoulli(2 * nterms + 2)
    return [B[2 * k + 2] / (4 * k * (k + 1)) for k in range(1, nterms + 1)]


_ASYM = _asym_coeffs()
_ANCHOR = 24


def _log_g_asym_shape(z: float) -> float:
    """Large-``z`` expansion of ``log G(z + 1)`` without its additive constant."""
    lz = math.log(z)
    s = z * z / 2 * lz - 0.75 * z * z + z / 2 * LOG_2PI - lz / 12
    zz = z * z
    p = zz
    for c in _ASYM:
        s += c / p
        p *= zz
    return s


@lru_cache(maxsize=None)
def _log_g_constant() -> float:
    # additive constant of the expansion, fixed by the exact value of G(ANCHOR + 1)
    exact = math.fsum(math.lgamma(j + 1) for j in range(1, _ANCHOR))
    return exact - _log_g_asym_shape(_ANCHOR)


@lru_cache(maxsize=None)
def _log_g_half() -> float:
    # G(n + 1/2) from the expansion, walked down to G(1/2)
    n = _ANCHOR
    top = _log_g_asym_shape(n - 0.5) + _log_g_constant()
    return top - math.fsum(math.lgamma(j + 0.5) for j in range(n))


def log_barnes_g(z: float) -> float:
    """``log G(z)`` for real ``z > 0``.

    Integers and half-integers use the recursion ``G(z+1) = Gamma(z) G(z)``
    from ``G(1) = 1`` and ``G(1/2)``. Other arguments use the asymptotic
    expansion at ``z + n`` followed by downward recursion.
    """
    z = float(z)
    if z <= 0:
        raise ValueError("log_barnes_g needs z > 0")
    if z == int(z):
        n = int(z)
        return math.fsum(math.lgamma(j + 1) for j in range(1, n - 1))
    if 2 * z == int(2 * z):
        m = int(z - 0.5)
        return _log_g_half() + math.fsum(math.lgamma(j + 0.5) for j in range(m))
    n = max(0, int(math.ceil(_ANCHOR - z)))
    top = _log_g_asym_shape(z + n - 1) + _log_g_constant()
    return top - math.fsum(math.lgamma(z + j) for j in range(n))


def selberg(k: int, a: float, b: float, gamma: float) -> float:
    """Log of Selberg's integral over ``[0, 1]^k``.

    ``prod_j Gamma(a + j g) Gamma(b + j g) Gamma(1 + (j+1) g)
    / (Gamma(a + b + (k + j - 1) g) Gamma(1 + g))`` for ``j = 0..k-1``.
    """
    if k < 1 or a <= 0 or b <= 0:
        raise ValueError("need k >= 1, a > 0, b > 0")
    bound = 1.0 / k
    if k > 1:
        bound = min(bound, a / (k - 1), b / (k - 1))
    if gamma <= -bound:
        raise ValueError("Selberg integral diverges for this gamma")
    terms = []
    for j in range(k):
        terms += [
            math.lgamma(a + j * gamma),
            math.lgamma(b + j * gamma),
            math.lgamma(1 + (j + 1) * gamma),
            -math.lgamma(a + b + (k + j - 1) * gamma),
            -math.lgamma(1 + gamma),
        ]
    return math.fsum(terms)


def log_dual_volume(family: str, N: int, k: int) -> float:
    """Log of the total mass of a heavy-tailed dual weight.

    Parameters
    ----------
    family : {"unitary", "orthogonal", "symplectic"}
        ``unitary``: ``det(I + XX^+)^(-N-2k)`` over complex ``k x k``;
        ``orthogonal``: ``det(I + XX^+)^(-N/2+1-2k)`` over complex
        antisymmetric ``2k x 2k``; ``symplectic``: ``det(I + XX^+)^(-N-1-2k)``
        over complex symmetric ``2k x 2k``. Lebesgue measure is taken on the
        real and imaginary parts of the independent entries.
    """
    if family == "unitary":
        s = k * k * math.log(math.pi)
        for j in range(1, k + 1):
            s += math.lgamma(N + j) - math.lgamma(N + k + j)
        return s
    if family == "orthogonal":
        s = k * (2 * k - 1) * math.log(math.pi)
        for j in range(1, k + 1):
            s += math.lgamma(N + 2 * j - 1) - math.lgamma(N + 2 * k + 2 * j - 2)
        return s
    if family == "symplectic":
        s = k * (2 * k + 1) * math.log(math.pi) - k * (2 * k - 1) * math.log(2)
        for j in range(1, 2 * k + 1):
            s += math.lgamma(N + j / 2 + 0.5) - math.lgamma(N + 1 + (2 * k + j) / 2)
        return s
    raise ValueError(f"unknown family {family!r}")
