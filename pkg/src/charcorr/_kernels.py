"""Batched determinant and Pfaffian kernels (numba and numpy variants).

All kernels take a stack ``A`` of shape ``(n, m, m)`` and return
``(log_abs, phase)`` arrays of shape ``(n,)``. A vanishing result is
encoded as ``log_abs = -inf`` with ``phase = 0``.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel

__all__ = ["batch_logdet", "batch_logpf", "batch_logdet_numpy", "batch_logpf_numpy"]


def _logdet_loop(A):
    n, m, _ = A.shape
    log_abs = np.empty(n)
    phase = np.empty(n, dtype=np.complex128)
    a = np.empty((m, m), dtype=np.complex128)
    for s in range(n):
        for i in range(m):
            for j in range(m):
                a[i, j] = A[s, i, j]
        la = 0.0
        ph = 1.0 + 0.0j
        for c in range(m):
            p = c
            best = abs(a[c, c])
            for r in range(c + 1, m):
                v = abs(a[r, c])
                if v > best:
                    best = v
                    p = r
            if best == 0.0:
                la = -np.inf
                ph = 0.0 + 0.0j
                break
            if p != c:
                for j in range(m):
                    t = a[c, j]
                    a[c, j] = a[p, j]
                    a[p, j] = t
                ph = -ph
            piv = a[c, c]
            la += math.log(best)
            ph *= piv / best
            for r in range(c + 1, m):
                f = a[r, c] / piv
                if f != 0:
                    for j in range(c + 1, m):
                        a[r, j] -= f * a[c, j]
        log_abs[s] = la
        phase[s] = ph
    return log_abs, phase


def _logpf_loop(A):
    n, m, _ = A.shape
    log_abs = np.empty(n)
    phase = np.empty(n, dtype=np.complex128)
    a = np.empty((m, m), dtype=np.complex128)
    for s in range(n):
        for i in range(m):
            for j in range(m):
                a[i, j] = A[s, i, j]
        la = 0.0
        ph = 1.0 + 0.0j
        for k in range(0, m - 1, 2):
            p = k + 1
            best = abs(a[k + 1, k])
            for r in range(k + 2, m):
                v = abs(a[r, k])
                if v > best:
                    best = v
                    p = r
            if best == 0.0:
                la = -np.inf
                ph = 0.0 + 0.0j
                break
            if p != k + 1:
                for j in range(m):
                    t = a[k + 1, j]
                    a[k + 1, j] = a[p, j]
                    a[p, j] = t
                for i in range(m):
                    t = a[i, k + 1]
                    a[i, k + 1] = a[i, p]
                    a[i, p] = t
                ph = -ph
            piv = a[k, k + 1]
            la += math.log(abs(piv))
            ph *= piv / abs(piv)
            for i in range(k + 2, m):
                ti = a[k, i] / piv
                vi = a[i, k + 1]
                for j in range(k + 2, m):
                    a[i, j] += ti * a[j, k + 1] - vi * (a[k, j] / piv)
        log_abs[s] = la
        phase[s] = ph
    return log_abs, phase


_logdet_numba = _accel.njit(_logdet_loop)
_logpf_numba = _accel.njit(_logpf_loop)


def batch_logdet_numpy(A: np.ndarray):
    """LAPACK LU through ``numpy.linalg.slogdet``."""
    sign, la = np.linalg.slogdet(A)
    sign = np.asarray(sign, dtype=np.complex128)
    la = np.where(sign == 0, -np.inf, la)
    return la, sign


def batch_logpf_numpy(A: np.ndarray):
    """Parlett-Reid reduction vectorized over the batch axis."""
    a = np.array(A, dtype=np.complex128, copy=True)
    n, m, _ = a.shape
    log_abs = np.zeros(n)
    phase = np.ones(n, dtype=np.complex128)
    dead = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    for k in range(0, m - 1, 2):
        kp = k + 1 + np.argmax(np.abs(a[:, k + 1:, k]), axis=1)
        swap = kp != k + 1
        if swap.any():
            r1 = a[idx, k + 1, :].copy()
            a[idx, k + 1, :] = a[idx, kp, :]
            a[idx, kp, :] = r1
            c1 = a[idx, :, k + 1].copy()
            a[idx, :, k + 1] = a[idx, :, kp]
            a[idx, :, kp] = c1
            phase[swap] = -phase[swap]
        piv = a[:, k, k + 1]
        zero = piv == 0
        dead |= zero
        piv = np.where(zero, 1.0, piv)
        log_abs += np.log(np.abs(piv))
        phase *= piv / np.abs(piv)
        if k + 2 < m:
            tau = a[:, k, k + 2:] / piv[:, None]
            v = a[:, k + 2:, k + 1]
            a[:, k + 2:, k + 2:] += tau[:, :, None] * v[:, None, :] - v[:, :, None] * tau[:, None, :]
    log_abs[dead] = -np.inf
    phase[dead] = 0.0
    return log_abs, phase


def batch_logdet_numba(A: np.ndarray):
    if _logdet_numba is None:
        raise RuntimeError("numba is not available")
    return _logdet_numba(np.ascontiguousarray(A, dtype=np.complex128))


def batch_logpf_numba(A: np.ndarray):
    if _logpf_numba is None:
        raise RuntimeError("numba is not available")
    return _logpf_numba(np.ascontiguousarray(A, dtype=np.complex128))


def batch_logdet(A: np.ndarray):
    A = np.asarray(A)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {A.shape}")
    if A.shape[1] == 0:
        return np.zeros(A.shape[0]), np.ones(A.shape[0], dtype=np.complex128)
    if _accel.USE_NUMBA:
        return batch_logdet_numba(A)
    return batch_logdet_numpy(A.astype(np.complex128, copy=False))


def batch_logpf(A: np.ndarray):
    A = np.asarray(A)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {A.shape}")
    if A.shape[1] % 2:
        raise ValueError("Pfaffian needs an even dimension")
    if A.shape[1] == 0:
        return np.zeros(A.shape[0]), np.ones(A.shape[0], dtype=np.complex128)
    if _accel.USE_NUMBA:
        return batch_logpf_numba(A)
    return batch_logpf_numpy(A)
