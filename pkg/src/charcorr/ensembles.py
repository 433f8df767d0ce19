"""Seeded samplers for the random matrix ensembles and their dual measures.

Randomness is counter based. Draw ``index`` of a stream lives in chunk
``index // CHUNK`` at position ``index % CHUNK``; every chunk owns an
independent Philox generator keyed by ``(seed, stream, chunk)``. Chunks can
therefore be produced by any number of workers and reduced in chunk order
with bit-identical results.

Density conventions
-------------------
* GinUE: ``E|G_ij|^2 = 1`` (density ``exp(-Tr GG^+)``).
* GinOE: standard real Gaussian entries.
* GinSE: ``[[A, B], [-conj(B), conj(A)]]`` with ``E|A_ij|^2 = E|B_ij|^2 = 1/2``.
* Dual complex / antisymmetric: ``E|X_ij|^2 = 1`` for free entries.
* Dual symmetric: density ``exp(-Tr XX^+)``, so diagonal entries have
  ``E|X_ii|^2 = 1`` and off-diagonal ones ``E|X_ij|^2 = 1/2``.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .linalg import NumericalError

__all__ = [
    "EnsembleTag",
    "Sample",
    "MCEstimate",
    "ReliabilityError",
    "CHUNK",
    "WORKERS_ENV",
    "chunk_rng",
    "sample",
    "sample_batch",
    "haar_unitary",
    "haar_orthogonal",
    "haar_symplectic",
    "truncate",
    "sample_cse",
    "symplectic_form",
    "dual_heavy_expectation",
    "dual_heavy_volume",
    "heavy_dual_exponent",
    "run_chunks",
    "default_workers",
]

CHUNK = 2048
WORKERS_ENV = "CHARCORR_WORKERS"
MIN_ESS = 100.0


class ReliabilityError(NumericalError):
    """Raised when an importance-sampling estimate is dominated by a few weights."""


class EnsembleTag(str, enum.Enum):
    GinUE = "ginue"
    GinOE = "ginoe"
    GinSE = "ginse"
    TUE = "tue"
    TOE = "toe"
    TSE = "tse"
    DualGaussComplex = "dual_complex"
    DualGaussAntisym = "dual_antisym"
    DualGaussSym = "dual_sym"
    DualHeavyTUE = "dual_heavy_tue"
    DualHeavyTOE = "dual_heavy_toe"
    DualHeavyTSE = "dual_heavy_tse"
    HaarU = "haar_u"
    HaarO = "haar_o"
    HaarSp = "haar_sp"
    CSE = "cse"

    @classmethod
    def parse(cls, tag) -> "EnsembleTag":
        if isinstance(tag, cls):
            return tag
        key = str(tag).strip()
        for t in cls:
            if key.lower() in (t.value, t.name.lower()):
                return t
        raise ValueError(f"unknown ensemble tag {tag!r}")


# fixed stream ids; never reorder, results depend on them
_STREAM_ID = {t: i + 1 for i, t in enumerate(EnsembleTag)}

_HEAVY = (EnsembleTag.DualHeavyTUE, EnsembleTag.DualHeavyTOE, EnsembleTag.DualHeavyTSE)


@dataclass(frozen=True)
class Sample:
    matrix: np.ndarray
    importance_log_weight: float = 0.0


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error.

    ``ess`` is the effective sample size for importance-weighted estimates
    and ``None`` for plain averages.
    """

    mean: complex
    stderr: float
    n: int
    seed: int
    ess: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("an MC estimate needs n >= 2")
        if not self.stderr >= 0:
            raise ValueError("stderr must be nonnegative")

    def zscore(self, value: complex, extra_se: float = 0.0) -> float:
        """``|mean - value|`` in units of the (combined) standard error."""
        se = math.hypot(self.stderr, extra_se)
        diff = abs(complex(self.mean) - complex(value))
        if se == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / se

    def as_dict(self) -> dict:
        d = {
            "mean_re": complex(self.mean).real,
            "mean_im": complex(self.mean).imag,
            "stderr": self.stderr,
            "n": self.n,
            "seed": self.seed,
        }
        if self.ess is not None:
            d["ess"] = self.ess
        return d


# RNG ------------------------------------------------------------------------

def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        w = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if w < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return w


def run_chunks(fn: Callable[[int, int], np.ndarray], n: int, workers: int | None = None) -> np.ndarray:
    """Evaluate ``fn(chunk, count)`` over the chunks covering ``n`` draws.

    Results are concatenated in chunk order, so the output does not depend
    on ``workers``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be positive")
    nchunks = -(-n // CHUNK)
    counts = [min(CHUNK, n - c * CHUNK) for c in range(nchunks)]
    if workers == 1 or nchunks == 1:
        parts = [fn(c, counts[c]) for c in range(nchunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, range(nchunks), counts))
    return np.concatenate(parts, axis=0)


# elementary samplers ----------------------------------------------------------

def _cgauss(rng, shape, var: float = 1.0) -> np.ndarray:
    """Complex Gaussian with ``E|x|^2 = var``."""
    s = math.sqrt(var / 2)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def symplectic_form(n: int) -> np.ndarray:
    """``J = [[0, I_n], [-I_n, 0]]``."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def _ginue(rng, count, N):
    return _cgauss(rng, (count, N, N))


def _ginoe(rng, count, N):
    return rng.standard_normal((count, N, N))


def _quaternion_blocks(A, B):
    top = np.concatenate([A, B], axis=-1)
    bot = np.concatenate([-B.conj(), A.conj()], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _ginse(rng, count, N):
    A = _cgauss(rng, (count, N, N), 0.5)
    B = _cgauss(rng, (count, N, N), 0.5)
    return _quaternion_blocks(A, B)


def _qr_haar(Z: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ad = np.abs(d)
    ph = np.where(ad > 0, d / np.where(ad > 0, ad, 1), 1)
    return Q * ph[..., None, :]


def _haar_u(rng, count, N, cols=None):
    cols = N if cols is None else cols
    return _qr_haar(_cgauss(rng, (count, N, cols)))


def _haar_o(rng, count, N, cols=None):
    cols = N if cols is None else cols
    return _qr_haar(rng.standard_normal((count, N, cols)))


def _haar_sp(rng, count, N, cols=None):
    """First ``cols`` quaternionic columns of a Haar symplectic matrix.

    The ``2N x 2N`` complex representation is built column pair by column
    pair: column ``j`` is Gram-Schmidt orthogonalized against all previous
    columns and its partner ``N + j`` is ``-J conj(u_j)``. Returns a
    ``(count, 2N, 2N)`` array with the unused columns left at zero.
    """
    cols = N if cols is None else cols
    G = _ginse(rng, count, N)
    J = symplectic_form(N)
    U = np.zeros_like(G)
    for j in range(cols):
        v = G[:, :, j].copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for i in list(range(j)) + list(range(N, N + j)):
                u = U[:, :, i]
                v -= np.einsum("bi,bi->b", u.conj(), v)[:, None] * u
        v /= np.linalg.norm(v, axis=1)[:, None]
        U[:, :, j] = v
        U[:, :, N + j] = -(J @ v.conj().T).T
    return U


def _trunc_index(N: int, M: int, quaternion: bool) -> np.ndarray:
    if quaternion:
        return np.r_[np.arange(M), np.arange(N, N + M)]
    return np.arange(M)


def truncate(U: np.ndarray, M: int, quaternion: bool = False) -> np.ndarray:
    """Principal ``M x M`` block (``2M x 2M`` in the quaternionic case).

    In the quaternionic case the rows and columns ``0..M-1`` and
    ``N..N+M-1`` of the ``2N x 2N`` representation are kept, which preserves
    the block structure ``[[A, B], [-conj(B), conj(A)]]``.
    """
    U = np.asarray(U)
    n = U.shape[-1]
    N = n // 2 if quaternion else n
    if quaternion and n % 2:
        raise ValueError("quaternionic matrices have even complex dimension")
    if not (0 <= M <= N):
        raise ValueError(f"truncation size M={M} must satisfy 0 <= M <= {N}")
    idx = _trunc_index(N, M, quaternion)
    return U[..., idx[:, None], idx[None, :]]


def _tue(rng, count, N, M):
    Q = _haar_u(rng, count, N, cols=M)
    return Q[:, :M, :]


def _toe(rng, count, N, M):
    Q = _haar_o(rng, count, N, cols=M)
    return Q[:, :M, :]


def _tse(rng, count, N, M):
    U = _haar_sp(rng, count, N, cols=M)
    return truncate(U, M, quaternion=True)


def _cse(rng, count, k):
    U = _haar_u(rng, count, 2 * k)
    J = symplectic_form(k)
    UD = -J @ np.swapaxes(U, -1, -2) @ J  # J^{-1} = -J
    return UD @ U


def _dual_complex(rng, count, k):
    return _cgauss(rng, (count, k, k))


def _antisym_from_upper(vals: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    X = np.zeros(vals.shape[:-1] + (n, n), dtype=vals.dtype)
    X[..., iu[0], iu[1]] = vals
    return X - np.swapaxes(X, -1, -2)


def _sym_from_upper(vals: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    X = np.zeros(vals.shape[:-1] + (n, n), dtype=vals.dtype)
    X[..., iu[0], iu[1]] = vals
    return X + np.swapaxes(np.triu(X, 1), -1, -2)


def _dual_antisym(rng, count, k):
    n = 2 * k
    return _antisym_from_upper(_cgauss(rng, (count, n * (n - 1) // 2)), n)


def _sym_variances(n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    return np.where(iu[0] == iu[1], 1.0, 0.5)


def _dual_sym(rng, count, k):
    n = 2 * k
    var = _sym_variances(n)
    return _sym_from_upper(_cgauss(rng, (count, len(var))) * np.sqrt(var), n)


# heavy-tailed duals by importance sampling ------------------------------------

def heavy_dual_exponent(tag, N: int, k: int) -> float:
    """Exponent ``a`` of the target ``det(I + XX^+)^(-a)``."""
    tag = EnsembleTag.parse(tag)
    if tag is EnsembleTag.DualHeavyTUE:
        return N + 2 * k
    if tag is EnsembleTag.DualHeavyTOE:
        return N / 2 - 1 + 2 * k
    if tag is EnsembleTag.DualHeavyTSE:
        return N + 1 + 2 * k
    raise ValueError(f"{tag.name} is not a heavy-tailed dual")


def _heavy_layout(tag: EnsembleTag, k: int):
    """(matrix size, multiplicity of each complex coordinate in Tr XX^+, builder)."""
    if tag is EnsembleTag.DualHeavyTUE:
        return k, np.ones(k * k), lambda v: v.reshape(v.shape[:-1] + (k, k))
    n = 2 * k
    if tag is EnsembleTag.DualHeavyTOE:
        return n, np.full(n * (n - 1) // 2, 2.0), lambda v: _antisym_from_upper(v, n)
    return n, 1 / _sym_variances(n), lambda v: _sym_from_upper(v, n)


def _proposal_params(a: float, mult: np.ndarray) -> tuple[float, np.ndarray]:
    # the target decays like |x|^(-2a) along rank-one directions; nu <= 2a - d
    # keeps the weights bounded there
    d = 2 * len(mult)
    nu = float(min(4.0, max(1.0, 2 * a - d)))
    sigma = 1.0 / np.sqrt(2 * max(a - d / 2, 1.0) * np.tile(mult, 2))
    return nu, sigma


def _heavy_chunk(tag: EnsembleTag, N: int, k: int, rng, count):
    """Matrices and log importance weights ``log target - log proposal``.

    The proposal is an isotropic multivariate Student t on the real
    coordinates; the target is the unnormalized heavy-tailed density.
    """
    a = heavy_dual_exponent(tag, N, k)
    if a <= 0:
        raise ValueError("heavy-tailed dual needs a positive exponent")
    n, mult, build = _heavy_layout(tag, k)
    m = len(mult)
    d = 2 * m
    nu, sigma = _proposal_params(a, mult)
    g = rng.standard_normal((count, d))
    chi = rng.chisquare(nu, count)
    x = sigma * g / np.sqrt(chi / nu)[:, None]
    r2 = np.einsum("bi,bi->b", g, g) * nu / chi
    log_q = (gammaln((nu + d) / 2) - gammaln(nu / 2) - d / 2 * math.log(nu * math.pi)
             - float(np.sum(np.log(sigma))) - (nu + d) / 2 * np.log1p(r2 / nu))
    X = build(x[:, :m] + 1j * x[:, m:])
    H = np.eye(n) + X @ np.conj(np.swapaxes(X, -1, -2))
    la, _ = _kernels.batch_logdet(H)
    return X, -a * la - log_q


_SAMPLERS = {
    EnsembleTag.GinUE: (("N",), _ginue),
    EnsembleTag.GinOE: (("N",), _ginoe),
    EnsembleTag.GinSE: (("N",), _ginse),
    EnsembleTag.TUE: (("N", "M"), _tue),
    EnsembleTag.TOE: (("N", "M"), _toe),
    EnsembleTag.TSE: (("N", "M"), _tse),
    EnsembleTag.DualGaussComplex: (("k",), _dual_complex),
    EnsembleTag.DualGaussAntisym: (("k",), _dual_antisym),
    EnsembleTag.DualGaussSym: (("k",), _dual_sym),
    EnsembleTag.HaarU: (("N",), _haar_u),
    EnsembleTag.HaarO: (("N",), _haar_o),
    EnsembleTag.HaarSp: (("N",), _haar_sp),
    EnsembleTag.CSE: (("k",), _cse),
}


def _check_dims(tag: EnsembleTag, dims: dict) -> dict:
    if tag in _HEAVY:
        need = ("N", "k")
    else:
        need = _SAMPLERS[tag][0]
    out = {}
    for key in need:
        if key not in dims or dims[key] is None:
            raise ValueError(f"{tag.name} needs dimension {key!r}")
        v = dims[key]
        if int(v) != v or v < 1:
            raise ValueError(f"dimension {key} must be a positive integer, got {v!r}")
        out[key] = int(v)
    if "M" in out and out["M"] > out["N"]:
        raise ValueError(f"truncation size M={out['M']} exceeds N={out['N']}")
    return out


def sample_batch(tag, dims: dict, seed: int, chunk: int, count: int = CHUNK, stream: int = 0):
    """Matrices and log importance weights for one chunk of a stream.

    Returns ``(matrices, log_weights)`` with leading dimension ``count``.
    ``stream`` separates independent uses of the same ensemble.
    """
    tag = EnsembleTag.parse(tag)
    dims = _check_dims(tag, dims)
    if not (1 <= count <= CHUNK):
        raise ValueError(f"count must be in [1, {CHUNK}]")
    rng = chunk_rng(seed, _STREAM_ID[tag] + 64 * int(stream), chunk)
    if tag in _HEAVY:
        X, lw = _heavy_chunk(tag, dims["N"], dims["k"], rng, CHUNK)
        return X[:count], lw[:count]
    fn = _SAMPLERS[tag][1]
    mats = fn(rng, CHUNK, *[dims[key] for key in _SAMPLERS[tag][0]])
    return mats[:count], np.zeros(count)


def sample(tag, dims: dict, seed: int, index: int, stream: int = 0) -> Sample:
    """Draw number ``index`` of the ``(tag, seed, stream)`` sequence."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    mats, lw = sample_batch(tag, dims, seed, index // CHUNK, CHUNK, stream)
    i = index % CHUNK
    return Sample(mats[i].copy(), float(lw[i]))


def haar_unitary(N: int, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Haar unitary matrix (or a stack of ``count`` of them)."""
    if N < 1:
        raise ValueError("N must be positive")
    U = _haar_u(rng, 1 if count is None else count, N)
    return U[0] if count is None else U


def haar_orthogonal(N: int, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be positive")
    O = _haar_o(rng, 1 if count is None else count, N)
    return O[0] if count is None else O


def haar_symplectic(N: int, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Haar symplectic matrix in its ``2N x 2N`` complex representation.

    The output satisfies ``J conj(U) J^{-1} = U`` and ``UU^+ = I``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    U = _haar_sp(rng, 1 if count is None else count, N)
    return U[0] if count is None else U


def sample_cse(k: int, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Self-dual unitary ``U^D U`` with ``U`` Haar in ``U(2k)``."""
    if k < 1:
        raise ValueError("k must be positive")
    S = _cse(rng, 1 if count is None else count, k)
    return S[0] if count is None else S


# weighted expectations -------------------------------------------------------

def _weighted_stats(logw: np.ndarray, fx: np.ndarray):
    m = float(np.max(logw))
    w = np.exp(logw - m)
    sw = float(np.sum(w))
    mean = complex(np.sum(w * fx) / sw)
    se = math.sqrt(float(np.sum(w * w * np.abs(fx - mean) ** 2))) / sw
    ess = sw * sw / float(np.sum(w * w))
    return mean, se, ess, m, sw


def dual_heavy_expectation(
    tag,
    dims: dict,
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    seed: int,
    workers: int | None = None,
    stream: int = 0,
    min_ess: float = MIN_ESS,
) -> MCEstimate:
    """Self-normalized importance-sampling estimate of ``E f(X)``.

    ``f`` maps a stack of dual matrices ``(count, n, n)`` to values
    ``(count,)``. The standard error is the delta-method estimate
    ``sqrt(sum w^2 |f - mean|^2) / sum w``.

    Raises
    ------
    ReliabilityError
        If the effective sample size ``(sum w)^2 / sum w^2`` is below
        ``min_ess``.
    """
    tag = EnsembleTag.parse(tag)
    if tag not in _HEAVY:
        raise ValueError(f"{tag.name} is not a heavy-tailed dual")
    if n < 2:
        raise ValueError("n must be at least 2")
    dims = _check_dims(tag, dims)

    def chunk(c, count):
        X, lw = sample_batch(tag, dims, seed, c, count, stream)
        fx = np.asarray(f(X), dtype=np.complex128)
        return np.stack([lw.astype(np.complex128), fx], axis=1)

    out = run_chunks(chunk, n, workers)
    mean, se, ess, _, _ = _weighted_stats(out[:, 0].real, out[:, 1])
    if ess < min_ess:
        raise ReliabilityError(f"effective sample size {ess:.1f} below {min_ess:g}")
    return MCEstimate(mean, se, n, seed, ess)


def dual_heavy_volume(tag, dims: dict, n: int, seed: int, workers: int | None = None) -> MCEstimate:
    """Total mass of the unnormalized heavy-tailed density, ``mean(w)``.

    The result estimates the normalization integral over the real and
    imaginary parts of the free entries.
    """
    tag = EnsembleTag.parse(tag)
    if tag not in _HEAVY:
        raise ValueError(f"{tag.name} is not a heavy-tailed dual")
    if n < 2:
        raise ValueError("n must be at least 2")
    dims = _check_dims(tag, dims)

    def chunk(c, count):
        return sample_batch(tag, dims, seed, c, count, stream=1)[1]

    lw = run_chunks(chunk, n, workers)
    m = float(np.max(lw))
    w = np.exp(lw - m)
    mean = float(np.mean(w)) * math.exp(m)
    se = float(np.std(w, ddof=1)) * math.exp(m) / math.sqrt(n)
    ess = float(np.sum(w)) ** 2 / float(np.sum(w * w))
    return MCEstimate(complex(mean), se, n, seed, ess)
