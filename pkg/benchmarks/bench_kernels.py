"""Timing of the batched log-determinant and log-Pfaffian kernels.

Compares the numba loops with the numpy fallback on random complex
batches and checks that both backends agree.

    python3 benchmarks/bench_kernels.py [--batch 4096] [--sizes 4,8,16] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from charcorr import _kernels
from charcorr._accel import NUMBA_AVAILABLE


def _best(fn, A, repeat):
    fn(A[:2])  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(A)
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=4096)
    p.add_argument("--sizes", default="4,8,16")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy fallback is timed")
    print(f"{'kernel':<8}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'max diff':>12}")
    for n in (int(s) for s in args.sizes.split(",")):
        A = rng.normal(size=(args.batch, n, n)) + 1j * rng.normal(size=(args.batch, n, n))
        S = A - np.swapaxes(A, -1, -2)
        for name, M, f_np, f_nb in (
            ("logdet", A, _kernels.batch_logdet_numpy, _kernels.batch_logdet_numba),
            ("logpf", S, _kernels.batch_logpf_numpy, _kernels.batch_logpf_numba),
        ):
            t_np = _best(f_np, M, args.repeat)
            if NUMBA_AVAILABLE:
                t_nb = _best(f_nb, M, args.repeat)
                l1, p1 = f_np(M)
                l2, p2 = f_nb(M)
                diff = float(np.max(np.abs(l1 - l2) + np.abs(p1 - p2)))
                print(f"{name:<8}{n:>4}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.2f}{diff:>12.1e}")
            else:
                print(f"{name:<8}{n:>4}{1e3 * t_np:>12.2f}{'-':>12}{'-':>10}{'-':>12}")


if __name__ == "__main__":
    main()
