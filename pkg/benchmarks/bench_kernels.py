"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--end-to-end]

Each kernel runs on the same inputs under every importable backend; the
table gives the best-of-``repeat`` wall time and the speedup over the
fallback.  ``--end-to-end`` also times one Monte Carlo multiplication in a
subprocess per backend (the backend is fixed at import).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ssmm import _pykernels, kernels
from ssmm.semiring import INT64

E2E = """
import time
from ssmm.iosim import IoConfig, SimDisk
from ssmm.matrix_store import gen_random
from ssmm.driver import EmitSink, monte_carlo_multiply
from ssmm.kernels import BACKEND
from ssmm.semiring import INT64
d = SimDisk(IoConfig(4096, 64))
A, C = gen_random(d, 128, 2000, INT64, 1), gen_random(d, 128, 2000, INT64, 2)
t = time.perf_counter()
monte_carlo_multiply(A, C, EmitSink(INT64, keep=False), 0)
print(BACKEND, time.perf_counter() - t)
"""


def cases(rng):
    sr, kind = INT64, INT64.kind
    n, dim, W = 200_000, 2048, 8
    Y = rng.integers(-50, 50, (dim, W))
    src, dst = rng.integers(0, dim, n), rng.integers(0, dim, n)
    vals = rng.integers(1, 50, n)
    yield "scatter", lambda m: m.scatter(_pykernels.zeros((dim, W), kind, sr), Y, src, dst, vals, kind, sr, True)

    cell = rng.integers(0, 64, n)
    yield "bucket_scatter", lambda m: m.bucket_scatter(_pykernels.zeros((dim, 64), kind, sr), dst, cell, vals,
                                                        kind, sr)

    reps, r, na = 21, 256, 20_000
    a_k, c_k = np.sort(rng.integers(0, 512, na)), np.sort(rng.integers(0, 512, na))
    a_pos, c_pos = rng.integers(0, r, (reps, na)), rng.integers(0, r, (reps, na))
    a_val, c_val = rng.integers(1, 50, na), rng.integers(1, 50, na)
    yield "poly_accumulate_groups", lambda m: m.poly_accumulate_groups(
        _pykernels.zeros((reps, 2 * r - 1), kind, sr), a_k, a_pos, a_val, c_k, c_pos, c_val, r, kind, sr)

    P, Q = rng.integers(-9, 9, (reps, r)), rng.integers(-9, 9, (reps, r))
    yield "poly_product_add", lambda m: m.poly_product_add(_pykernels.zeros((reps, 2 * r - 1), kind, sr), P, Q,
                                                            kind, sr)

    acc = rng.integers(0, 3, (reps, 2 * r - 1))
    rp, cp = rng.integers(0, r, (reps, 300)), rng.integers(0, r, (reps, 300))
    yield "majority_decode", lambda m: m.majority_decode(acc, rp, cp, kind, sr)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    backends = kernels.backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(rng):
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for b, m in backends.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<24}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>9.1f}x")
    if args.end_to_end:
        for pure in ("1", "0"):
            env = dict(os.environ, SSMM_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
            backend, secs = out.stdout.split()
            print(f"monte_carlo_multiply U=128 nnz=2000 [{backend}]: {float(secs):.2f}s")


if __name__ == "__main__":
    main()
