#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-NumPy fallback.

Times the two hot kernels (cosine similarity matrix and row softmax),
forward and backward, over a few shapes typical of caption/object
attention, and prints a table of per-call times plus the speedup.

Run from the repo root:

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import timeit

import numpy as np

from didan.kernels import _pure

try:
    from didan.kernels import _core
except ImportError:
    _core = None

SHAPES = [
    # (n_objects, n_caption_words, d_vse)
    (7, 5, 64),
    (9, 7, 512),
    (32, 32, 512),
    (128, 64, 1024),
]


def bench(fn, repeats):
    # Best-of-5 batches to shave scheduler noise.
    n = max(1, repeats // 5)
    return min(timeit.repeat(fn, number=n, repeat=5)) / n


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--dtype", choices=["f32", "f64"], default="f32")
    args = parser.parse_args()
    if _core is None:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    dtype = np.float32 if args.dtype == "f32" else np.float64
    rng = np.random.default_rng(0)
    header = f"{'kernel':<28}{'shape':<18}{'pure':>10}{'compiled':>10}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n_o, n_c, d in SHAPES:
        v = np.ascontiguousarray(rng.standard_normal((n_o, d)), dtype=dtype)
        w = np.ascontiguousarray(rng.standard_normal((n_c, d)), dtype=dtype)
        g_cos = np.ascontiguousarray(rng.standard_normal((n_o, n_c)), dtype=dtype)
        x = np.ascontiguousarray(rng.standard_normal((n_c, n_o)), dtype=dtype)
        g_sm = np.ascontiguousarray(rng.standard_normal((n_c, n_o)), dtype=dtype)
        y = _pure.softmax_rows_fwd(x)
        cases = [
            ("cosine_matrix_fwd", lambda m: m.cosine_matrix_fwd(v, w)),
            ("cosine_matrix_bwd", lambda m: m.cosine_matrix_bwd(v, w, g_cos)),
            ("softmax_rows_fwd", lambda m: m.softmax_rows_fwd(x)),
            ("softmax_rows_bwd", lambda m: m.softmax_rows_bwd(y, g_sm)),
        ]
        for name, call in cases:
            t_pure = bench(lambda: call(_pure), args.repeats)
            t_core = bench(lambda: call(_core), args.repeats)
            shape = f"{n_o}x{n_c}x{d}"
            print(
                f"{name:<28}{shape:<18}{t_pure * 1e6:>8.1f}us"
                f"{t_core * 1e6:>8.1f}us{t_pure / t_core:>8.2f}x"
            )


if __name__ == "__main__":
    main()
