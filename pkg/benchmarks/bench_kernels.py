#!/usr/bin/env python3
"""Time the numpy and numba backends of the three hot kernels.

Two shape regimes per kernel: "bulk" arrays big enough that per-call
overhead vanishes, and "trainer" shapes matching what the training loop
actually issues (per-batch loss rows, desk-scale E-steps and feature
banks), where call overhead and temporaries dominate.  Warmup calls
absorb JIT compilation; the table reports the best per-call wall time
over the timed repeats, the numba speedup, and the max elementwise
disagreement between backends.  The E-step's log-likelihood output is
an n-term sum, so its absolute disagreement grows with n while staying
at relative rounding level; the other outputs agree to ~1e-15.

Run from the repository root:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --scale 4 --repeats 10
"""

import argparse
import time

import numpy as np

import mixboot._kernels as kernels

# bulk problem sizes at --scale 1
LOSS_ROWS = 200_000
LOSS_CLASSES = 2
EM_POINTS = 500_000
QUERY_ROWS = 1_000
BANK_ROWS = 10_000
FEATURE_DIM = 64


def time_call(fn, warmup, repeats, inner):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - start) / inner)
    return min(times)


def max_disagreement(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
               for x, y in zip(a, b))


def build_workloads(scale, rng):
    n_loss = LOSS_ROWS * scale
    bulk_logits = rng.normal(0.0, 2.0, size=(n_loss, LOSS_CLASSES))
    bulk_targets = rng.dirichlet(np.ones(LOSS_CLASSES), size=n_loss)
    n_em = EM_POINTS * scale
    bulk_x = np.clip(rng.beta(2.0, 5.0, size=n_em), 1e-6, 1.0 - 1e-6)
    bulk_q = rng.normal(size=(QUERY_ROWS * scale, FEATURE_DIM))
    bulk_bank = rng.normal(size=(BANK_ROWS * scale, FEATURE_DIM))

    batch_logits = rng.normal(0.0, 2.0, size=(32, 2))
    batch_targets = rng.dirichlet(np.ones(2), size=32)
    desk_x = np.clip(rng.beta(2.0, 5.0, size=2000), 1e-6, 1.0 - 1e-6)
    desk_q = rng.normal(size=(500, FEATURE_DIM))
    desk_bank = rng.normal(size=(2000, FEATURE_DIM))

    # (kernel, regime, size label, call, inner iterations per timing)
    return [
        ("loss_from_targets", "bulk", f"{n_loss}x{LOSS_CLASSES}",
         lambda f: f(bulk_logits, bulk_targets), 1),
        ("loss_from_targets", "trainer", "32x2",
         lambda f: f(batch_logits, batch_targets), 2000),
        ("bmm_e_step", "bulk", f"{n_em}",
         lambda f: f(bulk_x, 2.0, 8.0, 8.0, 2.0, 0.5), 1),
        ("bmm_e_step", "trainer", "2000",
         lambda f: f(desk_x, 2.0, 8.0, 8.0, 2.0, 0.5), 200),
        ("min_cosine_distances", "bulk",
         f"{QUERY_ROWS * scale}x{BANK_ROWS * scale}",
         lambda f: f(bulk_q, bulk_bank), 1),
        ("min_cosine_distances", "trainer", "500x2000",
         lambda f: f(desk_q, desk_bank), 20),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=int, default=1,
                        help="bulk problem size multiplier (default 1)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repeats per kernel (default 5)")
    parser.add_argument("--warmup", type=int, default=2,
                        help="untimed warmup calls, absorbs JIT (default 2)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba backend unavailable (MIXBOOT_KERNELS=numpy or numba "
              "not importable); timing the numpy backend only")

    rng = np.random.default_rng(args.seed)
    workloads = build_workloads(args.scale, rng)

    header = (f"{'kernel':<22} {'regime':<8} {'size':>12} "
              f"{'numpy ms':>10} {'numba ms':>10} {'speedup':>8}   max diff")
    print(header)
    print("-" * len(header))
    for name, regime, size, call, inner in workloads:
        fn_numpy = getattr(kernels, name + "_numpy")
        t_np = time_call(lambda: call(fn_numpy), args.warmup, args.repeats, inner)
        if not kernels.HAS_NUMBA:
            print(f"{name:<22} {regime:<8} {size:>12} {t_np * 1e3:>10.4f}"
                  f" {'-':>10} {'-':>8}")
            continue
        fn_numba = getattr(kernels, name + "_numba")
        t_nb = time_call(lambda: call(fn_numba), args.warmup, args.repeats, inner)
        diff = max_disagreement(call(fn_numpy), call(fn_numba))
        print(f"{name:<22} {regime:<8} {size:>12} {t_np * 1e3:>10.4f} "
              f"{t_nb * 1e3:>10.4f} {t_np / t_nb:>7.2f}x   {diff:.2e}")


if __name__ == "__main__":
    main()
