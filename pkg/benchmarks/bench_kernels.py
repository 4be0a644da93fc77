#!/usr/bin/env python3
"""Time the numba and numpy elimination kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--runs 5] [--json out.json]

Both backends are checked to agree before anything is timed.
"""
import argparse
import json
import sys
import time

import numpy as np

from ffalign import _kernels

WARMUP = 2
CASES = [
    # (kernel, p, shape)
    ("rank", 3, (60, 60)),
    ("rank", 7, (200, 200)),
    ("det", 5, (120, 120)),
    ("batch_rank", 3, (20000, 6, 6)),
    ("batch_rank", 7, (20000, 10, 10)),
    ("batch_rank", 2, (50000, 3, 3)),
]


def _inputs(p, shape, seed=0):
    return np.random.default_rng(seed).integers(0, p, size=shape, dtype=np.int64)


def _call(kernel, a, p, backend):
    return getattr(_kernels, kernel)(a, p, backend=backend)


def _time(kernel, a, p, backend, runs):
    for _ in range(WARMUP):
        _call(kernel, a, p, backend)
    best = float("inf")
    for _ in range(runs):
        t0 = time.perf_counter()
        _call(kernel, a, p, backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable (or FFALIGN_DISABLE_NUMBA set); timing numpy only", file=sys.stderr)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])

    rows = []
    print(f"{'kernel':<11} {'p':>2} {'shape':<16} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for kernel, p, shape in CASES:
        a = _inputs(p, shape)
        results = [np.asarray(_call(kernel, a, p, b)) for b in backends]
        for r in results[1:]:
            if not np.array_equal(r, results[0]):
                raise SystemExit(f"{kernel} p={p} {shape}: backends disagree")
        times = {b: _time(kernel, a, p, b, args.runs) for b in backends}
        speedup = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        rows.append({"kernel": kernel, "p": p, "shape": list(shape), "seconds": times, "speedup": speedup})
        cells = " ".join(f"{times[b] * 1e3:>8.2f}ms" for b in backends)
        print(f"{kernel:<11} {p:>2} {str(shape):<16} {cells}   {speedup:6.1f}x")

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
