"""Time the numba and pure-numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Both flavours are imported side by side, so no environment flag is needed;
results are checked for agreement before timings are printed.
"""

import argparse
import time

import numpy as np

from hiddencomm import _kernels as k


def sym(n, rng):
    a = np.triu(rng.normal(size=(n, n)), 1)
    return a + a.T


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'size':<16}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")

    for n, t in [(20, 5), (24, 6), (26, 8)]:
        L = sym(n, rng)
        k.exhaustive_numba(L, t, False, 1e-9)  # compile outside the timing
        tn, (bn, sn) = best_time(lambda: k.exhaustive_numba(L, t, False, 1e-9), args.repeat)
        tp, (bp, sp) = best_time(lambda: k.exhaustive_numpy(L, t, False, 1e-9), args.repeat)
        assert sorted(bn) == sorted(bp) and sn == sp
        print(f"{'exhaustive':<12}{f'n={n} K={t}':<16}{tn:>10.4f}{tp:>10.4f}{tp / tn:>9.1f}")

    for n, t in [(200, 20), (1000, 50), (2000, 100)]:
        L = sym(n, rng)
        init = np.sort(rng.choice(n, t, replace=False))
        k.local_search_numba(L, init, 10, 1e-10)
        tn, (on, _) = best_time(lambda: k.local_search_numba(L, init, 10_000, 1e-10), args.repeat)
        tp, (op, _) = best_time(lambda: k.local_search_numpy(L, init, 10_000, 1e-10), args.repeat)
        assert np.array_equal(np.sort(on), np.sort(op))
        print(f"{'local':<12}{f'n={n} K={t}':<16}{tn:>10.4f}{tp:>10.4f}{tp / tn:>9.1f}")


if __name__ == "__main__":
    main()
