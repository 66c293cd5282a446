"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row is the best wall time over ``--repeat`` calls after one warm-up call
(which also absorbs numba compilation).
"""

import argparse
import timeit

import numpy as np

from hyprigid import _kernels
from hyprigid.minkowski_lie import geometric_basis


def best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.NUMBA_ENABLED:
        print("numba disabled (HYPRIGID_DISABLE_NUMBA=1 or not installed); only the fallback is timed")
    rng = np.random.default_rng(0)
    rows = []

    for shape in ((31, 31, 31), (15, 15, 15, 15)):
        bands = rng.normal(size=(len(shape), max(shape), 3))
        fast = best(lambda: _kernels.kron_sum_coo(shape, bands, 4.0), args.repeat)
        slow = best(lambda: _kernels._kron_sum_coo_numpy(shape, bands, 4.0), args.repeat)
        rows.append((f"kron_sum_coo {shape}", fast, slow))

    S = geometric_basis(5).structure.astype(float)
    c = rng.normal(size=(20000, S.shape[0]))
    fast = best(lambda: _kernels.structure_contract(c, S), args.repeat)
    slow = best(lambda: np.tensordot(c, S, axes=([1], [0])), args.repeat)
    rows.append((f"structure_contract K={len(c)} n=5", fast, slow))

    print(f"{'kernel':40s} {'public (s)':>12s} {'numpy (s)':>12s} {'ratio':>8s}")
    for name, f, s in rows:
        print(f"{name:40s} {f:12.4f} {s:12.4f} {s / f:8.2f}")


if __name__ == "__main__":
    main()
