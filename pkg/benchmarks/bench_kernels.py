"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--size 100000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from latspec import _pykernels, kernels

try:
    from latspec import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(size, rng):
    b = rng.normal(0.0, 0.5, size) / np.arange(1, size + 1)
    d = rng.normal(size=size)
    e = rng.uniform(0.5, 1.5, size - 1)
    shifts = np.linspace(-4.0, 4.0, 32)
    small = min(size, 400)
    ds, es = rng.normal(size=small), rng.uniform(0.5, 1.5, small - 1)
    return {
        "band_edge_recursion": lambda impl: kernels.band_edge_recursion(b, None, 2.0, 0.0, 1.0, store=False, impl=impl),
        "band_edge_recursion_dd": lambda impl: kernels.band_edge_recursion_dd(b, 2.0, 0.0, 1.0, store=False,
                                                                              impl=impl),
        "sturm_counts": lambda impl: kernels.sturm_counts(d, e * e, shifts, 1e-300, impl=impl),
        f"tql_implicit(n={small})": lambda impl: kernels.tql_implicit(ds.copy(), es.copy(), impl=impl),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for name, fn in cases(args.size, rng).items():
        tp = _best(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:28s} {tp:12.4f} {'n/a':>12s} {'n/a':>9s}")
            continue
        tc = _best(lambda: fn(_ckernels), args.repeat)
        print(f"{name:28s} {tp:12.4f} {tc:12.4f} {tp / tc:9.1f}x")


if __name__ == "__main__":
    main()
