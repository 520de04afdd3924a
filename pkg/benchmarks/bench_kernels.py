"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, and the
speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from szgd import _backend
from szgd.rng import RngStream


def cases():
    rng = RngStream(0)
    n, k = 30, 10
    A = rng.substream(0).standard_normal((n, n))
    Q = A @ A.T / n + np.eye(n)
    x = rng.substream(1).standard_normal(n)
    G_frames = rng.substream(2).standard_normal((2000, n, k))
    T = 2000
    G_run = rng.substream(3).standard_normal((T, n, k))
    deltas = np.maximum(0.1 * 0.5 ** np.arange(T), 1e-5)
    lim = np.zeros(n)

    def frames(mod):
        return lambda: mod.stiefel_frames(G_frames)

    def estimates(mod):
        Vs = mod.stiefel_frames(G_frames)
        return lambda: mod.pq_estimates(Q, 0.75, x, 0.01, Vs)

    def szgd(mod):
        return lambda: mod.szgd_pq(Q, 0.75, x, 0.005, deltas, G_run, lim, 1e6)

    def gd(mod):
        return lambda: mod.gd_pq(Q, 0.75, x, 0.005, T, lim, 1e6)

    return {
        "stiefel_frames (2000 x 30 x 10)": frames,
        "pq_estimates (2000 frames)": estimates,
        "szgd_pq (T = 2000, k = 10)": szgd,
        "gd_pq (T = 2000)": gd,
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = _backend.available()
    mods = {name: _backend.get(name) for name in names}
    print(f"{'kernel':34s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, make in cases().items():
        times = {}
        for name, mod in mods.items():
            fn = make(mod)
            fn()
            times[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        row = f"{label:34s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
