#!/usr/bin/env python3
"""Time the numba kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py            # moderate sizes
    python3 benchmarks/bench_kernels.py --full     # the compare-pipeline sizes

The first numba call is timed separately (JIT compile or cache load).
"""

import argparse
import time

import numpy as np

from mfunc import kernels
from mfunc.euler import local_curve, spec_zeta, taylor_table


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(full):
    spec = spec_zeta()
    n_t, n_p = (100_000, 10_000) if full else (20_000, 2_000)
    tab = taylor_table(spec, 1.2, n_p)
    dt = 2e4 / (2 * n_t - 1)
    yield (f"taylor_phase_sum ({n_t} t x {n_p} primes)", "taylor_phase_sum",
           (0.5 * dt, dt, n_t, tab.logp, tab.X, tab.coef, tab.offs, tab.nterm))

    c = local_curve(spec, 1, 0.75)
    z = c.nodes(4096 if full else 1024)
    rng = np.random.default_rng(1)
    m = 20_000 if full else 4_000
    yield (f"charfn_points ({z.size} nodes x {m} w)", "charfn_points",
           (z.real.copy(), z.imag.copy(), rng.normal(0, 50, m), rng.normal(0, 50, m)))

    k = 2_000_000 if full else 200_000
    re, im = rng.normal(0, 0.4, k), rng.normal(0, 0.4, k)
    yield (f"bin_counts ({k} samples, 256^2 bins)", "bin_counts",
           (re, im, -2.4, 4.8 / 256, 256, -2.4, 4.8 / 256, 256))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    impls = kernels.implementations()
    if "numba" not in impls:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<48}{'numpy s':>10}{'numba 1st':>11}{'numba s':>10}{'speedup':>9}{'max diff':>11}")
    for label, name, argv in cases(args.full):
        f_np = getattr(impls["numpy"], name)
        f_nb = getattr(impls["numba"], name)
        first, _ = _time(lambda: f_nb(*argv), 1)
        t_nb, out_nb = _time(lambda: f_nb(*argv), args.repeat)
        t_np, out_np = _time(lambda: f_np(*argv), max(1, args.repeat - 2))
        if isinstance(out_np, tuple):
            diff = float(np.abs(out_np[0] - out_nb[0]).max()) + abs(out_np[1] - out_nb[1])
        else:
            diff = float(np.abs(out_np - out_nb).max())
        print(f"{label:<48}{t_np:>10.3f}{first:>11.3f}{t_nb:>10.3f}{t_np / t_nb:>8.1f}x{diff:>11.2e}")


if __name__ == "__main__":
    main()
