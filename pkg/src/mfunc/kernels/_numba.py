"""numba-compiled kernels; same contracts as ``_numpy``."""

import math
import os

import numpy as np
from numba import config, njit, prange

# the system TBB may be too old for numba; skip it instead of warning
if "NUMBA_THREADING_LAYER" not in os.environ:
    config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

RESEED = 256  # recurrence steps between exact phase evaluations


@njit(parallel=True, cache=True)
def _charfn_points(xs, ys, wr, wi):
    m = xs.shape[0]
    out = np.empty(wr.shape[0], dtype=np.complex128)
    for i in prange(wr.shape[0]):
        c = 0.0
        s = 0.0
        u = wr[i]
        v = wi[i]
        for k in range(m):
            a = xs[k] * u + ys[k] * v
            c += math.cos(a)
            s += math.sin(a)
        out[i] = complex(c / m, s / m)
    return out


def charfn_points(xs, ys, wr, wi):
    return _charfn_points(
        np.ascontiguousarray(xs, dtype=np.float64),
        np.ascontiguousarray(ys, dtype=np.float64),
        np.ascontiguousarray(np.atleast_1d(wr), dtype=np.float64),
        np.ascontiguousarray(np.atleast_1d(wi), dtype=np.float64),
    )


@njit(parallel=True, cache=True)
def _taylor_phase_sum(t0, dt, count, logp, X, coef, offs, nterm, reseed):
    out = np.zeros(count, dtype=np.complex128)
    nblk = (count + reseed - 1) // reseed
    for b in prange(nblk):
        k0 = b * reseed
        k1 = min(count, k0 + reseed)
        for n in range(logp.shape[0]):
            lp = logp[n]
            x = X[n]
            o = offs[n]
            jn = nterm[n]
            ang = (t0 + k0 * dt) * lp
            ph = complex(math.cos(ang), -math.sin(ang))
            step = complex(math.cos(dt * lp), -math.sin(dt * lp))
            for k in range(k0, k1):
                y = x * ph
                acc = coef[o + jn - 1]
                for q in range(jn - 2, -1, -1):
                    acc = acc * y + coef[o + q]
                out[k] += acc * y
                ph = ph * step
    return out


def taylor_phase_sum(t0, dt, count, logp, X, coef, offs, nterm):
    return _taylor_phase_sum(
        float(t0), float(dt), int(count),
        np.ascontiguousarray(logp, dtype=np.float64),
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(coef, dtype=np.complex128),
        np.ascontiguousarray(offs, dtype=np.int64),
        np.ascontiguousarray(nterm, dtype=np.int64),
        RESEED,
    )


@njit(cache=True)
def _bin_counts(re, im, x0, dx, nx, y0, dy, ny):
    counts = np.zeros((nx, ny), dtype=np.int64)
    out = 0
    for k in range(re.shape[0]):
        i = math.floor((re[k] - x0) / dx)
        j = math.floor((im[k] - y0) / dy)
        if i < 0 or i >= nx or j < 0 or j >= ny:
            out += 1
        else:
            counts[int(i), int(j)] += 1
    return counts, out


def bin_counts(re, im, x0, dx, nx, y0, dy, ny):
    counts, out = _bin_counts(
        np.ascontiguousarray(re, dtype=np.float64),
        np.ascontiguousarray(im, dtype=np.float64),
        float(x0), float(dx), int(nx), float(y0), float(dy), int(ny),
    )
    return counts, int(out)
