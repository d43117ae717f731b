"""Pure-numpy reference kernels (fallback path)."""

import numpy as np

_CHUNK = 1 << 22  # complex entries per temporary block


def charfn_points(xs, ys, wr, wi):
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    wr = np.atleast_1d(np.asarray(wr, dtype=np.float64))
    wi = np.atleast_1d(np.asarray(wi, dtype=np.float64))
    out = np.empty(wr.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // max(1, xs.shape[0]))
    for s in range(0, wr.shape[0], step):
        ph = np.outer(wr[s:s + step], xs) + np.outer(wi[s:s + step], ys)
        out[s:s + step] = np.exp(1j * ph).mean(axis=1)
    return out


def taylor_phase_sum(t0, dt, count, logp, X, coef, offs, nterm):
    logp = np.asarray(logp, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    nterm = np.asarray(nterm, dtype=np.int64)
    offs = np.asarray(offs, dtype=np.int64)
    coef = np.asarray(coef, dtype=np.complex128)
    out = np.zeros(count, dtype=np.complex128)
    if count == 0 or logp.size == 0:
        return out
    # primes sharing a Taylor length are evaluated together by Horner
    groups = {}
    for n, j in enumerate(nterm):
        groups.setdefault(int(j), []).append(n)
    tables = []
    for j, idx in sorted(groups.items()):
        idx = np.asarray(idx)
        c = np.empty((j, idx.size), dtype=np.complex128)
        for q in range(j):
            c[q] = coef[offs[idx] + q]
        tables.append((idx, c))
    step = max(1, _CHUNK // logp.size)
    for s in range(0, count, step):
        k = np.arange(s, min(count, s + step), dtype=np.float64)
        t = t0 + k * dt
        acc_total = np.zeros(k.size, dtype=np.complex128)
        for idx, c in tables:
            ang = np.outer(t, logp[idx])
            y = X[idx] * (np.cos(ang) - 1j * np.sin(ang))
            acc = np.broadcast_to(c[-1], y.shape).copy()
            for q in range(c.shape[0] - 2, -1, -1):
                acc = acc * y + c[q]
            acc_total += (acc * y).sum(axis=1)
        out[s:s + k.size] = acc_total
    return out


def bin_counts(re, im, x0, dx, nx, y0, dy, ny):
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    i = np.floor((re - x0) / dx)
    j = np.floor((im - y0) / dy)
    ok = (i >= 0) & (i < nx) & (j >= 0) & (j < ny)
    flat = i[ok].astype(np.int64) * ny + j[ok].astype(np.int64)
    counts = np.bincount(flat, minlength=nx * ny).reshape(nx, ny).astype(np.int64)
    return counts, int(re.size - ok.sum())
