"""Hot numeric kernels.

Two interchangeable implementations live side by side: ``_numba`` (compiled
with ``numba.njit``) and ``_numpy`` (vectorised reference).  The numba path is
used when numba imports cleanly, unless ``MFUNC_DISABLE_NUMBA`` is set to a
truthy value.  Both modules expose the same functions with the same
signatures; results agree to rounding (see tests/test_kernels.py).

Exported kernels:

``charfn_points(xs, ys, wr, wi)``
    mean over curve nodes of exp(i (x u + y v)) for each w = u + iv.
``taylor_phase_sum(t0, dt, count, logp, X, coef, offs, nterm)``
    sum over primes of sum_j coef_j (X e^{-i t log p})^j on t = t0 + k dt.
``bin_counts(re, im, x0, dx, nx, y0, dy, ny)``
    2-D histogram on a regular grid, plus the out-of-range count.
"""

import importlib
import os

from . import _numpy

_FLAG = "MFUNC_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def _load_numba():
    try:
        return importlib.import_module(f"{__name__}._numba")
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None


_nb = _load_numba() if _numba_requested() else None

BACKEND = "numba" if _nb is not None else "numpy"
_impl = _nb if _nb is not None else _numpy

charfn_points = _impl.charfn_points
taylor_phase_sum = _impl.taylor_phase_sum
bin_counts = _impl.bin_counts


def implementations():
    """Return {name: module} for every importable backend."""
    out = {"numpy": _numpy}
    nb = _nb if _nb is not None else _load_numba()
    if nb is not None:
        out["numba"] = nb
    return out


def set_threads(n):
    """Cap the numba worker count (no-op for the numpy backend)."""
    if _nb is None or n is None:
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
