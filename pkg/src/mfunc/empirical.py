"""Sampling log phi(sigma + it) on vertical lines and comparing with M_sigma.

Values come from the truncated Euler product

    log phi_N(sigma + it) = -sum_{n<=N} sum_k Log(1 - a_n^(k) p_n^(-sigma-it))
                          = sum_{n<=N} sum_j r_{j,n} p_n^(-j sigma) e^(-i j t log p_n).

t runs over an equidistant grid of [-T, T]; since every shipped spec has real
Dirichlet coefficients, the value at -t is the conjugate of the value at t,
so only t >= 0 is computed and the rest mirrored.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .charfun import prime_power_tail
from .density import DensityGrid, Rectangle, _overlap
from .errors import DomainError, GridTooSmallError, SingularityError
from .euler import clog1p, taylor_table

log = logging.getLogger(__name__)

MIN_SAMPLES = 1000
MAX_OUT_OF_RANGE = 0.05


def sample_log(spec, sigma, t, prime_cutoff):
    """Truncated log phi(sigma + it); accepts scalar or array t."""
    sigma = float(sigma)
    if sigma <= 0:
        raise DomainError("sample_log: sigma must be > 0")
    t = np.asarray(t, dtype=np.float64)
    acc = np.zeros(t.shape, dtype=np.complex128)
    for n in range(1, int(prime_cutoff) + 1):
        p = spec.prime(n)
        a = spec.roots(n)
        if a.size == 0:
            continue
        X = float(p) ** (-sigma)
        if np.abs(a).max() * X >= 1.0:
            raise SingularityError(f"|a| p^-sigma >= 1 at p={p}")
        e = X * np.exp(-1j * t * math.log(p))
        for ak in a:
            acc -= clog1p(-ak * e)
    return acc[()] if acc.ndim == 0 else acc


def truncation_bound(spec, sigma, prime_cutoff):
    """Bound for |log phi - log phi_N| when sigma > 1 (inf otherwise)."""
    if sigma <= 1.0:
        return math.inf
    p_last = int(spec.primes(prime_cutoff)[-1])
    # |Log(1 - aX)| <= -log(1 - X) <= X / (1 - X) for |a| <= 1
    return spec.C0 * prime_power_tail(p_last, sigma)


def t_grid(T, sample_count):
    """(t_nonneg, mirrored) for `sample_count` equidistant points on [-T, T].

    Points are -T + k dt with dt = 2T/(S-1); t >= 0 values are j dt (S odd) or
    (j + 1/2) dt (S even).  `mirrored` says whether t_nonneg[0] = 0 is its own
    mirror image.
    """
    S = int(sample_count)
    dt = 2.0 * T / (S - 1)
    if S % 2:
        return np.arange((S + 1) // 2) * dt, True
    return (np.arange(S // 2) + 0.5) * dt, False


def sample_line(spec, sigma, T, sample_count, prime_cutoff):
    """All sampled values of log phi_N on the t-grid, ordered by t ascending."""
    S = int(sample_count)
    dt = 2.0 * T / (S - 1)
    tab = taylor_table(spec, sigma, int(prime_cutoff))
    if S % 2:
        t0, count = 0.0, (S + 1) // 2
    else:
        t0, count = 0.5 * dt, S // 2
    half = kernels.taylor_phase_sum(t0, dt, count, tab.logp, tab.X, tab.coef, tab.offs,
                                    tab.nterm)
    if S % 2:
        return np.concatenate((np.conj(half[:0:-1]), half))
    return np.concatenate((np.conj(half[::-1]), half))


@dataclass
class EmpiricalHistogram:
    spec_name: str
    sigma: float
    T: float
    sample_count: int
    prime_cutoff: int
    geometry: tuple  # (x0, dx, nx, y0, dy, ny), identical to the paired DensityGrid
    counts: np.ndarray
    out_of_range: int
    mean: complex = 0j
    var_re: float = 0.0
    var_im: float = 0.0
    seed: int = 0
    heuristic: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def x_edges(self):
        x0, dx, nx = self.geometry[:3]
        return x0 + np.arange(nx + 1) * dx

    @property
    def y_edges(self):
        y0, dy, ny = self.geometry[3:]
        return y0 + np.arange(ny + 1) * dy

    @property
    def rect(self):
        xe, ye = self.x_edges, self.y_edges
        return Rectangle(xe[0], xe[-1], ye[0], ye[-1])

    def sidecar(self):
        d = {"spec": self.spec_name, "sigma": self.sigma, "T": self.T,
             "samples": self.sample_count, "cutoff": self.prime_cutoff, "seed": self.seed,
             "heuristic": self.heuristic, "out_of_range": self.out_of_range,
             "geometry": list(self.geometry),
             "mean": [self.mean.real, self.mean.imag], "var": [self.var_re, self.var_im]}
        d.update(self.meta)
        return d

    def to_csv(self, path, sidecar_extra=None):
        path = Path(path)
        x0, dx, nx, y0, dy, ny = self.geometry
        xc = x0 + (np.arange(nx) + 0.5) * dx
        yc = y0 + (np.arange(ny) + 0.5) * dy
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        with open(path, "w") as fh:
            fh.write("x,y,count\n")
            for a, b, c in zip(X.ravel().tolist(), Y.ravel().tolist(),
                               self.counts.ravel().tolist()):
                fh.write(f"{a!r},{b!r},{c}\n")
        meta = self.sidecar()
        if sidecar_extra:
            meta.update(sidecar_extra)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        geom = tuple(meta["geometry"])
        nx, ny = int(geom[2]), int(geom[5])
        geom = (geom[0], geom[1], nx, geom[3], geom[4], ny)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        counts = data[:, 2].astype(np.int64).reshape(nx, ny)
        return cls(meta["spec"], meta["sigma"], meta["T"], meta["samples"], meta["cutoff"],
                   geom, counts, meta["out_of_range"], complex(*meta["mean"]),
                   meta["var"][0], meta["var"][1], meta.get("seed", 0),
                   meta.get("heuristic", False))


def build_histogram(spec, sigma, T, sample_count, prime_cutoff, geometry, seed=0):
    """Histogram of log phi_N(sigma + it) over the t-grid of [-T, T].

    `geometry` is a DensityGrid or an (x0, dx, nx, y0, dy, ny) tuple.  Sampling
    is deterministic; `seed` is recorded for downstream randomised checks.
    """
    if sample_count < MIN_SAMPLES:
        raise DomainError(f"sample_count must be >= {MIN_SAMPLES}")
    if T <= 0:
        raise DomainError("T must be > 0")
    geom = geometry.geometry() if isinstance(geometry, DensityGrid) else tuple(geometry)
    vals = sample_line(spec, sigma, T, sample_count, prime_cutoff)
    counts, oor = kernels.bin_counts(vals.real, vals.imag, *geom)
    hist = EmpiricalHistogram(spec.name, float(sigma), float(T), int(sample_count),
                              int(prime_cutoff), geom, counts, oor,
                              mean=complex(vals.mean()), var_re=float(vals.real.var()),
                              var_im=float(vals.imag.var()), seed=int(seed),
                              heuristic=float(sigma) <= 1.0)
    if oor > MAX_OUT_OF_RANGE * sample_count:
        raise GridTooSmallError(
            f"{oor / sample_count:.1%} of samples fall outside the grid", achieved=oor
        )
    return hist


def bohr_jessen_ratio(hist, R):
    """V_sigma(T, R) / 2T: fraction of samples in R, edge bins prorated."""
    fx = _overlap(hist.x_edges, R.x0, R.x1)
    fy = _overlap(hist.y_edges, R.y0, R.y1)
    if hist.out_of_range and not hist.rect.contains(R):
        log.warning("rectangle leaves the histogram grid; %d samples are unplaced",
                    hist.out_of_range)
    return float(fx @ hist.counts @ fy) / hist.sample_count


def doubling_diagnostic(spec, sigma, R, T0, doublings, rate, prime_cutoff, geometry):
    """V(T, R)/2T for T = T0 2^k at a fixed sampling rate (samples per unit t).

    Returns (T values, ratios, |successive differences|); the differences
    shrinking is the finite-T face of the limit defining W_sigma(R).
    """
    Ts, ratios = [], []
    for k in range(int(doublings) + 1):
        T = T0 * 2**k
        S = max(MIN_SAMPLES, int(round(2 * T * rate)) | 1)
        h = build_histogram(spec, sigma, T, S, prime_cutoff, geometry)
        Ts.append(T)
        ratios.append(bohr_jessen_ratio(h, R))
    return np.array(Ts), np.array(ratios), np.abs(np.diff(ratios))


def rectangle_family(geometry, count=100, seed=0):
    """`count` bin-aligned rectangles with random edges, fixed by `seed`."""
    x0, dx, nx, y0, dy, ny = geometry
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a, b = np.sort(rng.choice(nx + 1, 2, replace=False))
        c, d = np.sort(rng.choice(ny + 1, 2, replace=False))
        out.append(((int(a), int(b), int(c), int(d)),
                    Rectangle(x0 + a * dx, x0 + b * dx, y0 + c * dy, y0 + d * dy)))
    return out


@dataclass
class DiscrepancyReport:
    sample_count: int
    l1: float
    l1_block: int
    l1_noise: float
    sup_rect: float
    sup_rect_at: tuple
    std_error: float
    out_of_range: int
    insufficient_data: bool = False

    def as_dict(self):
        d = dict(self.__dict__)
        d["sup_rect_at"] = list(self.sup_rect_at)
        return d


def _coarsen(a, bx, by):
    nx, ny = a.shape
    nx2, ny2 = nx // bx, ny // by
    return a[:nx2 * bx, :ny2 * by].reshape(nx2, bx, ny2, by).sum(axis=(1, 3))


def discrepancy(hist, density, rectangles=None, block=None, seed=None):
    """Histogram vs density: block L1, sup over a rectangle family, std error.

    L1 is taken on blocks of `block` x `block` cells (default: about 16 blocks
    per axis) so that the multinomial noise floor stays well below the signal.
    """
    if tuple(np.round(hist.geometry, 12)) != tuple(np.round(density.geometry(), 12)):
        raise DomainError("histogram and density grids differ")
    S = hist.sample_count
    if S == 0:
        nan = float("nan")
        return DiscrepancyReport(0, nan, 0, nan, nan, (), nan, 0, insufficient_data=True)
    mass = density.cell_mass
    emp = hist.counts / S
    nx, ny = hist.counts.shape
    if block is None:
        block = max(1, min(nx, ny) // 16)
    eb = _coarsen(emp, block, block)
    mb = _coarsen(mass, block, block)
    l1 = float(np.abs(eb - mb).sum())
    # expected L1 of multinomial noise, i.i.d. reference: sum E|N(0, p(1-p)/S)|
    noise = float(np.sum(np.sqrt(2.0 * mb.clip(0) * (1 - mb.clip(0, 1)) / (np.pi * S))))
    if rectangles is None:
        rectangles = rectangle_family(hist.geometry, 100, hist.seed if seed is None else seed)
    cum_e = np.zeros((nx + 1, ny + 1))
    cum_e[1:, 1:] = emp.cumsum(0).cumsum(1)
    cum_m = np.zeros((nx + 1, ny + 1))
    cum_m[1:, 1:] = mass.cumsum(0).cumsum(1)
    worst, at, p_at = -1.0, (), 0.0
    for (a, b, c, d), R in rectangles:
        e = cum_e[b, d] - cum_e[a, d] - cum_e[b, c] + cum_e[a, c]
        m = cum_m[b, d] - cum_m[a, d] - cum_m[b, c] + cum_m[a, c]
        if abs(e - m) > worst:
            worst, at, p_at = abs(e - m), R.as_tuple(), e
    std = math.sqrt(max(p_at * (1 - p_at), 0.0) / S)
    return DiscrepancyReport(S, l1, int(block), noise, float(worst), at, std,
                             hist.out_of_range, insufficient_data=S < MIN_SAMPLES)


def resample_histogram(density, sample_count, seed=0):
    """Histogram of i.i.d. draws from the cell masses of `density`."""
    mass = density.cell_mass.ravel()
    p = mass / mass.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(sample_count), p).reshape(density.nx, density.ny)
    return EmpiricalHistogram(f"resample[{density.spec_name}]", density.sigma, 0.0,
                              int(sample_count), 0, density.geometry(),
                              counts.astype(np.int64), 0, seed=seed)
