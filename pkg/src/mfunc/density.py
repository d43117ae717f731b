"""Fourier inversion of Lambda_N to the M-function and integrals against it.

Measures follow |dz| = dx dy / (2 pi), and |dw| = du dv / (2 pi) for the
w-plane.  With that pair of conventions

    M(z) = int e^{-i<z,w>} Lambda(w) |dw|,   int M |dz| = Lambda(0) = 1,

and the Gaussian exp(-|w|^2/2) is its own transform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CoverageError, DomainError, InversionQualityError, PreflightError

NORM_TOL = 0.01
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        vals = (self.x0, self.x1, self.y0, self.y1)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"rectangle must be finite: {vals}")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise DomainError(f"rectangle edges out of order: {vals}")

    @classmethod
    def square(cls, half, cx=0.0, cy=0.0):
        return cls(cx - half, cx + half, cy - half, cy + half)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def conj(self):
        return Rectangle(self.x0, self.x1, -self.y1, -self.y0)

    def contains(self, other, slack=1e-12):
        return (other.x0 >= self.x0 - slack and other.x1 <= self.x1 + slack
                and other.y0 >= self.y0 - slack and other.y1 <= self.y1 + slack)

    def as_tuple(self):
        return (self.x0, self.x1, self.y0, self.y1)


def _overlap(edges, lo, hi):
    """Fraction of each cell [edges[i], edges[i+1]] covered by [lo, hi]."""
    a = np.clip(lo, edges[:-1], edges[1:])
    b = np.clip(hi, edges[:-1], edges[1:])
    return (b - a) / np.diff(edges)


@dataclass
class DensityGrid:
    """M_sigma sampled at cell centres of a regular grid on a rectangle."""

    spec_name: str
    sigma: float
    rect: Rectangle
    nx: int
    ny: int
    values: np.ndarray
    clip_mass: float = 0.0
    norm_defect: float = 0.0
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dx(self):
        return (self.rect.x1 - self.rect.x0) / self.nx

    @property
    def dy(self):
        return (self.rect.y1 - self.rect.y0) / self.ny

    @property
    def x(self):
        return self.rect.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self):
        return self.rect.y0 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def x_edges(self):
        return self.rect.x0 + np.arange(self.nx + 1) * self.dx

    @property
    def y_edges(self):
        return self.rect.y0 + np.arange(self.ny + 1) * self.dy

    @property
    def cell_mass(self):
        """Integral of M over each cell (midpoint rule), in |dz| measure."""
        return self.values * (self.dx * self.dy / (2.0 * np.pi))

    @property
    def total_mass(self):
        return float(self.cell_mass.sum())

    def geometry(self):
        return (self.rect.x0, self.dx, self.nx, self.rect.y0, self.dy, self.ny)

    def sidecar(self):
        d = {"spec": self.spec_name, "sigma": self.sigma, "rect": list(self.rect.as_tuple()),
             "resolution": [self.nx, self.ny], "clip_mass": self.clip_mass,
             "norm_defect": self.norm_defect, "imag_residue": self.imag_residue,
             "dz_normalization": "|dz| = dx dy / (2 pi)"}
        d.update(self.meta)
        return d

    def to_csv(self, path, sidecar_extra=None, matrix=True):
        path = Path(path)
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        data = np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="x,y,m", comments="")
        meta = self.sidecar()
        if sidecar_extra:
            meta.update(sidecar_extra)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        if matrix:
            self.to_gnuplot(path.with_suffix(".matrix"))

    def to_gnuplot(self, path):
        """Text 'nonuniform matrix' file: first row ny y_1..y_ny, then x_i m_i1..m_iny."""
        head = np.concatenate(([self.ny], self.y))[None, :]
        body = np.column_stack([self.x, self.values])
        np.savetxt(path, np.vstack([head, body]), fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        nx, ny = meta["resolution"]
        known = {"spec", "sigma", "rect", "resolution", "clip_mass", "norm_defect",
                 "imag_residue", "dz_normalization"}
        return cls(meta["spec"], meta["sigma"], Rectangle(*meta["rect"]), nx, ny,
                   data[:, 2].reshape(nx, ny), meta["clip_mass"], meta["norm_defect"],
                   meta.get("imag_residue", 0.0),
                   {k: v for k, v in meta.items() if k not in known})


def auto_rectangle(variance, k=6.0):
    """[-k sd, k sd]^2 with sd the per-component standard deviation."""
    sd = math.sqrt(variance)
    return Rectangle.square(k * sd)


def _trapezoid_weights(n):
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def invert(grid, z_rect=None, resolution=256, require_preflight=True,
           norm_tol=NORM_TOL, imag_tol=IMAG_TOL):
    """M_sigma(z) by a direct 2-D trapezoidal sum over the w-grid.

    Negative lobes are clipped to zero and the clipped mass is reported; the
    density is not renormalised.
    """
    if require_preflight and len(grid.decaying_primes) < 5:
        raise PreflightError(
            f"{grid.spec_name}: only {len(grid.decaying_primes)} primes with verified "
            "|w|^(-1/2) decay (need 5)"
        )
    if z_rect is None:
        if not math.isfinite(grid.variance):
            raise DomainError("z_rect required: grid carries no variance")
        z_rect = auto_rectangle(grid.variance)
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else map(int, resolution)
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise DomainError("resolution must be >= 2 per axis")
    du = grid.spacing
    period = 2.0 * np.pi / du
    if max(z_rect.x1 - z_rect.x0, z_rect.y1 - z_rect.y0) >= period:
        raise DomainError(
            f"z-rectangle wider than the alias period 2 pi / du = {period:.3g}; "
            "raise the w-grid resolution"
        )
    out = DensityGrid(grid.spec_name, grid.sigma, z_rect, nx, ny, np.zeros((nx, ny)))
    wt = _trapezoid_weights(grid.axis.size)
    ex = np.exp(-1j * np.outer(out.x, grid.axis)) * wt
    ey = np.exp(-1j * np.outer(out.y, grid.axis)) * wt
    m = (ex @ grid.values @ ey.T) * (du * du / (2.0 * np.pi))
    imag = float(np.abs(m.imag).max())
    if imag > imag_tol:
        raise InversionQualityError(f"imaginary residue {imag:.3g} > {imag_tol:g}", achieved=imag)
    vals = m.real
    neg = vals < 0
    cell = out.dx * out.dy / (2.0 * np.pi)
    out.clip_mass = abs(float(vals[neg].sum() * cell))
    vals[neg] = 0.0
    out.values = vals
    out.imag_residue = imag
    out.norm_defect = abs(1.0 - float(vals.sum() * cell))
    out.meta = {"N": grid.prime_cutoff, "W_max": grid.w_max, "w_nodes": int(grid.axis.size),
                "heuristic": bool(grid.heuristic), "tail_bound": grid.tail_bound}
    if out.norm_defect > norm_tol:
        raise InversionQualityError(
            f"norm defect {out.norm_defect:.3g} > {norm_tol:g}: enlarge W_max, the w-grid or N",
            achieved=out.norm_defect,
        )
    return out


def region_mass(density, R):
    """W_sigma(R) = int_R M |dz| with partial cells prorated."""
    if not density.rect.contains(R):
        inter_x = max(0.0, min(R.x1, density.rect.x1) - max(R.x0, density.rect.x0))
        inter_y = max(0.0, min(R.y1, density.rect.y1) - max(R.y0, density.rect.y0))
        frac = 1.0 - (inter_x * inter_y / R.area if R.area > 0 else 0.0)
        raise CoverageError(f"rectangle {R.as_tuple()} leaves the density grid "
                            f"({frac:.1%} uncovered)", uncovered=frac)
    fx = _overlap(density.x_edges, R.x0, R.x1)
    fy = _overlap(density.y_edges, R.y0, R.y1)
    return float(fx @ density.cell_mass @ fy)


def expectation(density, phi):
    """int Phi(z) M(z) |dz| over the grid; Phi takes a complex array."""
    X, Y = np.meshgrid(density.x, density.y, indexing="ij")
    vals = np.asarray(phi(X + 1j * Y))
    if vals.shape != X.shape:
        vals = np.broadcast_to(vals, X.shape)
    return complex(np.sum(vals * density.cell_mass))
