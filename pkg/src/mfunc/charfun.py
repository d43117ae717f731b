"""Local characteristic functions K_n(w) and their truncated product.

    K_n(w) = int_0^1 exp(i <z_n(theta), w>) d theta,   <z, w> = Re z Re w + Im z Im w

is computed with the periodic trapezoidal rule.  The integrand is smooth and
1-periodic, so the rule converges geometrically once the O(|w| p^-sigma)
oscillations are resolved; node counts double (reusing the previous nodes)
until two successive values differ by less than the tolerance.

On a Cartesian w-grid the pairing separates, exp(i(u x + v y)) =
exp(i u x) exp(i v y), so one prime's contribution to the whole grid is a
single complex matrix product.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .arith import nth_prime_bound, sieve_primes
from .errors import CutoffTooSmallError, DomainError, PreflightError, QuadratureError
from .euler import local_curve, taylor_table

log = logging.getLogger(__name__)

QUAD_TOL = 1e-10
MIN_NODES = 64
MAX_NODES = 1 << 24


def initial_nodes(radius, X, g):
    return max(MIN_NODES, int(math.ceil(8.0 * radius * X * max(g, 1))))


def local_charfn(curve, w, tol=QUAD_TOL, max_nodes=MAX_NODES):
    """K_n(w) for one local curve by node-doubling periodic trapezoid."""
    w = complex(w)
    if curve.g == 0 or w == 0:
        return 1.0 + 0.0j
    M = initial_nodes(abs(w), curve.X, curve.g)
    if 2 * M > max_nodes:
        raise QuadratureError(f"K_n(w={w}) at p={curve.p} needs more than {max_nodes} nodes")
    z = curve.nodes(M)
    K = kernels.charfn_points(z.real, z.imag, [w.real], [w.imag])[0]
    while True:
        zo = curve.nodes(M, 0.5)
        Ko = kernels.charfn_points(zo.real, zo.imag, [w.real], [w.imag])[0]
        K2 = 0.5 * (K + Ko)
        err = abs(K2 - K)
        if err < tol:
            return K2
        M *= 2
        K = K2
        if 2 * M > max_nodes:
            raise QuadratureError(
                f"K_n(w={w}) at p={curve.p}: node budget {max_nodes} exhausted", achieved=err
            )


def charfn_at(curve, ws, M):
    """K_n at many w with a fixed M-node rule (no refinement)."""
    ws = np.atleast_1d(np.asarray(ws, dtype=np.complex128))
    if curve.g == 0:
        return np.ones(ws.shape, dtype=np.complex128)
    z = curve.nodes(M)
    return kernels.charfn_points(z.real, z.imag, ws.real, ws.imag)


def _converged_nodes(curve, radius, tol=QUAD_TOL):
    """Node count whose rule is converged at a probe point of modulus `radius`."""
    M = initial_nodes(radius, curve.X, curve.g)
    probe = [radius * np.exp(1j * t) for t in (0.3, 1.1, 2.0)]
    prev = charfn_at(curve, probe, M)
    while 2 * M <= MAX_NODES:
        cur = charfn_at(curve, probe, 2 * M)
        if np.abs(cur - prev).max() < tol:
            return 2 * M
        M *= 2
        prev = cur
    raise QuadratureError(f"no converged rule at |w|={radius}, p={curve.p}")


# --------------------------------------------------------------------------
# decay of K_n


@dataclass
class DecayProfile:
    """sup |K_n| against radius, normalised by the Jessen-Wintner rate.

    ``sup_fixed[i]`` is sup over directions of |K_n(r_i e^{i tau})|;
    ``sup_shell[i]`` is the sup over the shell r_i <= |w| <= shell r_i.  The
    fixed-radius value can dip when the two stationary-phase contributions
    interfere destructively for every direction (near-circular curves), so
    boundedness is judged on the shell envelope.
    """

    p: int
    sigma: float
    radii: np.ndarray
    sup_fixed: np.ndarray
    sup_shell: np.ndarray
    rate: np.ndarray  # min(|w|^(1/2) p^(-sigma/2), |w| p^(-sigma))
    r1: complex = 0j

    @property
    def normalized(self):
        return self.sup_shell * self.rate

    @property
    def normalized_fixed(self):
        return self.sup_fixed * self.rate

    @property
    def spread(self):
        v = self.normalized
        return float(v.max() / v.min())

    @property
    def degenerate(self):
        """r_1 = 0: decay is governed by higher Taylor terms and may be slower."""
        return abs(self.r1) < 1e-12

    def bounded(self, ratio=1.2):
        return self.spread <= ratio

    def rows(self):
        return [
            {"radius": float(r), "sup_fixed": float(a), "sup_shell": float(b),
             "normalized": float(b * c), "normalized_fixed": float(a * c)}
            for r, a, b, c in zip(self.radii, self.sup_fixed, self.sup_shell, self.rate)
        ]


def _abs_k(xs, ys, rho, tau):
    return np.abs(kernels.charfn_points(xs, ys, rho * np.cos(tau), rho * np.sin(tau)))


def _refine_max(xs, ys, seeds, rho_lo, rho_hi, tau_step, rho_step):
    best = 0.0

    def f(q):
        rho = min(max(q[0], rho_lo), rho_hi)
        return -_abs_k(xs, ys, np.array([rho]), np.array([q[1]]))[0]

    for rho0, tau0 in seeds:
        q0 = np.array([rho0, tau0])
        simplex = [q0, q0 + [rho_step, 0.0], q0 + [0.0, tau_step]]
        res = minimize(f, q0, method="Nelder-Mead",
                       options={"xatol": 1e-9 * max(1.0, rho_hi), "fatol": 1e-13,
                                "initial_simplex": simplex, "maxiter": 400})
        best = max(best, -res.fun)
    return best


def decay_profile(curve, radii, directions=None, shell=2.0, radial_samples=8, refine=6):
    """Table of sup |K_n| over directions (and over shells) for each radius.

    |K_n(-w)| = |K_n(w)|, so directions default to 128 angles in [0, pi).
    Coarse maxima are polished with Nelder-Mead.
    """
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise DomainError("decay_profile: radii must be positive and increasing")
    taus = (np.linspace(0.0, np.pi, 128, endpoint=False) if directions is None
            else np.asarray(directions, dtype=np.float64))
    fixed = np.empty(radii.size)
    env = np.empty(radii.size)
    for i, r in enumerate(radii):
        if curve.g == 0:
            fixed[i] = env[i] = 1.0
            continue
        M = _converged_nodes(curve, shell * r)
        z = curve.nodes(M)
        xs, ys = z.real.copy(), z.imag.copy()
        dt = np.pi / max(taus.size, 1)
        # fixed radius
        vals = _abs_k(xs, ys, np.full(taus.size, r), taus)
        seeds = [(r, taus[k]) for k in np.argsort(vals)[-refine:]]
        fixed[i] = max(vals.max(), _refine_max(xs, ys, seeds, r, r, dt / 2, 0.0))
        # shell r <= |w| <= shell r
        rho = r * (1.0 + (shell - 1.0) * np.arange(radial_samples + 1) / radial_samples)
        R, Tt = np.meshgrid(rho, taus, indexing="ij")
        vals2 = _abs_k(xs, ys, R.ravel(), Tt.ravel())
        order = np.argsort(vals2)[-refine:]
        seeds = [(R.ravel()[k], Tt.ravel()[k]) for k in order]
        rstep = r * (shell - 1.0) / radial_samples / 2
        env[i] = max(vals2.max(), fixed[i],
                     _refine_max(xs, ys, seeds, r, shell * r, dt / 2, rstep))
    rate = np.minimum(np.sqrt(radii * curve.X), radii * curve.X)
    r1 = complex(curve.r[0]) if curve.r.size else 0j
    return DecayProfile(curve.p, curve.sigma, radii, fixed, env, rate, r1)


def stationary_point_counts(curve, tau, grid=4096):
    """Sign changes of g_tau' and g_tau'' on a periodic grid of [0, 1)."""
    th = np.arange(grid) / grid
    d1, d2 = curve.pairing_derivatives(th, tau)

    def changes(v):
        s = v > 0
        return int(np.count_nonzero(s != np.roll(s, -1)))

    return changes(d1), changes(d2)


@dataclass
class PreflightResult:
    spec_name: str
    sigma: float
    threshold: float
    decaying: list = field(default_factory=list)  # primes with bounded envelope
    tested: list = field(default_factory=list)    # (p, r1, spread)

    @property
    def passed(self):
        return len(self.decaying) >= 5


def decay_preflight(spec, sigma, threshold=0.3, needed=5, max_candidates=40,
                    scaled_radii=(10.0, 100.0, 1000.0), ratio=1.2):
    """Find `needed` primes with |r_{1,n}| >= threshold and bounded decay.

    Radii are scaled per prime as s / p^-sigma, so every curve is probed in
    its own stationary-phase regime.
    """
    res = PreflightResult(spec.name, float(sigma), threshold)
    n = 0
    while len(res.decaying) < needed and len(res.tested) < max_candidates:
        n += 1
        if spec.max_index is not None and n > spec.max_index:
            break
        c = local_curve(spec, n, sigma)
        if c.g == 0 or abs(c.r[0]) < threshold:
            continue
        prof = decay_profile(c, np.asarray(scaled_radii) / c.X, radial_samples=6,
                             directions=np.linspace(0, np.pi, 64, endpoint=False), refine=4)
        res.tested.append((c.p, float(abs(c.r[0])), prof.spread))
        if prof.bounded(ratio):
            res.decaying.append(c.p)
    return res


# --------------------------------------------------------------------------
# truncation tail

_RS_CONST = 1.25506  # pi(x) < 1.25506 x / log x for x > 1


def prime_power_tail(p_after, s, explicit_to=10**6):
    """Upper bound for sum_{p > p_after} p^-s / (1 - p^-s), s > 1."""
    if s <= 1.0:
        return math.inf
    hi = max(explicit_to, 100 * int(p_after))
    ps = sieve_primes(hi).primes
    ps = ps[ps > p_after].astype(np.float64)
    q = ps ** (-s)
    total = float(np.sum(q / (1.0 - q)))
    # remainder beyond hi, with the (1 - p^-s)^-1 factor bounded at p = hi
    rest = _RS_CONST * s / ((s - 1.0) * math.log(hi)) * hi ** (1.0 - s)
    return total + rest / (1.0 - hi ** (-s))


def tail_variance(spec, sigma, cutoff):
    """Bound for sum_{n > cutoff} sum_j |r_{j,n}|^2 p_n^(-2 j sigma).

    Uses |r_{j,n}| <= g(n)/j <= C0.
    """
    p_last = int(spec.primes(cutoff)[-1]) if cutoff > 0 else 1
    return spec.C0**2 * prime_power_tail(p_last, 2.0 * sigma)


def suggest_cutoff(spec, sigma, target_var):
    """Smallest tested cutoff (doubling) whose tail variance bound is <= target."""
    n = 1000
    while n < 10**8:
        p = sieve_primes(nth_prime_bound(n)).primes[n - 1]
        if spec.C0**2 * prime_power_tail(int(p), 2.0 * sigma) <= target_var:
            return n
        n *= 2
    return n


# --------------------------------------------------------------------------
# product on a grid


@dataclass
class CharFnGrid:
    """Lambda_N(w) = prod_{n <= N} K_n(w) on a square grid symmetric about 0.

    ``values[a, b]`` is Lambda_N(axis[a] + i axis[b]).
    """

    spec_name: str
    sigma: float
    prime_cutoff: int
    w_max: float
    axis: np.ndarray
    values: np.ndarray
    tail_bound: float
    variance: float = float("nan")
    heuristic: bool = False
    decaying_primes: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def spacing(self):
        return float(self.axis[1] - self.axis[0])

    def at(self, w):
        """Value at the grid node nearest to w."""
        a = int(np.argmin(np.abs(self.axis - w.real)))
        b = int(np.argmin(np.abs(self.axis - w.imag)))
        return self.values[a, b]

    def sidecar(self):
        d = {"spec": self.spec_name, "sigma": self.sigma, "N": self.prime_cutoff,
             "W_max": self.w_max, "nodes": int(self.axis.size), "tail_bound": self.tail_bound,
             "variance": self.variance, "heuristic": self.heuristic,
             "decaying_primes": list(self.decaying_primes),
             "dw_normalization": "|dw| = du dv / (2 pi)"}
        d.update(self.meta)
        return d

    def to_csv(self, path, sidecar_extra=None):
        path = Path(path)
        U, V = np.meshgrid(self.axis, self.axis, indexing="ij")
        data = np.column_stack([U.ravel(), V.ravel(), self.values.real.ravel(),
                                self.values.imag.ravel()])
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="re_w,im_w,re_val,im_val",
                   comments="")
        meta = self.sidecar()
        if sidecar_extra:
            meta.update(sidecar_extra)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        axis = np.unique(data[:, 0])
        n = axis.size
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(n, n)
        known = {"spec", "sigma", "N", "W_max", "nodes", "tail_bound", "variance",
                 "heuristic", "decaying_primes", "dw_normalization"}
        return cls(meta["spec"], meta["sigma"], meta["N"], meta["W_max"], axis, vals,
                   meta["tail_bound"], meta.get("variance", float("nan")),
                   meta.get("heuristic", False), tuple(meta.get("decaying_primes", ())),
                   {k: v for k, v in meta.items() if k not in known})


def grid_axis(w_max, nodes):
    if nodes < 3 or nodes % 2 == 0:
        raise DomainError("grid nodes must be odd and >= 3 (symmetric grid through 0)")
    return np.linspace(-w_max, w_max, nodes)


def _separable(z, u, v):
    M = z.size
    ex = np.exp(1j * np.outer(u, z.real))
    ey = np.exp(1j * np.outer(v, z.imag))
    return (ex @ ey.T) / M


def _grid_factor(curve, u, v, rho_max, tol):
    M = initial_nodes(rho_max, curve.X, curve.g)
    K = _separable(curve.nodes(M), u, v)
    while True:
        K2 = 0.5 * (K + _separable(curve.nodes(M, 0.5), u, v))
        err = float(np.abs(K2 - K).max())
        if err < tol:
            return K2, 2 * M
        M *= 2
        K = K2
        if 2 * M > MAX_NODES:
            raise QuadratureError(f"grid quadrature at p={curve.p} not converged", achieved=err)


def product_charfn(spec, sigma, prime_cutoff, w_max=60.0, nodes=513, tol=QUAD_TOL,
                   tail_tol=1e-3, preflight=True, preflight_threshold=0.3):
    """Lambda_N on a (nodes x nodes) grid over [-w_max, w_max]^2.

    Only the half plane Im w >= 0 is integrated; the rest follows from
    Lambda(-w) = conj Lambda(w).  ``tail_bound`` bounds |Lambda - Lambda_N|
    on the grid through |K_n(w) - 1| <= |w|^2 E|z_n|^2 / 2 (each curve has
    zero mean), summed over the omitted primes.
    """
    sigma = float(sigma)
    N = int(prime_cutoff)
    if N < 1:
        raise DomainError("prime_cutoff must be >= 1")
    u = grid_axis(w_max, nodes)
    h = nodes // 2
    v = u[h:]
    rho_max = float(np.hypot(w_max, w_max))
    half = np.ones((nodes, v.size), dtype=np.complex128)
    max_nodes = 0
    for n in range(1, N + 1):
        c = local_curve(spec, n, sigma)
        if c.g == 0:
            continue
        K, M = _grid_factor(c, u, v, rho_max, tol)
        half *= K
        max_nodes = max(max_nodes, M)
    values = np.empty((nodes, nodes), dtype=np.complex128)
    values[:, h:] = half
    values[:, :h] = np.conj(half[::-1, :0:-1])
    values[h, h] = 1.0

    tv = tail_variance(spec, sigma, N)
    U, V = np.meshgrid(u, u, indexing="ij")
    w2 = U**2 + V**2
    pointwise = np.abs(values) * np.minimum(2.0, 0.5 * w2 * tv)
    tail = float(pointwise.max())
    if not tail <= tail_tol:
        worst = float((np.abs(values) * w2).max())
        need = 2.0 * tail_tol / worst if worst > 0 else math.inf
        sug = suggest_cutoff(spec, sigma, need) if math.isfinite(tv) else None
        raise CutoffTooSmallError(
            f"tail bound {tail:.3g} exceeds {tail_tol:g} with N={N}"
            + (f"; try N >= {sug}" if sug else " (tail diverges for sigma <= 1/2)"),
            achieved=tail, suggested_cutoff=sug,
        )
    tab = taylor_table(spec, sigma, N)
    grid = CharFnGrid(spec.name, sigma, N, float(w_max), u, values, tail,
                      variance=tab.component_variance(),
                      heuristic=sigma <= spec.sigma0,
                      meta={"max_quadrature_nodes": max_nodes, "quad_tol": tol})
    if preflight:
        pre = decay_preflight(spec, sigma, threshold=preflight_threshold)
        grid.decaying_primes = tuple(pre.decaying)
        grid.meta["preflight_tested"] = [list(t) for t in pre.tested]
    return grid


def gaussian_grid(w_max=60.0, nodes=513):
    """Synthetic Lambda(w) = exp(-|w|^2 / 2); its inverse is exp(-|z|^2 / 2)."""
    u = grid_axis(w_max, nodes)
    U, V = np.meshgrid(u, u, indexing="ij")
    vals = np.exp(-(U**2 + V**2) / 2).astype(np.complex128)
    return CharFnGrid("gaussian", float("nan"), 0, float(w_max), u, vals, 0.0, variance=1.0)
