"""Euler products with unimodular (or bounded) local roots.

A spec describes

    phi(s) = prod_n prod_{k=1}^{g(n)} (1 - a_n^(k) p_n^(-s))^(-1)

through its roots a_n^(k); all exponents f(k,n) equal 1.  Roots are produced
lazily per prime index n (1-based: n = 1 is p = 2).

For each n the local curve is

    z_n(theta) = -sum_k Log(1 - a_n^(k) X e^(2 pi i theta)),   X = p_n^(-sigma)
               = sum_j r_{j,n} X^j e^(2 pi i j theta),
    r_{j,n}    = (1/j) sum_k (a_n^(k))^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .arith import HeckeTable, first_primes
from .errors import DomainError, IncompleteDataError, SingularityError

TAYLOR_TOL = 1e-14


@dataclass(frozen=True)
class EulerProductSpec:
    name: str
    sigma0: float
    root_fn: Callable[[int], np.ndarray] = field(repr=False)
    prime_fn: Callable[[int], int] = field(repr=False)
    max_index: int | None = None
    C0: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    real_coefficients: bool = True
    skipped_primes: tuple = ()

    def prime(self, n):
        if n < 1:
            raise DomainError("prime index n starts at 1")
        if self.max_index is not None and n > self.max_index:
            raise IncompleteDataError(
                f"{self.name}: prime index {n} beyond available data ({self.max_index} primes)"
            )
        return self.prime_fn(n)

    def roots(self, n):
        self.prime(n)
        return self.root_fn(n)

    def g(self, n):
        return int(self.roots(n).size)

    def primes(self, count):
        if self.max_index is not None and count > self.max_index:
            raise IncompleteDataError(
                f"{self.name}: {count} primes requested, {self.max_index} available"
            )
        return np.array([self.prime_fn(n) for n in range(1, count + 1)], dtype=np.int64)


def _zeta_prime(n):
    return int(first_primes(n)[n - 1])


_ONE = np.ones(1, dtype=np.complex128)


def spec_zeta():
    """Riemann zeta: one root a = 1 at every prime."""
    return EulerProductSpec("zeta", 0.5, lambda n: _ONE, _zeta_prime, None, C0=1.0)


def spec_custom(name, roots, sigma0=0.5):
    """Spec with the same root list at every prime (synthetic experiments)."""
    r = np.asarray(roots, dtype=np.complex128)
    real = bool(np.allclose(np.sort_complex(r), np.sort_complex(r.conj())))
    return EulerProductSpec(name, sigma0, lambda n: r, _zeta_prime, None,
                            C0=float(r.size), real_coefficients=real)


def _table_prime(table):
    primes = table.primes

    def f(n):
        return int(primes[n - 1])

    return f


def spec_modular(table: HeckeTable):
    """L(f, s): roots {alpha_f(p), beta_f(p)} = {e^(i theta), e^(-i theta)}."""
    theta = table.theta
    lam = table.lam
    level = table.level
    primes = table.primes

    def roots(n):
        p = int(primes[n - 1])
        if level % p == 0:
            return np.array([lam[n - 1]], dtype=np.complex128)
        t = theta[n - 1]
        return np.array([complex(math.cos(t), math.sin(t)),
                         complex(math.cos(t), -math.sin(t))])

    return EulerProductSpec(f"modular[{table.form_id}]", 0.5, roots, _table_prime(table),
                            len(table), C0=2.0)


def sympow_exponents(gamma):
    """Frequencies gamma - 2h, h = 0..gamma, of the roots alpha^(gamma-h) beta^h."""
    return np.arange(gamma, -gamma - 1, -2, dtype=np.float64)


def spec_sympow(table: HeckeTable, gamma):
    """Partial gamma-th symmetric power L-function; bad primes p | N skipped."""
    gamma = int(gamma)
    if gamma < 2:
        raise DomainError("spec_sympow needs gamma >= 2 (gamma = 1 is spec_modular)")
    theta = table.theta
    level = table.level
    primes = table.primes
    freqs = sympow_exponents(gamma)
    empty = np.zeros(0, dtype=np.complex128)

    def roots(n):
        if level % int(primes[n - 1]) == 0:
            return empty
        ang = freqs * theta[n - 1]
        return np.cos(ang) + 1j * np.sin(ang)

    skipped = tuple(int(p) for p in primes if level % int(p) == 0)
    return EulerProductSpec(f"sympow{gamma}[{table.form_id}]", 1.0 - 1.0 / (gamma + 1),
                            roots, _table_prime(table), len(table), C0=float(gamma + 1),
                            skipped_primes=skipped)


def parse_spec(selector, table_fn=None):
    """'zeta' | 'modular' | 'sympow:G'. `table_fn()` supplies the Hecke table."""
    sel = selector.strip().lower()
    if sel == "zeta":
        return spec_zeta()
    if sel == "modular":
        return spec_modular(table_fn())
    if sel.startswith("sympow"):
        _, _, g = sel.partition(":")
        if not g.isdigit():
            raise DomainError(f"bad spec selector {selector!r}; use sympow:G")
        return spec_sympow(table_fn(), int(g))
    raise DomainError(f"unknown spec {selector!r} (zeta | modular | sympow:G)")


# --------------------------------------------------------------------------
# Taylor data


def taylor_r(spec, j, n):
    """r_{j,n} = (1/j) sum_k (a_n^(k))^j."""
    if j < 1:
        raise DomainError("taylor_r: j >= 1")
    a = spec.roots(n)
    return _power_sums(a, j)[j - 1]


def _power_sums(a, J):
    """[(1/j) sum_k a_k^j for j = 1..J] for unimodular or general roots."""
    if a.size == 0:
        return np.zeros(J, dtype=np.complex128)
    j = np.arange(1, J + 1)
    mod = np.abs(a)
    if np.all(np.abs(mod - 1.0) < 1e-15):
        # exact unimodular powers through the angle keep conjugate pairs exact
        ang = np.outer(j, np.angle(a))
        s = (np.cos(ang) + 1j * np.sin(ang)).sum(axis=1)
    else:
        s = (a[None, :] ** j[:, None]).sum(axis=1)
    return s / j


def clog1p(u):
    """Principal Log(1 + u) with full relative accuracy for small |u|."""
    u = np.asarray(u, dtype=np.complex128)
    x, y = u.real, u.imag
    return 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)


def taylor_length(g, amax, X, tol=TAYLOR_TOL):
    """Smallest J with g (aX)^(J+1) / ((J+1)(1 - aX)) < tol."""
    q = amax * X
    if g == 0 or q == 0.0:
        return 1
    if q >= 1.0:
        raise SingularityError(f"|a| p^-sigma = {q} >= 1")
    J = 1
    while g * q ** (J + 1) / ((J + 1) * (1.0 - q)) >= tol:
        J += 1
    return J


@dataclass(frozen=True)
class LocalCurve:
    spec_name: str
    n: int
    p: int
    sigma: float
    roots: np.ndarray
    X: float
    r: np.ndarray  # r[j-1] = r_{j,n}

    @property
    def g(self):
        return int(self.roots.size)

    @property
    def J(self):
        return int(self.r.size)

    def __call__(self, theta):
        """Direct evaluation -sum_k Log(1 - a X e^(2 pi i theta))."""
        theta = np.asarray(theta, dtype=np.float64)
        e = np.exp(2j * np.pi * theta)
        z = np.zeros(theta.shape, dtype=np.complex128)
        for a in self.roots:
            z -= clog1p(-a * self.X * e)
        return z

    def taylor(self, theta, J=None):
        J = self.J if J is None else min(J, self.J)
        theta = np.asarray(theta, dtype=np.float64)
        y = self.X * np.exp(2j * np.pi * theta)
        acc = np.full(theta.shape, self.r[J - 1], dtype=np.complex128)
        for q in range(J - 2, -1, -1):
            acc = acc * y + self.r[q]
        return acc * y

    def nodes(self, M, offset=0.0):
        """Curve values at theta_k = (k + offset)/M, k = 0..M-1."""
        return self((np.arange(M) + offset) / M)

    def sup_bound(self):
        """Upper bound for max_theta |z_n(theta)|."""
        amax = np.abs(self.roots).max() if self.g else 0.0
        return -self.g * math.log1p(-amax * self.X) if self.g else 0.0

    def pairing_derivatives(self, theta, tau):
        """(g', g'') of g_tau(theta) = Re(z e^(-i tau)) from the Taylor series."""
        theta = np.asarray(theta, dtype=np.float64)
        j = np.arange(1, self.J + 1)
        c = self.r * self.X ** j * np.exp(-1j * tau)
        ph = np.exp(2j * np.pi * np.outer(theta, j))
        w = 2j * np.pi * j
        d1 = (ph * (c * w)).sum(axis=1).real
        d2 = (ph * (c * w * w)).sum(axis=1).real
        return d1, d2


def local_curve(spec, n, sigma, tol=TAYLOR_TOL):
    sigma = float(sigma)
    if sigma <= 0:
        raise DomainError("local_curve: sigma must be > 0")
    p = spec.prime(n)
    a = spec.roots(n)
    X = float(p) ** (-sigma)
    amax = float(np.abs(a).max()) if a.size else 0.0
    if amax * X >= 1.0:
        raise SingularityError(f"{spec.name}: |a| p^-sigma = {amax * X} >= 1 at p={p}")
    J = taylor_length(a.size, amax, X, tol)
    return LocalCurve(spec.name, n, p, sigma, a, X, _power_sums(a, J))


@dataclass(frozen=True)
class TaylorTable:
    """Flattened Taylor data of the first `count` local curves."""

    spec_name: str
    sigma: float
    primes: np.ndarray
    X: np.ndarray
    nterm: np.ndarray
    offs: np.ndarray
    coef: np.ndarray  # coef[offs[n] + j - 1] = r_{j,n}

    @property
    def logp(self):
        return np.log(self.primes.astype(np.float64))

    def component_variance(self):
        """Variance of Re and of Im of sum_n z_n (theta_n uniform, independent)."""
        total = 0.0
        for n in range(self.primes.size):
            r = self.coef[self.offs[n]:self.offs[n] + self.nterm[n]]
            j = np.arange(1, r.size + 1)
            total += float(np.sum(np.abs(r) ** 2 * self.X[n] ** (2 * j)))
        return total / 2.0


def taylor_table(spec, sigma, count, tol=TAYLOR_TOL):
    curves = [local_curve(spec, n, sigma, tol) for n in range(1, count + 1)]
    nterm = np.array([c.J for c in curves], dtype=np.int64)
    offs = np.concatenate(([0], np.cumsum(nterm)[:-1])).astype(np.int64)
    coef = np.concatenate([c.r for c in curves]) if curves else np.zeros(0, complex)
    return TaylorTable(spec.name, float(sigma),
                       np.array([c.p for c in curves], dtype=np.int64),
                       np.array([c.X for c in curves]), nterm, offs,
                       coef.astype(np.complex128))


def sympow_r1(gamma, theta):
    """sum_{h=0}^{gamma} cos((gamma - 2h) theta): r_{1,n} of Sym^gamma at angle theta."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.cos(np.multiply.outer(theta, sympow_exponents(gamma))).sum(axis=-1)
