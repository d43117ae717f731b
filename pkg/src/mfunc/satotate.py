"""Sato-Tate bookkeeping for symmetric powers.

For r_1 = sum_{h=0}^{gamma} cos((gamma - 2h) theta) one has
r_1 sin(theta) = sin((gamma + 1) theta), so |r_1| >= sin(xi) whenever theta
lies in the union of the blocks

    A(j) = [(2 pi j + xi) / (gamma+1), (2 pi j + pi - xi) / (gamma+1)]
    B(j) = [(2 pi j + pi + xi) / (gamma+1), (2 pi j + 2 pi - xi) / (gamma+1)]

inside [0, pi].  Under the Sato-Tate law the union has measure 1 - 2 xi / pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, IncompleteDataError

CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class IntervalSystem:
    gamma: int
    xi: float
    intervals: tuple  # ((a, b, label), ...) sorted by a

    @property
    def eta(self):
        return math.sin(self.xi)

    @property
    def parity_index(self):
        """1 for odd gamma, 2 for even gamma."""
        return 1 if self.gamma % 2 else 2

    def endpoints(self):
        return np.array([(a, b) for a, b, _ in self.intervals])

    def contains(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        out = np.zeros(theta.shape, dtype=bool)
        for a, b, _ in self.intervals:
            out |= (theta >= a) & (theta <= b)
        return out

    def as_dict(self):
        return {"gamma": self.gamma, "xi": self.xi, "eta": self.eta,
                "intervals": [[a, b, lab] for a, b, lab in self.intervals]}


def _block(gamma, xi, j, kind):
    g1 = gamma + 1
    if kind == "A":
        return ((2 * math.pi * j + xi) / g1, (2 * math.pi * j + math.pi - xi) / g1, f"A({j})")
    return ((2 * math.pi * j + math.pi + xi) / g1, (2 * math.pi * j + 2 * math.pi - xi) / g1,
            f"B({j})")


def build_intervals(gamma, xi):
    gamma = int(gamma)
    xi = float(xi)
    if gamma < 1:
        raise DomainError("gamma must be >= 1")
    if not 0.0 < xi < math.pi / 2:
        raise DomainError(f"xi must lie in (0, pi/2), got {xi}")
    blocks = []
    if gamma % 2:
        for j in range((gamma - 1) // 2 + 1):
            blocks += [_block(gamma, xi, j, "A"), _block(gamma, xi, j, "B")]
    else:
        for j in range((gamma - 2) // 2 + 1):
            blocks += [_block(gamma, xi, j, "A"), _block(gamma, xi, j, "B")]
        blocks.append(_block(gamma, xi, gamma // 2, "A"))
    return IntervalSystem(gamma, xi, tuple(sorted(blocks)))


def endpoint_sum_S(system):
    return float(sum(b - a for a, b, _ in system.intervals))


def endpoint_sum_T(system):
    return float(sum(math.sin(2 * b) - math.sin(2 * a) for a, b, _ in system.intervals))


def closed_form_S(system):
    """pi - 2 xi, checked against the summed block lengths."""
    closed = math.pi - 2.0 * system.xi
    direct = endpoint_sum_S(system)
    if abs(direct - closed) > CONSISTENCY_TOL:
        raise ConsistencyError(f"S endpoint sum {direct!r} != pi - 2 xi = {closed!r}",
                               achieved=abs(direct - closed))
    return closed


def closed_form_T(system):
    """0, checked against the summed sin(2b) - sin(2a)."""
    direct = endpoint_sum_T(system)
    if abs(direct) > CONSISTENCY_TOL:
        raise ConsistencyError(f"T endpoint sum {direct!r} != 0", achieved=abs(direct))
    return 0.0


def even_cosine_sum(gamma):
    """sum_{j=0}^{(gamma-2)/2} cos((4 pi j + 2 pi)/(gamma+1)); equals -1/2 for even gamma."""
    if gamma % 2 or gamma < 2:
        raise DomainError("even_cosine_sum needs even gamma >= 2")
    j = np.arange((gamma - 2) // 2 + 1)
    return float(np.cos((4 * np.pi * j + 2 * np.pi) / (gamma + 1)).sum())


def chebyshev_residual(gamma, theta):
    """max |r_1(theta) sin(theta) - sin((gamma+1) theta)| over the given angles."""
    from .euler import sympow_r1

    theta = np.asarray(theta, dtype=np.float64)
    lhs = sympow_r1(gamma, theta) * np.sin(theta)
    return float(np.abs(lhs - np.sin((gamma + 1) * theta)).max())


def st_ratio(a, b):
    """Sato-Tate measure (2/pi) int_a^b sin^2 of [a, b] within [0, pi]."""
    if not (0.0 <= a <= b <= math.pi + 1e-15):
        raise DomainError(f"[{a}, {b}] is not a subinterval of [0, pi]")
    return (b - a - 0.5 * (math.sin(2 * b) - math.sin(2 * a))) / math.pi


def predicted_fraction(system):
    return sum(st_ratio(a, min(b, math.pi)) for a, b, _ in system.intervals)


def _angles(table, x):
    if not table.covers(x):
        raise IncompleteDataError(
            f"table {table.form_id} covers primes <= {table.bound}, need {x}"
        )
    k = int(np.searchsorted(table.primes, x, side="right"))
    if k == 0:
        raise DomainError(f"no primes <= {x}")
    good = np.array([not table.is_bad(p) for p in table.primes[:k]]) if table.level > 1 \
        else np.ones(k, dtype=bool)
    return table.theta[:k][good], table.lam[:k][good]


def empirical_fraction(table, system, x):
    """pi_I(x) / pi(x): fraction of good primes p <= x with theta_f(p) in the system."""
    theta, _ = _angles(table, x)
    return float(np.count_nonzero(system.contains(theta))) / theta.size


def interval_fraction(table, a, b, x):
    theta, _ = _angles(table, x)
    return float(np.count_nonzero((theta >= a) & (theta <= b))) / theta.size


def pf_epsilon_density(table, eps, x):
    """(empirical, predicted) density of primes with |lambda_f(p)| > sqrt 2 - eps."""
    eps = float(eps)
    if not 0.0 < eps <= math.sqrt(2.0):
        raise DomainError("epsilon must lie in (0, sqrt 2]")
    _, lam = _angles(table, x)
    c = math.sqrt(2.0) - eps
    empirical = float(np.count_nonzero(np.abs(lam) > c)) / lam.size
    # |2 cos theta| > c  <=>  theta in [0, t0) or (pi - t0, pi]
    predicted = 2.0 * st_ratio(0.0, math.acos(c / 2.0))
    return empirical, predicted


def record(table, gamma, xi, x):
    """JSON-ready record {gamma, xi, x, empirical, predicted, abs_error}."""
    system = build_intervals(gamma, xi)
    closed_form_S(system)
    closed_form_T(system)
    predicted = 1.0 - 2.0 * system.xi / math.pi
    emp = empirical_fraction(table, system, x)
    return {"gamma": system.gamma, "xi": system.xi, "x": int(x), "empirical": emp,
            "predicted": predicted, "abs_error": abs(emp - predicted)}
