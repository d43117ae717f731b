"""Primes, Ramanujan's tau function and normalised Hecke eigenvalues.

tau(n) is read off the q-expansion

    Delta = q * prod_{m>=1} (1 - q^m)^24

computed exactly: the pentagonal-number series for prod (1 - q^m) is raised to
the 24th power by four squarings and one product (P^24 = P^16 P^8).  Series
products use Kronecker substitution into gmpy2 integers, so every coefficient
is an exact big integer (tau(p) for p near 10^6 has about 33 digits).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import gmpy2
import numpy as np

from .errors import DataError, DomainError, IncompleteDataError, ResourceError

log = logging.getLogger(__name__)

DELTA_ID = "delta-k12-N1"
DEFAULT_PRIME_LIMIT = 10**6
MEMORY_BUDGET = int(os.environ.get("MFUNC_MEMORY_BUDGET", 2 * 1024**3))

# bits per coefficient slot; |tau(n)| <= d(n) n^(11/2) < 2^118 for n <= 10^6
_SLOT_BITS = 192
_SLOT_BYTES = _SLOT_BITS // 8


@dataclass(frozen=True)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self):
        return int(self.primes.size)

    def __iter__(self):
        return iter(self.primes.tolist())


def sieve_primes(limit):
    """All primes <= limit (odd-only Eratosthenes sieve)."""
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"sieve_primes: limit must be >= 2, got {limit}")
    # index i of `odd` stands for 2i + 1
    odd = np.ones((limit + 1) // 2, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2::p] = False
    primes = np.concatenate(([2], 2 * np.flatnonzero(odd) + 1)).astype(np.int64)
    primes.flags.writeable = False
    return PrimeTable(limit, primes)


def nth_prime_bound(n):
    """Upper bound for the n-th prime (Rosser; valid for n >= 6)."""
    if n < 6:
        return 13
    return int(n * (math.log(n) + math.log(math.log(n)))) + 1


_first_primes = sieve_primes(1000).primes


def first_primes(count):
    """The first `count` primes p_1 < ... < p_count."""
    global _first_primes
    count = int(count)
    if count < 0:
        raise DomainError("first_primes: count must be non-negative")
    if count > _first_primes.size:
        _first_primes = sieve_primes(nth_prime_bound(count)).primes
    return _first_primes[:count]


# --------------------------------------------------------------------------
# exact series arithmetic


def _pack(coeffs):
    """Kronecker-pack signed integers: sum c_i 2^(B i)."""
    n = len(coeffs)
    off = 1 << (_SLOT_BITS - 1)
    body = b"".join((int(c) + off).to_bytes(_SLOT_BYTES, "little") for c in coeffs)
    return gmpy2.mpz(int.from_bytes(body, "little")) - _offsets(n)


def _offsets(n):
    off = (1 << (_SLOT_BITS - 1)).to_bytes(_SLOT_BYTES, "little")
    return gmpy2.mpz(int.from_bytes(off * n, "little"))


def _unpack(value, n):
    off = 1 << (_SLOT_BITS - 1)
    body = int(value + _offsets(n)).to_bytes(n * _SLOT_BYTES + 1, "little")
    return [
        int.from_bytes(body[i * _SLOT_BYTES:(i + 1) * _SLOT_BYTES], "little") - off
        for i in range(n)
    ]


def _truncate(value, n):
    """Keep slots 0..n-1 of a packed signed series."""
    bits = _SLOT_BITS * n
    r = gmpy2.f_mod_2exp(value, bits)
    if gmpy2.bit_test(r, bits - 1):
        r -= gmpy2.mpz(1) << bits
    return r


def euler_function_series(n):
    """Coefficients of prod_{m>=1}(1 - q^m) below q^n (pentagonal theorem)."""
    c = [0] * n
    c[0] = 1
    k = 1
    while True:
        s = -1 if k % 2 else 1
        a = k * (3 * k - 1) // 2
        if a >= n:
            break
        c[a] += s
        b = k * (3 * k + 1) // 2
        if b < n:
            c[b] += s
        k += 1
    return c


def tau_coefficients(bound, memory_budget=None):
    """Exact tau(n) for 1 <= n <= bound.

    Returns a list ``tau`` of Python ints with ``tau[n] == tau(n)``; entry 0
    is a placeholder 0.
    """
    bound = int(bound)
    if bound < 1:
        raise DomainError("tau_coefficients: bound must be >= 1")
    budget = MEMORY_BUDGET if memory_budget is None else memory_budget
    need = 8 * bound * _SLOT_BYTES  # a handful of live packed operands
    if need > budget:
        raise ResourceError(
            f"tau_coefficients({bound}) needs ~{need / 2**20:.0f} MiB, "
            f"budget is {budget / 2**20:.0f} MiB"
        )
    p1 = _pack(euler_function_series(bound))
    p2 = _truncate(p1 * p1, bound)
    p4 = _truncate(p2 * p2, bound)
    p8 = _truncate(p4 * p4, bound)
    p16 = _truncate(p8 * p8, bound)
    p24 = _truncate(p16 * p8, bound)
    return [0] + _unpack(p24, bound)


def deligne_ok(tau_p, p, weight=12):
    """Exact check of |tau(p)| <= 2 p^((k-1)/2), i.e. tau^2 <= 4 p^(k-1)."""
    return tau_p * tau_p <= 4 * p ** (weight - 1)


# --------------------------------------------------------------------------
# Hecke tables


@dataclass(frozen=True)
class HeckeTable:
    """Normalised eigenvalues lambda_f(p) and Satake angles of one form."""

    form_id: str
    weight: int
    level: int
    primes: np.ndarray
    lam: np.ndarray
    theta: np.ndarray
    lam_exact: np.ndarray = field(default=None)
    bound: int | None = None  # every prime <= bound is present

    def __post_init__(self):
        if self.lam_exact is None:
            object.__setattr__(self, "lam_exact", np.zeros(self.primes.size, dtype=bool))
        if self.bound is None:
            object.__setattr__(self, "bound", self.limit)

    def __len__(self):
        return int(self.primes.size)

    @property
    def limit(self):
        return int(self.primes[-1]) if self.primes.size else 0

    def is_bad(self, p):
        return self.level % int(p) == 0

    def index(self, p):
        i = int(np.searchsorted(self.primes, p))
        if i >= self.primes.size or self.primes[i] != p:
            raise IncompleteDataError(f"prime {p} missing from table {self.form_id}")
        return i

    def entry(self, p):
        i = self.index(p)
        return float(self.lam[i]), float(self.theta[i])

    @property
    def entries(self):
        return {int(p): (float(l), float(t)) for p, l, t in zip(self.primes, self.lam, self.theta)}

    def covers(self, x):
        return x <= self.bound

    def upto(self, x):
        k = int(np.searchsorted(self.primes, x, side="right"))
        return HeckeTable(self.form_id, self.weight, self.level, self.primes[:k],
                          self.lam[:k], self.theta[:k], self.lam_exact[:k],
                          min(int(x), self.bound))


def satake_angle(lam):
    """theta in [0, pi] with 2 cos(theta) = lambda."""
    return np.arccos(np.clip(np.asarray(lam, dtype=np.float64) / 2.0, -1.0, 1.0))


def tau_at_primes(prime_limit, cache_dir=None, use_cache=True):
    """(primes, [tau(p)]) for all primes p <= prime_limit, with disk cache."""
    prime_limit = int(prime_limit)
    path = _cache_path(cache_dir, f"tau-primes-{prime_limit}.csv") if use_cache else None
    if path is not None and path.exists():
        ps, ts = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                ps.append(int(row["p"]))
                ts.append(int(row["tau"]))
        return np.asarray(ps, dtype=np.int64), ts
    primes = sieve_primes(prime_limit).primes
    tau = tau_coefficients(prime_limit)
    vals = [tau[int(p)] for p in primes]
    if path is not None:
        _atomic_write(path, "p,tau\n" + "".join(f"{p},{t}\n" for p, t in zip(primes.tolist(), vals)))
    return primes, vals


def hecke_table(prime_limit=DEFAULT_PRIME_LIMIT, cache_dir=None, use_cache=True):
    """Hecke table of Delta (weight 12, level 1) for all primes <= prime_limit."""
    prime_limit = int(prime_limit)
    if prime_limit < 2:
        raise DomainError("hecke_table: prime_limit must be >= 2")
    if use_cache:
        cached = _find_cached_table(cache_dir, prime_limit)
        if cached is not None:
            return cached.upto(prime_limit)
    primes, taus = tau_at_primes(prime_limit, cache_dir, use_cache)
    lam = np.empty(primes.size)
    for i, (p, t) in enumerate(zip(primes.tolist(), taus)):
        if not deligne_ok(t, p):
            raise DataError(f"Deligne bound violated at p={p}: tau={t}")
        lam[i] = t / (p**5 * math.sqrt(p))
    table = HeckeTable(DELTA_ID, 12, 1, primes, lam, satake_angle(lam), bound=prime_limit)
    if use_cache:
        path = _cache_path(cache_dir, f"hecke-{DELTA_ID}-{prime_limit}.csv")
        write_hecke_csv(table, path)
    return table


# --------------------------------------------------------------------------
# CSV interface: header p,lambda_num,lambda_is_exact,theta

HECKE_HEADER = ["p", "lambda_num", "lambda_is_exact", "theta"]


def write_hecke_csv(table, path):
    path = Path(path)
    lines = [",".join(HECKE_HEADER)]
    for p, l, e, t in zip(table.primes.tolist(), table.lam.tolist(),
                          table.lam_exact.tolist(), table.theta.tolist()):
        lines.append(f"{p},{l:.16e},{'true' if e else 'false'},{t:.16e}")
    _atomic_write(path, "\n".join(lines) + "\n")
    meta = {"form_id": table.form_id, "weight": table.weight, "level": table.level,
            "prime_limit": table.bound, "count": len(table)}
    _atomic_write(path.with_suffix(".json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_hecke_csv(path, form_id=None, weight=None, level=None):
    """Load a table in the eigenvalue-file format (cache or external import).

    Metadata comes from the arguments, else from a JSON sidecar next to the
    file, else defaults to an anonymous level-1 form.  Good primes must obey
    |lambda| <= 2; a blank theta column is filled with arccos(lambda/2).
    """
    path = Path(path)
    meta = {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    form_id = form_id or meta.get("form_id") or path.stem
    weight = int(weight or meta.get("weight") or 0)
    level = int(level or meta.get("level") or 1)
    ps, lam, exact, theta = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames)[:4] != HECKE_HEADER:
            raise DataError(f"{path}: header must be {','.join(HECKE_HEADER)}")
        for row in reader:
            p = int(row["p"])
            l = float(row["lambda_num"])
            bad = level % p == 0
            if not bad and abs(l) > 2.0 + 1e-12:
                raise DataError(f"{path}: |lambda({p})| = {abs(l)} exceeds the Deligne bound")
            ps.append(p)
            lam.append(l)
            exact.append(row["lambda_is_exact"].strip().lower() in ("1", "true", "yes"))
            t = row.get("theta", "").strip()
            theta.append(float(t) if t else float(satake_angle(l)))
    order = np.argsort(ps)
    ps = np.asarray(ps, dtype=np.int64)[order]
    if np.any(np.diff(ps) <= 0):
        raise DataError(f"{path}: duplicate primes")
    bound = meta.get("prime_limit")
    return HeckeTable(form_id, weight, level, ps, np.asarray(lam)[order],
                      np.asarray(theta)[order], np.asarray(exact, dtype=bool)[order],
                      int(bound) if bound is not None else None)


# --------------------------------------------------------------------------
# cache helpers


def cache_dir(override=None):
    if override is not None:
        return Path(override)
    env = os.environ.get("MFUNC_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "mfunc"


def _cache_path(override, name):
    d = cache_dir(override)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _find_cached_table(override, prime_limit):
    d = cache_dir(override)
    if not d.exists():
        return None
    best = None
    for f in d.glob(f"hecke-{DELTA_ID}-*.csv"):
        try:
            lim = int(f.stem.rsplit("-", 1)[1])
        except ValueError:
            continue
        if lim >= prime_limit and (best is None or lim < best[0]):
            best = (lim, f)
    if best is None:
        return None
    log.debug("hecke cache hit: %s", best[1])
    return read_hecke_csv(best[1], DELTA_ID, 12, 1)


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def cached_files(override=None):
    d = cache_dir(override)
    return sorted(d.glob("*")) if d.exists() else []
