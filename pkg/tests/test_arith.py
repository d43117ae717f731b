import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfunc.arith import (HeckeTable, deligne_ok, euler_function_series, first_primes,
                         hecke_table, read_hecke_csv, satake_angle, sieve_primes,
                         tau_coefficients, write_hecke_csv)
from mfunc.errors import DataError, DomainError, IncompleteDataError, ResourceError


def trial_division_primes(n):
    return [k for k in range(2, n + 1) if all(k % d for d in range(2, int(k**0.5) + 1))]


def naive_tau(n):
    """q prod (1 - q^m)^24 by schoolbook multiplication, coefficients 1..n."""
    poly = [1] + [0] * n
    for m in range(1, n + 1):
        for _ in range(24):
            for k in range(n, m - 1, -1):
                poly[k] -= poly[k - m]
    return [0] + poly[:n]


@given(st.integers(2, 3000))
@settings(max_examples=30, deadline=None)
def test_sieve_matches_trial_division(n):
    assert sieve_primes(n).primes.tolist() == trial_division_primes(n)


def test_sieve_rejects_small_limit():
    with pytest.raises(DomainError):
        sieve_primes(1)


def test_first_primes():
    assert first_primes(10).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert first_primes(10000)[-1] == 104729


def test_pentagonal_series():
    # prod (1 - q^m) = 1 - q - q^2 + q^5 + q^7 - q^12 - q^15 + ...
    c = euler_function_series(17)
    expect = [0] * 17
    for i, s in ((0, 1), (1, -1), (2, -1), (5, 1), (7, 1), (12, -1), (15, -1)):
        expect[i] = s
    assert list(c)[:17] == expect


def test_tau_against_q_expansion():
    n = 120
    assert tau_coefficients(n) == naive_tau(n)


def test_tau_known_values():
    tau = tau_coefficients(12)
    assert tau[1:] == [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643,
                       -115920, 534612, -370944]


def test_tau_multiplicative_and_hecke():
    tau = tau_coefficients(2000)
    for m, n in ((2, 3), (5, 7), (4, 9), (11, 13), (8, 125)):
        assert tau[m * n] == tau[m] * tau[n]
    for p in sieve_primes(44).primes.tolist():
        assert tau[p * p] == tau[p] ** 2 - p**11


def test_tau_memory_budget():
    with pytest.raises(ResourceError):
        tau_coefficients(10**6, memory_budget=1000)


def test_deligne_exact():
    assert deligne_ok(-24, 2)
    # 2 * 2^(11/2) = 90.50...
    assert deligne_ok(90, 2) and deligne_ok(-90, 2)
    assert not deligne_ok(91, 2)


@pytest.fixture(scope="module")
def small_table(tmp_path_factory):
    return hecke_table(5000, cache_dir=tmp_path_factory.mktemp("cache"))


def test_hecke_table_values(small_table):
    t = small_table
    assert t.level == 1 and t.weight == 12
    lam2, th2 = t.entry(2)
    assert lam2 == pytest.approx(-24 / 2**5.5, rel=1e-15)
    assert 2 * math.cos(th2) == pytest.approx(lam2, abs=1e-14)
    assert np.all(np.abs(t.lam) <= 2)
    assert t.bound == 5000 and t.covers(5000) and not t.covers(5001)


def test_hecke_table_lookup_errors(small_table):
    with pytest.raises(IncompleteDataError):
        small_table.index(4)
    with pytest.raises(IncompleteDataError):
        small_table.index(7919)


def test_hecke_upto(small_table):
    t = small_table.upto(100)
    assert t.primes[-1] == 97 and t.bound == 100


def test_cache_reuse(tmp_path):
    a = hecke_table(3000, cache_dir=tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert "hecke-delta-k12-N1-3000.csv" in files
    b = hecke_table(1000, cache_dir=tmp_path)  # served from the larger table
    assert sorted(p.name for p in tmp_path.iterdir()) == files
    np.testing.assert_array_equal(b.lam, a.upto(1000).lam)


def test_csv_round_trip(small_table, tmp_path):
    path = tmp_path / "t.csv"
    write_hecke_csv(small_table, path)
    back = read_hecke_csv(path)
    np.testing.assert_array_equal(back.primes, small_table.primes)
    np.testing.assert_array_equal(back.lam, small_table.lam)
    assert back.bound == small_table.bound


def test_csv_rejects_bad_lambda(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("p,lambda_num,lambda_is_exact,theta\n2,2.5,false,\n")
    with pytest.raises(DataError):
        read_hecke_csv(path)
    path.write_text("p,lambda\n2,0.1\n")
    with pytest.raises(DataError):
        read_hecke_csv(path)


def test_csv_fills_theta(tmp_path):
    path = tmp_path / "ok.csv"
    path.write_text("p,lambda_num,lambda_is_exact,theta\n3,0,true,\n2,1,false,\n")
    t = read_hecke_csv(path, "f", 2, 1)
    assert t.primes.tolist() == [2, 3]
    np.testing.assert_allclose(t.theta, [math.pi / 3, math.pi / 2])


def test_satake_angle_range():
    lam = np.linspace(-2, 2, 101)
    th = satake_angle(lam)
    assert th.min() >= 0 and th.max() <= math.pi
    np.testing.assert_allclose(2 * np.cos(th), lam, atol=1e-15)


def test_hecke_table_default_bound():
    t = HeckeTable("x", 2, 1, np.array([2, 3]), np.zeros(2), np.full(2, math.pi / 2))
    assert t.bound == 3
