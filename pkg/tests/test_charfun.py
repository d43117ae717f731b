import math

import numpy as np
import pytest

from mfunc.charfun import (CharFnGrid, decay_preflight, decay_profile, gaussian_grid,
                           grid_axis, local_charfn, prime_power_tail, product_charfn,
                           stationary_point_counts, tail_variance)
from mfunc.errors import CutoffTooSmallError, DomainError, QuadratureError
from mfunc.arith import sieve_primes
from mfunc.euler import local_curve, spec_custom, spec_zeta


def riemann_oracle(curve, w, m=10**6):
    th = (np.arange(m) + 0.5) / m
    z = curve(th)
    return np.mean(np.exp(1j * (z.real * w.real + z.imag * w.imag)))


def test_k_at_zero_is_one():
    for n in (1, 5, 50):
        c = local_curve(spec_zeta(), n, 0.6)
        assert local_charfn(c, 0j) == pytest.approx(1.0, abs=1e-15)


def test_riemann_sum_oracle():
    rng = np.random.default_rng(11)
    spec = spec_zeta()
    for _ in range(5):
        n = int(rng.integers(1, 30))
        sigma = float(rng.uniform(0.55, 2.0))
        w = complex(*rng.uniform(-40, 40, 2))
        c = local_curve(spec, n, sigma)
        assert abs(local_charfn(c, w) - riemann_oracle(c, w)) < 1e-8


def test_modulus_and_symmetries():
    c = local_curve(spec_custom("s2", [np.exp(0.9j), 1.0, np.exp(-0.9j)]), 2, 0.8)
    rng = np.random.default_rng(2)
    for w in rng.normal(0, 25, 20) + 1j * rng.normal(0, 25, 20):
        k = local_charfn(c, w)
        assert abs(k) <= 1 + 1e-12
        assert local_charfn(c, -w) == pytest.approx(np.conj(k), abs=1e-12)
        # real Dirichlet coefficients: z(1 - theta) = conj z(theta)
        assert local_charfn(c, np.conj(w)) == pytest.approx(k, abs=1e-12)


def test_bessel_limit():
    # a single unimodular root: K(w) -> J0(|w| X) as X -> 0 at fixed |w| X
    from scipy.special import j0

    c = local_curve(spec_zeta(), 400, 3.0)
    w = 5.0 / c.X
    assert local_charfn(c, w) == pytest.approx(j0(5.0), abs=1e-3 * 5)


def test_quadrature_cap():
    c = local_curve(spec_zeta(), 1, 0.6)
    with pytest.raises(QuadratureError):
        local_charfn(c, 1e5, max_nodes=128)


def test_prime_power_tail_is_upper_bound():
    ps = sieve_primes(10**7).primes.astype(float)
    for p0, s in ((100, 2.0), (7919, 2.4), (104729, 1.5)):
        q = ps[ps > p0] ** (-s)
        explicit = float(np.sum(q / (1 - q)))
        bound = prime_power_tail(p0, s)
        assert bound >= explicit
        assert bound <= 1.5 * explicit + 1e-12
    assert prime_power_tail(100, 1.0) == math.inf


def test_tail_variance_decreases():
    s = spec_zeta()
    assert tail_variance(s, 1.2, 2000) < tail_variance(s, 1.2, 1000)


@pytest.fixture(scope="module")
def small_grid():
    return product_charfn(spec_zeta(), 1.5, 60, w_max=12.0, nodes=41, tail_tol=1.0,
                          preflight=False)


def test_grid_matches_pointwise_product(small_grid):
    g = small_grid
    curves = [local_curve(spec_zeta(), n, 1.5) for n in range(1, 61)]
    for a, b in ((0, 0), (3, 37), (20, 20), (40, 7), (25, 11)):
        w = complex(g.axis[a], g.axis[b])
        ref = np.prod([local_charfn(c, w) for c in curves])
        assert g.values[a, b] == pytest.approx(ref, abs=1e-9)


def test_grid_conjugate_symmetry(small_grid):
    v = small_grid.values
    np.testing.assert_allclose(v[::-1, ::-1], np.conj(v), atol=1e-12)
    assert v[20, 20] == 1.0
    assert np.abs(v).max() <= 1 + 1e-12


def test_grid_csv_round_trip(small_grid, tmp_path):
    small_grid.to_csv(tmp_path / "g.csv")
    back = CharFnGrid.from_csv(tmp_path / "g.csv")
    np.testing.assert_array_equal(back.values, small_grid.values)
    np.testing.assert_array_equal(back.axis, small_grid.axis)
    assert back.prime_cutoff == 60


def test_cutoff_too_small_suggests():
    with pytest.raises(CutoffTooSmallError) as ei:
        product_charfn(spec_zeta(), 0.8, 5, w_max=20.0, nodes=21, preflight=False)
    assert ei.value.suggested_cutoff is not None and ei.value.suggested_cutoff > 5


def test_grid_axis_validation():
    with pytest.raises(DomainError):
        grid_axis(10.0, 64)
    assert grid_axis(10.0, 5).tolist() == [-10.0, -5.0, 0.0, 5.0, 10.0]


def test_gaussian_grid():
    g = gaussian_grid(5.0, 11)
    assert g.values[5, 5] == 1.0
    assert g.values[0, 5] == pytest.approx(math.exp(-12.5))


def test_decay_profile_zeta_bounded():
    c = local_curve(spec_zeta(), 1, 0.75)
    prof = decay_profile(c, [1e2, 1e3, 1e4])
    assert prof.bounded(1.2)
    # asymptotic value of the normalised envelope is sqrt(2 / pi)
    assert prof.normalized[-1] == pytest.approx(math.sqrt(2 / math.pi), rel=0.15)
    assert np.all(prof.sup_shell >= prof.sup_fixed - 1e-15)
    with pytest.raises(DomainError):
        decay_profile(c, [10.0, 5.0])


def test_stationary_points_two():
    c = local_curve(spec_zeta(), 1, 0.75)
    for tau in np.linspace(0, np.pi, 7):
        d1, d2 = stationary_point_counts(c, tau)
        assert d1 == 2 and d2 == 2


def test_preflight_zeta():
    res = decay_preflight(spec_zeta(), 1.2)
    assert res.passed and len(res.decaying) == 5


def test_zeta_p2_w50_oracle():
    c = local_curve(spec_zeta(), 1, 0.75)
    assert abs(local_charfn(c, 50.0) - riemann_oracle(c, 50.0 + 0j)) < 1e-8


def test_conjugate_100_random():
    c = local_curve(spec_zeta(), 2, 0.9)
    rng = np.random.default_rng(100)
    for w in rng.normal(0, 20, 100) + 1j * rng.normal(0, 20, 100):
        assert abs(local_charfn(c, -w) - np.conj(local_charfn(c, w))) < 1e-12


def test_degenerate_curve_flagged():
    c = local_curve(spec_custom("pm", [1.0, -1.0]), 1, 0.75)
    assert abs(c.r[0]) < 1e-15
    prof = decay_profile(c, [1e2, 1e3])
    assert prof.degenerate
    assert not decay_profile(local_curve(spec_zeta(), 1, 0.75), [1e2]).degenerate


def test_small_radius_sup_near_one():
    c = local_curve(spec_zeta(), 1, 0.75)
    prof = decay_profile(c, [1e-4, 1e-3])
    np.testing.assert_allclose(prof.sup_fixed, 1.0, atol=1e-5)


def test_two_stationary_points_large_prime():
    from mfunc.arith import satake_angle
    from mfunc.arith import HeckeTable, first_primes

    lam = np.full(200, 1.9)
    tab = HeckeTable("t", 2, 1, first_primes(200), lam, satake_angle(lam))
    from mfunc.euler import spec_sympow

    c = local_curve(spec_sympow(tab, 2), 150, 0.9)  # |r_1| = 2.61
    for tau in np.linspace(0, np.pi, 9):
        assert stationary_point_counts(c, tau) == (2, 2)


def test_grid_n1_equals_local():
    g = product_charfn(spec_zeta(), 1.0, 1, w_max=10.0, nodes=21, tail_tol=10.0,
                       preflight=False)
    c = local_curve(spec_zeta(), 1, 1.0)
    for a, b in ((0, 0), (4, 17), (13, 10)):
        assert g.values[a, b] == pytest.approx(local_charfn(c, complex(g.axis[a], g.axis[b])),
                                               abs=1e-10)


def test_tail_bound_covers_refinement():
    kw = dict(w_max=40.0, nodes=81, preflight=False)
    g1 = product_charfn(spec_zeta(), 1.2, 1000, **kw)
    g2 = product_charfn(spec_zeta(), 1.2, 2000, **kw)
    assert np.abs(g1.values - g2.values).max() <= g1.tail_bound
    # |Lambda_N| is non-increasing in N
    assert np.all(np.abs(g2.values) <= np.abs(g1.values) + 1e-15)
