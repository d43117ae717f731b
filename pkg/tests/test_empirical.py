import math

import mpmath
import numpy as np
import pytest

from mfunc.charfun import gaussian_grid
from mfunc.density import Rectangle, invert
from mfunc.empirical import (EmpiricalHistogram, bohr_jessen_ratio, build_histogram,
                             discrepancy, rectangle_family, resample_histogram, sample_line,
                             sample_log, t_grid, truncation_bound)
from mfunc.errors import DomainError, GridTooSmallError
from mfunc.euler import spec_custom, spec_zeta


def test_sample_log_against_mpmath_zeta():
    spec = spec_zeta()
    N = 5000
    for sigma, t in ((2.0, 0.0), (2.0, 14.1), (1.5, 100.0), (3.0, -7.5)):
        ref = complex(mpmath.log(mpmath.zeta(mpmath.mpc(sigma, t))))
        got = sample_log(spec, sigma, t, N)
        assert abs(got - ref) <= truncation_bound(spec, sigma, N)
        assert abs(got - ref) < 1e-3


def test_truncation_bound_inf_below_one():
    assert truncation_bound(spec_zeta(), 1.0, 100) == math.inf


def test_sample_line_matches_direct():
    spec = spec_custom("c", [np.exp(0.7j), np.exp(-0.7j)])
    T, S, N = 50.0, 1001, 200
    vals = sample_line(spec, 1.1, T, S, N)
    t = np.linspace(-T, T, S)
    np.testing.assert_allclose(vals, sample_log(spec, 1.1, t, N), atol=1e-11)


@pytest.mark.parametrize("S", [1000, 1001])
def test_t_grid(S):
    t, self_mirror = t_grid(10.0, S)
    full = np.linspace(-10.0, 10.0, S)
    assert self_mirror == (S % 2 == 1)
    np.testing.assert_allclose(t, full[full >= -1e-12][: t.size], atol=1e-12)


def _geom(half=3.0, n=64):
    return (-half, 2 * half / n, n, -half, 2 * half / n, n)


def test_histogram_counts_and_ratio():
    h = build_histogram(spec_zeta(), 1.3, 500.0, 4001, 300, _geom())
    assert h.counts.sum() + h.out_of_range == 4001
    assert bohr_jessen_ratio(h, h.rect) == pytest.approx(1 - h.out_of_range / 4001)
    assert h.heuristic is False
    # conjugate mirror: with an even count t = 0 is not sampled and the
    # histogram is symmetric under y -> -y
    h = build_histogram(spec_zeta(), 1.3, 500.0, 4000, 300, _geom())
    np.testing.assert_array_equal(h.counts, h.counts[:, ::-1])


def test_histogram_validation():
    with pytest.raises(DomainError):
        build_histogram(spec_zeta(), 1.3, 100.0, 999, 10, _geom())
    with pytest.raises(GridTooSmallError):
        build_histogram(spec_zeta(), 1.1, 100.0, 2000, 100, _geom(0.05, 4))


def test_ratio_prorates_partial_bins():
    h = build_histogram(spec_zeta(), 1.3, 500.0, 4001, 300, _geom())
    x = h.x_edges
    whole = bohr_jessen_ratio(h, Rectangle(x[20], x[40], -3, 3))
    left = bohr_jessen_ratio(h, Rectangle(x[20], 0.5 * (x[30] + x[31]), -3, 3))
    right = bohr_jessen_ratio(h, Rectangle(0.5 * (x[30] + x[31]), x[40], -3, 3))
    assert left + right == pytest.approx(whole, abs=1e-15)


def test_rectangle_family_deterministic():
    g = _geom()
    a = rectangle_family(g, 50, seed=7)
    b = rectangle_family(g, 50, seed=7)
    assert [r for _, r in a] == [r for _, r in b]
    assert [r for _, r in a] != [r for _, r in rectangle_family(g, 50, seed=8)]
    for (i0, i1, j0, j1), R in a:
        assert 0 <= i0 < i1 <= 64 and 0 <= j0 < j1 <= 64
        assert R.x0 == pytest.approx(-3.0 + i0 * 6 / 64)


@pytest.fixture(scope="module")
def gauss():
    return invert(gaussian_grid(12.0, 257), Rectangle.square(5.0), 100, require_preflight=False)


def test_discrepancy_of_exact_sample(gauss):
    # i.i.d. draws from the density: statistics sit at the noise floor
    h = resample_histogram(gauss, 200000, seed=1)
    rep = discrepancy(h, gauss)
    assert rep.sup_rect < 5 * max(rep.std_error, 1e-3)
    assert rep.l1 < 3 * rep.l1_noise
    assert not rep.insufficient_data


def test_discrepancy_detects_wrong_density(gauss):
    shifted = resample_histogram(gauss, 100000, seed=2)
    shifted.counts = np.roll(shifted.counts, 8, axis=0)
    rep = discrepancy(shifted, gauss)
    assert rep.sup_rect > 0.1 and rep.l1 > 0.3


def test_discrepancy_grid_mismatch(gauss):
    h = build_histogram(spec_zeta(), 1.3, 500.0, 2001, 50, _geom())
    with pytest.raises(DomainError):
        discrepancy(h, gauss)


def test_histogram_csv_round_trip(tmp_path):
    h = build_histogram(spec_zeta(), 1.3, 500.0, 2001, 50, _geom())
    h.to_csv(tmp_path / "h.csv")
    back = EmpiricalHistogram.from_csv(tmp_path / "h.csv")
    np.testing.assert_array_equal(back.counts, h.counts)
    assert back.geometry == h.geometry
    assert back.mean == h.mean


def test_log_zeta_two():
    spec = spec_zeta()
    v = sample_log(spec, 2.0, 0.0, 20000)
    assert abs(v - math.log(math.pi**2 / 6)) <= truncation_bound(spec, 2.0, 20000)
    assert v.imag == 0.0


def test_conjugate_symmetry_exact():
    t = np.array([0.5, 3.0, 1234.5])
    a = sample_log(spec_zeta(), 1.2, t, 100)
    b = sample_log(spec_zeta(), 1.2, -t, 100)
    np.testing.assert_array_equal(a, np.conj(b))
    vals = sample_line(spec_zeta(), 1.2, 100.0, 2000, 100)
    np.testing.assert_array_equal(vals, np.conj(vals[::-1]))


def test_ratio_conjugate_rectangle():
    h = build_histogram(spec_zeta(), 1.3, 500.0, 4000, 300, _geom())
    R = Rectangle(-0.3, 0.6, 0.1, 0.9)
    assert bohr_jessen_ratio(h, R) == pytest.approx(bohr_jessen_ratio(h, R.conj()), abs=1e-15)


def test_sample_mean_near_zero():
    h = build_histogram(spec_zeta(), 1.2, 2000.0, 40000, 2000, _geom(4.0))
    se = math.sqrt(h.var_re / 40000)
    assert abs(h.mean.real) < 3 * se and abs(h.mean.imag) < 1e-15


def test_insufficient_data(gauss):
    h = resample_histogram(gauss, 0, seed=0)
    rep = discrepancy(h, gauss)
    assert rep.insufficient_data and math.isnan(rep.l1)


def test_doubling_diagnostic():
    from mfunc.empirical import doubling_diagnostic

    T, r, d = doubling_diagnostic(spec_zeta(), 1.3, Rectangle(-0.2, 0.2, -0.2, 0.2), 250.0, 4,
                                  10.0, 300, _geom())
    assert T.tolist() == [250.0, 500.0, 1000.0, 2000.0, 4000.0]
    assert np.all((r > 0) & (r < 1))
    assert d[-1] < d[0]


def test_truncation_consistency(gauss):
    # quadrupling the sampler cutoff at sigma = 1.2 moves histogram masses by
    # less than their statistical noise
    g = _geom(3.0, 32)
    a = build_histogram(spec_zeta(), 1.2, 2000.0, 40001, 500, g)
    b = build_histogram(spec_zeta(), 1.2, 2000.0, 40001, 2000, g)
    fam = rectangle_family(g, 100, seed=0)
    worst = max(abs(bohr_jessen_ratio(a, R) - bohr_jessen_ratio(b, R)) for _, R in fam)
    assert worst < 3 * math.sqrt(0.25 / 40001)
