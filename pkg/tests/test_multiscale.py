"""Initial-scale certificates, smallness measures, classification, density."""

import math

import numpy as np
import pytest

from skewloc import (
    Frequency,
    ScaleSchedule,
    TorusPoint,
    Window,
    bad_set_measure,
    classify_sites,
    diag_smallness_measure,
    iterate_closed,
    kernel_from_profile,
    neumann_initial,
    norm_cap,
    single_site_smallness,
    window_density,
)
from skewloc.multiscale import MeasureEstimate, inf_norm
from skewloc.sampling import rng_for

from conftest import GOLDEN


def planted(target: float, j: int, x2: float, omega: float) -> TorusPoint:
    tri = (j * (j - 1)) // 2
    return TorusPoint((target - j * x2 - tri * omega) % 1.0, x2)


def test_norm_cap_and_inf_norm():
    assert norm_cap(16) == pytest.approx(math.exp(4.0), rel=1e-15)
    a = np.array([[1.0, -2.0], [3.0, 0.5]])
    assert inf_norm(a) == 3.5


def test_scale_schedule():
    s0 = ScaleSchedule.for_scale(0, rho=1.0)
    assert (s0.l0, s0.m, s0.n) == (8, 32, 256)
    s2 = ScaleSchedule.for_scale(2, rho=1.0)
    assert (s2.l0, s2.m, s2.n) == (32, 128, 1024)
    assert s0.decay_floor == 0.01
    assert s0.cap_m == pytest.approx(norm_cap(32))
    assert s0.cap_n == pytest.approx(norm_cap(256))
    assert s0.min_subinterval == 2
    with pytest.raises(ValueError):
        ScaleSchedule(l0=16, m=8, n=256, rho=1.0)
    with pytest.raises(ValueError):
        ScaleSchedule(l0=8, m=32, n=256, rho=0.0)
    with pytest.raises(ValueError):
        ScaleSchedule(l0=8, m=32, n=256, rho=1.0, delta=1.0)
    with pytest.raises(ValueError):
        ScaleSchedule.for_scale(-1, rho=1.0)


def test_neumann_good_certificate(golden):
    kern = kernel_from_profile(1.0, 1e-6)
    c = neumann_initial(Window(0, 24), TorusPoint(0.21, 0.68), golden, kern,
                        0.3, eps0=1e-3)
    assert c.ok
    assert c.failure is None
    assert c.mu == pytest.approx(0.0356, abs=2e-4)
    assert c.q < 1e-3
    assert c.max_ratio <= 1.0 + 1e-9
    assert c.bound.shape == (25, 25)
    # the bound is nearly attained on the diagonal, so it is not slack
    assert c.max_ratio > 0.99


def test_neumann_diagonal_failure(golden):
    # plant an orbit point 1e-6 past the zero locus of the B diagonal
    kern = kernel_from_profile(1.0, 1e-6)
    v_star = (math.atan(-(kern.eps * kern.k0 - 0.3)) / math.pi) % 1.0
    x = planted(v_star + 1e-6, 11, 0.37, GOLDEN)
    c = neumann_initial(Window(0, 24), x, golden, kern, 0.3, eps0=1e-3)
    assert not c.ok
    assert c.failure == "diagonal"
    assert c.mu == pytest.approx(math.pi * 1e-6, rel=1e-2)
    assert c.bound is None
    assert math.isinf(c.max_ratio)


def test_neumann_contraction_failure(golden):
    # diagonal floor cleared but the series ratio q lands near 1.8
    kern = kernel_from_profile(1.0, 9e-4)
    v_star = (math.atan(-(kern.eps * kern.k0 - 0.3)) / math.pi) % 1.0
    x = planted(v_star + 2e-3 / math.pi, 11, 0.37, GOLDEN)
    c = neumann_initial(Window(0, 24), x, golden, kern, 0.3, eps0=1e-3)
    assert not c.ok
    assert c.failure == "contraction"
    assert c.mu == pytest.approx(2e-3, rel=1e-2)
    assert c.q == pytest.approx(1.837, abs=0.01)


def test_neumann_precondition(golden):
    kern = kernel_from_profile(1.0, 1e-2)
    with pytest.raises(ValueError, match="eps0"):
        neumann_initial(Window(0, 24), TorusPoint(0.21, 0.68), golden, kern, 0.3)


def test_single_site_smallness_exact():
    assert single_site_smallness(0.0) == 0.0
    assert single_site_smallness(1.0) == pytest.approx(1.0, rel=1e-15)
    assert single_site_smallness(0.5) == pytest.approx(1.0 / 3.0, rel=1e-12)
    with pytest.raises(ValueError):
        single_site_smallness(1.5)


def test_diag_smallness_single_site_law(golden):
    # sites=1 reduces to the arcsine law; 1e5 samples sit within 3 SE
    kern = kernel_from_profile(1.0, 0.0)
    est = diag_smallness_measure(1, golden.omega, kern, 0.0, eps0=0.05,
                                 seed=0, samples=100_000)
    assert est.within(single_site_smallness(0.05))
    assert est.hits == round(est.fraction * est.samples)


def test_diag_smallness_threshold_saturation(golden):
    kern = kernel_from_profile(1.0, 0.0)
    est = diag_smallness_measure(8, golden.omega, kern, 0.0, eps0=1.5,
                                 seed=1, samples=50)
    assert est.fraction == 1.0
    with pytest.raises(ValueError):
        diag_smallness_measure(8, golden.omega, kern, 0.0, eps0=0.0,
                               seed=1, samples=50)


def test_diag_smallness_subadditive(golden):
    kern = kernel_from_profile(1.0, 0.0)
    est = diag_smallness_measure(4, golden.omega, kern, 0.0, eps0=0.05,
                                 seed=0, samples=20_000)
    bound = 4.0 * single_site_smallness(0.05)
    assert est.fraction <= bound + 3.0 * est.std_error


def test_bad_set_reduces_to_diag_smallness_at_zero_coupling(golden):
    # eps = 0 makes B diagonal, so the norm cap trips exactly when the
    # smallest diagonal entry dips below 1/cap; same seed, same stream
    kern = kernel_from_profile(1.0, 0.0)
    bs = bad_set_measure(16, golden.omega, kern, 0.3, seed=5, samples=400,
                         cap=100.0)
    ds = diag_smallness_measure(16, golden.omega, kern, 0.3, eps0=1.0 / 100.0,
                                seed=5, samples=400)
    assert bs.failures == ds.hits == 40
    assert bs.fail_decay == 0
    assert bs.fail_singular == 0
    assert bs.fraction == pytest.approx(0.1, rel=1e-12)
    assert bs.std_error == pytest.approx(ds.std_error, rel=1e-12)


def test_classify_sites_all_good_instance(golden):
    rng = rng_for(3, 7)
    x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
    kern = kernel_from_profile(1.0, 0.0)
    cls = classify_sites(Window(0, 63), x, golden, kern, 0.3, 8)
    assert bool(np.all(cls.good))
    assert cls.bad_fraction == 0.0
    assert cls.bad_sites.size == 0
    assert np.all(np.isfinite(cls.norms))


def test_classify_sites_bad_cluster_instance(golden, kernel_small):
    # one near-zero diagonal poisons every site whose sub-block sees it,
    # so bad sites arrive as one contiguous run of sub_length + 1 sites
    rng = rng_for(5, 8)
    x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
    cls = classify_sites(Window(0, 1023), x, golden, kernel_small, 0.0, 32)
    bad = cls.bad_sites
    assert bad.size == 33
    assert cls.bad_fraction == pytest.approx(33.0 / 1024.0, rel=1e-12)
    assert np.all(np.diff(bad) == 1)


def test_classify_sites_rejects_odd_sub_length(golden, kernel_small):
    with pytest.raises(ValueError):
        classify_sites(Window(0, 63), TorusPoint(0.2, 0.3), golden,
                       kernel_small, 0.0, 7)


def test_classify_shift_covariance(golden, kernel_small):
    for seed in range(5):
        rng = rng_for(seed, 12)
        x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        k = int(rng.integers(-10, 11))
        a = classify_sites(Window(0, 31).shift(k), x, golden, kernel_small,
                           0.3, 8)
        b = classify_sites(Window(0, 31), iterate_closed(x, golden, k),
                           golden, kernel_small, 0.3, 8)
        assert np.array_equal(a.good, b.good)


def test_window_density_brute_force_oracle():
    rng = rng_for(9, 0)
    mask = rng.uniform(size=40) < 0.2
    delta = 0.3
    rep = window_density(mask, delta)
    assert rep.min_length == 2
    best = -1.0
    for lo in range(40):
        for hi in range(lo + rep.min_length - 1, 40):
            length = hi - lo + 1
            cnt = int(np.count_nonzero(mask[lo:hi + 1]))
            best = max(best, cnt / length ** (1.0 - delta))
    assert rep.max_ratio == pytest.approx(best, rel=1e-12)
    lo, hi = rep.interval
    length = hi - lo + 1
    cnt = int(np.count_nonzero(mask[lo:hi + 1]))
    assert cnt / length ** (1.0 - delta) == pytest.approx(rep.max_ratio, rel=1e-12)


def test_window_density_edge_cases():
    with pytest.raises(ValueError):
        window_density(np.array([], dtype=bool), 0.3)
    assert window_density(np.zeros(20, dtype=bool), 0.3).max_ratio == 0.0
    one = np.zeros(20, dtype=bool)
    one[7] = True
    # an isolated bad site stays below 1 once windows have >= 2 sites
    assert window_density(one, 0.3).max_ratio == pytest.approx(2.0 ** -0.7)
    one[8] = True
    assert window_density(one, 0.3).max_ratio == pytest.approx(2.0 ** 0.3)


def test_window_density_accepted_instance(golden, kernel_small):
    # an instance whose classification is clean has zero density
    rng = rng_for(1, 8)
    x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
    cls = classify_sites(Window(0, 1023), x, golden, kernel_small, 0.0, 32)
    assert cls.bad_fraction == 0.0
    rep = window_density(~cls.good, 0.3)
    assert rep.max_ratio < 1.0


def test_measure_estimate_within():
    est = MeasureEstimate(fraction=0.5, std_error=0.01, hits=50, samples=100)
    assert est.within(0.52)
    assert not est.within(0.54)
    exact = MeasureEstimate(fraction=0.5, std_error=0.0, hits=50, samples=100)
    assert exact.within(0.5)
    assert not exact.within(0.5000001)


def test_bad_set_measure_cap_override(golden, kernel_small):
    # a cap below 1 fails every start through the norm branch
    bs = bad_set_measure(8, golden.omega, kernel_small, 0.3, seed=2,
                         samples=50, cap=1e-9)
    assert bs.fail_norm == 50
    assert bs.fraction == 1.0
