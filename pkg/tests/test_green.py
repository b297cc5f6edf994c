"""Factorization identity, bounded-factor inversion, and the two Green routes."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewloc import (
    Frequency,
    GreenMatrix,
    IllConditioned,
    SingularityGuard,
    TorusPoint,
    Window,
    assemble,
    decay_profile,
    factorize,
    fit_decay,
    green,
    green_direct,
    invert_b,
    kernel_from_profile,
)
from skewloc.errors import InsufficientData
from skewloc.green import b_matrix_batch
from skewloc.dynamics import first_coords
from skewloc.sampling import rng_for

from conftest import GOLDEN

unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True,
                 allow_nan=False, allow_infinity=False)
energies = st.floats(min_value=-10.0, max_value=10.0,
                     allow_nan=False, allow_infinity=False)


def planted_start(target: float, j: int, x2: float, omega: float) -> TorusPoint:
    """Start whose orbit hits first coordinate ``target`` at site j."""
    tri = (j * (j - 1)) // 2
    return TorusPoint((target - j * x2 - tri * omega) % 1.0, x2)


@given(unit, unit, energies)
def test_factorization_identity(x1, x2, energy):
    # D * B rebuilds H - E entrywise; the core algebraic claim
    kern = kernel_from_profile(1.0, 1e-2)
    fr = Frequency(GOLDEN)
    x = TorusPoint(x1, x2)
    w = Window(0, 31)
    f = factorize(w, x, fr, kern, energy, tau_sing=1e-15)
    try:
        d = f.d_diag
    except SingularityGuard:
        return
    op = assemble(w, x, fr, kern, tau_sing=0.0)
    lhs = d[:, None] * f.b
    rhs = op.entries - energy * np.eye(w.sites)
    tol = 1e-10 * (1.0 + np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) <= tol


@given(unit, unit, energies)
def test_b_factor_uniformly_bounded(x1, x2, energy):
    # |B_mm| <= 1 and |B_mn| <= eps |k(m-n)|, uniformly in the energy
    kern = kernel_from_profile(1.0, 1e-2)
    f = factorize(Window(0, 31), TorusPoint(x1, x2), Frequency(GOLDEN),
                  kern, energy)
    b = np.abs(f.b)
    assert np.max(np.diagonal(b)) <= 1.0 + 1e-14
    off = b[~np.eye(32, dtype=bool)]
    assert np.max(off, initial=0.0) <= kern.eps * (1.0 + 1e-14)


def test_b_identity_at_exact_pole():
    # every orbit point on the pole: B collapses to the identity and the
    # Green matrix vanishes (the cosine column factor is exactly zero)
    kern = kernel_from_profile(1.0, 0.0)
    f = factorize(Window(0, 7), TorusPoint(0.5, 0.0), Frequency(0.0), kern, 0.0)
    assert np.array_equal(f.b, np.eye(8))
    binv = invert_b(f)
    assert np.array_equal(binv.matrix, np.eye(8))
    g = green(f, binv=binv)
    assert np.array_equal(g.entries, np.zeros((8, 8)))
    with pytest.raises(SingularityGuard) as ei:
        f.d_diag
    assert ei.value.distance == 0.0


def test_d_diag_guard_reports_planted_site(golden):
    x = planted_start(0.5 + 1e-12, 5, 0.37, golden.omega)
    f = factorize(Window(0, 31), x, golden, kernel_from_profile(1.0, 1e-3), 0.3)
    with pytest.raises(SingularityGuard) as ei:
        f.d_diag
    assert ei.value.site == 5
    assert ei.value.distance == pytest.approx(1e-12, rel=1e-2)


def test_green_entrywise_dominated_by_b_inverse(golden, kernel_mid):
    rng = rng_for(1, 0)
    for _ in range(10):
        x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        energy = float(rng.uniform(-10, 10))
        f = factorize(Window(0, 63), x, golden, kernel_mid, energy)
        binv = invert_b(f)
        g = green(f, binv=binv)
        assert np.all(np.abs(g.entries) <= np.abs(binv.matrix) + 1e-14)


def test_green_solves_shifted_operator(golden, kernel_mid):
    x = TorusPoint(0.21, 0.68)
    energy = 0.3
    f = factorize(Window(0, 63), x, golden, kernel_mid, energy)
    g = green(f)
    op = assemble(Window(0, 63), x, golden, kernel_mid, tau_sing=0.0)
    resid = (op.entries - energy * np.eye(64)) @ g.entries - np.eye(64)
    assert np.max(np.abs(resid)) < 1e-8
    assert g.route == "factorized"
    assert g.cond >= 1.0


def test_factorized_vs_direct_near_pole(golden):
    # a site planted 1e-6 from the pole: the direct inverse is close to
    # losing half its digits while the factorized route stays pristine
    kern = kernel_from_profile(1.0, 1e-3)
    j = 7
    x = planted_start(0.5 + 1e-6, j, 0.37, golden.omega)
    w = Window(0, 31)
    gf = green(factorize(w, x, golden, kern, 0.3))
    gd = green_direct(assemble(w, x, golden, kern, tau_sing=0.0), 0.3)
    assert gf.cond < 100.0
    assert gd.cond > 1e5
    assert gd.cond / gf.cond > 1e4
    rel = np.max(np.abs(gf.entries - gd.entries)) / np.max(np.abs(gd.entries))
    assert rel < 1e-6
    assert gd.route == "direct"
    # the Green column through the near-pole site is suppressed by cos(pi v_j)
    assert np.max(np.abs(gf.entries[:, j])) < 1e-4


def test_routes_agree_generic(golden, kernel_mid):
    rng = rng_for(2, 0)
    for _ in range(5):
        x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        energy = float(rng.uniform(-10, 10))
        w = Window(0, 63)
        gf = green(factorize(w, x, golden, kernel_mid, energy))
        op = assemble(w, x, golden, kernel_mid, tau_sing=0.0)
        if np.linalg.cond(op.entries - energy * np.eye(64), 1) >= 1e8:
            continue
        gd = green_direct(op, energy)
        rel = np.max(np.abs(gf.entries - gd.entries)) / np.max(np.abs(gd.entries))
        assert rel < 1e-6


def test_invert_b_refinement_quality(golden, kernel_mid):
    f = factorize(Window(0, 63), TorusPoint(0.21, 0.68), golden, kernel_mid, 0.3)
    binv = invert_b(f)
    assert binv.residual < 1e-12
    assert binv.cond >= 1.0


def test_ill_conditioned_paths():
    # an all-pole window with eps = 0 makes B the zero matrix
    kern = kernel_from_profile(1.0, 0.0)
    f = factorize(Window(0, 7), TorusPoint(0.0, 0.0), Frequency(0.0), kern, 0.0)
    with pytest.raises(IllConditioned) as ei:
        invert_b(f)
    assert math.isinf(ei.value.cond)
    # a healthy factor pushed over an artificially tiny cap
    kern2 = kernel_from_profile(1.0, 1e-3)
    f2 = factorize(Window(0, 7), TorusPoint(0.21, 0.68), Frequency(GOLDEN),
                   kern2, 0.3)
    with pytest.raises(IllConditioned) as ei2:
        invert_b(f2, cond_cap=1.0)
    assert ei2.value.cond > 1.0


def test_b_matrix_batch_matches_factorize(golden, kernel_mid):
    rng = rng_for(3, 0)
    starts = rng.uniform(size=(3, 2))
    vb = np.stack([
        first_coords(TorusPoint(float(a), float(b)), golden, np.arange(16))
        for a, b in starts
    ])
    batch = b_matrix_batch(vb, kernel_mid, 0.3)
    for i, (a, b) in enumerate(starts):
        f = factorize(Window(0, 15), TorusPoint(float(a), float(b)), golden,
                      kernel_mid, 0.3)
        assert np.array_equal(batch[i], f.b)


def test_b_shift_covariance(golden, kernel_mid):
    from skewloc import iterate_closed
    rng = rng_for(4, 0)
    for _ in range(5):
        x = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        k = int(rng.integers(-20, 21))
        energy = float(rng.uniform(-10, 10))
        fa = factorize(Window(0, 63).shift(k), x, golden, kernel_mid, energy)
        fb = factorize(Window(0, 63), iterate_closed(x, golden, k), golden,
                       kernel_mid, energy)
        assert np.max(np.abs(fa.b - fb.b)) < 1e-12


def test_decay_profile_brute_force():
    rng = rng_for(5, 0)
    a = rng.normal(size=(12, 12))
    prof = decay_profile(a)
    assert prof.shape == (12,)
    for d in range(12):
        ref = max(abs(a[i, j]) for i in range(12) for j in range(12)
                  if abs(i - j) == d)
        assert prof[d] == ref


def test_fit_decay_recovers_exact_rate():
    d = np.arange(101, dtype=np.float64)
    fit = fit_decay(3.0 * np.exp(-0.3 * d))
    assert fit.rate == pytest.approx(0.3, rel=1e-10)
    assert fit.residual < 1e-12
    assert fit.n_classes == 90


def test_fit_decay_edge_cases():
    with pytest.raises(InsufficientData):
        fit_decay(np.ones(8))
    prof = np.zeros(101)
    prof[0] = 1.0
    fit = fit_decay(prof)
    assert math.isinf(fit.rate)
    assert fit.n_classes == 0
    prof[50] = 0.5
    assert math.isinf(fit_decay(prof).rate)
    # zero classes are skipped, not fitted
    d = np.arange(101, dtype=np.float64)
    prof = np.exp(-0.2 * d)
    prof[30:60] = 0.0
    assert fit_decay(prof).rate == pytest.approx(0.2, rel=1e-9)


def test_green_matrix_helpers():
    entries = np.array([[1.0, -2.0], [0.5, 3.0]])
    g = GreenMatrix(window=Window(10, 11), energy=0.0, entries=entries,
                    cond=1.0, route="direct")
    assert g.sup_norm == 3.0
    assert g.row_norm == 3.5
    rows = list(g.to_rows())
    assert rows[1] == (10, 11, -2.0, 0.0)
    assert len(rows) == 4
