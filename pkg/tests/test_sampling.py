"""Seeded sampling, Latin hypercube structure, and order-stable parallel map."""

import math

import numpy as np
import pytest

from skewloc import parallel_map, rng_for, sample_box, sample_torus
from skewloc.sampling import standard_error


def test_rng_reproducible_and_stream_separated():
    a = rng_for(7, 0).uniform(size=4)
    b = rng_for(7, 0).uniform(size=4)
    c = rng_for(7, 1).uniform(size=4)
    d = rng_for(8, 0).uniform(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_rng_key_validation():
    with pytest.raises(ValueError):
        rng_for(-1)
    with pytest.raises(ValueError):
        rng_for(0, 2 ** 64)


def test_lhs_stratification():
    # exactly one point per axis-aligned cell of width 1/n
    pts = sample_box(3, 50, [(0.0, 1.0), (2.0, 4.0)])
    assert pts.shape == (50, 2)
    cells0 = np.floor(pts[:, 0] * 50).astype(int)
    cells1 = np.floor((pts[:, 1] - 2.0) / 2.0 * 50).astype(int)
    assert sorted(cells0) == list(range(50))
    assert sorted(cells1) == list(range(50))
    assert pts[:, 1].min() >= 2.0 and pts[:, 1].max() <= 4.0


def test_sample_box_validation():
    with pytest.raises(ValueError):
        sample_box(0, 0, [(0.0, 1.0)])
    with pytest.raises(ValueError):
        sample_box(0, 5, [(0.0, 1.0)], method="sobol")


def test_sample_torus_uniform_in_unit_square():
    pts = sample_torus(11, 200, method="uniform")
    assert pts.shape == (200, 2)
    assert np.all(pts >= 0.0) and np.all(pts < 1.0)
    # uniform draws must match the raw generator stream
    raw = rng_for(11, 0).uniform(size=(200, 2))
    assert np.array_equal(pts, raw)


def test_parallel_map_orders_and_matches_serial():
    items = list(range(40))
    serial = parallel_map(math.sqrt, items, workers=1)
    spawned = parallel_map(math.sqrt, items, workers=4, chunk_size=3)
    assert serial == [math.sqrt(i) for i in items]
    assert spawned == serial


def test_parallel_map_single_item_short_circuit():
    assert parallel_map(math.sqrt, [9.0], workers=8) == [3.0]
    assert parallel_map(math.sqrt, [], workers=8) == []


def test_standard_error():
    assert standard_error(50, 200) == pytest.approx(
        math.sqrt(0.25 * 0.75 / 200), rel=1e-15)
    assert standard_error(0, 10) == 0.0
    with pytest.raises(ValueError):
        standard_error(1, 0)
