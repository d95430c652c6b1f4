import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wklab.grid import (
    ConfigurationError,
    GridMismatchError,
    PeriodicGrid,
    ValueField,
    interpolate,
    make_grid,
    min_lift_displacement,
    random_field,
    reduce_point,
    sup_distance,
    torus_distance,
)

coord = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
pt1 = st.tuples(coord)
pt2 = st.tuples(coord, coord)


def test_make_grid_examples():
    g = make_grid(1, 8)
    np.testing.assert_array_equal(g.coords()[:, 0], np.arange(8) / 8)
    g2 = make_grid(2, 16)
    assert g2.size == 256 and g2.spacing == 0.0625
    assert abs(g2.spacing * g2.resolution - 1.0) < 1e-12


@pytest.mark.parametrize("dim,res", [(3, 8), (0, 8), (1, 7), (2, 4)])
def test_make_grid_rejects(dim, res):
    with pytest.raises(ConfigurationError):
        make_grid(dim, res)


def test_coords_c_order():
    g = make_grid(2, 8)
    assert np.allclose(g.coords()[8 * 3 + 5], [3 / 8, 5 / 8])
    assert g.index_of((3, 5)) == 29
    assert g.index_of((-1, 8)) == g.index_of((7, 0))
    assert g.nearest_node((0.99, 0.26)) == g.index_of((0, 2))


def test_distance_examples():
    assert torus_distance([0.3], [0.3]) == 0.0
    assert torus_distance([0.1], [0.9]) == pytest.approx(0.2, abs=1e-15)
    assert torus_distance([0.0, 0.0], [0.5, 0.5]) == pytest.approx(math.sqrt(2) / 2)


@given(pt2, pt2, pt2)
def test_metric_axioms(a, b, c):
    dab = torus_distance(a, b)
    assert dab == pytest.approx(torus_distance(b, a), abs=1e-12)
    assert dab <= torus_distance(a, c) + torus_distance(c, b) + 1e-12
    assert dab <= math.sqrt(2) / 2 + 1e-12


@given(pt1, pt1, st.integers(-5, 5))
def test_distance_lattice_invariant(a, b, k):
    assert torus_distance(a, b) == pytest.approx(torus_distance([a[0] + k], b), abs=1e-12)
    assert torus_distance(a, b) <= 0.5 + 1e-12


@given(pt2)
def test_reduction_idempotent(a):
    r = reduce_point(a)
    assert np.all((0 <= r) & (r < 1))
    np.testing.assert_array_equal(reduce_point(r), r)


def test_min_lift_examples():
    np.testing.assert_allclose(min_lift_displacement([0.0], [0.0], 1)[:, 0], [0, -1, 1])
    np.testing.assert_allclose(min_lift_displacement([0.0], [0.75], 1)[:, 0], [-0.25, 0.75, 1.75])
    d = min_lift_displacement([0.0, 0.0], [0.5, 0.0], 1)
    assert d.shape == (9, 2)
    assert {tuple(r) for r in d[:2]} == {(0.5, 0.0), (-0.5, 0.0)}


@given(pt2, pt2, st.integers(1, 3))
def test_min_lift_contains_distance(a, b, r):
    d = min_lift_displacement(a, b, r)
    assert np.linalg.norm(d[0]) == pytest.approx(torus_distance(a, b), abs=1e-12)
    norms = np.linalg.norm(d, axis=1)
    assert np.all(np.diff(norms) >= -1e-15)


def test_value_field_validation():
    g = make_grid(1, 8)
    with pytest.raises(ValueError):
        ValueField(g, np.ones(7))
    bad = np.ones(8)
    bad[2] = np.nan
    with pytest.raises(ValueError):
        ValueField(g, bad)
    u = ValueField(g, np.arange(8.0), time_tag=1.25)
    assert u.time_tag == 0.25
    with pytest.raises(ValueError):
        u.samples[0] = 5.0


def test_sup_distance_examples(rng):
    g = make_grid(1, 16)
    u = ValueField(g, rng.normal(size=16))
    v = ValueField(g, rng.normal(size=16))
    assert sup_distance(u, u) == 0.0
    zero = ValueField(g, np.zeros(16))
    assert sup_distance(zero, zero + 3.0) == 3.0
    assert sup_distance(u, v) == max(abs(a - b) for a, b in zip(u.samples, v.samples))
    with pytest.raises(GridMismatchError):
        sup_distance(u, ValueField(make_grid(1, 8), np.zeros(8)))


@given(st.floats(-1e3, 1e3), st.integers(0, 2**32 - 1))
def test_sup_distance_shift_invariant(c, seed):
    g = make_grid(2, 8)
    r = np.random.default_rng(seed)
    u = ValueField(g, r.normal(size=g.size))
    v = ValueField(g, r.normal(size=g.size))
    assert sup_distance(u + c, v + c) == pytest.approx(sup_distance(u, v), rel=0, abs=1e-9)


def test_interpolation_nodes_and_monotone(rng):
    g = make_grid(2, 16)
    u = random_field(g, rng)
    np.testing.assert_allclose(interpolate(u, g.coords()), u.samples, atol=1e-13)
    pts = rng.uniform(-1, 2, size=(200, 2))
    v = u.with_samples(u.samples + np.abs(rng.normal(size=g.size)))
    assert np.all(interpolate(v, pts) >= interpolate(u, pts) - 1e-13)
    # periodic in each axis
    np.testing.assert_allclose(interpolate(u, pts), interpolate(u, pts + [1.0, -2.0]), atol=1e-12)


def test_random_field_deterministic():
    g = make_grid(1, 32)
    a = random_field(g, np.random.default_rng(3))
    b = random_field(g, np.random.default_rng(3))
    np.testing.assert_array_equal(a.samples, b.samples)
    assert isinstance(g, PeriodicGrid)
