from dataclasses import replace

import numpy as np
import pytest

from wklab.action import barrier_rows, kernel_family
from wklab.grid import ValueField, make_grid, random_field
from wklab.models import GOLDEN, Integrable, Mechanical, PeriodicDrift
from wklab.operators import fixed_point, make_state, window_min_periodic
from wklab.weakkam import (
    EmptyTraceError,
    SpaceTimeField,
    aubry_set,
    check_domination,
    extract_calibrated_curve,
    self_barrier,
    space_time_field,
    static_classes,
    verify_field,
    weak_kam_from_trace,
)

G64 = make_grid(1, 64)


@pytest.fixture(scope="module")
def drift_solution():
    state = make_state(PeriodicDrift(), random_field(G64, np.random.default_rng(0)), critical="exact")
    w0 = window_min_periodic(state, 32)
    return state, w0, space_time_field(state.family, w0, state.c_estimate)


@pytest.fixture(scope="module")
def pendulum():
    fam = kernel_family(Mechanical(), G64)
    return fam, barrier_rows(fam, np.arange(64), 0.0, 0.0, 32)


def test_space_time_validation():
    with pytest.raises(ValueError):
        SpaceTimeField(G64, np.array([0.0, 0.5]), np.zeros((3, 64)))
    with pytest.raises(ValueError):
        SpaceTimeField(G64, np.array([0.1, 0.5]), np.zeros((2, 64)))
    f = SpaceTimeField(G64, np.array([0.0, 0.5]), np.zeros((2, 64)))
    assert f.slice(1).time_tag == 0.5
    assert np.all((f + 2.0).values == 2.0)


def test_constant_field_dominated(pendulum):
    fam, _ = pendulum
    u = space_time_field(fam, ValueField(G64, np.full(64, 3.0)))
    rep = check_domination(u, fam, sample_pairs=100)
    assert rep.passed and rep.max_excess <= 1e-12


def test_pipeline_solution_passes(drift_solution):
    state, _, u = drift_solution
    rep, ok = verify_field(u, state.family, state.c_estimate, sample_pairs=200)
    assert ok and rep.violations == 0 and rep.max_defect <= 1e-2
    d = rep.to_dict()
    assert set(d) >= {"violations", "max_defect", "aubry_nodes", "classes"}


def test_spike_detected(drift_solution):
    state, w0, _ = drift_solution
    spiked = w0.samples.copy()
    spiked[17] += 1.0
    u = space_time_field(state.family, w0.with_samples(spiked), state.c_estimate)
    rep, ok = verify_field(u, state.family, state.c_estimate, sample_pairs=200)
    assert not ok and rep.violations > 0


def test_round_trip(drift_solution):
    state, w0, u = drift_solution
    again = window_min_periodic(replace(state, current=u.slice(0)), 32)
    assert np.max(np.abs(again.samples - w0.samples)) <= 5e-2


def test_mechanical_curve_rests_at_zero():
    fam = kernel_family(Mechanical(), G64)
    st_ = make_state(Mechanical(), random_field(G64, np.random.default_rng(1)), critical="exact")
    ubar = fixed_point(st_, tol=1e-12)
    u = space_time_field(fam, ubar, st_.c_estimate)
    path = extract_calibrated_curve(u, fam, 0, 0.0, span=3, c=st_.c_estimate)
    assert np.all(path.nodes == 0)
    assert path.total_action == 0.0
    assert path.defect <= 1e-12


def test_integrable_curve_rides_drift():
    g = make_grid(1, 128)
    st_ = make_state(Integrable((GOLDEN,)), random_field(g, np.random.default_rng(2)), critical="exact")
    w0 = window_min_periodic(st_, 32)
    fam = st_.family
    u = space_time_field(fam, w0, st_.c_estimate)
    path = extract_calibrated_curve(u, fam, 40, 0.0, span=2, c=st_.c_estimate)
    steps = np.diff(path.nodes)
    steps = (steps + 64) % 128 - 64
    vel = steps * g.spacing / fam.dt
    # averaged over one period the velocity is omega up to the grid slack
    per_period = vel.reshape(-1, fam.m).mean(axis=1)
    assert np.all(np.abs(per_period - GOLDEN) <= 2 * g.spacing / fam.dt)
    with pytest.raises(ValueError):
        extract_calibrated_curve(u, fam, 0, 0.0, span=0)


def test_aubry_sets(pendulum):
    fam, h = pendulum
    # the discrete self-barrier grows like 2 pi d^2; a tolerance below one
    # grid step of that parabola isolates the rest point
    tol = np.pi * G64.spacing**2
    assert aubry_set(fam, 0.0, 32, tol).tolist() == [0]
    assert set(aubry_set(fam, 0.0, 32, 0.0).tolist()) <= {0}
    ig = kernel_family(Integrable((GOLDEN,)), G64)
    c = ig.critical_value()
    assert aubry_set(ig, 0.0, 32, 2e-2, c).size == 64
    assert static_classes(h, [0], tol)[0].tolist() == [0]


def test_aubry_set_stable_under_window_doubling(pendulum):
    fam, _ = pendulum
    tol = np.pi * G64.spacing**2
    a = set(aubry_set(fam, 0.0, 16, tol).tolist())
    b = set(aubry_set(fam, 0.0, 32, tol).tolist())
    assert len(a ^ b) <= 1


def test_self_barrier_shape(pendulum):
    fam, _ = pendulum
    d = self_barrier(fam, 0.0, 32)
    assert d[0] == 0.0
    dist = np.minimum(np.arange(64), 64 - np.arange(64)) * G64.spacing
    # grows with the distance to the rest point
    assert np.all(d[1:] > 0)
    assert np.corrcoef(d[1:], dist[1:] ** 2)[0, 1] > 0.95


def test_trace_representation(pendulum):
    fam, h = pendulum
    st_ = make_state(Mechanical(), random_field(G64, np.random.default_rng(3)), critical="exact")
    ubar = fixed_point(st_, tol=1e-12)
    uf = weak_kam_from_trace({0: float(ubar.samples[0])}, fam, 32)
    assert np.max(np.abs(uf.values[0] - ubar.samples)) <= 2e-2
    shifted = weak_kam_from_trace({0: float(ubar.samples[0]) + 1.5}, fam, 32)
    np.testing.assert_array_equal(shifted.values, uf.values + 1.5)
    with pytest.raises(EmptyTraceError):
        weak_kam_from_trace({}, fam, 32)


def test_trace_integrable_is_constant():
    ig = kernel_family(Integrable((GOLDEN,)), G64)
    c = ig.critical_value()
    uf = weak_kam_from_trace({0: 1.0, 10: 0.3, 40: 2.0}, ig, 32, c)
    assert np.max(np.abs(uf.values - 0.3)) <= 5e-2
