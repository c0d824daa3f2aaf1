import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import wasserstein_distance

from freeot.errors import DomainError
from freeot.measures import (bernoulli, classical_convolve, log_potential, make_measure,
                             measure_from_json, measure_to_json, point_mass, quantile,
                             quantile_grid, scale_pushforward, shift, signed_log_potential,
                             two_point, uniform_grid, wasserstein1)

from conftest import measures


def test_make_measure_sorts_merges_and_normalizes():
    m = make_measure([2.0, 1.0, 2.0 + 1e-15], [1, 1, 2])
    assert m.atoms.tolist() == [1.0, 2.0]
    assert m.weights.tolist() == pytest.approx([0.25, 0.75])
    assert m.cumulative()[-1] == 1.0


def test_arrays_are_read_only():
    m = bernoulli()
    with pytest.raises(ValueError):
        m.atoms[0] = 5.0


@pytest.mark.parametrize("atoms, weights", [
    ([], []),
    ([1.0, 2.0], [1.0]),
    ([1.0, 2.0], [1.0, -0.5]),
    ([1.0, 2.0], [0.0, 0.0]),
    ([np.nan], [1.0]),
    ([np.inf], [1.0]),
])
def test_invalid_measures_rejected(atoms, weights):
    with pytest.raises(DomainError):
        make_measure(atoms, weights)


def test_presets():
    assert bernoulli().atoms.tolist() == [-1.0, 1.0]
    assert point_mass(3.0).is_point_mass
    tp = two_point(0.0, 2.0, 0.25)
    assert tp.mean == pytest.approx(1.5)
    g = uniform_grid(5, 0.0, 1.0)
    assert g.size == 5 and g.mean == pytest.approx(0.5)


def test_quantile_is_left_continuous():
    b = bernoulli()
    assert quantile(b, 0.5) == -1.0
    assert quantile(b, 0.5 + 1e-12) == 1.0
    assert quantile(b, 1.0) == 1.0
    assert quantile_grid(b, 4).tolist() == [-1.0, -1.0, 1.0, 1.0]


def test_quantile_rejects_outside_unit_interval():
    with pytest.raises(DomainError):
        quantile(bernoulli(), 0.0)


@given(measures(), measures())
def test_wasserstein_matches_scipy(m, n):
    ref = wasserstein_distance(m.atoms, n.atoms, m.weights, n.weights)
    assert wasserstein1(m, n) == pytest.approx(ref, abs=1e-12)


@given(measures())
def test_json_roundtrip_is_exact(m):
    back = measure_from_json(measure_to_json(m))
    assert back == m
    assert json.loads(measure_to_json(m))["atoms"] == m.atoms.tolist()


@given(measures(max_atoms=5), measures(max_atoms=5))
def test_classical_convolution_means(m, n):
    assert classical_convolve(m, n, "add").mean == pytest.approx(m.mean + n.mean, abs=1e-12)
    assert classical_convolve(m, n, "mul").mean == pytest.approx(m.mean * n.mean, abs=1e-12)


def test_pushforwards():
    b = bernoulli()
    assert scale_pushforward(b, 2.0).atoms.tolist() == [-2.0, 2.0]
    assert shift(b, 1.0).atoms.tolist() == [0.0, 2.0]


def test_log_potential_requires_z_right_of_support():
    assert log_potential(bernoulli(), 3.0) == pytest.approx(0.5 * math.log(8))
    with pytest.raises(DomainError):
        log_potential(bernoulli(), 1.0)


def test_signed_log_potential_on_classical_sum():
    # atoms -2, 0, 2 with weights 1/4, 1/2, 1/4 evaluated at 1
    val = signed_log_potential(classical_convolve(bernoulli(), bernoulli()), 1.0)
    assert val == pytest.approx(0.25 * math.log(3), abs=1e-15)
