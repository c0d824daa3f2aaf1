import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freeot import subordination as sub
from freeot.ctransforms import cauchy_G
from freeot.errors import DomainError
from freeot.measures import bernoulli, make_measure, point_mass, scale_pushforward, shift

from conftest import measures, positive_measures


@pytest.mark.parametrize("z", [2.1, 2.5, 3.0, 5.0, 40.0])
def test_bernoulli_sum_is_arcsine(z):
    s = sub.solve_additive(bernoulli(), bernoulli(), z)
    r = math.sqrt(z * z - 4)
    assert sub.free_cauchy(s) == pytest.approx(1 / r, rel=1e-12)
    assert sub.free_log_potential(s, bernoulli(), bernoulli()) == pytest.approx(
        math.log((z + r) / 2), rel=1e-12)
    assert s.residual <= sub.INVARIANT_TOL


def test_compression_of_bernoulli_at_half():
    s = sub.solve_compression(bernoulli(), 0.5, math.sqrt(2))
    assert sub.free_cauchy(s) == pytest.approx(1.0, rel=1e-12)
    for z in (1.2, 2.0, 4.0):
        g = sub.free_cauchy(sub.solve_compression(bernoulli(), 0.5, z))
        assert g == pytest.approx(1 / math.sqrt(z * z - 1), rel=1e-12)


@given(measures(), st.floats(-2.0, 2.0), st.floats(0.1, 10.0))
def test_adding_point_mass_shifts(m, c, d):
    z = m.upper + c + d
    s = sub.solve_additive(m, point_mass(c), z)
    assert sub.free_cauchy(s) == pytest.approx(cauchy_G(m, z - c), rel=1e-12)


@given(positive_measures(), st.floats(0.1, 10.0))
def test_multiplying_by_unit_mass_is_identity(m, d):
    z = m.upper + d
    s = sub.solve_multiplicative(m, point_mass(1.0), z)
    assert sub.free_cauchy(s) == pytest.approx(cauchy_G(m, z), rel=1e-10)


def test_multiplying_by_point_mass_dilates():
    m = make_measure([0.5, 1.0, 2.0], [0.2, 0.5, 0.3])
    z = 9.0
    s = sub.solve_multiplicative(m, point_mass(3.0), z)
    ref = cauchy_G(scale_pushforward(m, 3.0), z)
    assert sub.free_cauchy(s) == pytest.approx(ref, rel=1e-10)


@given(measures(max_atoms=6), measures(max_atoms=6), st.floats(0.2, 5.0))
def test_additive_is_symmetric(m, n, d):
    z = m.upper + n.upper + d
    a = sub.free_cauchy(sub.solve_additive(m, n, z))
    b = sub.free_cauchy(sub.solve_additive(n, m, z))
    assert a == pytest.approx(b, rel=1e-10)


@given(measures(max_atoms=6), measures(max_atoms=6), st.floats(0.2, 5.0))
def test_two_fold_many_matches_pairwise(m, n, d):
    z = m.upper + n.upper + d
    one = sub.solve_additive(m, n, z)
    many = sub.solve_additive_many([m, n], z)
    assert many.omega == pytest.approx(one.omega, rel=1e-10)
    assert sub.free_log_potential_many(many, [m, n]) == pytest.approx(
        sub.free_log_potential(one, m, n), rel=1e-10, abs=1e-12)


@given(measures(max_atoms=6), measures(max_atoms=6))
def test_mean_read_from_cauchy_expansion(m, n):
    est = sub.free_mean_from_cauchy("add", m, n)
    assert est == pytest.approx(m.mean + n.mean, abs=1e-6)


@given(positive_measures(max_atoms=5), positive_measures(max_atoms=5))
def test_multiplicative_mean(m, n):
    assert sub.free_mean_from_cauchy("mul", m, n) == pytest.approx(m.mean * n.mean, abs=1e-6)


@given(measures(max_atoms=6), st.floats(0.1, 0.9))
def test_compression_mean(m, tau):
    assert sub.free_mean_from_cauchy("comp", m, None, tau) == pytest.approx(m.mean, abs=1e-6)


@given(measures(max_atoms=5), measures(max_atoms=5), st.sampled_from(["add", "comp"]),
       st.floats(0.2, 0.8))
def test_log_potential_derivative_is_cauchy(m, n, kind, tau):
    bound = sub.output_bound(kind, m, n)
    grid = bound + np.array([0.5, 1.0, 3.0])
    assert sub.logpot_derivative_mismatch(m, n, kind, grid, tau) < 1e-6


@given(positive_measures(max_atoms=5), positive_measures(max_atoms=5))
def test_multiplicative_log_potential_derivative(m, n):
    grid = m.upper * n.upper + np.array([0.5, 2.0])
    assert sub.logpot_derivative_mismatch(m, n, "mul", grid) < 1e-6


@given(measures(max_atoms=6), measures(max_atoms=6))
def test_cauchy_positive_and_decreasing(m, n):
    zs = m.upper + n.upper + np.array([0.1, 0.5, 1.0, 4.0])
    gs = [sub.free_cauchy(sub.solve_additive(m, n, z)) for z in zs]
    assert all(g > 0 for g in gs)
    assert all(a > b for a, b in zip(gs, gs[1:]))


def test_domain_errors():
    b = bernoulli()
    with pytest.raises(DomainError, match="z >"):
        sub.solve_additive(b, b, 2.0)
    with pytest.raises(DomainError):
        sub.solve_multiplicative(b, point_mass(1.0), 5.0)
    with pytest.raises(DomainError):
        sub.solve_compression(b, 1.0, 3.0)
    with pytest.raises(DomainError):
        sub.solve_compression(b, 0.5, 1.0)
    with pytest.raises(DomainError):
        sub.solve("bogus", b, b, 3.0)


def test_solution_serializes():
    d = sub.solve("add", bernoulli(), bernoulli(), 3.0).to_dict()
    assert d["kind"] == "additive" and d["tau"] is None


def test_free_r_transform_of_arcsine():
    # arcsine = bern [+] bern, whose R is twice the Bernoulli one
    s = 0.3
    ref = 2 * (math.sqrt(1 + 4 * s * s) - 1) / (2 * s)
    assert sub.free_r_transform("add", bernoulli(), bernoulli(), s) == pytest.approx(ref, rel=1e-9)
