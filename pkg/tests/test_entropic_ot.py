import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freeot import entropic_ot as eot
from freeot import subordination as sub
from freeot.errors import ConvergenceError, DomainError
from freeot.measures import bernoulli, make_measure, two_point, uniform_grid

from conftest import measures, positive_measures

B = bernoulli()


@pytest.mark.parametrize("z", [2.5, 3.0, 5.0])
def test_bernoulli_sinkhorn_matches_brute_force_and_closed_form(z):
    cost = eot.CostSpec("add", z)
    sol = eot.solve_ot(cost, B, B)
    q_bf, v_bf = eot.brute_force_2x2(B, B, cost)
    r = math.sqrt(z * z - 4)
    assert sol.pi[0, 0] == pytest.approx(q_bf, abs=1e-10)
    assert eot.ot_value(sol, cost, B, B) == pytest.approx(v_bf, abs=1e-12)
    assert q_bf == pytest.approx(r / (2 * (z + r)), abs=1e-12)
    assert v_bf == pytest.approx(math.log(z + r) - math.log(2), abs=1e-12)


def test_two_point_brute_force_against_sinkhorn_asymmetric():
    mu, nu = two_point(-0.5, 2.0, 0.3), two_point(0.0, 1.0, 0.8)
    for cost in (eot.CostSpec("add", 4.0), eot.CostSpec("mul", 3.0)):
        sol = eot.solve_ot(cost, mu, nu)
        q, v = eot.brute_force_2x2(mu, nu, cost)
        assert sol.pi[0, 0] == pytest.approx(q, abs=1e-10)
        assert sol.value == pytest.approx(v, abs=1e-12)


@given(measures(max_atoms=6), measures(max_atoms=6), st.floats(0.05, 5.0))
def test_marginals_and_gauge(m, n, d):
    cost = eot.CostSpec("add", m.upper + n.upper + d)
    sol = eot.solve_ot(cost, m, n)
    assert np.abs(sol.pi.sum(axis=1) - m.weights).max() <= 1e-11
    assert np.abs(sol.pi.sum(axis=0) - n.weights).max() <= 1e-11
    assert np.all(sol.pi >= 0)
    assert np.dot(m.weights, np.log(sol.a_pot)) == pytest.approx(
        np.dot(n.weights, np.log(sol.b_pot)), abs=1e-12)


@given(measures(max_atoms=8), measures(max_atoms=8), st.floats(0.05, 5.0))
def test_residual_history_is_nonincreasing(m, n, d):
    cost = eot.CostSpec("add", m.upper + n.upper + d)
    hist = eot.solve_ot(cost, m, n).residual_history
    assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(hist, hist[1:]))


@given(measures(max_atoms=8), measures(max_atoms=8), st.floats(0.05, 5.0))
def test_additive_value_equals_subordination(m, n, d):
    z = m.upper + n.upper + d
    cost = eot.CostSpec("add", z)
    sol = eot.solve_ot(cost, m, n)
    s = sub.solve_additive(m, n, z)
    assert eot.ot_value(sol, cost, m, n) == pytest.approx(sub.free_log_potential(s, m, n), abs=1e-9)
    assert eot.coupling_cauchy(sol, cost) == pytest.approx(sub.free_cauchy(s), abs=1e-9)


@given(measures(max_atoms=8), measures(max_atoms=8), st.floats(0.05, 5.0))
def test_optimal_coupling_closed_form(m, n, d):
    z = m.upper + n.upper + d
    sol = eot.solve_ot(eot.CostSpec("add", z), m, n)
    s = sub.solve_additive(m, n, z)
    x, y = m.atoms[:, None], n.atoms[None, :]
    density = s.omega * (z - x - y) / ((s.omega_mu - x) * (s.omega_nu - y))
    ref = density * np.outer(m.weights, n.weights)
    assert np.max(np.abs(sol.pi - ref) / ref) < 1e-6


@given(positive_measures(max_atoms=6), positive_measures(max_atoms=6), st.floats(0.05, 5.0))
def test_multiplicative_value_equals_subordination(m, n, d):
    z = m.upper * n.upper + d
    cost = eot.CostSpec("mul", z)
    sol = eot.solve_ot(cost, m, n)
    s = sub.solve_multiplicative(m, n, z)
    assert sol.value == pytest.approx(sub.free_log_potential(s, m, n), abs=1e-9)
    assert eot.coupling_cauchy(sol, cost) == pytest.approx(sub.free_cauchy(s), abs=1e-9)


@given(measures(max_atoms=8), st.floats(0.1, 0.9), st.floats(0.05, 5.0))
def test_compression_value_equals_scaled_subordination(m, tau, d):
    z = m.upper + d
    cost = eot.CostSpec("comp", z, tau)
    sol = eot.solve_ot(cost, m)
    s = sub.solve_compression(m, tau, z)
    assert sol.value == pytest.approx(tau * sub.free_log_potential(s, m), abs=1e-9)
    assert eot.coupling_cauchy(sol, cost) == pytest.approx(tau * sub.free_cauchy(s), abs=1e-9)


@given(measures(max_atoms=8), measures(max_atoms=8), st.floats(0.05, 5.0))
def test_free_value_dominates_independent_coupling(m, n, d):
    cost = eot.CostSpec("add", m.upper + n.upper + d)
    sol = eot.solve_ot(cost, m, n)
    assert sol.value >= eot.product_value(cost, m, n) - 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_monge_bounds_match_permutation_enumeration(n):
    rng = np.random.default_rng(n)
    mu = make_measure(rng.normal(size=n))
    nu = make_measure(rng.normal(size=n))
    z = mu.upper + nu.upper + 0.7
    # extreme couplings of two uniform n-point laws are permutations
    vals = [np.mean(np.log(z - mu.atoms - nu.atoms[list(p)]))
            for p in itertools.permutations(range(n))]
    lo, hi = eot.monge_bounds(mu, nu, z, "add")
    assert lo == pytest.approx(min(vals), abs=1e-14)
    assert hi == pytest.approx(max(vals), abs=1e-14)


@given(measures(max_atoms=6), measures(max_atoms=6), st.floats(0.05, 5.0))
def test_free_value_inside_monge_bounds(m, n, d):
    z = m.upper + n.upper + d
    lo, hi = eot.monge_bounds(m, n, z)
    v = sub.free_log_potential(sub.solve_additive(m, n, z), m, n)
    assert lo - 1e-12 <= v <= hi + 1e-12


def test_log_domain_agrees_with_plain_scaling():
    mu, nu = uniform_grid(7, -1, 1), two_point(0, 2, 0.4)
    K = eot.build_kernel(eot.CostSpec("add", 3.5), mu, nu)
    a = eot.sinkhorn(K, mu, nu)
    b = eot.sinkhorn(K, mu, nu, log_domain=True)
    assert a.value == pytest.approx(b.value, abs=1e-12)
    assert np.abs(a.pi - b.pi).max() < 1e-12


def test_near_bound_uses_log_domain_and_matches_subordination():
    z = 2.0 + 1e-6
    cost = eot.CostSpec("add", z)
    assert eot.near_bound(cost, B, B)
    sol = eot.solve_ot(cost, B, B)
    ref = sub.free_log_potential(sub.solve_additive(B, B, z), B, B)
    assert sol.value == pytest.approx(ref, abs=1e-6)


def test_two_marginal_multimarginal_is_bit_identical():
    mu, nu = uniform_grid(5, -1, 1), two_point(-0.5, 1.0, 0.3)
    K = eot.build_kernel(eot.CostSpec("add", 3.5), mu, nu)
    a = eot.sinkhorn(K, mu, nu)
    b = eot.multimarginal_sinkhorn(K, [mu, nu])
    assert np.array_equal(a.pi, b.pi)
    assert a.value == b.value
    assert a.iterations == b.iterations


def test_three_bernoulli_marginals():
    K = eot.multi_kernel([B, B, B], 4.0)
    sol = eot.multimarginal_sinkhorn(K, [B, B, B])
    ref = sub.free_log_potential_many(sub.solve_additive_many([B, B, B], 4.0), [B, B, B])
    assert sol.value == pytest.approx(ref, abs=1e-12)
    assert eot.multimarginal_value(sol, [B, B, B]) == pytest.approx(sol.value, abs=1e-14)
    assert sol.value == pytest.approx(1.2727927162785946, abs=1e-12)
    for axis in range(3):
        others = tuple(i for i in range(3) if i != axis)
        assert np.allclose(sol.pi.sum(axis=others), 0.5, atol=1e-12)


def test_nonconvergence_raises_with_diagnostics():
    K = eot.build_kernel(eot.CostSpec("add", 2.01), B, B)
    with pytest.raises(ConvergenceError) as exc:
        eot.sinkhorn(K, B, B, max_iter=1)
    assert exc.value.diagnostics


def test_invalid_inputs():
    with pytest.raises(DomainError):
        eot.build_kernel(eot.CostSpec("add", 2.0), B, B)
    with pytest.raises(DomainError):
        eot.sinkhorn(np.array([[1.0, 0.0], [1.0, 1.0]]), B, B)
    with pytest.raises(DomainError):
        eot.CostSpec("comp", 3.0, 1.5)
    with pytest.raises(DomainError):
        eot.multimarginal_sinkhorn(np.ones((2, 2)), [B, B, B])


def test_kl_divergence():
    p = np.array([0.5, 0.5, 0.0])
    q = np.array([0.25, 0.25, 0.5])
    assert eot.kl_divergence(p, q) == pytest.approx(math.log(2))
    assert eot.kl_divergence(q, q) == 0.0


def test_serialization():
    sol = eot.solve_ot(eot.CostSpec("add", 3.0), B, B)
    d = sol.to_dict()
    assert set(d) >= {"rows", "cols", "pi", "value", "a", "b", "iterations", "marginal_residual"}
    lines = sol.to_csv().strip().splitlines()
    assert len(lines) == 5
