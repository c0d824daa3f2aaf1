import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freeot.ctransforms import (TransformDomain, cauchy_G, cauchy_G_prime, cauchy_inverse,
                                chi_transform, j_inverse, j_transform, psi_transform,
                                r_transform, s_transform)
from freeot.errors import DomainError
from freeot.measures import bernoulli, make_measure, point_mass, scale_pushforward

from conftest import measures, positive_measures


def test_cauchy_of_bernoulli():
    z = np.array([1.5, 3.0, 10.0])
    assert cauchy_G(bernoulli(), z) == pytest.approx(z / (z * z - 1), rel=1e-15)


def test_cauchy_rejects_points_inside_support():
    with pytest.raises(DomainError):
        cauchy_G(bernoulli(), 1.0)


@given(measures(), st.floats(0.01, 20.0))
def test_cauchy_derivative_matches_difference_quotient(m, d):
    s = m.upper + d
    h = 1e-6 * d
    fd = (cauchy_G(m, s + h) - cauchy_G(m, s - h)) / (2 * h)
    assert cauchy_G_prime(m, s) == pytest.approx(fd, rel=1e-5)


@given(measures(), st.floats(1e-3, 1e3))
def test_cauchy_inverse_roundtrip(m, g):
    s = cauchy_inverse(m, g)
    assert s > m.upper
    # backward error: near the support edge one ulp in s moves G by |G'| ulp
    slack = 4 * np.spacing(abs(s)) * abs(cauchy_G_prime(m, s))
    assert abs(cauchy_G(m, s) - g) <= 1e-12 * g + slack


def test_r_transform_closed_forms():
    # point mass: R = c; Bernoulli: G = z/(z^2-1) so R(s) = (sqrt(1+4s^2)-1)/(2s)
    assert r_transform(point_mass(2.5), 0.3) == pytest.approx(2.5, rel=1e-14)
    for s in (0.05, 0.4, 2.0):
        ref = (math.sqrt(1 + 4 * s * s) - 1) / (2 * s)
        assert r_transform(bernoulli(), s) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@given(measures(), st.floats(0.01, 5.0))
def test_r_transform_of_shift_and_scale(m, s):
    lam = 2.0
    assert r_transform(scale_pushforward(m, lam), s) == pytest.approx(
        lam * r_transform(m, lam * s), rel=1e-10, abs=1e-10)


@given(positive_measures(), st.floats(0.01, 50.0))
def test_j_inverse_roundtrip(m, u):
    s = j_inverse(m, u)
    assert j_transform(m, s) == pytest.approx(u, rel=1e-12)


@given(positive_measures(), st.floats(0.01, 5.0))
def test_psi_chi_are_inverse(m, w):
    assert psi_transform(m, chi_transform(m, w)) == pytest.approx(w, rel=1e-12)


def test_s_transform_closed_forms():
    assert s_transform(point_mass(4.0), 0.7) == pytest.approx(0.25, rel=1e-14)
    m = make_measure([0.5, 2.0], [0.3, 0.7])
    # S of a dilation by lam is S / lam
    assert s_transform(scale_pushforward(m, 3.0), 0.2) == pytest.approx(
        s_transform(m, 0.2) / 3.0, rel=1e-12)


def test_s_transform_needs_positive_support():
    with pytest.raises(DomainError):
        s_transform(bernoulli(), 0.1)


def test_transform_domain_range():
    dom = TransformDomain(bernoulli(), eps=1e-6)
    lo, hi = dom.attainable_g_range()
    assert lo == 0.0 and hi > 1e5
    with pytest.raises(DomainError):
        dom.G_inverse(2 * hi)
    with pytest.raises(DomainError):
        dom.G(1.0)
    assert dom.R(0.4) == pytest.approx(r_transform(bernoulli(), 0.4))
