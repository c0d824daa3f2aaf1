"""Coefficient formulas for the finite free operations.

Write ``p(z) = sum_i (-1)^i a_i z^{N-i}`` with ``a_i = e_i(roots)``. Then

* additive: ``c_k = sum_{i+j=k} (N-i)! (N-j)! / (N! (N-k)!) a_i b_j``
* multiplicative: ``c_k = a_k b_k / binom(N, k)``
* compression to degree ``k``: ``k!/N! * p^{(N-k)}``

All arithmetic is exact over the rationals.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb, factorial

import numpy as np

from ..errors import DomainError
from ..measures import DiscreteMeasure, quantile_grid
from .poly import MonicPoly


def _same_degree(p: MonicPoly, q: MonicPoly) -> int:
    if p.degree != q.degree:
        raise DomainError(f"degree mismatch: {p.degree} vs {q.degree}")
    return p.degree


def finite_free_additive(p: MonicPoly, q: MonicPoly) -> MonicPoly:
    """Expected characteristic polynomial of ``A + U B U*``."""
    N = _same_degree(p, q)
    a = [p.elementary(i) for i in range(N + 1)]
    b = [q.elementary(i) for i in range(N + 1)]
    fN = factorial(N)
    out = []
    for k in range(N + 1):
        acc = Fraction(0)
        for i in range(k + 1):
            j = k - i
            acc += Fraction(factorial(N - i) * factorial(N - j), fN * factorial(N - k)) * a[i] * b[j]
        out.append(acc)
    return MonicPoly.from_elementary(out)


def finite_free_multiplicative(p: MonicPoly, q: MonicPoly) -> MonicPoly:
    """Expected characteristic polynomial of ``A U B U*``."""
    N = _same_degree(p, q)
    out = [p.elementary(k) * q.elementary(k) / comb(N, k) for k in range(N + 1)]
    return MonicPoly.from_elementary(out)


def finite_free_compress(p: MonicPoly, k: int) -> MonicPoly:
    """Expected characteristic polynomial of a ``k x k`` corner of ``U A U*``."""
    N = p.degree
    if not 1 <= k <= N:
        raise DomainError(f"compression size must lie in [1, {N}], got {k}")
    coeffs = p.full()
    for _ in range(N - k):
        coeffs = [j * coeffs[j] for j in range(1, len(coeffs))]
    lead = coeffs[-1]
    return MonicPoly(tuple(c / lead for c in coeffs[:-1]))


def subset_average_poly(roots, k: int) -> MonicPoly:
    """Average of ``prod_{i in S} (z - r_i)`` over all ``k``-subsets ``S``.

    Brute-force reference for :func:`finite_free_compress`.
    """
    subsets = list(itertools.combinations(range(len(roots)), k))
    acc = [Fraction(0)] * k
    for S in subsets:
        sub = MonicPoly.from_roots([roots[i] for i in S])
        acc = [x + y for x, y in zip(acc, sub.coeffs)]
    n = len(subsets)
    return MonicPoly(tuple(c / n for c in acc))


def quantile_poly(m: DiscreteMeasure, N: int) -> MonicPoly:
    """``prod_i (z - T_m(i/N))``, the degree-``N`` discretization of ``m``."""
    return MonicPoly.from_roots(quantile_grid(m, N))


def finite_free_of_measures(mu, nu, kind, N, tau=None) -> MonicPoly:
    """Apply the finite free operation to degree-``N`` quantile discretizations.

    For compression the output degree is ``floor(tau N)``.
    """
    from ..subordination import canonical_kind

    kind = canonical_kind(kind)
    p = quantile_poly(mu, N)
    if kind == "additive":
        return finite_free_additive(p, quantile_poly(nu, N))
    if kind == "multiplicative":
        return finite_free_multiplicative(p, quantile_poly(nu, N))
    k = int(np.floor(tau * N))
    return finite_free_compress(p, max(k, 1))
