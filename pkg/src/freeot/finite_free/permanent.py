"""Matrix permanents and the permutation side of the quadrature identities.

For diagonal ``A``, ``B`` and a uniform random permutation matrix ``P``,
``E det(z - (A + P B P^T)) = perm(M) / N!`` with ``M_ij = z - (a_i + b_j)``
(and likewise with products). The permanent is computed by Ryser's formula.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial

import numpy as np

from ..errors import DomainError
from .poly import MonicPoly

MAX_RYSER = 22
MAX_ENUM = 9


def permanent(M) -> float | complex | Fraction:
    """Permanent by Ryser's inclusion-exclusion formula.

    The column subsets are split in two halves. Subsets of the low half are
    handled as one array; the high half is walked in Gray-code order so each
    step adds or removes a single column from the running row sums. Object
    arrays of :class:`~fractions.Fraction` give an exact result.
    """
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("permanent needs a square matrix")
    n = A.shape[0]
    if n == 0:
        return 1
    if n > MAX_RYSER:
        raise DomainError(f"Ryser permanent limited to n <= {MAX_RYSER}")
    exact = A.dtype == object
    k = n // 2
    # all subsets of the low columns at once
    bits = ((np.arange(2 ** k)[:, None] >> np.arange(k)) & 1)
    if exact:
        bits = bits.astype(object)
    low_sums = bits @ A[:, :k].T if k else np.zeros((1, n), dtype=A.dtype)
    low_sign = 1 - 2 * (bits.sum(axis=1) % 2) if k else np.ones(1, dtype=int)

    zero = Fraction(0) if exact else A.dtype.type(0)
    h = np.array([zero] * n, dtype=A.dtype)
    in_set = np.zeros(n - k, dtype=bool)
    parity = 1

    def block():
        return np.sum(low_sign * np.prod(low_sums + h, axis=1))

    total = block()
    for g in range(1, 2 ** (n - k)):
        bit = (g & -g).bit_length() - 1
        col = k + bit
        if in_set[bit]:
            h = h - A[:, col]
        else:
            h = h + A[:, col]
        in_set[bit] = not in_set[bit]
        parity = -parity
        total = total + parity * block()
    return (-1) ** n * total


def permanent_enumerate(M):
    """Permanent as the plain sum over all permutations (small ``n`` only)."""
    A = np.asarray(M)
    n = A.shape[0]
    if n > MAX_ENUM:
        raise DomainError(f"enumeration limited to n <= {MAX_ENUM}")
    total = 0
    for sigma in itertools.permutations(range(n)):
        term = 1
        for i, j in enumerate(sigma):
            term = term * A[i, j]
        total = total + term
    return total


def _combine(a, b, op):
    if op == "add":
        return np.add.outer(a, b)
    if op == "mul":
        return np.multiply.outer(a, b)
    raise DomainError(f"op must be 'add' or 'mul', got {op!r}")


def charpoly_matrix(a, b, z, op="add", exact=False):
    """``M_ij = z - (a_i op b_j)``, as Fractions when ``exact``."""
    if exact:
        af = np.array([Fraction(x) for x in a], dtype=object)
        bf = np.array([Fraction(x) for x in b], dtype=object)
        return Fraction(z) - _combine(af, bf, op)
    return z - _combine(np.asarray(a, float), np.asarray(b, float), op)


def perm_expected_charpoly_at(a, b, z, op: str = "add", exact: bool = False):
    """Permutation average of ``prod_i (z - a_i op b_sigma(i))``.

    Parameters
    ----------
    a, b : sequence of float
        Diagonals of equal length ``N <= 22``.
    z : float
    op : {'add', 'mul'}
    exact : bool
        Return a Fraction computed without rounding.
    """
    if len(a) != len(b):
        raise DomainError("diagonals must have equal length")
    N = len(a)
    if N > MAX_RYSER:
        raise DomainError(f"N={N} exceeds the Ryser limit {MAX_RYSER}")
    M = charpoly_matrix(a, b, z, op, exact)
    val = permanent(M)
    if exact:
        return Fraction(val) / factorial(N)
    return float(np.real(val)) / factorial(N)


def permanent_interpolation(a, b, op: str = "add") -> MonicPoly:
    """Expected characteristic polynomial recovered from ``N + 1`` exact
    permanent values at the nodes ``z = 0, 1, ..., N``."""
    N = len(a)
    xs = [Fraction(i) for i in range(N + 1)]
    ys = [perm_expected_charpoly_at(a, b, x, op, exact=True) for x in xs]
    coeffs = [Fraction(0)] * (N + 1)
    for k, (xk, yk) in enumerate(zip(xs, ys)):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(xs):
            if j == k:
                continue
            nxt = [Fraction(0)] * (len(basis) + 1)
            for t, c in enumerate(basis):
                nxt[t + 1] += c
                nxt[t] -= xj * c
            basis = nxt
            denom *= xk - xj
        scale = yk / denom
        for t, c in enumerate(basis):
            coeffs[t] += scale * c
    if coeffs[-1] != 1:
        raise DomainError("interpolated polynomial is not monic")
    return MonicPoly(tuple(coeffs[:-1]))
