"""Finite-N approximations of free operations and their convergence tables."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

from ..measures import DiscreteMeasure, make_measure, wasserstein1
from ..subordination import canonical_kind, free_log_potential, solve
from .convolution import finite_free_of_measures
from .poly import real_roots


def arcsine_reference(n: int = 64) -> DiscreteMeasure:
    """``n``-point discretization of the arcsine law on [-2, 2].

    Atoms are the quantiles ``2 sin(pi (i/n - 1/2))``, ``i = 1..n``; the
    CDF ``1/2 + arcsin(x/2)/pi`` inverts to this formula.
    """
    t = np.arange(1, n + 1) / n
    return make_measure(2.0 * np.sin(np.pi * (t - 0.5)))


def asymptotic_logdet_check(mu, nu, kind, z, N_list, tau=None):
    """Compare the finite-N log-potential with its free limit.

    For each ``N`` the operation is applied to degree-``N`` quantile
    polynomials and ``(1/deg) sum log(z - root)`` is returned next to the
    subordination value.

    Returns
    -------
    list of dict
        Keys ``N``, ``value``, ``limit``, ``error``, ``degree``.
    """
    kind = canonical_kind(kind)
    limit = free_log_potential(solve(kind, mu, nu, z, tau), mu, nu)
    rows = []
    for N in N_list:
        poly = finite_free_of_measures(mu, nu, kind, N, tau)
        roots = real_roots(poly)
        val = math.fsum(np.log(z - roots)) / len(roots)
        rows.append({"N": int(N), "degree": len(roots), "value": val, "limit": limit,
                     "error": abs(val - limit)})
    return rows


def weak_convergence_table(mu, nu, kind, N_list, reference: DiscreteMeasure, tau=None):
    """W1 distance from the finite-N root measure to ``reference``."""
    rows = []
    for N in N_list:
        roots = real_roots(finite_free_of_measures(mu, nu, kind, N, tau))
        rows.append({"N": int(N), "w1": wasserstein1(make_measure(roots), reference)})
    return rows


def rows_to_csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
