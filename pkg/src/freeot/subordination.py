"""Subordination solver for free additive/multiplicative convolution and compression.

At a real point ``z`` right of the relevant support bound each operation is
described by a small implicit system in the subordination points. Every
system collapses to one scalar monotone equation through transform
inverses:

* additive: ``g = 1/omega`` with ``Ginv_mu(g) + Ginv_nu(g) - 1/g = z``
* multiplicative: ``u = 1/omega`` with ``u Jinv_mu(u) Jinv_nu(u) = z (1 + u)``
* compression: ``omega`` itself, ``(omega - z) G_mu(omega) = 1 - tau``

Each returned solution is re-checked against the full residual system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._roots import bracketed_root, newton_polish
from .ctransforms import cauchy_G, cauchy_G_prime, cauchy_inverse, j_inverse, j_transform
from .errors import DomainError, InvariantError
from .measures import DiscreteMeasure, log_potential

INVARIANT_TOL = 1e-10

_KIND_ALIASES = {
    "add": "additive", "additive": "additive", "+": "additive",
    "mul": "multiplicative", "mult": "multiplicative", "multiplicative": "multiplicative",
    "comp": "compression", "compress": "compression", "compression": "compression",
}


def canonical_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise DomainError(f"unknown operation kind {kind!r}") from None


@dataclass(frozen=True)
class SubordinationSolution:
    """Subordination points at a single ``z``.

    ``omega_mu``/``omega_nu`` are None for compression, ``tau`` is None
    otherwise. ``residual`` is the largest invariant violation measured.
    """

    kind: str
    z: float
    omega: float
    omega_mu: Optional[float] = None
    omega_nu: Optional[float] = None
    tau: Optional[float] = None
    residual: float = 0.0

    def to_dict(self):
        return {"kind": self.kind, "z": self.z, "omega": self.omega,
                "omega_mu": self.omega_mu, "omega_nu": self.omega_nu,
                "tau": self.tau, "residual": self.residual}


@dataclass(frozen=True)
class MultiSubordinationSolution:
    """Additive subordination for a ``d``-fold free sum."""

    z: float
    omega: float
    omegas: tuple
    residual: float = 0.0


def additive_bound(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return mu.upper + nu.upper


def multiplicative_bound(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return mu.upper * nu.upper


def _require_positive(m: DiscreteMeasure, name):
    if m.lower < 0:
        raise DomainError(f"{name} must be supported in [0, inf) for the multiplicative case")
    if not m.mean > 0:
        raise DomainError(f"{name} must have a nonzero mean for the multiplicative case")


# ----------------------------------------------------------------------------
# additive

def solve_additive(mu: DiscreteMeasure, nu: DiscreteMeasure, z: float) -> SubordinationSolution:
    """Subordination triple ``(omega, omega_mu, omega_nu)`` for ``mu [+] nu``.

    Raises
    ------
    DomainError
        If ``z <= E_mu^+ + E_nu^+``.
    BracketError
        If no sign change is found (never expected; reported, not hidden).
    """
    bound = additive_bound(mu, nu)
    if not z > bound:
        raise DomainError(f"additive case needs z > E_mu^+ + E_nu^+ = {bound!r}, got {z!r}")
    if mu.is_point_mass or nu.is_point_mass:
        if nu.is_point_mass:
            mu, nu, swapped = nu, mu, True
        else:
            swapped = False
        c = mu.upper
        om_nu = z - c
        g = cauchy_G(nu, om_nu)
        omega = 1.0 / g
        om_mu = c + omega
        if swapped:
            om_mu, om_nu = om_nu, om_mu
            mu, nu = nu, mu
    else:
        g = _solve_additive_level([mu, nu], z)
        omega = 1.0 / g
        om_mu = cauchy_inverse(mu, g)
        om_nu = cauchy_inverse(nu, g)
    res = _additive_residual([mu, nu], [om_mu, om_nu], omega, z)
    _assert_ok(res, "additive", z=z, omega=omega)
    return SubordinationSolution("additive", float(z), float(omega), float(om_mu), float(om_nu),
                                 None, res)


def _solve_additive_level(measures, z):
    d = len(measures)
    tops = sum(m.upper for m in measures)
    means = sum(m.mean for m in measures)

    def f(g):
        return sum(cauchy_inverse(m, g) for m in measures) - (d - 1) / g - z

    def fprime(g):
        acc = (d - 1) / g ** 2
        for m in measures:
            acc += 1.0 / cauchy_G_prime(m, cauchy_inverse(m, g))
        return acc

    # Jensen gives Ginv(g) >= mean + 1/g, the top atom gives Ginv(g) <= E + 1/g
    lo = 0.5 / (z - means)
    hi = 2.0 / (z - tops)
    g = bracketed_root(f, lo, hi, floor=0.0, what="additive subordination")
    return newton_polish(f, fprime, g, lower=0.0)


def _additive_residual(measures, omegas, omega, z):
    d = len(measures)
    res = abs(sum(omegas) - (d - 1) * omega - z) / max(1.0, abs(z))
    for m, om in zip(measures, omegas):
        if not om > m.upper:
            return math.inf
        res = max(res, abs(cauchy_G(m, om) - 1.0 / omega))
    if not omega > 0:
        return math.inf
    return float(res)


def _assert_ok(res, kind, **info):
    if not res < INVARIANT_TOL:
        raise InvariantError(f"{kind} subordination residual {res!r} exceeds {INVARIANT_TOL}: {info}")


def solve_additive_many(measures: Sequence[DiscreteMeasure], z: float) -> MultiSubordinationSolution:
    """Subordination for ``mu_1 [+] ... [+] mu_d``.

    Solves ``G_j(omega_j) = 1/omega`` for every ``j`` together with
    ``sum_j omega_j = z + (d - 1) omega``.
    """
    measures = list(measures)
    if len(measures) < 2:
        raise DomainError("need at least two measures")
    bound = sum(m.upper for m in measures)
    if not z > bound:
        raise DomainError(f"additive case needs z > {bound!r}, got {z!r}")
    g = _solve_additive_level(measures, z)
    omega = 1.0 / g
    omegas = tuple(float(cauchy_inverse(m, g)) for m in measures)
    res = _additive_residual(measures, omegas, omega, z)
    _assert_ok(res, "additive d-fold", z=z)
    return MultiSubordinationSolution(float(z), float(omega), omegas, res)


def free_log_potential_many(sol: MultiSubordinationSolution, measures) -> float:
    """``E log(z - S)`` for the free sum ``S`` of all ``measures``."""
    d = len(measures)
    acc = -(d - 1) * math.log(sol.omega)
    for m, om in zip(measures, sol.omegas):
        acc += log_potential(m, om)
    return acc


# ----------------------------------------------------------------------------
# multiplicative

def solve_multiplicative(mu: DiscreteMeasure, nu: DiscreteMeasure, z: float) -> SubordinationSolution:
    """Subordination triple for ``mu [x] nu``; both inputs on ``[0, inf)``."""
    _require_positive(mu, "mu")
    _require_positive(nu, "nu")
    bound = multiplicative_bound(mu, nu)
    if not z > bound:
        raise DomainError(f"multiplicative case needs z > E_mu^+ E_nu^+ = {bound!r}, got {z!r}")
    mm = mu.mean * nu.mean

    def f(u):
        return u * j_inverse(mu, u) * j_inverse(nu, u) - z * (1.0 + u)

    # Jensen and the top-atom bound pin u between these two values
    lo = 0.5 * mm / (z - mm)
    hi = 2.0 * bound / (z - bound)
    u = bracketed_root(f, lo, hi, floor=0.0, what="multiplicative subordination")

    def fprime(u):
        a, b = j_inverse(mu, u), j_inverse(nu, u)
        da = 1.0 / _j_prime(mu, a)
        db = 1.0 / _j_prime(nu, b)
        return a * b + u * (da * b + a * db) - z

    u = newton_polish(f, fprime, u, lower=0.0)
    omega = 1.0 / u
    om_mu = j_inverse(mu, u)
    om_nu = j_inverse(nu, u)
    res = _multiplicative_residual(mu, nu, om_mu, om_nu, omega, z)
    _assert_ok(res, "multiplicative", z=z, omega=omega)
    return SubordinationSolution("multiplicative", float(z), float(omega), float(om_mu),
                                 float(om_nu), None, res)


def _j_prime(m, s):
    return -float(np.sum(m.weights * m.atoms / (s - m.atoms) ** 2))


def _multiplicative_residual(mu, nu, om_mu, om_nu, omega, z):
    if not (om_mu > mu.upper and om_nu > nu.upper and omega > 0):
        return math.inf
    target = 1.0 + 1.0 / omega
    # product equation measured relative to its own size
    res = abs(om_mu * om_nu - z * (omega + 1.0)) / (abs(z) * max(1.0, omega + 1.0))
    res = max(res, abs(om_mu * cauchy_G(mu, om_mu) - target),
              abs(om_nu * cauchy_G(nu, om_nu) - target))
    return float(res)


# ----------------------------------------------------------------------------
# compression

def solve_compression(mu: DiscreteMeasure, tau: float, z: float) -> SubordinationSolution:
    """Subordination point ``omega`` for the compression ``[mu]_tau``.

    The residual ``(omega - z) G(omega) / (1 - tau) - 1`` runs from -1 at
    ``omega = z`` to ``tau/(1 - tau)`` at infinity; the mean and the top
    atom give the bracket
    ``[(z - (1-tau) E_plus)/tau, (z - (1-tau) mean)/tau]``.
    """
    if not 0 < tau < 1:
        raise DomainError(f"tau must lie in (0, 1), got {tau!r}")
    if not z > mu.upper:
        raise DomainError(f"compression needs z > E_mu^+ = {mu.upper!r}, got {z!r}")
    lo = (z - (1 - tau) * mu.upper) / tau
    hi = (z - (1 - tau) * mu.mean) / tau
    if mu.is_point_mass or hi <= lo:
        omega = lo
    else:
        def f(om):
            return (om - z) * cauchy_G(mu, om) / (1 - tau) - 1.0

        def fprime(om):
            return (cauchy_G(mu, om) + (om - z) * cauchy_G_prime(mu, om)) / (1 - tau)

        omega = bracketed_root(f, lo, hi, floor=z, what="compression subordination")
        omega = newton_polish(f, fprime, omega, lower=z)
    res = abs((omega - z) / (1 - tau) * cauchy_G(mu, omega) - 1.0)
    if not omega > max(z, mu.upper):
        res = math.inf
    _assert_ok(res, "compression", z=z, tau=tau)
    return SubordinationSolution("compression", float(z), float(omega), None, None, float(tau),
                                 float(res))


# ----------------------------------------------------------------------------
# outputs

def solve(kind: str, mu: DiscreteMeasure, nu: Optional[DiscreteMeasure], z: float,
          tau: Optional[float] = None) -> SubordinationSolution:
    """Dispatch on ``kind`` (``add``, ``mul`` or ``comp``)."""
    kind = canonical_kind(kind)
    if kind == "additive":
        return solve_additive(mu, nu, z)
    if kind == "multiplicative":
        return solve_multiplicative(mu, nu, z)
    if tau is None:
        raise DomainError("compression needs tau")
    return solve_compression(mu, tau, z)


def free_log_potential(sol: SubordinationSolution, mu: DiscreteMeasure,
                       nu: Optional[DiscreteMeasure] = None) -> float:
    """``E log(z - X)`` under the free output law.

    Additive and multiplicative: ``-log omega + E_mu log(omega_mu - X) +
    E_nu log(omega_nu - Y)``. Compression uses the one-point analogue and
    returns the log-potential of ``[mu]_tau`` itself (not scaled by tau).
    """
    if sol.kind in ("additive", "multiplicative"):
        if nu is None:
            raise DomainError("second measure required")
        return (-math.log(sol.omega) + log_potential(mu, sol.omega_mu)
                + log_potential(nu, sol.omega_nu))
    tau, om, z = sol.tau, sol.omega, sol.z
    return (log_potential(mu, om) / tau + math.log(tau)
            - (1 - tau) / tau * math.log((om - z) / (1 - tau)))


def free_cauchy(sol: SubordinationSolution) -> float:
    """Cauchy transform of the free output law at ``sol.z``."""
    if sol.kind == "additive":
        return 1.0 / sol.omega
    if sol.kind == "multiplicative":
        return (sol.omega + 1.0) / (sol.z * sol.omega)
    return (1 - sol.tau) / (sol.tau * (sol.omega - sol.z))


def output_bound(kind, mu, nu=None):
    """Right edge guaranteed to dominate the support of the free output."""
    kind = canonical_kind(kind)
    if kind == "additive":
        return additive_bound(mu, nu)
    if kind == "multiplicative":
        return multiplicative_bound(mu, nu)
    return mu.upper


def output_mean(kind, mu, nu=None):
    kind = canonical_kind(kind)
    if kind == "additive":
        return mu.mean + nu.mean
    if kind == "multiplicative":
        return mu.mean * nu.mean
    return mu.mean


def free_convolve_grid(mu, nu, kind, z_grid, tau=None):
    """Tabulate ``(z, G, log-potential)`` of the free output over ``z_grid``."""
    rows = []
    for z in z_grid:
        sol = solve(kind, mu, nu, float(z), tau)
        rows.append((float(z), free_cauchy(sol), free_log_potential(sol, mu, nu)))
    return rows


def logpot_derivative_mismatch(mu, nu, kind, z_grid, tau=None, step=1e-4):
    """Largest ``|d/dz logpot - G|`` over the grid, by centered differences.

    The difference quotient uses its own small ``step`` around each grid
    point so that truncation error is far below the comparison tolerance.
    """
    worst = 0.0
    for z in z_grid:
        h = step * max(1.0, abs(z))
        up = free_log_potential(solve(kind, mu, nu, z + h, tau), mu, nu)
        dn = free_log_potential(solve(kind, mu, nu, z - h, tau), mu, nu)
        g = free_cauchy(solve(kind, mu, nu, z, tau))
        worst = max(worst, abs((up - dn) / (2 * h) - g))
    return worst


# ----------------------------------------------------------------------------
# transforms of the free outputs, obtained by inverting z -> G(z) numerically

def _invert_output(fn, target, bound, lo_guess, hi, what):
    """Solve ``fn(z) = target`` for decreasing ``fn`` on ``(bound, inf)``."""
    scale = max(1.0, abs(bound))
    lo = lo_guess if lo_guess > bound else bound + 1e-9 * scale
    if fn(lo) < target:
        raise DomainError(f"{what}: value {target!r} is not attained right of {bound!r}")
    if lo >= hi:
        return lo
    return bracketed_root(lambda z: fn(z) - target, lo, hi, floor=bound, what=what)


def free_cauchy_inverse(kind, mu, nu, g, tau=None):
    """``z`` right of the output support with ``G_out(z) = g``."""
    bound = output_bound(kind, mu, nu)
    mean = output_mean(kind, mu, nu)
    fn = lambda z: free_cauchy(solve(kind, mu, nu, z, tau))
    # G_out(z) >= 1/(z - mean) and G_out(z) <= 1/(z - bound)
    return _invert_output(fn, g, bound, mean + 1.0 / g, bound + 1.0 / g, "Cauchy inverse")


def free_r_transform(kind, mu, nu, s, tau=None):
    """R-transform of the free output, computed from its Cauchy transform."""
    return free_cauchy_inverse(kind, mu, nu, s, tau) - 1.0 / s


def free_s_transform(mu, nu, w):
    """S-transform of ``mu [x] nu`` obtained by inverting ``J_out(z) = w``."""
    bound = multiplicative_bound(mu, nu)
    mean = mu.mean * nu.mean
    fn = lambda z: z * free_cauchy(solve_multiplicative(mu, nu, z)) - 1.0
    z_star = _invert_output(fn, w, bound, mean * (1 + w) / w, bound * (1 + w) / w, "J inverse")
    return (1.0 + w) / w / z_star


def free_mean_from_cauchy(kind, mu, nu=None, tau=None, scale=1e3):
    """Mean of the output law read off the expansion ``z^2 (G - 1/z)``.

    ``z (z G - 1) = mean + m2/z + m3/z^2 + ...``; the value at three points
    ``z0, 2 z0, 4 z0`` is fitted with that truncated series and the
    constant term returned.
    """
    bound = output_bound(kind, mu, nu)
    base = scale * max(1.0, abs(bound), abs(output_mean(kind, mu, nu)))
    zs = bound + base * np.array([1.0, 2.0, 4.0])

    def moment_est(z):
        g = free_cauchy(solve(kind, mu, nu, z, tau))
        return z * (z * g - 1.0)

    vals = np.array([moment_est(z) for z in zs])
    design = np.stack([np.ones(3), base / zs, (base / zs) ** 2], axis=1)
    return float(np.linalg.solve(design, vals)[0])
