"""Entropic optimal transport with log-kernel costs, solved by Sinkhorn scaling.

The objective ``E_Pi[c] - KL(Pi | mu x nu)`` with ``c = log K`` is maximized
by ``Pi_ij = mu_i nu_j a_i b_j K_ij``. Here ``K = z - x (+|*) y`` for the
additive and multiplicative problems. For compression the second marginal
is the two-point law ``(1 - tau) delta_0 + tau delta_1`` and ``K_i0 = 1``,
``K_i1 = z - x_i``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import string
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainError, InvariantError
from .measures import DiscreteMeasure, make_measure, quantile
from .subordination import canonical_kind

LOGGER = logging.getLogger(__name__)

DENSE_CAP = 10 ** 6
LOG_DOMAIN_MARGIN = 1e-3
VALUE_AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class CostSpec:
    """Which log-kernel problem to solve.

    Parameters
    ----------
    kind : {'additive', 'multiplicative', 'compression'}
        Short aliases ``add``/``mul``/``comp`` are accepted.
    z : float
    tau : float, optional
        Required for compression.
    """

    kind: str
    z: float
    tau: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.kind == "compression":
            if self.tau is None or not 0 < self.tau < 1:
                raise DomainError("compression cost needs tau in (0, 1)")

    def bound(self, mu: DiscreteMeasure, nu: Optional[DiscreteMeasure] = None) -> float:
        if self.kind == "additive":
            return mu.upper + nu.upper
        if self.kind == "multiplicative":
            return mu.upper * nu.upper
        return mu.upper

    def validate(self, mu, nu=None):
        if self.kind == "multiplicative" and nu.lower < 0:
            raise DomainError("multiplicative cost needs the second marginal on [0, inf)")
        b = self.bound(mu, nu)
        if not self.z > b:
            raise DomainError(f"{self.kind} cost needs z > {b!r}, got {self.z!r}")


def compression_marginal(tau: float) -> DiscreteMeasure:
    """Two-point law carrying mass ``tau`` at 1 and ``1 - tau`` at 0."""
    return make_measure([0.0, 1.0], [1.0 - tau, tau])


def transport_marginals(cost: CostSpec, mu, nu=None):
    """Marginals actually used by the transport problem for ``cost``."""
    if cost.kind == "compression":
        return mu, compression_marginal(cost.tau)
    return mu, nu


def build_kernel(cost: CostSpec, mu: DiscreteMeasure, nu: Optional[DiscreteMeasure] = None) -> np.ndarray:
    """Positive kernel ``K = exp(cost)`` on the atom grid.

    Raises
    ------
    DomainError
        If the cost is outside its domain or any entry is nonpositive.
    """
    cost.validate(mu, nu)
    x = mu.atoms
    if cost.kind == "additive":
        K = cost.z - np.add.outer(x, nu.atoms)
    elif cost.kind == "multiplicative":
        K = cost.z - np.multiply.outer(x, nu.atoms)
    else:
        K = np.stack([np.ones_like(x), cost.z - x], axis=1)
    if not np.all(K > 0):
        raise DomainError("kernel has nonpositive entries")
    return K


def multi_kernel(measures: Sequence[DiscreteMeasure], z: float, op: str = "add") -> np.ndarray:
    """Dense ``d``-way kernel ``z - (x_1 (+|*) ... (+|*) x_d)``."""
    d = len(measures)
    n_entries = d * int(np.prod([m.size for m in measures]))
    if n_entries > DENSE_CAP:
        raise DomainError(f"dense tensor of {n_entries} entries exceeds the cap {DENSE_CAP}")
    ufunc = np.add if canonical_kind(op) == "additive" else np.multiply
    acc = measures[0].atoms
    for m in measures[1:]:
        acc = ufunc.outer(acc, m.atoms)
    K = z - acc
    if not np.all(K > 0):
        raise DomainError(f"z={z!r} does not clear the joint support")
    return K


@dataclass(frozen=True, eq=False)
class CouplingSolution:
    """Scaled coupling ``pi`` and its potentials.

    ``potentials[j]`` holds the scaling vector for axis ``j``; for the
    two-marginal case ``a_pot``/``b_pot`` are aliases.
    """

    pi: np.ndarray
    potentials: tuple
    value: float
    iterations: int
    marginal_residual: float
    supports: tuple = ()
    residual_history: tuple = field(default=(), repr=False)

    @property
    def a_pot(self):
        return self.potentials[0]

    @property
    def b_pot(self):
        return self.potentials[1]

    @property
    def rows(self):
        return self.supports[0]

    @property
    def cols(self):
        return self.supports[1]

    def to_dict(self):
        return {
            "rows": [float(v) for v in self.rows],
            "cols": [float(v) for v in self.cols],
            "pi": self.pi.tolist(),
            "value": float(self.value),
            "a": [float(v) for v in self.a_pot],
            "b": [float(v) for v in self.b_pot],
            "iterations": int(self.iterations),
            "marginal_residual": float(self.marginal_residual),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "pi"])
        for i, x in enumerate(self.rows):
            for j, y in enumerate(self.cols):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(self.pi[i, j]))])
        return buf.getvalue()


def _as_weights(m):
    if isinstance(m, DiscreteMeasure):
        return m.weights, m.atoms
    w = np.asarray(m, dtype=float)
    return w, np.arange(len(w), dtype=float)


# ----------------------------------------------------------------------------
# scaling core shared by the two- and multi-marginal solvers

def _contract(K, vecs, skip):
    """Contract ``K`` against ``vecs[k]`` on every axis except ``skip``."""
    if K.ndim == 2:
        return K @ vecs[1] if skip == 0 else K.T @ vecs[0]
    letters = string.ascii_lowercase[:K.ndim]
    operands = [K]
    subs = [letters]
    for k, v in enumerate(vecs):
        if k != skip:
            operands.append(v)
            subs.append(letters[k])
    spec = ",".join(subs) + "->" + letters[skip]
    return np.einsum(spec, *operands)


def _balance_gauge(logs, weights):
    """Shift log-potentials (shifts sum to zero) so their weighted sums agree."""
    sums = [float(np.dot(w, lp)) for w, lp in zip(weights, logs)]
    target = sum(sums) / len(sums)
    return [lp + (target - s) for lp, s in zip(logs, sums)]


def _scale(K, weights, tol, max_iter):
    d = K.ndim
    pots = [np.ones(K.shape[j]) for j in range(d)]
    history = []
    resid = math.inf
    for it in range(1, max_iter + 1):
        for j in range(d):
            vecs = [p * w for p, w in zip(pots, weights)]
            pots[j] = 1.0 / _contract(K, vecs, j)
        vecs = [p * w for p, w in zip(pots, weights)]
        dev = [vecs[j] * _contract(K, vecs, j) - weights[j] for j in range(d)]
        resid = max(float(np.max(np.abs(e))) for e in dev)
        history.append(sum(float(np.sum(np.abs(e))) for e in dev))
        if resid < tol:
            return pots, it, resid, history
        if not all(np.all(np.isfinite(p)) for p in pots):
            break
    raise ConvergenceError(
        f"scaling stopped after {it} sweeps with residual {resid!r}",
        {"iterations": it, "marginal_residual": resid, "history_tail": history[-5:]},
    )


def _scale_log(logK, weights, tol, max_iter):
    """Same iteration in the log domain (two marginals only)."""
    logw = [np.log(w) for w in weights]
    f = np.zeros(logK.shape[0])
    g = np.zeros(logK.shape[1])
    history = []
    resid = math.inf
    for it in range(1, max_iter + 1):
        f = -logsumexp(logK + (g + logw[1])[None, :], axis=1)
        g = -logsumexp(logK.T + (f + logw[0])[None, :], axis=1)
        logpi = logK + (f + logw[0])[:, None] + (g + logw[1])[None, :]
        pi = np.exp(logpi)
        dev = [pi.sum(axis=1) - weights[0], pi.sum(axis=0) - weights[1]]
        resid = max(float(np.max(np.abs(e))) for e in dev)
        history.append(sum(float(np.sum(np.abs(e))) for e in dev))
        if resid < tol:
            return [f, g], it, resid, history
    raise ConvergenceError(
        f"log-domain scaling stopped after {max_iter} sweeps with residual {resid!r}",
        {"iterations": max_iter, "marginal_residual": resid, "history_tail": history[-5:]},
    )


def _finish(K, logs, weights, supports, it, resid, history, logK=None):
    logs = _balance_gauge(logs, weights)
    value = -sum(float(np.dot(w, lp)) for w, lp in zip(weights, logs))
    if logK is None:
        logK = np.log(K)
    logpi = logK.copy()
    for j, (lp, w) in enumerate(zip(logs, weights)):
        shape = [1] * K.ndim
        shape[j] = -1
        logpi = logpi + (lp + np.log(w)).reshape(shape)
    pi = np.exp(logpi)
    pots = tuple(np.exp(lp) for lp in logs)
    return CouplingSolution(pi, pots, value, it, resid, tuple(supports), tuple(history))


def sinkhorn(K, mu, nu, tol: float = 1e-12, max_iter: int = 100_000,
             log_domain: bool = False) -> CouplingSolution:
    """Two-marginal Sinkhorn scaling of a positive kernel.

    Alternates ``a <- 1/(K (b nu))`` and ``b <- 1/(K^T (a mu))`` until both
    marginals are within ``tol`` (max abs). The returned potentials satisfy
    ``sum mu log a == sum nu log b``.

    Parameters
    ----------
    K : (n, m) ndarray
        Strictly positive kernel.
    mu, nu : DiscreteMeasure or array_like
        Marginals (weights are taken from measures).
    tol, max_iter : float, int
    log_domain : bool
        Run in log-sum-exp form; used when kernel entries approach zero.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` is exhausted; carries diagnostics.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or not np.all(K > 0):
        raise DomainError("sinkhorn needs a strictly positive matrix")
    wmu, xmu = _as_weights(mu)
    wnu, xnu = _as_weights(nu)
    if K.shape != (len(wmu), len(wnu)):
        raise DomainError(f"kernel shape {K.shape} does not match marginals")
    weights = [wmu, wnu]
    if log_domain:
        logK = np.log(K)
        logs, it, resid, hist = _scale_log(logK, weights, tol, max_iter)
        return _finish(K, logs, weights, (xmu, xnu), it, resid, hist, logK)
    pots, it, resid, hist = _scale(K, weights, tol, max_iter)
    return _finish(K, [np.log(p) for p in pots], weights, (xmu, xnu), it, resid, hist)


def multimarginal_sinkhorn(K, margins, tol: float = 1e-12, max_iter: int = 100_000) -> CouplingSolution:
    """Cyclic scaling of a dense ``d``-way kernel against ``d`` marginals.

    The value is ``-sum_j E_{mu_j} log a_j``. With ``d = 2`` the arithmetic
    is exactly that of :func:`sinkhorn`.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != len(margins):
        raise DomainError("kernel order must equal the number of marginals")
    if K.ndim * K.size > DENSE_CAP:
        raise DomainError(f"dense tensor exceeds the cap {DENSE_CAP}")
    if not np.all(K > 0):
        raise DomainError("kernel must be strictly positive")
    pairs = [_as_weights(m) for m in margins]
    weights = [p[0] for p in pairs]
    if K.shape != tuple(len(w) for w in weights):
        raise DomainError(f"kernel shape {K.shape} does not match marginals")
    pots, it, resid, hist = _scale(K, weights, tol, max_iter)
    return _finish(K, [np.log(p) for p in pots], weights, [p[1] for p in pairs], it, resid, hist)


# ----------------------------------------------------------------------------
# problem-level helpers

def near_bound(cost: CostSpec, mu, nu=None) -> bool:
    b = cost.bound(mu, nu)
    return cost.z - b < LOG_DOMAIN_MARGIN * max(1.0, abs(b))


def solve_ot(cost: CostSpec, mu: DiscreteMeasure, nu: Optional[DiscreteMeasure] = None,
             tol: float = 1e-12, max_iter: int = 100_000) -> CouplingSolution:
    """Build the kernel for ``cost``, pick the scaling domain and solve."""
    K = build_kernel(cost, mu, nu)
    m1, m2 = transport_marginals(cost, mu, nu)
    use_log = near_bound(cost, mu, nu)
    if use_log:
        LOGGER.debug("z within %g of the bound; scaling in log domain", LOG_DOMAIN_MARGIN)
    return sinkhorn(K, m1, m2, tol=tol, max_iter=max_iter, log_domain=use_log)


def kl_divergence(pi, ref) -> float:
    """``sum pi log(pi/ref)`` with ``0 log 0 = 0``."""
    pi = np.asarray(pi, dtype=float)
    ref = np.asarray(ref, dtype=float)
    mask = pi > 0
    return math.fsum((pi[mask] * np.log(pi[mask] / ref[mask])).ravel())


def direct_objective(pi, K, weights) -> float:
    """``E_pi[log K] - KL(pi | product of marginals)``."""
    ref = weights[0]
    for w in weights[1:]:
        ref = np.multiply.outer(ref, w)
    return math.fsum((pi * np.log(K)).ravel()) - kl_divergence(pi, ref)


def ot_value(sol: CouplingSolution, cost: CostSpec, mu, nu=None) -> float:
    """Optimal value from the potentials, cross-checked against the direct form.

    Raises
    ------
    InvariantError
        If the two evaluations differ by more than 1e-8.
    """
    K = build_kernel(cost, mu, nu)
    m1, m2 = transport_marginals(cost, mu, nu)
    direct = direct_objective(sol.pi, K, [m1.weights, m2.weights])
    if abs(direct - sol.value) > VALUE_AGREEMENT_TOL * max(1.0, abs(direct)):
        raise InvariantError(f"potential value {sol.value!r} disagrees with direct {direct!r}")
    return sol.value


def coupling_cauchy(sol: CouplingSolution, cost: CostSpec) -> float:
    """``E_pi[1 / K]``; for compression only the ``y = 1`` column counts."""
    x, y = sol.rows, sol.cols
    if cost.kind == "additive":
        return float(np.sum(sol.pi / (cost.z - np.add.outer(x, y))))
    if cost.kind == "multiplicative":
        return float(np.sum(sol.pi / (cost.z - np.multiply.outer(x, y))))
    return float(np.sum(sol.pi[:, 1] / (cost.z - x)))


def product_value(cost: CostSpec, mu, nu=None) -> float:
    """Objective at the independent coupling (a feasible lower bound)."""
    K = build_kernel(cost, mu, nu)
    m1, m2 = transport_marginals(cost, mu, nu)
    return float(m1.weights @ np.log(K) @ m2.weights)


def multimarginal_value(sol: CouplingSolution, margins) -> float:
    return -sum(float(np.dot(_as_weights(m)[0], np.log(p)))
                for m, p in zip(margins, sol.potentials))


# ----------------------------------------------------------------------------
# unregularized bounds and a two-point oracle

def monge_bounds(mu: DiscreteMeasure, nu: DiscreteMeasure, z: float, op: str = "add"):
    """Unregularized ``(inf, sup)`` of ``E log(z - X (+|*) Y)`` over couplings.

    The cost has a negative mixed derivative, so the comonotone coupling
    ``(T_mu(t), T_nu(t))`` attains the infimum and the antitone coupling
    ``(T_mu(t), T_nu(1 - t))`` the supremum. Both integrals are evaluated
    exactly over the common refinement of the quantile step functions.
    """
    kind = canonical_kind(op)
    if kind == "additive":
        combine = np.add
        bound = mu.upper + nu.upper
    elif kind == "multiplicative":
        if not z > 0:
            raise DomainError("multiplicative bounds need z > 0")
        combine = np.multiply
        bound = max(mu.upper * nu.upper, mu.lower * nu.lower, mu.upper * nu.lower,
                    mu.lower * nu.upper)
    else:
        raise DomainError("monge_bounds supports add and mul")
    if not z > bound:
        raise DomainError(f"z must exceed {bound!r}")

    def integral(antitone):
        cn = nu.cumulative()
        breaks = np.union1d(mu.cumulative(), 1.0 - cn[:-1] if antitone else cn)
        breaks = breaks[(breaks > 0) & (breaks <= 1)]
        breaks = np.union1d(breaks, [1.0])
        lefts = np.concatenate([[0.0], breaks[:-1]])
        mids = 0.5 * (lefts + breaks)
        xs = quantile(mu, mids)
        ys = quantile(nu, 1.0 - mids) if antitone else quantile(nu, mids)
        return math.fsum(np.log(z - combine(xs, ys)) * (breaks - lefts))

    return integral(False), integral(True)


def brute_force_2x2(mu: DiscreteMeasure, nu: Optional[DiscreteMeasure], cost: CostSpec,
                    tol: float = 1e-14):
    """Maximize the entropic objective over the one-parameter 2x2 family.

    ``q`` is the mass on the (first atom, first atom) cell. The objective is
    concave in ``q``; golden-section search narrows the interval and a sign
    change of the derivative, when present, pins ``q`` down to rounding.

    Returns
    -------
    (q, value)
    """
    K = build_kernel(cost, mu, nu)
    m1, m2 = transport_marginals(cost, mu, nu)
    if m1.size != 2 or m2.size != 2:
        raise DomainError("brute_force_2x2 needs two-atom marginals")
    p1, p2 = m1.weights
    r1, r2 = m2.weights
    logK = np.log(K)
    ref = np.outer(m1.weights, m2.weights)

    def plan(q):
        return np.array([[q, p1 - q], [r1 - q, p2 - r1 + q]])

    def objective(q):
        P = plan(q)
        mask = P > 0
        return math.fsum((P * logK).ravel()) - math.fsum(
            (P[mask] * np.log(P[mask] / ref[mask])).ravel())

    def slope(q):
        P = plan(q)
        return (logK[0, 0] - logK[0, 1] - logK[1, 0] + logK[1, 1]
                - math.log(P[0, 0] * P[1, 1] / (P[0, 1] * P[1, 0])))

    lo, hi = max(0.0, p1 + r1 - 1.0), min(p1, r1)
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol * max(1.0, hi):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    q = 0.5 * (a + b)
    # refine on the derivative if the golden bracket straddles its zero
    span = max((hi - lo) * 1e-6, 1e-300)
    ql, qh = max(lo, q - span), min(hi, q + span)
    try:
        sl, sh = slope(ql), slope(qh)
        if sl > 0 > sh:
            from scipy.optimize import brentq
            q = brentq(slope, ql, qh, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    except (ValueError, ZeroDivisionError):
        pass
    return q, objective(q)
