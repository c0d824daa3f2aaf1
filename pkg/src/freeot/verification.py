"""Acceptance checks shared by ``freeot verify`` and the test suite.

Every check is a function ``(seed) -> CheckResult``. Results carry the
measured quantity and the threshold it was judged against, so a report can
be re-asserted downstream. Timings are kept out of the serialized report to
keep it byte-for-byte reproducible.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import entropic_ot as eot
from . import subordination as sub
from .ctransforms import cauchy_G, r_transform, s_transform
from .finite_free.convergence import (arcsine_reference, asymptotic_logdet_check,
                                      weak_convergence_table)
from .finite_free.convolution import (finite_free_additive, finite_free_compress,
                                      finite_free_multiplicative, subset_average_poly)
from .finite_free.permanent import perm_expected_charpoly_at, permanent_interpolation
from .finite_free.poly import MonicPoly
from .finite_free.quadrature import exact_permutation_side, mc_quadrature
from .measures import (DiscreteMeasure, bernoulli, classical_convolve, log_potential,
                       make_measure, scale_pushforward, signed_log_potential)
from .permuton_ldp import (BlockHistogram, all_histograms, brute_force_count,
                           diagonal_histogram, flat_histogram, rate_table, tuple_count)

DEFAULT_SEED = 7


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    metrics: dict
    tags: tuple = ()
    seconds: float = field(default=0.0, compare=False)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{flag}] {self.number:>2} {self.name}: {parts}"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "metrics": self.metrics}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


# ----------------------------------------------------------------------------
# random instances

def random_measure(rng, lo_atoms=2, hi_atoms=12, positive=False) -> DiscreteMeasure:
    n = int(rng.integers(lo_atoms, hi_atoms + 1))
    atoms = rng.uniform(0.0, 2.0, n) if positive else rng.normal(0.0, 1.0, n)
    return make_measure(atoms, rng.uniform(0.1, 1.0, n))


OFFSETS = (0.5, 1.0, 5.0)


def ot_instances(seed, per_kind=50):
    """Randomized problems: 50 per kind, each at three distances from the bound."""
    rng = np.random.default_rng([seed, 2])
    out = []
    for kind in ("additive", "multiplicative", "compression"):
        for _ in range(per_kind):
            positive = kind == "multiplicative"
            mu = random_measure(rng, positive=positive)
            nu = None if kind == "compression" else random_measure(rng, positive=positive)
            tau = float(rng.uniform(0.1, 0.9)) if kind == "compression" else None
            for off in OFFSETS:
                probe = eot.CostSpec(kind, 0.0, tau) if tau else eot.CostSpec(kind, 0.0)
                z = probe.bound(mu, nu) + off
                out.append((kind, mu, nu, tau, z))
    return out


def _solve_instance(kind, mu, nu, tau, z):
    cost = eot.CostSpec(kind, z, tau)
    sol = eot.solve_ot(cost, mu, nu)
    value = eot.ot_value(sol, cost, mu, nu)
    s = sub.solve(kind, mu, nu, z, tau)
    factor = tau if kind == "compression" else 1.0
    free_val = factor * sub.free_log_potential(s, mu, nu)
    free_g = factor * sub.free_cauchy(s)
    return cost, sol, value, free_val, eot.coupling_cauchy(sol, cost), free_g


# ----------------------------------------------------------------------------
# checks

def check_bernoulli(seed):
    b = bernoulli()
    worst = {"value": 0.0, "q": 0.0, "cauchy": 0.0}
    for z in (2.5, 3.0, 5.0):
        r = math.sqrt(z * z - 4)
        cost = eot.CostSpec("add", z)
        sol = eot.solve_ot(cost, b, b)
        worst["value"] = max(worst["value"], abs(eot.ot_value(sol, cost, b, b) - (math.log(z + r) - math.log(2))))
        worst["q"] = max(worst["q"], abs(sol.pi[1, 1] - r / (2 * (z + r))))
        worst["cauchy"] = max(worst["cauchy"], abs(eot.coupling_cauchy(sol, cost) - 1 / r))
    tol = 1e-8
    return {"max_value_err": worst["value"], "max_q_err": worst["q"],
            "max_cauchy_err": worst["cauchy"], "tol": tol}, max(worst.values()) < tol


def check_equality(seed):
    value_gap = cauchy_gap = 0.0
    n = 0
    for kind, mu, nu, tau, z in ot_instances(seed):
        _, _, v, fv, cg, fg = _solve_instance(kind, mu, nu, tau, z)
        value_gap = max(value_gap, abs(v - fv))
        cauchy_gap = max(cauchy_gap, abs(cg - fg))
        n += 1
    tol = 1e-6
    return {"instances": n, "max_value_gap": value_gap, "max_cauchy_gap": cauchy_gap,
            "tol": tol}, value_gap < tol and cauchy_gap < tol


def check_multimarginal(seed):
    b = bernoulli()
    z = 4.0
    K = eot.multi_kernel([b, b, b], z)
    sol = eot.multimarginal_sinkhorn(K, [b, b, b])
    # iterate: the d-fold solver agrees with nesting two-fold problems
    ms = sub.solve_additive_many([b, b, b], z)
    ref = sub.free_log_potential_many(ms, [b, b, b])
    gap = abs(sol.value - ref)
    tol = 1e-6
    return {"value": sol.value, "subordination": ref, "gap": gap, "tol": tol}, gap < tol


def quadrature_configs(seed):
    rng = np.random.default_rng([seed, 4])
    out = []
    for op in ("add", "mul", "minor"):
        for N in (2, 4, 6):
            for d in (2, 3):
                if op == "mul":
                    lists = [rng.uniform(0.2, 1.5, N) for _ in range(d)]
                    z = float(np.prod([l.max() for l in lists])) + 1.0
                    k = None
                elif op == "add":
                    lists = [rng.uniform(-1.0, 1.0, N) for _ in range(d)]
                    z = float(sum(np.abs(l).max() for l in lists)) + 1.0
                    k = None
                else:
                    lists = [rng.uniform(-1.0, 1.0, N)]
                    k = int(math.ceil(N / d))
                    z = float(np.abs(lists[0]).max()) + 1.0
                out.append((op, N, d, lists, z, k))
    return out


def check_quadrature(seed, samples=20000, threads=1):
    results = []
    for i, (op, N, d, lists, z, k) in enumerate(quadrature_configs(seed)):
        exact = exact_permutation_side(lists, op, z, k)
        est = mc_quadrature(lists, op, z, samples=samples, seed=seed * 1000 + i, k=k,
                            threads=threads)
        results.append(est.z_score(exact))
    within = sum(1 for s in results if s <= 4.0)
    frac = within / len(results)
    return {"configs": len(results), "within_4se": within, "max_abs_z": max(results),
            "required_fraction": 0.95}, frac >= 0.95


def check_finite_free(seed):
    rng = np.random.default_rng([seed, 5])
    worst = 0.0
    float_worst = 0.0
    for i in range(20):
        N = int(rng.integers(2, 11))
        op = "add" if i % 2 == 0 else "mul"
        if op == "add":
            a, b = rng.normal(size=N), rng.normal(size=N)
            formula = finite_free_additive(MonicPoly.from_roots(a), MonicPoly.from_roots(b))
        else:
            a, b = rng.uniform(0, 2, N), rng.uniform(0, 2, N)
            formula = finite_free_multiplicative(MonicPoly.from_roots(a), MonicPoly.from_roots(b))
        interp = permanent_interpolation(a, b, op)
        scale = max(abs(c) for c in formula.full())
        diff = max(abs(x - y) for x, y in zip(formula.coeffs, interp.coeffs))
        worst = max(worst, float(diff / scale))
        z = float(np.max(np.abs(a)) * (np.max(np.abs(b)) if op == "mul" else 1)
                  + (0 if op == "mul" else np.max(np.abs(b))) + 1.0)
        val = perm_expected_charpoly_at(a, b, z, op)
        ref = formula(z)
        float_worst = max(float_worst, abs(val - ref) / abs(ref))
    comp_ok = True
    for i in range(20):
        N = int(rng.integers(2, 9))
        k = int(rng.integers(1, N + 1))
        r = list(rng.normal(size=N))
        comp_ok &= finite_free_compress(MonicPoly.from_roots(r), k) == subset_average_poly(r, k)
    tol = 1e-9
    return {"max_coeff_rel_err": worst, "max_float_ryser_rel_err": float_worst,
            "compression_exact_match": comp_ok, "tol": tol}, (
        worst < tol and float_worst < tol and comp_ok)


def check_convergence(seed):
    b = bernoulli()
    Ns = (8, 16, 32, 64)
    rows = asymptotic_logdet_check(b, b, "add", 3.0, Ns)
    errs = [r["error"] for r in rows]
    w1 = [r["w1"] for r in weak_convergence_table(b, b, "add", Ns, arcsine_reference(64))]
    mono_err = all(x > y for x, y in zip(errs, errs[1:]))
    mono_w1 = all(x > y for x, y in zip(w1, w1[1:]))
    return {"errors": [float(e) for e in errs], "w1": [float(w) for w in w1],
            "final_error": errs[-1], "tol": 5e-3}, mono_err and mono_w1 and errs[-1] < 5e-3


def check_counterexample(seed):
    b = bernoulli()
    val = signed_log_potential(classical_convolve(b, b, "add"), 1.0)
    target = 0.25 * math.log(3)
    err = abs(val - target)
    return {"value": val, "err": err, "arcsine_value": 0.0, "tol": 1e-12}, err <= 1e-12 and val > 0


def check_transforms(seed):
    rng = np.random.default_rng([seed, 8])
    worst = {"r_add": 0.0, "s_mul": 0.0, "r_comp": 0.0, "g_comp_half": 0.0}
    s = 0.1
    for _ in range(20):
        mu = random_measure(rng, 2, 6)
        nu = random_measure(rng, 2, 6)
        lhs = sub.free_r_transform("add", mu, nu, s)
        worst["r_add"] = max(worst["r_add"], abs(lhs - r_transform(mu, s) - r_transform(nu, s)))

        pm = random_measure(rng, 2, 6, positive=True)
        pn = random_measure(rng, 2, 6, positive=True)
        lhs = sub.free_s_transform(pm, pn, s)
        worst["s_mul"] = max(worst["s_mul"], abs(lhs - s_transform(pm, s) * s_transform(pn, s)))

        tau = float(rng.uniform(0.1, 0.9))
        lhs = sub.free_r_transform("comp", mu, None, s, tau)
        worst["r_comp"] = max(worst["r_comp"], abs(lhs - r_transform(mu, tau * s)))

        z = mu.upper + float(rng.uniform(0.5, 3.0))
        g_half = sub.free_cauchy(sub.solve_compression(mu, 0.5, z))
        g_sum = sub.free_cauchy(sub.solve_additive(mu, mu, 2 * z))
        worst["g_comp_half"] = max(worst["g_comp_half"], abs(g_half - 2 * g_sum))
    tol = 1e-8
    out = dict(worst)
    out["tol"] = tol
    return out, max(worst.values()) < tol


def check_inequalities(seed):
    free_vs_classical = math.inf
    sandwich = math.inf
    n = 0
    for kind, mu, nu, tau, z in ot_instances(seed):
        cost, sol, v, fv, _, _ = _solve_instance(kind, mu, nu, tau, z)
        classical = eot.product_value(cost, mu, nu)
        free_vs_classical = min(free_vs_classical, v - classical, fv - classical)
        if kind == "additive":
            lo, hi = eot.monge_bounds(mu, nu, z, "add")
            sandwich = min(sandwich, fv - lo, hi - fv)
        n += 1
    return {"instances": n, "min_free_minus_classical": free_vs_classical,
            "min_sandwich_slack": sandwich, "floor": -1e-10}, (
        free_vs_classical >= -1e-10 and sandwich >= -1e-10)


LDP_BOUND = 4.0


def check_block_counts(seed):
    cases = [
        BlockHistogram(2, 2, 2, {(1, 1): 1, (2, 2): 1}),
        BlockHistogram(2, 2, 2, {(1, 2): 1, (2, 1): 1}),
        BlockHistogram(4, 2, 2, {(1, 1): 1, (1, 2): 1, (2, 1): 1, (2, 2): 1}),
        BlockHistogram(4, 2, 2, {(1, 1): 2, (2, 2): 2}),
        BlockHistogram(4, 2, 2, {(1, 2): 2, (2, 1): 2}),
        BlockHistogram(2, 2, 3, {(1, 1, 1): 1, (2, 2, 2): 1}),
        BlockHistogram(2, 2, 3, {(1, 2, 1): 1, (2, 1, 2): 1}),
    ]
    counts_ok = all(tuple_count(h) == brute_force_count(h) for h in cases)
    total = sum(tuple_count(h) for h in all_histograms(4, 2, 2))
    total_ok = total == math.factorial(4) ** 2
    scaled = {}
    for fam in ("flat", "diag"):
        rows = rate_table(fam, (8, 16, 32, 64))
        scaled[fam] = [r["N"] * abs(r["gap"]) for r in rows]
    worst = max(max(v) for v in scaled.values())
    return {"counts_match": counts_ok, "total": total, "N_times_gap_flat": scaled["flat"],
            "N_times_gap_diag": scaled["diag"], "bound": LDP_BOUND}, (
        counts_ok and total_ok and worst <= LDP_BOUND)


def check_determinism(seed):
    """Stochastic pieces run twice give identical serialized output."""
    def once():
        q = check_quadrature(seed, samples=2000)
        inst = [(k, mu.to_dict(), None if nu is None else nu.to_dict(), t, z)
                for k, mu, nu, t, z in ot_instances(seed, per_kind=5)]
        return json.dumps([q[0], inst], sort_keys=True)

    a, b = once(), once()
    return {"identical": a == b, "bytes": len(a)}, a == b


CHECKS = [
    (1, "bernoulli_closed_forms", check_bernoulli, ("bernoulli", "ot")),
    (2, "transport_equals_subordination", check_equality, ("ot", "subordination", "random")),
    (3, "multimarginal_bernoulli", check_multimarginal, ("bernoulli", "ot", "multimarginal")),
    (4, "quadrature_identities", check_quadrature, ("finite_free", "stochastic")),
    (5, "finite_free_oracles", check_finite_free, ("finite_free", "random")),
    (6, "finite_free_convergence", check_convergence, ("bernoulli", "finite_free")),
    (7, "absolute_value_counterexample", check_counterexample, ("bernoulli",)),
    (8, "transform_identities", check_transforms, ("transforms", "random")),
    (9, "free_vs_classical_inequalities", check_inequalities, ("ot", "random")),
    (10, "permutation_block_counts", check_block_counts, ("ldp",)),
    (11, "seeded_determinism", check_determinism, ("stochastic",)),
]


def run_checks(seed: int = DEFAULT_SEED, name_filter: str | None = None, threads: int = 1):
    results = []
    for number, name, fn, tags in CHECKS:
        if name_filter and name_filter not in name and name_filter not in tags \
                and name_filter != str(number):
            continue
        t0 = time.perf_counter()
        if fn is check_quadrature:
            metrics, ok = fn(seed, threads=threads)
        else:
            metrics, ok = fn(seed)
        results.append(CheckResult(number, name, bool(ok), _plain(metrics), tags,
                                   time.perf_counter() - t0))
    return results


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report(results, seed) -> dict:
    return {"schema": 1, "seed": seed, "all_passed": all(r.passed for r in results),
            "checks": [r.to_dict() for r in results]}
