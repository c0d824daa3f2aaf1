"""Command-line front end: ``freeot <subcommand> [flags]``.

Every subcommand writes one JSON report (``"schema": 1``) to stdout. Tables
can also be written as CSV with ``--csv PATH``. Exit codes: 0 success,
1 failed verification, 2 invalid input, 3 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import entropic_ot as eot
from . import subordination as sub
from .errors import ConvergenceError, DomainError, FreeOTError
from .finite_free.convergence import (arcsine_reference, asymptotic_logdet_check,
                                      weak_convergence_table)
from .finite_free.convolution import finite_free_of_measures
from .finite_free.permanent import MAX_RYSER, perm_expected_charpoly_at
from .finite_free.poly import real_roots
from .finite_free.quadrature import exact_permutation_side, mc_quadrature
from .measures import (DiscreteMeasure, bernoulli, measure_from_dict, measure_from_json,
                       point_mass, two_point, uniform_grid)
from .permuton_ldp import (BlockHistogram, block_log_probability, brute_force_count,
                           diagonal_histogram, flat_histogram, rate_functional, tuple_count)
from . import verification

SCHEMA = 1
BRUTE_FORCE_CAP = 5 * 10 ** 6

_PRESET = re.compile(r"^(?P<name>[a-z0-9-]+)\s*(?:[:(]\s*(?P<args>[^)]*)\)?)?$")


def parse_measure(text: str, stdin=None) -> DiscreteMeasure:
    """Measure from a preset name, a JSON file path or ``-`` (stdin).

    Presets: ``bern``, ``delta1``, ``delta:c``, ``two-point:a,b,w`` and
    ``uniform-grid:n,lo,hi``; the parenthesized form ``two-point(a,b,w)``
    is accepted too.
    """
    if text == "-":
        return measure_from_json((stdin or sys.stdin).read())
    m = _PRESET.match(text.strip())
    if m:
        name = m.group("name")
        args = [a for a in (m.group("args") or "").split(",") if a.strip()]
        try:
            vals = [float(a) for a in args]
        except ValueError:
            raise DomainError(f"non-numeric preset arguments in {text!r}") from None
        if name == "bern" and not vals:
            return bernoulli()
        if name == "delta1" and not vals:
            return point_mass(1.0)
        if name == "delta" and len(vals) == 1:
            return point_mass(vals[0])
        if name == "two-point" and len(vals) == 3:
            return two_point(*vals)
        if name == "uniform-grid" and len(vals) == 3:
            if vals[0] != int(vals[0]):
                raise DomainError("uniform-grid needs an integer atom count")
            return uniform_grid(int(vals[0]), vals[1], vals[2])
    path = Path(text)
    if path.is_file():
        return measure_from_json(path.read_text())
    raise DomainError(f"unknown measure {text!r}: not a preset and not a file")


def parse_grid(text: str) -> list[float]:
    """``lo:hi:n`` (inclusive, ``n`` points) or a comma-separated list."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
    return [float(v) for v in text.split(",") if v.strip()]


def parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit(report: dict, out=None) -> str:
    text = json.dumps(_clean({"schema": SCHEMA, **report}), indent=2)
    print(text, file=out or sys.stdout)
    return text


def write_csv(path, rows):
    if not path or not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in r.items()})


def _measures(args):
    mu = parse_measure(args.mu)
    kind = sub.canonical_kind(args.kind)
    nu = None
    if kind != "compression":
        if args.nu is None:
            raise DomainError(f"--nu is required for kind {kind}")
        nu = parse_measure(args.nu)
    elif args.tau is None:
        raise DomainError("--tau is required for compression")
    return kind, mu, nu


def _z_values(args):
    return [args.z] if args.z is not None else parse_grid(args.z_grid)


# ----------------------------------------------------------------------------
# subcommands

def cmd_freeconv(args) -> int:
    kind, mu, nu = _measures(args)
    rows = []
    for z in _z_values(args):
        s = sub.solve(kind, mu, nu, z, args.tau)
        rows.append({"kind": kind, "z": z, "omega": s.omega, "omega_mu": s.omega_mu,
                     "omega_nu": s.omega_nu, "cauchy": sub.free_cauchy(s),
                     "log_potential": sub.free_log_potential(s, mu, nu),
                     "residual": s.residual})
    write_csv(args.csv, rows)
    if len(rows) == 1:
        emit({"command": "freeconv", "tau": args.tau, **rows[0]})
    else:
        emit({"command": "freeconv", "kind": kind, "tau": args.tau, "rows": rows})
    return 0


def cmd_otsolve(args) -> int:
    if args.d > 2:
        return _otsolve_multi(args)
    kind, mu, nu = _measures(args)
    z = args.z
    cost = eot.CostSpec(kind, z, args.tau)
    sol = eot.solve_ot(cost, mu, nu, tol=args.tol)
    value = eot.ot_value(sol, cost, mu, nu)
    s = sub.solve(kind, mu, nu, z, args.tau)
    factor = args.tau if kind == "compression" else 1.0
    free_val = factor * sub.free_log_potential(s, mu, nu)
    free_g = factor * sub.free_cauchy(s)
    g = eot.coupling_cauchy(sol, cost)
    rows = [{"row": float(x), "col": float(y), "mass": float(sol.pi[i, j])}
            for i, x in enumerate(sol.rows) for j, y in enumerate(sol.cols)]
    write_csv(args.csv, rows)
    emit({"command": "otsolve", "kind": kind, "z": z, "tau": args.tau,
          "coupling": sol.to_dict(), "value": value, "subordination_value": free_val,
          "gap": abs(value - free_val), "coupling_cauchy": g, "free_cauchy": free_g,
          "cauchy_gap": abs(g - free_g)})
    return 0


def _otsolve_multi(args):
    if sub.canonical_kind(args.kind) != "additive":
        raise DomainError("--d > 2 supports the additive kind only")
    mu = parse_measure(args.mu)
    margins = [mu] * args.d
    K = eot.multi_kernel(margins, args.z)
    sol = eot.multimarginal_sinkhorn(K, margins, tol=args.tol)
    ms = sub.solve_additive_many(margins, args.z)
    ref = sub.free_log_potential_many(ms, margins)
    emit({"command": "otsolve", "kind": "additive", "z": args.z, "d": args.d,
          "value": sol.value, "subordination_value": ref, "gap": abs(sol.value - ref),
          "iterations": sol.iterations, "marginal_residual": sol.marginal_residual})
    return 0


def _spectra(args):
    if args.spectra:
        lists = [[float(v) for v in part.split(",")] for part in args.spectra.split(";")]
        if len({len(l) for l in lists}) != 1:
            raise DomainError("all spectra must have the same length")
        return lists
    rng = np.random.default_rng([args.seed, 99])
    count = 1 if args.op == "minor" else args.d
    lo, hi = (0.2, 1.5) if args.op == "mul" else (-1.0, 1.0)
    return [rng.uniform(lo, hi, args.n).tolist() for _ in range(count)]


def cmd_quadrature(args) -> int:
    lists = _spectra(args)
    N = len(lists[0])
    k = args.k
    if args.op == "minor" and k is None:
        k = int(math.ceil(N / 2))
    if args.op != "minor" and len(lists) == 2 and N > 6:
        if N > MAX_RYSER:
            raise DomainError(f"N={N} exceeds the permanent limit {MAX_RYSER}")
        exact = perm_expected_charpoly_at(lists[0], lists[1], args.z, args.op)
    else:
        exact = exact_permutation_side(lists, args.op, args.z, k)
    est = mc_quadrature(lists, args.op, args.z, samples=args.samples, seed=args.seed,
                        k=k, threads=args.threads)
    emit({"command": "quadrature", "op": args.op, "z": args.z, "k": k, "spectra": lists,
          "exact": exact, "mc": est.to_dict(), "z_score": est.z_score(exact)})
    return 0


def cmd_finitefree(args) -> int:
    kind, mu, nu = _measures(args)
    Ns = parse_ints(args.n)
    report = {"command": "finitefree", "kind": kind, "tau": args.tau}
    if len(Ns) == 1:
        p = finite_free_of_measures(mu, nu, kind, Ns[0], args.tau)
        report["polynomial"] = p.to_dict()
        report["roots"] = real_roots(p)
    rows = []
    ref = None
    if args.reference:
        ref = arcsine_reference() if args.reference == "arcsine" else parse_measure(args.reference)
        rows = weak_convergence_table(mu, nu, kind, Ns, ref, args.tau)
    if args.z is not None:
        logdet = asymptotic_logdet_check(mu, nu, kind, args.z, Ns, args.tau)
        if rows:
            for r, l in zip(rows, logdet):
                r.update({k: v for k, v in l.items() if k not in r})
        else:
            rows = logdet
    if rows:
        report["table"] = rows
        write_csv(args.csv, rows)
    emit(report)
    return 0


def _histogram(args, N):
    if args.hist == "diag":
        return diagonal_histogram(N, args.m, args.d)
    if args.hist == "flat":
        return flat_histogram(N, args.m, args.d)
    data = json.loads(Path(args.hist).read_text()) if Path(args.hist).is_file() \
        else json.loads(args.hist)
    counts = {tuple(r): c for r, c in data["counts"]}
    return BlockHistogram(N, args.m, args.d, counts)


def cmd_ldp(args) -> int:
    rows = []
    for N in parse_ints(args.n):
        h = _histogram(args, N)
        count = tuple_count(h)
        row = {"N": N, "count": count, "block_log_probability": block_log_probability(h),
               "rate_functional": rate_functional(h)}
        row["gap"] = row["block_log_probability"] + row["rate_functional"]
        if math.factorial(N) ** args.d <= BRUTE_FORCE_CAP:
            row["brute_force_count"] = brute_force_count(h)
        rows.append(row)
    write_csv(args.csv, rows)
    # big integer counts go out as strings once they exceed float range
    for r in rows:
        if r["count"] > 2 ** 53:
            r["count"] = str(r["count"])
    out = {"command": "ldp", "m": args.m, "d": args.d, "hist": args.hist, "rows": rows}
    if len(rows) == 1:
        out.update(rows[0])
    emit(out)
    return 0


def cmd_verify(args) -> int:
    results = verification.run_checks(args.seed, args.filter, args.threads)
    if not results:
        raise DomainError(f"--filter {args.filter!r} matched no checks")
    for r in results:
        print(r.line(), file=sys.stderr)
    rep = verification.report(results, args.seed)
    if args.csv:
        write_csv(args.csv, [{"number": r.number, "name": r.name, "passed": r.passed}
                             for r in results])
    emit({"command": "verify", **rep})
    return 0 if rep["all_passed"] else 1


# ----------------------------------------------------------------------------
# parser

def _add_kind(p, need_z=True, grid=False):
    p.add_argument("--kind", required=True, help="add | mul | comp")
    p.add_argument("--mu", required=True, help="preset, JSON path or '-' for stdin")
    p.add_argument("--nu", help="second measure (not used for compression)")
    p.add_argument("--tau", type=float, help="compression ratio in (0, 1)")
    if grid:
        g = p.add_mutually_exclusive_group(required=need_z)
        g.add_argument("--z", type=float)
        g.add_argument("--z-grid", help="lo:hi:n or comma list")
    else:
        p.add_argument("--z", type=float, required=need_z)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freeot", description=__doc__.splitlines()[0])
    sp = ap.add_subparsers(dest="command", required=True)

    p = sp.add_parser("freeconv", help="free convolution through subordination")
    _add_kind(p, grid=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_freeconv)

    p = sp.add_parser("otsolve", help="entropic transport value and coupling")
    _add_kind(p)
    p.add_argument("--d", type=int, default=2, help="number of marginals (copies of --mu)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_otsolve)

    p = sp.add_parser("quadrature", help="unitary Monte-Carlo vs exact permutation average")
    p.add_argument("--op", choices=("add", "mul", "minor"), required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--spectra", help="'a1,a2,...;b1,b2,...'; random from --seed if omitted")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_quadrature)

    p = sp.add_parser("finitefree", help="finite free operation on quantile polynomials")
    _add_kind(p, need_z=False)
    p.add_argument("--n", required=True, help="degree or comma list of degrees")
    p.add_argument("--reference", help="measure for the W1 column, or 'arcsine'")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_finitefree)

    p = sp.add_parser("ldp", help="block-histogram counts and rate")
    p.add_argument("--n", required=True, help="N or comma list")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--hist", default="diag", help="diag | flat | JSON path/string")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_ldp)

    p = sp.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--seed", type=int, default=verification.DEFAULT_SEED)
    p.add_argument("--filter", help="check name, number or tag")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        diag = getattr(exc, "diagnostics", None) or {}
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(_clean(diag)), file=sys.stderr)
        return 3
    except (DomainError, ValueError, FreeOTError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
