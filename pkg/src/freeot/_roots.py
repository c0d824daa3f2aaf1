"""Scalar root finding on monotone functions with explicit bracket reporting."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError

SCAN_POINTS = 1024
MAX_EXPAND = 80


def _sign(v):
    return int(v > 0) - int(v < 0)


def bracketed_root(f, lo, hi, *, floor=None, what="root", xtol_rel=4e-16):
    """Root of a continuous scalar function on ``[lo, hi]``.

    The caller usually supplies an analytic bracket. If the signs at the two
    ends agree, ``hi`` is pushed outward geometrically and ``lo`` is pulled
    toward ``floor`` (when given). As a last resort a log-spaced scan over
    the widest interval tried is performed. Only then is
    :class:`BracketError` raised.

    Parameters
    ----------
    f : callable
    lo, hi : float
        Initial bracket, ``lo < hi``.
    floor : float, optional
        Open lower limit of the domain of ``f``; ``lo`` never crosses it.
    what : str
        Label used in diagnostics.
    """
    flo, fhi = f(lo), f(hi)
    tried = [(lo, flo), (hi, fhi)]
    if _sign(flo) * _sign(fhi) > 0:
        for _ in range(MAX_EXPAND):
            width = hi - lo
            hi = hi + 2.0 * width
            fhi = f(hi)
            tried.append((hi, fhi))
            if floor is not None:
                lo = floor + 0.5 * (lo - floor)
                flo = f(lo)
                tried.append((lo, flo))
            if _sign(flo) * _sign(fhi) <= 0 or not math.isfinite(hi):
                break
    if _sign(flo) * _sign(fhi) > 0:
        lo, hi, flo, fhi = _scan(f, min(t[0] for t in tried), max(t[0] for t in tried),
                                 floor, what, tried)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    return brentq(f, lo, hi, xtol=max(abs(lo), abs(hi), 1e-300) * xtol_rel,
                  rtol=4 * np.finfo(float).eps, maxiter=500)


def _scan(f, a, b, floor, what, tried):
    base = floor if floor is not None else a - 1.0
    offsets = np.logspace(math.log10(max(a - base, 1e-300)), math.log10(b - base), SCAN_POINTS)
    xs = base + offsets
    vals = [f(x) for x in xs]
    for i in range(len(xs) - 1):
        if _sign(vals[i]) * _sign(vals[i + 1]) <= 0:
            return xs[i], xs[i + 1], vals[i], vals[i + 1]
    raise BracketError(
        f"no sign change found for {what}",
        {"interval": (float(a), float(b)), "samples": [(float(x), float(v)) for x, v in tried[:12]]},
    )


def newton_polish(f, fprime, x, lower=-math.inf, steps=3):
    """A few guarded Newton steps; keeps the best iterate seen."""
    best, fbest = x, abs(f(x))
    for _ in range(steps):
        if fbest == 0:
            break
        d = fprime(best)
        if d == 0 or not math.isfinite(d):
            break
        cand = best - f(best) / d
        if not cand > lower:
            break
        fc = abs(f(cand))
        if fc < fbest:
            best, fbest = cand, fc
        else:
            break
    return best
