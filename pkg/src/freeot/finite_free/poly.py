"""Monic polynomials with exact rational coefficients and real-root isolation.

Coefficients are held as :class:`fractions.Fraction`, so finite free
convolutions are carried out without rounding and the only inexact step is
root extraction. Roots are isolated by Sturm sequences evaluated in
multiprecision, then polished by Newton's method on the square-free part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from ..errors import DomainError, NotRealRootedError
from ..measures import DiscreteMeasure, make_measure


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    f = float(v)
    if not math.isfinite(f):
        raise DomainError("polynomial coefficients must be finite")
    return Fraction(f)


@dataclass(frozen=True)
class MonicPoly:
    """``z^N + c_{N-1} z^{N-1} + ... + c_0``.

    Attributes
    ----------
    coeffs : tuple of Fraction
        ``(c_0, ..., c_{N-1})``; the leading 1 is implicit.
    """

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @classmethod
    def from_roots(cls, roots: Sequence) -> "MonicPoly":
        """Exact expansion of ``prod (z - r_i)`` (floats are read exactly)."""
        full = [Fraction(1)]  # ascending, includes leading
        for r in roots:
            r = _frac(r)
            nxt = [Fraction(0)] * (len(full) + 1)
            for k, c in enumerate(full):
                nxt[k + 1] += c
                nxt[k] -= r * c
            full = nxt
        return cls(tuple(full[:-1]))

    @classmethod
    def from_coefficients(cls, coeffs: Sequence) -> "MonicPoly":
        """From the full ascending list ``[c_0, ..., c_{N-1}, 1]``."""
        cs = [_frac(c) for c in coeffs]
        if len(cs) < 2 or cs[-1] != 1:
            raise DomainError("coefficient list must end with the leading 1 and have degree >= 1")
        return cls(tuple(cs[:-1]))

    def full(self):
        """Ascending coefficients including the leading 1."""
        return list(self.coeffs) + [Fraction(1)]

    def elementary(self, k: int) -> Fraction:
        """``e_k`` of the roots, i.e. ``p = sum_k (-1)^k e_k z^{N-k}``."""
        N = self.degree
        if k == 0:
            return Fraction(1)
        return (-1) ** k * self.coeffs[N - k]

    @classmethod
    def from_elementary(cls, e: Sequence) -> "MonicPoly":
        """Inverse of :meth:`elementary`; ``e[0]`` must be 1."""
        N = len(e) - 1
        return cls(tuple((-1) ** (N - j) * Fraction(e[N - j]) for j in range(N)))

    def derivative(self):
        """Derivative as an ascending Fraction list (not monic)."""
        f = self.full()
        return [k * f[k] for k in range(1, len(f))]

    def evaluate_exact(self, z) -> Fraction:
        zf = _frac(z)
        acc = Fraction(1)
        for c in reversed(self.coeffs):
            acc = acc * zf + c
        return acc

    def __call__(self, z) -> float:
        return float(self.evaluate_exact(z))

    def to_dict(self):
        return {"coeffs": [float(c) for c in self.coeffs] + [1.0]}

    @classmethod
    def from_dict(cls, d):
        return cls.from_coefficients(d["coeffs"])


# ----------------------------------------------------------------------------
# multiprecision helpers (ascending lists of mpf)

def _trim(p, tol):
    p = list(p)
    while len(p) > 1 and abs(p[-1]) <= tol:
        p.pop()
    return p


def _norm(p):
    return max(abs(c) for c in p)


def _divmod(a, b):
    """Polynomial division of ascending lists; ``b[-1] != 0``."""
    a = list(a)
    db = len(b) - 1
    if len(a) - 1 < db:
        return [mpmath.mpf(0)], a
    q = [mpmath.mpf(0)] * (len(a) - db)
    lead = b[-1]
    for k in range(len(a) - 1 - db, -1, -1):
        coef = a[k + db] / lead
        q[k] = coef
        for j in range(db + 1):
            a[k + j] -= coef * b[j]
    return q, a[:db] if db > 0 else [mpmath.mpf(0)]


def _horner(p, x):
    acc = mpmath.mpf(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


class _SturmChain:
    """Sturm sequence stored through its quotients for O(N) evaluation.

    ``p_{k+1} = (q_k p_k - p_{k-1}) / s_k`` with positive scalings ``s_k``.
    The chain stops at the last nonzero remainder, which is (a scalar
    multiple of) ``gcd(p, p')``. With ``direct=True`` every member is
    evaluated from its own coefficients instead; that costs O(N^2) but
    survives remainders many orders of magnitude below the leading terms,
    where the recurrence cancels catastrophically.
    """

    def __init__(self, p, gcd_degree, zero_tol_rel, direct=False):
        p0 = list(p)
        p1 = [k * p0[k] for k in range(1, len(p0))]
        self.p0, self.p1 = p0, p1
        self.direct = direct
        self.polys = [p0, p1]
        self.quotients, self.scales = [], []
        self.leads = [(p0[-1], len(p0) - 1), (p1[-1], len(p1) - 1)]
        prev, cur = p0, p1
        while len(cur) - 1 > gcd_degree:
            q, r = _divmod(prev, cur)
            r = _trim([-c for c in r], zero_tol_rel * _norm(r))
            s = _norm(r)
            if s == 0:
                break
            r = [c / s for c in r]
            self.leads.append((r[-1], len(r) - 1))
            self.quotients.append(q)
            self.scales.append(s)
            self.polys.append(r)
            prev, cur = cur, r
        self.last = cur

    def values(self, x):
        if self.direct:
            return [_horner(q, x) for q in self.polys]
        v0, v1 = _horner(self.p0, x), _horner(self.p1, x)
        out = [v0, v1]
        for q, s in zip(self.quotients, self.scales):
            v0, v1 = v1, (_horner(q, x) * v1 - v0) / s
            out.append(v1)
        return out

    def variations(self, x) -> int:
        return _count_changes([mpmath.sign(v) for v in self.values(x)])

    def variations_at_infinity(self, side: int) -> int:
        """Sign changes at ``+inf`` (side=1) or ``-inf`` (side=-1)."""
        return _count_changes([mpmath.sign(c) * (side ** d) for c, d in self.leads])


def _count_changes(signs):
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _dps_for(p: "MonicPoly") -> int:
    """Starting precision: grows with the degree and with the spread of
    coefficient magnitudes, since chain remainders can be as small as the
    square of the smallest relative coefficient."""
    mags = [abs(c) for c in p.full() if c != 0]
    spread = max(_log10(m) for m in mags) - min(_log10(m) for m in mags)
    return int(max(50, 3 * p.degree + 40, 3 * spread + 40))


def _log10(q: Fraction) -> float:
    return math.log10(q.numerator) - math.log10(q.denominator)


def real_roots(p: MonicPoly, *, dps: int | None = None, tol: float = 1e-14) -> np.ndarray:
    """All roots of a real-rooted monic polynomial, sorted, with multiplicity.

    If the count comes out short the working precision is doubled, and the
    last two retries evaluate the Sturm chain member by member.

    Parameters
    ----------
    p : MonicPoly
    dps : int, optional
        Working decimal precision for the Sturm chain.
    tol : float
        Relative width at which isolating intervals are handed to Newton.

    Raises
    ------
    NotRealRootedError
        If the real roots found (with multiplicity) do not number ``N``.
    """
    N = p.degree
    if N == 0:
        return np.array([])
    if N == 1:
        return np.array([float(-p.coeffs[0])])
    dps = dps or _dps_for(p)
    tower = gcd_tower_modular(p.full())
    for attempt in range(4):
        with mpmath.workdps(dps):
            coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in p.full()]
            roots = _roots_mp(coeffs, dps, tol, tower, direct=attempt >= 2)
            if len(roots) == N:
                return np.array(sorted(float(r) for r in roots))
        dps *= 2
    raise NotRealRootedError(f"found {len(roots)} real roots (with multiplicity) for degree {N}")


# ----------------------------------------------------------------------------
# exact gcd degree through arithmetic modulo large primes

_PRIMES = (2305843009213693951, 1000000007, 998244353)


def _integer_coeffs(coeffs):
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return [int(c * den) for c in coeffs]


def _gcd_mod(a, b, q):
    """Monic gcd of two integer polynomials reduced modulo ``q``."""
    a = [x % q for x in a]
    b = [x % q for x in b]
    while a and a[-1] == 0:
        a.pop()
    while b and b[-1] == 0:
        b.pop()
    while b:
        inv = pow(b[-1], q - 2, q)
        while len(a) >= len(b):
            f = a[-1] * inv % q
            off = len(a) - len(b)
            for j in range(len(b)):
                a[off + j] = (a[off + j] - f * b[j]) % q
            while a and a[-1] == 0:
                a.pop()
        a, b = b, a
    inv = pow(a[-1], q - 2, q)
    return [x * inv % q for x in a]


def _gcd_tower(P, q):
    """Degrees of ``g_1 = gcd(P, P')``, ``g_2 = gcd(g_1, g_1')``, ... mod ``q``."""
    degs = []
    g = P
    while len(g) > 1:
        dg = [k * g[k] % q for k in range(1, len(g))]
        g = _gcd_mod(g, dg, q)
        degs.append(len(g) - 1)
    return degs or [0]


def gcd_tower_modular(full_coeffs):
    """Degrees of the iterated gcds ``gcd(p, p')``, ``gcd(g, g')``, ...

    Reduction modulo a prime can only raise these degrees, so the prime
    giving the smallest first degree is used; a first degree of 0 proves
    the polynomial square-free.
    """
    P = _integer_coeffs([Fraction(c) for c in full_coeffs])
    best = None
    for q in _PRIMES:
        if P[-1] % q == 0:
            continue
        tower = _gcd_tower(P, q)
        if best is None or tower[0] < best[0]:
            best = tower
        if best[0] == 0:
            break
    return best


def _roots_mp(coeffs, dps, tol, tower, direct=False):
    """Real roots with multiplicity of an mpf polynomial (ascending)."""
    lead = coeffs[-1]
    coeffs = [c / lead for c in coeffs]
    n = len(coeffs) - 1
    if n == 0:
        return []
    if n == 1:
        return [-coeffs[0]]
    chain = _SturmChain(coeffs, tower[0], mpmath.mpf(10) ** (-(dps * 8) // 10), direct)
    # All roots real => max|r| <= sqrt(sum r^2) = sqrt(e1^2 - 2 e2). This is
    # far tighter than the Cauchy bound 1 + max|c|, where the chain
    # recurrence loses all precision.
    cauchy = 1 + max(abs(c) for c in coeffs[:-1])
    e1, e2 = -coeffs[n - 1], (coeffs[n - 2] if n >= 2 else 0)
    power_sum = e1 * e1 - 2 * e2
    if power_sum < 0:
        return []
    bound = min(cauchy, mpmath.sqrt(power_sum) * (1 + mpmath.mpf(10) ** -6) + mpmath.mpf(10) ** -6)
    lo, hi = -bound, bound
    v_lo, v_hi = chain.variations(lo), chain.variations(hi)
    if v_lo - v_hi != chain.variations_at_infinity(-1) - chain.variations_at_infinity(1):
        return []
    intervals = []
    _isolate(chain, lo, hi, v_lo, v_hi, intervals,
             min_width=bound * mpmath.mpf(10) ** (-(dps // 2)))
    gcd = chain.last
    # square-free part for Newton
    if len(gcd) > 1:
        sqfree, _ = _divmod(coeffs, gcd)
    else:
        sqfree = coeffs
    dsq = [k * sqfree[k] for k in range(1, len(sqfree))]
    distinct = [_refine(sqfree, dsq, a, b, min_width=bound * mpmath.mpf(tol), dps=dps)
                for a, b in intervals]
    if len(gcd) <= 1:
        return distinct
    # multiplicities from the roots of gcd(p, p')
    inner = _roots_mp(gcd, dps, tol, tower[1:] or [0], direct)
    out = list(distinct)
    for r in inner:
        j = min(range(len(distinct)), key=lambda i: abs(distinct[i] - r))
        out.append(distinct[j])
    return out


_SPLIT = mpmath.mpf(1) / 2 + mpmath.mpf(1) / (1000 * mpmath.sqrt(2))


def _isolate(chain, a, b, va, vb, out, min_width):
    """Bisect ``(a, b]`` until every piece holds one distinct root.

    Pieces are appended to ``out`` left to right. An explicit stack keeps
    deep splits (roots ~1e-300 apart need ~1000 levels) off the call stack.
    """
    stack = [(a, b, va, vb)]
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count <= 0:
            continue
        if count == 1:
            out.append((a, b))
            continue
        if b - a <= min_width:
            # cluster that does not separate at this precision
            out.extend([(a, b)] * count)
            continue
        # off-centre split so that rational roots (and multiple roots, where
        # the whole chain vanishes) never land on a split point
        m = a + (b - a) * _SPLIT
        vm = chain.variations(m)
        stack.append((m, b, vm, vb))
        stack.append((a, m, va, vm))


def _refine(f, df, a, b, min_width, dps):
    """Simple root of ``f`` in ``(a, b]``: bisection, then Newton."""
    fa, fb = _horner(f, a), _horner(f, b)
    if fb == 0:
        return b
    # a may itself be a root of the neighbouring interval, so compare with f(b)
    if mpmath.sign(fa) != mpmath.sign(fb):
        sb = mpmath.sign(fb)
        while b - a > min_width:
            m = (a + b) / 2
            fm = _horner(f, m)
            if fm == 0:
                return m
            if mpmath.sign(fm) == sb:
                b = m
            else:
                a = m
    x = (a + b) / 2
    eps = mpmath.mpf(10) ** (-(dps // 2))
    for _ in range(10):
        d = _horner(df, x)
        if d == 0:
            break
        step = _horner(f, x) / d
        nx = x - step
        if not a - (b - a) <= nx <= b + (b - a):
            break
        x = nx
        if abs(step) <= (abs(x) + 1) * eps:
            break
    return x


def measure_of(p: MonicPoly) -> DiscreteMeasure:
    """Empirical root measure: weight ``1/N`` on each root."""
    r = real_roots(p)
    return make_measure(r, np.full(len(r), 1.0 / len(r)))


def poly_log_potential(p: MonicPoly, z: float) -> float:
    """``(1/N) sum log(z - root)`` from the roots."""
    r = real_roots(p)
    if not z > r[-1]:
        raise DomainError("z must exceed the largest root")
    return math.fsum(np.log(z - r)) / len(r)
