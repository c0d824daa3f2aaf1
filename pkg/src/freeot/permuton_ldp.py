"""Block histograms of permutation tuples and their exact counts.

A ``d``-tuple of permutations of ``[N]`` is summarized by the number
``N_r`` of indices ``i`` whose images ``(sigma_1(i), ..., sigma_d(i))``
fall in block ``r`` of an ``m^d`` grid, each axis being cut into ``m``
slabs of ``N/m`` consecutive values. The number of tuples sharing a
histogram is ``N! ((N/m)!)^{m d} / prod_r N_r!``.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class BlockHistogram:
    """Counts ``N_r`` over the ``m^d`` block grid.

    ``counts`` maps 1-based block tuples ``r`` to nonnegative integers;
    missing blocks count as zero.
    """

    N: int
    m: int
    d: int
    counts: Mapping

    def __post_init__(self):
        if self.m < 1 or self.N % self.m:
            raise DomainError(f"m={self.m} must divide N={self.N}")
        if self.d < 2:
            raise DomainError("need d >= 2")
        clean = {}
        for r, c in dict(self.counts).items():
            r = tuple(int(v) for v in r)
            if len(r) != self.d or any(not 1 <= v <= self.m for v in r):
                raise DomainError(f"block index {r} outside [1, {self.m}]^{self.d}")
            if int(c) != c or c < 0:
                raise DomainError("counts must be nonnegative integers")
            if c:
                clean[r] = int(c)
        object.__setattr__(self, "counts", clean)
        if sum(clean.values()) != self.N:
            raise DomainError("counts must sum to N")

    def marginals_consistent(self) -> bool:
        slab = self.N // self.m
        for axis in range(self.d):
            tot = [0] * self.m
            for r, c in self.counts.items():
                tot[r[axis] - 1] += c
            if any(t != slab for t in tot):
                return False
        return True

    def densities(self):
        """``gamma_r = N_r m^d / N`` for the occupied blocks."""
        scale = self.m ** self.d / self.N
        return {r: c * scale for r, c in self.counts.items()}

    def to_dict(self):
        return {"N": self.N, "m": self.m, "d": self.d,
                "counts": [[list(r), c] for r, c in sorted(self.counts.items())]}


def tuple_count(h: BlockHistogram) -> int:
    """Exact number of ``sigma`` in ``S_N^d`` whose histogram is ``h``.

    Assign the ``N`` indices to blocks (multinomial ``N! / prod N_r!``),
    then, along every axis and inside every slab, match the ``N/m``
    indices that landed there with the slab's ``N/m`` values in any order.
    Returns 0 when a slab total differs from ``N/m``.
    """
    if not h.marginals_consistent():
        return 0
    slab = h.N // h.m
    num = math.factorial(h.N) * math.factorial(slab) ** (h.m * h.d)
    den = 1
    for c in h.counts.values():
        den *= math.factorial(c)
    q, rem = divmod(num, den)
    assert rem == 0
    return q


def block_log_probability(h: BlockHistogram) -> float:
    """``(1/N) log(tuple_count / (N!)^d)``; ``-inf`` if the count is zero."""
    cnt = tuple_count(h)
    if cnt == 0:
        return -math.inf
    # math.log is exact to rounding on arbitrarily large integers
    return (math.log(cnt) - h.d * math.lgamma(h.N + 1)) / h.N


def rate_functional(h: BlockHistogram) -> float:
    """Block entropy ``sum_r m^{-d} gamma_r log gamma_r`` (``0 log 0 = 0``).

    Nonnegative, zero exactly for the flat histogram; the log-probability
    of the histogram is ``-rate + O(log N / N)``.
    """
    w = h.m ** -h.d
    return math.fsum(w * g * math.log(g) for g in h.densities().values() if g > 0)


def stirling_correction(h: BlockHistogram) -> float:
    """Leading ``(1/2) log`` terms of Stirling's formula in ``N * blp + N * rate``.

    With ``log n! = n log n - n + (1/2) log(2 pi n) + O(1/n)`` the linear
    terms cancel exactly and what remains, up to ``O(1/N)``, is this value.
    """
    half = lambda n: 0.5 * math.log(2 * math.pi * n)
    slab = h.N // h.m
    val = half(h.N) + h.m * h.d * half(slab) - h.d * half(h.N)
    val -= sum(half(c) for c in h.counts.values())
    return val


def histogram_of_tuple(perms, m: int) -> BlockHistogram:
    """Histogram of a tuple of permutations given as sequences of ``0..N-1``."""
    perms = [np.asarray(p, dtype=int) for p in perms]
    N = len(perms[0])
    if N % m:
        raise DomainError(f"m={m} must divide N={N}")
    for p in perms:
        if len(p) != N or sorted(p.tolist()) != list(range(N)):
            raise DomainError("each entry must be a permutation of 0..N-1")
    slab = N // m
    blocks = np.stack([p // slab + 1 for p in perms], axis=1)
    counts = {}
    for row in map(tuple, blocks.tolist()):
        counts[row] = counts.get(row, 0) + 1
    return BlockHistogram(N, m, len(perms), counts)


def sample_histogram(N: int, m: int, d: int, seed=None) -> BlockHistogram:
    """Histogram of ``d`` independent uniform permutations."""
    rng = np.random.default_rng(seed)
    return histogram_of_tuple([rng.permutation(N) for _ in range(d)], m)


def brute_force_count(h: BlockHistogram) -> int:
    """Count tuples with histogram ``h`` by scanning all of ``S_N^d``."""
    if math.factorial(h.N) ** h.d > 5 * 10 ** 6:
        raise DomainError("enumeration too large")
    target = h.counts
    perms = list(itertools.permutations(range(h.N)))
    hits = 0
    for tup in itertools.product(perms, repeat=h.d):
        if histogram_of_tuple(tup, h.m).counts == target:
            hits += 1
    return hits


def all_histograms(N: int, m: int, d: int):
    """Every marginal-consistent histogram (small cases only)."""
    cells = list(itertools.product(range(1, m + 1), repeat=d))
    out = []

    def rec(idx, left, acc):
        if idx == len(cells) - 1:
            acc[cells[idx]] = left
            h = BlockHistogram(N, m, d, dict(acc))
            if h.marginals_consistent():
                out.append(h)
            del acc[cells[idx]]
            return
        for c in range(left + 1):
            acc[cells[idx]] = c
            rec(idx + 1, left - c, acc)
            del acc[cells[idx]]

    rec(0, N, {})
    return out


def flat_histogram(N: int, m: int, d: int) -> BlockHistogram:
    """Histogram with every block holding ``N / m^d`` indices."""
    per = N // m ** d
    if per * m ** d != N:
        raise DomainError("flat histogram needs m^d | N")
    return BlockHistogram(N, m, d, {r: per for r in itertools.product(range(1, m + 1), repeat=d)})


def diagonal_histogram(N: int, m: int, d: int) -> BlockHistogram:
    """All mass on the diagonal blocks ``(v, ..., v)``."""
    if N % m:
        raise DomainError(f"m={m} must divide N={N}")
    return BlockHistogram(N, m, d, {(v,) * d: N // m for v in range(1, m + 1)})


def rate_table(family, N_list, m=2, d=2):
    """Rows ``(N, block_log_probability, rate_functional, gap)``.

    ``family`` is ``'flat'`` or ``'diag'`` (or a callable ``N -> histogram``).
    ``gap`` is ``block_log_probability + rate_functional``.
    """
    make = {"flat": flat_histogram, "diag": diagonal_histogram}.get(family, family)
    rows = []
    for N in N_list:
        h = make(N, m, d)
        blp = block_log_probability(h)
        rate = rate_functional(h)
        rows.append({"N": N, "block_log_probability": blp, "rate_functional": rate,
                     "gap": blp + rate})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
