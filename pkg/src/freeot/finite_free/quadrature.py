"""Monte-Carlo checks of the unitary/permutation quadrature identities.

The unitary side averages ``det(z - M)`` over Haar-random conjugations; the
permutation side averages ``prod_i (z - a_i (op) b_sigma(i) ...)`` over
uniform permutations. Sampling is split into fixed-size chunks seeded by
``(seed, chunk_index)`` so the result does not depend on how many worker
threads process the chunks.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DomainError
from .convolution import subset_average_poly

CHUNK = 1000
MAX_HAAR_N = 64
ENUM_CAP = 10 ** 6


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (sample std / sqrt(samples))."""

    mean: complex | float
    stderr: float
    samples: int
    seed: int

    def z_score(self, exact) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == exact else math.inf
        return abs(self.mean - exact) / self.stderr

    def to_dict(self):
        m = complex(self.mean)
        return {"mean_real": m.real, "mean_imag": m.imag, "stderr": self.stderr,
                "samples": self.samples, "seed": self.seed}


def haar_unitary(n: int, seed=None, *, size=None, rng=None) -> np.ndarray:
    """Haar-distributed unitary matrix (or a batch of them).

    QR of a complex Ginibre matrix, with the phases of ``R``'s diagonal
    moved into ``Q`` so that the factorization is unique.
    """
    if not 1 <= n <= MAX_HAAR_N:
        raise DomainError(f"n must lie in [1, {MAX_HAAR_N}]")
    rng = rng if rng is not None else np.random.default_rng(seed)
    shape = (n, n) if size is None else (size, n, n)
    Z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    if np.any(d == 0):
        raise np.linalg.LinAlgError("singular Ginibre sample")
    return Q * (d / np.abs(d))[..., None, :]


def _conjugate(U, diag):
    # U diag(a) U^*
    return (U * diag[None, None, :]) @ np.conj(np.swapaxes(U, -1, -2))


def _chunk_values(diagonals, op, z, k, seed, chunk, count):
    rng = np.random.default_rng([seed, chunk])
    N = len(diagonals[0])
    if op == "minor":
        U = haar_unitary(N, size=count, rng=rng)
        M = _conjugate(U, np.asarray(diagonals[0], float))[:, :k, :k]
        dim = k
    else:
        M = np.broadcast_to(np.diag(np.asarray(diagonals[0], float)).astype(complex),
                            (count, N, N)).copy()
        for a in diagonals[1:]:
            U = haar_unitary(N, size=count, rng=rng)
            C = _conjugate(U, np.asarray(a, float))
            M = M + C if op == "add" else M @ C
        dim = N
    return np.linalg.det(z * np.eye(dim) - M)


def _summarize(values, seed):
    n = len(values)
    mean = values.mean()
    var = np.sum(np.abs(values - mean) ** 2) / (n - 1)
    if np.all(np.abs(values.imag) == 0):
        mean = float(mean.real)
    return McEstimate(mean, float(math.sqrt(var / n)), n, seed)


def mc_quadrature(diagonals, op: str, z: float, samples: int = 20000, seed: int = 0,
                  k: int | None = None, threads: int = 1) -> McEstimate:
    """Monte-Carlo estimate of the unitary side.

    Parameters
    ----------
    diagonals : list of array_like
        Spectra ``a_1, ..., a_d``. The first matrix is kept diagonal and
        every other one is conjugated by an independent Haar unitary.
        ``op='minor'`` uses only ``diagonals[0]``.
    op : {'add', 'mul', 'minor'}
        ``det(z - (A_1 + U A_2 U* + ...))``, ``det(z - A_1 U A_2 U* ...)``
        or ``det(z - [U A_1 U*]_k)`` for the leading ``k x k`` block.
    z : float
    samples, seed, threads : int
    k : int, optional
        Block size for ``minor``.
    """
    if samples < 100:
        raise DomainError("need at least 100 samples")
    if op not in ("add", "mul", "minor"):
        raise DomainError(f"unknown op {op!r}")
    diagonals = [np.asarray(a, float) for a in diagonals]
    N = len(diagonals[0])
    if any(len(a) != N for a in diagonals):
        raise DomainError("all spectra must have the same length")
    if op == "minor":
        if k is None or not 1 <= k <= N:
            raise DomainError("minor needs 1 <= k <= N")
    elif len(diagonals) < 2:
        raise DomainError("add/mul need at least two spectra")
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)
    jobs = [(diagonals, op, z, k, seed, i, c) for i, c in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: _chunk_values(*j), jobs))
    else:
        parts = [_chunk_values(*j) for j in jobs]
    return _summarize(np.concatenate(parts), seed)


def enum_perm_quadrature(lists, op: str, z: float) -> float:
    """Exact permutation-side average by summing over all permutation tuples.

    The first spectrum is held fixed; the others range over all ``N!``
    orderings each.
    """
    if op not in ("add", "mul"):
        raise DomainError("op must be 'add' or 'mul'")
    N = len(lists[0])
    d = len(lists)
    total = math.factorial(N) ** (d - 1)
    if N > 6 or d > 3 or total > ENUM_CAP:
        raise DomainError("enumeration size cap exceeded (N <= 6, d <= 3)")
    perms = np.array(list(itertools.permutations(range(N))))
    axes = []
    for j, vals in enumerate(lists[1:]):
        v = np.asarray(vals, float)[perms]  # (N!, N)
        shape = [1] * (d - 1) + [N]
        shape[j] = len(perms)
        axes.append(v.reshape(shape))
    a0 = np.asarray(lists[0], float)
    combo = a0
    for v in axes:
        combo = combo + v if op == "add" else combo * v
    prods = np.prod(z - combo, axis=-1)
    return math.fsum(prods.ravel()) / total


def mc_perm_quadrature(lists, op: str, z: float, samples: int = 20000, seed: int = 0) -> McEstimate:
    """Monte-Carlo over independent uniform permutations of all but the first list."""
    if op not in ("add", "mul"):
        raise DomainError("op must be 'add' or 'mul'")
    rng = np.random.default_rng(seed)
    N = len(lists[0])
    combo = np.broadcast_to(np.asarray(lists[0], float), (samples, N)).copy()
    for vals in lists[1:]:
        idx = rng.permuted(np.tile(np.arange(N), (samples, 1)), axis=1)
        v = np.asarray(vals, float)[idx]
        combo = combo + v if op == "add" else combo * v
    return _summarize(np.prod(z - combo, axis=1).astype(complex), seed)


def exact_permutation_side(lists, op: str, z: float, k: int | None = None) -> float:
    """Exact permutation-side value for ``add``/``mul`` or the corner ``minor``."""
    if op == "minor":
        # a permuted k x k corner of a diagonal matrix is a uniform k-subset
        return float(subset_average_poly(list(lists[0]), k).evaluate_exact(Fraction(z)))
    return enum_perm_quadrature(lists, op, z)
