"""Finitely supported probability measures on the real line.

A :class:`DiscreteMeasure` is stored as sorted atoms and positive weights.
Everything else in the package (transforms, transport, polynomials) consumes
these objects, so the constructor is strict about normalization.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

# relative distance under which two atoms are considered the same point
MERGE_RTOL = 1e-12


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    Build instances through :func:`make_measure`; the raw constructor does
    not validate.

    Attributes
    ----------
    atoms : ndarray
        Strictly increasing support points.
    weights : ndarray
        Positive masses summing to one.
    """

    atoms: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def lower(self) -> float:
        """Left end of the support."""
        return float(self.atoms[0])

    @property
    def upper(self) -> float:
        """Right end of the support."""
        return float(self.atoms[-1])

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.atoms))

    @property
    def is_point_mass(self) -> bool:
        return self.size == 1

    def cumulative(self) -> np.ndarray:
        """Cumulative weights ``c_1 .. c_n`` with ``c_n`` pinned to 1."""
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def cdf(self, x) -> np.ndarray | float:
        """Right-continuous distribution function ``P(X <= x)``."""
        c = np.concatenate([[0.0], self.cumulative()])
        idx = np.searchsorted(self.atoms, x, side="right")
        out = c[idx]
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        # repr of a float is the shortest string that round-trips exactly
        return {"atoms": [float(a) for a in self.atoms],
                "weights": [float(w) for w in self.weights]}

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.atoms.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        n = self.size
        if n <= 6:
            pts = ", ".join(f"{a:.6g}:{w:.4g}" for a, w in zip(self.atoms, self.weights))
            return f"DiscreteMeasure({pts})"
        return f"DiscreteMeasure(n={n}, support=[{self.lower:.6g}, {self.upper:.6g}])"


def make_measure(atoms: Sequence[float], weights: Sequence[float] | None = None) -> DiscreteMeasure:
    """Validate, sort, merge and normalize a list of weighted atoms.

    Parameters
    ----------
    atoms : sequence of float
    weights : sequence of float, optional
        Positive masses. Uniform if omitted. They need not sum to one.

    Returns
    -------
    DiscreteMeasure

    Raises
    ------
    DomainError
        On empty input, length mismatch, non-finite values or a
        nonpositive weight.
    """
    x = np.asarray(atoms, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("measure needs at least one atom")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
    if w.size != x.size:
        raise DomainError(f"got {x.size} atoms but {w.size} weights")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
        raise DomainError("atoms and weights must be finite")
    if np.any(w <= 0):
        raise DomainError("weights must be strictly positive")

    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]

    # merge runs of (nearly) equal atoms, keeping the first position
    keep_x, keep_w = [x[0]], [w[0]]
    for xi, wi in zip(x[1:], w[1:]):
        ref = keep_x[-1]
        if xi - ref <= MERGE_RTOL * max(1.0, abs(ref), abs(xi)):
            keep_w[-1] += wi
        else:
            keep_x.append(xi)
            keep_w.append(wi)
    x = np.array(keep_x)
    w = np.array(keep_w)
    total = math.fsum(w)
    # already-normalized input passes through untouched so JSON round trips are exact
    if abs(total - 1.0) > 4 * np.finfo(float).eps:
        w = w / total
    return DiscreteMeasure(_frozen(x), _frozen(w))


def point_mass(c: float) -> DiscreteMeasure:
    return make_measure([c], [1.0])


def bernoulli() -> DiscreteMeasure:
    """Symmetric two-point law on {-1, +1}."""
    return make_measure([-1.0, 1.0], [0.5, 0.5])


def two_point(a: float, b: float, w: float) -> DiscreteMeasure:
    """``w * delta_a + (1 - w) * delta_b``."""
    if not 0 < w < 1:
        raise DomainError("two-point weight must lie in (0, 1)")
    return make_measure([a, b], [w, 1.0 - w])


def uniform_grid(n: int, lo: float, hi: float) -> DiscreteMeasure:
    """``n`` equally weighted atoms spread evenly over ``[lo, hi]``."""
    if n < 1:
        raise DomainError("grid needs n >= 1")
    if n == 1:
        return point_mass(0.5 * (lo + hi))
    return make_measure(np.linspace(lo, hi, n))


def measure_from_dict(d: dict) -> DiscreteMeasure:
    """Inverse of :meth:`DiscreteMeasure.to_dict`. ``weights`` is optional."""
    if "atoms" not in d:
        raise DomainError("measure JSON needs an 'atoms' field")
    return make_measure(d["atoms"], d.get("weights"))


def measure_to_json(m: DiscreteMeasure) -> str:
    return json.dumps(m.to_dict())


def measure_from_json(text: str) -> DiscreteMeasure:
    return measure_from_dict(json.loads(text))


# ----------------------------------------------------------------------------
# quantiles and distances

def quantile(m: DiscreteMeasure, t):
    """Left-continuous quantile function.

    ``T(t) = x_k`` for ``t`` in ``(c_{k-1}, c_k]``, so at a jump of the CDF
    the smaller atom is returned.

    Parameters
    ----------
    m : DiscreteMeasure
    t : float or array_like
        Levels in ``(0, 1]``.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(~(tt > 0)) or np.any(tt > 1):
        raise DomainError("quantile level must lie in (0, 1]")
    idx = np.searchsorted(m.cumulative(), tt, side="left")
    idx = np.minimum(idx, m.size - 1)
    out = m.atoms[idx]
    return float(out) if out.ndim == 0 else out


def quantile_grid(m: DiscreteMeasure, n: int) -> np.ndarray:
    """Values ``T(i/n)`` for ``i = 1..n``."""
    return quantile(m, np.arange(1, n + 1) / n)


def wasserstein1(m: DiscreteMeasure, n: DiscreteMeasure) -> float:
    """Exact W1 distance as the integral of ``|T_m - T_n|`` over (0, 1]."""
    cm, cn = m.cumulative(), n.cumulative()
    breaks = np.union1d(cm, cn)
    lefts = np.concatenate([[0.0], breaks[:-1]])
    widths = breaks - lefts
    mask = widths > 0
    # evaluate both step functions at the right end of each piece
    tm = quantile(m, breaks[mask])
    tn = quantile(n, breaks[mask])
    return math.fsum(np.abs(tm - tn) * widths[mask])


def moment(m: DiscreteMeasure, k: int) -> float:
    if k < 0 or int(k) != k:
        raise DomainError("moment order must be a nonnegative integer")
    return math.fsum(m.weights * m.atoms ** int(k))


# ----------------------------------------------------------------------------
# classical operations

def classical_convolve(m: DiscreteMeasure, n: DiscreteMeasure, op: str = "add") -> DiscreteMeasure:
    """Law of ``X + Y`` or ``X * Y`` for independent ``X ~ m``, ``Y ~ n``."""
    if op == "add":
        pts = np.add.outer(m.atoms, n.atoms)
    elif op == "mul":
        pts = np.multiply.outer(m.atoms, n.atoms)
    else:
        raise DomainError(f"unknown op {op!r}")
    return make_measure(pts.ravel(), np.outer(m.weights, n.weights).ravel())


def scale_pushforward(m: DiscreteMeasure, lam: float) -> DiscreteMeasure:
    """Image of ``m`` under ``x -> lam * x``."""
    if lam == 0 or not math.isfinite(lam):
        raise DomainError("scale factor must be finite and nonzero")
    return make_measure(m.atoms * lam, m.weights)


def shift(m: DiscreteMeasure, c: float) -> DiscreteMeasure:
    return make_measure(m.atoms + c, m.weights)


def log_potential(m: DiscreteMeasure, z: float) -> float:
    """``E log(z - X)`` for ``z`` strictly right of the support."""
    if not z > m.upper:
        raise DomainError(f"log-potential needs z > {m.upper!r}, got {z!r}")
    return math.fsum(m.weights * np.log(z - m.atoms))


def signed_log_potential(m: DiscreteMeasure, z: float) -> float:
    """``E log|z - X|``; defined for any ``z`` off the atoms."""
    d = np.abs(z - m.atoms)
    if np.any(d == 0):
        raise DomainError(f"z={z!r} coincides with an atom")
    return math.fsum(m.weights * np.log(d))
