"""Real-axis analytic transforms of a discrete measure.

All functions evaluate to the right of the support, where the Cauchy
transform ``G(s) = E[1/(s - X)]`` is positive, strictly decreasing and
convex. Inverses are found by monotone bracketing with analytic end points
followed by a short Newton polish.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_root, newton_polish
from .errors import DomainError
from .measures import DiscreteMeasure

DEFAULT_EPS = 1e-9


def _check_right(m: DiscreteMeasure, s):
    s_min = np.min(s)
    if not s_min > m.upper:
        raise DomainError(f"argument must exceed the support edge {m.upper!r}, got {s_min!r}")


def cauchy_G(m: DiscreteMeasure, s):
    """Cauchy transform ``sum_i w_i / (s - x_i)``.

    Parameters
    ----------
    m : DiscreteMeasure
    s : float or array_like
        Points strictly right of the support.
    """
    s_arr = np.asarray(s, dtype=float)
    _check_right(m, s_arr)
    out = (m.weights / (s_arr[..., None] - m.atoms)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def cauchy_G_prime(m: DiscreteMeasure, s):
    """Derivative ``-sum_i w_i / (s - x_i)^2``."""
    s_arr = np.asarray(s, dtype=float)
    _check_right(m, s_arr)
    out = -(m.weights / (s_arr[..., None] - m.atoms) ** 2).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def cauchy_inverse(m: DiscreteMeasure, g: float) -> float:
    """The unique ``s > E_plus`` with ``G(s) = g``.

    For a finitely supported measure ``G`` maps ``(E_plus, inf)`` onto
    ``(0, inf)``, so every positive ``g`` is attainable. The bracket
    ``[E_plus + w_top/g, E_plus + 1/g]`` always contains the root: the top
    atom alone forces ``G >= g`` at the left end and ``s - x >= s - E_plus``
    forces ``G <= g`` at the right end.
    """
    if not (g > 0 and math.isfinite(g)):
        raise DomainError(f"Cauchy transform value must be positive and finite, got {g!r}")
    top = m.upper
    if m.is_point_mass:
        return top + 1.0 / g
    lo = top + m.weights[-1] / g
    hi = top + 1.0 / g
    if lo == hi:
        return lo

    def resid(s):
        return float(np.sum(m.weights / (s - m.atoms))) - g

    root = bracketed_root(resid, lo, hi, floor=top, what="Cauchy inverse")
    return newton_polish(resid, lambda s: cauchy_G_prime(m, s), root, lower=top)


def r_transform(m: DiscreteMeasure, s: float) -> float:
    """``G^{-1}(s) - 1/s``.

    Defined for every ``s > 0`` on the branch right of the support; tends
    to the mean as ``s -> 0+``.
    """
    return cauchy_inverse(m, s) - 1.0 / s


# ----------------------------------------------------------------------------
# multiplicative side

def _check_positive(m: DiscreteMeasure):
    if m.lower < 0:
        raise DomainError("multiplicative transforms need support in [0, inf)")
    if not m.mean > 0:
        raise DomainError("multiplicative transforms need a nonzero mean")


def j_transform(m: DiscreteMeasure, s):
    """``s G(s) - 1``, evaluated as ``E[X / (s - X)]`` to avoid cancellation."""
    s_arr = np.asarray(s, dtype=float)
    _check_right(m, s_arr)
    out = (m.weights * m.atoms / (s_arr[..., None] - m.atoms)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def j_inverse(m: DiscreteMeasure, u: float) -> float:
    """Solve ``J(s) = u`` for ``s > E_plus`` (positive support only).

    With ``E = E_plus > 0`` the root lies in
    ``[E + w_top E / u, E (1 + u) / u]``.
    """
    _check_positive(m)
    if not (u > 0 and math.isfinite(u)):
        raise DomainError(f"J value must be positive and finite, got {u!r}")
    top = m.upper
    if m.is_point_mass:
        return top * (1.0 + u) / u
    lo = top + m.weights[-1] * top / u
    hi = top * (1.0 + u) / u
    if lo == hi:
        return lo

    def resid(s):
        return float(np.sum(m.weights * m.atoms / (s - m.atoms))) - u

    def dresid(s):
        return -float(np.sum(m.weights * m.atoms / (s - m.atoms) ** 2))

    root = bracketed_root(resid, lo, hi, floor=top, what="J inverse")
    return newton_polish(resid, dresid, root, lower=top)


def psi_transform(m: DiscreteMeasure, u: float) -> float:
    """``(1/u) G(1/u) - 1`` for ``0 < u < 1/E_plus``."""
    if not u > 0:
        raise DomainError("psi needs a positive argument")
    return j_transform(m, 1.0 / u)


def chi_transform(m: DiscreteMeasure, w: float) -> float:
    """Inverse of :func:`psi_transform` on the branch through the origin."""
    return 1.0 / j_inverse(m, w)


def psi_and_chi(m: DiscreteMeasure):
    """Return the pair of callables ``(psi, chi)`` bound to ``m``."""
    _check_positive(m)
    return (lambda u: psi_transform(m, u)), (lambda w: chi_transform(m, w))


def s_transform(m: DiscreteMeasure, w: float) -> float:
    """``((1 + w)/w) * chi(w)``."""
    return (1.0 + w) / w * chi_transform(m, w)


@dataclass(frozen=True)
class TransformDomain:
    """A measure together with the margin kept from its right support edge.

    ``eps`` is the smallest distance from ``E_plus`` at which evaluations
    are accepted; below it the transforms are numerically meaningless even
    though they are finite.
    """

    measure: DiscreteMeasure
    eps: float = DEFAULT_EPS

    @property
    def left_end(self) -> float:
        return self.measure.upper + self.eps

    def attainable_g_range(self):
        """Open interval of values ``G`` takes on ``(E_plus + eps, inf)``."""
        return 0.0, cauchy_G(self.measure, self.left_end)

    def G(self, s):
        if np.min(s) < self.left_end:
            raise DomainError(f"s must be at least {self.left_end!r}")
        return cauchy_G(self.measure, s)

    def G_inverse(self, g):
        hi = self.attainable_g_range()[1]
        if not 0 < g < hi:
            raise DomainError(f"g={g!r} outside attainable range (0, {hi!r})")
        return cauchy_inverse(self.measure, g)

    def R(self, s):
        return self.G_inverse(s) - 1.0 / s
