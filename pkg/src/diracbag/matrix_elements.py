"""Matrix elements of the uniform-field perturbation ``V(x) = lambda x``.

Only opposite-parity pairs couple.  For an even level ``(k, eps, N)`` and an
odd level ``(k', eps', N')``

    <odd|V|even> = lambda N N' int_{-a}^{a} [cos kx sin k'x
                   - k k' sin kx cos k'x / ((eps + m)(eps' + m))] x dx

and every ``x sin(qx)`` piece integrates in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .spectrum import BagModel, Level, Parity, wavefunction

__all__ = [
    "Perturbation",
    "x_sin_moment",
    "dipole_dimensionless",
    "dipole_element",
    "dipole_element_massless",
    "dipole_element_quadrature",
]


@dataclass(frozen=True)
class Perturbation:
    """Coupling ``lam`` of ``V = lam * x``.

    When built from a charge and a field, ``lam = -q * E_field``.
    """

    lam: float = 1.0
    q: float | None = None
    E_field: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if (self.q is None) != (self.E_field is None):
            raise ValueError("charge and field must be given together")
        if self.q is not None and self.lam != -self.q * self.E_field:
            raise ValueError("lambda must equal -q * E_field")

    @classmethod
    def from_field(cls, q: float, E_field: float) -> "Perturbation":
        return cls(lam=-q * E_field, q=q, E_field=E_field)


def x_sin_moment(q):
    """``int_{-1}^{1} x sin(q x) dx = 2 (sin q - q cos q) / q**2``.

    Uses the Taylor series near ``q = 0``, where the closed form cancels.
    """
    q = np.asarray(q, dtype=float)
    small = np.abs(q) < 0.05
    qs = np.where(small, q, 0.0)
    q2 = qs * qs
    series = 2.0 * qs * (1.0 / 3.0 - q2 / 30.0 + q2 * q2 / 840.0 - q2 * q2 * q2 / 45360.0)
    ql = np.where(small, 1.0, q)
    closed = 2.0 * (np.sin(ql) - ql * np.cos(ql)) / (ql * ql)
    return np.where(small, series, closed)


def dipole_dimensionless(k_even, eps_even, N_even, k_odd, eps_odd, N_odd, ma):
    """``<odd| x |even>`` at ``a = 1``; broadcasts over array arguments."""
    k1, k2 = np.asarray(k_even, float), np.asarray(k_odd, float)
    cos_sin = 0.5 * (x_sin_moment(k2 + k1) + x_sin_moment(k2 - k1))
    sin_cos = 0.5 * (x_sin_moment(k1 + k2) + x_sin_moment(k1 - k2))
    ratio = k1 * k2 / ((np.asarray(eps_even) + ma) * (np.asarray(eps_odd) + ma))
    return np.asarray(N_even) * np.asarray(N_odd) * (cos_sin - ratio * sin_cos)


def _even_odd(level_a: Level, level_b: Level) -> tuple[Level, Level]:
    if level_a.parity is Parity.EVEN:
        return level_a, level_b
    return level_b, level_a


def dipole_element(level_a: Level, level_b: Level, pert: Perturbation, model: BagModel) -> float:
    """``<b|lambda x|a>``; exactly zero for equal parities."""
    if level_a.parity is level_b.parity:
        return 0.0
    ev, od = _even_odd(level_a, level_b)
    a = model.a
    val = dipole_dimensionless(
        ev.k * a, ev.eps * a, ev.N * math.sqrt(a),
        od.k * a, od.eps * a, od.N * math.sqrt(a),
        model.ma,
    )
    return float(pert.lam * a * val)


def dipole_element_massless(level_a: Level, level_b: Level, pert: Perturbation, model: BagModel) -> float:
    """``|lambda| / (a (eps - eps')**2)``, valid only for the massless bag."""
    if model.m != 0.0:
        raise ValueError("massless shortcut requires m = 0")
    if level_a.parity is level_b.parity:
        raise ValueError("equal-parity pair: the element vanishes, magnitude formula does not apply")
    gap = level_a.eps - level_b.eps
    assert gap != 0.0, "opposite-parity levels are never degenerate"
    return abs(pert.lam) / (model.a * gap * gap)


def dipole_element_quadrature(level_a: Level, level_b: Level, pert: Perturbation,
                              model: BagModel, order: int | None = None) -> float:
    """Gauss-Legendre evaluation of the same element, for cross-checks."""
    if order is None:
        order = quadrature.order_for((level_a.k + level_b.k) * model.a)

    def integrand(x):
        ua, va = wavefunction(level_a, model, x)
        ub, vb = wavefunction(level_b, model, x)
        return (ua * ub + va * vb) * x

    return pert.lam * quadrature.integrate(integrand, model.a, order)
