"""Dalgarno-Lewis route to the exclusion-ignoring single-level shift.

The first-order spinor solves ``(H0 - eps) psi1 = -V psi0`` with the bag
boundary condition, and the second-order shift is
``int V psi1 . psi0 dx``, so no sum over intermediate states is needed.

For an even level, with ``C = cos kx`` and ``S = sin kx`` (``a = 1``)::

    u1 = lam N / (2 k^2) [m x C + eps k (x^2 - 1) S
                          - (m k / (2 eps)) (1/(eps + m) + 2) S]
    v1 = lam N / (2 eps k^2) [m eps k x S / (eps + m)
                              + m (1/2 - (eps - m)) C
                              + eps^2 (eps - m) (x^2 - 1) C]

Odd levels use the same expressions with ``C = sin kx`` and
``S = -cos kx``, i.e. the phase of ``kx`` moved by ``-pi/2``.  Written
with an explicit parity sign ``eta`` that is ``S -> eta cos kx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .matrix_elements import Perturbation
from .perturbation import ShiftReport, Truncation, power_law_tail
from .spectrum import BagModel, Level, Parity, Sign, Spinor, solve_branch, wavefunction

__all__ = [
    "DLCorrection",
    "DLConsistencyError",
    "dl_correction",
    "dl_residual",
    "dl_shift",
    "dl_shift_quadrature",
    "dl_total",
    "nonrel_shift",
    "shift_closed_form",
]

_DUALITY_RTOL = 1e-8


class DLConsistencyError(ArithmeticError):
    """Closed-form and quadrature shifts disagree."""


def _phase(parity: Parity) -> float:
    return 0.0 if parity is Parity.EVEN else -0.5 * math.pi


def _spinor(xs, k, e, m, N, phase):
    """Dimensionless ``(u1, v1)`` at ``a = lambda = 1``; broadcasts.

    The ``m`` prefactor of ``v1`` is cancelled analytically against the
    ``1/m`` of its quadratic term, so ``m = 0`` is regular.
    """
    th = k * xs + phase
    C, S = np.cos(th), np.sin(th)
    B = m * k / (2.0 * e) * (1.0 / (e + m) + 2.0)
    u = N / (2.0 * k * k) * (m * xs * C + e * k * (xs * xs - 1.0) * S - B * S)
    v = N / (2.0 * e * k * k) * (
        m * e * k * xs * S / (e + m)
        + m * (0.5 - (e - m)) * C
        + e * e * (e - m) * (xs * xs - 1.0) * C
    )
    return u, v


def _spinor_derivative(xs, k, e, m, N, phase):
    th = k * xs + phase
    C, S = np.cos(th), np.sin(th)
    B = m * k / (2.0 * e) * (1.0 / (e + m) + 2.0)
    du = N / (2.0 * k * k) * (
        m * C - m * k * xs * S + 2.0 * e * k * xs * S
        + e * k * k * (xs * xs - 1.0) * C - B * k * C
    )
    p = m * e * k / (e + m)
    q = m * (0.5 - (e - m))
    r = e * e * (e - m)
    dv = N / (2.0 * e * k * k) * (
        p * S + p * k * xs * C + 2.0 * r * xs * C - (q + r * (xs * xs - 1.0)) * k * S
    )
    return du, dv


def _unperturbed(xs, k, e, m, N, phase):
    # same phase trick: odd u = N sin kx = N cos(kx - pi/2)
    th = k * xs + phase
    return N * np.cos(th), -N * k * np.sin(th) / (e + m)


@dataclass(frozen=True)
class DLCorrection:
    """First-order spinor of one level, evaluable anywhere in the bag."""

    level: Level
    model: BagModel
    pert: Perturbation

    @property
    def eta(self) -> int:
        return self.level.parity.eta

    def _args(self, x):
        a = self.model.a
        lv = self.level
        xs = np.asarray(x, dtype=float) / a
        return xs, (lv.k * a, lv.eps * a, self.model.ma, lv.N * math.sqrt(a), _phase(lv.parity))

    def __call__(self, x) -> Spinor:
        xs, args = self._args(x)
        u, v = _spinor(xs, *args)
        inside = np.abs(xs) <= 1.0
        s = self.pert.lam * self.model.a ** 1.5
        u = np.where(inside, s * u, 0.0)
        v = np.where(inside, s * v, 0.0)
        if u.ndim == 0:
            return Spinor(float(u), float(v))
        return Spinor(u, v)

    def derivative(self, x) -> Spinor:
        """``(u1', v1')`` with respect to the physical coordinate."""
        xs, args = self._args(x)
        du, dv = _spinor_derivative(xs, *args)
        s = self.pert.lam * math.sqrt(self.model.a)
        return Spinor(s * du, s * dv)


def dl_correction(level: Level, model: BagModel, pert: Perturbation, x) -> Spinor:
    """``(u1(x), v1(x))`` for ``level``; zero outside the bag."""
    return DLCorrection(level, model, pert)(x)


def dl_residual(level: Level, model: BagModel, pert: Perturbation, x) -> Spinor:
    """Components of ``(H0 - eps) psi1 + V psi0`` at interior points."""
    corr = DLCorrection(level, model, pert)
    u1, v1 = corr(x)
    du1, dv1 = corr.derivative(x)
    u0, v0 = wavefunction(level, model, x)
    m, eps = model.m, level.eps
    lx = pert.lam * np.asarray(x, dtype=float)
    return Spinor(-dv1 + (m - eps) * u1 + lx * u0, du1 - (m + eps) * v1 + lx * v0)


def shift_closed_form(k, eps, ma):
    """Second-order shift at ``a = 1, lambda = 1``; broadcasts over arrays."""
    k = np.asarray(k, dtype=float)
    eps = np.asarray(eps, dtype=float)
    k2 = k * k
    bracket = 2.0 * k2 * (ma + 3.0) * (4.0 * eps * eps - 6.0 * ma - 3.0) - 15.0 * ma * ma * (2.0 * ma + 1.0)
    return ma * bracket / (24.0 * k2 * k2 * eps * (2.0 * eps * eps + ma))


def dl_shift_quadrature(level: Level, model: BagModel, pert: Perturbation, order: int | None = None) -> float:
    """``int V psi1 . psi0 dx`` by Gauss-Legendre quadrature."""
    a = model.a
    k = level.k * a
    val = _quadrature_dimensionless(np.array([k]), np.array([level.eps * a]),
                                    np.array([level.N * math.sqrt(a)]), model.ma,
                                    _phase(level.parity), order)
    return float(val[0]) * pert.lam ** 2 * a ** 3


def _quadrature_dimensionless(k, e, N, ma, phase, order=None):
    """Shift by quadrature for a ladder of one parity at ``a = lambda = 1``."""
    if order is None:
        order = quadrature.order_for(float(np.max(k)))
    x, w = quadrature.nodes(order)
    k, e, N = k[:, None], e[:, None], N[:, None]
    u1, v1 = _spinor(x, k, e, ma, N, phase)
    u0, v0 = _unperturbed(x, k, e, ma, N, phase)
    return (x * (u1 * u0 + v1 * v0)) @ w


def _agree(closed: float, quad: float, scale: float) -> bool:
    return abs(closed - quad) <= _DUALITY_RTOL * max(abs(closed), abs(quad)) + 1e-15 * scale


def dl_shift(level: Level, model: BagModel, pert: Perturbation, strict: bool = True) -> float:
    """Second-order shift of ``level`` with no exclusion on intermediates.

    The closed form is returned.  The quadrature of the first-order spinor
    is evaluated alongside; a mismatch beyond ``1e-8`` relative raises
    :class:`DLConsistencyError` when ``strict``.
    """
    a = model.a
    closed = float(shift_closed_form(level.k * a, level.eps * a, model.ma)) * pert.lam ** 2 * a ** 3
    quad = dl_shift_quadrature(level, model, pert)
    if strict and not _agree(closed, quad, pert.lam ** 2 * a ** 3):
        raise DLConsistencyError(f"closed form {closed!r} vs quadrature {quad!r} for {level.label}")
    return closed


def dl_total(model: BagModel, pert: Perturbation, trunc: Truncation | None = None) -> ShiftReport:
    """``0++`` plus every sea level, each shifted by the closed form.

    Sea levels are summed as ``sum_n [W(n+-) + W(n--)]`` in increasing
    ``n``, the same order as the intermediate-state route.
    """
    trunc = trunc or Truncation()
    a, ma = model.a, model.ma
    scale = pert.lam ** 2 * a ** 3
    branches = {
        (Parity.EVEN, Sign.POSITIVE): solve_branch(ma, Parity.EVEN, Sign.POSITIVE, 1),
        (Parity.EVEN, Sign.NEGATIVE): solve_branch(ma, Parity.EVEN, Sign.NEGATIVE, trunc.n_max),
        (Parity.ODD, Sign.NEGATIVE): solve_branch(ma, Parity.ODD, Sign.NEGATIVE, trunc.n_max),
    }
    per_level = {}
    worst = 0.0
    for (parity, sign), br in branches.items():
        closed = shift_closed_form(br.k, br.eps, ma)
        quad = _quadrature_dimensionless(br.k, br.eps, br.N, ma, _phase(parity))
        for n in range(br.k.size):
            c, q = float(closed[n]), float(quad[n])
            if not _agree(c, q, 1.0):
                worst = max(worst, abs(c - q) / max(abs(c), abs(q)))
            per_level[f"{n}{parity.symbol}{sign.symbol}"] = c * scale

    w_bound = per_level["0++"]
    rows = [
        (per_level[f"{n}+-"] + per_level[f"{n}--"]) / scale if scale else 0.0
        for n in range(trunc.n_max)
    ]
    w_vac = 0.0
    for r in rows:
        w_vac += r
    w_vac *= scale
    if trunc.tail_strategy == "none":
        tail, exponent = 0.0, float("nan")
    else:
        tail, exponent = power_law_tail(rows)
    diagnostics = {
        "n_max": trunc.n_max,
        "tail_tol": trunc.tail_tol,
        "outer_tail": tail,
        "outer_exponent": exponent,
        "converged": bool(tail <= trunc.tail_tol),
        "quadrature_mismatch": worst,
        "quadrature_ok": worst == 0.0,
    }
    return ShiftReport.build(w_bound, w_vac, per_level, tail * abs(scale), "dalgarno-lewis", diagnostics)


def nonrel_shift(model: BagModel, pert: Perturbation) -> float:
    """Large-mass limit for the ground state: ``lam^2 m (4 (ka)^2 - 15) / (24 k^4)``
    with ``ka = pi/2``."""
    if not model.m > 0.0:
        raise ValueError("the nonrelativistic limit needs m > 0")
    k = math.pi / (2.0 * model.a)
    return pert.lam ** 2 * model.m * (4.0 * (k * model.a) ** 2 - 15.0) / (24.0 * k ** 4)
