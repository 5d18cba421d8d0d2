"""Stationary states of the one-dimensional Dirac bag.

The particle is confined to ``[-a, a]`` by an infinitely strong Lorentz
scalar wall.  With ``alpha = sigma_y`` and ``beta = sigma_z`` the Dirac
equation is real, and the two spinor components are

    even:  u = N cos kx,   v = -N k sin kx / (eps + m)
    odd:   u = N sin kx,   v =  N k cos kx / (eps + m)

with ``eps**2 = k**2 + m**2``.  The wall condition ``u(+-a) = -+v(+-a)``
gives ``tan(ka) = (+-eps + m) / k`` (upper sign for even parity).

Everything is solved at ``a = 1`` and rescaled on the way out, so a
branch of the spectrum depends on the single number ``ma``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "Parity",
    "Sign",
    "BagModel",
    "Level",
    "Spinor",
    "Branch",
    "BracketError",
    "ConvergenceError",
    "solve_branch",
    "solve_level",
    "massless_level",
    "wavefunction",
    "mirror",
    "enumerate_levels",
    "parse_label",
]

# bisection stops at this width (units of pi/a), then one Newton step
_BISECT_WIDTH = 1e-13 * math.pi
_RESIDUAL_TOL = 1e-10
_MAX_BISECTIONS = 200


class BracketError(RuntimeError):
    """The quantization function did not change sign across a branch."""


class ConvergenceError(RuntimeError):
    """A root was bracketed but not resolved to the required tolerance."""


class Parity(enum.Enum):
    EVEN = 1
    ODD = -1

    @property
    def eta(self) -> int:
        return self.value

    @property
    def symbol(self) -> str:
        return "+" if self is Parity.EVEN else "-"

    def flipped(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN


class Sign(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1

    @property
    def symbol(self) -> str:
        return "+" if self is Sign.POSITIVE else "-"

    def flipped(self) -> "Sign":
        return Sign.NEGATIVE if self is Sign.POSITIVE else Sign.POSITIVE


@dataclass(frozen=True)
class BagModel:
    """Rest mass ``m`` (inverse length) and bag half-width ``a``."""

    m: float
    a: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 0.0):
            raise ValueError(f"mass must be finite and non-negative, got {self.m!r}")
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ValueError(f"half-width must be finite and positive, got {self.a!r}")

    @classmethod
    def from_ma(cls, ma: float, a: float = 1.0) -> "BagModel":
        return cls(m=ma / a, a=a)

    @property
    def ma(self) -> float:
        return self.m * self.a


@dataclass(frozen=True)
class Level:
    """One stationary state ``n^{ps}``.

    ``k``, ``eps`` and ``N`` are in physical units (inverse length,
    inverse length, inverse square-root length).  ``m`` is carried along
    so that the spinor and its mirror partner can be rebuilt from the
    level alone.
    """

    n: int
    parity: Parity
    sign: Sign
    k: float
    eps: float
    N: float
    m: float = field(default=0.0)

    @property
    def label(self) -> str:
        return f"{self.n}{self.parity.symbol}{self.sign.symbol}"

    @property
    def key(self) -> tuple[int, Parity, Sign]:
        return (self.n, self.parity, self.sign)


class Spinor(NamedTuple):
    u: float | np.ndarray
    v: float | np.ndarray


class Branch(NamedTuple):
    """Dimensionless (``a = 1``) ladder of one (parity, sign) branch."""

    k: np.ndarray
    eps: np.ndarray
    N: np.ndarray


def _rhs_ratio(k, ma, sigma):
    """``(sigma*E + m)/k`` with ``E = sqrt(k**2 + m**2)``, finite at ``m = 0``."""
    if sigma > 0:
        r = ma / k
        return r + np.sqrt(1.0 + r * r)
    return -k / (ma + np.sqrt(k * k + ma * ma))


def _angle_residual(k, ma, sigma, offset):
    # k - arctan(rhs/k) - offset: increasing in k with slope >= 1, no poles
    return k - np.arctan(_rhs_ratio(k, ma, sigma)) - offset


def _angle_slope(k, ma, sigma):
    q = _rhs_ratio(k, ma, sigma)
    E = np.sqrt(k * k + ma * ma)
    dq = -sigma * ma * q / (E * k)
    return 1.0 - dq / (1.0 + q * q)


def quantization_residual(k, eps, ma, parity: Parity):
    """Cross-multiplied form of ``tan(ka) - (+-eps + m)/k``, normalized.

    Returns ``(k sin k - R cos k) / hypot(k, R)`` at ``a = 1``, which is
    ``sin`` of the angular distance to the nearest root.
    """
    R = parity.eta * eps + ma
    return (k * np.sin(k) - R * np.cos(k)) / np.hypot(k, R)


def solve_branch(ma: float, parity: Parity, sign: Sign, count: int) -> Branch:
    """Solve the first ``count`` roots of one branch at ``a = 1``.

    For ``sigma = eta * sign > 0`` the right side of the quantization
    condition exceeds one and the n-th root lies in ``(n pi, n pi + pi/2)``;
    otherwise it lies in ``(-1, 0)`` and the root is in
    ``(n pi + pi/2, (n+1) pi)``.  Each bracket holds exactly one root.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    ma = float(ma)
    if not (math.isfinite(ma) and ma >= 0.0):
        raise ValueError(f"ma must be finite and non-negative, got {ma!r}")
    n = np.arange(count, dtype=float)
    sigma = parity.eta * sign.value
    if sigma > 0:
        lo = n * math.pi
        hi = lo + 0.5 * math.pi
        offset = n * math.pi
        lo[lo == 0.0] = 1e-300
    else:
        lo = n * math.pi + 0.5 * math.pi
        hi = (n + 1.0) * math.pi
        offset = (n + 1.0) * math.pi

    with np.errstate(over="ignore", divide="ignore"):
        f_lo = _angle_residual(lo, ma, sigma, offset)
        f_hi = _angle_residual(hi, ma, sigma, offset)
    if count and not (np.all(f_lo < 0.0) and np.all(f_hi > 0.0)):
        raise BracketError(f"root not bracketed on branch {parity.symbol}{sign.symbol} at ma={ma}")

    # width floor of a few ulps: at large ka the absolute target is below float spacing
    target = np.maximum(_BISECT_WIDTH, 4.0 * np.spacing(hi))
    for _ in range(_MAX_BISECTIONS):
        if not count or np.all(hi - lo <= target):
            break
        mid = 0.5 * (lo + hi)
        with np.errstate(over="ignore", divide="ignore"):
            f_mid = _angle_residual(mid, ma, sigma, offset)
        left = f_mid < 0.0
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    else:
        raise ConvergenceError(f"bisection did not narrow on branch {parity.symbol}{sign.symbol} at ma={ma}")

    k = 0.5 * (lo + hi)
    k = k - _angle_residual(k, ma, sigma, offset) / _angle_slope(k, ma, sigma)
    E = np.sqrt(k * k + ma * ma)
    eps = sign.value * E
    res = quantization_residual(k, eps, ma, parity)
    if count and np.max(np.abs(res)) > _RESIDUAL_TOL:
        worst = int(np.argmax(np.abs(res)))
        raise ConvergenceError(
            f"quantization residual {res[worst]:.3e} at n={worst} on branch "
            f"{parity.symbol}{sign.symbol}, ma={ma}"
        )
    N = np.sqrt(eps * (eps + ma) / (ma + 2.0 * eps * eps))
    return Branch(k=k, eps=eps, N=N)


def _level_from_dimensionless(model: BagModel, n, parity, sign, k, eps, N) -> Level:
    a = model.a
    return Level(
        n=int(n),
        parity=parity,
        sign=sign,
        k=float(k) / a,
        eps=float(eps) / a,
        N=float(N) / math.sqrt(a),
        m=model.m,
    )


def solve_level(model: BagModel, parity: Parity, sign: Sign, n: int) -> Level:
    """The ``(n+1)``-th root of the quantization condition on one branch."""
    if n < 0:
        raise ValueError("n must be non-negative")
    br = solve_branch(model.ma, parity, sign, n + 1)
    return _level_from_dimensionless(model, n, parity, sign, br.k[n], br.eps[n], br.N[n])


def massless_level(a: float, parity: Parity, sign: Sign, n: int) -> Level:
    """Closed-form level of the ``m = 0`` bag.

    Even/positive and odd/negative sit at ``|eps| a = (n + 1/4) pi``; the
    other two branches at ``(n + 3/4) pi``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not a > 0.0:
        raise ValueError("half-width must be positive")
    shift = 0.25 if parity.eta * sign.value > 0 else 0.75
    k = (n + shift) * math.pi / a
    return Level(
        n=n, parity=parity, sign=sign, k=k, eps=sign.value * k,
        N=math.sqrt(0.5 / a), m=0.0,
    )


def wavefunction(level: Level, model: BagModel, x) -> Spinor:
    """Spinor ``(u, v)`` of ``level`` at ``x``; zero outside the bag."""
    x = np.asarray(x, dtype=float)
    k, eps, N, m = level.k, level.eps, level.N, level.m
    if level.parity is Parity.EVEN:
        u = N * np.cos(k * x)
        v = -N * k * np.sin(k * x) / (eps + m)
    else:
        u = N * np.sin(k * x)
        v = N * k * np.cos(k * x) / (eps + m)
    inside = np.abs(x) <= model.a
    u = np.where(inside, u, 0.0)
    v = np.where(inside, v, 0.0)
    if u.ndim == 0:
        return Spinor(float(u), float(v))
    return Spinor(u, v)


def mirror(level: Level) -> Level:
    """Partner with opposite parity and energy ``-eps``.

    The wavenumber is shared; only the normalization changes, by
    ``sqrt((eps - m)/(eps + m))``.
    """
    eps, m = level.eps, level.m
    N = level.N * math.sqrt((eps - m) / (eps + m))
    return Level(
        n=level.n,
        parity=level.parity.flipped(),
        sign=level.sign.flipped(),
        k=level.k,
        eps=-eps,
        N=N,
        m=m,
    )


def enumerate_levels(model: BagModel, count: int, sign: Sign) -> list[Level]:
    """The ``count`` levels of one energy sign, ordered by ``|eps|``.

    Parities interleave; an exact tie (never seen in practice) puts the
    even level first.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    candidates = []
    for parity in (Parity.EVEN, Parity.ODD):
        br = solve_branch(model.ma, parity, sign, count)
        for n in range(count):
            candidates.append((abs(br.eps[n]), 0 if parity is Parity.EVEN else 1, n, parity, br))
    candidates.sort(key=lambda c: (c[0], c[1]))
    return [
        _level_from_dimensionless(model, n, parity, sign, br.k[n], br.eps[n], br.N[n])
        for _, _, n, parity, br in candidates[:count]
    ]


def parse_label(label: str) -> tuple[int, Parity, Sign]:
    """Inverse of :attr:`Level.label`, e.g. ``"3-+"`` -> ``(3, ODD, POSITIVE)``."""
    label = label.strip()
    if len(label) < 3 or label[-1] not in "+-" or label[-2] not in "+-":
        raise ValueError(f"bad level label {label!r}")
    n = int(label[:-2])
    parity = Parity.EVEN if label[-2] == "+" else Parity.ODD
    sign = Sign.POSITIVE if label[-1] == "+" else Sign.NEGATIVE
    return n, parity, sign
