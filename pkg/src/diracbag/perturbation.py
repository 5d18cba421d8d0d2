"""Second-order shifts of the bound particle plus its Dirac sea.

Two summation schemes are implemented.  ``pauli`` keeps the exclusion
principle: intermediate states are unoccupied positive-energy levels only.
``free`` ignores it: every level is shifted as in single-particle quantum
mechanics, with all levels of both signs as intermediates.  The totals of
the two schemes agree formally but not numerically; the difference is the
value that one particular ordering assigns to a conditionally convergent
double series, which :func:`rearrangement_demo` exposes directly.

Internally everything runs at ``a = 1, lambda = 1``; shifts scale as
``lambda**2 a**3``.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .matrix_elements import Perturbation, dipole_dimensionless
from .spectrum import BagModel, Branch, Level, Parity, Sign, parse_label, solve_branch

__all__ = [
    "Truncation",
    "ShiftReport",
    "PairingScheme",
    "RearrangementTrace",
    "kernel_f",
    "shift_level_pauli",
    "shift_level_free",
    "method_I_total",
    "method_II_total",
    "cross_term_pairs",
    "rearrangement_demo",
    "polarizability",
    "power_law_tail",
]

_TAIL_INFLATION = 2.0
_MAX_WINDOW_FACTOR = 64

GROUND = (0, Parity.EVEN, Sign.POSITIVE)


@dataclass(frozen=True)
class Truncation:
    """Summation control.

    ``n_max`` is the number of sea levels kept per parity and the starting
    width of every intermediate-state window (counted past the target's own
    index).  ``tail_tol`` is in units of ``lambda**2 a**3``.
    """

    n_max: int = 200
    tail_tol: float = 1e-10
    tail_strategy: str = "power-law-bound"

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if not self.tail_tol > 0.0:
            raise ValueError("tail_tol must be positive")
        if self.tail_strategy not in ("power-law-bound", "none"):
            raise ValueError(f"unknown tail strategy {self.tail_strategy!r}")


@dataclass(frozen=True)
class ShiftReport:
    w_bound: float
    w_vac: float
    w_total: float
    per_level: dict[str, float]
    tail_estimate: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.w_total != self.w_bound + self.w_vac:
            raise ValueError("w_total must equal w_bound + w_vac")
        if not self.tail_estimate >= 0.0:
            raise ValueError("tail_estimate must be non-negative")

    @classmethod
    def build(cls, w_bound, w_vac, per_level, tail_estimate, method, diagnostics=None):
        w_bound, w_vac = float(w_bound), float(w_vac)
        return cls(
            w_bound=w_bound,
            w_vac=w_vac,
            w_total=w_bound + w_vac,
            per_level=dict(per_level),
            tail_estimate=float(tail_estimate),
            method=method,
            diagnostics=dict(diagnostics or {}),
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "w_bound": self.w_bound,
            "w_vac": self.w_vac,
            "w_total": self.w_total,
            "tail_estimate": self.tail_estimate,
            "per_level": dict(self.per_level),
            "diagnostics": dict(self.diagnostics),
        }


def kernel_f(x, pert: Perturbation, model: BagModel):
    """``-lambda**2 a**3 / (pi**5 x**5)``, odd in ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise ValueError("kernel_f has a pole at x = 0")
    x2 = x * x
    val = -(pert.lam ** 2) * model.a ** 3 / (math.pi ** 5 * (x * x2 * x2))
    return float(val) if val.ndim == 0 else val


def power_law_tail(terms, inflate: float = _TAIL_INFLATION,
                   p_min: float = 2.0, p_max: float = 8.0) -> tuple[float, float]:
    """Bound on ``sum_{n >= N} |t_n|`` from the computed ``t_0 .. t_{N-1}``.

    The decay exponent is fitted on the upper half of the terms and
    clipped to ``[p_min, p_max]``; the constant is the largest
    ``|t_n| (n+1)**p`` there, inflated.  Returns ``(bound, exponent)``.
    """
    t = np.abs(np.asarray(terms, dtype=float))
    N = t.size
    if N == 0:
        return 0.0, float("nan")
    lo = N // 2
    x = np.arange(lo, N, dtype=float) + 1.0
    y = t[lo:]
    nz = y > 0.0
    if not nz.any():
        return 0.0, float("nan")
    if nz.sum() >= 3:
        slope = np.polyfit(np.log(x[nz]), np.log(y[nz]), 1)[0]
        p = float(np.clip(-slope, p_min, p_max))
    else:
        p = p_min
    C = inflate * float(np.max(y * x ** p))
    return C * N ** (1.0 - p) / (p - 1.0), p


def _tower_tail(terms: np.ndarray, gaps: np.ndarray) -> float:
    """Bound on the omitted part of one intermediate tower.

    Terms fall off like ``|gap|**-5``; the constant is fitted over the last
    tenth of the window and inflated, the spacing of the last two gaps
    bounds all later spacings from below.
    """
    if terms.size < 2:
        return float(np.sum(np.abs(terms)))
    g = np.abs(gaps)
    span = max(10, terms.size // 10)
    C = _TAIL_INFLATION * float(np.max(np.abs(terms[-span:]) * g[-span:] ** 5))
    spacing = g[-1] - g[-2]
    if not spacing > 0.0:
        spacing = 0.5 * math.pi
    return C / (4.0 * spacing * g[-1] ** 4)


class _Ladders:
    """Per-call store of solved branches at ``a = 1``; never shared."""

    def __init__(self, ma: float):
        self.ma = float(ma)
        self._cache: dict[tuple[Parity, Sign], Branch] = {}

    def branch(self, parity: Parity, sign: Sign, count: int) -> Branch:
        have = self._cache.get((parity, sign))
        if have is None or have.k.size < count:
            size = count if have is None else max(count, 2 * have.k.size)
            have = solve_branch(self.ma, parity, sign, size)
            self._cache[(parity, sign)] = have
        return Branch(have.k[:count], have.eps[:count], have.N[:count])

    def level(self, key) -> tuple[float, float, float]:
        n, parity, sign = key
        br = self.branch(parity, sign, n + 1)
        return float(br.k[n]), float(br.eps[n]), float(br.N[n])


def _key_of(item) -> tuple[int, Parity, Sign]:
    if isinstance(item, Level):
        return item.key
    if isinstance(item, str):
        return parse_label(item)
    n, parity, sign = item
    return int(n), parity, sign


def _label(key) -> str:
    n, parity, sign = key
    return f"{n}{parity.symbol}{sign.symbol}"


def _inner_shift(lad: _Ladders, key, signs, excluded, trunc: Truncation, budget: float):
    """Dimensionless second-order shift of one level and its tail bound.

    ``signs`` selects the intermediate towers, ``excluded`` holds keys of
    occupied levels that may not be used as intermediates.  The window of
    intermediate indices grows until the tail bound meets ``budget``.
    """
    n, parity, _ = key
    k0, e0, N0 = lad.level(key)
    other = parity.flipped()
    window = trunc.n_max
    cap = _MAX_WINDOW_FACTOR * trunc.n_max
    while True:
        total, tail = 0.0, 0.0
        for sign in signs:
            br = lad.branch(other, sign, n + window)
            keep = np.ones(br.k.size, dtype=bool)
            for (xn, xp, xs) in excluded:
                if xp is other and xs is sign and xn < keep.size:
                    keep[xn] = False
            k, eps, N = br.k[keep], br.eps[keep], br.N[keep]
            if parity is Parity.EVEN:
                V = dipole_dimensionless(k0, e0, N0, k, eps, N, lad.ma)
            else:
                V = dipole_dimensionless(k, eps, N, k0, e0, N0, lad.ma)
            gaps = e0 - eps
            terms = V * V / gaps
            total += float(np.sum(terms))
            if trunc.tail_strategy != "none":
                tail += _tower_tail(terms, gaps)
        if tail <= budget or window >= cap or trunc.tail_strategy == "none":
            return total, tail, window
        grow = (tail / budget) ** 0.25
        window = min(cap, int(math.ceil(window * grow * 1.05)) + 1)


def _level_budget(trunc: Truncation) -> float:
    # half the tolerance is shared evenly by the 2*n_max + 1 inner sums
    return 0.5 * trunc.tail_tol / (2 * trunc.n_max + 1)


def _pauli_excluded(occupied) -> set:
    if occupied is None:
        return {GROUND}
    return {_key_of(o) for o in occupied if _key_of(o)[2] is Sign.POSITIVE}


def shift_level_pauli(model: BagModel, pert: Perturbation, target, occupied=None,
                      trunc: Truncation | None = None) -> float:
    """Shift of an occupied level with only empty positive-energy intermediates.

    ``occupied`` lists labels (or levels) of occupied positive-energy
    states; the negative-energy sea is always occupied.  The default is the
    ground configuration, ``0++`` plus the sea.
    """
    trunc = trunc or Truncation()
    key = _key_of(target)
    excluded = _pauli_excluded(occupied)
    if key[2] is Sign.POSITIVE and key not in excluded:
        raise ValueError(f"target {_label(key)} is not occupied")
    lad = _Ladders(model.ma)
    val, _, _ = _inner_shift(lad, key, (Sign.POSITIVE,), excluded, trunc, _level_budget(trunc))
    return val * pert.lam ** 2 * model.a ** 3


def shift_level_free(model: BagModel, pert: Perturbation, target,
                     trunc: Truncation | None = None) -> float:
    """Single-particle shift of any level, every other level an intermediate."""
    trunc = trunc or Truncation()
    key = _key_of(target)
    lad = _Ladders(model.ma)
    val, _, _ = _inner_shift(lad, key, (Sign.POSITIVE, Sign.NEGATIVE), set(), trunc,
                             _level_budget(trunc))
    return val * pert.lam ** 2 * model.a ** 3


def _sea_keys(n: int):
    return (n, Parity.EVEN, Sign.NEGATIVE), (n, Parity.ODD, Sign.NEGATIVE)


def _total(model, pert, trunc, signs, excluded, method) -> ShiftReport:
    trunc = trunc or Truncation()
    scale = pert.lam ** 2 * model.a ** 3
    lad = _Ladders(model.ma)
    budget = _level_budget(trunc)
    per_level = {}

    w_bound, inner_tail, widest = _inner_shift(lad, GROUND, signs, excluded, trunc, budget)
    per_level[_label(GROUND)] = w_bound * scale

    # inner sums complete before the sea index advances; reduction in index order
    outer_terms = []
    for n in range(trunc.n_max):
        row = 0.0
        for key in _sea_keys(n):
            val, tail, window = _inner_shift(lad, key, signs, excluded, trunc, budget)
            per_level[_label(key)] = val * scale
            row += val
            inner_tail += tail
            widest = max(widest, window)
        outer_terms.append(row)
    w_vac = 0.0
    for t in outer_terms:
        w_vac += t

    if trunc.tail_strategy == "none":
        outer_tail, exponent = 0.0, float("nan")
    else:
        outer_tail, exponent = power_law_tail(outer_terms)
    tail = inner_tail + outer_tail
    diagnostics = {
        "n_max": trunc.n_max,
        "tail_tol": trunc.tail_tol,
        "inner_tail": inner_tail,
        "outer_tail": outer_tail,
        "outer_exponent": exponent,
        "widest_window": widest,
        "converged": bool(tail <= trunc.tail_tol),
    }
    return ShiftReport.build(w_bound * scale, w_vac * scale, per_level, tail * scale, method, diagnostics)


def method_I_total(model: BagModel, pert: Perturbation, trunc: Truncation | None = None) -> ShiftReport:
    """Exclusion-respecting total for ``0++`` plus the filled sea."""
    return _total(model, pert, trunc, (Sign.POSITIVE,), {GROUND}, "pauli")


def method_II_total(model: BagModel, pert: Perturbation, trunc: Truncation | None = None) -> ShiftReport:
    """Exclusion-ignoring total: each level's full intermediate sum first,
    then the sum over sea levels in order of increasing index."""
    return _total(model, pert, trunc, (Sign.POSITIVE, Sign.NEGATIVE), set(), "free")


def cross_term_pairs(model: BagModel, pert: Perturbation, count: int) -> list[tuple[str, float, float]]:
    """Exclusion-violating cross terms between ``0++`` and the sea.

    For each of the first ``count`` sea levels ``-j`` (by ``|eps|``) returns
    the term ``|V_{-j,1}|**2/(eps_1 - eps_-j)`` of the bound level's free
    shift and ``|V_{1,-j}|**2/(eps_-j - eps_1)`` of the sea level's free
    shift.  Equal-parity partners contribute two exact zeros.
    """
    from .matrix_elements import dipole_element
    from .spectrum import enumerate_levels, solve_level

    ground = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
    out = []
    for lvl in enumerate_levels(model, count, Sign.NEGATIVE):
        v_up = dipole_element(ground, lvl, pert, model)
        v_down = dipole_element(lvl, ground, pert, model)
        out.append((lvl.label, v_up * v_up / (ground.eps - lvl.eps), v_down * v_down / (lvl.eps - ground.eps)))
    return out


@dataclass(frozen=True)
class PairingScheme:
    """Traversal of the ``(n, n')`` lattice of the sea-sea double series.

    ``row-pairs``      squares ``[0,K]x[0,K]``: every term meets its transpose
    ``column-pairs``   rectangles ``[0,K]x[0,2K]``: ``(n, n-d)`` meets ``(n, n+d)``
    ``n-prime-first``  each row ``n`` summed over all ``n'`` before the next
    ``n-first``        each column ``n'`` summed over all ``n`` before the next
    ``diagonal-band``  rectangles ``[0,K]x[0,K+band]``
    """

    kind: str
    band: int = 0

    KINDS = ("row-pairs", "column-pairs", "n-prime-first", "n-first", "diagonal-band")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown pairing scheme {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "PairingScheme":
        m = re.fullmatch(r"\s*diagonal-band\(\s*(-?\d+)\s*\)\s*", text)
        if m:
            return cls("diagonal-band", int(m.group(1)))
        return cls(text.strip())

    def __str__(self):
        return f"diagonal-band({self.band})" if self.kind == "diagonal-band" else self.kind


@dataclass(frozen=True)
class RearrangementTrace:
    scheme: PairingScheme
    partial_sums: np.ndarray
    limit: float
    tail_estimate: float


def _g(d, pert, model):
    """Lattice term at ``n - n' = d``: ``f(d + 1/2) + f(d - 1/2)``."""
    d = np.asarray(d, dtype=float)
    return kernel_f(d + 0.5, pert, model) + kernel_f(d - 0.5, pert, model)


def _rectangle_sum(K: int, C: int, g_pos: np.ndarray, g_neg: np.ndarray) -> float:
    # sum over n in [0,K], n' in [0,C], grouped by d = n - n' with +-d together
    if K < 0 or C < 0:
        return 0.0
    dmax = max(K, C)
    d = np.arange(1, dmax + 1)
    cnt_pos = np.clip(np.minimum(K, C + d) - d + 1, 0, None)
    cnt_neg = np.clip(np.minimum(K, C - d) + 1, 0, None)
    pair = cnt_pos * g_pos[:dmax] + cnt_neg * g_neg[:dmax]
    return float(np.sum(pair))


def _row_sums(count: int, pert, model, trunc: Truncation, transpose: bool):
    """Complete sums along rows (or columns), each with its tail bound."""
    scale = pert.lam ** 2 * model.a ** 3 / math.pi ** 5
    window = trunc.n_max
    budget = _level_budget(trunc)
    # |g(d)| <= 2 |f(|d| - 1/2)|; sum_{|d| > W} bounded by the integral from W - 1/2
    while 2.0 * scale / (4.0 * (window - 0.5) ** 4) > budget and window < _MAX_WINDOW_FACTOR * trunc.n_max:
        window *= 2
    tail_each = 2.0 * scale / (4.0 * (window - 0.5) ** 4)
    rows = np.empty(count)
    for n in range(count):
        other = np.arange(0, n + window + 1)
        d = (other - n) if transpose else (n - other)
        rows[n] = float(np.sum(_g(d, pert, model)))
    return rows, tail_each


def rearrangement_demo(pert: Perturbation, model: BagModel, scheme: PairingScheme | str,
                       terms: int, trunc: Truncation | None = None) -> RearrangementTrace:
    """Partial sums of ``sum_{n,n'} [f(n-n'+1/2) + f(n-n'-1/2)]`` in one order.

    Step ``K`` of the rectangle schemes covers ``n <= K``; step ``K`` of the
    row/column schemes adds the ``K``-th complete row/column.
    """
    if model.m != 0.0:
        raise ValueError("the rearrangement demonstrator uses the massless kernel")
    if terms < 1:
        raise ValueError("terms must be at least 1")
    if isinstance(scheme, str):
        scheme = PairingScheme.parse(scheme)
    trunc = trunc or Truncation()

    if scheme.kind in ("n-prime-first", "n-first"):
        rows, tail_each = _row_sums(terms, pert, model, trunc, scheme.kind == "n-first")
        partial = np.cumsum(rows)
        outer, _ = power_law_tail(rows)
        return RearrangementTrace(scheme, partial, float(partial[-1]), terms * tail_each + outer)

    edge = {"row-pairs": lambda K: K,
            "column-pairs": lambda K: 2 * K,
            "diagonal-band": lambda K: K + scheme.band}[scheme.kind]
    dmax = max(terms - 1, edge(terms - 1)) + 1
    d = np.arange(1, dmax + 1, dtype=float)
    g_pos, g_neg = _g(d, pert, model), _g(-d, pert, model)
    partial = np.array([_rectangle_sum(K, edge(K), g_pos, g_neg) for K in range(terms)])
    half = partial[(terms - 1) // 2]
    return RearrangementTrace(scheme, partial, float(partial[-1]), float(abs(partial[-1] - half)))


def polarizability(report: ShiftReport, pert: Perturbation) -> float:
    """``P = -2 W / E**2`` from a total shift computed with ``lambda = -q E``."""
    if pert.E_field is None:
        raise ValueError("polarizability needs the perturbation built from a charge and a field")
    if pert.E_field == 0.0:
        raise ValueError("polarizability is undefined at zero field")
    return -2.0 * report.w_total / pert.E_field ** 2
