"""Fixed-order Gauss-Legendre rules for the smooth integrands on the bag."""

from __future__ import annotations

import functools
import math

import numpy as np

MIN_ORDER = 64


@functools.lru_cache(maxsize=64)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def order_for(wavenumber: float) -> int:
    """Rule order that resolves ``cos(2 k x)`` on ``[-1, 1]`` with margin.

    ``wavenumber`` is the largest ``k a`` in the integrand.
    """
    return max(MIN_ORDER, MIN_ORDER + int(math.ceil(1.25 * abs(wavenumber))))


def nodes(order: int, half_width: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-half_width, half_width]``."""
    if order < 1:
        raise ValueError("order must be positive")
    x, w = _legendre(int(order))
    return half_width * x, half_width * w


def integrate(func, half_width: float = 1.0, order: int = MIN_ORDER) -> float:
    x, w = nodes(order, half_width)
    return float(np.dot(w, func(x)))
