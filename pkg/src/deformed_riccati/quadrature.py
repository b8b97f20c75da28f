"""Composite Gauss-Legendre rules on the unit parameter interval."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(order: int, panels: int = 1):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[0, 1]``.

    Panels have equal length; nodes are returned in increasing order.
    """
    if order < 1 or panels < 1:
        raise ValueError("order and panels must be positive")
    x, w = _legendre(order)
    h = 1.0 / panels
    left = np.arange(panels) * h
    t = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    wt = np.tile(0.5 * h * w, panels)
    return t, wt
