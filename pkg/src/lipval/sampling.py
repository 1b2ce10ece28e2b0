"""Seeded generators of random rational test objects."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .circle_fn import Arc, ArcSet, PLFunction, as_fraction, lip


def random_plfunction(rng: np.random.Generator, max_nodes: int = 32, denom: int = 64,
                      value_bound=2, value_denom: int = 16, slope_bound=None) -> PLFunction:
    """Random PL function with nodes on the ``1/denom`` grid.

    Values are multiples of ``1/value_denom`` in ``[-value_bound, value_bound]``;
    with ``slope_bound`` the values are scaled towards 0 until the per-turn
    Lipschitz constant fits.
    """
    k = int(rng.integers(1, min(max_nodes, denom) + 1))
    xs = sorted(int(x) for x in rng.choice(denom, size=k, replace=False))
    vb = as_fraction(value_bound)
    top = int(vb * value_denom)
    ys = [Fraction(int(y), value_denom) for y in rng.integers(-top, top + 1, size=k)]
    f = PLFunction.from_breakpoints([(Fraction(x, denom), y) for x, y in zip(xs, ys)])
    if slope_bound is not None and not f.is_constant():
        L = lip(f)
        if L > as_fraction(slope_bound):
            f = f * (as_fraction(slope_bound) / L)
    return f


def random_symmetric(rng: np.random.Generator, max_nodes: int = 8, denom: int = 64,
                     value_bound=2, value_denom: int = 16) -> PLFunction:
    """Random PL function symmetric about ``s = 1/2``."""
    half = denom // 2
    k = int(rng.integers(2, min(max_nodes, half + 1) + 1))
    xs = sorted(int(x) for x in rng.choice(half + 1, size=k, replace=False))
    top = int(as_fraction(value_bound) * value_denom)
    nodes = {}
    for x, y in zip(xs, rng.integers(-top, top + 1, size=k)):
        s, v = Fraction(x, denom), Fraction(int(y), value_denom)
        nodes[s] = v
        nodes[(1 - s) % 1] = v
    return PLFunction.from_breakpoints(nodes.items())


def random_arcset(rng: np.random.Generator, max_arcs: int = 4, denom: int = 64) -> ArcSet:
    k = int(rng.integers(1, max_arcs + 1))
    arcs = []
    for _ in range(k):
        a = int(rng.integers(0, denom))
        length = int(rng.integers(1, denom // 4 + 1))
        arcs.append(Arc.from_length(Fraction(a, denom), Fraction(length, denom)))
    return ArcSet(arcs)
