"""Dyadic maximal operators over a family of shifted grids.

Each operator is a pointwise max, over every level of every grid, of a
per-cube quantity spread back onto the cells of the cube.  With the ``3**n``
shifted grids these are comparable to the operators over all cubes.
"""

from __future__ import annotations

import numpy as np

from .dyadic import GridFunction, all_partitions, default_grids
from .orlicz import orlicz_norms
from .young import YoungFunction

__all__ = ["maximal", "orlicz_maximal", "bisublinear_maximal", "frac_maximal_bilinear"]


def _pointwise_max(parts, per_part, shape) -> np.ndarray:
    out = np.zeros(shape)
    for P, vals in zip(parts, per_part):
        np.maximum(out, P.spread(vals), out=out)
    return out


def maximal(f: GridFunction, grids=None) -> GridFunction:
    """``Mf(x) = max_{Q ∋ x} avg_Q |f|``."""
    parts = all_partitions(default_grids(f, grids))
    a = np.abs(f.values)
    return GridFunction(f.grid, _pointwise_max(parts, (P.means(a) for P in parts), a.shape))


def orlicz_maximal(f: GridFunction, phi: YoungFunction, grids=None) -> GridFunction:
    """``M_phi f(x) = max_{Q ∋ x} ||f||_{phi,Q}``."""
    parts = all_partitions(default_grids(f, grids))
    norms = orlicz_norms(f.values, parts, phi)
    return GridFunction(f.grid, _pointwise_max(parts, norms, f.values.shape))


def bisublinear_maximal(f: GridFunction, g: GridFunction, phi1: YoungFunction, phi2: YoungFunction,
                        grids=None) -> GridFunction:
    """``max_{Q ∋ x} ||f||_{phi1,Q} ||g||_{phi2,Q}``."""
    parts = all_partitions(default_grids(f, grids))
    nf = orlicz_norms(f.values, parts, phi1)
    ng = orlicz_norms(g.values, parts, phi2)
    return GridFunction(f.grid, _pointwise_max(parts, (a * b for a, b in zip(nf, ng)), f.values.shape))


def frac_maximal_bilinear(f: GridFunction, g: GridFunction, alpha: float, grids=None) -> GridFunction:
    """``max_{Q ∋ x} |Q|^(alpha/n) avg_Q |f| avg_Q |g|`` with ``|Q|`` the clipped measure."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    parts = all_partitions(default_grids(f, grids))
    a, b = np.abs(f.values), np.abs(g.values)
    n, vol = f.grid.n, float(f.grid.N**f.grid.n)

    def per(P):
        return (P.counts / vol) ** (alpha / n) * P.means(a) * P.means(b)

    return GridFunction(f.grid, _pointwise_max(parts, (per(P) for P in parts), a.shape))
