"""Seeded test functions and weights used by probes, suites and tests."""

from __future__ import annotations

import numpy as np

from .dyadic import Cube, Grid, GridFunction, W_MIN

__all__ = [
    "indicator",
    "spike",
    "lognormal",
    "haar",
    "test_function",
    "FUNCTION_KINDS",
    "default_probes",
    "maxspike_weight",
]

FUNCTION_KINDS = ("indicator", "spike", "lognormal", "haar")


def indicator(grid: Grid, level: int, index) -> GridFunction:
    return GridFunction(grid, Cube(grid.standard, level, tuple(index)).mask().astype(float))


def spike(grid: Grid, cell, height: float = 1.0) -> GridFunction:
    v = np.zeros(grid.shape)
    v[tuple(cell)] = height
    return GridFunction(grid, v)


def lognormal(grid: Grid, rng: np.random.Generator, sigma: float = 1.0) -> GridFunction:
    return GridFunction(grid, np.exp(sigma * rng.standard_normal(grid.shape)))


def haar(grid: Grid, level: int, index, signed: bool = False) -> GridFunction:
    """Haar-like oscillation on a standard cube: +1 / -1 on its halves along the first axis.

    With ``signed=False`` the result is ``1 + 0.9 h`` restricted to the cube (nonnegative).
    """
    Q = Cube(grid.standard, level, tuple(index))
    v = np.zeros(grid.shape)
    sl = Q.slices()
    a, b = sl[0].start, sl[0].stop
    mid = (a + b) // 2
    block = np.zeros(v[sl].shape)
    block[: mid - a] = 1.0
    block[mid - a:] = -1.0
    v[sl] = block if signed else 1.0 + 0.9 * block
    return GridFunction(grid, v)


def _random_cube(grid: Grid, rng: np.random.Generator, max_level: int | None = None):
    top = grid.L if max_level is None else min(max_level, grid.L)
    level = int(rng.integers(0, top + 1))
    index = tuple(int(i) for i in rng.integers(0, 1 << level, size=grid.n))
    return level, index


def test_function(grid: Grid, rng: np.random.Generator, kind: str | None = None) -> GridFunction:
    """One nonnegative test function of the given kind (random kind when ``None``)."""
    kind = kind or FUNCTION_KINDS[int(rng.integers(len(FUNCTION_KINDS)))]
    if kind == "indicator":
        level, index = _random_cube(grid, rng, max_level=grid.L - 1)
        return indicator(grid, level, index)
    if kind == "spike":
        cell = tuple(int(i) for i in rng.integers(0, grid.N, size=grid.n))
        return spike(grid, cell, float(grid.N**grid.n))
    if kind == "lognormal":
        return lognormal(grid, rng, float(rng.uniform(0.5, 2.0)))
    if kind == "haar":
        level, index = _random_cube(grid, rng, max_level=grid.L - 1)
        return haar(grid, level, index)
    raise ValueError(f"unknown test function kind {kind!r}")


def default_probes(grid: Grid, seed: int = 0) -> list[GridFunction]:
    """Fixed probe set for operator-norm estimates: indicators, spikes, random fields, oscillations."""
    rng = np.random.default_rng(seed)
    N = grid.N
    out = [GridFunction.constant(grid)]
    for level in (1, grid.L // 2, grid.L - 1):
        out.append(indicator(grid, level, (0,) * grid.n))
    for pos in (0, N // 3, N // 2):
        out.append(spike(grid, (pos,) * grid.n))
    for _ in range(4):
        out.append(lognormal(grid, rng, 1.5))
    out.append(haar(grid, 0, (0,) * grid.n))
    out.append(haar(grid, grid.L // 2, (1,) * grid.n))
    return out


def maxspike_weight(grid: Grid, cell, r: float, grids=None) -> GridFunction:
    """``(M spike)**r``: an A_1 weight for ``0 < r < 1``."""
    from .maximal import maximal

    return (maximal(spike(grid, cell, float(grid.N**grid.n)), grids) ** r).as_weight(W_MIN)
