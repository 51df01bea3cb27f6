"""Shifted dyadic grids on the unit box and piecewise-constant grid functions.

A grid of depth ``L`` in dimension ``n`` has ``N = 2**L`` finest cells per
axis.  Shifted grids translate the standard grid by ``t/3`` per axis, with
the translation rounded to a whole number of finest cells, and clip every
cube to ``[0, 1)**n``.  Clipped cubes are unions of finest cells, so all
measures are exact integer cell counts.

Cubes are enumerated level-major, index-ascending.
"""

from __future__ import annotations

import functools
import itertools
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "Cube",
    "GridFunction",
    "Partition",
    "shifted_grids",
    "cells",
    "all_partitions",
    "default_grids",
    "average",
    "dilate3",
    "load",
    "store",
    "W_MIN",
]

W_MIN = 1e-12


@dataclass(frozen=True, order=True)
class Grid:
    n: int
    L: int
    thirds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n = 1, 2 are supported")
        if self.L < 0:
            raise ValueError("depth must be nonnegative")
        if not self.thirds:
            object.__setattr__(self, "thirds", (0,) * self.n)
        if len(self.thirds) != self.n or any(t not in (0, 1, 2) for t in self.thirds):
            raise ValueError("thirds must hold n entries in {0, 1, 2}")

    @property
    def N(self) -> int:
        return 1 << self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def sigma(self) -> tuple[float, ...]:
        return tuple(t / 3 for t in self.thirds)

    @property
    def shift_cells(self) -> tuple[int, ...]:
        return tuple(int(np.floor(t * self.N / 3 + 0.5)) for t in self.thirds)

    @property
    def standard(self) -> Grid:
        return Grid(self.n, self.L)

    def with_shift(self, thirds) -> Grid:
        return Grid(self.n, self.L, tuple(thirds))

    def partition(self, k: int) -> Partition:
        return _partition(self, k)

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "sigma": list(self.sigma), "shift_thirds": list(self.thirds)}


def shifted_grids(n: int, L: int) -> list[Grid]:
    """The ``3**n`` one-third-shifted grids, standard grid first."""
    return [Grid(n, L, t) for t in itertools.product((0, 1, 2), repeat=n)]


@dataclass(frozen=True, order=True)
class Cube:
    grid: Grid
    level: int
    index: tuple[int, ...]

    def bounds(self) -> tuple[tuple[int, int], ...]:
        """Clipped half-open cell ranges per axis."""
        size = 1 << (self.grid.L - self.level)
        out = []
        for j, s in zip(self.index, self.grid.shift_cells):
            lo = s + j * size
            out.append((max(lo, 0), min(lo + size, self.grid.N)))
        return tuple(out)

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in self.bounds())

    @property
    def ncells(self) -> int:
        return int(np.prod([b - a for a, b in self.bounds()]))

    @property
    def measure(self) -> float:
        return self.ncells / self.grid.N**self.grid.n

    @property
    def side(self) -> float:
        """Unclipped side length ``2**-level``."""
        return 2.0**-self.level

    @property
    def clipped(self) -> bool:
        return self.ncells != (1 << (self.grid.L - self.level)) ** self.grid.n

    def parent(self) -> Cube:
        if self.level == 0:
            raise ValueError("level-0 cube has no parent")
        return Cube(self.grid, self.level - 1, tuple(j >> 1 for j in self.index))

    def children(self) -> list[Cube]:
        if self.level == self.grid.L:
            return []
        out = []
        for bits in itertools.product((0, 1), repeat=self.grid.n):
            c = Cube(self.grid, self.level + 1, tuple(2 * j + b for j, b in zip(self.index, bits)))
            if c.ncells > 0:
                out.append(c)
        return out

    def contains(self, other: Cube) -> bool:
        """Index-sense ancestry (non-strict) within one grid."""
        if other.grid != self.grid or other.level < self.level:
            return False
        d = other.level - self.level
        return all((j >> d) == i for i, j in zip(self.index, other.index))

    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid.shape, dtype=bool)
        m[self.slices()] = True
        return m

    def to_dict(self) -> dict:
        return {"sigma": list(self.grid.sigma), "shift_thirds": list(self.grid.thirds),
                "level": self.level, "index": list(self.index)}


class Partition:
    """All level-``k`` cubes of one grid with vectorized reductions over them."""

    def __init__(self, grid: Grid, k: int):
        if not 0 <= k <= grid.L:
            raise ValueError(f"level {k} outside 0..{grid.L}")
        self.grid = grid
        self.level = k
        size = 1 << (grid.L - k)
        N = grid.N
        self.first = []
        self.edges = []
        self.labels = []
        for s in grid.shift_cells:
            j0 = -((s + size - 1) // size) if s > 0 else 0
            j1 = (N - 1 - s) // size
            starts = s + np.arange(j0, j1 + 1) * size
            e = np.clip(np.concatenate([starts, [starts[-1] + size]]), 0, N)
            self.first.append(j0)
            self.edges.append(e)
            self.labels.append((np.arange(N) - s) // size - j0)
        self.shape = tuple(len(e) - 1 for e in self.edges)
        widths = [np.diff(e) for e in self.edges]
        self.counts = functools.reduce(np.multiply.outer, widths).astype(float)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def cubes(self) -> list[Cube]:
        ranges = [range(f, f + m) for f, m in zip(self.first, self.shape)]
        return [Cube(self.grid, self.level, idx) for idx in itertools.product(*ranges)]

    def cube_at(self, flat: int) -> Cube:
        idx = np.unravel_index(flat, self.shape)
        return Cube(self.grid, self.level, tuple(int(i) + f for i, f in zip(idx, self.first)))

    def sums(self, values: np.ndarray) -> np.ndarray:
        out = values
        for ax, e in enumerate(self.edges):
            c = np.cumsum(out, axis=ax)
            pad = [(0, 0)] * out.ndim
            pad[ax] = (1, 0)
            c = np.pad(c, pad)
            out = np.take(c, e[1:], axis=ax) - np.take(c, e[:-1], axis=ax)
        return out

    def means(self, values: np.ndarray) -> np.ndarray:
        return self.sums(values) / self.counts

    def maxes(self, values: np.ndarray) -> np.ndarray:
        out = values
        for ax, e in enumerate(self.edges):
            out = np.maximum.reduceat(out, e[:-1], axis=ax)
        return out

    def dilated_means(self, values: np.ndarray) -> np.ndarray:
        """Means over the clipped concentric triples of the level's cubes."""
        out = values
        cnt = np.ones(1)
        size = 1 << (self.grid.L - self.level)
        for ax, (e, f, s) in enumerate(zip(self.edges, self.first, self.grid.shift_cells)):
            starts = s + (np.arange(len(e) - 1) + f) * size
            lo = np.clip(starts - size, 0, self.grid.N)
            hi = np.clip(starts + 2 * size, 0, self.grid.N)
            c = np.cumsum(out, axis=ax)
            pad = [(0, 0)] * out.ndim
            pad[ax] = (1, 0)
            c = np.pad(c, pad)
            out = np.take(c, hi, axis=ax) - np.take(c, lo, axis=ax)
            cnt = np.multiply.outer(cnt, hi - lo) if ax else (hi - lo).astype(float)
        return out / cnt

    def mins(self, values: np.ndarray) -> np.ndarray:
        out = values
        for ax, e in enumerate(self.edges):
            out = np.minimum.reduceat(out, e[:-1], axis=ax)
        return out

    def spread(self, cube_values: np.ndarray) -> np.ndarray:
        """Broadcast one value per cube back onto the finest cells."""
        if self.grid.n == 1:
            return cube_values[self.labels[0]]
        return cube_values[np.ix_(*self.labels)]

    def flat_labels(self) -> np.ndarray:
        if self.grid.n == 1:
            return self.labels[0]
        return (self.labels[0][:, None] * self.shape[1] + self.labels[1][None, :])


@functools.lru_cache(maxsize=512)
def _partition(grid: Grid, k: int) -> Partition:
    return Partition(grid, k)


def all_partitions(grids) -> list[Partition]:
    """Every level of every grid, grid-major then level-ascending."""
    return [G.partition(k) for G in grids for k in range(G.L + 1)]


def default_grids(f: GridFunction | Grid, grids=None) -> list[Grid]:
    if grids is not None:
        return list(grids)
    g = f if isinstance(f, Grid) else f.grid
    return shifted_grids(g.n, g.L)


def cells(grid: Grid, k: int) -> list[Cube]:
    """Level-``k`` cubes of ``grid`` (clipped pieces included), in index order."""
    return grid.partition(k).cubes()


class GridFunction(np.lib.mixins.NDArrayOperatorsMixin):
    """Samples on the finest cells of a standard grid, read as a piecewise-constant function.

    Arithmetic with numpy ufuncs returns new ``GridFunction`` objects; the
    sample array is read-only.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float)
        if arr.shape != grid.shape:
            if arr.size != grid.N**grid.n:
                raise ValueError(f"length mismatch: {arr.size} samples for 2^({grid.L}*{grid.n}) cells")
            arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function samples must be finite")
        arr.setflags(write=False)
        self.grid = grid.standard
        self.values = arr

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0) -> GridFunction:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_callable(cls, grid: Grid, fn) -> GridFunction:
        """Sample ``fn`` at the finest-cell centers (``fn`` receives n coordinate arrays)."""
        x = (np.arange(grid.N) + 0.5) / grid.N
        coords = np.meshgrid(*([x] * grid.n), indexing="ij")
        return cls(grid, fn(*coords))

    def as_weight(self, floor: float = W_MIN) -> GridFunction:
        return GridFunction(self.grid, np.maximum(self.values, floor))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        args = [x.values if isinstance(x, GridFunction) else x for x in inputs]
        out = getattr(ufunc, method)(*args, **kwargs)
        if isinstance(out, np.ndarray) and out.shape == self.values.shape:
            return GridFunction(self.grid, out)
        return out

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, L={self.grid.L}, range=[{self.values.min():.3g}, {self.values.max():.3g}])"

    def __len__(self):
        return self.values.size

    def integral(self) -> float:
        return float(self.values.mean())

    def lp_norm(self, p: float, weight: GridFunction | None = None) -> float:
        """``(integral |f|^p w)^(1/p)`` over the unit box; any ``p > 0``."""
        a = np.abs(self.values)
        if np.isinf(p):
            return float(a.max())
        dens = a**p if weight is None else a**p * weight.values
        return float(dens.mean() ** (1.0 / p))


def average(f: GridFunction, Q: Cube) -> float:
    if Q.ncells == 0:
        raise ValueError("zero-measure cube")
    return float(f.values[Q.slices()].mean())


def dilate3(Q: Cube) -> tuple[tuple[int, int], ...]:
    """Cell ranges of the concentric triple of the unclipped cube, clipped to the box."""
    g = Q.grid
    size = 1 << (g.L - Q.level)
    out = []
    for j, s in zip(Q.index, g.shift_cells):
        lo = s + j * size
        out.append((max(lo - size, 0), min(lo + 2 * size, g.N)))
    return tuple(out)


def dilate3_slices(Q: Cube) -> tuple[slice, ...]:
    return tuple(slice(a, b) for a, b in dilate3(Q))


def _data_path(path) -> Path:
    p = Path(path)
    if not p.is_absolute() and not p.exists() and os.environ.get("ORLX_DATA_DIR"):
        p = Path(os.environ["ORLX_DATA_DIR"]) / p
    return p


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def store(f: GridFunction, path, fmt: str | None = None) -> None:
    """Write samples as CSV (one per line, row-major) or raw little-endian float64, plus a JSON sidecar."""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "bin")
    flat = f.values.ravel()
    if fmt == "csv":
        path.write_text("".join(f"{v!r}\n" for v in flat.tolist()))
    elif fmt == "bin":
        path.write_bytes(flat.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _sidecar(path).write_text(json.dumps(f.grid.to_dict(), sort_keys=True))


def load(path, grid: Grid | None = None, fmt: str | None = None) -> GridFunction:
    path = _data_path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "bin")
    if fmt == "csv":
        flat = np.array([float(x) for x in path.read_text().split()], dtype=float)
    elif fmt == "bin":
        flat = np.frombuffer(path.read_bytes(), dtype="<f8").astype(float)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    side = _sidecar(path)
    if grid is None:
        if side.exists():
            meta = json.loads(side.read_text())
            grid = Grid(int(meta["n"]), int(meta["L"]), tuple(meta.get("shift_thirds", ())))
        else:
            L = int(round(np.log2(max(flat.size, 1))))
            grid = Grid(1, L)
    if flat.size != grid.N**grid.n:
        raise ValueError(f"length mismatch: {flat.size} samples, expected {grid.N**grid.n}")
    return GridFunction(grid, flat)
