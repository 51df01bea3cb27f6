"""Sparse families, sparse operators, a test Calderón-Zygmund operator and stopping-time constructions.

A family on one grid is stored as one boolean selection array per level,
shaped like that level's :class:`Partition`.  Sparseness is checked with the
packing constant 1/2: for every selected ``Q`` the union of its strictly
deeper selected descendants covers at most half of ``Q``, and ``E_Q`` is ``Q``
minus that union.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, Grid, GridFunction, default_grids, shifted_grids

__all__ = [
    "PACKING",
    "NotSparseError",
    "SparseFamily",
    "sparse_check",
    "verify_family",
    "sparse_apply",
    "sparse_apply2",
    "czo_apply",
    "cz_stopping",
    "DominationResult",
    "sparse_dominate",
    "bilinear_stopping_constant",
    "dilated_bilinear_maximal",
    "weak_type_constant",
    "stopping_scale",
    "stopping_constant",
    "stopping_levels",
    "stopping_sparse",
]

PACKING = 0.5


class NotSparseError(ValueError):
    """A candidate family fails the packing condition; ``cube`` is the first offender."""

    def __init__(self, cube: Cube, fraction: float, packing: float = PACKING):
        super().__init__(f"not sparse: strict descendants cover {fraction:.6g} of {cube.to_dict()} (> {packing})")
        self.cube = cube
        self.fraction = fraction
        self.packing = packing

    def to_dict(self) -> dict:
        return {"violation": True, "cube": self.cube.to_dict(), "covered_fraction": self.fraction,
                "packing": self.packing}


@dataclass(frozen=True, eq=False)
class SparseFamily:
    grid: Grid
    cubes: tuple[Cube, ...]
    exceptional: tuple[np.ndarray, ...]
    packing: float
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.cubes)

    def selection(self) -> list[np.ndarray]:
        return _selection(self.grid, self.cubes)

    def to_dict(self) -> dict:
        return {"grid": self.grid.to_dict(), "packing": self.packing, "params": self.params,
                "cubes": [{"level": q.level, "index": list(q.index), "E": e.tolist()}
                          for q, e in zip(self.cubes, self.exceptional)]}


def _selection(grid: Grid, cubes) -> list[np.ndarray]:
    sel = [np.zeros(grid.partition(k).shape, dtype=bool) for k in range(grid.L + 1)]
    for q in cubes:
        P = grid.partition(q.level)
        pos = tuple(j - f for j, f in zip(q.index, P.first))
        if any(p < 0 or p >= m for p, m in zip(pos, P.shape)):
            raise ValueError(f"cube {q.to_dict()} lies outside the box")
        sel[q.level][pos] = True
    return sel


def _cubes_from_selection(grid: Grid, sel) -> list[Cube]:
    out = []
    for k, s in enumerate(sel):
        P = grid.partition(k)
        out.extend(P.cube_at(i) for i in np.flatnonzero(s.ravel()))
    return out


def _single_grid(cubes) -> Grid:
    grids = {q.grid for q in cubes}
    if len(grids) != 1:
        raise ValueError("a sparse family lives on exactly one grid")
    return grids.pop()


def sparse_check(cubes, packing: float = PACKING) -> SparseFamily:
    """Validate a family of cubes from one grid; raise :class:`NotSparseError` on the first violation."""
    cubes = sorted(set(cubes), key=lambda q: (q.level, q.index))
    if not cubes:
        raise ValueError("empty family")
    grid = _single_grid(cubes)
    sel = _selection(grid, cubes)
    deeper = np.zeros(grid.shape, dtype=bool)
    below = [None] * (grid.L + 1)
    for k in range(grid.L, -1, -1):
        below[k] = deeper.copy()
        if sel[k].any():
            deeper |= grid.partition(k).spread(sel[k])
    exc = {}
    worst = 0.0
    for k in range(grid.L + 1):
        if not sel[k].any():
            continue
        P = grid.partition(k)
        frac = P.sums(below[k].astype(float)) / P.counts
        bad = sel[k] & (frac > packing)
        if bad.any():
            i = int(np.flatnonzero(bad.ravel())[0])
            raise NotSparseError(P.cube_at(i), float(frac.ravel()[i]), packing)
        worst = max(worst, float(frac[sel[k]].max()))
        free = P.spread(sel[k]) & ~below[k]
        cells = np.flatnonzero(free.ravel())
        lab = P.flat_labels().ravel()[cells]
        order = np.argsort(lab, kind="stable")
        cells, lab = cells[order], lab[order]
        for flat in np.flatnonzero(sel[k].ravel()):
            lo, hi = np.searchsorted(lab, [flat, flat + 1])
            exc[(k, flat)] = cells[lo:hi]
    ordered = []
    for q in cubes:
        P = grid.partition(q.level)
        flat = int(np.ravel_multi_index(tuple(j - f for j, f in zip(q.index, P.first)), P.shape))
        ordered.append(exc[(q.level, flat)])
    fam = SparseFamily(grid, tuple(cubes), tuple(ordered), worst)
    verify_family(fam)
    return fam


def verify_family(fam: SparseFamily) -> None:
    """Re-derive both sparse invariants by a separate route (nearest-ancestor measure tallies)."""
    members = {(q.level, q.index): q for q in fam.cubes}
    covered = dict.fromkeys(members, 0)
    for q in fam.cubes:
        level, idx = q.level, q.index
        while level > 0:
            level -= 1
            idx = tuple(j >> 1 for j in idx)
            if (level, idx) in members:
                covered[(level, idx)] += q.ncells
                break
    for key, q in members.items():
        frac = covered[key] / q.ncells
        if frac > fam.packing + 1e-12 or frac > PACKING + 1e-12:
            raise NotSparseError(q, frac)
    total = fam.grid.N**fam.grid.n
    if fam.exceptional:
        mult = np.bincount(np.concatenate(fam.exceptional).astype(np.int64), minlength=total)
        if mult.max(initial=0) > 1:
            raise AssertionError("exceptional sets overlap")
    for q, e in zip(fam.cubes, fam.exceptional):
        coords = np.unravel_index(e, fam.grid.shape)
        if not all(np.all((c >= a) & (c < b)) for c, (a, b) in zip(coords, q.bounds())):
            raise AssertionError("exceptional set leaves its cube")
        if q.ncells > 2 * e.size:
            raise AssertionError(f"|Q| > 2|E_Q| for {q.to_dict()}")


def _by_grid(S) -> dict:
    cubes = S.cubes if isinstance(S, SparseFamily) else tuple(S)
    out: dict = {}
    for q in cubes:
        out.setdefault(q.grid, []).append(q)
    return out


def sparse_apply(S, f: GridFunction) -> GridFunction:
    """``sum_{Q in S} (avg_Q f) chi_Q``."""
    return sparse_apply2(S, f, None)


def sparse_apply2(S, f: GridFunction, g: GridFunction | None) -> GridFunction:
    """``sum_{Q in S} (avg_Q f)(avg_Q g) chi_Q``; ``g = None`` gives the linear operator."""
    out = np.zeros(f.values.shape)
    for grid, cubes in _by_grid(S).items():
        for k, s in enumerate(_selection(grid, cubes)):
            if not s.any():
                continue
            P = grid.partition(k)
            c = P.means(f.values)
            if g is not None:
                c = c * P.means(g.values)
            out += P.spread(np.where(s, c, 0.0))
    return GridFunction(f.grid, out)


def czo_apply(f: GridFunction) -> GridFunction:
    """Hilbert-type test operator on cell centers: ``Tf_i = sum_{j != i} f_j / (i - j)``.

    The kernel ``1/(x - y)`` is sampled in cell units, so the operator is
    scale free; one dimension only.
    """
    if f.grid.n != 1:
        raise ValueError("the test singular integral is one dimensional")
    N = f.grid.N
    m = np.arange(-(N - 1), N, dtype=float)
    kern = np.divide(1.0, m, out=np.zeros_like(m), where=m != 0)
    return GridFunction(f.grid, np.convolve(f.values, kern)[N - 1:2 * N - 1])


def _parent_positions(grid: Grid, k: int) -> list[np.ndarray]:
    """Per axis: position at level ``k-1`` of the parent of each level-``k`` position."""
    P, Pp = grid.partition(k), grid.partition(k - 1)
    return [((np.arange(m) + f) >> 1) - fp for m, f, fp in zip(P.shape, P.first, Pp.first)]


def _lift(grid: Grid, k: int, parent_vals: np.ndarray) -> np.ndarray:
    pos = _parent_positions(grid, k)
    return parent_vals[pos[0]] if grid.n == 1 else parent_vals[np.ix_(*pos)]


def cz_stopping(funcs, grid: Grid, a: float) -> list[np.ndarray]:
    """Calderón-Zygmund stopping cubes for a product of averages.

    Top cubes with positive product are selected; below them a cube is selected
    when its product of averages exceeds ``a`` times that of its nearest
    selected ancestor.  Returns the selection array per level.
    """
    vals = [np.abs(np.asarray(getattr(h, "values", h), dtype=float)) for h in funcs]
    sel, ref = [], None
    for k in range(grid.L + 1):
        P = grid.partition(k)
        prod = np.ones(P.shape)
        for v in vals:
            prod = prod * P.means(v)
        if k == 0:
            s = prod > 0
            ref = prod
        else:
            pref = _lift(grid, k, ref)
            s = prod > a * pref
            ref = np.where(s, prod, pref)
        sel.append(s)
    return sel


def bilinear_stopping_constant(m: int = 2) -> float:
    """Stopping ratio for products of ``m`` averages that guarantees packing 1/2: ``(2m)**m``."""
    return float((2 * m) ** m)


@dataclass
class DominationResult:
    families: list[SparseFamily]
    ratio: float
    lhs: GridFunction
    rhs: GridFunction

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "families": [len(f) for f in self.families],
                "packing": max((f.packing for f in self.families), default=0.0)}


def sparse_dominate(f: GridFunction, czo=czo_apply, a: float = 2.0, grids=None) -> DominationResult:
    """Sparse families per shifted grid from CZ stopping on ``|f|`` and the pointwise ratio ``|Tf| / sum_k T^{S_k}|f|``.

    ``f`` may be signed: the operator sees ``f``, the stopping and the sparse sums see ``|f|``.
    """
    absf = GridFunction(f.grid, np.abs(f.values))
    grids = default_grids(f, grids)
    fams, rhs = [], np.zeros(f.values.shape)
    for G in grids:
        sel = cz_stopping([absf], G, a)
        cubes = _cubes_from_selection(G, sel)
        if not cubes:
            fams.append(SparseFamily(G, (), (), 0.0, {"a": a}))
            continue
        fam = sparse_check(cubes)
        object.__setattr__(fam, "params", {"a": a})
        fams.append(fam)
        rhs += sparse_apply(fam, absf).values
    lhs = np.abs(czo(f).values)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(lhs > 0, lhs / rhs, 0.0)
    ratio = float(np.max(r)) if r.size else 0.0
    return DominationResult(fams, ratio, GridFunction(f.grid, lhs), GridFunction(f.grid, rhs))


def _dilated_products(f: GridFunction, g: GridFunction) -> list[np.ndarray]:
    grid = f.grid.standard
    a, b = np.abs(f.values), np.abs(g.values)
    return [grid.partition(k).dilated_means(a) * grid.partition(k).dilated_means(b) for k in range(grid.L + 1)]


def dilated_bilinear_maximal(f: GridFunction, g: GridFunction) -> GridFunction:
    """``max_{Q ∋ x} (avg_{3Q} |f|)(avg_{3Q} |g|)`` over standard cubes, triples clipped to the box."""
    grid = f.grid.standard
    out = np.zeros(f.values.shape)
    for k, pr in enumerate(_dilated_products(f, g)):
        np.maximum(out, grid.partition(k).spread(pr), out=out)
    return GridFunction(f.grid, out)


def weak_type_constant(f: GridFunction, g: GridFunction) -> float:
    """Raw weak (1,1)x(1,1)->(1/2) constant of the tripled-cube bilinear maximal operator on one pair.

    ``sup_lam lam |{M3(f,g) > lam}|**2 / (||f||_1 ||g||_1)``, the sup taken at the
    attained values of ``M3(f,g)``.
    """
    m = dilated_bilinear_maximal(f, g).values.ravel()
    den = np.abs(f.values).mean() * np.abs(g.values).mean()
    if den == 0:
        return 0.0
    v = np.sort(m)[::-1]
    frac = np.arange(1, v.size + 1) / v.size
    return float(np.max(v * frac**2) / den)


@dataclass(frozen=True)
class StoppingConstant:
    weak_type: float
    fraction_constant: float
    a: float

    def to_dict(self) -> dict:
        return {"weak_type": self.weak_type, "fraction_constant": self.fraction_constant, "a": self.a}


def _calibration_pairs(n: int, L: int):
    grid = Grid(n, L)
    rng = np.random.default_rng(20240611)
    N = grid.N
    pairs = [(GridFunction.constant(grid), GridFunction.constant(grid))]
    for _ in range(4):
        pairs.append((GridFunction(grid, rng.exponential(size=grid.shape)),
                      GridFunction(grid, rng.exponential(size=grid.shape))))
    half = np.zeros(grid.shape)
    half[(slice(0, max(N // 2, 1)),) * n] = 1.0
    for pos in (0, N // 3, N // 2, N - 1):
        spike = np.zeros(grid.shape)
        spike[(pos,) * n] = 1.0
        pairs.append((GridFunction(grid, spike), GridFunction(grid, spike)))
        pairs.append((GridFunction(grid, spike), GridFunction(grid, half)))
    return pairs


_CALIBRATION: dict = {}


def stopping_constant(f: GridFunction, g: GridFunction) -> StoppingConstant:
    """Default stopping ratio from the measured weak-type constant.

    ``C_w`` is the largest raw constant over the input pair and a fixed seeded
    calibration set.  A selected cube is maximal, so its parent's product is
    at most the threshold, and the parent's triple has ``6**n`` times the
    measure of the cube; the covered fraction is then at most
    ``C a**-1/2`` with ``C = 6**n sqrt(C_w)``.  ``a = max(4 C**2, 4)`` makes
    that at most 1/2.
    """
    n, L = f.grid.n, f.grid.L
    if (n, L) not in _CALIBRATION:
        _CALIBRATION[(n, L)] = max(weak_type_constant(p, q) for p, q in _calibration_pairs(n, L))
    cw = max(_CALIBRATION[(n, L)], weak_type_constant(f, g))
    c = 6**n * math.sqrt(cw)
    return StoppingConstant(cw, c, max(4 * c * c, 4.0))


def stopping_scale(f: GridFunction, g: GridFunction) -> float:
    """Threshold unit: just below the product over the whole box.

    On the box the top cube has no parent to bound its product, so the
    thresholds ``tau a**k`` are anchored (by homogeneity) with the top product
    barely above ``tau``.
    """
    top = float(np.abs(f.values).mean() * np.abs(g.values).mean())
    return top * (1.0 - 1e-9)


def stopping_levels(f: GridFunction, g: GridFunction, a: float) -> dict[int, list[np.ndarray]]:
    """``S^k`` for ``k >= 0``: maximal standard cubes with ``(avg_{3Q} f)(avg_{3Q} g) > tau a**k``.

    For ``k < 0`` the family is the top cube alone, as for ``k = 0``.
    """
    if not a > 1:
        raise ValueError("stopping ratio must exceed 1")
    grid = f.grid.standard
    prods = _dilated_products(f, g)
    tau = stopping_scale(f, g)
    if tau <= 0:
        return {}
    pmax = max(float(p.max()) for p in prods)
    kmax = max(0, math.floor(math.log(pmax / tau) / math.log(a)))
    out = {}
    for k in range(0, kmax + 1):
        thr = tau * a**k
        levels, taken = [], None
        for lv, pr in enumerate(prods):
            above = pr > thr
            if lv == 0:
                s = above
                taken = s
            else:
                inherited = _lift(grid, lv, taken)
                s = above & ~inherited
                taken = inherited | s
            levels.append(s)
        if any(s.any() for s in levels):
            out[k] = levels
    return out


def stopping_sparse(f: GridFunction, g: GridFunction, a: float | None = None) -> SparseFamily:
    """Union over ``k`` of the stopping families ``S^k``, checked for sparseness.

    ``a`` defaults to :func:`stopping_constant`; raises :class:`NotSparseError`
    when the chosen ``a`` is too small for this pair.
    """
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("stopping_sparse expects nonnegative functions")
    const = stopping_constant(f, g) if a is None else None
    a = const.a if a is None else float(a)
    grid = f.grid.standard
    levels = stopping_levels(f, g, a)
    union = [np.zeros(grid.partition(k).shape, dtype=bool) for k in range(grid.L + 1)]
    for sel in levels.values():
        for u, s in zip(union, sel):
            u |= s
    cubes = _cubes_from_selection(grid, union)
    if not cubes:
        raise ValueError("both functions vanish")
    fam = sparse_check(cubes)
    params = {"a": a, "k_range": [min(levels), max(levels)], "tau": stopping_scale(f, g)}
    if const is not None:
        params.update(const.to_dict())
    object.__setattr__(fam, "params", params)
    return fam
