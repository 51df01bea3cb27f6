"""Weight-class characteristics (A_p, A_1, RH_s, RH_inf, RH_Psi, A_inf) and certified generators.

Every characteristic is a maximum over all cubes of all levels of a family of
grids (by default the ``3**n`` shifted grids).  Ties go to the first cube in
enumeration order: grid order, then level, then index.  Essential sup and inf
are max and min over finest cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, GridFunction, Partition, all_partitions, default_grids
from .orlicz import orlicz_norms
from .young import YoungFunction, dual_exponent

__all__ = [
    "WeightReport",
    "MEMBERSHIP_THRESHOLD",
    "S_CANDIDATES",
    "ap_characteristic",
    "a1_characteristic",
    "rh_characteristic",
    "ainfty_condition",
    "ainfty_report",
    "rh_exponent_search",
    "rhinf_power_search",
    "gen_a1",
    "gen_rhinf_ap_pair",
]

MEMBERSHIP_THRESHOLD = 1e6
S_CANDIDATES = (1.1, 1.25, 1.5, 2.0, 4.0)


@dataclass(frozen=True)
class WeightReport:
    kind: str
    value: float
    cube: Cube
    grids: str
    params: dict = field(default_factory=dict)

    def member(self, threshold: float = MEMBERSHIP_THRESHOLD) -> bool:
        return bool(np.isfinite(self.value) and self.value <= threshold)

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "cube": self.cube.to_dict(),
                "grids": self.grids, "params": self.params}


def _grid_label(grids) -> str:
    thirds = sorted({g.thirds for g in grids})
    if len(thirds) == 3 ** grids[0].n:
        return "shifted"
    if thirds == [(0,) * grids[0].n]:
        return "standard"
    return "custom:" + ";".join(",".join(map(str, t)) for t in thirds)


def _argmax(parts: list[Partition], per_part: list[np.ndarray]) -> tuple[float, Cube]:
    best, where = -np.inf, None
    for P, vals in zip(parts, per_part):
        i = int(np.argmax(vals))
        v = float(vals.ravel()[i])
        if v > best:
            best, where = v, P.cube_at(i)
    return best, where


def _sweep(kind, w: GridFunction, grids, params, fn) -> WeightReport:
    grids = default_grids(w, grids)
    parts = all_partitions(grids)
    vals = fn(parts)
    value, cube = _argmax(parts, vals)
    return WeightReport(kind, value, cube, _grid_label(grids), params)


def _check_weight(w: GridFunction) -> np.ndarray:
    v = w.values
    if np.any(v <= 0):
        raise ValueError("weights must be strictly positive; use GridFunction.as_weight to floor")
    return v


def ap_characteristic(w: GridFunction, p: float, grids=None) -> WeightReport:
    """``max_Q (avg_Q w)(avg_Q w^(1-p'))^(p-1)``."""
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    v = _check_weight(w)
    dual = v ** (1.0 - dual_exponent(p))
    return _sweep("A_p", w, grids, {"p": p},
                  lambda parts: [P.means(v) * P.means(dual) ** (p - 1) for P in parts])


def a1_characteristic(w: GridFunction, grids=None) -> WeightReport:
    """``max_Q (avg_Q w) / min_Q w``."""
    v = _check_weight(w)
    return _sweep("A_1", w, grids, {}, lambda parts: [P.means(v) / P.mins(v) for P in parts])


def rh_characteristic(w: GridFunction, s: float | str | YoungFunction, grids=None) -> WeightReport:
    """Reverse Hölder characteristic.

    ``s`` real: ``max_Q (avg w^s)^(1/s) / avg w``; ``s = inf`` (or ``"inf"``):
    ``max_Q max_Q w / avg w``; ``s`` a Young function ``Psi``:
    ``max_Q ||w||_{Psi,Q} / avg w``.
    """
    v = _check_weight(w)
    if isinstance(s, YoungFunction):
        psi = s
        return _sweep("RH_Psi", w, grids, {"psi": psi.to_descriptor()},
                      lambda parts: [n / P.means(v) for P, n in zip(parts, orlicz_norms(v, parts, psi))])
    s = float(s)
    if math.isinf(s):
        return _sweep("RH_inf", w, grids, {"s": "inf"},
                      lambda parts: [P.maxes(v) / P.means(v) for P in parts])
    if not s > 1:
        raise ValueError("RH_s needs s > 1")
    vs = v**s
    return _sweep("RH_s", w, grids, {"s": s},
                  lambda parts: [P.means(vs) ** (1.0 / s) / P.means(v) for P in parts])


def _top_mass(P: Partition, v: np.ndarray, alpha: float) -> np.ndarray:
    """Per cube: w-mass of the largest-density cell set with fewer than ``alpha*|Q|`` cells."""
    labels = P.flat_labels().ravel()
    flat = v.ravel()
    order = np.lexsort((-flat, labels))
    csum = np.concatenate([[0.0], np.cumsum(flat[order])])
    counts = P.counts.ravel().astype(np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    m = np.ceil(alpha * counts - 1e-12).astype(np.int64) - 1
    m = np.clip(m, 0, counts)
    return (csum[starts + m] - csum[starts]).reshape(P.shape)


def ainfty_report(w: GridFunction, alpha: float, grids=None) -> WeightReport:
    """``beta = max_Q max_{|E| < alpha|Q|} w(E) / w(Q)``, with ``E`` a union of finest cells.

    For a fixed cube the maximizing ``E`` takes the cells of largest ``w``, as
    many as fit strictly below ``alpha*|Q|``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v = _check_weight(w)
    return _sweep("A_inf", w, grids, {"alpha": alpha},
                  lambda parts: [_top_mass(P, v, alpha) / P.sums(v) for P in parts])


def ainfty_condition(w: GridFunction, alpha: float, grids=None) -> float:
    return float(ainfty_report(w, alpha, grids).value)


def rh_exponent_search(w: GridFunction, candidates=S_CANDIDATES, threshold: float = MEMBERSHIP_THRESHOLD,
                       grids=None) -> dict:
    """RH_s characteristics over candidate exponents and the largest passing one (or None)."""
    chars = {float(s): rh_characteristic(w, s, grids).value for s in candidates}
    passing = [s for s, c in chars.items() if c <= threshold]
    return {"characteristics": chars, "best": max(passing) if passing else None}


def rhinf_power_search(w: GridFunction, candidates=S_CANDIDATES, threshold: float = MEMBERSHIP_THRESHOLD,
                       grids=None) -> dict:
    """RH_inf characteristics of the powers ``w**s`` over candidate exponents."""
    chars = {float(s): rh_characteristic(w**s, math.inf, grids).value for s in candidates}
    return {"characteristics": chars, "all_pass": all(c <= threshold for c in chars.values())}


def gen_a1(w: GridFunction, r: float, grids=None) -> GridFunction:
    """``(M w)**r``, an A_1 weight for ``0 < r < 1``."""
    from .maximal import maximal

    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    return maximal(w, grids) ** r


def gen_rhinf_ap_pair(w_a1: GridFunction, p: float) -> GridFunction:
    """``w**(1-p')``; lands in RH_inf and A_p when ``w`` is in A_1."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    _check_weight(w_a1)
    return w_a1 ** (1.0 - dual_exponent(p))
