"""Exponent calculus, operator-norm estimates and the Rubio de Francia iteration.

The iteration ``Rh = sum_k M_phi^k h / (2 opnorm)^k`` produces a majorant of
``h`` with controlled ``L^q`` norm that is almost a fixed point of
``M_phi``, hence in ``A_1`` and in ``RH_phi``.  ``build_H`` wires the
auxiliary Young functions ``B`` and ``C`` of the weighted extrapolation
argument and measures every property of the resulting ``H``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Grid, GridFunction, default_grids
from .maximal import maximal, orlicz_maximal
from .orlicz import inverse_product_constant
from .weights import MEMBERSHIP_THRESHOLD, a1_characteristic, rh_characteristic
from .young import BpVerdict, YoungFunction, check_young, dual_exponent
from .zoo import default_probes

__all__ = [
    "ExponentTriple",
    "exponents",
    "estimate_opnorm",
    "IterationResult",
    "rubio_iterate",
    "HConstruction",
    "auxiliary_functions",
    "build_H",
    "SmallPConstruction",
    "build_H_small_p",
    "DEFAULT_K",
    "SAFETY_FACTOR",
]

DEFAULT_K = 40
SAFETY_FACTOR = 2.0


@dataclass(frozen=True)
class ExponentTriple:
    """``0 < p0 < q0`` and ``p0 <= p <= q0``.

    ``r = (q0/p0)' / (q0/p)'`` (0 at ``p = q0``) and ``1/s = 1/r - p0/p``
    (``s = inf`` at ``p = p0``).  The properties use the cleared-denominator
    forms ``r = (q0-p)/(q0-p0)`` and ``1/s = q0(p-p0)/(p(q0-p))``, which avoid
    the cancellation in ``1/r - p0/p`` near ``p = p0``.
    """

    p0: float
    q0: float
    p: float

    def __post_init__(self):
        if not 0 < self.p0 < self.q0:
            raise ValueError("need 0 < p0 < q0")
        if not self.p0 <= self.p <= self.q0:
            raise ValueError("need p0 <= p <= q0")

    @property
    def hyp_dual(self) -> float:
        """``(q0/p0)'``."""
        return dual_exponent(self.q0 / self.p0)

    @property
    def target_dual(self) -> float:
        """``(q0/p)'``; infinite at the endpoint ``p = q0``."""
        return math.inf if self.p == self.q0 else self.q0 / (self.q0 - self.p)

    @property
    def h_exponent(self) -> float:
        """``(p/p0)'``: the Lebesgue exponent of the duality function; infinite at ``p = p0``."""
        return math.inf if self.p == self.p0 else self.p / (self.p - self.p0)

    @property
    def r(self) -> float:
        if self.p == self.q0:
            return 0.0
        if self.p == self.p0:
            return 1.0
        return (self.q0 - self.p) / (self.q0 - self.p0)

    @property
    def inv_s(self) -> float:
        if self.p == self.q0:
            return math.inf
        return self.q0 * (self.p - self.p0) / (self.p * (self.q0 - self.p))

    @property
    def s(self) -> float:
        inv = self.inv_s
        return math.inf if inv == 0 else 1.0 / inv

    @property
    def endpoint(self) -> bool:
        return self.p == self.q0

    def identity_residual(self) -> float:
        """Relative residual of ``(1/s)(p/p0)' = (q0/p)'`` (0 where undefined)."""
        if self.p in (self.p0, self.q0):
            return 0.0
        lhs = self.inv_s * self.h_exponent
        rhs = self.target_dual
        return abs(lhs - rhs) / abs(rhs)

    def to_dict(self) -> dict:
        def fin(x):
            return x if math.isfinite(x) else "inf"

        return {"p0": self.p0, "q0": self.q0, "p": self.p, "r": self.r, "s": fin(self.s),
                "h_exponent": fin(self.h_exponent), "target_dual": fin(self.target_dual)}


def exponents(p0: float, q0: float, p: float) -> ExponentTriple:
    return ExponentTriple(float(p0), float(q0), float(p))


def _lq(f: GridFunction, q: float) -> float:
    return f.lp_norm(q)


def probe_ratios(phi: YoungFunction, q: float, probes, grids=None) -> list[float]:
    out = []
    for f in probes:
        nf = _lq(f, q)
        if nf > 0:
            out.append(_lq(orlicz_maximal(f, phi, grids), q) / nf)
    return out


@functools.lru_cache(maxsize=64)
def _cached_opnorm(phi: YoungFunction, q: float, n: int, L: int, seed: int) -> float:
    return max(probe_ratios(phi, q, default_probes(Grid(n, L), seed)))


def estimate_opnorm(phi: YoungFunction, q: float, probe_set=None, grid: Grid | None = None,
                    safety_factor: float = SAFETY_FACTOR, seed: int = 0) -> float:
    """``safety_factor * max_probe ||M_phi f||_q / ||f||_q``; rejects ``phi`` outside ``B_q``."""
    verdict = phi.bp_test(q)
    if verdict.verdict is not BpVerdict.IN_BP:
        raise ValueError(f"{phi.describe()} is not certified in B_{q}: {verdict.verdict.value}")
    if probe_set is None:
        if grid is None:
            raise ValueError("pass a probe set or a grid for the default probes")
        base = _cached_opnorm(phi, float(q), grid.n, grid.L, seed)
    else:
        base = max(probe_ratios(phi, q, probe_set))
    return safety_factor * base


@dataclass
class IterationResult:
    Rh: GridFunction
    K: int
    terms_used: int
    opnorm: float
    tail_bound: float
    properties: dict
    checkpoints: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.properties.values())

    def to_dict(self) -> dict:
        return {"K": self.K, "terms_used": self.terms_used, "opnorm": self.opnorm,
                "tail_bound": self.tail_bound, "properties": self.properties, "passed": self.passed}


def rubio_iterate(h: GridFunction, phi: YoungFunction, q: float, K: int = DEFAULT_K,
                  opnorm: float | None = None, grids=None, checkpoints=(20,),
                  rh_ceiling: float = MEMBERSHIP_THRESHOLD, measure: bool = True) -> IterationResult:
    """``Rh = sum_{k=0..K} M_phi^k |h| / (2 opnorm)^k`` with properties (a)-(d) measured.

    Terms whose total remaining contribution lies below half an ulp of ``Rh``
    everywhere are skipped; the sum is then already exact in floating point.
    """
    grids = default_grids(h, grids)
    if opnorm is None:
        opnorm = estimate_opnorm(phi, q, grid=h.grid)
    a = np.abs(h.values)
    term = a.copy()
    total = a.copy()
    saved = {}
    rho = (1.0 / float(phi.inverse(1.0))) / (2.0 * opnorm)
    used = 0
    step_ratio = 0.0
    for k in range(1, K + 1):
        if k - 1 in checkpoints:
            saved[k - 1] = GridFunction(h.grid, total)
        tmax = term.max()
        if tmax == 0 or (rho < 1 and tmax * rho / (1 - rho) < 2.0**-60 * total.min()):
            break
        nxt = orlicz_maximal(GridFunction(h.grid, term), phi, grids).values / (2.0 * opnorm)
        tq = np.linalg.norm(term.ravel(), q) if math.isfinite(q) else term.max()
        nq = np.linalg.norm(nxt.ravel(), q) if math.isfinite(q) else nxt.max()
        if tq > 0:
            step_ratio = max(step_ratio, float(nq / tq) * 2 * opnorm)
        term = nxt
        total = total + term
        used = k
    for c in checkpoints:
        if c <= K and c not in saved:
            saved[c] = GridFunction(h.grid, total)
    Rh = GridFunction(h.grid, total)
    hq = h.lp_norm(q)
    tail = 2.0**-K * hq
    props = {}
    if measure:
        props = _rubio_properties(h, Rh, phi, q, opnorm, grids, rh_ceiling, K)
        props["step_ratio"] = {"value": step_ratio, "bound": opnorm, "pass": step_ratio <= opnorm}
    return IterationResult(Rh, K, used, opnorm, tail, props, saved)


def _rubio_properties(h, Rh, phi, q, opnorm, grids, rh_ceiling, K) -> dict:
    a = np.abs(h.values)
    gap = float(np.min(Rh.values - a))
    hq = h.lp_norm(q)
    ratio_b = Rh.lp_norm(q) / hq if hq > 0 else 0.0
    bound_b = 2.0 * (1.0 + 2.0 ** -(K - 1))
    mr = orlicz_maximal(Rh, phi, grids).values
    with np.errstate(divide="ignore", invalid="ignore"):
        cr = np.where(Rh.values > 0, mr / Rh.values, 0.0)
    c_meas = float(cr.max())
    out = {
        "a_majorant": {"value": gap, "pass": gap >= 0.0},
        "b_norm": {"value": ratio_b, "bound": bound_b, "pass": ratio_b <= bound_b},
        "c_fixed_point": {"value": c_meas, "bound": 2.0 * opnorm, "pass": c_meas <= 2.0 * opnorm * (1 + 1e-9),
                          "witness_cell": [int(i) for i in np.unravel_index(int(np.argmax(cr)), cr.shape)]},
    }
    if np.any(Rh.values <= 0):
        out["d_reverse_holder"] = {"value": math.inf, "pass": False}
        return out
    rep = rh_characteristic(Rh, phi, grids)
    # the chain ||Rh||_{phi,Q} <= avg_Q M_phi(Rh) <= C avg_Q Rh bounds the characteristic by C
    out["d_reverse_holder"] = {"value": rep.value, "chain_bound": c_meas, "ceiling": rh_ceiling,
                               "cube": rep.cube.to_dict(),
                               "pass": rep.value <= rh_ceiling and rep.value <= c_meas * (1 + 1e-9)}
    return out


@dataclass
class HConstruction:
    H: GridFunction
    B: YoungFunction
    C: YoungFunction | None
    triple: ExponentTriple
    iteration: IterationResult
    properties: dict

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.properties.values())

    def to_dict(self) -> dict:
        return {"triple": self.triple.to_dict(), "B": self.B.to_descriptor(),
                "C": None if self.C is None else self.C.to_descriptor(),
                "iteration": self.iteration.to_dict(), "properties": self.properties, "passed": self.passed}


def auxiliary_functions(psi0: YoungFunction, triple: ExponentTriple):
    """``(Psi, B, C)`` with ``Psi(t^r) = psi0(t)``, ``B(t) = Psi(t^s)`` and ``C(t) = Psi(t^(p/p0))``.

    In terms of ``psi0``: ``B = psi0(t^(s/r))`` and ``C = psi0(t^(p/(p0 r)))``,
    so ``C^{-1} B^{-1} = psi0^{-1}``.  At the endpoint ``p = q0`` only
    ``B = psi0`` is defined.
    """
    if triple.endpoint:
        return None, psi0, None
    r = triple.r
    psi = psi0.rescale_outer(r)
    B = psi0.rescale_outer(1.0 - r * triple.p0 / triple.p)
    C = psi0.rescale_outer(triple.p0 * r / triple.p)
    return psi, B, C


def build_H(h: GridFunction, w: GridFunction, triple: ExponentTriple, psi0: YoungFunction,
            K: int = DEFAULT_K, opnorm: float | None = None, grids=None,
            ceiling: float = MEMBERSHIP_THRESHOLD) -> HConstruction:
    """``H = R_B h`` for the weighted extrapolation argument, with properties (a)-(c) measured.

    (a) ``h <= H``; (b) ``||H||_{(p/p0)'} <= 2 ||h||``; (c) ``H w^(p0/p)`` in
    ``RH_psi0``, measured directly and through the generalized Hölder chain
    ``[H w']_{RH_psi0} <= 2 kappa [H]_{RH_B} [w']_{RH_C} [H]_{A_1}``.
    """
    if triple.p == triple.p0:
        raise ValueError("p = p0 needs no construction")
    grids = default_grids(h, grids)
    _, B, C = auxiliary_functions(psi0, triple)
    q = triple.h_exponent
    if not all(check_young(B).values()):
        raise ValueError("B fails the sampled Young-function checks")
    it = rubio_iterate(h, B, q, K=K, opnorm=opnorm, grids=grids, rh_ceiling=ceiling)
    H = it.Rh
    wp = w ** (triple.p0 / triple.p)
    prod = H * wp
    direct = rh_characteristic(prod, psi0, grids).value
    rh_b = rh_characteristic(H, B, grids).value
    a1 = a1_characteristic(H, grids).value
    if C is None:
        side = rh_characteristic(wp, math.inf, grids).value
        chain = rh_b * side * a1
        kappa = 1.0
    else:
        side = rh_characteristic(wp, C, grids).value
        kappa = inverse_product_constant(C, B, psi0)
        chain = 2.0 * kappa * rh_b * side * a1
    props = {
        "a_majorant": it.properties["a_majorant"],
        "b_norm": it.properties["b_norm"],
        "c_reverse_holder": {"value": direct, "chain_bound": chain, "kappa": kappa,
                             "rh_B": rh_b, "rh_side": side, "a1_H": a1, "ceiling": ceiling,
                             "pass": direct <= ceiling and direct <= chain * (1 + 1e-9)},
        "B_in_Bq": {"value": B.bp_test(q).verdict.value, "pass": B.bp_test(q).verdict is BpVerdict.IN_BP},
    }
    return HConstruction(H, B, C, triple, it, props)


@dataclass
class SmallPConstruction:
    H: GridFunction
    exponent: float
    rh_inf: float
    properties: dict

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.properties.values())

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "rh_inf": self.rh_inf, "properties": self.properties,
                "passed": self.passed}


def build_H_small_p(g: GridFunction, p: float, p0: float, rr: float, grids=None,
                    ceiling: float = MEMBERSHIP_THRESHOLD) -> SmallPConstruction:
    """``H = M(g^(1/rr))^(p rr / (p0/p)')`` for ``0 < p < p0`` and ``rr > 1/p``.

    ``H^(-p0/p)`` is a negative power of an ``A_1``-type function and so lies
    in ``RH_inf``; the characteristic is measured.
    """
    if not 0 < p < p0:
        raise ValueError("the small-p construction needs 0 < p < p0")
    if not rr > 1.0 / p:
        raise ValueError("need rr > 1/p")
    if np.all(g.values == 0):
        raise ValueError("g vanishes identically")
    grids = default_grids(g, grids)
    expo = p * rr / dual_exponent(p0 / p)
    Mg = maximal(np.abs(g) ** (1.0 / rr), grids)
    H = Mg**expo
    neg = H ** (-p0 / p)
    rh_inf = rh_characteristic(neg, math.inf, grids).value
    props = {
        "exponent_positive": {"value": expo, "pass": expo > 0},
        "rh_inf": {"value": rh_inf, "ceiling": ceiling, "pass": rh_inf <= ceiling},
    }
    return SmallPConstruction(H, expo, rh_inf, props)
