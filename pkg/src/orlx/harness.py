"""Seeded end-to-end experiments: measure both sides of each inequality and compare against ceilings.

Every suite draws per-trial generators from ``SeedSequence([seed, trial])``,
so reports do not depend on scheduling.  A suite passes when its main trials
stay below the ceiling, every auxiliary check holds, and every negative
control (a configuration violating a hypothesis) exceeds its ceiling.

Ceilings are calibration data measured once on the reference seed and frozen
in :data:`REFERENCE`; none of them is a proven constant.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Grid, GridFunction, W_MIN, all_partitions, shifted_grids
from .fractional import bi_fractional_direct, bi_fractional_dyadic
from .maximal import bisublinear_maximal, frac_maximal_bilinear, maximal, orlicz_maximal
from .orlicz import orlicz_norms
from .rubio import (build_H, build_H_small_p, estimate_opnorm, exponents, rubio_iterate)
from .sparse import (bilinear_stopping_constant, cz_stopping, sparse_apply, sparse_apply2,
                     sparse_check, sparse_dominate, stopping_sparse, NotSparseError)
from .sparse import _cubes_from_selection, _dilated_products
from .weights import ainfty_condition, rh_characteristic
from .young import Power, YoungFunction, dual_exponent, from_descriptor
from .zoo import haar, indicator, lognormal, maxspike_weight, spike, test_function

__all__ = [
    "ExperimentConfig",
    "InequalityReport",
    "SUITES",
    "REFERENCE",
    "REFERENCE_2D",
    "reference_configs",
    "negative_configs",
    "run_suite",
    "run_configs",
    "load_configs",
    "report_json",
    "reports_csv",
]


# ---------------------------------------------------------------- config / report


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    seed: int = 20240611
    n: int = 1
    L: int = 10
    trials: int = 100
    ceiling: float = 1.0
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")

    @property
    def grid(self) -> Grid:
        return Grid(self.n, self.L)

    @property
    def label(self) -> str:
        return self.name or self.suite

    def param(self, key, default=None):
        return self.params.get(key, default)

    def with_overrides(self, **kw) -> ExperimentConfig:
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "seed": self.seed, "n": self.n, "L": self.L,
                "trials": self.trials, "ceiling": self.ceiling, "params": copy.deepcopy(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {"suite", "name", "seed", "n", "L", "trials", "ceiling", "params"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "suite" not in d:
            raise ValueError("config needs a 'suite'")
        return cls(suite=str(d["suite"]), name=str(d.get("name", "")), seed=int(d.get("seed", 20240611)),
                   n=int(d.get("n", 1)), L=int(d.get("L", 10)), trials=int(d.get("trials", 100)),
                   ceiling=float(d.get("ceiling", 1.0)), params=dict(d.get("params", {})))


@dataclass
class InequalityReport:
    suite: str
    config: dict
    trials: list
    max_ratio: float
    median_ratio: float
    witness: dict
    ceiling: float
    passed: bool
    checks: dict = field(default_factory=dict)
    controls: list = field(default_factory=list)

    @property
    def suite_passed(self) -> bool:
        checks_ok = all(c.get("pass", True) for c in self.checks.values())
        controls_ok = all(c["failed_as_expected"] for c in self.controls)
        return self.passed and checks_ok and controls_ok

    def to_dict(self) -> dict:
        return _clean({
            "suite": self.suite, "config": self.config, "trials": self.trials,
            "max_ratio": self.max_ratio, "median_ratio": self.median_ratio, "witness": self.witness,
            "ceiling": self.ceiling, "pass": self.passed, "checks": self.checks, "controls": self.controls,
            "suite_pass": self.suite_passed,
        })


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def report_json(reports) -> str:
    reports = reports if isinstance(reports, list) else [reports]
    payload = [r.to_dict() for r in reports]
    return json.dumps(payload if len(payload) != 1 else payload[0], sort_keys=True, indent=1)


def reports_csv(reports) -> str:
    reports = reports if isinstance(reports, list) else [reports]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "trial", "lhs", "rhs", "ratio"])
    for r in reports:
        for t in r.trials:
            w.writerow([r.config.get("name") or r.suite, t["trial"], repr(float(t["lhs"])),
                        repr(float(t["rhs"])), repr(float(t["ratio"]))])
    return buf.getvalue()


# ---------------------------------------------------------------- small helpers


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return float(lhs / rhs)


def lp(F, p: float, w=None) -> float:
    a = np.abs(np.asarray(getattr(F, "values", F), dtype=float))
    dens = a**p if w is None else a**p * np.asarray(getattr(w, "values", w), dtype=float)
    return float(dens.mean() ** (1.0 / p))


def _young(desc) -> YoungFunction:
    return desc if isinstance(desc, YoungFunction) else from_descriptor(desc)


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _summary(cfg: ExperimentConfig, trials: list, ceiling: float):
    ratios = [t["ratio"] for t in trials]
    if not ratios:
        return 0.0, 0.0, {}, True
    i = int(np.argmax(ratios))
    mx = float(ratios[i])
    med = float(np.median(ratios))
    return mx, med, {"trial": trials[i]["trial"], **{k: v for k, v in trials[i].items() if k != "trial"}}, mx <= ceiling


def _finish(cfg: ExperimentConfig, trials, checks, controls) -> InequalityReport:
    mx, med, wit, ok = _summary(cfg, trials, cfg.ceiling)
    return InequalityReport(cfg.suite, cfg.to_dict(), trials, mx, med, wit, cfg.ceiling, ok, checks, controls)


def _control(name: str, trials: list, ceiling: float) -> dict:
    mx = max((t["ratio"] for t in trials), default=0.0)
    return {"name": name, "max_ratio": mx, "ceiling": ceiling, "trials": trials,
            "failed_as_expected": bool(mx > ceiling)}


def _negative(cfg: ExperimentConfig) -> bool:
    return cfg.param("control") == "negative"


# ---------------------------------------------------------------- weight zoo


def weight_from_recipe(grid: Grid, rng: np.random.Generator, kind: str, **kw) -> GridFunction:
    """Weights: constants, ``(M spike)^r``, ``w^(1-p')`` of those, per-cube rescaled patchworks."""
    N = grid.N
    if kind == "constant":
        return GridFunction.constant(grid, float(rng.uniform(0.5, 2.0)))
    if kind == "maxspike":
        cell = tuple(int(i) for i in rng.integers(0, N, size=grid.n))
        r = float(kw.get("r", rng.uniform(0.2, 0.8)))
        return maxspike_weight(grid, cell, r)
    if kind == "a1dual":
        cell = tuple(int(i) for i in rng.integers(0, N, size=grid.n))
        r = float(rng.uniform(0.2, 0.8))
        p = float(kw.get("p", rng.choice([1.5, 2.0, 3.0])))
        return (maxspike_weight(grid, cell, r) ** (1.0 - dual_exponent(p))).as_weight(W_MIN)
    if kind == "patchwork":
        out = np.zeros(grid.shape)
        P = grid.partition(min(2, grid.L))
        for q in P.cubes():
            cell = tuple(int(i) for i in rng.integers(0, N, size=grid.n))
            r = float(rng.choice([0.3, 0.7]))
            w = maxspike_weight(grid, cell, r).values
            sl = q.slices()
            out[sl] = w[sl] / w[sl].mean()
        return GridFunction(grid, out).as_weight(W_MIN)
    if kind == "spike":
        v = np.full(grid.shape, W_MIN)
        cell = kw.get("cell") or tuple(int(i) for i in rng.integers(0, N, size=grid.n))
        v[tuple(cell)] = 1.0
        return GridFunction(grid, v)
    raise ValueError(f"unknown weight recipe {kind!r}")


def rubio_weight(grid: Grid, rng: np.random.Generator, phi: YoungFunction, q: float) -> GridFunction:
    """Rubio de Francia image of a random test function: an element of ``RH_phi``."""
    h = test_function(grid, rng)
    op = estimate_opnorm(phi, q, grid=grid)
    return rubio_iterate(h, phi, q, opnorm=op, measure=False).Rh.as_weight(W_MIN)


# ---------------------------------------------------------------- suite: A_infty fraction for RH_Psi weights


LEMMA34_PSIS = [
    ({"variant": "power", "params": {"p": 2.0}}, 3.0),
    ({"variant": "logbump", "params": {"p": 2.0, "delta": 1.0}}, 3.0),
    ({"variant": "oscillatory", "params": {"s": 3.0, "a": 1.0}}, 6.0),
]
LEMMA34_KINDS = ("rubio", "maxspike", "rubio", "patchwork", "rubio", "constant")


def suite_lemma34(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """RH_Psi weights (Rubio images, maximal-function powers, patchworks) and their A_inf ``beta`` at ``alpha``."""
    grid = cfg.grid
    alpha = float(cfg.param("alpha", 0.5))
    psis = [(_young(d), float(q)) for d, q in cfg.param("psis", LEMMA34_PSIS)]
    threshold = float(cfg.param("membership_threshold", 1e6))
    per = max(cfg.trials // max(len(psis), 1), 1)

    def one(i):
        rng = trial_rng(cfg.seed, i)
        psi, q = psis[i // per % len(psis)]
        kind = "spike" if _negative(cfg) else LEMMA34_KINDS[i % len(LEMMA34_KINDS)]
        w = rubio_weight(grid, rng, psi, q) if kind == "rubio" else weight_from_recipe(grid, rng, kind)
        rh = rh_characteristic(w, psi).value
        beta = ainfty_condition(w, alpha)
        return {"trial": i, "psi": psi.describe(), "weight": kind, "rh_psi": rh, "member": rh <= threshold,
                "lhs": beta, "rhs": 1.0, "ratio": beta}

    trials = _map(one, range(per * len(psis)), threads)
    checks = {"membership": {"pass": all(t["member"] for t in trials),
                             "max_rh_psi": max((t["rh_psi"] for t in trials), default=0.0)},
              "beta_below_one": {"pass": all(t["ratio"] < 1 for t in trials)}}
    controls = []
    if not _negative(cfg):
        ctrl = []
        for j in range(int(cfg.param("control_trials", 3))):
            rng = trial_rng(cfg.seed, 10**6 + j)
            w = weight_from_recipe(grid, rng, "spike")
            beta = ainfty_condition(w, alpha)
            ctrl.append({"trial": j, "lhs": beta, "rhs": 1.0, "ratio": beta})
        controls.append(_control("spike weight", ctrl, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


# ---------------------------------------------------------------- bump pairs


def _bump_sup(grid: Grid, u_norms, others) -> float:
    best = 0.0
    for k, un in enumerate(u_norms):
        prod = un.copy()
        for o in others:
            prod = prod * o[k]
        best = max(best, float(prod.max()))
    return best


def bump_pair(grid: Grid, v_list, u_phi: YoungFunction | None, psis, u_power: float | None = None,
              normalize: bool = True):
    """Weights ``u`` with ``sup_Q ||u||_{u_phi,Q} prod_i ||v_i^-1||_{psi_i,Q}`` measured and scaled to 1.

    ``u = 1 / prod_i M_{psi_i}(v_i^-1)`` before scaling; with ``u_power`` the
    ``u`` side uses the plain ``L^u_power`` average instead of a Luxemburg norm.
    """
    parts = all_partitions(shifted_grids(grid.n, grid.L))
    inv = [GridFunction(grid, 1.0 / v.values) for v in v_list]
    if normalize:
        den = np.ones(grid.shape)
        for vi, psi in zip(inv, psis):
            den = den * orlicz_maximal(vi, psi).values
        u = GridFunction(grid, 1.0 / den)
    else:
        u = GridFunction.constant(grid)
    others = [orlicz_norms(vi.values, parts, psi) for vi, psi in zip(inv, psis)]
    if u_power is None:
        un = orlicz_norms(u.values, parts, u_phi)
    else:
        un = [P.means(u.values**u_power) ** (1.0 / u_power) for P in parts]
    A = _bump_sup(grid, un, others)
    if normalize:
        u = GridFunction(grid, u.values / A)
        A_after = _bump_sup(grid, [x / A for x in un], others)
    else:
        A_after = A
    return u.as_weight(W_MIN), A_after


V_KINDS = ("constant", "maxspike", "a1dual", "patchwork")


def _dip_weight(grid: Grid, cell) -> GridFunction:
    v = np.ones(grid.shape)
    v[tuple(cell)] = 1e-6
    return GridFunction(grid, v)


# ---------------------------------------------------------------- suite: two-weight CZO


def suite_two_weight_czo(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """``||(T^S f) u||_p`` against ``||M_{conj psi}(f v)||_p`` for measured bump pairs ``(u, v)``."""
    grid = cfg.grid
    p = float(cfg.param("p", 2.0))
    phi = _young(cfg.param("phi", {"variant": "logbump", "params": {"p": 2.0, "delta": 1.0}}))
    psi = _young(cfg.param("psi", {"variant": "logbump", "params": {"p": 2.0, "delta": 1.0}}))
    psibar = psi.conjugate()
    corollary = psibar.bp_test(p).verdict.value == "InBp"

    def one(i):
        rng = trial_rng(cfg.seed, i)
        if _negative(cfg):
            cell = tuple(int(c) for c in rng.integers(0, grid.N, size=grid.n))
            f = spike(grid, cell, float(grid.N**grid.n))
            v = _dip_weight(grid, cell)
            u, A = bump_pair(grid, [v], phi, [psi], normalize=False)
        else:
            f = test_function(grid, rng)
            v = weight_from_recipe(grid, rng, V_KINDS[i % len(V_KINDS)])
            u, A = bump_pair(grid, [v], phi, [psi])
        lhs = lp(sparse_sum(f).values * u.values, p)
        rhs = lp(orlicz_maximal(f * v, psibar).values, p)
        out = {"trial": i, "bump_sup": A, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if corollary:
            out["corollary_ratio"] = ratio(lhs, lp(f.values * v.values, p))
        if grid.n == 1:
            from .sparse import czo_apply

            out["czo_ratio"] = ratio(lp(czo_apply(f).values * u.values, p), rhs)
        return out

    trials = _map(one, range(cfg.trials), threads)
    checks = {"bump_measured": {"pass": all(t["bump_sup"] <= 1 + 1e-9 for t in trials) or _negative(cfg),
                                "max": max((t["bump_sup"] for t in trials), default=0.0)}}
    if corollary:
        cc = float(cfg.param("corollary_ceiling", math.inf))
        mx = max((t["corollary_ratio"] for t in trials), default=0.0)
        checks["corollary"] = {"max_ratio": mx, "ceiling": cc, "pass": mx <= cc or _negative(cfg)}
    controls = []
    if not _negative(cfg):
        neg = cfg.with_overrides(trials=int(cfg.param("control_trials", 3)),
                                 params={**cfg.params, "control": "negative"})
        r = suite_two_weight_czo(neg)
        controls.append(_control("unnormalized dip pair with spike", r.trials, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


# ---------------------------------------------------------------- suite: bilinear sparse


BILINEAR_REGIMES = {
    "gt1": {"p1": 4.0, "p2": 4.0, "phi": {"variant": "logbump", "params": {"p": 2.0, "delta": 1.0}},
            "psi": {"variant": "logbump", "params": {"p": 4.0 / 3.0, "delta": 1.0}}},
    "le1": {"p1": 4.0 / 3.0, "p2": 4.0 / 3.0, "phi": None,
            "psi": {"variant": "logbump", "params": {"p": 4.0, "delta": 1.0}}},
}


def bilinear_sparse_sum(f: GridFunction, g: GridFunction, grids=None, a: float | None = None):
    """``sum_k T^{S_k}(f, g)`` over the shifted grids with bilinear stopping families."""
    a = bilinear_stopping_constant(2) if a is None else a
    grids = grids or shifted_grids(f.grid.n, f.grid.L)
    out = np.zeros(f.values.shape)
    fams = []
    for G in grids:
        cubes = _cubes_from_selection(G, cz_stopping([f, g], G, a))
        if not cubes:
            continue
        fam = sparse_check(cubes)
        fams.append(fam)
        out += sparse_apply2(fam, f, g).values
    return GridFunction(f.grid, out), fams


def suite_bilinear(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """``||T^S(f,g) u||_p`` against ``||M_{conj psi1, conj psi2}(f v1, g v2)||_p``."""
    grid = cfg.grid
    regime = cfg.param("regime", "gt1")
    base = BILINEAR_REGIMES[regime]
    p1 = float(cfg.param("p1", base["p1"]))
    p2 = float(cfg.param("p2", base["p2"]))
    p = p1 * p2 / (p1 + p2)
    if (p > 1) != (regime == "gt1"):
        raise ValueError(f"regime {regime} inconsistent with p = {p}")
    psi = _young(cfg.param("psi", base["psi"]))
    psibar = psi.conjugate()
    phi = None if regime == "le1" else _young(cfg.param("phi", base["phi"]))
    corollary = psibar.bp_test(p1).verdict.value == "InBp"

    def one(i):
        rng = trial_rng(cfg.seed, i)
        if _negative(cfg):
            cell = tuple(int(c) for c in rng.integers(0, grid.N, size=grid.n))
            f = spike(grid, cell, float(grid.N**grid.n))
            g = GridFunction.constant(grid)
            v1, v2 = _dip_weight(grid, cell), GridFunction.constant(grid)
            u, A = bump_pair(grid, [v1, v2], phi, [psi, psi], u_power=None if phi else p, normalize=False)
        else:
            f, g = test_function(grid, rng), test_function(grid, rng)
            v1 = weight_from_recipe(grid, rng, V_KINDS[i % len(V_KINDS)])
            v2 = weight_from_recipe(grid, rng, V_KINDS[(i // 4) % len(V_KINDS)])
            u, A = bump_pair(grid, [v1, v2], phi, [psi, psi], u_power=None if phi else p)
        T, fams = bilinear_sparse_sum(f, g)
        lhs = lp(T.values * u.values, p)
        rhs = lp(bisublinear_maximal(f * v1, g * v2, psibar, psibar).values, p)
        out = {"trial": i, "bump_sup": A, "families": len(fams), "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if corollary:
            out["corollary_ratio"] = ratio(lhs, lp(f.values * v1.values, p1) * lp(g.values * v2.values, p2))
        return out

    trials = _map(one, range(cfg.trials), threads)
    checks = {"bump_measured": {"pass": all(t["bump_sup"] <= 1 + 1e-9 for t in trials) or _negative(cfg),
                                "max": max((t["bump_sup"] for t in trials), default=0.0)},
              "p": {"value": p, "pass": True}}
    if corollary:
        cc = float(cfg.param("corollary_ceiling", math.inf))
        mx = max((t["corollary_ratio"] for t in trials), default=0.0)
        checks["corollary"] = {"max_ratio": mx, "ceiling": cc, "pass": mx <= cc or _negative(cfg)}
    controls = []
    if not _negative(cfg):
        neg = cfg.with_overrides(trials=int(cfg.param("control_trials", 3)),
                                 params={**cfg.params, "control": "negative"})
        r = suite_bilinear(neg)
        controls.append(_control("unnormalized dip triple with spike", r.trials, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


# ---------------------------------------------------------------- suite: bilinear fractional


RHINF_KINDS = ("constant", "a1dual", "negmaxspike")


def rhinf_weight(grid: Grid, rng: np.random.Generator, kind: str) -> GridFunction:
    if kind == "negmaxspike":
        cell = tuple(int(i) for i in rng.integers(0, grid.N, size=grid.n))
        return (maxspike_weight(grid, cell, float(rng.uniform(0.2, 0.8))) ** -1.0).as_weight(W_MIN)
    return weight_from_recipe(grid, rng, kind)


def _bibdd_sum(f: GridFunction, g: GridFunction, w: GridFunction, alpha: float) -> float:
    """``sum_Q |Q|^(alpha/n) (avg_{3Q} f)(avg_{3Q} g) w(Q)`` over standard cubes (integrals as box means)."""
    grid = f.grid.standard
    n = grid.n
    total = 0.0
    vol = float(grid.N**n)
    for k, pr in enumerate(_dilated_products(f, g)):
        P = grid.partition(k)
        meas = P.counts / vol
        total += float(np.sum(meas ** (alpha / n) * pr * P.sums(w.values) / vol))
    return total


def suite_bifractional_cf(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """``||BI^D_alpha(f,g)||_{L^p(w)}`` against ``||M_alpha(f,g)||_{L^p(w)}`` for RH_inf weights."""
    grid = cfg.grid
    n = grid.n
    alphas = [float(a) * n for a in cfg.param("alpha_over_n", [0.25, 0.5])]
    ps = [float(p) for p in cfg.param("ps", [0.5, 2.0 / 3.0, 1.0])]
    threshold = float(cfg.param("membership_threshold", 1e6))
    combos = [(a, p) for a in alphas for p in ps]

    def one(i):
        rng = trial_rng(cfg.seed, i)
        alpha, p = combos[i % len(combos)]
        if _negative(cfg):
            N = grid.N
            m = max(N // 8, 1)
            x0 = tuple([N // 2] * n)
            f = spike(grid, tuple(c - m for c in x0), float(N**n))
            g = spike(grid, tuple(c + m for c in x0), float(N**n))
            w = weight_from_recipe(grid, rng, "spike", cell=x0)
        else:
            f, g = test_function(grid, rng), test_function(grid, rng)
            w = rhinf_weight(grid, rng, RHINF_KINDS[i % len(RHINF_KINDS)])
        rh = rh_characteristic(w, math.inf).value
        BD = bi_fractional_dyadic(f, g, alpha).values
        Ma = frac_maximal_bilinear(f, g, alpha).values
        lhs, rhs = lp(BD, p, w), lp(Ma, p, w)
        BI = bi_fractional_direct(f, g, alpha).values
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(BI > 0, BI / BD, 0.0)
        integral = float(np.mean(BD * w.values))
        bdd = _bibdd_sum(f, g, w, alpha)
        out = {"trial": i, "alpha": alpha, "p": p, "rh_inf": rh, "member": rh <= threshold,
               "pointwise_BI_over_BID": float(pw.max()), "bibdd_ratio": ratio(integral, bdd),
               "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if not _negative(cfg) and f.values.any() and g.values.any():
            try:
                fam = stopping_sparse(f, g)
                out["stopping_sparse"] = {"cubes": len(fam), "packing": fam.packing, "a": fam.params["a"]}
            except NotSparseError as e:
                out["stopping_sparse"] = {"violation": e.to_dict()}
        return out

    trials = _map(one, range(cfg.trials), threads)
    pw_bound = max(2.0 ** (n - a) for a in alphas)
    bdd_ceiling = float(cfg.param("bibdd_ceiling", math.inf))
    checks = {
        "membership": {"pass": all(t["member"] for t in trials) or _negative(cfg)},
        "pointwise_BI_le_C_BID": {"max": max((t["pointwise_BI_over_BID"] for t in trials), default=0.0),
                                  "bound": pw_bound,
                                  "pass": all(t["pointwise_BI_over_BID"] <= 2.0 ** (n - t["alpha"]) * (1 + 1e-12)
                                              for t in trials)},
        "bibdd": {"max": max((t["bibdd_ratio"] for t in trials), default=0.0), "ceiling": bdd_ceiling,
                  "pass": _negative(cfg) or all(t["bibdd_ratio"] <= bdd_ceiling for t in trials)},
        "stopping_sparse": {"pass": all("violation" not in t.get("stopping_sparse", {}) for t in trials),
                            "checked": sum("stopping_sparse" in t for t in trials)},
    }
    controls = []
    if not _negative(cfg):
        neg = cfg.with_overrides(trials=int(cfg.param("control_trials", 3)),
                                 params={**cfg.params, "control": "negative"})
        r = suite_bifractional_cf(neg)
        controls.append(_control("separated spike pair, spike weight at midpoint", r.trials, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


# ---------------------------------------------------------------- extrapolation family


def sparse_sum(f: GridFunction) -> GridFunction:
    """``sum_k T^{S_k} |f|`` over the shifted grids, in any dimension."""
    return sparse_dominate(np.abs(f), czo=np.abs).rhs


def family_pair(f: GridFunction, psi0bar: YoungFunction):
    """``(F, G) = (sum_k T^{S_k} f, M_{conj psi0} f)``."""
    return sparse_sum(f), orlicz_maximal(f, psi0bar)


def duality_function(F: GridFunction, w: GridFunction, p0: float, p: float) -> GridFunction:
    """``h >= 0`` with ``||h||_{(p/p0)'} = 1`` and ``int F^p0 w^(p0/p) h = ||F||_{L^p(w)}^p0``."""
    phi = np.abs(F.values) ** p0 * w.values ** (p0 / p)
    P = p / p0
    h = phi ** (P - 1)
    nrm = lp(h, dual_exponent(P))
    return GridFunction(F.grid, h / nrm if nrm > 0 else h)


def _class_weight(grid, rng, kind, phi, q):
    if kind == "rubio":
        return rubio_weight(grid, rng, phi, q)
    return weight_from_recipe(grid, rng, kind)


EXTRAP_KINDS = ("rubio", "maxspike", "constant", "patchwork")


def suite_extrapolation_consistency(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """Hypothesis at ``p0`` over sampled ``RH_psi0`` weights, conclusion at ``p`` over ``RH_psi`` weights.

    ``Psi`` is ``psi0`` rescaled by ``r``; a few trials also rebuild the
    proof's majorant ``H`` and check every link of the duality chain.
    """
    grid = cfg.grid
    p0, q0, p = (float(cfg.param(k, d)) for k, d in (("p0", 1.0), ("q0", 2.0), ("p", 1.5)))
    triple = exponents(p0, q0, p)
    psi0 = _young(cfg.param("psi0", {"variant": "power", "params": {"p": 1.5}}))
    psi0bar = psi0.conjugate()
    psi = psi0 if triple.endpoint else psi0.rescale_outer(triple.r)
    q_hyp = float(cfg.param("q_hyp", 2.0))
    q_con = float(cfg.param("q_con", 4.0))
    chain_trials = int(cfg.param("chain_trials", 4))
    hyp_trials = int(cfg.param("hypothesis_trials", 40))
    threshold = float(cfg.param("membership_threshold", 1e6))

    def hyp(i):
        rng = trial_rng(cfg.seed, 10**5 + i)
        f = test_function(grid, rng)
        w = _class_weight(grid, rng, EXTRAP_KINDS[i % len(EXTRAP_KINDS)], psi0, q_hyp)
        F, G = family_pair(f, psi0bar)
        lhs, rhs = lp(F, p0, w), lp(G, p0, w)
        return {"trial": i, "rh_psi0": rh_characteristic(w, psi0).value, "lhs": lhs, "rhs": rhs,
                "ratio": ratio(lhs, rhs)}

    def one(i):
        rng = trial_rng(cfg.seed, i)
        f = test_function(grid, rng)
        if _negative(cfg):
            w = weight_from_recipe(grid, rng, "spike")
            F, G = sparse_sum(f), f
            lhs, rhs = lp(F, p, w), lp(G, p, w)
            return {"trial": i, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs), "family": "(T^S f, f)"}
        if triple.endpoint:
            w = rhinf_weight(grid, rng, RHINF_KINDS[i % len(RHINF_KINDS)])
            member = rh_characteristic(w, math.inf).value
        else:
            w = _class_weight(grid, rng, EXTRAP_KINDS[i % len(EXTRAP_KINDS)], psi, q_con)
            member = rh_characteristic(w, psi).value
        F, G = family_pair(f, psi0bar)
        lhs, rhs = lp(F, p, w), lp(G, p, w)
        out = {"trial": i, "class_char": member, "member": member <= threshold,
               "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if i < chain_trials and lhs > 0 and triple.p != triple.p0:
            out["chain"] = _duality_chain(F, G, w, triple, psi0)
        return out

    hyp_rep = _map(hyp, range(hyp_trials), threads) if not _negative(cfg) else []
    trials = _map(one, range(cfg.trials), threads)
    hyp_max = max((t["ratio"] for t in hyp_rep), default=0.0)
    hyp_ceiling = float(cfg.param("hypothesis_ceiling", math.inf))
    checks = {
        "hypothesis": {"status": "sampled", "max_ratio": hyp_max, "ceiling": hyp_ceiling,
                       "trials": len(hyp_rep), "pass": hyp_max <= hyp_ceiling},
        "membership": {"pass": _negative(cfg) or all(t["member"] for t in trials)},
        "chain": {"pass": all(t["chain"]["pass"] for t in trials if "chain" in t),
                  "checked": sum("chain" in t for t in trials)},
        "exponents": {**triple.to_dict(), "pass": triple.identity_residual() <= 1e-12},
    }
    controls = []
    if not _negative(cfg):
        neg = cfg.with_overrides(trials=int(cfg.param("control_trials", 3)),
                                 params={**cfg.params, "control": "negative"})
        r = suite_extrapolation_consistency(neg)
        controls.append(_control("family without maximal control, spike weight", r.trials, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


def _duality_chain(F, G, w, triple, psi0) -> dict:
    """Each link of ``||F||^p0 = int F^p0 w' h <= int F^p0 w' H <= C int G^p0 w' H <= C ||G||^p0 ||H||``."""
    p0, p = triple.p0, triple.p
    h = duality_function(F, w, p0, p)
    con = build_H(h, w, triple, psi0)
    H = con.H
    wp = w.values ** (p0 / p)
    Fp, Gp = np.abs(F.values) ** p0, np.abs(G.values) ** p0
    start = float(np.mean(Fp * wp * h.values))
    target = lp(F, p, w) ** p0
    link1 = float(np.mean(Fp * wp * H.values))
    link2_rhs = float(np.mean(Gp * wp * H.values))
    c_hyp = ratio(link1, link2_rhs)
    holder = lp(G, p, w) ** p0 * lp(H, triple.h_exponent)
    tol = 1e-9
    ok = (abs(start - target) <= tol * target and start <= link1 * (1 + tol)
          and link2_rhs <= holder * (1 + tol) and con.passed)
    return {"duality": start, "target": target, "majorant": link1, "hypothesis_weight_ratio": c_hyp,
            "holder_rhs": holder, "H_properties": con.properties, "pass": bool(ok)}


# ---------------------------------------------------------------- suite: unweighted


def suite_unweighted(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    """``||F||_p / ||G||_p`` for ``0 < p <= q0`` at ``w = 1``, with the proof chains of both branches."""
    grid = cfg.grid
    p0, q0 = float(cfg.param("p0", 1.0)), float(cfg.param("q0", 2.0))
    ps = [float(x) for x in cfg.param("ps", [0.5, 0.75, 1.0, 1.5, 2.0])]
    psi0 = _young(cfg.param("psi0", {"variant": "power", "params": {"p": 1.5}}))
    psi0bar = psi0.conjugate()
    chain_trials = int(cfg.param("chain_trials", 10))
    one_w = GridFunction.constant(grid)

    def one(i):
        rng = trial_rng(cfg.seed, i)
        p = ps[i % len(ps)]
        f = test_function(grid, rng)
        if _negative(cfg):
            p = float(cfg.param("control_p", 0.5))
            f = spike(grid, tuple(int(c) for c in rng.integers(0, grid.N, size=grid.n)), float(grid.N**grid.n))
            F, G = maximal(f), f
            lhs, rhs = lp(F, p), lp(G, p)
            return {"trial": i, "p": p, "family": "(Mf, f)", "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        F, G = family_pair(f, psi0bar)
        lhs, rhs = lp(F, p), lp(G, p)
        out = {"trial": i, "p": p, "lhs": lhs, "rhs": rhs, "ratio": ratio(lhs, rhs)}
        if i < chain_trials and lhs > 0:
            if p < p0:
                out["chain"] = _small_p_chain(F, G, p, p0)
            elif p0 < p < q0:
                out["chain"] = _rubio_chain(F, G, exponents(p0, q0, p), psi0, one_w)
        return out

    trials = _map(one, range(cfg.trials), threads)
    checks = {"chain": {"pass": all(t["chain"]["pass"] for t in trials if "chain" in t),
                        "checked": sum("chain" in t for t in trials)}}
    controls = []
    if not _negative(cfg):
        neg = cfg.with_overrides(trials=int(cfg.param("control_trials", 3)),
                                 params={**cfg.params, "control": "negative"})
        r = suite_unweighted(neg)
        controls.append(_control("(Mf, f) below p = 1", r.trials, cfg.ceiling))
    return _finish(cfg, trials, checks, controls)


def _rubio_chain(F, G, triple, psi0, w) -> dict:
    p0, p = triple.p0, triple.p
    h = duality_function(F, w, p0, p)
    q = triple.h_exponent
    it = rubio_iterate(h, psi0, q, opnorm=estimate_opnorm(psi0, q, grid=F.grid))
    R = it.Rh.values
    Fp, Gp = np.abs(F.values) ** p0, np.abs(G.values) ** p0
    start = float(np.mean(Fp * h.values))
    link1 = float(np.mean(Fp * R))
    link2 = float(np.mean(Gp * R))
    holder = lp(G, p) ** p0 * lp(R, q)
    tol = 1e-9
    ok = start <= link1 * (1 + tol) and link2 <= holder * (1 + tol) and it.passed
    return {"duality": start, "majorant": link1, "hypothesis_weight_ratio": ratio(link1, link2),
            "holder_rhs": holder, "rubio": it.to_dict(), "pass": bool(ok)}


def _small_p_chain(F, G, p, p0) -> dict:
    rr = 2.0 / p
    con = build_H_small_p(G, p, p0, rr)
    H = con.H.values
    Fp = np.abs(F.values)
    lhs = lp(F, p) ** p
    a = float(np.mean(Fp**p0 * H ** (-p0 / p)))
    b = float(np.mean(H ** dual_exponent(p0 / p)))
    holder = a ** (p / p0) * b ** (1.0 / dual_exponent(p0 / p))
    g_r = np.abs(G.values) ** (1.0 / rr)
    m_ratio = ratio(lp(maximal(GridFunction(G.grid, g_r)), p * rr), lp(g_r, p * rr))
    hyp_w = float(np.mean(np.abs(G.values) ** p0 * H ** (-p0 / p)))
    tol = 1e-9
    ok = lhs <= holder * (1 + tol) and con.passed
    return {"lhs_p": lhs, "holder_rhs": holder, "hypothesis_weight_ratio": ratio(a, hyp_w),
            "maximal_norm_ratio": m_ratio, "rh_inf": con.rh_inf, "pass": bool(ok)}


# ---------------------------------------------------------------- registry and reference configs


# Pointwise |Tf| / sum_k T^{S_k}|f| for the 1D test CZO: calibration maximum 4.08 over
# 100 seeded f (half of them with random signs), frozen at roughly twice that.
DOMINATION_CEILING = 8.0


def domination_sweep(seed: int = 20240611, trials: int = 100, L: int = 10) -> list[float]:
    """Pointwise domination ratios over seeded test functions; odd trials get random signs."""
    grid = Grid(1, L)
    out = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        f = test_function(grid, rng)
        if i % 2:
            f = GridFunction(grid, f.values * rng.choice([-1.0, 1.0], size=grid.shape))
        out.append(sparse_dominate(f).ratio)
    return out


SUITES = {
    "lemma34": suite_lemma34,
    "two_weight_czo": suite_two_weight_czo,
    "bilinear": suite_bilinear,
    "bifractional_cf": suite_bifractional_cf,
    "extrapolation_consistency": suite_extrapolation_consistency,
    "unweighted": suite_unweighted,
}

# Calibrated on seed 20240611 and frozen; see README.  Ceilings are roughly twice the
# calibration maxima.  The two-dimensional set runs fewer trials to stay within budget.
REFERENCE = [
    {"suite": "lemma34", "trials": 150, "ceiling": 0.99, "params": {"alpha": 0.5}},
    {"suite": "two_weight_czo", "trials": 100, "ceiling": 10.0, "params": {"corollary_ceiling": 10.0}},
    {"suite": "bilinear", "name": "bilinear_gt1", "trials": 100, "ceiling": 10.0,
     "params": {"regime": "gt1", "corollary_ceiling": 10.0}},
    {"suite": "bilinear", "name": "bilinear_le1", "trials": 100, "ceiling": 10.0,
     "params": {"regime": "le1", "corollary_ceiling": 10.0}},
    {"suite": "bifractional_cf", "trials": 100, "ceiling": 20.0, "params": {"bibdd_ceiling": 10.0}},
    {"suite": "extrapolation_consistency", "trials": 100, "ceiling": 10.0,
     "params": {"hypothesis_ceiling": 10.0}},
    {"suite": "unweighted", "trials": 100, "ceiling": 10.0, "params": {}},
]

REFERENCE_2D = [
    {"suite": "lemma34", "n": 2, "L": 6, "trials": 24, "ceiling": 0.99, "params": {"alpha": 0.5}},
    {"suite": "two_weight_czo", "n": 2, "L": 6, "trials": 24, "ceiling": 30.0,
     "params": {"corollary_ceiling": 30.0}},
    {"suite": "bilinear", "name": "bilinear_gt1", "n": 2, "L": 6, "trials": 24, "ceiling": 10.0,
     "params": {"regime": "gt1", "corollary_ceiling": 10.0}},
    {"suite": "bilinear", "name": "bilinear_le1", "n": 2, "L": 6, "trials": 24, "ceiling": 10.0,
     "params": {"regime": "le1", "corollary_ceiling": 10.0}},
    {"suite": "bifractional_cf", "n": 2, "L": 6, "trials": 24, "ceiling": 20.0, "params": {"bibdd_ceiling": 10.0}},
    {"suite": "extrapolation_consistency", "n": 2, "L": 6, "trials": 24, "ceiling": 20.0,
     "params": {"hypothesis_ceiling": 20.0, "hypothesis_trials": 16, "chain_trials": 2}},
    {"suite": "unweighted", "n": 2, "L": 6, "trials": 24, "ceiling": 20.0, "params": {}},
]


def reference_configs(seed: int | None = None, suites=None, dim: int = 1) -> list[ExperimentConfig]:
    table = {1: REFERENCE, 2: REFERENCE_2D}
    if dim not in table:
        raise ValueError("reference configs exist for dim 1 and 2")
    out = []
    for d in table[dim]:
        cfg = ExperimentConfig.from_dict(d)
        if seed is not None:
            cfg = cfg.with_overrides(seed=seed)
        if suites and cfg.suite not in suites and cfg.label not in suites:
            continue
        out.append(cfg)
    return out


def negative_configs(suites=None, dim: int = 1) -> list[ExperimentConfig]:
    out = []
    for cfg in reference_configs(suites=suites, dim=dim):
        out.append(cfg.with_overrides(trials=3, params={**cfg.params, "control": "negative"}))
    return out


def load_configs(path) -> list[ExperimentConfig]:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "experiments" in data:
        data = data["experiments"]
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ValueError("config must be an object, a list, or {'experiments': [...]}")
    return [ExperimentConfig.from_dict(d) for d in data]


def run_suite(cfg: ExperimentConfig, threads: int = 1) -> InequalityReport:
    return SUITES[cfg.suite](cfg, threads=threads)


def run_configs(configs, threads: int = 1) -> list[InequalityReport]:
    return [run_suite(c, threads) for c in configs]
