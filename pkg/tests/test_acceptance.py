"""Acceptance criteria, one test and one summary line each.

Tolerances and trial counts are pinned here; ceilings for the inequality
suites live in the frozen reference configurations of ``orlx.harness``.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np

from orlx import harness, zoo
from orlx.cli import main
from orlx.dyadic import Grid, GridFunction, cells, shifted_grids
from orlx.orlicz import gen_holder, holder_pair, orlicz_norm
from orlx.rubio import DEFAULT_K, auxiliary_functions, estimate_opnorm, exponents, rubio_iterate
from orlx.sparse import _cubes_from_selection, bilinear_stopping_constant, cz_stopping, sparse_check, \
    sparse_dominate, stopping_sparse
from orlx.young import LogBump, Oscillatory, Power, dual_exponent

from .oracles import audit_family

SEED = 20240611
TIME_BUDGET = 60.0


def random_cube(grid, rng):
    grids = shifted_grids(grid.n, grid.L)
    G = grids[int(rng.integers(len(grids)))]
    level = int(rng.integers(0, grid.L + 1))
    pool = list(cells(G, level))
    return pool[int(rng.integers(len(pool)))]


def timed_run(cfg, threads=1):
    t0 = time.perf_counter()
    rep = harness.run_suite(cfg, threads)
    return rep, time.perf_counter() - t0


# 1 ------------------------------------------------------------------------

def test_c01_power_norm_is_lp_average(criterion):
    rng = np.random.default_rng(SEED)
    worst, count = 0.0, 0
    for p in (1.5, 2.0, 3.0):
        for i in range(1000):
            grid = Grid(1, 10) if i % 2 else Grid(2, 6)
            f = GridFunction(grid, rng.lognormal(sigma=1.5, size=grid.shape))
            Q = random_cube(grid, rng)
            direct = float(np.mean(f.values[Q.slices()] ** p)) ** (1 / p)
            worst = max(worst, abs(orlicz_norm(f, Q, Power(p)) - direct) / direct)
            count += 1
    ok = worst <= 1e-9
    criterion(1, ok, f"max rel error {worst:.2e} <= 1e-9 over {count} (f, Q) pairs")
    assert ok


# 2 ------------------------------------------------------------------------

def test_c02_conjugate_duality(criterion):
    power_ok = all(Power(p).conjugate() == Power(dual_exponent(p)) for p in (1.25, 1.5, 2.0, 3.0, 7.0))
    t = np.logspace(-6, 6, 1000)
    s_grid = np.logspace(-3, 3, 100)
    lo_worst, hi_worst, slack_worst = math.inf, 0.0, -math.inf
    for phi in (LogBump(2.0, 1.0), LogBump(1.5, 0.5), Oscillatory(3.0, 1.0), Oscillatory(2.5, 0.5)):
        conj = phi.conjugate()
        prod = phi.inverse(t) * conj.inverse(t) / t
        lo_worst, hi_worst = min(lo_worst, prod.min()), max(hi_worst, prod.max())
        S, T = np.meshgrid(s_grid, s_grid, indexing="ij")
        rel = S * T / (phi(S) + conj(T)) - 1.0
        slack_worst = max(slack_worst, float(rel.max()))
    ok = power_ok and lo_worst >= 1 - 1e-9 and hi_worst <= 2.05 and slack_worst <= 1e-6
    criterion(2, ok, f"power conjugates exact={power_ok}; inverse product in [{lo_worst:.6f}, {hi_worst:.4f}] "
                     f"within [1, 2.05]; Young excess {slack_worst:.1e} <= 1e-6 on 100x100")
    assert ok


# 3 ------------------------------------------------------------------------

def test_c03_holder_suites(criterion):
    rng = np.random.default_rng(SEED + 3)
    grid = Grid(1, 8)
    phis = (Power(2.0), LogBump(2.0, 1.0), Oscillatory(3.0, 1.0))
    triples = [(Power(2.0), Power(2.0), Power(1.0))]
    for psi0 in (Power(1.5), LogBump(1.5, 1.0)):
        _, B, C = auxiliary_functions(psi0, exponents(1, 2, 1.5))
        triples.append((C, B, psi0))
    bad_pair = bad_gen = 0
    for i in range(1000):
        f = GridFunction(grid, rng.lognormal(sigma=1.5, size=grid.shape))
        g = GridFunction(grid, rng.lognormal(sigma=1.5, size=grid.shape))
        Q = random_cube(grid, rng)
        lhs, rhs = holder_pair(f, g, Q, phis[i % 3])
        bad_pair += lhs > rhs
        lhs, rhs = gen_holder(f, g, Q, *triples[i % 3])
        bad_gen += lhs > rhs
    ok = bad_pair == 0 and bad_gen == 0
    criterion(3, ok, f"holder_pair violations {bad_pair}/1000, gen_holder violations {bad_gen}/1000")
    assert ok


# 4 ------------------------------------------------------------------------

def test_c04_lemma34(criterion):
    cfg = harness.reference_configs(suites=["lemma34"])[0]
    rep, dt = timed_run(cfg)
    neg, _ = timed_run(harness.negative_configs(suites=["lemma34"])[0])
    n_weights = len({t["trial"] // 3 for t in rep.trials})
    n_psi = len({t["psi"] for t in rep.trials})
    below = all(t["ratio"] < 1 for t in rep.trials)
    ok = rep.suite_passed and below and n_weights >= 50 and n_psi == 3 and not neg.suite_passed and dt < TIME_BUDGET
    criterion(4, ok, f"{n_weights} weights x {n_psi} Psi, max beta {rep.max_ratio:.4f} < 1, "
                     f"spike control beta {neg.max_ratio:.12f} fails; {dt:.1f}s")
    assert ok


# 5 ------------------------------------------------------------------------

def _exact_triple(p0, q0, p):
    """The defining formulas, evaluated in exact rational arithmetic."""
    def dual(x):
        return x / (x - 1)
    r = dual(q0 / p0) / dual(q0 / p)
    inv_s = 1 / r - p0 / p
    return r, inv_s, dual(p / p0), dual(q0 / p)


def test_c05_exponent_calculus(criterion):
    rng = np.random.default_rng(SEED + 5)
    ident, vs_exact = 0.0, 0.0
    for _ in range(10_000):
        p0 = rng.uniform(0.1, 5)
        q0 = p0 * rng.uniform(1.01, 10)
        p = rng.uniform(p0, q0)
        if p in (p0, q0):
            continue
        t = exponents(p0, q0, p)
        ident = max(ident, t.identity_residual())
        exact = _exact_triple(Fraction(p0), Fraction(q0), Fraction(p))
        for got, want in zip((t.r, t.inv_s, t.h_exponent, t.target_dual), exact):
            vs_exact = max(vs_exact, abs(Fraction(got) - want) / abs(want))
    r, inv_s, h, td = _exact_triple(Fraction(1), Fraction(2), Fraction(3, 2))
    exact = (r, 1 / inv_s, inv_s * h, td) == (Fraction(1, 2), Fraction(3, 4), 4, 4)
    t = exponents(1, 2, 1.5)
    floats_exact = (t.r, t.s, t.inv_s * t.h_exponent, t.target_dual) == (0.5, 0.75, 4.0, 4.0)
    ok = ident <= 1e-12 and float(vs_exact) <= 1e-12 and exact and floats_exact
    criterion(5, ok, f"1e4 random triples: identity residual {ident:.1e}, max rel error against exact "
                     f"rational formulas {float(vs_exact):.1e} (both <= 1e-12); worked instance r=1/2, "
                     f"s=3/4, (1/s)(p/p0)'=4 exactly: {exact and floats_exact}")
    assert ok


# 6 ------------------------------------------------------------------------

RUBIO_CASES = ((Power(1.0), 2.0), (LogBump(1.5, 0.5), 3.0), (Power(2.0), 4.0), (Oscillatory(2.5, 0.5), 4.0))


def test_c06_rubio_iteration(criterion):
    grid = Grid(1, 10)
    t0 = time.perf_counter()
    failures, tail_bad, worst = [], 0, {"b": 0.0, "c": 0.0, "d": 0.0}
    for i in range(100):
        phi, q = RUBIO_CASES[i % 4]
        h = zoo.test_function(grid, harness.trial_rng(SEED + 6, i))
        op = estimate_opnorm(phi, q, grid=grid)
        full = rubio_iterate(h, phi, q, K=DEFAULT_K, opnorm=op)
        short = rubio_iterate(h, phi, q, K=20, opnorm=op, measure=False)
        pr = full.properties
        exact_a = bool(np.all(full.Rh.values >= np.abs(h.values)))
        if not (full.passed and exact_a):
            failures.append(i)
        worst["b"] = max(worst["b"], pr["b_norm"]["value"] / 2)
        worst["c"] = max(worst["c"], pr["c_fixed_point"]["value"] / (2 * op))
        worst["d"] = max(worst["d"], pr["d_reverse_holder"]["value"])
        hq = h.lp_norm(q)
        gap = (full.Rh - short.Rh).lp_norm(q)
        tail_bad += not (gap <= 2.0 ** -19 * hq and np.all(full.Rh.values >= short.Rh.values))
    dt = time.perf_counter() - t0
    ok = not failures and tail_bad == 0
    criterion(6, ok, f"100 cases, failures {failures}; max ||Rh||/(2||h||) {worst['b']:.3f}, "
                     f"max C/(2 opnorm) {worst['c']:.3f}, max [Rh]_RH {worst['d']:.2f}; "
                     f"K=40 vs K=20 tail violations {tail_bad}; {dt:.1f}s")
    assert ok


# 7 ------------------------------------------------------------------------

def test_c07_sparse_machinery(criterion):
    grid = Grid(1, 10)
    audited = bad = 0
    for i in range(100):
        rng = harness.trial_rng(SEED + 7, i)
        f, g = zoo.test_function(grid, rng), zoo.test_function(grid, rng)
        fam = stopping_sparse(f, g)
        audited += 1
        bad += not audit_family(fam)
    a16 = bilinear_stopping_constant(2)
    for i in range(20):
        rng = harness.trial_rng(SEED + 70, i)
        f, g = zoo.test_function(grid, rng), zoo.test_function(grid, rng)
        for fam in sparse_dominate(f).families:
            audited += 1
            bad += not audit_family(fam)
        for G in shifted_grids(1, grid.L):
            cubes = _cubes_from_selection(G, cz_stopping([f, g], G, a16))
            if cubes:
                audited += 1
                bad += not audit_family(sparse_check(cubes))
    ok = bad == 0
    criterion(7, ok, f"{audited} families re-audited from cell masks (100 stopping_sparse with default a), "
                     f"{bad} failures")
    assert ok


# 8 ------------------------------------------------------------------------

def test_c08_sparse_domination(criterion):
    ratios = harness.domination_sweep(SEED, 100, 10)
    mx = max(ratios)
    ok = len(ratios) == 100 and mx <= harness.DOMINATION_CEILING
    criterion(8, ok, f"max |Tf| / sum T^S|f| {mx:.3f} <= frozen {harness.DOMINATION_CEILING} over 100 f")
    assert ok


# 9 ------------------------------------------------------------------------

def test_c09_operator_suites(criterion):
    parts, ok = [], True
    for label in ("two_weight_czo", "bilinear_gt1", "bilinear_le1"):
        cfg = harness.reference_configs(suites=[label])[0]
        rep, dt = timed_run(cfg)
        neg, _ = timed_run(harness.negative_configs(suites=[label])[0])
        good = (rep.suite_passed and len(rep.trials) >= 100 and not neg.suite_passed and dt < TIME_BUDGET
                and all(c["failed_as_expected"] for c in rep.controls))
        ok &= good
        parts.append(f"{label} {rep.max_ratio:.2f}<={rep.ceiling:g} ctrl {neg.max_ratio:.3g} {dt:.0f}s")
    criterion(9, ok, "; ".join(parts))
    assert ok


# 10 -----------------------------------------------------------------------

def test_c10_bifractional(criterion):
    cfg = harness.reference_configs(suites=["bifractional_cf"])[0]
    rep, dt = timed_run(cfg)
    neg, _ = timed_run(harness.negative_configs(suites=["bifractional_cf"])[0])
    pw = rep.checks["pointwise_BI_le_C_BID"]
    ps = sorted({t["p"] for t in rep.trials})
    alphas = sorted({t["alpha"] / cfg.n for t in rep.trials})
    ok = (rep.suite_passed and pw["pass"] and not neg.suite_passed and dt < TIME_BUDGET
          and np.allclose(ps, [0.5, 2 / 3, 1.0]) and np.allclose(alphas, [0.25, 0.5]))
    criterion(10, ok, f"max ratio {rep.max_ratio:.2f} <= {rep.ceiling:g}; pointwise BI/BI^D {pw['max']:.3f} <= "
                      f"{pw['bound']:.3f}; control {neg.max_ratio:.3g} fails; {dt:.1f}s")
    assert ok


# 11 -----------------------------------------------------------------------

def test_c11_determinism(criterion, tmp_path, capsys):
    same = True
    for cfg in harness.reference_configs() + harness.reference_configs(dim=2):
        cfg = cfg.with_overrides(trials=6)
        a = harness.report_json(harness.run_suite(cfg, threads=1))
        b = harness.report_json(harness.run_suite(cfg, threads=1))
        c = harness.report_json(harness.run_suite(cfg, threads=4))
        same &= a == b == c
    path = tmp_path / "cfg.json"
    cfg = harness.reference_configs(suites=["bifractional_cf"])[0].with_overrides(trials=6)
    path.write_text(json.dumps(cfg.to_dict()))
    outs = []
    for threads in ("1", "3"):
        main(["verify", "--config", str(path), "--threads", threads])
        outs.append(capsys.readouterr().out)
    cli_same = outs[0] == outs[1]
    ok = same and cli_same
    criterion(11, ok, f"all 14 reference suites byte-identical across reruns and threads 1/4: {same}; "
                      f"CLI stdout identical for --threads 1/3: {cli_same}")
    assert ok
