import math

import numpy as np
import pytest

from orlx.dyadic import Grid, GridFunction
from orlx.maximal import maximal
from orlx.weights import (a1_characteristic, ainfty_condition, ainfty_report, ap_characteristic, gen_a1,
                          gen_rhinf_ap_pair, rh_characteristic, rh_exponent_search, rhinf_power_search)
from orlx.young import LogBump, Power
from orlx.zoo import maxspike_weight, spike

from .oracles import all_cubes, luxemburg, sweep


def _ramp(L=8, eps=1e-3):
    g = Grid(1, L)
    x = (np.arange(g.N) + 0.5) / g.N
    return GridFunction(g, np.maximum(x, eps))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_constant_weights_have_unit_characteristics(p):
    for c in (1.0, 7.5):
        w = GridFunction.constant(Grid(1, 5), c)
        assert ap_characteristic(w, p).value == pytest.approx(1.0)
        assert a1_characteristic(w).value == pytest.approx(1.0)
        assert rh_characteristic(w, 2.0).value == pytest.approx(1.0)
        assert rh_characteristic(w, math.inf).value == pytest.approx(1.0)
        assert rh_characteristic(w, LogBump(2, 1, normalized=True)).value == pytest.approx(1.0, rel=1e-8)


def test_ap_ramp_matches_sweep():
    w = _ramp()
    ref = sweep(w, lambda a: a.mean() * np.mean(a ** -1.0))
    rep = ap_characteristic(w, 2.0)
    assert rep.value == pytest.approx(ref, rel=1e-12)
    assert rep.member()


def test_a1_two_valued():
    g = Grid(1, 6)
    w = GridFunction(g, np.where(np.arange(64) < 32, 1.0, 2.0))
    # the whole box alone gives (3/2) * 1; shifted cubes straddling the jump do worse
    assert w.values.mean() / w.values.min() == 1.5
    ref = sweep(w, lambda a: a.mean() / a.min())
    assert ref >= 1.5
    assert a1_characteristic(w).value == pytest.approx(ref)


def test_a1_at_least_one(rng):
    w = GridFunction(Grid(2, 3), rng.lognormal(size=(8, 8)))
    assert a1_characteristic(w).value >= 1.0


def test_rh_psi_power_equals_rh_s(rng):
    w = GridFunction(Grid(1, 6), rng.lognormal(size=64))
    for s in (1.5, 2.0, 3.0):
        assert rh_characteristic(w, Power(s)).value == pytest.approx(rh_characteristic(w, s).value, rel=1e-9)


def test_rh_maximal_square_root_sweep():
    g = Grid(1, 7)
    w = maximal(spike(g, (40,), 128.0)) ** 0.5
    ref = sweep(w, lambda a: np.mean(a**2) ** 0.5 / a.mean())
    assert rh_characteristic(w, 2.0).value == pytest.approx(ref, rel=1e-12)
    ref_inf = sweep(w, lambda a: a.max() / a.mean())
    assert rh_characteristic(w, "inf").value == pytest.approx(ref_inf, rel=1e-12)


def test_rh_psi_matches_scalar_oracle(rng):
    g = Grid(1, 4)
    w = GridFunction(g, rng.lognormal(size=16))
    psi = LogBump(2, 1)
    ref = max(luxemburg(w.values[Q.slices()], psi) / w.values[Q.slices()].mean() for Q in all_cubes(g))
    assert rh_characteristic(w, psi).value == pytest.approx(ref, rel=1e-8)


def _beta_oracle(w, alpha):
    best = 0.0
    for Q in all_cubes(w.grid):
        a = np.sort(w.values[Q.slices()].ravel())[::-1]
        m = int(math.floor(alpha * a.size - 1e-12))
        best = max(best, a[:m].sum() / a.sum())
    return best


def test_ainfty_constant_is_fraction_bound():
    w = GridFunction.constant(Grid(1, 6))
    beta = ainfty_condition(w, 0.5)
    assert beta == pytest.approx(_beta_oracle(w, 0.5))
    assert beta < 0.5


def test_ainfty_matches_oracle(rng):
    for grid in (Grid(1, 6), Grid(2, 3)):
        w = GridFunction(grid, rng.lognormal(sigma=2, size=grid.shape))
        for alpha in (0.25, 0.5, 0.8):
            assert ainfty_condition(w, alpha) == pytest.approx(_beta_oracle(w, alpha), rel=1e-12)


def test_ainfty_spike_near_one():
    g = Grid(1, 8)
    w = spike(g, (100,), 1.0).as_weight()
    assert ainfty_condition(w, 0.5) > 0.999
    rep = ainfty_report(w, 0.5)
    assert rep.cube.mask()[100]


def test_rejects_nonpositive():
    g = Grid(1, 3)
    with pytest.raises(ValueError):
        a1_characteristic(GridFunction(g, [1, 0, 1, 1, 1, 1, 1, 1]))


def test_gen_a1_examples():
    g = Grid(1, 7)
    assert np.allclose(gen_a1(GridFunction.constant(g), 0.5).values, 1.0)
    prev = 0.0
    for r in (0.3, 0.5, 0.7, 0.9):
        w = gen_a1(spike(g, (30,), 128.0).as_weight(), r)
        val = a1_characteristic(w).value
        assert np.isfinite(val) and val >= 1
        prev = val
    assert prev > 1


def test_gen_rhinf_pair():
    g = Grid(1, 7)
    assert np.allclose(gen_rhinf_ap_pair(GridFunction.constant(g), 2.0).values, 1.0)
    w = maxspike_weight(g, (20,), 0.5)
    v = gen_rhinf_ap_pair(w, 2.0)
    np.testing.assert_allclose(v.values, 1.0 / w.values)
    assert rh_characteristic(v, math.inf).member()
    # (w^(1-p'))^(1-p) = w since (1-p')(1-p) = 1
    np.testing.assert_allclose((v ** (1 - 2.0)).values, w.values)


def test_searches():
    w = maxspike_weight(Grid(1, 7), (10,), 0.5)
    res = rh_exponent_search(w)
    assert res["best"] == 4.0
    assert rhinf_power_search(w ** -1.0)["all_pass"]


def test_report_serializes():
    rep = ap_characteristic(_ramp(L=5), 2.0)
    d = rep.to_dict()
    assert d["kind"] == "A_p" and d["params"] == {"p": 2.0}
    assert float(rep) == rep.value
