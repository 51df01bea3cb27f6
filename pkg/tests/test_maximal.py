import numpy as np
import pytest

from orlx.dyadic import Grid, GridFunction
from orlx.maximal import bisublinear_maximal, frac_maximal_bilinear, maximal, orlicz_maximal
from orlx.young import LogBump, Power
from orlx import zoo
from orlx.zoo import default_probes, spike

from .oracles import all_cubes, luxemburg, maximal_brute


def test_constant():
    assert np.allclose(maximal(GridFunction.constant(Grid(2, 3))).values, 1.0)


def test_half_indicator_profile():
    g = Grid(1, 6)
    f = GridFunction(g, (np.arange(64) < 32).astype(float))
    M = maximal(f).values
    assert np.all(M[:32] == 1.0) and np.all(M >= 0.5)
    np.testing.assert_allclose(M, maximal_brute(f, g), rtol=1e-14)


@pytest.mark.parametrize("grid", [Grid(1, 6), Grid(2, 3)])
def test_matches_brute_force(grid, rng):
    f = GridFunction(grid, rng.normal(size=grid.shape))
    M = maximal(f).values
    np.testing.assert_allclose(M, maximal_brute(f, grid), rtol=1e-13)
    assert np.all(M >= np.abs(f.values) * (1 - 1e-12))


def test_orlicz_maximal_specializations(rng):
    g = Grid(1, 6)
    f = GridFunction(g, rng.lognormal(size=64))
    np.testing.assert_allclose(orlicz_maximal(f, Power(1)).values, maximal(f).values, rtol=1e-9)
    np.testing.assert_allclose(orlicz_maximal(f, Power(3)).values, maximal(f**3).values ** (1 / 3), rtol=1e-9)


def test_orlicz_maximal_brute(rng):
    g = Grid(1, 4)
    f = GridFunction(g, rng.lognormal(size=16))
    phi = LogBump(2, 1)
    ref = np.zeros(16)
    for Q in all_cubes(g):
        sl = Q.slices()
        ref[sl] = np.maximum(ref[sl], luxemburg(f.values[sl], phi))
    np.testing.assert_allclose(orlicz_maximal(f, phi).values, ref, rtol=1e-8)


def test_orlicz_maximal_bounded_for_bp():
    g = Grid(1, 8)
    rng = np.random.default_rng(7)
    phi = Power(1.5)
    assert phi.bp_test(2).verdict.value == "InBp"
    ratios = []
    for _ in range(100):
        f = zoo.test_function(g, rng)
        num = np.mean(orlicz_maximal(f, phi).values ** 2) ** 0.5
        ratios.append(num / np.mean(f.values**2) ** 0.5)
    assert max(ratios) < 10


def test_bisublinear(rng):
    g = Grid(1, 6)
    f = GridFunction(g, rng.lognormal(size=64))
    h = GridFunction(g, rng.lognormal(size=64))
    p1, p2 = LogBump(2, 1), Power(2)
    B = bisublinear_maximal(f, h, p1, p2).values
    assert np.all(B <= orlicz_maximal(f, p1).values * orlicz_maximal(h, p2).values * (1 + 1e-12))
    one = GridFunction.constant(g)
    norm1 = LogBump(2, 1, normalized=True)
    np.testing.assert_allclose(bisublinear_maximal(f, one, p1, norm1).values, orlicz_maximal(f, p1).values,
                               rtol=1e-8)


def test_bisublinear_brute(rng):
    g = Grid(1, 4)
    f = GridFunction(g, rng.lognormal(size=16))
    h = GridFunction(g, rng.lognormal(size=16))
    ref = np.zeros(16)
    for Q in all_cubes(g):
        sl = Q.slices()
        ref[sl] = np.maximum(ref[sl], np.mean(f.values[sl] ** 2) ** 0.5 * np.mean(h.values[sl] ** 2) ** 0.5)
    np.testing.assert_allclose(bisublinear_maximal(f, h, Power(2), Power(2)).values, ref, rtol=1e-9)


def test_frac_maximal_examples(rng):
    g = Grid(1, 6)
    one = GridFunction.constant(g)
    assert np.allclose(frac_maximal_bilinear(one, one, 0.5).values, 1.0)
    f = GridFunction(g, rng.lognormal(size=64))
    h = GridFunction(g, rng.lognormal(size=64))
    np.testing.assert_allclose(frac_maximal_bilinear(f, h, 0.0).values,
                               bisublinear_maximal(f, h, Power(1), Power(1)).values, rtol=1e-9)


def test_frac_maximal_spike_pair_brute():
    g = Grid(1, 5)
    f, h = spike(g, (10,), 32.0), spike(g, (14,), 32.0)
    alpha = 0.5
    ref = np.zeros(32)
    for Q in all_cubes(g):
        sl = Q.slices()
        size = Q.ncells / 32
        ref[sl] = np.maximum(ref[sl], size**alpha * f.values[sl].mean() * h.values[sl].mean())
    np.testing.assert_allclose(frac_maximal_bilinear(f, h, alpha).values, ref, rtol=1e-12)


def test_default_probes_shape():
    probes = default_probes(Grid(2, 3))
    assert len(probes) >= 10 and all(p.values.shape == (8, 8) for p in probes)
