import numpy as np
import pytest

from orlx import zoo
from orlx.dyadic import Cube, Grid, GridFunction, cells, shifted_grids
from orlx.sparse import (NotSparseError, SparseFamily, bilinear_stopping_constant, cz_stopping, czo_apply,
                         sparse_apply, sparse_apply2, sparse_check, sparse_dominate, stopping_constant,
                         stopping_levels, stopping_sparse, verify_family, weak_type_constant)
from orlx.sparse import _cubes_from_selection

from .oracles import audit_family, packing_fractions


def test_single_cube():
    g = Grid(1, 4)
    q = Cube(g, 2, (1,))
    fam = sparse_check([q])
    assert len(fam) == 1
    assert sorted(fam.exceptional[0].tolist()) == list(range(4, 8))


def test_full_tree_violates_at_root():
    g = Grid(1, 3)
    tree = [q for k in range(4) for q in cells(g, k)]
    with pytest.raises(NotSparseError) as err:
        sparse_check(tree)
    assert err.value.cube.level == 0 and err.value.fraction == 1.0
    assert err.value.to_dict()["violation"]


def test_every_other_level_tree():
    g = Grid(1, 6)
    fam = [q for k in (0, 2, 4, 6) for q in cells(g, k)]
    frac = packing_fractions(fam)
    assert max(frac.values()) == 1.0
    with pytest.raises(NotSparseError):
        sparse_check(fam)


def test_left_tower_is_sparse_at_the_bound():
    g = Grid(2, 4)
    tower = [Cube(g, k, (0, 0)) for k in range(5)]
    frac = packing_fractions(tower)
    assert max(frac.values()) == 0.25
    fam = sparse_check(tower)
    assert fam.packing == pytest.approx(0.25)
    g1 = Grid(1, 5)
    tower1 = [Cube(g1, k, (0,)) for k in range(6)]
    assert max(packing_fractions(tower1).values()) == 0.5
    sparse_check(tower1)


def test_mixed_grids_rejected():
    g = Grid(1, 3)
    with pytest.raises(ValueError):
        sparse_check([Cube(g, 0, (0,)), Cube(g.with_shift((1,)), 1, (0,))])


def test_verify_family_catches_tampering():
    g = Grid(1, 4)
    fam = sparse_check([Cube(g, 0, (0,)), Cube(g, 1, (0,))])
    bad = SparseFamily(fam.grid, fam.cubes, (fam.exceptional[0], fam.exceptional[0]), fam.packing)
    with pytest.raises(AssertionError):
        verify_family(bad)


def test_sparse_apply_examples(rng):
    g = Grid(1, 5)
    f = GridFunction(g, rng.random(32))
    h = GridFunction(g, rng.random(32))
    box = sparse_check([Cube(g, 0, (0,))])
    np.testing.assert_allclose(sparse_apply(box, f).values, f.values.mean())
    fam = sparse_check([Cube(g, 0, (0,)), Cube(g, 1, (1,)), Cube(g, 3, (4,))])
    np.testing.assert_allclose(sparse_apply(fam, 2 * f + h).values,
                               2 * sparse_apply(fam, f).values + sparse_apply(fam, h).values)
    np.testing.assert_allclose(sparse_apply2(fam, f, GridFunction.constant(g)).values, sparse_apply(fam, f).values)
    ref = np.zeros(32)
    for q in fam.cubes:
        sl = q.slices()
        ref[sl] += f.values[sl].mean() * h.values[sl].mean()
    np.testing.assert_allclose(sparse_apply2(fam, f, h).values, ref)


def _czo_oracle(v):
    N = v.size
    return np.array([sum(v[j] / (i - j) for j in range(N) if j != i) for i in range(N)])


def test_czo_matches_direct_sum(rng):
    v = rng.normal(size=64)
    np.testing.assert_allclose(czo_apply(GridFunction(Grid(1, 6), v)).values, _czo_oracle(v), atol=1e-12)


def test_czo_constant_antisymmetry():
    g = Grid(1, 7)
    T = czo_apply(GridFunction.constant(g)).values
    np.testing.assert_allclose(T, -T[::-1], atol=1e-12)
    # center pair: cancellation leaves a small value, exactly the direct sum
    assert abs(T[63]) < 1.0 and T[63] == pytest.approx(_czo_oracle(np.ones(128))[63], abs=1e-12)
    assert np.allclose(czo_apply(GridFunction.constant(g, 3.0)).values, 3 * T)


def test_czo_needs_one_dimension():
    with pytest.raises(ValueError):
        czo_apply(GridFunction.constant(Grid(2, 2)))


def _domination_oracle(f, fams):
    lhs = np.abs(_czo_oracle(f.values))
    rhs = np.zeros(f.values.size)
    for fam in fams:
        for q in fam.cubes:
            sl = q.slices()
            rhs[sl] += np.abs(f.values[sl]).mean()
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.max(np.where(lhs > 0, lhs / rhs, 0.0)))


def test_sparse_dominate_spike_and_constant():
    g = Grid(1, 7)
    for f in (zoo.spike(g, (50,), 128.0), GridFunction.constant(g), zoo.haar(g, 2, (1,), signed=True)):
        dom = sparse_dominate(f)
        assert len(dom.families) == 3
        assert np.isfinite(dom.ratio)
        assert dom.ratio == pytest.approx(_domination_oracle(f, dom.families), rel=1e-12)
        twice = sparse_dominate(2 * f)
        assert twice.ratio == pytest.approx(dom.ratio, rel=1e-12)
        np.testing.assert_allclose(twice.rhs.values, 2 * dom.rhs.values)


def test_sparse_dominate_random_families_sparse(rng):
    g = Grid(1, 8)
    for _ in range(20):
        f = zoo.test_function(g, rng)
        for fam in sparse_dominate(f).families:
            if len(fam):
                assert audit_family(fam)


@pytest.mark.parametrize("grid", [Grid(1, 7), Grid(2, 4)])
def test_bilinear_cz_stopping_sparse(grid, rng):
    a = bilinear_stopping_constant(2)
    assert a == 16.0
    for _ in range(10):
        f, h = zoo.test_function(grid, rng), zoo.test_function(grid, rng)
        for G in shifted_grids(grid.n, grid.L):
            cubes = _cubes_from_selection(G, cz_stopping([f, h], G, a))
            if cubes:
                sparse_check(cubes)


def test_stopping_constants():
    g = Grid(1, 8)
    one = GridFunction.constant(g)
    assert weak_type_constant(one, one) == pytest.approx(1.0)
    c = stopping_constant(one, one)
    assert c.fraction_constant == pytest.approx(6 * np.sqrt(c.weak_type))
    assert c.a == pytest.approx(4 * c.fraction_constant**2)


def test_stopping_constant_input():
    g = Grid(1, 8)
    one = GridFunction.constant(g)
    fam = stopping_sparse(one, one)
    assert [(q.level, q.index) for q in fam.cubes] == [(0, (0,))]


def test_stopping_spike_pair_tower():
    g = Grid(1, 8)
    f = zoo.spike(g, (77,), 256.0)
    fam = stopping_sparse(f, f)
    assert all(q.mask()[77] or q.level == 0 or abs(q.index[0] * (256 >> q.level) - 77) <= (256 >> q.level) * 2
               for q in fam.cubes)
    frac = packing_fractions(list(fam.cubes))
    assert max(frac.values()) <= 0.5


def test_stopping_monotone_in_a(rng):
    g = Grid(1, 8)
    for _ in range(5):
        f, h = zoo.test_function(g, rng), zoo.test_function(g, rng)
        a = 16.0
        small = set(stopping_sparse(f, h, a=a * a).cubes)
        large = set(stopping_sparse(f, h, a=a).cubes)
        assert small <= large


def test_stopping_levels_reject_small_ratio():
    one = GridFunction.constant(Grid(1, 3))
    with pytest.raises(ValueError):
        stopping_levels(one, one, 1.0)


def test_stopping_rejects_negative():
    g = Grid(1, 3)
    with pytest.raises(ValueError):
        stopping_sparse(GridFunction(g, -np.ones(8)), GridFunction.constant(g))
