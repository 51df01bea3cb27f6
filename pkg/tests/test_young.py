import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orlx.young import (BpVerdict, LogBump, NumericConjugate, Oscillatory, OuterRescale, Power,
                        check_young, dual_exponent, from_descriptor, is_a_young)

CATALOG = [Power(1.5), Power(3.0), LogBump(2.0, 1.0), LogBump(1.5, 0.5), Oscillatory(3.0, 1.0)]


def test_eval_examples():
    assert Power(2)(3.0) == 9.0
    assert Power(2.7)(0.0) == 0.0
    assert Oscillatory(3, 1)(1.0) == pytest.approx(1.0, abs=1e-15)


def test_inverse_examples():
    assert Power(2).inverse(9.0) == pytest.approx(3.0, rel=1e-14)
    for phi in CATALOG:
        assert phi.inverse(0.0) == 0.0
    lb = LogBump(2, 1)
    assert lb.inverse(lb(5.0)) == pytest.approx(5.0, rel=1e-9)


@pytest.mark.parametrize("phi", CATALOG, ids=str)
def test_inverse_round_trip(phi):
    y = np.logspace(-6, 8, 40)
    t = phi.inverse(y)
    assert np.all(np.abs(phi(t) - y) <= 1e-9 * np.maximum(y, 1))


def test_power_conjugates_exact():
    assert Power(3).conjugate() == Power(1.5)
    assert Power(2).conjugate().conjugate() == Power(2)
    assert dual_exponent(3) == 1.5


def test_power_one_is_linear_without_conjugate():
    assert Power(1)(2.5) == 2.5
    with pytest.raises(ValueError):
        Power(1).conjugate()
    with pytest.raises(ValueError):
        Power(0.5)


def test_logbump_conjugate_profile():
    p, delta = 2.0, 1.0
    conj = LogBump(p, delta).conjugate()
    assert isinstance(conj, NumericConjugate)
    q = dual_exponent(p)
    t = np.logspace(1, 6, 200)
    ratio = conj(t) * np.log(math.e + t) ** (1 + (q - 1) * delta) / t**q
    assert np.all(np.isfinite(ratio)) and ratio.min() > 0
    # bounded above and below: the spread over five decades stays small
    assert ratio.max() / ratio.min() < 4.0


@pytest.mark.parametrize("phi", [LogBump(2, 1), LogBump(3, 0.5), Oscillatory(3, 1), Oscillatory(2, 0.5)], ids=str)
def test_inverse_duality_window(phi):
    conj = phi.conjugate()
    t = np.logspace(0, 6, 1000)
    prod = phi.inverse(t) * conj.inverse(t)
    assert np.all(prod >= t * (1 - 1e-9))
    assert np.all(prod <= 2.05 * t)


@pytest.mark.parametrize("phi", [Power(1.5), LogBump(2, 1), Oscillatory(3, 1)], ids=str)
def test_youngs_inequality_grid(phi):
    conj = phi.conjugate()
    s = np.logspace(-3, 4, 100)
    S, T = np.meshgrid(s, s, indexing="ij")
    lhs = S * T
    rhs = phi(S) + conj(T)
    assert np.all(lhs <= rhs * (1 + 1e-6))


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e4), st.floats(1e-3, 1e4))
def test_youngs_inequality_property(s, t):
    phi = LogBump(2, 1)
    assert s * t <= (phi(s) + phi.conjugate()(t)) * (1 + 1e-6)


def test_bp_examples():
    assert Power(1.5).bp_test(2).verdict is BpVerdict.IN_BP
    assert Power(2).bp_test(2).verdict is BpVerdict.NOT_IN_BP
    assert Oscillatory(2, 0.5).bp_test(3).verdict is BpVerdict.IN_BP
    assert LogBump(1.5, 1).bp_test(2).verdict is BpVerdict.IN_BP
    assert LogBump(2, 1).bp_test(2).verdict is BpVerdict.NOT_IN_BP
    assert LogBump(2, 1).conjugate().bp_test(2).verdict is BpVerdict.IN_BP


def test_bp_rejects_bad_exponent():
    with pytest.raises(ValueError):
        Power(2).bp_test(1.0)


def test_rescale_outer_examples():
    psi = Power(4).rescale_outer(0.5)
    assert psi == Power(8)
    t = np.logspace(-2, 2, 9)
    assert np.allclose(psi(t**0.5), t**4, rtol=1e-13)
    assert Power(2).rescale_outer(2 / 3).p == pytest.approx(3.0)
    lb = LogBump(2, 1)
    assert lb.rescale_outer(1.0) == lb
    with pytest.raises(ValueError):
        lb.rescale_outer(1.5)


def test_rescale_composition_round_trip():
    base = LogBump(1.5, 1)
    psi = base.rescale_outer(0.5).rescale_outer(0.8)
    t = np.logspace(-2, 3, 50)
    assert np.allclose(psi(t**0.4), base(t), rtol=1e-12)
    assert isinstance(base.rescale_outer(0.5), OuterRescale)


def test_is_a_young_examples():
    assert is_a_young(Power(6), 2)
    assert not is_a_young(Power(1.5), 2)
    assert is_a_young(LogBump(3, 1), 2)
    with pytest.raises(ValueError):
        is_a_young(Power(3), 1.0)


@pytest.mark.parametrize("phi", CATALOG, ids=str)
def test_catalog_is_young(phi):
    assert all(check_young(phi).values())


def test_descriptor_round_trip():
    for phi in CATALOG + [LogBump(2, 1).rescale_outer(0.5)]:
        assert from_descriptor(phi.to_descriptor()) == phi
    conj = LogBump(2, 1).conjugate()
    assert from_descriptor(conj.to_descriptor()) == conj


@pytest.mark.parametrize("bad", [{"variant": "nope"}, {"variant": "power", "params": {}}, "not json", {"params": {}}])
def test_descriptor_errors(bad):
    with pytest.raises(ValueError):
        from_descriptor(bad)


def test_normalized_flag():
    phi = LogBump(2, 1, normalized=True)
    assert phi(1.0) == pytest.approx(1.0)
