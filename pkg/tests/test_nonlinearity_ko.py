"""Structural functions, conditions and the Keller-Osserman decision."""

import math

import numpy as np
import pytest

from artifact.core import KernelUndefined, OutOfRange, UnknownCondition, Verdict
from artifact.ko import Endpoint, exponent_estimate, ko_verdict, mean_curvature_triple, plaplace_triple
from artifact.nonlinearity import (ConstantL, Exp2m1, MeanCurvature, NonlinearTriple, PowerDecay, PowerF, PowerL,
                                   PowerLaw, PowerSum, check_condition)


def test_constructors_reject_bad_parameters():
    with pytest.raises(ValueError):
        ConstantL(0.0)
    with pytest.raises(ValueError):
        PowerF(-1.0)


def test_power_f_threshold_and_primitive():
    f = PowerF(2.0, threshold=1.0)
    t = np.array([0.5, 1.0, 3.0])
    assert np.allclose(f(t), [0.0, 0.0, 4.0])
    assert np.allclose(f.F(t), [0.0, 0.0, 8.0 / 3.0])


def test_phi_is_odd_and_mean_curvature_inverse_is_bounded():
    phi = PowerLaw(3)
    assert np.allclose(phi(np.array([-2.0, 2.0])), [-4.0, 4.0])
    mc = MeanCurvature()
    assert mc.sup == 1.0
    with pytest.raises(OutOfRange):
        mc.inverse(np.array([1.0]))
    y = mc(np.array([0.3, 5.0]))
    assert np.allclose(mc.inverse(y), [0.3, 5.0])


def test_power_decay_weight():
    w = PowerDecay(2.0, scale=3.0)
    assert w(np.array([1.0]))[0] == pytest.approx(3.0 / 4.0)
    assert w.derivative(np.array([1.0]))[0] == pytest.approx(-2 * 3.0 / 8.0)


def test_conditions_on_power_data():
    tr = NonlinearTriple(PowerLaw(3), PowerF(0.5), PowerL(1))
    for cid in ("C1", "C2", "C2'", "C3", "C4"):
        assert check_condition(cid, tr).verdict is Verdict.HOLDS
    # C4 needs f(t)/K^-1 control near 0, lost once omega is large
    assert check_condition("C4", NonlinearTriple(PowerLaw(3), PowerF(2), PowerL(1))).verdict is Verdict.FAILS
    with pytest.raises(UnknownCondition):
        check_condition("C9", tr)


def test_weight_conditions():
    tr = NonlinearTriple(PowerLaw(2), PowerF(1), PowerL(0))
    assert check_condition("beta2", tr, weight=PowerDecay(2)).verdict is Verdict.HOLDS
    assert check_condition("beta2", tr, weight=PowerDecay(2.5)).verdict is Verdict.FAILS
    assert check_condition("beta3", tr, weight=PowerDecay(2)).verdict is Verdict.HOLDS
    assert check_condition("chi2", tr, chi=1).verdict is Verdict.HOLDS
    assert check_condition("chi2", tr, chi=1.5).verdict is Verdict.FAILS


def test_exponent_estimate():
    # signed log-log slope
    assert exponent_estimate(lambda s: s ** -0.5) == pytest.approx(-0.5, abs=1e-6)
    assert exponent_estimate(lambda s: s ** -1.5, Endpoint.INFINITY) == pytest.approx(-1.5, abs=1e-6)
    # a logarithmic factor does not bias the power
    assert exponent_estimate(lambda s: s ** -2 * np.log(1 / s)) == pytest.approx(-2.0, abs=1e-2)


@pytest.mark.parametrize("omega,zero,inf", [(0.5, Verdict.HOLDS, Verdict.FAILS), (2.0, Verdict.FAILS, Verdict.HOLDS),
                                            (1.0, Verdict.FAILS, Verdict.FAILS)])
def test_ko_power_family(omega, zero, inf):
    tr = plaplace_triple(2.0, 1.0, omega)
    v0 = ko_verdict(tr, "zero")
    vi = ko_verdict(tr, "infinity")
    assert v0.outcome is zero and vi.outcome is inf
    assert v0.route == "closed-form"
    assert "endpoint=zero" in v0.line()


def test_ko_numeric_route_without_closed_form():
    v = ko_verdict(NonlinearTriple(PowerSum(3, 1.5), PowerF(0.2), ConstantL(1)), "zero")
    assert v.route == "numeric" and v.outcome is Verdict.HOLDS
    v = ko_verdict(NonlinearTriple(PowerLaw(2), Exp2m1(), ConstantL(1)), "infinity")
    assert v.outcome is Verdict.HOLDS


def test_ko_zero_fails_when_f_vanishes_near_zero():
    # F = 0 on [0, eta0] makes the integrand identically infinite there
    v = ko_verdict(plaplace_triple(2, 1, 0.5, threshold=0.3), "zero")
    assert v.outcome is Verdict.FAILS


def test_ko_mean_curvature_needs_its_kernel():
    with pytest.raises(KernelUndefined):
        ko_verdict(NonlinearTriple(MeanCurvature(), PowerF(2), ConstantL(1)), "infinity")
    v = ko_verdict(mean_curvature_triple(1, 2), "infinity", "mean_curvature")
    assert v.outcome is Verdict.HOLDS
    assert math.isfinite(v.gamma)
