"""Closed-form oracles: quantities with an exact formula, checked first."""

import math

import numpy as np
import pytest

from artifact import kernels as kn
from artifact.bvp import BvpProblem, solve_dirichlet, solve_mixed
from artifact.model import (ExponentialWarp, JacobiData, ModelManifold, critical_curve, euclidean,
                            green_kernel_model, hyperbolic, jacobi_solve, pinch_model, radial_geometry)
from artifact.nonlinearity import (ConstantL, KernelKind, KernelTable, MeanCurvature, NonlinearTriple, PhiQuotient,
                                   PowerF, PowerL, PowerLaw, kernel_eval)
from artifact.verify import phi_laplacian_radial, power_profile


@pytest.mark.parametrize("p,chi", [(3.0, 1.0), (2.0, 1.0), (1.5, 0.5), (3.0, 0.5)])
def test_power_kernel_closed_form(p, chi):
    # phi = t^{p-1}, l = t^{p-1-chi}: K(t) = (p-1)/(chi+1) t^{chi+1}
    t = np.logspace(-8, 8, 60)
    exact = (p - 1) / (chi + 1) * t ** (chi + 1)
    for l in (PowerL(p - 1 - chi), PhiQuotient(PowerLaw(p), chi)):
        T = KernelTable(PowerLaw(p), l)
        assert np.max(np.abs(T(t) / exact - 1)) < 1e-10
        assert np.max(np.abs(T.inverse(exact) / t - 1)) < 1e-10
    assert kernel_eval(PowerLaw(p), PowerL(p - 1 - chi), KernelKind.STANDARD, 2.0) == pytest.approx(
        (p - 1) / (chi + 1) * 2.0 ** (chi + 1), rel=1e-10)


def test_mean_curvature_kernel_closed_form():
    # phi = t/sqrt(1+t^2), l = 1: K(t) = 1 - 1/sqrt(1+t^2), K(inf) = 1
    T = KernelTable(MeanCurvature(), ConstantL(1.0))
    t = np.logspace(-6, 6, 50)
    s = np.sqrt(1 + t * t)
    exact = t * t / (s * (1 + s))  # 1 - 1/s without cancellation
    assert np.max(np.abs(T(t) / exact - 1)) < 1e-8
    assert T.K_inf == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("code,p,q", [(kn.PHI_POWER, 3, 0), (kn.PHI_MC, 2, 2), (kn.PHI_EXP, 2, 2),
                                      (kn.PHI_SUM, 3, 1.5), (kn.PHI_RATIONAL, 3, 2)])
def test_phi_inverse_round_trip(code, p, q):
    t = np.logspace(-5, 1 if code == kn.PHI_EXP else 2, 120)
    y = kn.phi_family(code, p, q, t)
    assert np.max(np.abs(kn.phi_inv_family(code, p, q, y) / t - 1)) < 1e-9


def test_cumulative_integral_of_cosh():
    x = np.linspace(0, 1, 512) ** 2 * 3
    W, J = kn.cumint_weights(x)
    assert np.max(np.abs(kn.cumint_apply(W, J, np.cosh(x)) - np.sinh(x))) < 1e-8
    assert kn.total_weights(W, J, x.size).sum() == pytest.approx(3.0, abs=1e-12)


def test_euclidean_area_and_volume():
    E = euclidean(3)
    r = np.array([2.0])
    assert E.v(r)[0] == pytest.approx(16 * math.pi, rel=1e-14)
    assert math.exp(E.log_V(r)[0]) == pytest.approx(4 / 3 * math.pi * 8, rel=1e-12)


def test_hyperbolic_mean_curvature_and_curvature():
    k = 1.3
    r = np.array([0.05, 0.5, 2.0, 5.0, 30.0])
    geo = radial_geometry(hyperbolic(3, k), r)
    assert np.max(np.abs(geo.laplacian - 2 * k / np.tanh(k * r))) < 1e-10
    assert np.max(np.abs(geo.radial_curvature + k * k)) < 1e-8


def test_jacobi_constant_curvature():
    k = 0.7
    js = jacobi_solve(JacobiData(lambda r: k * k), 6.0)
    assert js.radial.w[-1] == pytest.approx(math.sinh(6 * k) / k, rel=1e-9)


def test_pinch_laplacian():
    r = np.array([0.0, 1.0, 5.0])
    assert np.allclose(pinch_model(3, 0.5).laplacian_r(r), -2 * 0.5 * (1 + r) ** -0.5, rtol=1e-12)


def test_green_kernel_r3():
    r = np.array([0.1, 1.0, 10.0])
    assert np.allclose(green_kernel_model(euclidean(3), 2, r), 1 / (4 * math.pi * r), rtol=1e-10)


def test_critical_curve_exponential():
    k, m, p = 0.8, 4, 2.5
    M = ModelManifold(m, ExponentialWarp(k, 1.0))
    c = critical_curve(M, p, np.array([1.0, 5.0]))
    assert np.allclose(c, ((m - 1) / p) ** p * k ** p, rtol=1e-9)


def test_phi_laplacian_of_r_squared():
    # Laplacian of r^2 in R^3 is 6
    assert phi_laplacian_radial(euclidean(3), PowerLaw(2), power_profile(2.0), 1.7) == pytest.approx(6.0)


def test_bvp_sinh_and_cosh():
    tr = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))
    s = solve_dirichlet(BvpProblem(tr, 1.0, 2.0))
    assert np.max(np.abs(s.radial.w - 2 * np.sinh(s.t) / math.sinh(1))) < 1e-8
    assert np.max(np.abs(s.radial.wp - 2 * np.cosh(s.t) / math.sinh(1))) < 1e-6
    s = solve_mixed(BvpProblem(tr, 1.0, 2.0, kind="mixed"))
    assert np.max(np.abs(s.radial.w - 2 * np.cosh(s.t) / math.cosh(1))) < 1e-8


def test_bvp_with_volume_factor():
    # (t^2 w')' = t^2 w with w'(0) = 0: w = c sinh(t)/t
    tr = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))
    s = solve_mixed(BvpProblem(tr, 2.0, 1.0, kind="mixed", volume=lambda t: np.asarray(t) ** 2))
    t = s.t
    exact = np.where(t > 0, np.sinh(t) / np.where(t > 0, t, 1), 1.0) / (math.sinh(2) / 2)
    assert np.max(np.abs(s.radial.w - exact)) < 1e-6


def test_bvp_dead_core_profile():
    # w'' = sqrt(w), w(0) = 0, w(T) = eta: w = (t - t0)_+^4 / 144 with t0 = T - (144 eta)^(1/4)
    from artifact.ko import plaplace_triple

    T, eta = 4.0, 1e-3
    s = solve_dirichlet(BvpProblem(plaplace_triple(2, 1, 0.5), T, eta))
    t0 = T - (144 * eta) ** 0.25
    exact = np.maximum(s.t - t0, 0.0) ** 4 / 144
    assert abs(s.t0 - t0) < 2e-3
    assert np.max(np.abs(s.radial.w - exact)) < 1e-6 * eta * 100
