"""Model manifolds, comparison geometry and the two-point problem."""

import math

import numpy as np
import pytest

from artifact.bvp import BvpProblem, classify_origin_slope, extend_maximal, solve_dirichlet, solve_mixed
from artifact.core import OutOfRange, Parabolic
from artifact.ko import plaplace_triple
from artifact.model import (JacobiData, JacobiWarp, LogOfR, ModelManifold, euclidean, fake_distance_model,
                            green_kernel_model, hyperbolic, jacobi_solve, volume_growth_exponent)
from artifact.nonlinearity import ConstantL, NonlinearTriple, PowerF, PowerLaw


def test_model_rejects_bad_dimension():
    with pytest.raises(ValueError):
        euclidean(1)


def test_jacobi_warp_matches_hyperbolic():
    k = 1.3
    W = JacobiWarp(JacobiData(lambda r: k * k), r_max=20)
    r = np.array([0.1, 1.0, 5.0, 19.0])
    assert np.max(np.abs(W.g(r) / (np.sinh(k * r) / k) - 1)) < 1e-9
    M = ModelManifold(3, W)
    assert np.max(np.abs(M.laplacian_r(r) / hyperbolic(3, k).laplacian_r(r) - 1)) < 1e-9


def test_jacobi_positive_curvature_reaches_first_zero():
    js = jacobi_solve(JacobiData(lambda r: -1.0), 10.0)
    assert js.R == pytest.approx(math.pi, rel=1e-9)
    assert not js.reached_end


def test_euclidean_volume_exponent():
    est = volume_growth_exponent(euclidean(3), LogOfR())
    assert float(est) == pytest.approx(3.0, abs=1e-2)


def test_green_kernel_parabolic_and_fake_distance():
    with pytest.raises(Parabolic):
        green_kernel_model(euclidean(2), 2, 1.0)
    E = euclidean(4)
    g = float(green_kernel_model(E, 3, np.array([2.5]))[0])
    assert fake_distance_model(E, 3, g) == pytest.approx(2.5, abs=1e-8)
    with pytest.raises(OutOfRange):
        fake_distance_model(E, 3, -1.0)


def test_problem_validation():
    tr = plaplace_triple(2, 1, 0.5)
    with pytest.raises(ValueError):
        BvpProblem(tr, -1.0, 1.0)
    with pytest.raises(ValueError):
        BvpProblem(tr, 1.0, 1.0, N=4)


def test_f_zero_gives_linear_profile_and_positive_slope():
    tr = NonlinearTriple(PowerLaw(2), PowerF(0.0, threshold=1.0), ConstantL(1.0))
    pb = BvpProblem(tr, 2.0, 1.0)
    s = solve_dirichlet(pb)
    assert np.max(np.abs(s.radial.w - s.t / 2)) < 1e-10
    assert classify_origin_slope(pb).label == "Positive"


def test_mixed_dead_core_is_flat():
    s = solve_mixed(BvpProblem(plaplace_triple(2, 1, 0.5), 4.0, 1e-3, kind="mixed"))
    i = np.searchsorted(s.t, s.t0)
    assert s.t0 > 3.0
    assert np.max(np.abs(s.radial.w[: i + 1])) == 0.0


def test_extension_of_linear_problem_is_global():
    tr = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))
    pb = BvpProblem(tr, 1.0, 1.0)
    e = extend_maximal(solve_dirichlet(pb), pb, r_max=20.0)
    assert not e.finite and math.isinf(e.R_max)
    r = e.radial.r
    tail = r > 1.0
    assert np.max(np.abs(e.radial.w[tail] / (np.sinh(r[tail]) / math.sinh(1)) - 1)) < 1e-8
