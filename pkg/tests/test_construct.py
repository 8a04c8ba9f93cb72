"""Certified constructions: potentials, exterior problems and their failure modes."""

import math

import numpy as np
import pytest

from artifact.construct import (Certificate, Kind, SupersolutionSpec, build_csp_supersolution, build_khasminskii,
                                build_sl_supersolution, solve_exterior_dirichlet)
from artifact.core import KellerOssermanViolated, WeightIncompatible
from artifact.model import euclidean
from artifact.nonlinearity import ConstantL, CustomF, CustomWeight, NonlinearTriple, PowerDecay, PowerF, PowerLaw


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def test_certificate_line():
    assert Certificate("glue", True, 1e-9, 1e-6).line() == "glue: pass (value=1e-09, tol=1e-06)"
    assert Certificate("C1", False, math.nan, math.nan, "Fails").line() == "C1: fail Fails"


def test_khasminskii_potential():
    tri = NonlinearTriple(PowerLaw(2), PowerF(1), ConstantL(1.0))
    spec = SupersolutionSpec(Kind.KHASMINSKII, tri, model=euclidean(3), beta=PowerDecay(2), eps=0.1, r0=1.0,
                             r1=2.0, options=dict(eta=0.5, r_max=1e6))
    P = build_khasminskii(spec)
    assert P.passed, P.table()
    w = P.radial.w
    assert np.all(np.diff(w) >= 0) and w[-1] > w[0]
    assert np.max(np.abs(P.radial.wp)) <= spec.eps


def test_khasminskii_rejects_non_decaying_weight():
    tri = NonlinearTriple(PowerLaw(2), PowerF(1), ConstantL(1.0))
    spec = SupersolutionSpec(Kind.KHASMINSKII, tri, model=euclidean(3), beta=CustomWeight(_one, _zero), eps=0.1,
                             options=dict(eta=0.5, r_max=1e6))
    with pytest.raises(WeightIncompatible):
        build_khasminskii(spec)


def test_exterior_harmonic_profile():
    # f = 0 on R^3: the exterior solution with z(r0) = eta decaying at infinity is eta r0 / r
    tri = NonlinearTriple(PowerLaw(2), CustomF(_zero, _zero), ConstantL(1.0))
    spec = SupersolutionSpec(Kind.EXTERIOR, tri, model=euclidean(3), beta=PowerDecay(2), r0=1.0, R=1.0,
                             options=dict(eta=0.1, xi=0.5))
    P = solve_exterior_dirichlet(spec)
    assert P.passed, P.table()
    r = P.radial.r
    assert np.max(np.abs(P.radial.w - 0.1 / r)) < 1e-6


def test_csp_requires_ko_at_zero():
    tri = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))  # omega = chi = 1
    spec = SupersolutionSpec(Kind.CSP_A, tri, model=euclidean(3), beta=PowerDecay(2), beta_bar=PowerDecay(2))
    with pytest.raises(KellerOssermanViolated):
        build_csp_supersolution(spec)


def test_sl_requires_ko_at_infinity():
    tri = NonlinearTriple(PowerLaw(2), PowerF(0.5), ConstantL(1.0))  # omega < chi
    spec = SupersolutionSpec(Kind.SL, tri, model=euclidean(3), beta=PowerDecay(2), beta_bar=PowerDecay(1),
                             options=dict(chi1=1.0, chi2=1.0))
    with pytest.raises(KellerOssermanViolated):
        build_sl_supersolution(spec)


def test_wrong_kind_is_rejected():
    tri = NonlinearTriple(PowerLaw(2), PowerF(0.5), ConstantL(1.0))
    spec = SupersolutionSpec(Kind.SL, tri, model=euclidean(3), beta=PowerDecay(2), beta_bar=PowerDecay(2))
    with pytest.raises(ValueError):
        build_csp_supersolution(spec)
