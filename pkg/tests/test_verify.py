"""Independent residuals, the counterexample gallery and the theorem clause checker."""

import math

import numpy as np
import pytest

from artifact.model import euclidean, hyperbolic
from artifact.nonlinearity import ConstantL, MeanCurvature, NonlinearTriple, PowerDecay, PowerF, PowerLaw
from artifact.verify import (CLAUSE_CSP_CHI, CLAUSE_KO0, CLAUSE_SMP_B, FamilyId, GalleryVerdict,
                             constant_profile, counterexample_check, get_family, phi_laplacian_radial,
                             power_end_model, residual_report, scaled_weight, theorem_applicability)


def test_phi_laplacian_of_mean_curvature_operator():
    # u = r on H^3: phi(1) Delta r = (1/sqrt 2) 2 coth r
    r = 1.3
    got = phi_laplacian_radial(hyperbolic(3, 1.0), MeanCurvature(), lambda x: x, r)
    assert got == pytest.approx(2 / math.tanh(r) / math.sqrt(2), rel=1e-6)
    assert phi_laplacian_radial(hyperbolic(3, 1.0), MeanCurvature(), constant_profile(3.0), r) == 0.0


def test_residual_report_signs():
    # Delta r^2 = 6 in R^3; with f(u) = u the residual is 6 - r^2
    M = euclidean(3)
    grid = np.linspace(1.0, 4.0, 31)
    prof = lambda r: r * r
    rep = residual_report(M, NonlinearTriple(PowerLaw(2), PowerF(0.0, threshold=1e9), ConstantL(1.0)), 1.0, prof,
                          grid)
    assert rep.verdict == ">=0" and np.allclose(rep.residual, 6.0, rtol=1e-6)
    rep = residual_report(M, NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0)), None, prof, grid)
    assert rep.verdict == "mixed"
    assert np.allclose(rep.residual, 6.0 - grid ** 2, atol=1e-5)
    assert rep.argmin == pytest.approx(4.0)
    assert rep.rows().shape == (31, len(rep.columns))


def test_scaled_weight():
    w = scaled_weight(PowerDecay(2), 3.0)
    assert w(np.array([1.0]))[0] == pytest.approx(0.75)
    assert w.derivative(np.array([1.0]))[0] == pytest.approx(-0.75)


def test_power_end_model_laplacian():
    r = np.array([10.0, 100.0])
    assert np.allclose(power_end_model(3, 1.0, 2.0).laplacian_r(r), 2 * r, rtol=1e-12)


def test_csp_intro_edge_and_outside():
    res = counterexample_check("CspIntro", {"m": 3, "alpha": 3, "omega": 0.5, "beta": 2})
    assert res.in_range and res.verdict is GalleryVerdict.CONSISTENT
    res = counterexample_check("CspIntro", {"m": 3, "alpha": 3, "omega": 0.5, "beta": 2.2})
    assert not res.in_range and res.negative_found and res.verdict is GalleryVerdict.CONSISTENT


def test_sl_sharp_equality_is_consistent():
    P = {"m": 3, "kappa": 1, "alpha": 0, "mu": 0.5, "chi": 1, "sigma": 2}
    P["omega"] = P["chi"] + (P["alpha"] / 2 + P["mu"] - P["chi"]) / (2 * P["sigma"])
    res = counterexample_check("SlSharp", P)
    assert res.in_range and res.verdict is GalleryVerdict.CONSISTENT


def test_wmp_power_limit_case_is_unsupported():
    P = {"m": 3, "p": 2, "q": 1, "kappa": 1, "alpha": -2, "mu": 0, "chi": 0.5, "sigma": 3}
    assert counterexample_check("WmpPower", P).verdict is GalleryVerdict.UNSUPPORTED


@pytest.mark.parametrize("fid", list(FamilyId))
def test_sampler_respects_range(fid):
    rng = np.random.default_rng(7)
    fam = get_family(fid)
    for inside in (True, False):
        for _ in range(5):
            ok, clause = fam.in_range(fam.sample(rng, inside))
            assert ok == inside and clause


def test_theorem_examples():
    def verdicts(params):
        return {t.theorem: (t.applicable, t.failed_clause) for t in theorem_applicability(params)}

    eu = verdicts(dict(m=3, p=2, kappa=0, alpha=-2, chi=1, mu=0, omega=0.5))
    assert eu["SMP"] == (True, None) and eu["CSP"] == (True, None)
    hy = verdicts(dict(m=3, p=2, kappa=1, alpha=0, chi=0, mu=0, omega=2, V_inf=1))
    assert hy["SMP"] == (False, CLAUSE_SMP_B) and hy["CSP"] == (False, CLAUSE_CSP_CHI)
    eq = verdicts(dict(m=3, p=2, kappa=1, alpha=0, chi=1, mu=0, omega=1))
    assert eq["CSP"] == (False, CLAUSE_KO0)
