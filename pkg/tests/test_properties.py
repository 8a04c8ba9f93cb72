"""Property-based checks on randomly drawn parameters."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.config import dump_config, load_config
from artifact.core import Verdict
from artifact.ko import ko_verdict, plaplace_triple
from artifact.nonlinearity import MeanCurvature, PowerLaw
from artifact.verify import theorem_applicability

exps = st.floats(0.05, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.1, 5.0), st.floats(-6.0, 3.0))
def test_power_phi_round_trip(p, logt):
    t = np.array([10.0 ** logt])
    phi = PowerLaw(p)
    assert np.allclose(phi.inverse(phi(t)), t, rtol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-6.0, 3.0))
def test_mean_curvature_round_trip(logt):
    # the inverse has condition number ~ t^2, so large t is left out
    t = np.array([10.0 ** logt])
    mc = MeanCurvature()
    assert np.allclose(mc.inverse(mc(t)), t, rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.2, 4.0), exps, exps)
def test_ko_closed_form_rule(p, chi, omega):
    tr = plaplace_triple(p, chi, omega)
    gamma = (omega + 1) / (chi + 1)
    v0 = ko_verdict(tr, "zero", route="closed")
    vi = ko_verdict(tr, "infinity", route="closed")
    assert np.isclose(v0.gamma, gamma)
    assert (v0.outcome is Verdict.HOLDS) == (omega < chi)
    assert (vi.outcome is Verdict.HOLDS) == (omega > chi)


@settings(max_examples=80, deadline=None)
@given(st.floats(-2.0, 3.0), st.floats(-2.0, 3.0), st.floats(0.0, 3.0), st.floats(0.1, 3.0))
def test_theorem_checker_is_consistent(alpha, mu, chi, omega):
    out = {t.theorem: t for t in theorem_applicability(dict(m=3, p=2, kappa=1, alpha=alpha, mu=mu, chi=chi,
                                                            omega=omega, V_inf=0))}
    for t in out.values():
        assert t.applicable == (t.failed_clause is None)
    # CSP applies exactly when chi > 0, the mu bound holds and KO at 0 holds
    csp = chi > 0 and mu <= chi - alpha / 2 and omega < chi
    if abs(mu - (chi - alpha / 2)) > 1e-9 and chi > 1e-9:
        assert out["CSP"].applicable == csp


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from(["bvp", "grid", "model"]),
                       st.dictionaries(st.text("abcxyz_", min_size=1, max_size=6),
                                       st.one_of(st.integers(-100, 100), st.floats(-1e6, 1e6), st.booleans()),
                                       max_size=4), max_size=3))
def test_config_round_trip(data):
    assert load_config(dump_config(data)).data == data
