"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Every test records one pass/fail line (printed with -s and repeated in the
terminal summary). Run directly with `python tests/test_acceptance.py` for the
bare list.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from artifact.bvp import BvpProblem, classify_origin_slope, extend_maximal, solve_dirichlet, solve_mixed
from artifact.construct import Kind, SupersolutionSpec, build_csp_supersolution, build_sl_supersolution
from artifact.core import Verdict
from artifact.ko import ko_verdict, plaplace_triple
from artifact.model import (ExponentialWarp, JacobiData, JacobiWarp, LogOfR, ModelManifold, critical_curve,
                            euclidean, fake_distance_model, green_kernel_model, hyperbolic, jacobi_solve,
                            kappa_bar, radial_geometry, volume_growth_exponent)
from artifact.nonlinearity import ConstantL, MeanCurvature, NonlinearTriple, PhiQuotient, PowerDecay, PowerF, PowerLaw
from artifact.verify import (CLAUSE_ALPHA, CLAUSE_CSP_CHI, CLAUSE_KO, CLAUSE_KO0, CLAUSE_MU, CLAUSE_SL_CHI,
                             CLAUSE_SL_MU, CLAUSE_SMP_B, CLAUSE_WMP_C, CLAUSE_WMP_D, FamilyId, GalleryVerdict,
                             agrees_with_certificate, counterexample_check, get_family, scaled_weight,
                             theorem_applicability)

SWEEP = [(p, chi, omega) for p in (1.5, 2.0, 3.0) for chi in (0.5, 1.0) for omega in (chi / 2, 2 * chi)]


def test_criterion_01_ko_truth_table(acceptance):
    t0 = time.perf_counter()
    bad = []
    for p, chi, omega in SWEEP:
        tr = plaplace_triple(p, chi, omega)
        for ep, expect in (("zero", omega < chi), ("infinity", omega > chi)):
            closed = ko_verdict(tr, ep, route="closed").outcome
            numeric = ko_verdict(tr, ep, route="numeric").outcome
            want = Verdict.HOLDS if expect else Verdict.FAILS
            if closed is not want or numeric is not want:
                bad.append((p, chi, omega, ep, closed, numeric))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 5.0
    acceptance(1, ok, f"KO 12-cell table, closed and numeric routes; mismatches={bad}", dt)
    assert ok


def test_criterion_02_bvp_calibration(acceptance):
    t0 = time.perf_counter()
    tr = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))
    T, eta = 1.0, 1.0
    s = solve_dirichlet(BvpProblem(tr, T, eta, N=512))
    e_dir = np.max(np.abs(s.radial.w - eta * np.sinh(s.t) / math.sinh(T)))
    s = solve_mixed(BvpProblem(tr, T, eta, kind="mixed", N=512))
    e_mix = np.max(np.abs(s.radial.w - eta * np.cosh(s.t) / math.cosh(T)))
    dt = time.perf_counter() - t0
    ok = e_dir <= 1e-7 and e_mix <= 1e-7 and dt < 2.0
    acceptance(2, ok, f"sinh sup-error={e_dir:.2e}, cosh sup-error={e_mix:.2e} (tol 1e-7)", dt)
    assert ok


def test_criterion_03_origin_slope_dichotomy(acceptance):
    t0 = time.perf_counter()
    bad = []
    for p, chi, omega in SWEEP:
        tr = plaplace_triple(p, chi, omega)
        ko = ko_verdict(tr, "zero").outcome
        label = classify_origin_slope(BvpProblem(tr, 4.0, 1e-3)).label
        want = "Zero" if ko is Verdict.HOLDS else "Positive"
        if label != want:
            bad.append((p, chi, omega, ko.value, label))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60.0
    acceptance(3, ok, f"origin slope vs KO_0 on 12 cells, T=4, eta=1e-3; mismatches={bad}", dt)
    assert ok


def test_criterion_04_blowup_detection(acceptance):
    t0 = time.perf_counter()
    cubic = NonlinearTriple(PowerLaw(2), PowerF(3.0), ConstantL(1.0))
    pb = BvpProblem(cubic, 1.0, 1.0)
    s = solve_dirichlet(pb)
    ext = extend_maximal(s, pb)
    # energy w'^2/2 - w^4/4 = E is conserved; R = T + int_{w(T)}^inf dw / sqrt(2E + w^4/2)
    w, wp = float(s.radial.w[-1]), float(s.radial.wp[-1])
    E = wp * wp / 2 - w ** 4 / 4
    oracle = 1.0 + integrate.quad(lambda x: 1.0 / math.sqrt(x ** 4 / 2 + 2 * E), w, np.inf, epsabs=1e-13)[0]
    rel = abs(ext.R_max - oracle) / oracle
    lin = NonlinearTriple(PowerLaw(2), PowerF(1.0), ConstantL(1.0))
    pl = BvpProblem(lin, 1.0, 1.0)
    el = extend_maximal(solve_dirichlet(pl), pl, r_max=50.0)
    dt = time.perf_counter() - t0
    ok = (ext.finite and rel <= 0.01 and not el.finite and math.isinf(el.R_max)
          and el.radial.r[-1] >= 50.0 - 1e-9 and dt < 5.0)
    acceptance(4, ok, f"w''=w^3: R_max={ext.R_max:.6g} oracle={oracle:.6g} rel={rel:.1e}; "
                      f"w''=w: R_max={el.R_max}, reached r={el.radial.r[-1]:.4g}", dt)
    assert ok


def test_criterion_05_csp_certificates(acceptance):
    t0 = time.perf_counter()
    M = euclidean(3)
    tri = NonlinearTriple(PowerLaw(2), PowerF(0.5), ConstantL(1.0))
    notes, ok = [], True
    for kind in (Kind.CSP_A, Kind.CSP_B):
        spec = SupersolutionSpec(kind, tri, model=M, beta=PowerDecay(2), beta_bar=PowerDecay(2), eps=1.0,
                                 lam=1.0, R=1.0, r0=1.0)
        P = build_csp_supersolution(spec)
        agree, rep = agrees_with_certificate(P, M, tri, scaled_weight(spec.beta, spec.eps))
        ok &= P.passed and agree
        note = f"{kind.value}: certificates={'pass' if P.passed else 'fail'} oracle-agree={agree}"
        if kind is Kind.CSP_B:
            R = P.params["R"]
            a, b = P.params["support"]
            r = P.radial.r
            cell = float(np.max(np.diff(r[(r >= R) & (r <= 2 * R)]))) if r.size > 1 else 0.0
            sup_ok = abs(a - R) <= cell and abs(b - 2 * R) <= cell
            positive = r[P.radial.w > 0]
            sup_ok &= positive.size > 0 and positive.max() <= 2 * R + cell
            ok &= sup_ok
            note += f" support=[{a:.6g}, {b:.6g}] vs [R, 2R] with R={R:.6g} ({'ok' if sup_ok else 'off'})"
        notes.append(note)
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 30.0
    acceptance(5, ok, "; ".join(notes), dt)
    assert ok


def test_criterion_06_sl_certificates(acceptance):
    t0 = time.perf_counter()
    M = euclidean(3)
    need = ("plateau", "divergence", "residual")
    tri = NonlinearTriple(PowerLaw(2), PowerF(2), ConstantL(1.0))
    spec = SupersolutionSpec(Kind.SL, tri, model=M, beta=PowerDecay(2), beta_bar=PowerDecay(1), eps=1.0,
                             delta=0.1, lam=1.0, r0=1.0, r1=2.0, options=dict(chi1=1.0, chi2=1.0))
    P1 = build_sl_supersolution(spec)
    phi = MeanCurvature()
    tri = NonlinearTriple(phi, PowerF(2), PhiQuotient(phi, 0.5))
    spec = SupersolutionSpec(Kind.SL_MC, tri, model=M, beta=PowerDecay(1.5), beta_bar=PowerDecay(1), eps=1.0,
                             delta=0.1, lam=1.0, r0=1.0, r1=2.0, options=dict(chi=0.5, eta0=0.5))
    P2 = build_sl_supersolution(spec)
    ok = True
    notes = []
    for name, P in (("standard", P1), ("mean-curvature", P2)):
        got = {c: (c in P.certificates and P.certificates[c].passed) for c in need}
        ok &= all(got.values()) and P.passed
        notes.append(f"{name}: " + ", ".join(f"{c}={'pass' if v else 'fail'}" for c, v in got.items()))
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 30.0
    acceptance(6, ok, "; ".join(notes), dt)
    assert ok


def test_criterion_07_comparison_calibration(acceptance):
    t0 = time.perf_counter()
    k = 1.3
    js = jacobi_solve(JacobiData(lambda r: k * k), 5.0)
    exact = math.sinh(k * 5.0) / k
    e_jac = abs(js.radial.w[-1] - exact) / exact
    r = np.array([0.1, 0.5, 2.0, 5.0, 20.0])
    lap = radial_geometry(hyperbolic(3, k), r).laplacian
    e_lap = float(np.max(np.abs(lap - 2 * k / np.tanh(k * r))))
    kk = 2.0
    warp = JacobiWarp(JacobiData(lambda t: kk * kk / (1 + np.asarray(t) ** 2)), r_max=1e5)
    est = volume_growth_exponent(ModelManifold(3, warp), LogOfR(), r_max=1e5)
    want = 2 * kappa_bar(kk) + 1
    e_vol = abs(est - want)
    dt = time.perf_counter() - t0
    ok = e_jac <= 1e-8 and e_lap <= 1e-8 and e_vol <= 1e-2 and dt < 5.0
    acceptance(7, ok, f"jacobi rel={e_jac:.1e}, coth abs={e_lap:.1e}, "
                      f"volume exponent {float(est):.5f} vs {want:.5f}", dt)
    assert ok


def test_criterion_08_green_and_critical_curve(acceptance):
    t0 = time.perf_counter()
    E = euclidean(3)
    r = np.array([0.05, 0.7, 1.0, 3.0, 40.0])
    e_g = float(np.max(np.abs(green_kernel_model(E, 2, r) * 4 * math.pi * r - 1)))
    k, m = 1.5, 3
    M = ModelManifold(m, ExponentialWarp(k, 1.0))
    t = np.array([0.5, 2.0, 10.0])
    e_c = max(float(np.max(np.abs(critical_curve(M, p, t) / (((m - 1) / p) ** p * k ** p) - 1))) for p in (2, 3))
    e_f = max(abs(fake_distance_model(E, 2, float(green_kernel_model(E, 2, np.array([x]))[0])) - x)
              for x in (0.3, 1.0, 7.0))
    dt = time.perf_counter() - t0
    ok = e_g <= 1e-6 and e_c <= 1e-6 and e_f <= 1e-8 and dt < 5.0
    acceptance(8, ok, f"green rel={e_g:.1e}, critical curve rel={e_c:.1e}, fake distance abs={e_f:.1e}", dt)
    assert ok


def test_criterion_09_counterexample_gallery(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240)
    notes, ok = [], True
    for fid in FamilyId:
        fam = get_family(fid)
        good = {True: 0, False: 0}
        for inside in (True, False):
            for _ in range(20):
                res = counterexample_check(fid, fam.sample(rng, inside, 0.2))
                hit = (res.verdict is GalleryVerdict.CONSISTENT and res.in_range == inside
                       and (inside or res.negative_found))
                good[inside] += hit
        ok &= good[True] == 20 and good[False] == 20
        notes.append(f"{fid.value} in {good[True]}/20 out {good[False]}/20")
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 120.0
    acceptance(9, ok, "; ".join(notes), dt)
    assert ok


# (params, expected per theorem: None = applicable, else the failed clause)
_BASE = dict(m=3, p=2.0, kappa=0.0)
THEOREM_TABLE = [
    (dict(alpha=-2, chi=1, mu=0, omega=0.5), (None, None, None, CLAUSE_KO)),
    (dict(alpha=-2, chi=1, mu=0, omega=2), (None, None, CLAUSE_KO0, None)),
    (dict(alpha=-2, chi=1, mu=0, omega=1), (None, None, CLAUSE_KO0, CLAUSE_KO)),
    (dict(alpha=-3, chi=1, mu=0, omega=0.5), (CLAUSE_ALPHA,) * 4),
    (dict(alpha=-2.5, chi=0, mu=0, omega=0.5), (CLAUSE_ALPHA,) * 4),
    (dict(alpha=0, chi=1, mu=1.5, omega=0.5), (CLAUSE_MU, CLAUSE_MU, CLAUSE_MU, CLAUSE_SL_MU)),
    (dict(kappa=1, alpha=0, chi=0, mu=0, omega=2, V_inf=1), (CLAUSE_SMP_B, CLAUSE_WMP_C, CLAUSE_CSP_CHI,
                                                           CLAUSE_SL_CHI)),
    (dict(kappa=1, alpha=0, chi=0, mu=0, omega=2), (CLAUSE_SMP_B, CLAUSE_WMP_C, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(kappa=1, alpha=0, chi=0, mu=0, omega=2, V_inf=0), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(kappa=1, alpha=0, chi=0, mu=-1, omega=2), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(p=4, kappa=0.5, alpha=-2, chi=0, mu=1, V_inf=4), (None, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(p=4, kappa=1, alpha=-2, chi=0, mu=1, V_inf=4), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(p=4, kappa=0.5, alpha=-2, chi=0, mu=1, V_inf=5), (None, CLAUSE_WMP_D, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(p=4, kappa=1, alpha=-2, chi=0, mu=0.5, V_inf=9), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(alpha=-2, chi=0, mu=1, V_inf=2), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(m=2, alpha=-2, chi=0, mu=1, V_inf=2), (None, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(kappa=1, alpha=-2, chi=0, mu=1, V_inf=1), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(alpha=0, chi=1, mu=0, omega=0.5, chi1=0), (None, None, None, CLAUSE_SL_CHI)),
    (dict(alpha=0, chi=1, mu=0, omega=2, chi2=-1), (None, None, CLAUSE_KO0, CLAUSE_SL_CHI)),
    (dict(alpha=0, chi=1, mu=0.8, omega=0.5, chi2=0.5), (None, None, None, CLAUSE_SL_MU)),
    (dict(alpha=-2, chi=1, mu=1.5, omega=2, chi1=0.2, chi2=3), (None, None, CLAUSE_KO0, CLAUSE_SL_MU)),
    (dict(alpha=1, chi=1, mu=0.5, omega=0.5), (None, None, None, CLAUSE_KO)),
    (dict(alpha=1, chi=1, mu=0.5 + 1e-6, omega=0.5), (CLAUSE_MU, CLAUSE_MU, CLAUSE_MU, CLAUSE_SL_MU)),
    (dict(p=3, alpha=0, chi=0.5, mu=0, omega=0.25), (None, None, None, CLAUSE_KO)),
    (dict(p=3, alpha=0, chi=0.5, mu=0, omega=1), (None, None, CLAUSE_KO0, None)),
    (dict(p=1.5, alpha=0, chi=1, mu=0, omega=2), (None, None, CLAUSE_KO0, None)),
    (dict(alpha=0, chi=-0.5, mu=-1, omega=2), (CLAUSE_SMP_B, None, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(alpha=0, chi=-0.5, mu=0, omega=2), (CLAUSE_MU, CLAUSE_MU, CLAUSE_CSP_CHI, CLAUSE_SL_CHI)),
    (dict(alpha=0, chi=1, mu=0), (None, None, CLAUSE_KO0, CLAUSE_KO)),
    (dict(alpha=2, chi=2, mu=1, omega=3), (None, None, CLAUSE_KO0, None)),
]


def test_criterion_10_theorem_checker(acceptance):
    assert len(THEOREM_TABLE) == 30
    t0 = time.perf_counter()
    bad = []
    for extra, expected in THEOREM_TABLE:
        params = {**_BASE, **extra}
        got = theorem_applicability(params)
        for tv, want in zip(got, expected):
            if tv.applicable != (want is None) or tv.failed_clause != want:
                bad.append((params, tv.theorem, tv.failed_clause, want))
    dt = time.perf_counter() - t0
    clauses = {c for _, exp in THEOREM_TABLE for c in exp if c is not None}
    covered = clauses >= {CLAUSE_ALPHA, CLAUSE_MU, CLAUSE_SMP_B, CLAUSE_WMP_C, CLAUSE_WMP_D, CLAUSE_CSP_CHI,
                          CLAUSE_KO0, CLAUSE_SL_CHI, CLAUSE_SL_MU, CLAUSE_KO}
    ok = not bad and covered and dt < 1.0
    acceptance(10, ok, f"30 theorem tuples, every clause covered={covered}; mismatches={bad}", dt)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
