"""Independent checks: radial phi-Laplacian, residual reports, the
counterexample gallery with sharpness probes, and theorem applicability.

Nothing here reuses the construction code paths; residuals are evaluated
directly from the model geometry and the profile derivatives.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Verdict
from .ko import Endpoint, ko_verdict, plaplace_triple
from .model import AnalyticLogWarp, ModelManifold, kappa_bar, pinch_model
from .nonlinearity import (ConstantL, CustomF, CustomL, CustomWeight, MeanCurvature, NonlinearTriple,
                           PhiQuotient, PowerDecay, PowerF, PowerLaw, RationalPower, WeightProfile)

SIGN_TOL = 1e-8
WINDOW_FACTOR = 100.0
WINDOW_NODES = 81
WINDOW_BUDGET = 40
CALIBRATION_SPAN = 1e4
EQ_TOL = 1e-12
STENCIL_STEP = 1e-3


# ---------------------------------------------------------------------------
# profiles and the radial operator
# ---------------------------------------------------------------------------

class AnalyticProfile:
    """Radial profile with closed-form w, w', w''."""

    def __init__(self, w, wp, wpp, label="analytic"):
        self._w, self._wp, self._wpp = w, wp, wpp
        self.label = label

    def __call__(self, r):
        return np.asarray(self._w(np.asarray(r, dtype=float)), dtype=float)

    def derivatives(self, r):
        r = np.asarray(r, dtype=float)
        return (np.asarray(self._w(r), dtype=float), np.asarray(self._wp(r), dtype=float),
                np.asarray(self._wpp(r), dtype=float))

    def __repr__(self):
        return f"AnalyticProfile({self.label})"


def power_profile(s, shift=0.0):
    """(shift + r)^s."""
    return AnalyticProfile(lambda r: (shift + r) ** s,
                           lambda r: s * (shift + r) ** (s - 1.0),
                           lambda r: s * (s - 1.0) * (shift + r) ** (s - 2.0),
                           f"({shift:g}+r)^{s:g}")


def power_over_log_profile(s):
    """r^s / log r, for r > 1."""
    def wp(r):
        L = np.log(r)
        return r ** (s - 1.0) * (s / L - 1.0 / L ** 2)

    def wpp(r):
        L = np.log(r)
        return r ** (s - 2.0) * ((s - 1.0) * (s / L - 1.0 / L ** 2) - s / L ** 2 + 2.0 / L ** 3)

    return AnalyticProfile(lambda r: r ** s / np.log(r), wp, wpp, f"r^{s:g}/log r")


def bracket_power_profile(s):
    """(1 + r^2)^s."""
    return AnalyticProfile(lambda r: (1.0 + r * r) ** s,
                           lambda r: 2.0 * s * r * (1.0 + r * r) ** (s - 1.0),
                           lambda r: 2.0 * s * (1.0 + r * r) ** (s - 1.0)
                           + 4.0 * s * (s - 1.0) * r * r * (1.0 + r * r) ** (s - 2.0),
                           f"(1+r^2)^{s:g}")


def constant_profile(c):
    return AnalyticProfile(lambda r: np.full(np.shape(r), float(c)), lambda r: np.zeros(np.shape(r)),
                           lambda r: np.zeros(np.shape(r)), f"{c:g}")


def _derivatives(w, r):
    """(w, w', w'') at r: analytic when w offers derivatives(), else a 5-point stencil."""
    r = np.asarray(r, dtype=float)
    if hasattr(w, "derivatives"):
        return tuple(np.asarray(a, dtype=float) for a in w.derivatives(r))
    h = STENCIL_STEP * np.maximum(np.abs(r), 1e-3)
    h = np.minimum(h, 0.49 * np.where(r > 0, r, np.inf))
    v = [np.asarray(w(r + k * h), dtype=float) for k in (-2, -1, 0, 1, 2)]
    d1 = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h)
    d2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h)
    return v[2], d1, d2


def _lhs(M, phi, wp, wpp, r):
    with np.errstate(all="ignore"):
        dphi = np.asarray(phi.derivative(np.abs(wp)), dtype=float)
        flux_change = np.where(wpp == 0, 0.0, dphi * wpp)
        return flux_change + np.asarray(phi(wp), dtype=float) * np.asarray(M.laplacian_r(r), dtype=float)


def phi_laplacian_radial(M: ModelManifold, phi, w, r):
    """(phi(w'))' + phi(w') Delta r on the model M."""
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    _, wp, wpp = _derivatives(w, r)
    out = _lhs(M, phi, wp, wpp, r)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Residual Delta_phi u - b f(u) l(|u'|) on a grid."""

    r: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    tol: float = SIGN_TOL
    unit: float = 1.0  # absolute part of the band; 0 makes the band purely relative to max|rhs|

    @property
    def band(self):
        return self.tol * (self.unit + float(np.max(np.abs(self.rhs)))) if self.rhs.size else self.tol

    @property
    def min(self):
        return float(np.min(self.residual))

    @property
    def max(self):
        return float(np.max(self.residual))

    @property
    def argmin(self):
        return float(self.r[int(np.argmin(self.residual))])

    @property
    def verdict(self):
        """'>=0', '<=0' or 'mixed' against the band tol (unit + max|rhs|)."""
        if self.min >= -self.band:
            return ">=0"
        if self.max <= self.band:
            return "<=0"
        return "mixed"

    def node_signs(self):
        """+1 where residual > tol (1 + |rhs_i|), else -1 (the construction certificates' rule)."""
        return np.where(self.residual > self.tol * (1.0 + np.abs(self.rhs)), 1, -1)

    def rows(self):
        return np.column_stack((self.r, self.u, self.uprime, self.lhs, self.rhs, self.residual))

    columns = ("r", "u", "uprime", "lhs", "rhs", "residual")


def _weight_fn(weight):
    if weight is None:
        return lambda r: np.ones_like(r)
    if isinstance(weight, (int, float)):
        c = float(weight)
        return lambda r: np.full_like(r, c)
    return lambda r: np.asarray(weight(r), dtype=float)


def residual_report(M: ModelManifold, triple: NonlinearTriple, weight, profile, grid, tol=SIGN_TOL, unit=1.0):
    """Evaluate Delta_phi u - b(r) f(u) l(|u'|) at every grid node.

    weight may be a WeightProfile, a callable, a number or None (then
    triple.beta or 1 is used).
    """
    if weight is None:
        weight = triple.beta
    r = np.asarray(grid, dtype=float)
    u, up, upp = _derivatives(profile, r)
    lhs = _lhs(M, triple.phi, up, upp, r)
    with np.errstate(all="ignore"):
        rhs = _weight_fn(weight)(r) * np.asarray(triple.f(u), dtype=float) * np.asarray(triple.l(np.abs(up)),
                                                                                       dtype=float)
    rhs = np.where(np.isnan(rhs), 0.0, rhs)
    return ResidualReport(r, u, up, lhs, rhs, lhs - rhs, tol, unit)


def agrees_with_certificate(certified, M: ModelManifold, triple: NonlinearTriple, weight):
    """Compare node signs of an independent residual with a CertifiedProfile's own residual.

    Returns (agree_everywhere, report).
    """
    chk = certified.residual
    rep = residual_report(M, triple, weight, certified.radial, chk.r, tol=chk.tol)
    return bool(np.array_equal(rep.node_signs(), chk.signs)), rep


def scaled_weight(weight: WeightProfile, c):
    return CustomWeight(lambda r: c * weight(r), lambda r: c * weight.derivative(r))


# ---------------------------------------------------------------------------
# counterexample gallery
# ---------------------------------------------------------------------------

class FamilyId(enum.Enum):
    CSP_INTRO = "CspIntro"
    CSP_SHARP = "CspSharp"
    WMP_POWER = "WmpPower"
    WMP_LOG = "WmpLog"
    SL_SHARP = "SlSharp"


class GalleryVerdict(enum.Enum):
    CONSISTENT = "ConsistentWithPaper"
    INCONSISTENT = "Inconsistent"
    UNSUPPORTED = "Unsupported"


def _eq(a, b):
    if not (math.isfinite(a) and math.isfinite(b)):
        return a == b
    return abs(a - b) <= EQ_TOL * (1.0 + abs(a) + abs(b))


def power_end_model(m, kappa, alpha):
    """Model with Delta r = (m-1) kappa r^{alpha/2} for alpha > -2, (m-1) kappa_bar / r for alpha = -2.

    Only the end r >= 1 is described; it has the asymptotic Laplacian and
    volume growth of the curvature -kappa^2 (1+r^2)^{alpha/2} models.
    """
    if alpha < -2:
        raise ValueError("alpha must be >= -2")
    if _eq(alpha, -2.0):
        kb = kappa_bar(kappa)
        warp = AnalyticLogWarp(lambda r: kb * np.log(r), lambda r: kb / r,
                               lambda r: kb * (kb - 1.0) / r ** 2, label=f"r^{kb:g}")
    else:
        a = 0.5 * alpha + 1.0
        warp = AnalyticLogWarp(lambda r: kappa * r ** a / a, lambda r: kappa * r ** (a - 1.0),
                               lambda r: kappa * (a - 1.0) * r ** (a - 2.0) + kappa ** 2 * r ** (2 * a - 2.0),
                               label=f"exp({kappa:g} r^{a:g}/{a:g})")
    return ModelManifold(m, warp)


def shrinking_end_model(m, alpha):
    """Model with g = exp(-r^alpha) on the end r >= 2."""
    warp = AnalyticLogWarp(lambda r: -r ** alpha, lambda r: -alpha * r ** (alpha - 1.0),
                           lambda r: -alpha * (alpha - 1.0) * r ** (alpha - 2.0) + alpha ** 2 * r ** (2 * alpha - 2.0),
                           label=f"exp(-r^{alpha:g})")
    return ModelManifold(m, warp)


def _power_f(omega):
    if omega >= 0:
        return PowerF(omega)
    return CustomF(lambda t: np.where(t > 0, np.abs(t) ** omega, 0.0))


def _power_l(e):
    return CustomL(lambda t: np.abs(t) ** e, singular_at_zero=e < 0)


@dataclass
class FamilyInstance:
    model: ModelManifold
    triple: NonlinearTriple
    weight: WeightProfile
    profile: AnalyticProfile
    R_start: float


@dataclass
class CounterexampleFamily:
    """A gallery family: range predicate plus model, triple and profile builders."""

    id: FamilyId
    keys: tuple
    predicate: Callable  # params -> (in_range, note)
    builder: Callable  # params -> FamilyInstance
    sampler: Callable  # (rng, inside, margin) -> params

    def in_range(self, params):
        return self.predicate(params)

    def build(self, params):
        return self.builder(params)

    def sample(self, rng, inside=True, margin=0.2):
        return self.sampler(rng, inside, margin)


# CspIntro: u = r^{-beta}, Delta u >= C u^omega on g = exp(-r^alpha)

def _csp_intro_range(P):
    a, w, b = P["alpha"], P["omega"], P["beta"]
    if not a > 2:
        return False, "alpha > 2"
    if not 0 < w < 1:
        return False, "omega in (0,1)"
    top = (a - 2.0) / (1.0 - w)
    if not (0 < b and (b < top or _eq(b, top))):
        return False, "beta in (0, (alpha-2)/(1-omega)]"
    return True, "beta in (0, (alpha-2)/(1-omega)]"


def _csp_intro_build(P):
    return FamilyInstance(shrinking_end_model(int(P["m"]), P["alpha"]),
                          NonlinearTriple(PowerLaw(2.0), _power_f(P["omega"]), ConstantL(1.0)),
                          PowerDecay(0.0), power_profile(-P["beta"]), max(2.0, P.get("R", 10.0)))


def _csp_intro_sample(rng, inside, margin):
    m = int(rng.integers(2, 6))
    a = rng.uniform(2.5, 6.0)
    w = rng.uniform(0.1, 0.7)
    top = (a - 2.0) / (1.0 - w)
    if inside:
        b = top if rng.random() < 0.25 else rng.uniform(0.05, 1.0) * top
    else:
        b = top + margin + rng.uniform(0.0, 0.8)
    return {"m": m, "alpha": a, "omega": w, "beta": b}


# CspSharp: v = (1+r)^{-sigma} on the pinching model, Delta_p v >= C (1+r)^{-mu} v^omega |v'|^{p-1-chi}

def _csp_sharp_range(P):
    a, mu, chi, w, s = P["alpha"], P["mu"], P["chi"], P["omega"], P["sigma"]
    if not mu > chi - a / 2:
        return False, "mu > chi - alpha/2"
    if not w < chi:
        return False, "omega < chi"
    top = (mu - chi + a / 2) / (chi - w)
    if not (0 < s and (s < top or _eq(s, top))):
        return False, "sigma in (0, (mu-chi+alpha/2)/(chi-omega)]"
    return True, "sigma in (0, (mu-chi+alpha/2)/(chi-omega)]"


def _csp_sharp_build(P):
    p = P["p"]
    delta = 0.5 * P["alpha"] + 1.0
    return FamilyInstance(pinch_model(int(P["m"]), delta),
                          NonlinearTriple(PowerLaw(p), _power_f(P["omega"]), _power_l(p - 1.0 - P["chi"])),
                          PowerDecay(P["mu"]), power_profile(-P["sigma"], 1.0), P.get("R", 10.0))


def _csp_sharp_sample(rng, inside, margin):
    m = int(rng.integers(2, 5))
    p = rng.uniform(1.5, 2.5)
    # delta = alpha/2 + 1 is either 0 or at least 1/2, so the Delta r term settles within the scan
    a = -2.0 if rng.random() < 0.25 else rng.uniform(-1.0, 2.0)
    chi = rng.uniform(0.4, 1.5)
    w = rng.uniform(0.0, chi - 0.3)
    mu = chi - a / 2 + rng.uniform(0.2, 1.0)
    top = (mu - chi + a / 2) / (chi - w)
    if inside:
        s = top if rng.random() < 0.25 else rng.uniform(0.1, 1.0) * top
    else:
        s = top + margin + rng.uniform(0.0, 0.8)
    return {"m": m, "p": p, "alpha": a, "mu": mu, "chi": chi, "omega": w, "sigma": s}


# WmpPower: u = r^sigma, phi = t^{p-1}/(1+t)^{q-1}, Delta_phi u >= K (1+r)^{-mu} phi(|u'|)/|u'|^chi

def _wmp_standing(P):
    p, q, chi, s = P["p"], P["q"], P["chi"], P["sigma"]
    if not (p > 1 and 1 <= q <= p):
        return "p > 1, 1 <= q <= p"
    if not 0 <= chi <= p - 1:
        return "0 <= chi <= p-1"
    if not s > 0:
        return "sigma > 0"
    return None


def _wmp_power_range(P):
    bad = _wmp_standing(P)
    if bad:
        return False, bad
    m, p, a, mu, chi, s = P["m"], P["p"], P["alpha"], P["mu"], P["chi"], P["sigma"]
    lhs, rhs = chi * s, chi + 1.0 - mu
    growth3 = (m - 1) * kappa_bar(P["kappa"]) + 1.0 > p - s * (p - 1.0)
    crit = _eq(a, -2.0)
    if crit and s < 1 and not growth3:
        # the sub-unit exponent on the Euclidean-type end needs the volume clause in every case
        return False, "lim log vol(B_r)/log r > p - sigma(p-1)"
    if lhs > rhs and not _eq(lhs, rhs):
        return True, "1) chi sigma > chi+1-mu"
    if _eq(lhs, rhs):
        if not crit:
            return True, "2) chi sigma = chi+1-mu, alpha > -2"
        if s <= 1:
            return (True, "3) chi sigma = chi+1-mu, alpha = -2, sigma in (0,1], volume") if growth3 else \
                (False, "lim log vol(B_r)/log r > p - sigma(p-1)")
        return False, "3') not covered"
    if crit:
        return False, "4) needs alpha > -2"
    if a / 2 + 1.0 >= rhs - lhs - EQ_TOL:
        return True, "4) chi sigma < chi+1-mu, alpha > -2, volume"
    return False, "lim log vol(B_r)/r^{chi+1-mu-chi sigma} > 0"


def _wmp_power_build(P):
    phi = RationalPower(P["p"], P["q"])
    return FamilyInstance(power_end_model(int(P["m"]), P["kappa"], P["alpha"]),
                          NonlinearTriple(phi, PowerF(0.0), PhiQuotient(phi, P["chi"])),
                          PowerDecay(P["mu"]), power_profile(P["sigma"]), P.get("R", 10.0))


def _wmp_power_sample(rng, inside, margin):
    while True:
        m = int(rng.integers(2, 5))
        p = rng.uniform(1.5, 3.0)
        q = rng.uniform(1.0, p)
        kappa = rng.uniform(0.5, 2.0)
        chi = rng.uniform(0.2, p - 1.0)
        s = rng.uniform(0.3, 2.5)
        if inside:
            case = int(rng.integers(1, 5))
            if case == 1:
                a = -2.0 if rng.random() < 0.3 else rng.uniform(-1.5, 2.0)
                mu = chi + 1.0 - chi * s + rng.uniform(0.05, 1.0)
            elif case == 2:
                a = rng.uniform(-1.5, 2.0)
                mu = chi + 1.0 - chi * s
            elif case == 3:
                a = -2.0
                s = rng.uniform(0.3, 1.0)
                mu = chi + 1.0 - chi * s
            else:
                a = rng.uniform(-1.5, 2.0)
                e = (a / 2 + 1.0) * (1.0 if rng.random() < 0.25 else rng.uniform(0.05, 1.0))
                mu = chi + 1.0 - chi * s - e
        else:
            a = rng.uniform(-1.5, 2.0)
            e = a / 2 + 1.0 + margin + rng.uniform(0.0, 0.8)
            mu = chi + 1.0 - chi * s - e
        P = {"m": m, "p": p, "q": q, "kappa": kappa, "alpha": a, "mu": mu, "chi": chi, "sigma": s}
        if _wmp_power_range(P)[0] == inside:
            return P


# WmpLog: u = r^sigma / log r on the p-Laplacian

def _wmp_log_range(P):
    p, a, mu, chi, s = P["p"], P["alpha"], P["mu"], P["chi"], P["sigma"]
    if not p > 1:
        return False, "p > 1"
    if not 0 <= chi <= p - 1:
        return False, "0 <= chi <= p-1"
    if not s > 0:
        return False, "sigma > 0"
    e = chi + 1.0 - mu - chi * s
    if not e > 0 or _eq(e, 0.0):
        return False, "chi sigma < chi+1-mu"
    if _eq(a, -2.0):
        return False, "alpha > -2"
    if chi > 0:
        if a / 2 + 1.0 > e and not _eq(a / 2 + 1.0, e):
            return True, "5) chi > 0, lim log vol(B_r)/r^{chi+1-mu-chi sigma} = inf"
        return False, "lim log vol(B_r)/r^{chi+1-mu-chi sigma} = inf"
    if _eq(a / 2 + 1.0, e):
        return True, "6) chi = 0, lim log vol(B_r)/r^{chi+1-mu-chi sigma} in (0,inf)"
    return False, "lim log vol(B_r)/r^{chi+1-mu-chi sigma} in (0,inf)"


def _wmp_log_build(P):
    phi = PowerLaw(P["p"])
    R0 = max(10.0, math.exp(2.0 / P["sigma"]))
    return FamilyInstance(power_end_model(int(P["m"]), P["kappa"], P["alpha"]),
                          NonlinearTriple(phi, PowerF(0.0), PhiQuotient(phi, P["chi"])),
                          PowerDecay(P["mu"]), power_over_log_profile(P["sigma"]), P.get("R", R0))


def _wmp_log_sample(rng, inside, margin):
    while True:
        m = int(rng.integers(2, 5))
        p = rng.uniform(1.5, 3.0)
        kappa = rng.uniform(0.5, 2.0)
        s = rng.uniform(0.3, 2.0)
        a = rng.uniform(-1.0, 2.0)
        if inside:
            if rng.random() < 0.5:
                chi = rng.uniform(0.2, p - 1.0)
                e = rng.uniform(0.05, a / 2 + 1.0 - 0.2)
            else:
                chi = 0.0
                e = a / 2 + 1.0
        else:
            chi = 0.0 if rng.random() < 0.25 else rng.uniform(0.2, p - 1.0)
            e = a / 2 + 1.0 + margin + rng.uniform(0.0, 0.8)
        mu = chi + 1.0 - chi * s - e
        P = {"m": m, "p": p, "kappa": kappa, "alpha": a, "mu": mu, "chi": chi, "sigma": s}
        if _wmp_log_range(P)[0] == inside:
            return P


# SlSharp: u = (1+r^2)^sigma, mean curvature operator

def _sl_sharp_range(P):
    a, mu, chi, w, s = P["alpha"], P["mu"], P["chi"], P["omega"], P["sigma"]
    if not s > 1:
        return False, "sigma > 1"
    lhs, rhs = 2.0 * s * (w - chi), a / 2 + mu - chi
    if lhs <= rhs or _eq(lhs, rhs):
        return True, "2 sigma (omega-chi) <= alpha/2 + mu - chi"
    return False, "2 sigma (omega-chi) <= alpha/2 + mu - chi"


def _sl_sharp_build(P):
    phi = MeanCurvature()
    return FamilyInstance(power_end_model(int(P["m"]), P["kappa"], P["alpha"]),
                          NonlinearTriple(phi, _power_f(P["omega"]), PhiQuotient(phi, P["chi"])),
                          PowerDecay(P["mu"]), bracket_power_profile(P["sigma"]), P.get("R", 10.0))


def _sl_sharp_sample(rng, inside, margin):
    while True:
        m = int(rng.integers(2, 5))
        kappa = rng.uniform(0.5, 2.0)
        a = rng.uniform(-2.0, 2.0)
        chi = rng.uniform(0.2, 1.0)
        mu = chi - a / 2 - rng.uniform(0.0, 1.0)
        s = rng.uniform(1.2, 3.0)
        rhs = a / 2 + mu - chi
        if inside:
            w = chi + rhs / (2 * s) - (0.0 if rng.random() < 0.25 else rng.uniform(0.0, 0.5))
        else:
            w = chi + (rhs + margin + rng.uniform(0.0, 0.8)) / (2 * s)
        if w < 0:
            continue
        P = {"m": m, "kappa": kappa, "alpha": a, "mu": mu, "chi": chi, "omega": w, "sigma": s}
        if _sl_sharp_range(P)[0] == inside:
            return P


GALLERY = {
    FamilyId.CSP_INTRO: CounterexampleFamily(FamilyId.CSP_INTRO, ("m", "alpha", "omega", "beta"),
                                             _csp_intro_range, _csp_intro_build, _csp_intro_sample),
    FamilyId.CSP_SHARP: CounterexampleFamily(FamilyId.CSP_SHARP, ("m", "p", "alpha", "mu", "chi", "omega", "sigma"),
                                             _csp_sharp_range, _csp_sharp_build, _csp_sharp_sample),
    FamilyId.WMP_POWER: CounterexampleFamily(FamilyId.WMP_POWER, ("m", "p", "q", "kappa", "alpha", "mu", "chi", "sigma"),
                                             _wmp_power_range, _wmp_power_build, _wmp_power_sample),
    FamilyId.WMP_LOG: CounterexampleFamily(FamilyId.WMP_LOG, ("m", "p", "kappa", "alpha", "mu", "chi", "sigma"),
                                           _wmp_log_range, _wmp_log_build, _wmp_log_sample),
    FamilyId.SL_SHARP: CounterexampleFamily(FamilyId.SL_SHARP, ("m", "kappa", "alpha", "mu", "chi", "omega", "sigma"),
                                            _sl_sharp_range, _sl_sharp_build, _sl_sharp_sample),
}


def get_family(family):
    if isinstance(family, CounterexampleFamily):
        return family
    return GALLERY[FamilyId(family)]


@dataclass
class CounterexampleResult:
    family: FamilyId
    params: dict
    in_range: bool
    clause: str
    verdict: GalleryVerdict
    report: Optional[ResidualReport]
    C: float = math.nan
    R_stable: float = math.nan
    negative_found: bool = False
    negative_at: float = math.nan
    windows: list = field(default_factory=list)


def _window(R):
    return np.geomspace(R, WINDOW_FACTOR * R, WINDOW_NODES)


def counterexample_check(family, params, C=None):
    """Range verdict and residual scan of a gallery family.

    The constant in front of the right-hand side is params["C"] (or C) when
    given, else half the smallest lhs/rhs ratio on [R, 1e4 R]. The
    window [R, 100R] is doubled up to WINDOW_BUDGET times; the scan stops
    early once two consecutive windows are negative. Decaying profiles
    make both sides tiny, so the window sign uses a band relative to the
    window's max|rhs| (dividing the inequality by a positive constant).
    """
    fam = get_family(family)
    missing = [k for k in fam.keys if k not in params]
    if missing:
        raise ValueError(f"{fam.id.value} needs parameters {missing}")
    inside, clause = fam.in_range(params)
    if fam.id is FamilyId.WMP_POWER and clause.startswith("3')"):
        return CounterexampleResult(fam.id, dict(params), False, clause, GalleryVerdict.UNSUPPORTED, None)
    inst = fam.build(params)
    R = float(inst.R_start)
    if C is None:
        C = params.get("C")
    if C is None:
        calib = np.geomspace(R, CALIBRATION_SPAN * R, 161)
        first = residual_report(inst.model, inst.triple, inst.weight, inst.profile, calib)
        with np.errstate(all="ignore"):
            ratio = first.lhs / first.rhs
        lo = float(np.min(ratio)) if np.all(first.rhs > 0) else -1.0
        C = 0.5 * lo if lo > 0 and np.isfinite(lo) else 1.0
    weight = scaled_weight(inst.weight, C)
    signs, windows, report = [], [], None
    neg_at = math.nan
    for _ in range(WINDOW_BUDGET + 1):
        report = residual_report(inst.model, inst.triple, weight, inst.profile, _window(R), unit=0.0)
        ok = report.verdict == ">=0"
        signs.append(ok)
        windows.append((R, report.min, ok))
        if not ok and math.isnan(neg_at):
            neg_at = report.argmin
        if len(signs) >= 2 and not signs[-1] and not signs[-2]:
            break
        R *= 2.0
    stable_from = len(signs) - 1
    while stable_from > 0 and signs[stable_from - 1] == signs[-1]:
        stable_from -= 1
    eventually_nonneg = len(signs) >= 2 and signs[-1] and signs[-2]
    if inside and not eventually_nonneg:
        verdict = GalleryVerdict.INCONSISTENT
    else:
        verdict = GalleryVerdict.CONSISTENT
    return CounterexampleResult(fam.id, dict(params), inside, clause, verdict, report, float(C),
                                windows[stable_from][0], not all(signs), neg_at, windows)


# ---------------------------------------------------------------------------
# theorem applicability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoremVerdict:
    theorem: str
    applicable: bool
    failed_clause: Optional[str] = None


CLAUSE_MU = "mu <= chi - alpha/2"
CLAUSE_SMP_A = "alpha >= -2 and chi > 0"
CLAUSE_SMP_B = "alpha = -2, chi = 0 and kappa_bar <= (p-1)/(m-1)"
CLAUSE_WMP_A = "alpha >= -2, chi > 0"
CLAUSE_WMP_B = "alpha >= -2, chi = 0, mu < -alpha/2"
CLAUSE_WMP_C = "alpha > -2, chi = 0, mu = -alpha/2, V_inf = 0"
CLAUSE_WMP_D = "alpha = -2, chi = 0, mu = -alpha/2, V_inf <= p"
CLAUSE_ALPHA = "alpha >= -2"
CLAUSE_CSP_CHI = "chi > 0"
CLAUSE_KO0 = "(KO_0): 1/(K^-1 o F) in L^1(0+)"
CLAUSE_SL_CHI = "chi_1 > 0, chi_2 > 0"
CLAUSE_SL_MU = "mu <= min{chi_1 + 1, chi_2 - alpha/2}"
CLAUSE_KO = "(KO): 1/(K^-1 o F) in L^1(+inf)"


def _le(a, b):
    return a <= b or _eq(a, b)


def _ko_holds(p, chi, omega, endpoint):
    v = ko_verdict(plaplace_triple(p, chi, omega), endpoint, route="closed")
    return v.outcome is Verdict.HOLDS


def theorem_applicability(params):
    """Evaluate the hypothesis clauses of the SMP, WMP, CSP and SL theorems.

    params: m, p, kappa, alpha, mu, chi, omega, V_inf (volume exponent),
    optional p_bar, chi1, chi2 (default chi). KO clauses are evaluated on
    the p-Laplacian power family with these exponents.
    """
    P = dict(params)
    m, p = P.get("m", 2), P.get("p", 2.0)
    kappa, alpha, mu, chi = P.get("kappa", 0.0), P["alpha"], P["mu"], P["chi"]
    omega = P.get("omega")
    V = P.get("V_inf", P.get("volume_exponent", math.inf))
    chi1, chi2 = P.get("chi1", chi), P.get("chi2", chi)
    out = []
    if alpha < -2 and not _eq(alpha, -2.0):
        return [TheoremVerdict(t, False, CLAUSE_ALPHA) for t in ("SMP", "WMP", "CSP", "SL")]
    crit = _eq(alpha, -2.0)
    zero = _eq(chi, 0.0)

    # strong maximum principle at infinity
    if not _le(mu, chi - alpha / 2):
        out.append(TheoremVerdict("SMP", False, CLAUSE_MU))
    elif chi > 0 and not zero:
        out.append(TheoremVerdict("SMP", True))
    elif crit and zero and _le(kappa_bar(kappa), (p - 1.0) / (m - 1.0)):
        out.append(TheoremVerdict("SMP", True))
    else:
        out.append(TheoremVerdict("SMP", False, CLAUSE_SMP_B))

    # weak maximum principle at infinity
    if not _le(mu, chi - alpha / 2):
        out.append(TheoremVerdict("WMP", False, CLAUSE_MU))
    elif chi > 0 and not zero:
        out.append(TheoremVerdict("WMP", True))
    elif mu < -alpha / 2 and not _eq(mu, -alpha / 2):
        out.append(TheoremVerdict("WMP", True))
    elif not crit:
        out.append(TheoremVerdict("WMP", _eq(V, 0.0), None if _eq(V, 0.0) else CLAUSE_WMP_C))
    else:
        ok = _le(V, p)
        out.append(TheoremVerdict("WMP", ok, None if ok else CLAUSE_WMP_D))

    # compact support principle
    if not (chi > 0 and not zero):
        out.append(TheoremVerdict("CSP", False, CLAUSE_CSP_CHI))
    elif not _le(mu, chi - alpha / 2):
        out.append(TheoremVerdict("CSP", False, CLAUSE_MU))
    elif omega is None or not _ko_holds(p, chi, omega, Endpoint.ZERO):
        out.append(TheoremVerdict("CSP", False, CLAUSE_KO0))
    else:
        out.append(TheoremVerdict("CSP", True))

    # strong Liouville property
    if not (chi1 > 0 and chi2 > 0 and not _eq(chi1, 0.0) and not _eq(chi2, 0.0)):
        out.append(TheoremVerdict("SL", False, CLAUSE_SL_CHI))
    elif not _le(mu, min(chi1 + 1.0, chi2 - alpha / 2)):
        out.append(TheoremVerdict("SL", False, CLAUSE_SL_MU))
    elif omega is None or not _ko_holds(p, chi, omega, Endpoint.INFINITY):
        out.append(TheoremVerdict("SL", False, CLAUSE_KO))
    else:
        out.append(TheoremVerdict("SL", True))
    return out
