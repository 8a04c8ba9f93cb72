"""Keller-Osserman conditions at 0 and at infinity.

The integrand is g(s) = 1 / K^{-1}(F(s)). Writing g ~ s^{-gamma}, the
condition at 0 holds iff gamma < 1 and the condition at infinity holds iff
gamma > 1. Power families are decided in closed form; everything else goes
through a fitted exponent cross-checked against decade partial integrals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import KernelUndefined, NonPositiveSample, NotIntegrableAtZero, Verdict
from .nonlinearity import (
    KernelKind,
    KernelTable,
    MeanCurvature,
    NonlinearTriple,
    PhiQuotient,
    PowerF,
    PowerL,
    PowerLaw,
)

MARGIN = 0.05
ZERO_WINDOW = (1e-10, 1e-2)
INF_WINDOW = (1e2, 1e10)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class Endpoint(enum.Enum):
    ZERO = "zero"
    INFINITY = "infinity"


class ExponentFit(float):
    """A fitted exponent (the float value) carrying its fit diagnostics."""

    def __new__(cls, value, residual=0.0, log_coefficient=0.0, corrected=False):
        obj = super().__new__(cls, value)
        obj.residual = float(residual)
        obj.log_coefficient = float(log_coefficient)
        obj.corrected = bool(corrected)
        return obj


def exponent_estimate(g, endpoint=Endpoint.ZERO, window=None, per_decade=20):
    """Log-log slope of g over the sampled decades near the endpoint.

    A plain least-squares line is tried first. If it leaves a visible
    residual, log g is regressed on [1, log s, log|log s|] so that a slowly
    varying logarithmic factor does not bias the power exponent.
    """
    endpoint = Endpoint(endpoint)
    if window is None:
        window = (1e-12, 1e-2) if endpoint is Endpoint.ZERO else (1e2, 1e12)
    a, b = window
    n = max(3, int(round(per_decade * math.log10(b / a))) + 1)
    s = np.logspace(math.log10(a), math.log10(b), n)
    with np.errstate(all="ignore"):
        v = np.asarray(g(s), dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise NonPositiveSample("g must be positive and finite on the sampled decades")
    x = np.log(s)
    y = np.log(v)
    A = np.column_stack((np.ones_like(x), x))
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    if res <= 1e-6 * max(1.0, float(np.max(np.abs(y)))):
        return ExponentFit(coef[1], res)
    L = np.log(np.abs(x))
    A3 = np.column_stack((np.ones_like(x), x, L))
    c3, *_ = np.linalg.lstsq(A3, y, rcond=None)
    res3 = float(np.sqrt(np.mean((A3 @ c3 - y) ** 2)))
    return ExponentFit(c3[1], res3, c3[2], corrected=True)


@dataclass
class KoVerdict:
    endpoint: Endpoint
    kind: KernelKind
    outcome: Verdict
    gamma: float
    route: str
    partial_sums: list = field(default_factory=list)
    gamma_partial: float = math.nan
    numeric_outcome: Optional[Verdict] = None
    note: str = ""

    def line(self):
        ps = ",".join(f"{v:.6g}" for v in self.partial_sums)
        return (f"endpoint={self.endpoint.value} kind={self.kind.value} outcome={self.outcome.value} "
                f"route={self.route} gamma={self.gamma:.6g} gamma_partial={self.gamma_partial:.6g} "
                f"partial_sums=[{ps}]" + (f" note={self.note}" if self.note else ""))


def _outcome_from_gamma(gamma, endpoint, margin=MARGIN):
    if not np.isfinite(gamma):
        if gamma == math.inf:
            return Verdict.FAILS if endpoint is Endpoint.ZERO else Verdict.HOLDS
        return Verdict.INCONCLUSIVE
    if endpoint is Endpoint.ZERO:
        if gamma < 1.0 - margin:
            return Verdict.HOLDS
        if gamma > 1.0 + margin:
            return Verdict.FAILS
    else:
        if gamma > 1.0 + margin:
            return Verdict.HOLDS
        if gamma < 1.0 - margin:
            return Verdict.FAILS
    return Verdict.INCONCLUSIVE


def power_family_exponents(triple: NonlinearTriple, kind=KernelKind.STANDARD):
    """(chi, omega, threshold) when K and F are exact powers, else None."""
    kind = KernelKind(kind)
    phi, l, f = triple.phi, triple.l, triple.f
    if not isinstance(f, PowerF):
        return None
    chi = None
    if kind is KernelKind.STANDARD and isinstance(phi, PowerLaw):
        if isinstance(l, PowerL):
            chi = phi.p - 1.0 - l.exponent
        elif isinstance(l, PhiQuotient) and isinstance(l.phi, PowerLaw) and l.phi.p == phi.p:
            chi = l.chi
    elif kind is KernelKind.MEAN_CURVATURE and isinstance(l, PhiQuotient) and l.phi is phi:
        chi = l.chi
    if chi is None:
        return None
    return chi, f.omega, f.threshold


def _closed_form(triple, endpoint, kind):
    ex = power_family_exponents(triple, kind)
    if ex is None:
        return None
    chi, omega, thr = ex
    if chi <= -1.0:
        raise NotIntegrableAtZero("K is not integrable at 0 (chi <= -1)")
    gamma = (omega + 1.0) / (chi + 1.0)
    if endpoint is Endpoint.ZERO and thr > 0:
        return math.inf, Verdict.FAILS
    if endpoint is Endpoint.ZERO:
        return gamma, Verdict.HOLDS if gamma < 1.0 else Verdict.FAILS
    return gamma, Verdict.HOLDS if gamma > 1.0 else Verdict.FAILS


def _decade_integrals(g, a, b):
    edges = np.log(np.logspace(math.log10(a), math.log10(b), int(round(math.log10(b / a))) + 1))
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        # four panels per decade, Gauss-Legendre in log s
        sub = np.linspace(lo, hi, 5)
        half = 0.5 * np.diff(sub)
        mid = 0.5 * (sub[1:] + sub[:-1])
        x = mid[:, None] + half[:, None] * _GL_X[None, :]
        s = np.exp(x)
        v = np.asarray(g(s.ravel()), dtype=float).reshape(s.shape) * s
        out.append(float(np.sum(half[:, None] * _GL_W[None, :] * v)))
    return out


def _numeric(triple, endpoint, kind, table):
    f = triple.f
    if endpoint is Endpoint.ZERO:
        a, b = ZERO_WINDOW
        if f.threshold > 0 or float(f.F(np.array([a]))[0]) <= 0.0:
            return math.inf, [], math.inf, Verdict.FAILS, "f vanishes near 0"
    else:
        a, b = INF_WINDOW
        s = np.logspace(math.log10(a), math.log10(b), 161)
        with np.errstate(all="ignore"):
            Fv = f.F(s)
        ok = np.isfinite(Fv) & (Fv > 0) & (Fv < 1e300)
        if not ok[0]:
            return math.nan, [], math.nan, Verdict.INCONCLUSIVE, "F not finite on window"
        bad = np.nonzero(~ok)[0]
        if bad.size:
            b = float(s[bad[0] - 1])

    def g(x):
        return 1.0 / table.inverse(f.F(x))

    fit = exponent_estimate(g, endpoint, window=(a, b))
    gamma = -float(fit)
    decades = math.log10(b / a)
    if decades >= 2.0:
        nd = int(math.floor(decades + 1e-9))
        parts = _decade_integrals(g, a, a * 10.0 ** nd)
        if len(parts) >= 2 and all(p > 0 for p in parts):
            r = np.array(parts)
            if endpoint is Endpoint.ZERO:
                q = np.exp(np.mean(np.log(r[:-1] / r[1:])))
                gp = 1.0 + math.log10(q)
            else:
                q = np.exp(np.mean(np.log(r[1:] / r[:-1])))
                gp = 1.0 - math.log10(q)
        else:
            parts, gp = [], math.nan
    else:
        parts, gp = [], gamma
    o1 = _outcome_from_gamma(gamma, endpoint)
    o2 = _outcome_from_gamma(gp, endpoint) if np.isfinite(gp) else o1
    note = ""
    if fit.corrected and abs(gamma - 1.0) <= MARGIN:
        note = "logarithmic borderline"
    if o1 != o2:
        return gamma, parts, gp, Verdict.INCONCLUSIVE, "routes disagree"
    return gamma, parts, gp, o1, note


def ko_verdict(triple: NonlinearTriple, endpoint=Endpoint.ZERO, kind=KernelKind.STANDARD,
               route="auto", table: Optional[KernelTable] = None):
    """Decide the Keller-Osserman condition at the given endpoint.

    route: "auto" (closed form when available, numeric evidence attached),
    "closed" or "numeric".
    """
    endpoint = Endpoint(endpoint)
    kind = KernelKind(kind)
    if table is None:
        table = KernelTable(triple.phi, triple.l, kind)
    if endpoint is Endpoint.INFINITY and table.K_inf_finite:
        hint = " (try the mean curvature kernel)" if kind is KernelKind.STANDARD else ""
        raise KernelUndefined(f"K_inf = {table.K_inf:.6g} is finite{hint}")
    closed = None
    if route in ("auto", "closed"):
        closed = _closed_form(triple, endpoint, kind)
        if closed is None and route == "closed":
            raise ValueError("no closed form for this triple")
    num = None
    if route in ("auto", "numeric") or closed is None:
        num = _numeric(triple, endpoint, kind, table)
    if closed is not None:
        gamma, outcome = closed
        v = KoVerdict(endpoint, kind, outcome, gamma, "closed-form")
        if num is not None:
            v.partial_sums, v.gamma_partial, v.numeric_outcome = num[1], num[2], num[3]
            v.note = num[4]
        return v
    gamma, parts, gp, outcome, note = num
    return KoVerdict(endpoint, kind, outcome, gamma, "numeric", parts, gp, outcome, note)


def plaplace_triple(p, chi, omega, threshold=0.0):
    """phi = t^{p-1}, l = phi(t)/t^chi = t^{p-1-chi}, f = (t - threshold)_+^omega."""
    phi = PowerLaw(p)
    return NonlinearTriple(phi, PowerF(omega, threshold), PhiQuotient(phi, chi))


def mean_curvature_triple(chi, omega):
    phi = MeanCurvature()
    return NonlinearTriple(phi, PowerF(omega), PhiQuotient(phi, chi))
