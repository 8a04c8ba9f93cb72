"""Rotationally symmetric model manifolds M_g = R^+ x S^{m-1}, dr^2 + g(r)^2 dtheta^2.

Warpings are handled through log g, g'/g and g''/g so that volumes, Green
kernels and critical curves stay finite for fast growing g. Jacobi
solutions are integrated in Pruefer variables (g = e^rho sin th,
g' = e^rho cos th), which passes through zeros of g and never overflows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import BPoly
from scipy.special import gammaln

from .core import NoAdmissibleD, OutOfRange, Parabolic, RadialFunction, Verdict

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
R_MIN = 1e-8


def log_sphere_area(m):
    """log vol(S^{m-1}) = log(2 pi^{m/2} / Gamma(m/2))."""
    return math.log(2.0) + 0.5 * m * math.log(math.pi) - float(gammaln(0.5 * m))


def _arr(r):
    return np.asarray(r, dtype=float)


# ---------------------------------------------------------------------------
# warpings
# ---------------------------------------------------------------------------

class Warp:
    """Interface: log g, g'/g and g''/g as vectorised functions of r."""

    pole = True
    r_max = math.inf

    def log_g(self, r):
        raise NotImplementedError

    def dlog_g(self, r):
        raise NotImplementedError

    def ddg_over_g(self, r):
        raise NotImplementedError

    def g(self, r):
        return np.exp(self.log_g(r))

    def gp(self, r):
        return self.g(r) * self.dlog_g(r)

    def gpp(self, r):
        return self.g(r) * self.ddg_over_g(r)


class EuclideanWarp(Warp):
    def log_g(self, r):
        return np.log(_arr(r))

    def dlog_g(self, r):
        return 1.0 / _arr(r)

    def ddg_over_g(self, r):
        return np.zeros_like(_arr(r))

    def __repr__(self):
        return "Euclidean"


class HyperbolicWarp(Warp):
    """g = sinh(kappa r) / kappa."""

    def __init__(self, kappa=1.0):
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)

    def log_g(self, r):
        x = self.kappa * _arr(r)
        return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0 * self.kappa)

    def dlog_g(self, r):
        return self.kappa / np.tanh(self.kappa * _arr(r))

    def ddg_over_g(self, r):
        return np.full_like(_arr(r), self.kappa ** 2)

    def __repr__(self):
        return f"Hyperbolic(kappa={self.kappa:g})"


class ExponentialWarp(Warp):
    """g = c e^{kappa r}; the origin is a boundary set, not a point."""

    pole = False

    def __init__(self, kappa=1.0, c=1.0):
        self.kappa = float(kappa)
        self.c = float(c)

    def log_g(self, r):
        return math.log(self.c) + self.kappa * _arr(r)

    def dlog_g(self, r):
        return np.full_like(_arr(r), self.kappa)

    def ddg_over_g(self, r):
        return np.full_like(_arr(r), self.kappa ** 2)

    def __repr__(self):
        return f"Exponential(kappa={self.kappa:g})"


class AnalyticLogWarp(Warp):
    """Warp given by callables for log g, g'/g and g''/g."""

    def __init__(self, log_g, dlog_g, ddg_over_g, pole=False, label="analytic"):
        self._lg, self._dl, self._dd = log_g, dlog_g, ddg_over_g
        self.pole = pole
        self.label = label

    def log_g(self, r):
        return _arr(self._lg(_arr(r)))

    def dlog_g(self, r):
        return _arr(self._dl(_arr(r)))

    def ddg_over_g(self, r):
        return _arr(self._dd(_arr(r)))

    def __repr__(self):
        return f"AnalyticLogWarp({self.label})"


class CustomWarp(Warp):
    """User g with optional g', g''; missing derivatives are differenced."""

    def __init__(self, g, gp=None, gpp=None, pole=False):
        self._g, self._gp, self._gpp = g, gp, gpp
        self.pole = pole

    def g(self, r):
        return _arr(self._g(_arr(r)))

    def gp(self, r):
        if self._gp is not None:
            return _arr(self._gp(_arr(r)))
        r = _arr(r)
        h = 1e-5 * np.maximum(1.0, r)
        return (self.g(r + h) - self.g(r - h)) / (2 * h)

    def gpp(self, r):
        if self._gpp is not None:
            return _arr(self._gpp(_arr(r)))
        r = _arr(r)
        h = 1e-4 * np.maximum(1.0, r)
        return (self.g(r + h) - 2 * self.g(r) + self.g(r - h)) / h ** 2

    def log_g(self, r):
        return np.log(self.g(r))

    def dlog_g(self, r):
        return self.gp(r) / self.g(r)

    def ddg_over_g(self, r):
        return self.gpp(r) / self.g(r)

    def __repr__(self):
        return "CustomWarp"


class PinchWarp(Warp):
    """g = t on [0, 1/4], g = exp(-t^delta) on [1, inf), C^2 quintic in between."""

    def __init__(self, delta):
        if delta < 0:
            raise ValueError("delta must be >= 0")
        self.delta = d = float(delta)
        e = math.exp(-1.0)
        g1 = [e, -d * e, (d * d - d * (d - 1.0)) * e]
        self._glue = BPoly.from_derivatives([0.25, 1.0], [[0.25, 1.0, 0.0], g1])
        tt = np.linspace(0.25, 1.0, 2001)
        if not np.all(self._glue(tt) > 0):  # pragma: no cover
            raise ValueError("quintic glue is not positive")

    def _tail_log(self, t):
        return -np.power(t, self.delta)

    def log_g(self, r):
        t = _arr(r)
        out = np.empty_like(t)
        a = t <= 0.25
        c = t >= 1.0
        b = ~(a | c)
        out[a] = np.log(t[a])
        out[b] = np.log(self._glue(t[b]))
        out[c] = self._tail_log(t[c])
        return out

    def dlog_g(self, r):
        t = _arr(r)
        out = np.empty_like(t)
        a = t <= 0.25
        c = t >= 1.0
        b = ~(a | c)
        out[a] = 1.0 / t[a]
        out[b] = self._glue(t[b], 1) / self._glue(t[b])
        out[c] = -self.delta * np.power(t[c], self.delta - 1.0)
        return out

    def ddg_over_g(self, r):
        t = _arr(r)
        d = self.delta
        out = np.empty_like(t)
        a = t <= 0.25
        c = t >= 1.0
        b = ~(a | c)
        out[a] = 0.0
        out[b] = self._glue(t[b], 2) / self._glue(t[b])
        tc = t[c]
        out[c] = d * d * tc ** (2 * d - 2) - d * (d - 1.0) * tc ** (d - 2.0)
        return out

    def __repr__(self):
        return f"Pinch(delta={self.delta:g})"


class ShiftedWarp(Warp):
    """g(r + offset): radial variable measured from the sphere of radius offset."""

    pole = False

    def __init__(self, base: Warp, offset):
        self.base = base
        self.offset = float(offset)
        self.r_max = base.r_max - self.offset

    def log_g(self, r):
        return self.base.log_g(_arr(r) + self.offset)

    def dlog_g(self, r):
        return self.base.dlog_g(_arr(r) + self.offset)

    def ddg_over_g(self, r):
        return self.base.ddg_over_g(_arr(r) + self.offset)

    def __repr__(self):
        return f"Shifted({self.base!r}, {self.offset:g})"


# ---------------------------------------------------------------------------
# Jacobi equation
# ---------------------------------------------------------------------------

class Direction(enum.Enum):
    LOWER = "lower"  # g'' - G g <= 0
    UPPER = "upper"  # g'' - G g >= 0


@dataclass(frozen=True)
class JacobiData:
    G: Callable
    g0: float = 0.0
    g1: float = 1.0
    direction: Direction = Direction.UPPER


@dataclass
class JacobiSolution:
    radial: RadialFunction
    R: float
    reached_end: bool
    _sol: object

    def state(self, r):
        """(rho, theta) with g = e^rho sin(theta), g' = e^rho cos(theta)."""
        y = self._sol(_arr(r))
        return y[0], y[1]


def jacobi_solve(data: JacobiData, r_max, rtol=1e-12, atol=1e-14, n_out=2001):
    """Solve g'' = G g, g(0)=g0, g'(0)=g1 up to r_max or the first zero of g."""
    if data.g0 < 0 or (data.g0 == 0 and data.g1 <= 0):
        raise ValueError("need g(0) > 0, or g(0) = 0 with g'(0) > 0")
    G = data.G
    rho0 = 0.5 * math.log(data.g0 ** 2 + data.g1 ** 2)
    th0 = math.atan2(data.g0, data.g1)

    def rhs(r, y):
        th = y[1]
        s, c = math.sin(th), math.cos(th)
        Gr = float(G(r))
        return [(1.0 + Gr) * s * c, c * c - Gr * s * s]

    def hit_zero(r, y):
        return y[1] - math.pi

    hit_zero.terminal = True
    hit_zero.direction = 1
    sol = integrate.solve_ivp(rhs, (0.0, float(r_max)), [rho0, th0], method="DOP853",
                              rtol=rtol, atol=atol, dense_output=True, events=hit_zero)
    if sol.status < 0:  # pragma: no cover
        raise RuntimeError(sol.message)
    R_end = float(sol.t[-1])
    reached = sol.status == 0
    r = np.linspace(0.0, R_end, n_out)
    rho, th = sol.sol(r)
    with np.errstate(over="ignore"):
        g = np.exp(rho) * np.sin(th)
        gp = np.exp(rho) * np.cos(th)
    Gv = np.array([float(G(x)) for x in r])
    rad = RadialFunction(r, g, gp, Gv * g)
    return JacobiSolution(rad, R_end if not reached else float(r_max), reached, sol.sol)


class JacobiWarp(Warp):
    """Warp defined by a Jacobi solution (dense output of the Pruefer system)."""

    def __init__(self, data: JacobiData, r_max=1e4, rtol=1e-12):
        self.data = data
        self.solution = jacobi_solve(data, r_max, rtol=rtol, n_out=64)
        self.r_max = self.solution.R
        self.pole = data.g0 == 0.0

    def _state(self, r):
        r = _arr(r)
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise OutOfRange(f"Jacobi warp only known up to r = {self.r_max:g}")
        return self.solution.state(r)

    def log_g(self, r):
        rho, th = self._state(r)
        return rho + np.log(np.sin(th))

    def dlog_g(self, r):
        rho, th = self._state(r)
        return 1.0 / np.tan(th)

    def ddg_over_g(self, r):
        r = _arr(r)
        return np.vectorize(lambda x: float(self.data.G(x)))(r)

    def __repr__(self):
        return "JacobiWarp"


# ---------------------------------------------------------------------------
# closed-form comparison
# ---------------------------------------------------------------------------

def D_plus(t):
    return 0.5 * (-t + math.sqrt(t * t + 4.0))


def D_minus(t):
    return 0.5 * (-t - math.sqrt(t * t + 4.0))


class CurvatureProfile:
    """G with derivative and I(t) = int_0^t sqrt(G)."""

    def G(self, t):
        raise NotImplementedError

    def dG(self, t):
        raise NotImplementedError

    def sqrt_integral(self, t):
        raise NotImplementedError

    def theta(self, t):
        t = _arr(t)
        return self.dG(t) / (2.0 * self.G(t) ** 1.5)

    def theta_bounds(self, t_max=1e8):
        t = np.concatenate(([0.0], np.logspace(-8, math.log10(t_max), 4000)))
        th = self.theta(t)
        return float(np.min(th)), float(np.max(th))


class PowerCurvature(CurvatureProfile):
    """G(t) = kappa^2 (1 + t^2)^{alpha/2}."""

    def __init__(self, kappa, alpha):
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)
        self.alpha = float(alpha)

    def G(self, t):
        return self.kappa ** 2 * (1.0 + _arr(t) ** 2) ** (0.5 * self.alpha)

    def dG(self, t):
        t = _arr(t)
        return self.kappa ** 2 * self.alpha * t * (1.0 + t * t) ** (0.5 * self.alpha - 1.0)

    def sqrt_integral(self, t):
        t = _arr(t)
        a, k = self.alpha, self.kappa
        if a == 0:
            return k * t
        if a == -2:
            return k * np.arcsinh(t)
        if a == 2:
            return k * 0.5 * (t * np.sqrt(1 + t * t) + np.arcsinh(t))
        flat = t.ravel()
        out = np.empty(flat.size)
        for i, x in enumerate(flat):
            # split at 1 and integrate the tail on the log scale
            v = integrate.quad(lambda s: (1 + s * s) ** (0.25 * a), 0.0, min(x, 1.0),
                               epsabs=0, epsrel=1e-13)[0]
            if x > 1.0:
                v += integrate.quad(lambda u: (1 + math.exp(2 * u)) ** (0.25 * a) * math.exp(u),
                                    0.0, math.log(x), epsabs=0, epsrel=1e-13, limit=200)[0]
            out[i] = k * v
        return out.reshape(t.shape)

    def theta_bounds(self, t_max=math.inf):
        a, k = self.alpha, self.kappa
        # theta(t) = a t (1+t^2)^{-a/4-1} / (2k)
        if a == 0:
            return 0.0, 0.0
        if a > -4:
            t_star = 1.0 / math.sqrt(1.0 + a / 2.0) if a > -2 else math.inf
        else:
            t_star = math.inf
        if math.isinf(t_star):
            if a == -2:
                return -1.0 / k, 0.0
            return (-math.inf, 0.0) if a < 0 else (0.0, math.inf)
        val = a * t_star * (1 + t_star ** 2) ** (-a / 4 - 1) / (2 * k)
        return (min(0.0, val), max(0.0, val))


class CustomCurvature(CurvatureProfile):
    """G given by callables; I(t) by adaptive quadrature, theta bounds sampled."""

    def __init__(self, G, dG=None):
        self._G, self._dG = G, dG

    def G(self, t):
        return _arr(self._G(_arr(t)))

    def dG(self, t):
        t = _arr(t)
        if self._dG is not None:
            return _arr(self._dG(t))
        h = 1e-6 * np.maximum(1.0, t)
        return (self.G(t + h) - self.G(np.maximum(t - h, 0.0))) / (t + h - np.maximum(t - h, 0.0))

    def sqrt_integral(self, t):
        t = _arr(t)
        f = lambda s: math.sqrt(float(self._G(np.array(s))))
        out = [integrate.quad(f, 0.0, float(x), epsabs=0, epsrel=1e-12, limit=200)[0] for x in t.ravel()]
        return np.array(out).reshape(t.shape)


@dataclass
class ComparisonResult:
    C: float
    D: float
    case: Direction
    theta_lo: float
    theta_hi: float
    warp: Warp
    radial: RadialFunction
    min_residual: float


def csp_initial_slope(alpha, kappa):
    """C_{alpha,kappa}: kappa if alpha >= 0 or kappa = 0, else (alpha + sqrt(alpha^2+16kappa^2))/4."""
    if alpha >= 0 or kappa == 0:
        return float(kappa)
    return (alpha + math.sqrt(alpha * alpha + 16.0 * kappa * kappa)) / 4.0


def kappa_bar(kappa):
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa))


def closed_form_comparison(profile: CurvatureProfile, lam, direction=Direction.UPPER,
                           t_check=50.0, n_check=2001):
    """Pick (C, D) for g = 1 + C(exp(D int sqrt G) - 1) and certify the sign of g'' - G g."""
    direction = Direction(direction)
    th_lo, th_hi = profile.theta_bounds()
    sG0 = float(np.sqrt(profile.G(np.array([0.0]))[0]))
    cands = []
    if direction is Direction.UPPER:
        if np.isfinite(th_lo):
            d0 = D_plus(th_lo)
            cands.append(max(d0, lam / sG0) if sG0 > 0 else d0)
        if np.isfinite(th_hi):
            cands.append(D_minus(th_hi))
        for D in cands:
            # C >= 1 with C D sqrt(G0) >= lam
            if D * sG0 >= lam:
                C = 1.0
            elif D > 0:
                C = lam / (D * sG0)
            else:
                continue
            break
        else:
            raise NoAdmissibleD("no D satisfies the upper comparison conditions")
    else:
        lo = D_minus(th_lo) if np.isfinite(th_lo) else None
        hi = D_plus(th_hi) if np.isfinite(th_hi) else None
        if lo is None or hi is None or lo > hi:
            raise NoAdmissibleD("empty D range for the lower comparison")
        C = D = None
        for Dc in (hi, min(hi, max(lo, lam / sG0 if sG0 > 0 else hi)), lo):
            if Dc * sG0 <= lam:
                C, D = 1.0, Dc
                break
            if Dc > 0 and lam > 0:
                C, D = lam / (Dc * sG0), Dc
                break
        if D is None:
            raise NoAdmissibleD("no (C, D) satisfies the lower comparison conditions")

    warp = ComparisonWarp(profile, C, D)
    t = np.linspace(0.0, t_check, n_check)
    g = warp.g(t)
    res = warp.gpp(t) - profile.G(t) * g
    scale = 1.0 + np.abs(warp.gpp(t))
    rel = res / scale
    min_res = float(np.min(rel)) if direction is Direction.UPPER else float(np.min(-rel))
    radial = RadialFunction(t, g, warp.gp(t), warp.gpp(t))
    return ComparisonResult(C, D, direction, th_lo, th_hi, warp, radial, min_res)


class ComparisonWarp(Warp):
    """g = 1 + C (exp(D I(t)) - 1) with I = int_0^t sqrt(G)."""

    pole = False

    def __init__(self, profile: CurvatureProfile, C, D):
        self.profile, self.C, self.D = profile, float(C), float(D)

    def log_g(self, r):
        x = self.D * self.profile.sqrt_integral(r)
        if self.C == 1.0:
            return x
        # log(1 - C + C e^x), stable for large x
        return np.where(x > 30, x + np.log(self.C) + np.log1p((1 - self.C) / self.C * np.exp(-np.minimum(x, 700))),
                        np.log(1.0 - self.C + self.C * np.exp(np.minimum(x, 30))))

    def _ratio(self, r):
        # C e^{DI} / g
        x = self.D * self.profile.sqrt_integral(r)
        if self.C == 1.0:
            return np.ones_like(x)
        return np.exp(x + math.log(self.C) - self.log_g(r))

    def dlog_g(self, r):
        r = _arr(r)
        return self._ratio(r) * self.D * np.sqrt(self.profile.G(r))

    def ddg_over_g(self, r):
        r = _arr(r)
        G = self.profile.G(r)
        return self._ratio(r) * (self.D ** 2 * G + self.D * self.profile.dG(r) / (2.0 * np.sqrt(G)))

    def __repr__(self):
        return f"ComparisonWarp(C={self.C:g}, D={self.D:g})"


# ---------------------------------------------------------------------------
# the model manifold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialGeometry:
    v: np.ndarray
    V: np.ndarray
    log_V: np.ndarray
    laplacian: np.ndarray
    radial_curvature: np.ndarray


class ModelManifold:
    def __init__(self, m: int, warp: Warp):
        if int(m) != m or m < 2:
            raise ValueError("dimension must be an integer >= 2")
        self.m = int(m)
        self.warp = warp
        self._log_area = log_sphere_area(self.m)

    @property
    def pole(self):
        return self.warp.pole

    def log_v(self, r):
        return self._log_area + (self.m - 1) * self.warp.log_g(r)

    def v(self, r):
        return np.exp(self.log_v(r))

    def dlog_v(self, r):
        return (self.m - 1) * self.warp.dlog_g(r)

    def laplacian_r(self, r):
        r = _arr(r)
        if self.pole:
            r = np.maximum(r, R_MIN)
        return (self.m - 1) * self.warp.dlog_g(r)

    def radial_curvature(self, r):
        return -self.warp.ddg_over_g(r)

    def log_V(self, r):
        """log of int_0^r v, computed with panels that double away from r."""
        r = _arr(r)
        flat = r.ravel()
        out = np.empty(flat.size)
        for i, x in enumerate(flat):
            k = np.arange(0, 60)
            edges = x * (1.0 - 0.5 ** k)
            edges = np.concatenate((edges, [x]))
            if self.pole:
                edges = np.concatenate(([0.0], edges[1:]))
            sub = np.unique(np.concatenate([np.linspace(a, b, 5) for a, b in zip(edges[:-1], edges[1:])]))
            a, b = sub[:-1], sub[1:]
            ok = b > a
            a, b = a[ok], b[ok]
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            s = mid[:, None] + half[:, None] * _GL_X[None, :]
            s = np.maximum(s, R_MIN if self.pole else 0.0)
            lv = self.log_v(s.ravel()).reshape(s.shape)
            M = float(np.max(lv))
            tot = float(np.sum(half[:, None] * _GL_W[None, :] * np.exp(lv - M)))
            out[i] = M + math.log(tot)
        return out.reshape(r.shape)

    def __repr__(self):
        return f"ModelManifold(m={self.m}, {self.warp!r})"


def radial_geometry(M: ModelManifold, r):
    r = _arr(r)
    lV = M.log_V(r)
    with np.errstate(over="ignore"):
        return RadialGeometry(M.v(r), np.exp(lV), lV, M.laplacian_r(r), M.radial_curvature(r))


def euclidean(m):
    return ModelManifold(m, EuclideanWarp())


def hyperbolic(m, kappa=1.0):
    return ModelManifold(m, HyperbolicWarp(kappa))


def pinch_model(m, delta, shifted=True):
    """The pinching model; shifted=True measures r from the unit ball around the pole."""
    w = PinchWarp(delta)
    return ModelManifold(m, ShiftedWarp(w, 1.0) if shifted else w)


# ---------------------------------------------------------------------------
# volume growth
# ---------------------------------------------------------------------------

class GrowthRegime:
    pass


@dataclass(frozen=True)
class LogOfR(GrowthRegime):
    pass


@dataclass(frozen=True)
class PowerOfR(GrowthRegime):
    gamma: float


class GrowthEstimate(float):
    def __new__(cls, value, verdict=Verdict.HOLDS, history=()):
        obj = super().__new__(cls, value)
        obj.verdict = verdict
        obj.history = tuple(history)
        return obj


def volume_growth_exponent(M: ModelManifold, regime: GrowthRegime, r_max=1e3, levels=10, tol=1e-2):
    """Limit of log V(r) / log r or log V(r) / r^gamma by extrapolation on dyadic radii.

    The ratio is fitted on [1, 1/log r] (LogOfR) or [1, log r / r^g, 1/r^g]
    (PowerOfR). Fits on the outer and inner halves of the dyadic sequence
    must agree within tol, otherwise the verdict is Inconclusive.
    """
    r_max = min(r_max, M.warp.r_max)
    if isinstance(regime, LogOfR):
        r = r_max * 0.5 ** np.arange(levels)[::-1]
    else:
        r = r_max * np.linspace(0.1, 1.0, levels)
    lV = M.log_V(r)
    lr = np.log(r)
    if isinstance(regime, LogOfR):
        y = lV / lr
        A = np.column_stack((np.ones_like(r), 1.0 / lr))
    else:
        gm = regime.gamma
        y = lV / r ** gm
        A = np.column_stack((np.ones_like(r), lr / r ** gm, 1.0 / r ** gm))

    def fit(idx):
        c, *_ = np.linalg.lstsq(A[idx], y[idx], rcond=None)
        return float(c[0])

    full = fit(np.arange(levels))
    k = A.shape[1] + 1
    inner = fit(np.arange(0, max(k, levels // 2 + 1)))
    outer = fit(np.arange(levels - max(k, levels // 2 + 1), levels))
    stable = abs(outer - inner) <= tol * max(1.0, abs(full))
    return GrowthEstimate(full, Verdict.HOLDS if stable else Verdict.INCONCLUSIVE,
                          [(float(a), float(b)) for a, b in zip(r, y)])


# ---------------------------------------------------------------------------
# Green kernel, critical curve, fake distance
# ---------------------------------------------------------------------------

def _scaled_tail(M: ModelManifold, p, t, ref_log=None, max_panels=400, rel=1e-15):
    """int_t^inf exp((ref - log v(s)) / (p-1)) ds, ref defaulting to log v(t).

    Panels of doubling width starting at width t (or 1 if t is small), each
    split into 4 Gauss-Legendre sub-panels; a geometric tail bound closes
    the sum. Raises Parabolic when the panel ratio does not drop below one.
    """
    e = 1.0 / (p - 1.0)
    if ref_log is None:
        ref_log = float(M.log_v(np.array([t]))[0])
    r_cap = M.warp.r_max
    total = 0.0
    width = max(t, 1e-3) if t > 0 else 1.0
    rate = e * float(M.dlog_v(np.array([max(t, R_MIN)]))[0])
    if np.isfinite(rate) and rate > 0:
        width = min(width, 1.0 / rate)
    a = t
    prev = None
    ratios = []
    for _ in range(max_panels):
        b = min(a + width, r_cap)
        sub = np.linspace(a, b, 5)
        half = 0.5 * np.diff(sub)
        mid = 0.5 * (sub[1:] + sub[:-1])
        s = mid[:, None] + half[:, None] * _GL_X[None, :]
        val = float(np.sum(half[:, None] * _GL_W[None, :]
                           * np.exp(e * (ref_log - M.log_v(s.ravel()).reshape(s.shape)))))
        total += val
        if prev is not None and prev > 0:
            q = val / prev
            ratios.append(q)
            if q < 0.95 and val * q / (1.0 - q) <= rel * total:
                return total + val * q / (1.0 - q)
        if b >= r_cap:
            if prev is not None and prev > 0:
                q = val / prev
                if q < 0.95:
                    return total + val * q / (1.0 - q)
            raise Parabolic("tail integral does not converge before the end of the warp")
        prev = val
        a = b
        width *= 2.0
    q = ratios[-1] if ratios else 1.0
    raise Parabolic(f"v^(-1/(p-1)) not integrable at infinity (panel ratio {q:.4g})")


def _check_parabolic(M, p):
    """Tail exponent test: v^{-1/(p-1)} ~ s^e with e >= -1 means parabolic."""
    if M.warp.r_max < math.inf:
        return
    s = np.array([1e6, 1e7, 1e8])
    with np.errstate(all="ignore"):
        lv = M.log_v(s)
    e = -(lv[2] - lv[1]) / math.log(10.0) / (p - 1.0)
    if np.isfinite(e) and e >= -1.0 - 1e-9:
        raise Parabolic(f"tail exponent {e:.6g} >= -1")


def green_kernel_model(M: ModelManifold, p, r):
    """G_p(r) = int_r^inf v^{-1/(p-1)}."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    _check_parabolic(M, p)
    r = _arr(r)
    flat = r.ravel()
    out = np.empty(flat.size)
    for i, x in enumerate(flat):
        ref = float(M.log_v(np.array([x]))[0])
        out[i] = math.exp(-ref / (p - 1.0)) * _scaled_tail(M, p, float(x), ref)
    return out.reshape(r.shape)


def critical_curve(M: ModelManifold, p, t):
    """chi_g(t) = ((p-1)/p)^p [v^{1/(p-1)}(t) int_t^inf v^{-1/(p-1)}]^{-p}."""
    _check_parabolic(M, p)
    t = _arr(t)
    flat = t.ravel()
    out = np.empty(flat.size)
    for i, x in enumerate(flat):
        S = _scaled_tail(M, p, float(x))
        out[i] = ((p - 1.0) / p) ** p * S ** (-p)
    return out.reshape(t.shape)


def fake_distance_model(M: ModelManifold, p, green_value):
    """Invert the model Green kernel: the r with G_p(r) = green_value."""
    gv = float(green_value)
    if not gv > 0:
        raise OutOfRange("Green value must be positive")
    G = lambda x: float(green_kernel_model(M, p, np.array([x]))[0])
    lo, hi = 1.0, 1.0
    for _ in range(200):
        if G(lo) >= gv:
            break
        lo *= 0.5
    else:
        raise OutOfRange("Green value above the range of the kernel")
    for _ in range(400):
        if hi >= M.warp.r_max:
            raise OutOfRange("Green value below the computable range")
        if G(hi) <= gv:
            break
        hi *= 2.0
    else:
        raise OutOfRange("Green value below the range of the kernel")
    if G(lo) == gv:
        return lo
    return optimize.brentq(lambda x: math.log(G(x)) - math.log(gv), lo, hi, xtol=1e-15, rtol=1e-15,
                           maxiter=500)


def radial_p_laplacian_via_rho(M: ModelManifold, p, psi_p, psi_pp, r):
    """[v^{-1}(v |psi'|^{p-2} psi')'](rho) |grad rho|^p at rho = r, with |grad rho| = 1 on models."""
    r = _arr(r)
    a = np.abs(_arr(psi_p))
    w = a ** (p - 2.0) if p != 2 else np.ones_like(a)
    return (p - 1.0) * w * _arr(psi_pp) + M.dlog_v(r) * w * _arr(psi_p)


def fake_distance_gradient(M: ModelManifold, p, r):
    """((p-1)/p) chi_g^{-1/p} |grad log G_p| evaluated on the model (equals 1)."""
    r = _arr(r)
    chi = critical_curve(M, p, r)
    G = green_kernel_model(M, p, r)
    dlog = np.exp(-M.log_v(r) / (p - 1.0)) / G
    return (p - 1.0) / p * chi ** (-1.0 / p) * dlog


def model_curve(M: ModelManifold, r):
    """Columns r, g, gprime, v, laplacian for a curve dump."""
    r = _arr(r)
    rr = np.maximum(r, R_MIN) if M.pole else r
    with np.errstate(over="ignore"):
        return {"r": r, "g": M.warp.g(rr), "gprime": M.warp.gp(rr), "v": M.v(rr),
                "laplacian": M.laplacian_r(rr)}
