"""Singular two-point problems [P phi(w')]' = P a f(w) l(|w'|) on [0, T].

Dirichlet data w(0) = 0, w(T) = eta and mixed data w'(0) = 0, w(T) = eta are
solved by damped Picard iteration of the integral operators

    H(w, s)(t) = s eta - int_t^T phi^{-1}((delta + s int_0^r P a f(w) l(w')) / P) dr

with s continued from 0 to 1. For Dirichlet data delta is chosen so that
H(w, s)(0) = 0; for mixed data delta = 0. Derivatives are always taken from
the operator formula, never by differencing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from . import kernels as kn
from .core import NoConvergence, RadialFunction, RestrictionViolated
from .nonlinearity import ConstantL, NonlinearTriple, PhiQuotient, PowerF, PowerL, PowerLaw

DAMPING = 0.5
SIGMA_STEPS = 10
ZERO_SLOPE = 1e-3
POSITIVE_SLOPE = 1e-2
L_FLOOR = 1e-9  # relative gradient floor used when l is singular at 0
BLOWUP_LEVELS = (1e12, 1e24)
MIN_SIGMA_STEP = 1.0 / 80


class BoundaryKind(enum.Enum):
    DIRICHLET = "dirichlet"
    MIXED = "mixed"


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class BvpProblem:
    """Data of a two-point problem.

    volume is the factor P (for instance v_g of a model), weight the
    function a; both are vectorised callables. xi is the gradient ceiling;
    when omitted the smallest admissible value on a geometric ladder is used.
    mesh(T, N) optionally replaces the default node placement.
    """

    triple: NonlinearTriple
    T: float
    eta: float
    kind: BoundaryKind = BoundaryKind.DIRICHLET
    weight: Callable = _one
    volume: Callable = _one
    xi: Optional[float] = None
    N: int = 512
    mesh: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        if not (self.T > 0 and self.eta > 0):
            raise ValueError("T and eta must be positive")
        if self.N < 8:
            raise ValueError("need at least 8 grid nodes")


@dataclass(frozen=True)
class OriginSlope:
    label: str  # "Zero", "Positive" or "Undetermined"
    value: float
    trend: tuple = ()

    def __str__(self):
        return self.label


@dataclass
class BvpSolution:
    radial: RadialFunction
    slope: OriginSlope
    t0: float
    delta: float
    residual: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.radial.r


def grid(T, N):
    """Nodes clustered quadratically toward t = 0."""
    return T * np.linspace(0.0, 1.0, N) ** 2


class _Setup:
    """Grid quantities shared by every operator evaluation."""

    def __init__(self, problem: BvpProblem, xi):
        pb = problem
        self.pb = pb
        self.phi, self.f, self.l = pb.triple.phi, pb.triple.f, pb.triple.l
        self.t = grid(pb.T, pb.N) if pb.mesh is None else np.asarray(pb.mesh(pb.T, pb.N), dtype=float)
        self.P = np.asarray(pb.volume(self.t), dtype=float) * np.ones_like(self.t)
        self.a = np.asarray(pb.weight(self.t), dtype=float) * np.ones_like(self.t)
        self.W, self.J = kn.cumint_weights(self.t)
        self.qtot = kn.total_weights(self.W, self.J, self.t.size)
        self.xi = xi
        self.floor = L_FLOOR * pb.eta / pb.T if self.l.singular_at_zero else 0.0
        self.P_safe = np.where(self.P > 0, self.P, 1.0)

    def cum(self, y):
        return kn.cumint_apply(self.W, self.J, y)

    def source(self, w, wp):
        """P a f(w) l(|w'|) with f and l clamped to [0, eta] x [floor, xi]."""
        fw = np.asarray(self.f(np.clip(w, 0.0, self.pb.eta)), dtype=float)
        g = np.clip(np.abs(wp), self.floor, self.xi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lw = np.asarray(self.l(g), dtype=float)
            out = self.P * self.a * fw * lw
        return np.where(fw == 0.0, 0.0, out)

    def phi_inv(self, y):
        return self.phi.inverse_saturating(y)

    def slope_from(self, delta, S):
        y = (delta + S) / self.P_safe
        wp = self.phi_inv(y)
        return np.where(self.P > 0, wp, 0.0)


def _theta(setup: _Setup):
    """sup_t (1/P(t)) int_0^t P a."""
    c = setup.cum(setup.P * setup.a)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(setup.P > 0, c / setup.P_safe, 0.0)
    return float(np.max(q))


def _sup_on(fn, lo, hi, floor=0.0):
    s = np.concatenate((np.linspace(lo, hi, 2001), hi * np.logspace(-12, 0, 241)))
    s = s[(s >= lo) & (s <= hi)]
    s = np.maximum(s, floor)
    with np.errstate(all="ignore"):
        v = np.asarray(fn(s), dtype=float)
    return float(np.max(np.where(np.isfinite(v), v, math.inf)))


def restriction_margin(problem: BvpProblem, xi, setup: Optional[_Setup] = None):
    """phi(xi) minus the left side of the a priori restriction (positive when it holds)."""
    st = setup or _Setup(problem, xi)
    P0, P1 = float(np.min(st.P)), float(np.max(st.P))
    phi = st.phi
    Th = _theta(st)
    f_eta = _sup_on(st.f, 0.0, problem.eta)
    l_xi = _sup_on(st.l, 0.0, xi, st.floor)
    phi_xi = float(phi(np.array([xi]))[0])
    if problem.kind is BoundaryKind.DIRICHLET:
        if P0 <= 0:
            return -math.inf, {}
        lhs = (P1 / P0) * float(phi(np.array([problem.eta / problem.T]))[0]) + 2.0 * Th * f_eta * l_xi
        mu1 = (P1 / P0) * float(phi(np.array([problem.eta / problem.T]))[0]) + Th * f_eta * l_xi
    else:
        lhs = Th * f_eta * l_xi
        mu1 = lhs
    return phi_xi - lhs, {"P0": P0, "P1": P1, "theta": Th, "f_eta": f_eta, "l_xi": l_xi, "mu1": mu1}


def choose_xi(problem: BvpProblem):
    """The given xi if admissible, else the first admissible value of a geometric ladder."""
    if problem.xi is not None:
        m, info = restriction_margin(problem, problem.xi)
        if not m > 0:
            raise RestrictionViolated(
                f"restriction fails at xi={problem.xi:g} (margin {m:.6g}); shrink eta or T")
        return problem.xi, info
    base = problem.eta / problem.T
    for k in range(0, 61):
        xi = base * 2.0 ** k
        m, info = restriction_margin(problem, xi)
        if m > 0:
            return xi, info
    raise RestrictionViolated("no gradient ceiling satisfies the restriction; shrink eta or T")


def _find_delta(st: _Setup, S, target, bracket):
    lo, hi = bracket
    P = st.P_safe

    def total(d):
        return float(st.qtot @ st.slope_from(d, S))

    for _ in range(80):
        if total(lo) <= target:
            break
        lo = 2.0 * lo - 1.0 if lo >= 0 else 2.0 * lo
    for _ in range(80):
        if total(hi) >= target:
            break
        hi = 2.0 * hi + 1.0 if hi >= 0 else 0.5 * hi
    if st.phi.code is not None and np.all(st.P > 0):
        return kn.delta_bisect(st.phi.code, st.phi.p, st.phi.q, P, S, st.qtot, target, lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if total(mid) > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _apply(st: _Setup, w, wp, sigma, bracket):
    """One evaluation of the operator; returns (w_new, wp_new, delta)."""
    pb = st.pb
    S = sigma * st.cum(st.source(w, wp))
    if pb.kind is BoundaryKind.DIRICHLET:
        if sigma == 0.0:
            delta = 0.0
        else:
            delta = _find_delta(st, S, sigma * pb.eta, bracket)
    else:
        delta = 0.0
    wp_new = st.slope_from(delta, S)
    I = st.cum(wp_new)
    w_new = sigma * pb.eta - (I[-1] - I)
    return w_new, wp_new, delta


def _iterate(st, w, wp, sigma, bracket, tol, maxit):
    hist = []
    for k in range(maxit):
        w1, wp1, delta = _apply(st, w, wp, sigma, bracket)
        change = float(np.max(np.abs(w1 - w)))
        hist.append(change)
        if not np.isfinite(change):
            return None, hist
        if change <= tol * (1.0 + float(np.max(np.abs(w1)))):
            return (w1, wp1, delta), hist
        if k >= 40 and change > 0.9 * hist[-20]:
            return None, hist  # stalled
        w = (1.0 - DAMPING) * w + DAMPING * w1
        wp = (1.0 - DAMPING) * wp + DAMPING * wp1
    return None, hist


def _plateau(t, w, tol):
    dev = np.abs(w - w[0])
    bad = np.nonzero(dev > tol)[0]
    i = (bad[0] - 1) if bad.size else t.size - 1
    return float(t[max(i, 0)])


def residual(st: _Setup, w, wp, delta):
    """P phi(w') - delta - int_0^t P a f(w) l(w'), relative to the size of P phi(w')."""
    flux = st.P * np.asarray(st.phi(wp), dtype=float)
    r = flux - delta - st.cum(st.source(w, wp))
    return r / (1.0 + float(np.max(np.abs(flux))))


def _scalar(fn):
    """A float -> float version of a vectorised profile, with fast paths for built-ins."""
    if fn is _one:
        return lambda x: 1.0
    if isinstance(fn, PowerF):
        om, thr = fn.omega, fn.threshold
        return lambda x: (x - thr) ** om if x > thr else 0.0
    if isinstance(fn, ConstantL):
        c = fn.c
        return lambda x: c
    if isinstance(fn, PowerL):
        e = fn.exponent
        return lambda x: abs(x) ** e
    if isinstance(fn, PhiQuotient) and isinstance(fn.phi, PowerLaw):
        e = fn.phi.p - 1.0 - fn.chi
        v0 = fn._v0
        return lambda x: abs(x) ** e if x != 0.0 else v0
    return lambda x: float(np.asarray(fn(np.array([x])), dtype=float).ravel()[0])


def _scalar_phi_inv(phi):
    if phi.code is not None:
        code, p, q = int(phi.code), float(phi.p), float(phi.q)
        return lambda y: float(kn._phi_inv_scalar(code, p, q, y))
    return lambda y: float(phi.inverse_saturating(np.array([y]))[0])


def _shoot(st: _Setup):
    """Shooting reformulation solved for one scalar c by bracketing.

    c >= 0 is the initial flux delta (Dirichlet) or the initial value w(0)
    (mixed). c < 0 places a dead core on [0, -c]; the profile leaves the
    core along the maximal solution, started by a flux of relative size
    1e-14. w(T) is continuous and non-decreasing in c, so brentq applies.
    """
    pb = st.pb
    P, A = _scalar(pb.volume), _scalar(pb.weight)
    phi = st.phi
    f, l, phi_inv = _scalar(st.f), _scalar(st.l), _scalar_phi_inv(phi)
    T, eta = pb.T, pb.eta
    dirichlet = pb.kind is BoundaryKind.DIRICHLET
    flux_scale = max(float(np.max(st.P)), 1e-300) * float(phi(np.array([eta / T]))[0])
    push = 1e-14 * flux_scale

    def rhs(t, y):
        p = max(P(t), 1e-300)
        wp = phi_inv(y[1] / p)
        fw = f(min(max(y[0], 0.0), eta))
        if fw == 0.0:
            return [wp, 0.0]
        return [wp, p * A(t) * fw * l(min(max(abs(wp), st.floor), st.xi))]

    def march(c):
        if c <= 0:
            t0, y0 = -c, [0.0, push]
        elif dirichlet:
            t0, y0 = 0.0, [0.0, c]
        else:
            t0, y0 = 0.0, [c, 0.0]
        if t0 == 0.0 and P(0.0) <= 0:
            t0 = 1e-12 * T
        if t0 >= T:
            return None, t0
        sol = integrate.solve_ivp(rhs, (t0, T), y0, method="LSODA", rtol=1e-11, atol=[1e-15 * eta, 1e-15 * flux_scale],
                                  dense_output=True)
        if sol.status < 0:
            raise RuntimeError(sol.message)
        return sol, t0

    def defect(c):
        sol, _ = march(c)
        return (0.0 if sol is None else float(sol.y[0, -1])) - eta

    lo = -T * (1.0 - 1e-9)
    d0 = defect(0.0)
    if d0 >= 0.0:
        hi = 0.0
    else:
        lo, hi = 0.0, (flux_scale if dirichlet else eta)
        for _ in range(200):
            if defect(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise RuntimeError("could not bracket the shooting parameter")
    c = optimize.brentq(defect, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300)
    sol, t0 = march(c)
    w = np.zeros_like(st.t)
    z = np.zeros_like(st.t)
    on = st.t >= t0
    y = sol.sol(st.t[on])
    w[on], z[on] = y[0], y[1]
    if not dirichlet and c >= 0:
        w[~on] = c
    wp = st.slope_from(0.0, z)
    wp[~on] = 0.0
    delta = c if (dirichlet and c >= 0) else 0.0
    return w, wp, float(delta), float(c)


def _solve(problem: BvpProblem, tol=1e-10, maxit=2000):
    xi, info = choose_xi(problem)
    st = _Setup(problem, xi)
    mu1 = info["mu1"]
    bracket = (-info["P1"] * mu1, info["P0"] * mu1)
    w = np.zeros_like(st.t)
    wp = np.zeros_like(st.t)
    path = [0.0]
    iters = []
    sig, step = 0.0, 1.0 / SIGMA_STEPS
    result = None
    if info["f_eta"] == 0.0:
        # no source on [0, eta]: the operator does not depend on w, one application is exact
        result = _apply(st, w, wp, 1.0, bracket)
        sig = 1.0
        path.append(sig)
        iters.append(1)
    while sig < 1.0:
        target = min(1.0, round(sig + step, 12))
        res, hist = _iterate(st, w, wp, target, bracket, tol if target == 1.0 else 1e3 * tol, maxit)
        iters.append(len(hist))
        if res is None:
            step *= 0.5
            if step < MIN_SIGMA_STEP:
                break
            continue
        w, wp, delta = res
        sig = target
        path.append(sig)
        result = res
    eps = 1e-12
    ok = (sig >= 1.0 and result is not None
          and float(np.min(result[0])) >= -eps * problem.eta
          and float(np.min(result[1])) >= -eps * problem.eta / problem.T)
    shoot_c = None
    if ok:
        w, wp, delta = result
    else:
        try:
            w, wp, delta, shoot_c = _shoot(st)
        except (RuntimeError, ValueError, OverflowError, ArithmeticError) as exc:
            raise NoConvergence("Picard iteration stalled and shooting failed",
                                {"sigma_path": path, "iterations": iters, "error": str(exc)})
        if not (np.all(np.isfinite(w)) and abs(w[-1] - problem.eta) <= 1e-8 * (1 + problem.eta)):
            raise NoConvergence("Picard iteration stalled and shooting missed the boundary value",
                                {"sigma_path": path, "iterations": iters})
    res_arr = residual(st, w, wp, delta)
    t0 = _plateau(st.t, w, 1e-12 * max(1.0, problem.eta))
    slope = float(wp[0])
    diag = {"sigma_path": path, "iterations": iters, "xi": xi, "bracket": bracket,
            "restriction": info, "shooting_fallback": shoot_c is not None, "shooting_parameter": shoot_c,
            "max_residual": float(np.max(np.abs(res_arr)))}
    rad = RadialFunction(st.t, w, wp)
    v = slope * problem.T / problem.eta
    label = OriginSlope("Zero" if abs(v) < ZERO_SLOPE else ("Positive" if v >= POSITIVE_SLOPE else "Undetermined"),
                        slope)
    return BvpSolution(rad, label, t0, float(delta), res_arr, diag)


def solve_dirichlet(problem: BvpProblem, **kw) -> BvpSolution:
    if problem.kind is not BoundaryKind.DIRICHLET:
        problem = replace(problem, kind=BoundaryKind.DIRICHLET)
    return _solve(problem, **kw)


def solve_mixed(problem: BvpProblem, **kw) -> BvpSolution:
    if problem.kind is not BoundaryKind.MIXED:
        problem = replace(problem, kind=BoundaryKind.MIXED)
    return _solve(problem, **kw)


def classify_origin_slope(problem: BvpProblem, levels=3, zero=ZERO_SLOPE, positive=POSITIVE_SLOPE):
    """Solve at N, 2N, 4N, ... and classify w'(0) by its trend under refinement.

    Values are normalised by eta / T. Zero: the finest value is below `zero`
    and the sequence does not grow. Positive: every value is at least
    `positive`. Anything else is Undetermined.
    """
    vals = []
    for k in range(levels):
        sol = solve_dirichlet(replace(problem, N=problem.N * 2 ** k))
        vals.append(float(sol.radial.wp[0]) * problem.T / problem.eta)
    v = np.abs(np.array(vals))
    trend = tuple(vals)
    if v[-1] < zero and all(v[i + 1] <= v[i] * 1.01 + 1e-15 for i in range(len(v) - 1)):
        return OriginSlope("Zero", vals[-1], trend)
    if np.min(vals) >= positive:
        return OriginSlope("Positive", vals[-1], trend)
    return OriginSlope("Undetermined", vals[-1], trend)


# ---------------------------------------------------------------------------
# maximal extension
# ---------------------------------------------------------------------------

@dataclass
class Extension:
    R_max: float
    finite: bool
    radial: RadialFunction
    levels: tuple = ()


def extend_maximal(solution: BvpSolution, problem: BvpProblem, r_max=50.0, rtol=1e-10):
    """March (w, z = P phi(w')) forward from T until blow-up or r_max.

    Blow-up is declared when w crosses both 1e12 and 1e24 at radii that
    agree within 1%, or when the step size collapses. Otherwise the
    solution is reported as global (R_max = inf) on [0, r_max].
    """
    phi = problem.triple.phi
    f, l, phi_inv = _scalar(problem.triple.f), _scalar(problem.triple.l), _scalar_phi_inv(phi)
    P, A = _scalar(problem.volume), _scalar(problem.weight)
    sup = phi.sup

    def rhs(t, y):
        p = P(t)
        q = y[1] / p
        if abs(q) >= sup:
            return [1e300, 0.0]
        wp = phi_inv(q)
        fw = f(max(y[0], 0.0))
        src = 0.0 if fw == 0.0 else p * A(t) * fw * l(abs(wp))
        return [wp, src]

    events = []
    for lev in BLOWUP_LEVELS:
        ev = (lambda L: (lambda t, y: y[0] - L))(lev)
        ev.direction = 1
        events.append(ev)
    events[-1].terminal = True

    def grad_sat(t, y):
        return sup - abs(y[1] / P(t)) if np.isfinite(sup) else 1.0

    grad_sat.terminal = True
    events.append(grad_sat)
    T = problem.T
    wT = float(solution.radial.w[-1])
    zT = P(T) * float(phi(np.array([solution.radial.wp[-1]]))[0])
    with np.errstate(over="ignore", invalid="ignore"):
        sol = integrate.solve_ivp(rhs, (T, float(r_max)), [wT, zT], method="DOP853", rtol=rtol,
                                  atol=1e-12, events=events, dense_output=True)
    t_hit = [float(e[0]) if len(e) else math.nan for e in sol.t_events]
    t_end = float(sol.t[-1])
    finite = False
    R = math.inf
    if len(sol.t_events[-1]):
        finite, R = True, float(sol.t_events[-1][0])
    elif np.isfinite(t_hit[0]) and np.isfinite(t_hit[1]):
        if abs(t_hit[1] - t_hit[0]) <= 0.01 * t_hit[1]:
            finite, R = True, t_hit[1]
    elif sol.status == -1 or (t_end < r_max and sol.status != 1):
        finite, R = True, t_end
    if not finite and t_end < r_max:
        # second threshold reached but radii disagree: the growth is not a blow-up
        # within the march; report the reached radius as a lower bound
        R = math.inf
    r_ext = sol.t
    y = sol.y
    wp_ext = np.array([phi_inv(y[1, i] / P(r_ext[i])) for i in range(r_ext.size)])
    r_all = np.concatenate((solution.radial.r, r_ext[1:]))
    w_all = np.concatenate((solution.radial.w, y[0, 1:]))
    wp_all = np.concatenate((solution.radial.wp, wp_ext[1:]))
    return Extension(R, finite, RadialFunction(r_all, w_all, wp_all), tuple(t_hit[:2]))
