"""Structural functions phi, f, l, beta and the derived kernels K, F.

phi is always extended to the negative axis as an odd function. K is

    K(t) = int_0^t s phi'(s) / l(s) ds          (standard kind)
    K(t) = int_0^t phi(s) / l(s) ds             (mean curvature kind)

and F(t) = int_0^t f(s) ds, which coincides with the integral from the
vanishing threshold of f for the thresholded power family.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from . import kernels as kn
from .core import (
    NotIntegrableAtZero,
    OutOfRange,
    UnknownCondition,
    Verdict,
)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _as_array(t):
    return np.asarray(t, dtype=float)


def _local_slope(fn, s1, s2):
    """d log fn / d log s between two points (both values positive)."""
    a, b = float(fn(np.array([s1]))[0]), float(fn(np.array([s2]))[0])
    if not (a > 0 and b > 0 and np.isfinite(a) and np.isfinite(b)):
        return float("nan")
    return math.log(b / a) / math.log(s2 / s1)


# ---------------------------------------------------------------------------
# phi
# ---------------------------------------------------------------------------

class PhiFunction:
    """Base class. Subclasses give phi on t >= 0; negative t is handled by oddness."""

    code: Optional[int] = None
    p: float = 2.0
    q: float = 2.0
    name = "phi"

    def __call__(self, t):
        t = _as_array(t)
        if self.code is not None:
            return kn.phi_family(self.code, self.p, self.q, t)
        a = np.abs(t)
        return np.sign(t) * np.where(a == 0, 0.0, self._eval(np.where(a == 0, 1.0, a)))

    def derivative(self, t):
        """phi'(t), even in t."""
        a = np.abs(_as_array(t))
        if self.code is not None:
            return kn.dphi_family(self.code, self.p, self.q, a)
        return self._deriv(a)

    def inverse(self, y):
        """phi^{-1}(y); raises OutOfRange when |y| reaches sup phi."""
        y = _as_array(y)
        if np.any(np.abs(y) >= self.sup):
            raise OutOfRange(f"phi^-1 undefined for |y| >= {self.sup}")
        return self.inverse_saturating(y)

    def inverse_saturating(self, y):
        """phi^{-1} returning kernels.SATURATED where |y| >= sup phi (no error)."""
        y = _as_array(y)
        if self.code is not None:
            return kn.phi_inv_family(self.code, self.p, self.q, y)
        return self._generic_inverse(y)

    @property
    def sup(self):
        return math.inf

    # exponents a with phi(t) ~ t^a near 0 and near infinity (hints, may be None)
    exponent_zero: Optional[float] = None
    exponent_inf: Optional[float] = None

    def _eval(self, t):  # pragma: no cover - overridden
        raise NotImplementedError

    def _deriv(self, t):
        h = 1e-6 * np.maximum(1.0, t)
        lo = np.maximum(t - h, 0.5 * t)
        return (self._eval(t + h) - self._eval(lo)) / (t + h - lo)

    def _generic_inverse(self, y):
        s = np.sign(y)
        a = np.abs(y)
        out = np.zeros_like(a)
        nz = a > 0
        if not nz.any():
            return out
        sat = a >= self.sup
        work = nz & ~sat
        lo = np.full(a.shape, -700.0)
        hi = np.full(a.shape, 700.0)
        with np.errstate(all="ignore"):
            for _ in range(120):
                mid = 0.5 * (lo + hi)
                v = self._eval(np.exp(mid))
                up = v > a
                hi = np.where(work & up, mid, hi)
                lo = np.where(work & ~up, mid, lo)
            t = np.exp(0.5 * (lo + hi))
            d = self.derivative(t)
            tn = t - (self._eval(t) - a) / np.where(d > 0, d, 1.0)
            good = (d > 0) & np.isfinite(tn) & (tn > 0) & (np.abs(tn - t) < 1e-6 * t)
            t = np.where(good, tn, t)
        out = np.where(work, t, out)
        out = np.where(sat, kn.SATURATED, out)
        return s * out

    def to_config(self):
        raise NotImplementedError


class PowerLaw(PhiFunction):
    code = kn.PHI_POWER
    name = "power"

    def __init__(self, p):
        if not p > 1:
            raise ValueError("PowerLaw needs p > 1")
        self.p = float(p)
        self.q = float(p)
        self.exponent_zero = self.exponent_inf = self.p - 1.0

    def to_config(self):
        return {"family": "power", "p": self.p}

    def __repr__(self):
        return f"PowerLaw(p={self.p:g})"


class MeanCurvature(PhiFunction):
    code = kn.PHI_MC
    name = "mean_curvature"
    exponent_zero = 1.0
    exponent_inf = 0.0

    @property
    def sup(self):
        return 1.0

    def to_config(self):
        return {"family": "mean_curvature"}

    def __repr__(self):
        return "MeanCurvature()"


class ExpHarmonic(PhiFunction):
    code = kn.PHI_EXP
    name = "exp_harmonic"
    exponent_zero = 1.0
    exponent_inf = math.inf

    def to_config(self):
        return {"family": "exp_harmonic"}

    def __repr__(self):
        return "ExpHarmonic()"


class PowerSum(PhiFunction):
    code = kn.PHI_SUM
    name = "power_sum"

    def __init__(self, p, q):
        if not 1 < q < p:
            raise ValueError("PowerSum needs 1 < q < p")
        self.p, self.q = float(p), float(q)
        self.exponent_zero = self.q - 1.0
        self.exponent_inf = self.p - 1.0

    def to_config(self):
        return {"family": "power_sum", "p": self.p, "q": self.q}

    def __repr__(self):
        return f"PowerSum(p={self.p:g}, q={self.q:g})"


class RationalPower(PhiFunction):
    """t^(p-1) / (1+t)^(q-1) with 1 <= q <= p (monotone range)."""

    code = kn.PHI_RATIONAL
    name = "rational_power"

    def __init__(self, p, q):
        if not (p > 1 and 1 <= q <= p):
            raise ValueError("RationalPower needs p > 1 and 1 <= q <= p")
        self.p, self.q = float(p), float(q)
        self.exponent_zero = self.p - 1.0
        self.exponent_inf = self.p - self.q

    @property
    def sup(self):
        return 1.0 if self.q == self.p else math.inf

    def to_config(self):
        return {"family": "rational_power", "p": self.p, "q": self.q}

    def __repr__(self):
        return f"RationalPower(p={self.p:g}, q={self.q:g})"


class CustomPhi(PhiFunction):
    """User supplied phi on t > 0 (vectorised callable)."""

    name = "custom"

    def __init__(self, fn, derivative=None, exponent_zero=None, exponent_inf=None, sup=math.inf):
        self._fn = fn
        self._dfn = derivative
        self.exponent_zero = exponent_zero
        self.exponent_inf = exponent_inf
        self._sup = float(sup)
        t = np.logspace(-6, 6, 241)
        v = _as_array(fn(t))
        if not (np.all(v > 0) and np.all(np.diff(v) > 0)):
            raise ValueError("custom phi must be positive and strictly increasing on t > 0")

    @property
    def sup(self):
        return self._sup

    def _eval(self, t):
        return _as_array(self._fn(t))

    def _deriv(self, t):
        if self._dfn is not None:
            return _as_array(self._dfn(t))
        return super()._deriv(t)

    def __repr__(self):
        return "CustomPhi()"


# ---------------------------------------------------------------------------
# l
# ---------------------------------------------------------------------------

class GradientTerm:
    name = "l"
    singular_at_zero = False

    def __call__(self, t):
        raise NotImplementedError

    def at_zero(self):
        """l(0), possibly +inf for singular terms."""
        return float(self(np.array([0.0]))[0])


class ConstantL(GradientTerm):
    name = "constant"

    def __init__(self, c=1.0):
        if not c > 0:
            raise ValueError("constant l must be positive")
        self.c = float(c)

    def __call__(self, t):
        return np.full(np.shape(t), self.c)

    def to_config(self):
        return {"family": "constant", "c": self.c}

    def __repr__(self):
        return f"ConstantL({self.c:g})"


class PowerL(GradientTerm):
    name = "power"

    def __init__(self, exponent):
        if exponent < 0:
            raise ValueError("power l needs exponent >= 0")
        self.exponent = float(exponent)

    def __call__(self, t):
        a = np.abs(_as_array(t))
        if self.exponent == 0:
            return np.ones_like(a)
        return a ** self.exponent

    def to_config(self):
        return {"family": "power", "exponent": self.exponent}

    def __repr__(self):
        return f"PowerL({self.exponent:g})"


class PhiQuotient(GradientTerm):
    """l(t) = phi(t) / t^chi."""

    name = "phi_quotient"

    def __init__(self, phi: PhiFunction, chi):
        if chi < 0:
            raise ValueError("phi quotient needs chi >= 0")
        self.phi = phi
        self.chi = float(chi)
        a0 = phi.exponent_zero
        if a0 is None:
            a0 = _local_slope(lambda s: phi(s), 1e-12, 1e-10)
        self._a0 = a0
        self.singular_at_zero = bool(a0 < self.chi - 1e-12)
        if abs(a0 - self.chi) <= 1e-12:
            self._v0 = float(phi(np.array([1e-30]))[0]) / 1e-30 ** self.chi
        elif a0 > self.chi:
            self._v0 = 0.0
        else:
            self._v0 = math.inf

    def __call__(self, t):
        a = np.abs(_as_array(t))
        safe = np.where(a == 0, 1.0, a)
        with np.errstate(all="ignore"):
            v = self.phi(safe) / safe ** self.chi
        return np.where(a == 0, self._v0, v)

    def to_config(self):
        return {"family": "phi_quotient", "chi": self.chi}

    def __repr__(self):
        return f"PhiQuotient({self.phi!r}, chi={self.chi:g})"


class CustomL(GradientTerm):
    name = "custom"

    def __init__(self, fn, singular_at_zero=False):
        self._fn = fn
        self.singular_at_zero = bool(singular_at_zero)

    def __call__(self, t):
        return _as_array(self._fn(np.abs(_as_array(t))))

    def __repr__(self):
        return "CustomL()"


# ---------------------------------------------------------------------------
# f
# ---------------------------------------------------------------------------

class Nonlinearity:
    name = "f"
    threshold = 0.0  # f vanishes identically on [0, threshold]
    sign_change: Optional[float] = None

    def __call__(self, t):
        raise NotImplementedError

    def F(self, t):
        raise NotImplementedError


class PowerF(Nonlinearity):
    """f(t) = (t - eta0)_+^omega."""

    name = "power"

    def __init__(self, omega, threshold=0.0):
        if omega < 0 or threshold < 0:
            raise ValueError("power f needs omega >= 0 and threshold >= 0")
        self.omega = float(omega)
        self.threshold = float(threshold)

    def __call__(self, t):
        x = _as_array(t) - self.threshold
        pos = x > 0
        return np.where(pos, np.where(pos, x, 1.0) ** self.omega, 0.0)

    def F(self, t):
        x = np.maximum(_as_array(t) - self.threshold, 0.0)
        return x ** (self.omega + 1.0) / (self.omega + 1.0)

    def to_config(self):
        return {"family": "power", "omega": self.omega, "threshold": self.threshold}

    def __repr__(self):
        return f"PowerF(omega={self.omega:g}, threshold={self.threshold:g})"


class Exp2m1(Nonlinearity):
    """f(t) = e^{2t} - 1."""

    name = "exp2m1"

    def __call__(self, t):
        return np.expm1(2.0 * _as_array(t))

    def F(self, t):
        t = _as_array(t)
        return 0.5 * np.expm1(2.0 * t) - t

    def to_config(self):
        return {"family": "exp2m1"}

    def __repr__(self):
        return "Exp2m1()"


class CustomF(Nonlinearity):
    name = "custom"

    def __init__(self, fn, antiderivative=None, threshold=0.0, sign_change=None):
        self._fn = fn
        self._F = antiderivative
        self.threshold = float(threshold)
        self.sign_change = sign_change

    def __call__(self, t):
        return _as_array(self._fn(_as_array(t)))

    def F(self, t):
        if self._F is not None:
            return _as_array(self._F(_as_array(t)))
        t = _as_array(t)
        out = np.empty(t.size)
        g = lambda s: float(self._fn(np.array([s]))[0])
        for i, ti in enumerate(t.ravel()):
            out[i] = integrate.quad(g, 0.0, ti, epsabs=0.0, epsrel=1e-11, limit=200)[0]
        return out.reshape(t.shape)

    def __repr__(self):
        return "CustomF()"


def F_eval(f: Nonlinearity, t):
    """F(t) = int_0^t f."""
    return f.F(t)


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

class WeightProfile:
    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        t = _as_array(t)
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (self(t + h) - self(t - h)) / (2 * h)


class PowerDecay(WeightProfile):
    """C (1+t)^{-mu}."""

    def __init__(self, mu, scale=1.0):
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.mu = float(mu)
        self.scale = float(scale)

    def __call__(self, t):
        return self.scale * (1.0 + _as_array(t)) ** (-self.mu)

    def derivative(self, t):
        return -self.mu * self.scale * (1.0 + _as_array(t)) ** (-self.mu - 1.0)

    def to_config(self):
        return {"family": "power_decay", "mu": self.mu, "scale": self.scale}

    def __repr__(self):
        return f"PowerDecay(mu={self.mu:g}, scale={self.scale:g})"


class CustomWeight(WeightProfile):
    def __init__(self, fn, derivative=None):
        self._fn = fn
        self._d = derivative

    def __call__(self, t):
        return _as_array(self._fn(_as_array(t)))

    def derivative(self, t):
        if self._d is not None:
            return _as_array(self._d(_as_array(t)))
        return super().derivative(t)


@dataclass(frozen=True)
class NonlinearTriple:
    phi: PhiFunction
    f: Nonlinearity
    l: GradientTerm
    beta: Optional[WeightProfile] = None


# ---------------------------------------------------------------------------
# K
# ---------------------------------------------------------------------------

class KernelKind(enum.Enum):
    STANDARD = "standard"
    MEAN_CURVATURE = "mean_curvature"


def kernel_integrand(phi, l, kind):
    kind = KernelKind(kind)
    if kind is KernelKind.STANDARD:
        def h(s):
            s = _as_array(s)
            with np.errstate(all="ignore"):
                return s * phi.derivative(s) / l(s)
    else:
        def h(s):
            s = _as_array(s)
            with np.errstate(all="ignore"):
                return phi(s) / l(s)
    return h


def _zero_exponent(h, t=1.0):
    """Local exponent of the integrand near 0 (slope between two tiny points)."""
    e = _local_slope(h, 1e-40 * t, 1e-36 * t)
    if not np.isfinite(e):
        e = _local_slope(h, 1e-14 * t, 1e-12 * t)
    return e


def _integrate_head(h, t, e0):
    """int_0^t h via s = t u^k, k chosen from the local exponent e0 at 0."""
    if not e0 > -1.0 + 1e-3:
        raise NotIntegrableAtZero(f"integrand exponent {e0:.4g} <= -1 near 0")
    k = max(1.0, 2.0 / (e0 + 1.0))

    def g(u):
        if u <= 0.0:
            return 0.0
        s = t * u ** k
        v = float(h(np.array([s]))[0])
        return v * t * k * u ** (k - 1.0)

    val, _err = integrate.quad(g, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=400)
    return val


def _integrate_log(h, a, b, width=1.0):
    """int_a^b h(s) ds on the log scale with Gauss-Legendre panels of the given width."""
    if b <= a:
        return 0.0
    xa, xb = math.log(a), math.log(b)
    n = max(1, int(math.ceil((xb - xa) / width)))
    edges = np.linspace(xa, xb, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    s = np.exp(x)
    v = h(s.ravel()).reshape(s.shape) * s
    return float(np.sum(half[:, None] * _GL_W[None, :] * v))


def kernel_eval(phi, l, kind=KernelKind.STANDARD, t=1.0):
    """K(t) by quadrature; t = inf gives K_inf (possibly inf)."""
    h = kernel_integrand(phi, l, kind)
    if t == 0:
        return 0.0
    if np.isinf(t):
        return KernelTable(phi, l, kind).K_inf
    e0 = _zero_exponent(h)
    head = min(t, 1.0)
    val = _integrate_head(h, head, e0)
    if t > 1.0:
        val += _integrate_log(h, 1.0, t, width=0.25)
    return val


class KernelTable:
    """Monotone table of K on a log grid with accurate evaluation and inversion.

    Values between nodes are computed by Gauss-Legendre panels in log t,
    inversion starts from monotone interpolation in log-log and is polished
    by Newton steps, so round trips are accurate to near machine precision.
    """

    def __init__(self, phi, l, kind=KernelKind.STANDARD, t_min=1e-60, t_max=1e60, per_decade=20):
        self.phi, self.l = phi, l
        self.kind = KernelKind(kind)
        self.h = h = kernel_integrand(phi, l, self.kind)
        x = np.linspace(math.log(t_min), math.log(t_max),
                        int(round(per_decade * math.log10(t_max / t_min))) + 1)
        half = 0.5 * np.diff(x)
        mid = 0.5 * (x[1:] + x[:-1])
        xx = mid[:, None] + half[:, None] * _GL_X[None, :]
        ss = np.exp(xx)
        with np.errstate(all="ignore"):
            vv = h(ss.ravel()).reshape(ss.shape) * ss
        inc = np.sum(half[:, None] * _GL_W[None, :] * vv, axis=1)
        self.e0 = _zero_exponent(h)
        K0 = _integrate_head(h, float(np.exp(x[0])), self.e0)
        K = K0 + np.concatenate(([0.0], np.cumsum(inc)))
        ok = np.isfinite(K) & (K > 1e-300) & (K < 1e300)
        ok &= np.concatenate(([True], np.isfinite(inc)))
        # keep the leading run of valid strictly increasing values
        keep = np.zeros_like(ok)
        started = False
        last = -np.inf
        for i in range(K.size):
            if ok[i] and K[i] > last:
                keep[i] = True
                started = True
                last = K[i]
            elif started:
                break
        idx = np.nonzero(keep)[0]
        if idx.size < 4:
            raise NotIntegrableAtZero("kernel table could not be built")
        self.x = x[idx]
        self.t = np.exp(self.x)
        self.K = K[idx]
        self.logK = np.log(self.K)
        self._head_exp = self.e0 + 1.0
        # tail behaviour
        overflow_cut = idx[-1] < K.size - 1 and not np.all(np.isfinite(inc[idx[-1]:]))
        tl = self.t[-1]
        e_inf = _local_slope(h, tl / 10.0, tl)
        self.e_inf = e_inf
        if overflow_cut or not np.isfinite(e_inf):
            self.K_inf = math.inf
            self._tail_exp = math.inf
        elif e_inf < -1.0 - 0.05:
            hv = float(h(np.array([tl]))[0])
            self.K_inf = float(self.K[-1] + hv * tl / (-e_inf - 1.0))
            self._tail_exp = e_inf
        else:
            self.K_inf = math.inf
            self._tail_exp = e_inf
        self.saturated = idx[-1] < K.size - 1 and not overflow_cut and np.isfinite(self.K_inf)
        self._interp = PchipInterpolator(self.logK, self.x, extrapolate=True)

    @property
    def K_inf_finite(self):
        return bool(np.isfinite(self.K_inf))

    def derivative(self, t):
        """K'(t)."""
        return self.h(t)

    def __call__(self, t):
        t = _as_array(t)
        flat = t.ravel()
        out = np.zeros(flat.size)
        pos = flat > 0
        tt = np.where(pos, flat, 1.0)
        lt = np.log(tt)
        i = np.clip(np.searchsorted(self.x, lt, side="right") - 1, 0, self.x.size - 1)
        inside = pos & (lt >= self.x[0]) & (lt <= self.x[-1])
        if inside.any():
            a = self.x[i[inside]]
            b = lt[inside]
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            xx = mid[:, None] + half[:, None] * _GL_X[None, :]
            ss = np.exp(xx)
            vv = self.h(ss.ravel()).reshape(ss.shape) * ss
            out[inside] = self.K[i[inside]] + np.sum(half[:, None] * _GL_W[None, :] * vv, axis=1)
        below = pos & (lt < self.x[0])
        if below.any():
            out[below] = self.K[0] * np.exp(self._head_exp * (lt[below] - self.x[0]))
        above = pos & (lt > self.x[-1])
        if above.any():
            out[above] = self._tail_K(tt[above])
        return out.reshape(t.shape)

    def _tail_K(self, t):
        tl = self.t[-1]
        if np.isfinite(self.K_inf):
            e = self._tail_exp
            hv = float(self.h(np.array([tl]))[0])
            return self.K_inf - hv * tl * (t / tl) ** (e + 1.0) / (-e - 1.0)
        slope = (self.logK[-1] - self.logK[-2]) / (self.x[-1] - self.x[-2])
        return self.K[-1] * np.exp(slope * (np.log(t) - self.x[-1]))

    def inverse(self, y):
        """K^{-1}(y); raises OutOfRange for y >= K_inf."""
        y = _as_array(y)
        if np.any(y >= self.K_inf):
            raise OutOfRange("K^-1 undefined at or beyond K_inf")
        if np.any(y < 0):
            raise OutOfRange("K^-1 needs y >= 0")
        flat = y.ravel()
        out = np.zeros(flat.size)
        pos = flat > 0
        ly = np.log(np.where(pos, flat, 1.0))
        inside = pos & (ly >= self.logK[0]) & (ly <= self.logK[-1])
        if inside.any():
            u = self._interp(ly[inside])
            yy = flat[inside]
            lo = self.x[np.clip(np.searchsorted(self.logK, ly[inside], side="right") - 1, 0, self.x.size - 1)]
            hi = self.x[np.clip(np.searchsorted(self.logK, ly[inside], side="left"), 0, self.x.size - 1)]
            u = np.clip(u, lo, hi)
            for _ in range(3):
                tt = np.exp(u)
                r = self(tt) - yy
                d = self.h(tt) * tt
                step = r / np.where(d > 0, d, np.inf)
                u = np.clip(u - step, lo, hi)
            out[inside] = np.exp(u)
        below = pos & (ly < self.logK[0])
        if below.any():
            out[below] = self.t[0] * np.exp((ly[below] - self.logK[0]) / self._head_exp)
        above = pos & (ly > self.logK[-1])
        if above.any():
            out[above] = self._tail_inverse(flat[above])
        return out.reshape(y.shape)

    def inverse_derivative(self, y):
        """(K^{-1})'(y) = 1 / K'(K^{-1}(y))."""
        t = self.inverse(y)
        with np.errstate(divide="ignore"):
            return 1.0 / self.h(t)

    def _tail_inverse(self, y):
        tl = self.t[-1]
        if np.isfinite(self.K_inf):
            e = self._tail_exp
            hv = float(self.h(np.array([tl]))[0])
            return tl * ((self.K_inf - y) * (-e - 1.0) / (hv * tl)) ** (1.0 / (e + 1.0))
        slope = (self.logK[-1] - self.logK[-2]) / (self.x[-1] - self.x[-2])
        return tl * np.exp((np.log(y) - self.logK[-1]) / slope)


# ---------------------------------------------------------------------------
# structural conditions
# ---------------------------------------------------------------------------

CONDITION_IDS = ("C1", "C2", "C2'", "C3", "C4", "beta1", "beta2", "beta3", "chi1", "chi2",
                 "C-increasing")

NEAR_ZERO = (1e-12, 1.0)
NEAR_INF = (1.0, 1e8)


@dataclass
class ConditionReport:
    condition_id: str
    verdict: Verdict
    constant: float
    detail: str = ""
    decade_sups: list = field(default_factory=list)


def _log_grid(a, b, per_decade):
    n = max(2, int(round(per_decade * math.log10(b / a))) + 1)
    return np.logspace(math.log10(a), math.log10(b), n)


def _decade_sups(t, v, toward_zero):
    """Running sups by expanding window toward the singular end, one per decade."""
    lt = np.log10(t)
    if toward_zero:
        edges = np.arange(math.floor(lt.max() + 1e-9), math.floor(lt.min() + 1e-9) - 1, -1)
        sups = []
        for e in edges[1:]:
            m = lt >= e - 1e-9
            if m.any():
                sups.append(float(np.max(v[m])))
    else:
        edges = np.arange(math.ceil(lt.min() - 1e-9), math.ceil(lt.max() - 1e-9) + 1)
        sups = []
        for e in edges[1:]:
            m = lt <= e + 1e-9
            if m.any():
                sups.append(float(np.max(v[m])))
    return sups


def _growth_verdict(sups, rel_tol=1e-3, slope_fail=0.05):
    """Holds if the running sup has stabilised, Fails on clean power growth, else Inconclusive."""
    s = np.asarray(sups, dtype=float)
    if s.size == 0 or not np.all(np.isfinite(s)):
        return Verdict.FAILS, math.inf
    if s.size < 2 or s[-1] <= s[-2] * (1.0 + rel_tol):
        return Verdict.HOLDS, float(s[-1])
    tail = np.log10(np.maximum(s[-4:], 1e-300))
    d = np.diff(tail)
    if d.size >= 2 and np.all(d > 0) and np.mean(d) > slope_fail:
        return Verdict.FAILS, math.inf
    return Verdict.INCONCLUSIVE, float(s[-1])


def _c_increasing_sequence(t, h, toward_zero):
    """Running C-increasing constants as the window expands decade by decade."""
    lt = np.log10(t)
    out = []
    if toward_zero:
        tops = np.arange(math.floor(lt.max() + 1e-9) - 1, math.floor(lt.min() + 1e-9) - 1, -1)
        for e in tops:
            m = lt >= e - 1e-9
            hh = h[m]
            out.append(float(np.max(np.maximum.accumulate(hh) / hh)))
    else:
        tops = np.arange(math.ceil(lt.min() - 1e-9) + 1, math.ceil(lt.max() - 1e-9) + 1)
        for e in tops:
            m = lt <= e + 1e-9
            hh = h[m]
            out.append(float(np.max(np.maximum.accumulate(hh) / hh)))
    return out


def _c_increasing(t, h):
    """Verdict for C-increasing of h on the sampled interval, expanding toward both ends."""
    if np.any(~np.isfinite(h)) or np.any(h <= 0):
        return Verdict.FAILS, math.inf, "non-positive or non-finite samples"
    lt = np.log10(t)
    c_all = float(np.max(np.maximum.accumulate(h) / h))
    verdicts = []
    if lt.min() < 0:
        verdicts.append(_growth_verdict(_c_increasing_sequence(t, h, True)))
    if lt.max() > 0:
        verdicts.append(_growth_verdict(_c_increasing_sequence(t, h, False)))
    vs = [v for v, _ in verdicts]
    if Verdict.FAILS in vs:
        return Verdict.FAILS, math.inf, "constant grows with the window"
    if Verdict.INCONCLUSIVE in vs:
        return Verdict.INCONCLUSIVE, c_all, "constant still drifting at window edge"
    return Verdict.HOLDS, c_all, ""


def check_condition(condition_id, triple: NonlinearTriple, weight=None, domain=None, *,
                    kind=KernelKind.STANDARD, chi=None, r0=0.0, target="l", per_decade=1000,
                    table: Optional[KernelTable] = None):
    """Estimate a structural condition by a sampled sup on a log grid.

    weight is the auxiliary profile for the beta conditions (beta-bar for
    beta1/beta2, beta for beta3). chi is the exponent for chi1/chi2.
    """
    if condition_id not in CONDITION_IDS:
        raise UnknownCondition(condition_id)
    phi, f, l = triple.phi, triple.f, triple.l

    def K_table():
        return table if table is not None else KernelTable(phi, l, kind)

    if condition_id in ("beta1", "beta2", "beta3"):
        w = weight if weight is not None else triple.beta
        if w is None:
            raise ValueError(f"{condition_id} needs a weight profile")
        a, b = domain if domain is not None else (max(r0, 1.0), NEAR_INF[1])
        t = _log_grid(a, b, per_decade)
        if r0 < a:
            t = np.concatenate((np.linspace(r0, a, 200)[:-1], t))
        bv = w(t)
        dv = w.derivative(t)
        if condition_id == "beta1":
            T = K_table()
            ok = np.all(bv > 0) and np.all(dv <= 1e-14 * np.abs(bv)) and np.all(bv < T.K_inf)
            return ConditionReport("beta1", Verdict.HOLDS if ok else Verdict.FAILS, float(np.max(bv)))
        if condition_id == "beta2":
            T = K_table()
            if np.any(bv >= T.K_inf):
                return ConditionReport("beta2", Verdict.FAILS, math.inf, "weight not below K_inf")
            ratio = -dv / (T.inverse(bv) * bv)
            far = t >= max(a, 1.0)
            sups = _decade_sups(t[far], ratio[far], toward_zero=False)
            v, c = _growth_verdict(sups)
            if v is Verdict.HOLDS:
                c = float(np.max(ratio))
            return ConditionReport("beta2", v, c, decade_sups=sups)
        # beta3: limsup of -t beta'/beta
        ratio = -t * dv / bv
        last = ratio[t >= t.max() / 10.0]
        c = float(np.max(last))
        return ConditionReport("beta3", Verdict.HOLDS if c > 1e-6 else Verdict.FAILS, c)

    if condition_id in ("chi1", "chi2"):
        if chi is None:
            raise ValueError(f"{condition_id} needs chi")
        a, b = domain if domain is not None else (NEAR_ZERO[0], NEAR_INF[1])
        t = _log_grid(a, b, per_decade)
        with np.errstate(all="ignore"):
            if condition_id == "chi1":
                h = phi.derivative(t) / l(t) * t ** (1.0 - chi)
            else:
                h = phi(t) / l(t) * t ** (-chi)
        v, c, d = _c_increasing(t, h)
        return ConditionReport(condition_id, v, c, d)

    if condition_id == "C-increasing":
        a, b = domain if domain is not None else NEAR_ZERO
        t = _log_grid(a, b, per_decade)
        fn = {"l": l, "f": f}.get(target, target) if isinstance(target, str) else target
        h = _as_array(fn(t))
        v, c, d = _c_increasing(t, h)
        return ConditionReport("C-increasing", v, c, d)

    a, b = domain if domain is not None else NEAR_ZERO
    if condition_id == "C1":
        T = K_table()
        t = _log_grid(a, b, per_decade)
        ratio = t * T.derivative(t) / T(t)
        sups = _decade_sups(t, ratio, toward_zero=True)
        v, c = _growth_verdict(sups)
        return ConditionReport("C1", v, c, decade_sups=sups)
    if condition_id in ("C2", "C2'"):
        n2 = 125
        nd = int(round(math.log10(b / a)))
        u = np.logspace(math.log10(b), math.log10(b) - 2 * nd, 2 * nd * n2 + 1)
        m = nd * n2 + 1
        i = np.arange(m)
        if condition_id == "C2":
            T = K_table()
            kp = T.derivative(u)
            ratio = kp[i[:, None] + i[None, :]] / (kp[i][:, None] * kp[i][None, :])
            sups = [float(np.max(ratio[: (d + 1) * n2 + 1, : (d + 1) * n2 + 1])) for d in range(nd)]
            v, c = _growth_verdict(sups)
            return ConditionReport("C2", v, c, decade_sups=sups)
        dp = phi.derivative(u)
        lv = l(u)
        r1 = dp[i[:, None] + i[None, :]] / (dp[i][:, None] * dp[i][None, :])
        r2 = (lv[i][:, None] * lv[i][None, :]) / lv[i[:, None] + i[None, :]]
        s1 = [float(np.max(r1[: (d + 1) * n2 + 1, : (d + 1) * n2 + 1])) for d in range(nd)]
        s2 = [float(np.max(r2[: (d + 1) * n2 + 1, : (d + 1) * n2 + 1])) for d in range(nd)]
        v1, c1 = _growth_verdict(s1)
        v2, c2 = _growth_verdict(s2)
        order = [Verdict.FAILS, Verdict.INCONCLUSIVE, Verdict.HOLDS]
        v = min(v1, v2, key=order.index)
        return ConditionReport("C2'", v, max(c1, c2), f"d1={c1:.6g}, c1={c2:.6g}")
    if condition_id == "C3":
        T = K_table()
        t = _log_grid(a, b, per_decade)
        h = t / T.inverse(t)
        v, c, d = _c_increasing(t, h)
        lo_dec = h[t <= a * 10.0]
        hi_dec = h[t >= b / 10.0]
        slope = math.log10(np.mean(hi_dec) / np.mean(lo_dec)) / math.log10(b / a)
        if v is Verdict.HOLDS and slope < 0.05:
            return ConditionReport("C3", Verdict.FAILS, c, f"t/K^-1(t) does not vanish at 0 (slope {slope:.3g})")
        return ConditionReport("C3", v, c, d)
    if condition_id == "C4":
        T = K_table()
        hi = min(b, 1.0)
        t = _log_grid(a, hi, per_decade)
        t = t[t < hi]
        Fv = f.F(t)
        fv = f(t)
        with np.errstate(all="ignore"):
            ratio = Fv / (T.inverse(Fv) * fv)
        good = fv > 0
        if not good.any():
            return ConditionReport("C4", Verdict.FAILS, math.inf, "f vanishes on the domain")
        sups = _decade_sups(t[good], ratio[good], toward_zero=True)
        v, c = _growth_verdict(sups)
        return ConditionReport("C4", v, c, decade_sups=sups)
    raise UnknownCondition(condition_id)  # pragma: no cover


def warn_singular(l: GradientTerm, context: str):
    if getattr(l, "singular_at_zero", False):
        warnings.warn(f"l is singular at 0; {context}", RuntimeWarning, stacklevel=3)
