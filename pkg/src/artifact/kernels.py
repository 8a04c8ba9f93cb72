"""Hot numerical kernels with a numba path and a pure numpy fallback.

Set ARTIFACT_DISABLE_NUMBA=1 in the environment to force the numpy versions.
Both paths implement the same algorithms and are checked against each other
in the test suite and in benchmarks/bench_kernels.py.

Family codes for the built-in phi functions:
    0 power law        t^(p-1)
    1 mean curvature   t / sqrt(1 + t^2)
    2 exp harmonic     t exp(t^2)
    3 power sum        t^(p-1) + t^(q-1)
    4 rational power   t^(p-1) / (1 + t)^(q-1)
"""

from __future__ import annotations

import os

import numpy as np

PHI_POWER, PHI_MC, PHI_EXP, PHI_SUM, PHI_RATIONAL = 0, 1, 2, 3, 4

# stand-in for phi^{-1}(y) when y is beyond the range of phi
SATURATED = 1e150


def _numba_requested():
    return os.environ.get("ARTIFACT_DISABLE_NUMBA", "0").strip().lower() not in ("1", "true", "yes")


USE_NUMBA = False
if _numba_requested():
    try:
        import numba

        USE_NUMBA = True
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _opts():
    return dict(fastmath=False, cache=True, nogil=True, error_model="numpy")


def _jit(fn):
    if USE_NUMBA:
        return numba.njit(**_opts())(fn)
    return fn


# ---------------------------------------------------------------------------
# loop kernels (compiled under numba, otherwise only used by tests)
# ---------------------------------------------------------------------------

@_jit
def _phi_scalar(code, p, q, t):
    s = 1.0
    if t < 0.0:
        s = -1.0
        t = -t
    if t == 0.0:
        return 0.0
    if code == 0:
        v = t ** (p - 1.0)
    elif code == 1:
        v = t / np.sqrt(1.0 + t * t)
    elif code == 2:
        v = t * np.exp(t * t)
    elif code == 3:
        v = t ** (p - 1.0) + t ** (q - 1.0)
    else:
        v = t ** (p - 1.0) / (1.0 + t) ** (q - 1.0)
    return s * v


@_jit
def _dphi_scalar(code, p, q, t):
    t = abs(t)
    if code == 0:
        return (p - 1.0) * t ** (p - 2.0)
    if code == 1:
        return (1.0 + t * t) ** -1.5
    if code == 2:
        return np.exp(t * t) * (1.0 + 2.0 * t * t)
    if code == 3:
        return (p - 1.0) * t ** (p - 2.0) + (q - 1.0) * t ** (q - 2.0)
    return t ** (p - 2.0) * (1.0 + t) ** (-q) * ((p - 1.0) * (1.0 + t) - (q - 1.0) * t)


@_jit
def _logphi_dlog(code, p, q, u):
    """log phi(e^u) and its derivative in u."""
    t = np.exp(u)
    if code == 2:
        return u + t * t, 1.0 + 2.0 * t * t
    if code == 3:
        # log(t^(p-1) + t^(q-1)) = (q-1)u + log1p(t^(p-q))
        a = (p - q) * u
        if a > 700.0:
            lv = (p - 1.0) * u + np.log1p(np.exp(-a))
        else:
            lv = (q - 1.0) * u + np.log1p(np.exp(a))
        w = 1.0 / (1.0 + np.exp(-a)) if a > -700.0 else 0.0
        return lv, (q - 1.0) + (p - q) * w
    # rational power
    if u > 30.0:
        l1 = u + np.log1p(np.exp(-u))
    else:
        l1 = np.log1p(t)
    lv = (p - 1.0) * u - (q - 1.0) * l1
    return lv, (p - 1.0) - (q - 1.0) * t / (1.0 + t)


@_jit
def _phi_inv_scalar(code, p, q, y):
    s = 1.0
    if y < 0.0:
        s = -1.0
        y = -y
    if y == 0.0:
        return 0.0
    if code == 0:
        return s * y ** (1.0 / (p - 1.0))
    if code == 1:
        if y >= 1.0:
            return s * SATURATED
        return s * y / np.sqrt((1.0 - y) * (1.0 + y))
    if code == 4 and q >= p:
        if y >= 1.0:
            return s * SATURATED
    ly = np.log(y)
    # bracket in log t
    lo = -1.0
    hi = 1.0
    for _ in range(2000):
        flo, _d = _logphi_dlog(code, p, q, lo)
        if flo <= ly:
            break
        lo = 2.0 * lo - 1.0
    for _ in range(2000):
        fhi, _d = _logphi_dlog(code, p, q, hi)
        if fhi >= ly:
            break
        hi = 2.0 * hi + 1.0
        if hi > 700.0:
            return s * SATURATED
    u = 0.5 * (lo + hi)
    for _ in range(200):
        fu, du = _logphi_dlog(code, p, q, u)
        g = fu - ly
        if g > 0.0:
            hi = u
        else:
            lo = u
        step = g / du if du > 0.0 else 0.0
        un = u - step
        if not (lo < un < hi) or du <= 0.0:
            un = 0.5 * (lo + hi)
        if abs(un - u) <= 1e-15 * max(1.0, abs(u)):
            u = un
            break
        u = un
    t = np.exp(u)
    # one Newton polish in t removes the rounding of the log formulation
    d = _dphi_scalar(code, p, q, t)
    if d > 0.0 and np.isfinite(d):
        tn = t - (_phi_scalar(code, p, q, t) - y) / d
        if tn > 0.0 and np.isfinite(tn):
            t = tn
    return s * t


@_jit
def _cumint_weights_loop(x):
    n = x.shape[0]
    W = np.zeros((n - 1, 4))
    J = np.zeros(n - 1, dtype=np.int64)
    g = 0.5773502691896257  # 1/sqrt(3)
    for i in range(n - 1):
        j = i - 1
        if j < 0:
            j = 0
        if j > n - 4:
            j = n - 4
        J[i] = j
        a = x[i]
        b = x[i + 1]
        h = 0.5 * (b - a)
        c = 0.5 * (a + b)
        for gp in range(2):
            xi = c + (g if gp == 1 else -g) * h
            for k in range(4):
                num = 1.0
                den = 1.0
                for m in range(4):
                    if m != k:
                        num *= xi - x[j + m]
                        den *= x[j + k] - x[j + m]
                W[i, k] += h * num / den
    return W, J


@_jit
def _cumint_apply_loop(W, J, y):
    n = y.shape[0]
    out = np.zeros(n)
    acc = 0.0
    for i in range(n - 1):
        j = J[i]
        acc += W[i, 0] * y[j] + W[i, 1] * y[j + 1] + W[i, 2] * y[j + 2] + W[i, 3] * y[j + 3]
        out[i + 1] = acc
    return out


@_jit
def _delta_bisect_loop(code, p, q, P, S, qw, target, lo, hi, maxit):
    n = P.shape[0]
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        tot = 0.0
        for i in range(n):
            tot += qw[i] * _phi_inv_scalar(code, p, q, (mid + S[i]) / P[i])
        if tot > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------

def _np_phi(code, p, q, t):
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if code == PHI_POWER:
            v = a ** (p - 1.0)
        elif code == PHI_MC:
            v = a / np.sqrt(1.0 + a * a)
        elif code == PHI_EXP:
            v = a * np.exp(a * a)
        elif code == PHI_SUM:
            v = a ** (p - 1.0) + a ** (q - 1.0)
        else:
            v = a ** (p - 1.0) / (1.0 + a) ** (q - 1.0)
    v = np.where(a == 0.0, 0.0, v)
    return np.sign(t) * v


def _np_dphi(code, p, q, t):
    t = np.abs(np.asarray(t, dtype=float))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if code == PHI_POWER:
            return (p - 1.0) * t ** (p - 2.0)
        if code == PHI_MC:
            return (1.0 + t * t) ** -1.5
        if code == PHI_EXP:
            return np.exp(t * t) * (1.0 + 2.0 * t * t)
        if code == PHI_SUM:
            return (p - 1.0) * t ** (p - 2.0) + (q - 1.0) * t ** (q - 2.0)
        return t ** (p - 2.0) * (1.0 + t) ** (-q) * ((p - 1.0) * (1.0 + t) - (q - 1.0) * t)


def dphi_family(code, p, q, t):
    """phi' for a built-in family (even in t)."""
    return _np_dphi(code, p, q, t)


def _np_logphi_dlog(code, p, q, u):
    t = np.exp(np.minimum(u, 700.0))
    if code == PHI_EXP:
        return u + t * t, 1.0 + 2.0 * t * t
    if code == PHI_SUM:
        a = (p - q) * u
        lv = np.where(a > 0, (p - 1.0) * u + np.log1p(np.exp(-np.abs(a))),
                      (q - 1.0) * u + np.log1p(np.exp(-np.abs(a))))
        w = 0.5 * (1.0 + np.tanh(0.5 * a))
        return lv, (q - 1.0) + (p - q) * w
    l1 = np.where(u > 30.0, u + np.log1p(np.exp(-np.minimum(u, 700.0))), np.log1p(t))
    lv = (p - 1.0) * u - (q - 1.0) * l1
    return lv, (p - 1.0) - (q - 1.0) * t / (1.0 + t)


def _np_phi_inv(code, p, q, y):
    y = np.asarray(y, dtype=float)
    s = np.sign(y)
    a = np.abs(y)
    out = np.zeros_like(a)
    nz = a > 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if code == PHI_POWER:
            out = a ** (1.0 / (p - 1.0))
        elif code == PHI_MC:
            out = np.where(a >= 1.0, SATURATED, a / np.sqrt(np.abs((1.0 - a) * (1.0 + a))))
        else:
            sat = np.zeros_like(a, dtype=bool)
            if code == PHI_RATIONAL and q >= p:
                sat = a >= 1.0
            work = nz & ~sat
            ly = np.log(np.where(work, a, 1.0))
            lo = np.full(a.shape, -1.0)
            hi = np.full(a.shape, 1.0)
            for _ in range(200):
                f, _d = _np_logphi_dlog(code, p, q, lo)
                bad = work & (f > ly)
                if not bad.any():
                    break
                lo = np.where(bad, 2.0 * lo - 1.0, lo)
            for _ in range(200):
                f, _d = _np_logphi_dlog(code, p, q, hi)
                bad = work & (f < ly) & (hi < 700.0)
                if not bad.any():
                    break
                hi = np.where(bad, 2.0 * hi + 1.0, hi)
            fh, _d = _np_logphi_dlog(code, p, q, hi)
            sat = sat | (work & (fh < ly))
            work = work & ~sat
            u = 0.5 * (lo + hi)
            for _ in range(200):
                fu, du = _np_logphi_dlog(code, p, q, u)
                g = fu - ly
                hi = np.where(g > 0, u, hi)
                lo = np.where(g > 0, lo, u)
                un = u - g / np.where(du > 0, du, 1.0)
                ok = (un > lo) & (un < hi) & (du > 0)
                un = np.where(ok, un, 0.5 * (lo + hi))
                done = np.abs(un - u) <= 1e-15 * np.maximum(1.0, np.abs(u))
                u = un
                if np.all(done | ~work):
                    break
            t = np.exp(np.minimum(u, 700.0))
            d = _np_dphi(code, p, q, t)
            tn = t - (_np_phi(code, p, q, t) - a) / np.where(d > 0, d, 1.0)
            good = (d > 0) & np.isfinite(d) & np.isfinite(tn) & (tn > 0)
            t = np.where(good, tn, t)
            out = np.where(sat, SATURATED, t)
    out = np.where(nz, out, 0.0)
    return s * out


def _np_cumint_weights(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    i = np.arange(n - 1)
    J = np.clip(i - 1, 0, n - 4)
    nodes = x[J[:, None] + np.arange(4)[None, :]]
    a, b = x[:-1], x[1:]
    h = 0.5 * (b - a)
    c = 0.5 * (a + b)
    W = np.zeros((n - 1, 4))
    g = 1.0 / np.sqrt(3.0)
    for sgn in (-1.0, 1.0):
        xi = c + sgn * g * h
        for k in range(4):
            num = np.ones(n - 1)
            den = np.ones(n - 1)
            for m in range(4):
                if m != k:
                    num *= xi - nodes[:, m]
                    den *= nodes[:, k] - nodes[:, m]
            W[:, k] += h * num / den
    return W, J.astype(np.int64)


def _np_cumint_apply(W, J, y):
    y = np.asarray(y, dtype=float)
    idx = J[:, None] + np.arange(4)[None, :]
    inc = np.sum(W * y[idx], axis=1)
    return np.concatenate(([0.0], np.cumsum(inc)))


def _np_delta_bisect(code, p, q, P, S, qw, target, lo, hi, maxit):
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        tot = float(np.dot(qw, _np_phi_inv(code, p, q, (mid + S) / P)))
        if tot > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    @_jit
    def _phi_arr_j(code, p, q, t):
        out = np.empty(t.shape[0])
        for i in range(t.shape[0]):
            out[i] = _phi_scalar(code, p, q, t[i])
        return out

    @_jit
    def _phi_inv_arr_j(code, p, q, y):
        out = np.empty(y.shape[0])
        for i in range(y.shape[0]):
            out[i] = _phi_inv_scalar(code, p, q, y[i])
        return out

    _cumint_weights_j = _cumint_weights_loop
    _cumint_apply_j = _cumint_apply_loop
    _delta_bisect_j = _delta_bisect_loop


def _flat(a):
    a = np.asarray(a, dtype=float)
    return np.ascontiguousarray(a.ravel()), a.shape


def phi_family(code, p, q, t):
    """phi for a built-in family code, extended as an odd function."""
    if USE_NUMBA:
        flat, shape = _flat(t)
        return _phi_arr_j(int(code), float(p), float(q), flat).reshape(shape)
    return _np_phi(code, p, q, t)


def phi_inv_family(code, p, q, y):
    """Inverse of phi for a built-in family code; SATURATED beyond its range."""
    if USE_NUMBA:
        flat, shape = _flat(y)
        return _phi_inv_arr_j(int(code), float(p), float(q), flat).reshape(shape)
    return _np_phi_inv(code, p, q, y)


def cumint_weights(x):
    """Per-interval weights of a fourth order cumulative rule on the grid x.

    Each interval integrates the cubic through four neighbouring nodes,
    which is exact for cubics on any nonuniform grid with at least 4 nodes.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("need at least 4 nodes")
    if USE_NUMBA:
        return _cumint_weights_j(x)
    return _np_cumint_weights(x)


def cumint_apply(W, J, y):
    y = np.ascontiguousarray(y, dtype=float)
    if USE_NUMBA:
        return _cumint_apply_j(W, J, y)
    return _np_cumint_apply(W, J, y)


def total_weights(W, J, n):
    """Vector q with q . y equal to the full integral of the cumulative rule."""
    q = np.zeros(n)
    for k in range(4):
        np.add.at(q, J + k, W[:, k])
    return q


def delta_bisect(code, p, q, P, S, qw, target, lo, hi, maxit=200):
    """Bisection for delta with qw . phi^{-1}((delta + S)/P) = target."""
    P = np.ascontiguousarray(P, dtype=float)
    S = np.ascontiguousarray(S, dtype=float)
    qw = np.ascontiguousarray(qw, dtype=float)
    if USE_NUMBA:
        return _delta_bisect_j(int(code), float(p), float(q), P, S, qw, float(target),
                               float(lo), float(hi), int(maxit))
    return _np_delta_bisect(code, p, q, P, S, qw, target, lo, hi, maxit)


def backend():
    return "numba" if USE_NUMBA else "numpy"
