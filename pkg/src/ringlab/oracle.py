"""Independent brute-force references used by the test suite.

Nothing here shares code with the production kernels: the defining
integrals are evaluated with a hand-rolled adaptive Simpson rule, the
asymptotic forms are the bare printed expansions, and the velocity
reference re-implements the direct sum with AGM elliptic integrals in
extended precision plus compensated accumulation.
"""

import math
from dataclasses import dataclass

import numpy as np


class OracleBudgetError(RuntimeError):
    """Adaptive Simpson exceeded its subdivision budget."""


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_err_estimate: float
    subdivisions: int


_MAX_DEPTH = 60


def _simpson(f, a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, b, fa, fm, fb, whole, tol_density, depth, count):
    # error budget proportional to panel width: boundary layers refine
    # geometrically instead of blowing up the recursion tree
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(f, a, m, fa, flm, fm)
    right = _simpson(f, m, b, fm, frm, fb)
    err = left + right - whole
    # stop at the roundoff floor of the panel sums
    noise = 4e-16 * (abs(left) + abs(right))
    if (abs(err) <= max(15.0 * tol_density * (b - a), noise)
            or (b - a) < 1e-14):
        return left + right + err / 15.0, abs(err) / 15.0, count + 2
    if depth >= _MAX_DEPTH:
        raise OracleBudgetError("adaptive Simpson subdivision budget exceeded")
    v1, e1, count = _adaptive(f, a, m, fa, flm, fm, left, tol_density,
                              depth + 1, count + 2)
    v2, e2, count = _adaptive(f, m, b, fm, frm, fb, right, tol_density,
                              depth + 1, count)
    return v1 + v2, e1 + e2, count


def _integrate(f, a, b, tol):
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, b, fa, fm, fb)
    val, err, count = _adaptive(f, a, b, fa, fm, fb, whole, tol / (b - a), 0, 3)
    return val, err, count


def _quad_kernel(integrand, s_scale, rel_tol=1e-12):
    """Integrate over a in [0, pi] to abs tolerance rel_tol * max(1, |I|).

    The integrands peak in a layer of width ~s near a = 0; below
    s_scale = 0.05 the peak piece [0, 1] is computed under a = s sinh(v),
    which makes all three integrands smooth with O(1) derivatives on an
    O(log 1/s) interval; the remainder [1, pi] is integrated directly.
    """
    def pieces(tol):
        if s_scale < 0.05:
            s = s_scale

            def g(v):
                return integrand(s * math.sinh(v)) * s * math.cosh(v)

            v1, e1, c1 = _integrate(g, 0.0, math.asinh(1.0 / s), tol / 2.0)
            v2, e2, c2 = _integrate(integrand, 1.0, math.pi, tol / 2.0)
            return v1 + v2, e1 + e2, c1 + c2
        return _integrate(integrand, 0.0, math.pi, tol)

    val, err, count = pieces(rel_tol)
    scale = max(1.0, abs(val))
    if scale > 1.0:
        val, err, count = pieces(rel_tol * scale)
    return val, err, count


def quad_F(s: float) -> QuadResult:
    # 2 - 2 cos a is written 4 sin^2(a/2): identical, but free of the
    # small-angle cancellation that would put fp noise above the tolerance
    if s <= 0.0:
        raise ValueError("quad_F requires a positive argument")
    v, e, c = _quad_kernel(
        lambda a: math.cos(a) / math.sqrt(s + 4.0 * math.sin(0.5 * a) ** 2),
        math.sqrt(s))
    return QuadResult(v, e, c)


def quad_F1(s: float) -> QuadResult:
    if s <= 0.0:
        raise ValueError("quad_F1 requires s > 0")
    v, e, c = _quad_kernel(
        lambda a: math.cos(a) / (s * s + 4.0 * math.sin(0.5 * a) ** 2) ** 1.5,
        s)
    return QuadResult(v, e, c)


def quad_F2(s: float) -> QuadResult:
    if s <= 0.0:
        raise ValueError("quad_F2 requires s > 0")
    v, e, c = _quad_kernel(
        lambda a: 2.0 * math.sin(0.5 * a) ** 2
        / (s * s + 4.0 * math.sin(0.5 * a) ** 2) ** 1.5, s)
    return QuadResult(v, e, c)


# ----------------------------------------------------------------------
# printed small-argument expansions (leading terms only, 0 < s <= 1)
# ----------------------------------------------------------------------

def asymptotic_F(s: float) -> float:
    """(1/2) log(1/s) + log 8 - 2, remainder O(s log s)."""
    if not 0.0 < s <= 1.0:
        raise ValueError("asymptotic form valid for 0 < s <= 1")
    return 0.5 * math.log(1.0 / s) + math.log(8.0) - 2.0


def asymptotic_F1(s: float) -> float:
    """1/s^2 - (3/8) log(1/s), remainder O(1)."""
    if not 0.0 < s <= 1.0:
        raise ValueError("asymptotic form valid for 0 < s <= 1")
    return 1.0 / (s * s) - 0.375 * math.log(1.0 / s)


def asymptotic_F2(s: float) -> float:
    """(1/2) log(1/s) + (3 log 2 - 1)/2, remainder O(s^2)."""
    if not 0.0 < s <= 1.0:
        raise ValueError("asymptotic form valid for 0 < s <= 1")
    return 0.5 * math.log(1.0 / s) + (3.0 * math.log(2.0) - 1.0) / 2.0


# ----------------------------------------------------------------------
# extended-precision direct velocity reference
# ----------------------------------------------------------------------

def _ke_agm_longdouble(u):
    """K(m), E(m) with m1 = u, elementwise in np.longdouble via AGM.

    E/K = 1 - sum_n 2^{n-1} c_n^2 with c_0^2 = m = 1 - u."""
    one = np.longdouble(1.0)
    a = np.ones_like(u)
    b = np.sqrt(u)
    csum = (one - u) / 2
    pw = np.longdouble(0.5)
    for _ in range(24):
        c = (a - b) / 2
        t = np.sqrt(a * b)
        a, b = (a + b) / 2, t
        pw = pw * 2
        csum = csum + pw * c * c
        if float(np.max(np.abs(c / a))) < 1e-20:
            break
    K = np.longdouble(np.pi) / (a + b)
    E = K * (one - csum)
    return K, E


def direct_velocity_reference(cloud, targets, kcfg, self_indices=None):
    """Direct Biot-Savart sum in extended precision.

    cloud: Cloud; targets: (n, 2) array of (r, z); kcfg: KernelConfig.
    self_indices: per-target source index to exclude (or None / -1).
    Returns (n, 2) float64 array of (u_r, u_z).
    """
    r = cloud.r.astype(np.longdouble)
    z = cloud.z.astype(np.longdouble)
    gam = cloud.gamma.astype(np.longdouble)
    tg = np.asarray(targets, dtype=float)
    n_t = tg.shape[0]
    out = np.empty((n_t, 2))
    delta2 = np.longdouble(kcfg.delta) ** 2
    two_pi = 2 * np.longdouble(np.pi)
    for i in range(n_t):
        ri = np.longdouble(tg[i, 0])
        zi = np.longdouble(tg[i, 1])
        dr = ri - r
        dz = zi - z
        rr = ri * r
        d2 = dr * dr + dz * dz + delta2
        if self_indices is not None and self_indices[i] >= 0:
            keep = np.arange(r.size) != self_indices[i]
            dr, dz, rr, d2, rj, g = dr[keep], dz[keep], rr[keep], d2[keep], r[keep], gam[keep]
        else:
            rj, g = r, gam
        if np.any(d2 == 0):
            raise ZeroDivisionError("coincident target and source with delta = 0")
        sigma = d2 / rr
        u = sigma / (sigma + 4)
        K, E = _ke_agm_longdouble(u)
        k = np.sqrt(4 / (sigma + 4))
        f1 = k / 4 * ((1 + u) * E / u - 2 * K)
        f2 = k / 2 * (K - E)
        a = f1 / (ri * np.sqrt(rr))
        ur_terms = a * dz * g / two_pi
        uz_terms = (f2 * np.sqrt(rj) / ri ** np.longdouble(1.5) - a * dr) * g / two_pi
        out[i, 0] = float(_neumaier(ur_terms))
        out[i, 1] = float(_neumaier(uz_terms))
    return out


def _neumaier(terms):
    s = np.longdouble(0.0)
    comp = np.longdouble(0.0)
    for t in terms:
        tot = s + t
        if abs(s) >= abs(t):
            comp += (s - tot) + t
        else:
            comp += (t - tot) + s
        s = tot
    return s + comp
