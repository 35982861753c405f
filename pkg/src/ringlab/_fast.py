"""Numba hot paths: pairwise kernel sums, fused RK time stepping, treecode walk.

Array-centric and object-free so the integrator can run long step sequences
without returning to Python.  The scalar kernel here mirrors kernels.py:
small-argument series below U_LO, AGM elliptic integrals in the middle,
far series above SIG_HI; agreement with the exact closed forms is covered
by the kernel test suite.
"""

import numpy as np
from numba import njit, prange

from . import _series

LOG4 = np.log(4.0)
TWO_PI = 2.0 * np.pi

U_LO = 1.1e-4      # small-argument series below this u = sigma/(sigma+4)
SIG_HI = 100.0     # far series above this sigma = s^2

F_C = (_series.F_U1_LOG, _series.F_U1, _series.F_U2_LOG, _series.F_U2,
       _series.F_U3_LOG, _series.F_U3)
F1_C = (_series.F1_U1_LOG, _series.F1_U1, _series.F1_U2_LOG, _series.F1_U2,
        _series.F1_U3_LOG, _series.F1_U3)
F2_C = (_series.F2_U1_LOG, _series.F2_U1, _series.F2_U2_LOG, _series.F2_U2,
        _series.F2_U3_LOG, _series.F2_U3)

def _init_far():
    from math import comb
    f = np.zeros(10)
    f1 = np.zeros(10)
    f2 = np.zeros(10)
    for k in range(10):
        mk = -k / (k + 1.0) * comb(2 * k, k)
        nk = comb(2 * k + 2, k + 1) / 2.0
        b_half = (-0.25) ** k * comb(2 * k, k)
        b_3half = (-0.25) ** k * (2 * k + 1) * comb(2 * k, k)
        f[k] = b_half * mk
        f1[k] = b_3half * mk
        f2[k] = b_3half * nk
    return f, f1, f2


_FAR_F, _FAR_F1, _FAR_F2 = _init_far()


@njit(cache=True, inline="always")
def _ke_agm(u):
    """K(m), E(m) for m1 = 1 - m = u via the arithmetic-geometric mean.

    E/K = 1 - sum_n 2^{n-1} c_n^2 with c_0^2 = m = 1 - u."""
    a = 1.0
    b = np.sqrt(u)
    csum = 0.5 * (1.0 - u)
    pw = 0.5
    for _ in range(14):
        c = 0.5 * (a - b)
        t = np.sqrt(a * b)
        a, b = 0.5 * (a + b), t
        pw *= 2.0
        csum += pw * c * c
        if c < 1e-17 * a:
            break
    K = np.pi / (a + b)
    return K, K * (1.0 - csum)


@njit(cache=True, inline="always")
def f1f2_sigma(sigma, inv_sigma):
    """(F1, F2) at s = sqrt(sigma); inv_sigma passed to spare a division."""
    if sigma > SIG_HI:
        y = inv_sigma
        a1 = 0.0
        a2 = 0.0
        for i in range(9, 0, -1):
            a1 = (a1 + _FAR_F1[i]) * y
            a2 = (a2 + _FAR_F2[i]) * y
        a2 += _FAR_F2[0]
        s3 = y / np.sqrt(sigma)
        return np.pi * s3 * a1, np.pi * s3 * a2
    u = sigma / (sigma + 4.0)
    if u < U_LO:
        L = LOG4 - 0.5 * np.log(u)
        f1 = (0.25 + inv_sigma) + 0.0625 - 0.375 * L \
            + u * (F1_C[0] * L + F1_C[1]) \
            + u * u * (F1_C[2] * L + F1_C[3]) \
            + u * u * u * (F1_C[4] * L + F1_C[5])
        f2 = 0.5 * (L - 1.0) \
            + u * (F2_C[0] * L + F2_C[1]) \
            + u * u * (F2_C[2] * L + F2_C[3]) \
            + u * u * u * (F2_C[4] * L + F2_C[5])
        return f1, f2
    K, E = _ke_agm(u)
    k = np.sqrt(4.0 / (sigma + 4.0))
    f1 = 0.25 * k * ((1.0 + u) * E / u - 2.0 * K)
    f2 = 0.5 * k * (K - E)
    return f1, f2


@njit(cache=True, inline="always")
def f_sigma(sigma):
    """Energy kernel F at argument sigma."""
    if sigma > SIG_HI:
        y = 1.0 / sigma
        acc = 0.0
        for i in range(9, 0, -1):
            acc = (acc + _FAR_F[i]) * y
        return np.pi * acc / np.sqrt(sigma)
    u = sigma / (sigma + 4.0)
    if u < U_LO:
        L = LOG4 - 0.5 * np.log(u)
        return (L - 2.0) + u * (F_C[0] * L + F_C[1]) \
            + u * u * (F_C[2] * L + F_C[3]) \
            + u * u * u * (F_C[4] * L + F_C[5])
    K, E = _ke_agm(u)
    k = np.sqrt(4.0 / (sigma + 4.0))
    return (2.0 / k - k) * K - (2.0 / k) * E


# ----------------------------------------------------------------------
# direct summation
# ----------------------------------------------------------------------

@njit(cache=True, parallel=True)
def velocity_targets(rt, zt, self_idx, r, z, gam, sqrt_r, delta2, ur, uz):
    """u at targets (rt, zt); self_idx[i] >= 0 excludes that source index.

    Per-target summation runs in fixed source order (deterministic);
    parallelism is across targets only.
    """
    n_t = rt.size
    n_s = r.size
    for i in prange(n_t):
        ri = rt[i]
        zi = zt[i]
        si = self_idx[i]
        inv_ri = 1.0 / ri
        pref = inv_ri * np.sqrt(inv_ri)
        sur = 0.0
        suz = 0.0
        for j in range(n_s):
            if j == si:
                continue
            rj = r[j]
            dr = ri - rj
            dz = zi - z[j]
            rr = ri * rj
            d2 = dr * dr + dz * dz + delta2
            f1, f2 = f1f2_sigma(d2 / rr, rr / d2)
            a = f1 * inv_ri / np.sqrt(rr)
            g = gam[j]
            sur += a * dz * g
            suz += (f2 * sqrt_r[j] * pref - a * dr) * g
        ur[i] = sur / TWO_PI
        uz[i] = suz / TWO_PI


@njit(cache=True)
def _self_velocity(r, z, gam, sqrt_r, delta2, ur, uz):
    n = r.size
    idx = np.arange(n)
    velocity_targets(r, z, idx, r, z, gam, sqrt_r, delta2, ur, uz)


# ----------------------------------------------------------------------
# fused time stepping (RK4 / RK2 midpoint), fixed dt per chunk
# ----------------------------------------------------------------------

@njit(cache=True)
def advance_chunk(r, z, gam, delta2, dt, nsteps, rmin, scheme_rk4):
    """Advance nsteps in place.  Returns (status, u_max_last) where status
    is the number of completed steps, or -(k+1) if radius fell below rmin
    during step k."""
    n = r.size
    sq = np.empty(n)
    ur = np.empty(n)
    uz = np.empty(n)
    k1r = np.empty(n)
    k1z = np.empty(n)
    k2r = np.empty(n)
    k2z = np.empty(n)
    k3r = np.empty(n)
    k3z = np.empty(n)
    tr = np.empty(n)
    tz = np.empty(n)
    u_max = 0.0
    for step in range(nsteps):
        for i in range(n):
            sq[i] = np.sqrt(r[i])
        _self_velocity(r, z, gam, sq, delta2, ur, uz)
        u_max = 0.0
        for i in range(n):
            s = np.hypot(ur[i], uz[i])
            if s > u_max:
                u_max = s
        if scheme_rk4:
            ok = True
            for i in range(n):
                k1r[i] = ur[i]
                k1z[i] = uz[i]
                tr[i] = r[i] + 0.5 * dt * ur[i]
                tz[i] = z[i] + 0.5 * dt * uz[i]
                if tr[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
            for i in range(n):
                sq[i] = np.sqrt(tr[i])
            _self_velocity(tr, tz, gam, sq, delta2, ur, uz)
            ok = True
            for i in range(n):
                k2r[i] = ur[i]
                k2z[i] = uz[i]
                tr[i] = r[i] + 0.5 * dt * ur[i]
                tz[i] = z[i] + 0.5 * dt * uz[i]
                if tr[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
            for i in range(n):
                sq[i] = np.sqrt(tr[i])
            _self_velocity(tr, tz, gam, sq, delta2, ur, uz)
            ok = True
            for i in range(n):
                k3r[i] = ur[i]
                k3z[i] = uz[i]
                tr[i] = r[i] + dt * ur[i]
                tz[i] = z[i] + dt * uz[i]
                if tr[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
            for i in range(n):
                sq[i] = np.sqrt(tr[i])
            _self_velocity(tr, tz, gam, sq, delta2, ur, uz)
            ok = True
            for i in range(n):
                r[i] = r[i] + (dt / 6.0) * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + ur[i])
                z[i] = z[i] + (dt / 6.0) * (k1z[i] + 2.0 * k2z[i] + 2.0 * k3z[i] + uz[i])
                if r[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
        else:
            # midpoint rule
            ok = True
            for i in range(n):
                tr[i] = r[i] + 0.5 * dt * ur[i]
                tz[i] = z[i] + 0.5 * dt * uz[i]
                if tr[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
            for i in range(n):
                sq[i] = np.sqrt(tr[i])
            _self_velocity(tr, tz, gam, sq, delta2, ur, uz)
            ok = True
            for i in range(n):
                r[i] = r[i] + dt * ur[i]
                z[i] = z[i] + dt * uz[i]
                if r[i] < rmin:
                    ok = False
            if not ok:
                return -(step + 1), u_max
    return nsteps, u_max


# ----------------------------------------------------------------------
# pairwise diagnostics
# ----------------------------------------------------------------------

@njit(cache=True)
def energy_pairs(r, z, gam, delta2):
    """E = sum_{j,k} sqrt(r_j r_k)/(2 pi) F(sigma_jk) Gamma_j Gamma_k with
    sigma_jk = (|x_j - x_k|^2 + delta^2)/(r_j r_k); j = k gives the blob
    self-energy F(delta^2/r_j^2)."""
    n = r.size
    total = 0.0
    for j in range(n):
        rj = r[j]
        zj = z[j]
        gj = gam[j]
        acc = 0.0
        for k in range(j, n):
            rk = r[k]
            dr = rj - rk
            dz = zj - z[k]
            rr = rj * rk
            sigma = (dr * dr + dz * dz + delta2) / rr
            t = np.sqrt(rr) * f_sigma(sigma) * gj * gam[k]
            if k == j:
                acc += t
            else:
                acc += 2.0 * t
        total += acc
    return total / TWO_PI


@njit(cache=True)
def e1_pairs(r, z, gam, delta2):
    """Truncated log-kernel energy: pairs with |x_j - x_k| <= 1 contribute
    log(1/sqrt(|x_j-x_k|^2 + delta^2)) sqrt(r_j r_k) Gamma_j Gamma_k."""
    n = r.size
    total = 0.0
    for j in range(n):
        rj = r[j]
        zj = z[j]
        gj = gam[j]
        acc = 0.0
        for k in range(j, n):
            dr = rj - r[k]
            dz = zj - z[k]
            d2 = dr * dr + dz * dz
            if d2 <= 1.0:
                t = -0.5 * np.log(d2 + delta2) * np.sqrt(rj * r[k]) * gj * gam[k]
                if k == j:
                    acc += t
                else:
                    acc += 2.0 * t
        total += acc
    return total / TWO_PI


@njit(cache=True)
def pair_concentration_pairs(r, z, gam, cut):
    """sum over ordered pairs with |x_j - x_k| >= cut of (1 + r_j^2) G_j G_k."""
    n = r.size
    total = 0.0
    cut2 = cut * cut
    for j in range(n):
        rj = r[j]
        zj = z[j]
        w = (1.0 + rj * rj) * gam[j]
        acc = 0.0
        for k in range(n):
            dr = rj - r[k]
            dz = zj - z[k]
            if dr * dr + dz * dz >= cut2:
                acc += gam[k]
        total += w * acc
    return total


@njit(cache=True)
def min_pair_distance(r, z, sel):
    """Minimum pairwise distance among the selected indices."""
    best = np.inf
    m = sel.size
    for a in range(m):
        ia = sel[a]
        for b in range(a + 1, m):
            ib = sel[b]
            dr = r[ia] - r[ib]
            dz = z[ia] - z[ib]
            d2 = dr * dr + dz * dz
            if d2 < best:
                best = d2
    return np.sqrt(best)


@njit(cache=True)
def ball_masses(cand_r, cand_z, r, z, gam, rho):
    """Plain mass inside B(candidate, rho) for each candidate."""
    n_c = cand_r.size
    out = np.empty(n_c)
    rho2 = rho * rho
    for i in range(n_c):
        acc = 0.0
        for j in range(r.size):
            dr = cand_r[i] - r[j]
            dz = cand_z[i] - z[j]
            if dr * dr + dz * dz <= rho2:
                acc += gam[j]
        out[i] = acc
    return out


# ----------------------------------------------------------------------
# treecode evaluation
# ----------------------------------------------------------------------

@njit(cache=True, parallel=True)
def treecode_eval(rt, zt, self_idx, pr, pz, pgam, psqrt_r, inv_perm,
                  bbox, child, prange_arr, cheb_r, cheb_z, cheb_w,
                  theta, delta2, ur, uz):
    """Treecode walk.  Nodes with (diameter / bbox distance) <= theta are
    evaluated through their Chebyshev equivalent weights; others are opened;
    leaves sum directly (self excluded by original particle index)."""
    n_t = rt.size
    n_cheb = cheb_r.shape[1]
    for i in prange(n_t):
        ri = rt[i]
        zi = zt[i]
        si = self_idx[i]
        inv_ri = 1.0 / ri
        pref = inv_ri * np.sqrt(inv_ri)
        sur = 0.0
        suz = 0.0
        stack = np.empty(256, dtype=np.int64)
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            m = stack[top]
            rlo = bbox[m, 0]
            rhi = bbox[m, 1]
            zlo = bbox[m, 2]
            zhi = bbox[m, 3]
            ddr = max(max(rlo - ri, ri - rhi), 0.0)
            ddz = max(max(zlo - zi, zi - zhi), 0.0)
            dist = np.hypot(ddr, ddz)
            er = rhi - rlo
            ez = zhi - zlo
            diam = np.hypot(er, ez)
            if child[m, 0] >= 0 and dist > 0.0 and diam <= theta * dist:
                # far cell: Chebyshev equivalent sources
                for a in range(n_cheb):
                    rj = cheb_r[m, a]
                    rr = ri * rj
                    sq_rj = np.sqrt(rj)
                    for b in range(n_cheb):
                        dr = ri - rj
                        dz = zi - cheb_z[m, b]
                        d2 = dr * dr + dz * dz + delta2
                        f1, f2 = f1f2_sigma(d2 / rr, rr / d2)
                        aa = f1 * inv_ri / np.sqrt(rr)
                        g = cheb_w[m, a * n_cheb + b]
                        sur += aa * dz * g
                        suz += (f2 * sq_rj * pref - aa * dr) * g
            elif child[m, 0] < 0:
                lo = prange_arr[m, 0]
                hi = prange_arr[m, 1]
                for jj in range(lo, hi):
                    if inv_perm[jj] == si:
                        continue
                    rj = pr[jj]
                    dr = ri - rj
                    dz = zi - pz[jj]
                    rr = ri * rj
                    d2 = dr * dr + dz * dz + delta2
                    f1, f2 = f1f2_sigma(d2 / rr, rr / d2)
                    aa = f1 * inv_ri / np.sqrt(rr)
                    g = pgam[jj]
                    sur += aa * dz * g
                    suz += (f2 * psqrt_r[jj] * pref - aa * dr) * g
            else:
                stack[top] = child[m, 0]
                top += 1
                stack[top] = child[m, 1]
                top += 1
        ur[i] = sur / TWO_PI
        uz[i] = suz / TWO_PI
