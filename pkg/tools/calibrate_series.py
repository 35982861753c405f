"""Regenerate src/ringlab/_series.py: correction constants for the kernel branches.

The small-argument branches of F, F1, F2 are written as the printed leading
expansions plus correction terms in u = sigma/(sigma+4):

    F(sigma) = (L - 2)            + u*(aL + b) + u^2*(cL + d)
    F1(s)    = 1/(4u) + 1/16 - (3/8)L + u*(aL + b) + u^2*(cL + d)
    F2(s)    = (L - 1)/2          + u*(aL + b) + u^2*(cL + d)

with L = log(4) - log(u)/2.  The leading u-coefficients are analytic
(3/4, -3/4 | 15/64, -29/256 | -3/8, 1/4); the u^2 pairs are calibrated by
least squares against 40-digit evaluations of the exact elliptic-integral
closed forms, which absorbs the truncated O(u^3 log u) tail.  Run:

    python tools/calibrate_series.py > src/ringlab/_series.py
"""

import numpy as np
import mpmath as mp

mp.mp.dps = 40


def exact_F(sigma):
    sigma = mp.mpf(sigma)
    k2 = 4 / (sigma + 4)
    k = mp.sqrt(k2)
    return (2 / k - k) * mp.ellipk(k2) - (2 / k) * mp.ellipe(k2)


def exact_F1(s):
    s = mp.mpf(s)
    sigma = s * s
    u = sigma / (sigma + 4)
    k2 = 4 / (sigma + 4)
    k = mp.sqrt(k2)
    return (k / 4) * ((2 - k2) * mp.ellipe(k2) / u - 2 * mp.ellipk(k2))


def exact_F2(s):
    s = mp.mpf(s)
    sigma = s * s
    k2 = 4 / (sigma + 4)
    k = mp.sqrt(k2)
    return k * (mp.ellipk(k2) - mp.ellipe(k2)) / 2


LEAD = {
    "F": (mp.mpf(3) / 4, -mp.mpf(3) / 4),
    "F1": (mp.mpf(15) / 64, -mp.mpf(29) / 256),
    "F2": (-mp.mpf(3) / 8, mp.mpf(1) / 4),
}


def residual(name, u):
    sigma = 4 * u / (1 - u)
    L = mp.log(4) - mp.log(u) / 2
    a, b = LEAD[name]
    if name == "F":
        base = (L - 2) + u * (a * L + b)
        val = exact_F(sigma)
    elif name == "F1":
        base = 1 / (4 * u) + mp.mpf(1) / 16 - mp.mpf(3) / 8 * L + u * (a * L + b)
        val = exact_F1(mp.sqrt(sigma))
    else:
        base = (L - 1) / 2 + u * (a * L + b)
        val = exact_F2(mp.sqrt(sigma))
    return val - base


def calibrate(name):
    us = np.geomspace(1e-7, 3e-3, 60)
    A, y = [], []
    for uf in us:
        u = mp.mpf(uf)
        L = mp.log(4) - mp.log(u) / 2
        A.append([float(u * u * L), float(u * u), float(u ** 3 * L), float(u ** 3)])
        y.append(float(residual(name, u)))
    coef, *_ = np.linalg.lstsq(np.array(A), np.array(y), rcond=None)
    return coef


def max_rel_err(name, coef):
    worst = 0.0
    for uf in np.geomspace(1e-7, 4e-3, 25):
        u = mp.mpf(uf)
        sigma = 4 * u / (1 - u)
        L = mp.log(4) - mp.log(u) / 2
        a, b = LEAD[name]
        c2l, c2, c3l, c3 = (mp.mpf(v) for v in coef)
        corr = u * (a * L + b) + u * u * (c2l * L + c2) + u ** 3 * (c3l * L + c3)
        if name == "F":
            approx = (L - 2) + corr
            val = exact_F(sigma)
        elif name == "F1":
            approx = 1 / (4 * u) + mp.mpf(1) / 16 - mp.mpf(3) / 8 * L + corr
            val = exact_F1(mp.sqrt(sigma))
        else:
            approx = (L - 1) / 2 + corr
            val = exact_F2(mp.sqrt(sigma))
        worst = max(worst, abs(float((approx - val) / val)))
    return worst


def main():
    print('"""Correction constants for the small-argument kernel branches.')
    print()
    print("Generated by tools/calibrate_series.py against 40-digit elliptic-integral")
    print('values; do not edit by hand.  See that script for the series layout."""')
    print()
    for name in ("F", "F1", "F2"):
        coef = calibrate(name)
        err = max_rel_err(name, coef)
        a, b = LEAD[name]
        print(f"# max relative error {err:.2e} on u in [1e-7, 4e-3]")
        print(f"{name}_U1_LOG = {float(a)!r}")
        print(f"{name}_U1 = {float(b)!r}")
        print(f"{name}_U2_LOG = {float(coef[0])!r}")
        print(f"{name}_U2 = {float(coef[1])!r}")
        print(f"{name}_U3_LOG = {float(coef[2])!r}")
        print(f"{name}_U3 = {float(coef[3])!r}")
        print()


if __name__ == "__main__":
    main()
