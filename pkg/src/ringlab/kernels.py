"""Scalar kernels F, F1, F2 of the axisymmetric Biot-Savart law, and the
half-plane kernel K(x, x') assembled from them.

The three kernels are one-dimensional integrals over the azimuthal angle:

    F(sigma) = int_0^pi cos(a) / (sigma + 2 - 2 cos a)^{1/2} da
    F1(s)    = int_0^pi cos(a) / (s^2 + 2 - 2 cos a)^{3/2} da
    F2(s)    = int_0^pi (1 - cos a) / (s^2 + 2 - 2 cos a)^{3/2} da

where s = |x - x'| / sqrt(r r') is the similarity variable (F is evaluated
at s^2 by energy code).  All three reduce to complete elliptic integrals
with parameter m = 4/(sigma + 4); `f_exact`, `f1_exact`, `f2_exact` use
that reduction and are accurate to a few ulp.  `eval_F`, `eval_F1`,
`eval_F2` are the branch-structured evaluators: a small-argument expansion
below `s_lo` (leading terms as printed in the standard kernel estimates,
plus calibrated corrections, see _series.py), adaptive quadrature in the
middle, and a far-field series above `s_hi`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _series

LOG4 = math.log(4.0)
LOG8 = math.log(8.0)
TWO_PI = 2.0 * math.pi


class KernelDomainError(ValueError):
    """Argument outside the kernel's domain (s <= 0, or r <= 0)."""


class KernelSingularityError(ValueError):
    """Coincident points with delta = 0."""


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class KernelPoint:
    """Point x = (r, z) in the open half-plane r > 0."""

    r: float
    z: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise KernelDomainError(f"half-plane requires r > 0, got r={self.r}")


@dataclass(frozen=True)
class KernelConfig:
    """Evaluation policy for the scalar kernels plus blob regularization.

    s_lo, s_hi bound the quadrature branch; delta is the blob length that
    regularizes |x - x'|^2 to |x - x'|^2 + delta^2 inside s.
    """

    s_lo: float = 1e-3
    s_hi: float = 1e2
    quad_tol: float = 1e-10
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.s_lo < self.s_hi:
            raise ValueError("require 0 < s_lo < s_hi")
        if not 0.0 < self.quad_tol <= 1e-6:
            raise ValueError("quad_tol must lie in (0, 1e-6]")
        if self.delta < 0.0:
            raise ValueError("delta must be >= 0")


@dataclass(frozen=True)
class KernelValue:
    """Kernel components K = (k_r, k_z)."""

    k_r: float
    k_z: float


# ----------------------------------------------------------------------
# exact closed forms (vectorized, used by diagnostics and as quadrature-
# branch backends never are -- the quadrature branch integrates directly)
# ----------------------------------------------------------------------

def f_exact(sigma):
    """F(sigma) via complete elliptic integrals; sigma > 0, array ok."""
    sigma = np.asarray(sigma, dtype=float)
    m1 = sigma / (sigma + 4.0)
    k2 = 4.0 / (sigma + 4.0)
    k = np.sqrt(k2)
    K = special.ellipkm1(m1)
    E = special.ellipe(k2)
    return (2.0 / k - k) * K - (2.0 / k) * E


def f1_exact(s):
    """F1(s) via complete elliptic integrals; inaccurate beyond s ~ 1e2
    (leading terms cancel), the far series takes over there."""
    s = np.asarray(s, dtype=float)
    sigma = s * s
    u = sigma / (sigma + 4.0)
    k2 = 4.0 / (sigma + 4.0)
    k = np.sqrt(k2)
    K = special.ellipkm1(u)
    E = special.ellipe(k2)
    return 0.25 * k * ((2.0 - k2) * E / u - 2.0 * K)


def f2_exact(s):
    """F2(s) via complete elliptic integrals."""
    s = np.asarray(s, dtype=float)
    sigma = s * s
    u = sigma / (sigma + 4.0)
    k2 = 4.0 / (sigma + 4.0)
    k = np.sqrt(k2)
    K = special.ellipkm1(u)
    E = special.ellipe(k2)
    return 0.5 * k * (K - E)


# ----------------------------------------------------------------------
# small-argument branch: leading printed expansion + calibrated corrections
# ----------------------------------------------------------------------

def _small_F(sigma):
    u = sigma / (sigma + 4.0)
    L = LOG4 - 0.5 * math.log(u)
    return (
        (L - 2.0)
        + u * (_series.F_U1_LOG * L + _series.F_U1)
        + u * u * (_series.F_U2_LOG * L + _series.F_U2)
        + u ** 3 * (_series.F_U3_LOG * L + _series.F_U3)
    )


def _small_F1(s):
    u = s * s / (s * s + 4.0)
    L = LOG4 - 0.5 * math.log(u)
    return (
        0.25 / u
        + 0.0625
        - 0.375 * L
        + u * (_series.F1_U1_LOG * L + _series.F1_U1)
        + u * u * (_series.F1_U2_LOG * L + _series.F1_U2)
        + u ** 3 * (_series.F1_U3_LOG * L + _series.F1_U3)
    )


def _small_F2(s):
    u = s * s / (s * s + 4.0)
    L = LOG4 - 0.5 * math.log(u)
    return (
        0.5 * (L - 1.0)
        + u * (_series.F2_U1_LOG * L + _series.F2_U1)
        + u * u * (_series.F2_U2_LOG * L + _series.F2_U2)
        + u ** 3 * (_series.F2_U3_LOG * L + _series.F2_U3)
    )


# ----------------------------------------------------------------------
# far branch: expand (sigma + 2 - 2cos a)^{-p} in (2 - 2cos a)/sigma and
# integrate term by term.  Angular moments are exact:
#   int cos(a) (2-2cos a)^k da   = -pi * k/(k+1) * C(2k, k)
#   int (1-cos a) (2-2cos a)^k da =  pi * C(2k+2, k+1) / 2
# ----------------------------------------------------------------------

_FAR_TERMS = 10


def _far_coeffs():
    binom = math.comb
    cF, cF1, cF2 = [], [], []
    for k in range(_FAR_TERMS):
        mk = -k / (k + 1.0) * binom(2 * k, k)          # cos moment / pi
        nk = binom(2 * k + 2, k + 1) / 2.0             # (1-cos) moment / pi
        b_half = (-0.25) ** k * binom(2 * k, k)        # C(-1/2, k) / 2^k -> in x=1/sigma units
        # C(-1/2,k) = (-1)^k C(2k,k)/4^k ; C(-3/2,k) = (-1)^k (2k+1) C(2k,k)/4^k
        b_3half = (-0.25) ** k * (2 * k + 1) * binom(2 * k, k)
        cF.append(b_half * mk)
        cF1.append(b_3half * mk)
        cF2.append(b_3half * nk)
    return np.array(cF), np.array(cF1), np.array(cF2)


_CF, _CF1, _CF2 = _far_coeffs()


def _far_F(sigma):
    y = 1.0 / sigma
    acc = 0.0
    for c in _CF[::-1]:
        acc = acc * y + c
    return math.pi * acc / math.sqrt(sigma)


def _far_F1(s):
    y = 1.0 / (s * s)
    acc = 0.0
    for c in _CF1[::-1]:
        acc = acc * y + c
    return math.pi * acc * y / s


def _far_F2(s):
    y = 1.0 / (s * s)
    acc = 0.0
    for c in _CF2[::-1]:
        acc = acc * y + c
    return math.pi * acc * y / s


# ----------------------------------------------------------------------
# quadrature branch
# ----------------------------------------------------------------------

def _quad_branch(integrand, s_scale, tol):
    """Gauss-Kronrod integration over a in [0, pi].

    For small s the integrand peaks in a layer of width ~s near a = 0; the
    substitution a = s sinh(v) flattens the layer onto an O(log 1/s)
    interval with O(1) derivatives, and the tail [1, pi] is integrated
    directly.
    """
    if s_scale < 0.05:
        s = s_scale

        def g(v):
            return integrand(s * math.sinh(v)) * s * math.cosh(v)

        v1, e1 = integrate.quad(g, 0.0, math.asinh(1.0 / s), epsabs=0.0,
                                epsrel=tol, limit=200)
        v2, e2 = integrate.quad(integrand, 1.0, math.pi, epsabs=0.0,
                                epsrel=tol, limit=200)
        val, err = v1 + v2, e1 + e2
    else:
        val, err = integrate.quad(integrand, 0.0, math.pi, epsabs=0.0,
                                  epsrel=tol, limit=200)
    if not math.isfinite(val) or (val != 0.0 and err > 10.0 * tol * abs(val)
                                  and err > 1e-13):
        raise QuadratureBudgetError(
            f"quadrature did not converge: value={val}, err={err}")
    return val


def eval_F(s: float, cfg: KernelConfig = KernelConfig()) -> float:
    """F evaluated at its own argument (callers pass s^2 for the energy)."""
    if s <= 0.0:
        raise KernelDomainError("F requires a positive argument")
    if s < cfg.s_lo:
        return _small_F(s)
    if s > cfg.s_hi:
        return _far_F(s)
    return _quad_branch(
        lambda a: math.cos(a) / math.sqrt(s + 4.0 * math.sin(0.5 * a) ** 2),
        math.sqrt(s), cfg.quad_tol)


def eval_F1(s: float, cfg: KernelConfig = KernelConfig()) -> float:
    if s <= 0.0:
        raise KernelDomainError("F1 requires s > 0")
    if s < cfg.s_lo:
        return _small_F1(s)
    if s > cfg.s_hi:
        return _far_F1(s)
    return _quad_branch(
        lambda a: math.cos(a) / (s * s + 4.0 * math.sin(0.5 * a) ** 2) ** 1.5,
        s, cfg.quad_tol)


def eval_F2(s: float, cfg: KernelConfig = KernelConfig()) -> float:
    if s <= 0.0:
        raise KernelDomainError("F2 requires s > 0")
    if s < cfg.s_lo:
        return _small_F2(s)
    if s > cfg.s_hi:
        return _far_F2(s)
    return _quad_branch(
        lambda a: 2.0 * math.sin(0.5 * a) ** 2
        / (s * s + 4.0 * math.sin(0.5 * a) ** 2) ** 1.5,
        s, cfg.quad_tol)


def branch_of(s: float, cfg: KernelConfig = KernelConfig()) -> str:
    """Which branch eval_F* uses at argument s."""
    if s < cfg.s_lo:
        return "small"
    if s > cfg.s_hi:
        return "far"
    return "quad"


# ----------------------------------------------------------------------
# assembled kernel
# ----------------------------------------------------------------------

def biot_savart_kernel(x: KernelPoint, xp: KernelPoint,
                       cfg: KernelConfig = KernelConfig()) -> KernelValue:
    """K(x, x') = F1(s)/(2 pi) (x-x')^perp / (r sqrt(rr'))
                 + F2(s)/(2 pi) sqrt(r'/r) / r e_z,

    with (x-x')^perp = (z - z', -(r - r')) and the blob-regularized
    s = sqrt(|x-x'|^2 + delta^2) / sqrt(r r').  Uses the exact elliptic
    closed forms (machine precision; they agree with the quadrature branch
    of eval_F1/eval_F2 to the quadrature tolerance).
    """
    dr = x.r - xp.r
    dz = x.z - xp.z
    d2 = dr * dr + dz * dz + cfg.delta * cfg.delta
    if d2 == 0.0:
        raise KernelSingularityError("coincident points with delta = 0")
    rr = x.r * xp.r
    sigma = d2 / rr
    if sigma > 1e4:
        f1 = _far_F1(math.sqrt(sigma))
        f2 = _far_F2(math.sqrt(sigma))
    else:
        f1 = float(f1_exact(math.sqrt(sigma)))
        f2 = float(f2_exact(math.sqrt(sigma)))
    a = f1 / (x.r * math.sqrt(rr) * TWO_PI)
    k_r = a * dz
    k_z = -a * dr + f2 * math.sqrt(xp.r) / (x.r ** 1.5 * TWO_PI)
    return KernelValue(k_r=k_r, k_z=k_z)
