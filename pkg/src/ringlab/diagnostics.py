"""Every functional the ring theorems quantify: moments, energies,
concentration center and leakage, the moving-frame barrier, tagged
barycenters, support diameters, speed fits, and the filament-thickness
proxy.

All diagnostics are pure read-only passes over a frozen cloud.  Empirical
constants extracted from time series (speed offset, barrier slope, growth
slopes, leakage envelopes) are reported, never asserted here; the
acceptance suite applies the tolerances.
"""

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from . import _fast
from .cloud import Cloud, TAG_DIFFUSE, TAG_IDS
from .kernels import KernelConfig, KernelDomainError, KernelPoint


class EmptySelectionError(ValueError):
    """Tag filter selected no particles."""


class EmptyBandError(ValueError):
    """No tagged particles inside the requested z band."""


class InsufficientSamplesError(ValueError):
    """Too few samples remain after transient trimming."""


@dataclass
class DiagnosticsRecord:
    """One time-stamped row of monitored functionals.  NaN marks
    quantities that do not apply to the run (e.g. zbar_d without tags)."""

    t: float
    m0: float
    m2: float
    energy_e: float
    energy_e1: float
    center_r: float
    center_z: float
    leak_plain: float
    leak_weighted: float
    a_t: float
    zbar_d: float
    diam_z_all: float
    diam_z_tagged: float
    pair_conc: float
    v_kh: float
    thickness_proxy: float


CSV_COLUMNS = [f.name for f in fields(DiagnosticsRecord)]


def moments(c: Cloud):
    """(M0, M2) by compensated summation in particle order."""
    if c.n == 0:
        return 0.0, 0.0
    return math.fsum(c.gamma), math.fsum(c.gamma * c.r * c.r)


def energy_E(c: Cloud, kcfg: KernelConfig) -> float:
    """Discrete kernel energy with delta-blob self-terms.

    E = sum_{j != k} sqrt(r_j r_k)/(2 pi) F(s2_jk) G_j G_k
      + sum_j r_j/(2 pi) F(delta^2/r_j^2) G_j^2,
    s2_jk = (|x_j - x_k|^2 + delta^2)/(r_j r_k).
    """
    if kcfg.delta <= 0.0:
        raise KernelDomainError("discrete energy requires delta > 0")
    if c.n == 0:
        return 0.0
    return float(_fast.energy_pairs(c.r, c.z, c.gamma, kcfg.delta ** 2))


def energy_E1(c: Cloud, kcfg: KernelConfig) -> float:
    """Truncated log-kernel energy over pairs with |x_j - x_k| <= 1,
    log distance regularized by delta; self-pairs contribute log(1/delta)."""
    if kcfg.delta <= 0.0:
        raise KernelDomainError("discrete E1 requires delta > 0")
    if c.n == 0:
        return 0.0
    return float(_fast.e1_pairs(c.r, c.z, c.gamma, kcfg.delta ** 2))


def pair_concentration(c: Cloud, R: float) -> float:
    """sum over pairs separated by at least R*epsilon of (1 + r^2) G G'."""
    if R < 1.0:
        raise ValueError("pair concentration requires R >= 1")
    if c.n == 0:
        return 0.0
    return float(_fast.pair_concentration_pairs(c.r, c.z, c.gamma,
                                                R * c.epsilon))


def find_center(c: Cloud, rho: float):
    """Concentration center x* and the leakage outside B(x*, rho).

    Candidates are the particles of the 64 heaviest (rho/2)-bins; x*
    maximizes in-ball plain mass, ties broken by smaller |r - r0| then
    smaller z then seed order.  Returns (KernelPoint, leak_plain,
    leak_weighted).
    """
    if c.n == 0:
        raise EmptySelectionError("empty cloud has no center")
    size = rho / 2.0
    ir = np.floor(c.r / size).astype(np.int64)
    iz = np.floor(c.z / size).astype(np.int64)
    # pack bin coordinates; offset to keep them nonnegative
    key = (ir - ir.min()) * (iz.max() - iz.min() + 1) + (iz - iz.min())
    uniq, inv = np.unique(key, return_inverse=True)
    mass = np.bincount(inv, weights=c.gamma)
    heavy = np.argsort(-mass, kind="stable")[:64]
    cand = np.flatnonzero(np.isin(inv, heavy))
    masses = _fast.ball_masses(c.r[cand], c.z[cand], c.r, c.z, c.gamma, rho)
    order = sorted(range(cand.size),
                   key=lambda i: (-masses[i], abs(c.r[cand[i]] - c.r0),
                                  c.z[cand[i]], cand[i]))
    best = cand[order[0]]
    xstar = KernelPoint(float(c.r[best]), float(c.z[best]))
    d2 = (c.r - xstar.r) ** 2 + (c.z - xstar.z) ** 2
    outside = d2 > rho * rho
    leak_plain = float(math.fsum(c.gamma[outside]))
    leak_weighted = float(math.fsum(((1.0 + c.r ** 2) * c.gamma)[outside]))
    return xstar, leak_plain, leak_weighted


def weighted_axial_moment(c: Cloud, V: float) -> float:
    """A = sum_j sqrt(1 + (z_j - V t)^2) r_j^2 Gamma_j at the cloud clock."""
    if c.n == 0:
        return 0.0
    zz = c.z - V * c.time
    return float(math.fsum(np.sqrt(1.0 + zz * zz) * c.r ** 2 * c.gamma))


def barycenter_z(c: Cloud, tags=None) -> float:
    """Gamma-weighted mean z over the tag selection."""
    idx = c.tagged_indices(tags)
    if idx.size == 0:
        raise EmptySelectionError(f"no particles with tags {tags}")
    mass = math.fsum(c.gamma[idx])
    if mass == 0.0:
        raise EmptySelectionError("selected particles carry no mass")
    return float(math.fsum(c.gamma[idx] * c.z[idx]) / mass)


def diam_z(c: Cloud, tags=None) -> float:
    """Axial support diameter max z - min z over the tag selection."""
    idx = c.tagged_indices(tags)
    if idx.size == 0:
        raise EmptySelectionError(f"no particles with tags {tags}")
    zs = c.z[idx]
    return float(zs.max() - zs.min())


def kelvin_hicks_speed(mu: float, r0: float, eps: float) -> float:
    """Leading-order thin-ring translation speed mu |log eps| / (4 pi r0)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if r0 <= 0.0 or mu < 0.0:
        raise ValueError("require r0 > 0 and mu >= 0")
    return mu * abs(math.log(eps)) / (4.0 * math.pi * r0)


def fit_speed(series: Sequence, trim: float = 0.1):
    """Least-squares slope of (t, z*) after dropping the first `trim`
    fraction of the horizon.  Returns (slope, max_abs_residual)."""
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be (n, 2) pairs of (t, value)")
    t = arr[:, 0]
    v = arr[:, 1]
    t0, t1 = t.min(), t.max()
    keep = t >= t0 + trim * (t1 - t0)
    t, v = t[keep], v[keep]
    if t.size < 8:
        raise InsufficientSamplesError(
            f"need >= 8 samples after transient trim, have {t.size}")
    A = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = np.max(np.abs(A @ np.array([slope, intercept]) - v))
    return float(slope), float(resid)


def filament_thickness(c: Cloud, tags, band, slices: int = 8) -> float:
    """Minimum over populated z-slices of the tagged radial extent.

    band = (z_lo, z_hi) is partitioned into `slices` equal slices; per
    slice the extent is max r - min r of the selected particles.
    """
    z_lo, z_hi = band
    if not z_hi > z_lo:
        raise ValueError("band must have positive width")
    idx = c.tagged_indices(tags)
    zs = c.z[idx]
    inside = (zs >= z_lo) & (zs <= z_hi)
    if not np.any(inside):
        raise EmptyBandError("no tagged particles in the band")
    idx = idx[inside]
    which = np.minimum(((c.z[idx] - z_lo) / (z_hi - z_lo) * slices).astype(int),
                       slices - 1)
    best = math.inf
    for s in range(slices):
        sel = idx[which == s]
        if sel.size:
            best = min(best, float(c.r[sel].max() - c.r[sel].min()))
    return best


# ----------------------------------------------------------------------
# record assembly and run-level fits
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsConfig:
    """What the per-sample record monitors.  rho and pair_R default to the
    concentration scales sqrt(eps) and eps^{-1/2}."""

    rho: Optional[float] = None
    pair_R: Optional[float] = None
    thickness_tags: tuple = ("diffuse_d",)
    thickness_halfwidth: float = 0.3
    thickness_slices: int = 8
    zbar_tags: tuple = ("diffuse_d",)
    diam_tags: tuple = ("core_m", "diffuse_d")

    def rho_for(self, eps: float) -> float:
        return math.sqrt(eps) if self.rho is None else self.rho

    def pair_R_for(self, eps: float) -> float:
        return 1.0 / math.sqrt(eps) if self.pair_R is None else self.pair_R


def compute_record(c: Cloud, kcfg: KernelConfig,
                   dcfg: DiagnosticsConfig = DiagnosticsConfig()) -> DiagnosticsRecord:
    m0, m2 = moments(c)
    e = energy_E(c, kcfg)
    e1 = energy_E1(c, kcfg)
    rho = dcfg.rho_for(c.epsilon)
    xstar, leak_p, leak_w = find_center(c, rho)
    v_kh = kelvin_hicks_speed(c.mu, c.r0, c.epsilon)
    a_t = weighted_axial_moment(c, v_kh)
    pc = pair_concentration(c, dcfg.pair_R_for(c.epsilon))

    has_tags = bool(np.any(c.tag != 0))
    zbar = float("nan")
    diam_tag = float("nan")
    thick = float("nan")
    if has_tags:
        try:
            zbar = barycenter_z(c, dcfg.zbar_tags)
        except EmptySelectionError:
            pass
        try:
            diam_tag = diam_z(c, dcfg.diam_tags)
        except EmptySelectionError:
            pass
        try:
            zc = zbar if math.isfinite(zbar) else xstar.z
            band = (zc - dcfg.thickness_halfwidth, zc + dcfg.thickness_halfwidth)
            thick = filament_thickness(c, dcfg.thickness_tags, band,
                                       dcfg.thickness_slices)
        except (EmptyBandError, EmptySelectionError):
            pass
    return DiagnosticsRecord(
        t=c.time, m0=m0, m2=m2, energy_e=e, energy_e1=e1,
        center_r=xstar.r, center_z=xstar.z,
        leak_plain=leak_p, leak_weighted=leak_w, a_t=a_t, zbar_d=zbar,
        diam_z_all=diam_z(c), diam_z_tagged=diam_tag, pair_conc=pc,
        v_kh=v_kh, thickness_proxy=thick)


def fits_from_records(records, eps: float, r0: float = 1.0,
                      trim: float = 0.1) -> dict:
    """Empirical constants from a time series of records (reported, not
    asserted): speed slope and offset, barrier slope, tagged-barycenter
    slope, diameter growth slope, leakage/radial-lock envelopes, and the
    thickness * diameter product range."""
    logeps = abs(math.log(eps))
    t = np.array([rec.t for rec in records])
    out = {"eps": eps, "v_kh": records[0].v_kh, "n_samples": len(records)}

    def series(name):
        return np.column_stack([t, [getattr(rec, name) for rec in records]])

    if len(records) >= 10 and t.max() > t.min():
        slope, resid = fit_speed(series("center_z"), trim)
        out["speed"] = {"slope": slope, "max_residual": resid,
                        "offset": slope - records[0].v_kh}
        a_slope, a_resid = fit_speed(series("a_t"), trim)
        out["a_moment"] = {"slope": a_slope, "max_residual": a_resid}
        d_all, _ = fit_speed(series("diam_z_all"), trim)
        out["diam_z_all"] = {"slope": d_all, "per_v_kh": d_all / records[0].v_kh}
        if all(math.isfinite(rec.zbar_d) for rec in records):
            zb, _ = fit_speed(series("zbar_d"), trim)
            out["zbar_d"] = {"slope": zb, "per_v_kh": zb / records[0].v_kh}
        if all(math.isfinite(rec.diam_z_tagged) for rec in records):
            dt_, _ = fit_speed(series("diam_z_tagged"), trim)
            out["diam_z_tagged"] = {"slope": dt_,
                                    "per_v_kh": dt_ / records[0].v_kh}

    leak_w = max(rec.leak_weighted for rec in records)
    r_gap = max(abs(rec.center_r - r0) for rec in records)
    out["concentration"] = {
        "max_leak_weighted": leak_w,
        "max_r_gap": r_gap,
        "envelope_C": max(leak_w, r_gap) * logeps,
    }
    out["pair_concentration"] = {
        "max_value": max(rec.pair_conc for rec in records)}
    prods = [rec.thickness_proxy * rec.diam_z_tagged for rec in records
             if math.isfinite(rec.thickness_proxy) and math.isfinite(rec.diam_z_tagged)]
    if prods:
        out["thickness"] = {"product_min": min(prods), "product_max": max(prods),
                            "product_ratio": max(prods) / min(prods) if min(prods) > 0 else float("inf")}
    conservation = {
        "m0_drift": max(abs(rec.m0 - records[0].m0) for rec in records),
        "m2_rel_drift": max(abs(rec.m2 - records[0].m2) for rec in records)
        / abs(records[0].m2) if records[0].m2 else 0.0,
        "e_rel_drift": max(abs(rec.energy_e - records[0].energy_e) for rec in records)
        / abs(records[0].energy_e) if records[0].energy_e else 0.0,
    }
    out["conservation"] = conservation
    return out
