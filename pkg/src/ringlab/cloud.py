"""Particle clouds: the discrete vorticity field and its generators.

A Cloud stores the particle set as flat arrays (fixed, deterministic
ordering) plus the scenario parameters (epsilon, mu, r0) and the clock.
Circulation weights Gamma and Lagrangian labels xi0 = w0/r are assigned at
seeding and never mutated afterwards; the flow only moves positions.
"""

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

TAG_UNTAGGED = 0
TAG_CORE = 1
TAG_DIFFUSE = 2
TAG_NAMES = {TAG_UNTAGGED: "untagged", TAG_CORE: "core_m", TAG_DIFFUSE: "diffuse_d"}
TAG_IDS = {v: k for k, v in TAG_NAMES.items()}


class EmptyCloudError(ValueError):
    """No admissible particles."""


class AxisOverlapError(ValueError):
    """Initial data support touches the symmetry axis r = 0."""


class ProfileNormalizationError(ValueError):
    """Profile mass deviates from 1 beyond tolerance under the grid rule."""


class DecompositionError(ValueError):
    """Core/diffuse decomposition fails the seeding inequalities."""


class DegenerateMomentError(ValueError):
    """Normalization requires positive M0 and M2."""


@dataclass(frozen=True)
class Particle:
    r: float
    z: float
    gamma: float
    xi0: float
    tag: str


@dataclass
class Cloud:
    """Discrete vorticity field w ~ sum_j Gamma_j delta(x - x_j)."""

    r: np.ndarray
    z: np.ndarray
    gamma: np.ndarray
    xi0: np.ndarray
    tag: np.ndarray
    epsilon: float
    mu: float
    r0: float
    time: float = 0.0

    @property
    def n(self) -> int:
        return self.r.size

    def particle(self, i: int) -> Particle:
        return Particle(float(self.r[i]), float(self.z[i]), float(self.gamma[i]),
                        float(self.xi0[i]), TAG_NAMES[int(self.tag[i])])

    def tagged_indices(self, tags) -> np.ndarray:
        """Indices whose tag is in `tags` (names or ids); None selects all."""
        if tags is None:
            return np.arange(self.n)
        ids = {TAG_IDS[t] if isinstance(t, str) else int(t) for t in tags}
        return np.flatnonzero(np.isin(self.tag, sorted(ids)))

    def copy(self) -> "Cloud":
        return Cloud(self.r.copy(), self.z.copy(), self.gamma.copy(),
                     self.xi0.copy(), self.tag.copy(), self.epsilon,
                     self.mu, self.r0, self.time)


def _m0(c: Cloud) -> float:
    return math.fsum(c.gamma)


def _m2(c: Cloud) -> float:
    return math.fsum(c.gamma * c.r * c.r)


# ----------------------------------------------------------------------
# radial profiles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Radially symmetric C^1 shape f(|y|), compactly supported in |y| < 1."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __call__(self, rho):
        return self.fn(np.asarray(rho, dtype=float))


def _flat_disc(plateau=0.85):
    def fn(rho):
        t = np.clip((rho - plateau) / (1.0 - plateau), 0.0, 1.0)
        edge = 0.5 * (1.0 + np.cos(np.pi * t))
        return np.where(rho >= 1.0, 0.0, np.where(rho > plateau, edge, 1.0))
    return fn


def _gaussian(sigma=0.35, taper=0.8):
    def fn(rho):
        core = np.exp(-0.5 * (rho / sigma) ** 2)
        t = np.clip((rho - taper) / (1.0 - taper), 0.0, 1.0)
        edge = 0.5 * (1.0 + np.cos(np.pi * t))
        return np.where(rho >= 1.0, 0.0, core * np.where(rho > taper, edge, 1.0))
    return fn


def get_profile(name: str, **params) -> RadialProfile:
    if name == "flat_disc":
        return RadialProfile(name, _flat_disc(**params), params)
    if name == "gaussian":
        return RadialProfile(name, _gaussian(**params), params)
    raise ValueError(f"unknown profile {name!r} (built-ins: flat_disc, gaussian)")


# ----------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------

def generate_blob(profile: RadialProfile, eps: float, x0, mu: float, h: float,
                  renormalize: bool = True) -> Cloud:
    """Seed w0(x) = (mu/eps^2) f((x - x0)/eps) on a uniform grid.

    Cell centers carry Gamma_j = w0(x_j) h^2 (midpoint rule); negligible
    weights are dropped; with renormalize=True the weights are rescaled so
    that M0 = mu exactly under the grid rule.
    """
    r0, z0 = (x0.r, x0.z) if hasattr(x0, "r") else (float(x0[0]), float(x0[1]))
    if mu == 0.0:
        raise EmptyCloudError("mu = 0 gives an empty cloud")
    if mu < 0.0 or eps <= 0.0 or h <= 0.0:
        raise ValueError("require mu > 0, eps > 0, h > 0")
    if h > eps / 8.0 * (1.0 + 1e-12):
        raise ValueError(f"h = {h} too coarse: need h <= eps/8 = {eps / 8.0}")
    if r0 - eps <= 0.0:
        raise AxisOverlapError(
            f"support [r0 - eps, r0 + eps] = [{r0 - eps}, {r0 + eps}] leaves the half-plane")

    k = int(math.ceil(eps / h))
    offs = np.arange(-k, k + 1) * h
    R, Z = np.meshgrid(r0 + offs, z0 + offs, indexing="ij")
    rho = np.hypot(R - r0, Z - z0) / eps
    f = profile(rho)
    count = int(np.count_nonzero(f > 0.0))
    if count == 0:
        raise EmptyCloudError("profile vanishes on the entire seeding grid")
    gam = (mu / eps ** 2) * f * h * h
    keep = gam > 1e-14 * mu / count
    r = R[keep].ravel().astype(float)
    z = Z[keep].ravel().astype(float)
    gam = gam[keep].ravel().astype(float)
    if r.size == 0:
        raise EmptyCloudError("all weights below the drop threshold")
    if np.any(r <= 0.0):
        raise AxisOverlapError("seeded particle at r <= 0")

    total = math.fsum(gam)
    if renormalize:
        gam = gam * (mu / total)
    elif abs(total / mu - 1.0) > 1e-6:
        raise ProfileNormalizationError(
            f"grid mass {total} deviates from mu = {mu} by more than 1e-6 relative")
    xi0 = gam / (h * h) / r
    tag = np.zeros(r.size, dtype=np.int8)
    return Cloud(r, z, gam, xi0, tag, epsilon=eps, mu=mu, r0=r0, time=0.0)


@dataclass(frozen=True)
class PatchSpec:
    """Annular diffuse patch: level * 1_{rho_in <= |x - center| < rho_out},
    seeded on its own grid of spacing h (rho_in = 0 gives a disc)."""

    center: tuple
    rho_in: float
    rho_out: float
    level: float
    h: float


def generate_filamentation_data(core_profile: RadialProfile, eps: float, x0,
                                mu_core: float, h: float, patch: PatchSpec,
                                c_d: float, c5: float,
                                constants: "AssumptionConstants" = None,
                                kernel_delta: Optional[float] = None):
    """Core blob (tag core_m) plus O(1)-level annular patch (tag diffuse_d).

    Validates the decomposition inequality
        ||w_d / r||_inf <= (|log eps|^2 / c_d) ||w_d||_L1
    and the patch geometry (area >= c_d/|log eps|^2, min r >= c5), then
    returns (cloud, report) with the assumption report of the combined data.
    """
    if patch.level <= 0.0:
        raise DecompositionError("patch level must be strictly positive")
    core = generate_blob(core_profile, eps, x0, mu_core, h)

    cr, cz = float(patch.center[0]), float(patch.center[1])
    kk = int(math.ceil(patch.rho_out / patch.h))
    offs = (np.arange(-kk, kk + 1) + 0.5) * patch.h
    R, Z = np.meshgrid(cr + offs, cz + offs, indexing="ij")
    d = np.hypot(R - cr, Z - cz)
    keep = (d >= patch.rho_in) & (d < patch.rho_out) & (R > 0.0)
    pr = R[keep].ravel()
    pz = Z[keep].ravel()
    if pr.size == 0:
        raise EmptyCloudError("patch contains no grid cells")
    if np.any(R[keep] <= 0.0):
        raise AxisOverlapError("patch reaches r <= 0")
    pgam = np.full(pr.size, patch.level * patch.h ** 2)
    pxi = patch.level / pr

    logeps = abs(math.log(eps))
    area = pr.size * patch.h ** 2
    if area < c_d / logeps ** 2:
        raise DecompositionError(
            f"patch area {area:.4g} below c_d/|log eps|^2 = {c_d / logeps ** 2:.4g}")
    if pr.min() < c5:
        raise DecompositionError(f"patch reaches r = {pr.min():.4g} < c5 = {c5}")
    sup_xi = float(pxi.max())
    mass_d = math.fsum(pgam)
    bound = logeps ** 2 / c_d * mass_d
    if sup_xi > bound:
        raise DecompositionError(
            f"||w_d/r||_inf = {sup_xi:.4g} exceeds (|log eps|^2/c_d)||w_d||_1 = {bound:.4g}")

    mu_total = core.mu + mass_d
    if core.mu < mu_total / 2.0:
        raise DecompositionError("core must carry at least half the total mass")

    r = np.concatenate([core.r, pr])
    z = np.concatenate([core.z, pz])
    gam = np.concatenate([core.gamma, pgam])
    xi0 = np.concatenate([core.xi0, pxi])
    tag = np.concatenate([np.full(core.n, TAG_CORE, np.int8),
                          np.full(pr.size, TAG_DIFFUSE, np.int8)])
    cloud = Cloud(r, z, gam, xi0, tag, epsilon=eps, mu=mu_total,
                  r0=core.r0, time=0.0)
    constants = constants or AssumptionConstants()
    delta = kernel_delta if kernel_delta is not None else 1.5 * h
    report = validate_assumptions(cloud, constants, delta)
    return cloud, report


# ----------------------------------------------------------------------
# assumption checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionConstants:
    c1: float = 1.0
    c2: float = 0.1
    c3: float = 0.2
    c4: float = 1.0


@dataclass(frozen=True)
class AssumptionReport:
    max_xi_over_eps2: float
    m0_gap: float
    m2_gap: float
    energy_gap: float
    a0: float
    pass_flags: tuple
    delta_used: float

    @property
    def all_pass(self) -> bool:
        return all(self.pass_flags)

    def as_dict(self) -> dict:
        return {
            "max_xi_over_eps2": self.max_xi_over_eps2,
            "m0_gap": self.m0_gap,
            "m2_gap": self.m2_gap,
            "energy_gap": self.energy_gap,
            "a0": self.a0,
            "pass_flags": list(self.pass_flags),
            "delta_used": self.delta_used,
        }


def validate_assumptions(c: Cloud, constants: AssumptionConstants,
                         delta: float) -> AssumptionReport:
    """Measure assumptions (i)-(v) against the configured constants.

    Reports, never raises: every field is computed by discrete summation
    with the cloud's own epsilon, mu, r0.
    """
    from ._fast import energy_pairs

    logeps = abs(math.log(c.epsilon))
    if c.n == 0:
        return AssumptionReport(0.0, c.mu * logeps, c.r0 ** 2 * c.mu * logeps,
                                c.r0 * c.mu ** 2 / (2 * math.pi) * logeps, 0.0,
                                (True, False, False, False, True), delta)
    max_xi = float(c.xi0.max()) * c.epsilon ** 2
    m0 = _m0(c)
    m2 = _m2(c)
    energy = energy_pairs(c.r, c.z, c.gamma, delta * delta)
    a0 = math.fsum(np.sqrt(1.0 + c.z ** 2) * c.r ** 2 * c.gamma)
    m0_gap = abs(m0 - c.mu) * logeps
    m2_gap = abs(m2 - c.r0 ** 2 * c.mu) * logeps
    e_gap = abs(energy - c.r0 * c.mu ** 2 / (2.0 * math.pi) * logeps)
    flags = (max_xi < constants.c1,
             m0_gap < constants.c2,
             m2_gap < constants.c3,
             e_gap < constants.c4,
             math.isfinite(a0))
    return AssumptionReport(max_xi, m0_gap, m2_gap, e_gap, a0, flags, delta)


# ----------------------------------------------------------------------
# exact symmetries
# ----------------------------------------------------------------------

def mirror_z(c: Cloud) -> Cloud:
    """z_j -> -z_j; an involution."""
    return Cloud(c.r.copy(), -c.z, c.gamma.copy(), c.xi0.copy(), c.tag.copy(),
                 c.epsilon, c.mu, c.r0, c.time)


def scale(c: Cloud, lam: float, gamma: float) -> Cloud:
    """Realize w^{lam,gamma}(r,z,t) = gamma w(lam r, lam z, gamma t) on particles.

    Positions divide by lam, weights scale by gamma/lam^2, the label
    xi0 = w/r picks up gamma*lam, and the clock divides by gamma."""
    if lam <= 0.0 or gamma <= 0.0:
        raise ValueError("scale factors must be positive")
    return Cloud(c.r / lam, c.z / lam, c.gamma * (gamma / lam ** 2),
                 c.xi0 * (gamma * lam), c.tag.copy(),
                 epsilon=c.epsilon / lam, mu=c.mu * gamma / lam ** 2,
                 r0=c.r0 / lam, time=c.time / gamma)


def normalize(c: Cloud):
    """Rescale to M0 = M2 = 1: lam = sqrt(M2/M0), gamma = M2/M0^2.

    Returns (cloud, lam, gamma)."""
    m0 = _m0(c)
    m2 = _m2(c)
    if m0 <= 0.0 or m2 <= 0.0:
        raise DegenerateMomentError(f"need M0, M2 > 0, got {m0}, {m2}")
    lam = math.sqrt(m2 / m0)
    gamma = m2 / m0 ** 2
    return scale(c, lam, gamma), lam, gamma


# ----------------------------------------------------------------------
# serialization: JSONL, one particle per line, bit-exact round trip
# ----------------------------------------------------------------------

def save_cloud(c: Cloud, path, extra_header: dict = None) -> None:
    header = {"kind": "ringlab-cloud", "schema": 1, "n": int(c.n),
              "epsilon": c.epsilon, "mu": c.mu, "r0": c.r0, "time": c.time}
    if extra_header:
        header.update(extra_header)
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for i in range(c.n):
            rec = {"r": float(c.r[i]), "z": float(c.z[i]),
                   "gamma": float(c.gamma[i]), "xi0": float(c.xi0[i]),
                   "tag": TAG_NAMES[int(c.tag[i])]}
            fh.write(json.dumps(rec) + "\n")


def load_cloud(path):
    """Returns (cloud, header)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "ringlab-cloud":
            raise ValueError(f"{path} is not a ringlab cloud file")
        n = header["n"]
        r = np.empty(n)
        z = np.empty(n)
        gam = np.empty(n)
        xi0 = np.empty(n)
        tag = np.empty(n, dtype=np.int8)
        for i in range(n):
            rec = json.loads(fh.readline())
            r[i] = rec["r"]
            z[i] = rec["z"]
            gam[i] = rec["gamma"]
            xi0[i] = rec["xi0"]
            tag[i] = TAG_IDS[rec["tag"]]
    cloud = Cloud(r, z, gam, xi0, tag, epsilon=header["epsilon"],
                  mu=header["mu"], r0=header["r0"], time=header["time"])
    return cloud, header
