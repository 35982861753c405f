"""Run configuration: a single versioned JSON document.

The resolved configuration (preset defaults merged with the file content)
is hashed; the digest is embedded in every output artifact so runs can be
compared and reproduced.  See SCHEMA.md for the field reference.
"""

import copy
import hashlib
import json
import math

from .cloud import (AssumptionConstants, PatchSpec, generate_blob,
                    generate_filamentation_data, get_profile, load_cloud)
from .diagnostics import DiagnosticsConfig
from .integrator import IntegratorConfig
from .kernels import KernelConfig
from .presets import preset

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return resolve_config(raw)


def resolve_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    scenario = raw.get("scenario")
    if scenario in ("thin_ring", "fat_ring"):
        kw = {}
        data = raw.get("data", {})
        if "eps" in data:
            kw["eps"] = float(data["eps"])
        if "t_end" in raw.get("integrator", {}):
            kw["t_end"] = float(raw["integrator"]["t_end"])
        if "dir" in raw.get("output", {}):
            kw["out_dir"] = raw["output"]["dir"]
        cfg = preset(scenario, **kw)
        cfg = _merge(cfg, raw)
    elif scenario == "custom":
        cfg = copy.deepcopy(raw)
        for key in ("data", "integrator", "output"):
            if key not in cfg:
                raise ConfigError(f"custom scenario requires a '{key}' section")
        cfg.setdefault("kernel", {"s_lo": 1e-3, "s_hi": 1e2,
                                  "quad_tol": 1e-10, "delta_over_h": 1.5})
        cfg.setdefault("velocity", {"path": "direct", "theta": 0.5,
                                    "leaf_capacity": 64, "cheb_order": 6})
        cfg.setdefault("diagnostics", {})
        cfg.setdefault("rng_seed", None)
    else:
        raise ConfigError(
            f"scenario must be thin_ring, fat_ring or custom, got {scenario!r}")
    cfg["schema_version"] = SCHEMA_VERSION
    return cfg


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def config_digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ----------------------------------------------------------------------
# materialization
# ----------------------------------------------------------------------

def build_cloud(cfg: dict):
    """Construct the seed cloud described by cfg['data'].

    Returns (cloud, report_or_None)."""
    data = cfg["data"]
    kind = data.get("kind", "blob")
    if kind == "file":
        cloud, _ = load_cloud(data["path"])
        return cloud, None
    prof_spec = data.get("profile", {"name": "flat_disc"})
    profile = get_profile(prof_spec["name"],
                          **{k: v for k, v in prof_spec.items() if k != "name"})
    consts = AssumptionConstants(**data.get("constants", {}))
    if kind == "blob":
        cloud = generate_blob(profile, float(data["eps"]),
                              tuple(data["x0"]), float(data["mu"]),
                              float(data["h"]))
        return cloud, None
    if kind == "filamentation":
        p = data["patch"]
        patch = PatchSpec(center=tuple(p["center"]), rho_in=float(p["rho_in"]),
                          rho_out=float(p["rho_out"]), level=float(p["level"]),
                          h=float(p["h"]))
        delta = kernel_config(cfg, float(data["h"])).delta
        cloud, report = generate_filamentation_data(
            profile, float(data["eps"]), tuple(data["x0"]),
            float(data["mu_core"]), float(data["h"]), patch,
            c_d=float(data["c_d"]), c5=float(data["c5"]),
            constants=consts, kernel_delta=delta)
        return cloud, report
    raise ConfigError(f"unknown data kind {kind!r}")


def kernel_config(cfg: dict, h: float = None) -> KernelConfig:
    k = cfg.get("kernel", {})
    if "delta" in k:
        delta = float(k["delta"])
    else:
        if h is None:
            h = float(cfg["data"].get("h", 0.0))
        delta = float(k.get("delta_over_h", 1.5)) * h
    return KernelConfig(s_lo=float(k.get("s_lo", 1e-3)),
                        s_hi=float(k.get("s_hi", 1e2)),
                        quad_tol=float(k.get("quad_tol", 1e-10)),
                        delta=delta)


def integrator_config(cfg: dict) -> IntegratorConfig:
    i = cfg["integrator"]
    return IntegratorConfig(scheme=i.get("scheme", "rk4"),
                            cfl=float(i.get("cfl", 0.25)),
                            dt_max=float(i.get("dt_max", math.inf)),
                            t_end=float(i["t_end"]),
                            diag_every=int(i.get("diag_every", 500)),
                            checkpoint_every=int(i.get("checkpoint_every", 25000)),
                            dt_update_every=int(i.get("dt_update_every", 25)))


def diagnostics_config(cfg: dict) -> DiagnosticsConfig:
    d = cfg.get("diagnostics", {})
    kw = {}
    for key in ("rho", "pair_R", "thickness_halfwidth", "thickness_slices"):
        if key in d:
            kw[key] = d[key]
    for key in ("thickness_tags", "zbar_tags", "diam_tags"):
        if key in d:
            kw[key] = tuple(d[key])
    return DiagnosticsConfig(**kw)
