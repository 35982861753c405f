"""Lagrangian time stepping of the particle cloud under its induced
velocity, with adaptive step control, diagnostics cadence and
checkpoint/restart.

The direct-summation path runs fused chunks of RK steps inside numba;
the step size is refreshed every `dt_update_every` steps from the measured
maximum particle speed and the core spacing, so restarts reproduce the
original step sequence bitwise.  Negative horizons integrate backward in
time (dt < 0), which combined with mirror_z realizes the exact
mirror/time-reversal symmetry of the dynamics at the discrete level.
"""

import json
import math
import os
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

from . import _fast, __version__ as _pkg_version
from .cloud import Cloud, save_cloud, load_cloud
from .diagnostics import (DiagnosticsConfig, CSV_COLUMNS, compute_record,
                          fits_from_records)
from .kernels import KernelConfig
from .velocity import R_MIN_FACTOR, Tree


class AxisCrossError(RuntimeError):
    """A particle radius fell below r_min; the run aborted at `t_fail`."""

    def __init__(self, t_fail):
        super().__init__(f"particle crossed the axis guard at t = {t_fail}")
        self.t_fail = t_fail


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    cfl: float = 0.25
    dt_max: float = math.inf
    t_end: float = 1.0
    diag_every: int = 500
    checkpoint_every: int = 25000
    dt_update_every: int = 25

    def __post_init__(self):
        if self.scheme not in ("rk4", "rk2"):
            raise ValueError("scheme must be 'rk4' or 'rk2'")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_end == 0.0:
            return
        if self.dt_update_every < 1 or self.diag_every < 1 or self.checkpoint_every < 1:
            raise ValueError("cadences must be positive")


def adaptive_dt(c: Cloud, u_max: float, h_core: float,
                cfg: IntegratorConfig = IntegratorConfig()) -> float:
    """dt = min(dt_max, cfl * h_core / u_max); dt_max when the cloud is at
    rest.  Magnitude only; run() applies the time direction."""
    if u_max < 0.0:
        raise ValueError("u_max must be >= 0")
    if u_max == 0.0:
        return cfg.dt_max
    return min(cfg.dt_max, cfg.cfl * h_core / u_max)


def core_spacing(c: Cloud) -> float:
    """Minimum nearest-neighbor distance among the top-decile-Gamma
    particles (the current core resolution scale)."""
    k = max(2, c.n // 10)
    sel = np.argsort(-c.gamma, kind="stable")[:k].astype(np.int64)
    return float(_fast.min_pair_distance(c.r, c.z, np.sort(sel)))


def _measured_umax(c: Cloud, kcfg: KernelConfig) -> float:
    ur = np.empty(c.n)
    uz = np.empty(c.n)
    _fast.velocity_targets(c.r, c.z, np.arange(c.n, dtype=np.int64),
                           c.r, c.z, c.gamma, np.sqrt(c.r),
                           kcfg.delta ** 2, ur, uz)
    return float(np.max(np.hypot(ur, uz))) if c.n else 0.0


def _tree_stage_velocity(work: Cloud, rr, zz, kcfg, theta):
    stage = replace(work, r=rr, z=zz)
    tree = Tree(stage)
    ur = np.empty(rr.size)
    uz = np.empty(rr.size)
    _fast.treecode_eval(rr, zz, np.arange(rr.size, dtype=np.int64),
                        tree.pr, tree.pz, tree.pgam, tree.psqrt_r, tree.perm,
                        tree.bbox, tree.child, tree.prange, tree.cheb_r,
                        tree.cheb_z, tree.cheb_w, theta, kcfg.delta ** 2,
                        ur, uz)
    return ur, uz


def _python_advance(work: Cloud, dt: float, nsteps: int, rmin: float,
                    rk4: bool, kcfg: KernelConfig, theta: float):
    """Reference stepping loop for the treecode velocity path."""
    r, z = work.r, work.z
    u_max = 0.0
    for step in range(nsteps):
        k1 = _tree_stage_velocity(work, r, z, kcfg, theta)
        u_max = float(np.max(np.hypot(*k1)))
        if rk4:
            t2 = (r + 0.5 * dt * k1[0], z + 0.5 * dt * k1[1])
            if np.any(t2[0] < rmin):
                return -(step + 1), u_max
            k2 = _tree_stage_velocity(work, *t2, kcfg, theta)
            t3 = (r + 0.5 * dt * k2[0], z + 0.5 * dt * k2[1])
            if np.any(t3[0] < rmin):
                return -(step + 1), u_max
            k3 = _tree_stage_velocity(work, *t3, kcfg, theta)
            t4 = (r + dt * k3[0], z + dt * k3[1])
            if np.any(t4[0] < rmin):
                return -(step + 1), u_max
            k4 = _tree_stage_velocity(work, *t4, kcfg, theta)
            nr = r + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            nz = z + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        else:
            t2 = (r + 0.5 * dt * k1[0], z + 0.5 * dt * k1[1])
            if np.any(t2[0] < rmin):
                return -(step + 1), u_max
            k2 = _tree_stage_velocity(work, *t2, kcfg, theta)
            nr = r + dt * k2[0]
            nz = z + dt * k2[1]
        if np.any(nr < rmin):
            return -(step + 1), u_max
        r[:] = nr
        z[:] = nz
    return nsteps, u_max


def step(c: Cloud, dt: float, cfg: IntegratorConfig, kcfg: KernelConfig,
         velocity: str = "direct", theta: float = 0.5) -> Cloud:
    """One RK step of dx/dt = u(x); weights, labels and tags unchanged."""
    if dt == 0.0:
        raise ValueError("dt must be nonzero")
    work = c.copy()
    rmin = R_MIN_FACTOR * c.r0
    if velocity == "direct":
        status, _ = _fast.advance_chunk(work.r, work.z, work.gamma,
                                        kcfg.delta ** 2, dt, 1, rmin,
                                        cfg.scheme == "rk4")
    else:
        status, _ = _python_advance(work, dt, 1, rmin, cfg.scheme == "rk4",
                                    kcfg, theta)
    if status < 0:
        raise AxisCrossError(c.time + dt)
    work.time = c.time + dt
    return work


# ----------------------------------------------------------------------
# full run with diagnostics and checkpoints
# ----------------------------------------------------------------------

class RunSink:
    """Writes diagnostics.csv (incrementally), checkpoints and fits.json
    into an output directory."""

    def __init__(self, out_dir, digest: str = "none", meta: dict = None):
        self.out_dir = str(out_dir)
        self.digest = digest
        self.meta = meta or {}
        os.makedirs(self.out_dir, exist_ok=True)
        self.csv_path = os.path.join(self.out_dir, "diagnostics.csv")
        self._csv = open(self.csv_path, "w")
        self._csv.write(f"# ringlab-diagnostics schema=1 config={digest} "
                        f"version={_pkg_version}\n")
        self._csv.write(",".join(CSV_COLUMNS) + "\n")
        self._csv.flush()

    def write_record(self, rec):
        vals = [repr(getattr(rec, name)) for name in CSV_COLUMNS]
        self._csv.write(",".join(vals) + "\n")
        self._csv.flush()

    def write_checkpoint(self, cloud: Cloud, state: dict, final: bool = False):
        name = "final_cloud.jsonl" if final else f"checkpoint_{state['step']:09d}.jsonl"
        path = os.path.join(self.out_dir, name)
        header = {"config_digest": self.digest, "version": _pkg_version,
                  "runstate": state}
        header.update(self.meta)
        save_cloud(cloud, path, extra_header=header)
        return path

    def write_fits(self, fits: dict):
        fits = dict(fits)
        fits["config_digest"] = self.digest
        fits["version"] = _pkg_version
        with open(os.path.join(self.out_dir, "fits.json"), "w") as fh:
            json.dump(fits, fh, indent=2)

    def close(self):
        self._csv.close()


@dataclass
class RunResult:
    cloud: Cloud
    records: list
    fits: dict
    out_dir: Optional[str]


def run(seed: Cloud, icfg: IntegratorConfig, kcfg: KernelConfig,
        dcfg: DiagnosticsConfig = DiagnosticsConfig(), sink: RunSink = None,
        velocity: str = "direct", theta: float = 0.5,
        resume_state: dict = None) -> RunResult:
    """Advance to t_end (possibly negative), emitting a DiagnosticsRecord
    every diag_every steps and checkpoints every checkpoint_every steps.

    Deterministic: the step size is piecewise constant over
    dt_update_every-step segments and refreshed from measured quantities,
    so a restart from any checkpoint reproduces the tail bitwise.  On an
    axis-guard abort the last consistent state is checkpointed and
    AxisCrossError is raised.
    """
    work = seed.copy()
    rmin = R_MIN_FACTOR * seed.r0
    sgn = 1.0 if icfg.t_end >= 0.0 else -1.0
    seg = icfg.dt_update_every
    diag_every = max(seg, (icfg.diag_every // seg) * seg)
    ckpt_every = max(seg, (icfg.checkpoint_every // seg) * seg)
    rk4 = icfg.scheme == "rk4"

    if resume_state is None:
        step_idx = 0
        t = work.time
        h_core = core_spacing(work) if work.n > 1 else math.inf
        u_max = _measured_umax(work, kcfg)
        dt_mag = adaptive_dt(work, u_max, h_core, icfg)
    else:
        step_idx = resume_state["step"]
        t = resume_state["t"]
        work.time = t
        h_core = resume_state["h_core"]
        dt_mag = resume_state["dt"]
    if not math.isfinite(dt_mag):
        raise ValueError("non-finite dt: set dt_max or give the cloud motion")

    records = []
    if resume_state is None:
        records.append(compute_record(work, kcfg, dcfg))
        if sink:
            sink.write_record(records[-1])

    def state():
        return {"step": step_idx, "t": t, "dt": dt_mag, "h_core": h_core}

    while sgn * (icfg.t_end - t) > 1e-12 * max(1.0, abs(icfg.t_end)):
        dt = sgn * dt_mag
        remaining = max(1, int(math.ceil((icfg.t_end - t) / dt - 1e-9)))
        nsteps = min(seg, remaining)
        if velocity == "direct":
            status, u_max = _fast.advance_chunk(work.r, work.z, work.gamma,
                                                kcfg.delta ** 2, dt, nsteps,
                                                rmin, rk4)
        else:
            status, u_max = _python_advance(work, dt, nsteps, rmin, rk4,
                                            kcfg, theta)
        if status < 0:
            done = -status - 1
            t = t + done * dt
            step_idx += done
            work.time = t
            if sink:
                sink.write_record(compute_record(work, kcfg, dcfg))
                sink.write_checkpoint(work, state(), final=True)
            raise AxisCrossError(t + dt)
        t = t + nsteps * dt
        step_idx += nsteps
        work.time = t
        finished = sgn * (icfg.t_end - t) <= 1e-12 * max(1.0, abs(icfg.t_end))
        if step_idx % diag_every == 0 or finished:
            records.append(compute_record(work, kcfg, dcfg))
            if sink:
                sink.write_record(records[-1])
        # refresh step control at the segment boundary, then checkpoint, so
        # a restart resumes with exactly the dt the original run continued with
        h_core = core_spacing(work) if work.n > 1 else math.inf
        dt_mag = adaptive_dt(work, u_max, h_core, icfg)
        if sink and step_idx % ckpt_every == 0 and not finished:
            sink.write_checkpoint(work, state())

    fits = {}
    if len(records) >= 2:
        fits = fits_from_records(records, seed.epsilon, seed.r0)
    elif records:
        fits = {"eps": seed.epsilon, "n_samples": len(records)}
    if sink:
        sink.write_checkpoint(work, state(), final=True)
        sink.write_fits(fits)
    return RunResult(cloud=work, records=records, fits=fits,
                     out_dir=sink.out_dir if sink else None)


def load_checkpoint(path):
    """Read a checkpoint written by RunSink; returns (cloud, runstate)."""
    cloud, header = load_cloud(path)
    return cloud, header["runstate"]
