import json
import math
import os

import numpy as np
import pytest

from ringlab.cli import main


def _write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _thin_cfg(tmp_path, out, t_end=0.01, eps=1e-2, extra=None):
    cfg = {
        "schema_version": 1,
        "scenario": "thin_ring",
        "data": {"eps": eps},
        "integrator": {"t_end": t_end, "diag_every": 100,
                       "checkpoint_every": 200},
        "output": {"dir": str(tmp_path / out)},
    }
    if extra:
        for k, v in extra.items():
            cfg.setdefault(k, {}).update(v)
    return _write(tmp_path, f"{out}.json", cfg)


def test_generate_writes_cloud_and_report(tmp_path):
    cfg = _thin_cfg(tmp_path, "gen")
    assert main(["generate", "--config", cfg]) == 0
    out = tmp_path / "gen"
    assert (out / "cloud.jsonl").exists()
    rep = json.loads((out / "assumptions.json").read_text())
    assert all(rep["pass_flags"])
    assert rep["config_digest"]


def test_generate_fat_ring_report(tmp_path):
    cfg = _write(tmp_path, "fat.json", {
        "schema_version": 1, "scenario": "fat_ring",
        "integrator": {"t_end": 0.0},
        "output": {"dir": str(tmp_path / "fat")},
    })
    assert main(["generate", "--config", cfg]) == 0
    rep = json.loads((tmp_path / "fat" / "assumptions.json").read_text())
    assert all(rep["pass_flags"])


def test_malformed_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["generate", "--config", str(bad)]) == 2
    unknown = _write(tmp_path, "unknown.json", {"scenario": "warp_drive"})
    assert main(["generate", "--config", str(unknown)]) == 2


def test_assumption_failure_exits_3(tmp_path):
    # impossible constants: c2 = 0 fails (ii) even for perfect data
    cfg = json.loads(open(_thin_cfg(tmp_path, "strict")).read())
    cfg["data"]["constants"] = {"c1": 1e-9, "c2": 1e-12, "c3": 1e-12,
                                "c4": 1e-12}
    path = _write(tmp_path, "strict2.json", cfg)
    assert main(["generate", "--config", path]) == 3


def test_run_and_rerun_bitwise_identical_csv(tmp_path):
    cfg = _thin_cfg(tmp_path, "runA", t_end=0.005)
    assert main(["run", "--config", cfg]) == 0
    csv_a = (tmp_path / "runA" / "diagnostics.csv").read_text()
    assert main(["run", "--config", cfg]) == 0
    csv_b = (tmp_path / "runA" / "diagnostics.csv").read_text()
    assert csv_a == csv_b
    fits = json.loads((tmp_path / "runA" / "fits.json").read_text())
    assert fits["config_digest"]


def test_run_zero_horizon_single_row(tmp_path):
    cfg = _thin_cfg(tmp_path, "zero", t_end=0.0)
    assert main(["run", "--config", cfg]) == 0
    rows = [ln for ln in (tmp_path / "zero" / "diagnostics.csv")
            .read_text().splitlines() if ln and not ln.startswith("#")]
    assert len(rows) == 2  # header + one record


def test_run_resume_reproduces_tail(tmp_path):
    cfg = _thin_cfg(tmp_path, "full", t_end=0.006,
                    extra={"integrator": {"checkpoint_every": 50}})
    assert main(["run", "--config", cfg]) == 0
    final_full = (tmp_path / "full" / "final_cloud.jsonl").read_text()
    cks = sorted(p for p in os.listdir(tmp_path / "full")
                 if p.startswith("checkpoint"))
    ck = str(tmp_path / "full" / cks[0])
    cfg2 = json.loads(open(cfg).read())
    cfg2["output"]["dir"] = str(tmp_path / "resumed")
    path2 = _write(tmp_path, "resume.json", cfg2)
    assert main(["run", "--config", path2, "--resume", ck]) == 0
    final_resumed = (tmp_path / "resumed" / "final_cloud.jsonl").read_text()
    # same particle lines (headers differ in runstate)
    assert final_full.splitlines()[1:] == final_resumed.splitlines()[1:]


def test_kernel_table(tmp_path, capsys):
    assert main(["kernel-table", "--smin", "1e-4", "--smax", "10",
                 "--n", "7"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "s,F,F1,F2,branch"
    assert len(out) == 8
    first = out[1].split(",")
    assert first[-1] == "small"
    assert float(first[2]) > 1e7          # F1 ~ 1/s^2
    capsys.readouterr()
    assert main(["kernel-table", "--smin", "10", "--smax", "1",
                 "--n", "5"]) == 2        # descending range rejected
    assert main(["kernel-table", "--smin", "1e-3", "--smax", "1e-3",
                 "--n", "1"]) == 0        # single-point range: one row
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2


def test_diag_recompute(tmp_path, capsys):
    cfg = _thin_cfg(tmp_path, "diagrun", t_end=0.0)
    assert main(["run", "--config", cfg]) == 0
    capsys.readouterr()
    assert main(["diag", "--cloud",
                 str(tmp_path / "diagrun" / "final_cloud.jsonl"),
                 "--config", cfg]) == 0
    out = capsys.readouterr().out.splitlines()
    header = out[0].split(",")
    values = out[1].split(",")
    rec = dict(zip(header, values))
    assert float(rec["m0"]) == pytest.approx(1.0, abs=1e-12)
    assert float(rec["v_kh"]) == pytest.approx(math.log(100) / (4 * math.pi))


def test_compare_mirror_mode(tmp_path, capsys):
    # run A: backward horizon; run B: forward from the mirrored seed.
    # cmd_compare applies the mirror/time-reversal transform to A.
    from ringlab import (IntegratorConfig, KernelConfig, RunSink,
                         generate_blob, get_profile, mirror_z, run)
    prof = get_profile("flat_disc")
    seed = generate_blob(prof, 1e-2, (1.0, 0.0), 1.0, 1e-2 / 8)
    kcfg = KernelConfig(delta=1.5e-2 / 8)
    ic_b = IntegratorConfig(t_end=-0.004, cfl=1.0, diag_every=50)
    ic_f = IntegratorConfig(t_end=0.004, cfl=1.0, diag_every=50)
    sink_a = RunSink(tmp_path / "A", "digA")
    run(seed, ic_b, kcfg, sink=sink_a)
    sink_a.close()
    sink_b = RunSink(tmp_path / "B", "digB")
    run(mirror_z(seed), ic_f, kcfg, sink=sink_b)
    sink_b.close()
    assert main(["compare", "--run-a", str(tmp_path / "A"),
                 "--run-b", str(tmp_path / "B"), "--mode", "mirror"]) == 0
    report = json.loads(capsys.readouterr().out)
    devs = report["max_deviation"]
    assert devs["t"] == 0.0
    assert devs["energy_e"] == 0.0
    assert devs["m2"] == 0.0
    assert devs["diam_z_all"] == 0.0
    assert devs["final_positions_rel"] == 0.0


def test_compare_refuses_digestless(tmp_path):
    for d in ("X", "Y"):
        os.makedirs(tmp_path / d, exist_ok=True)
        (tmp_path / d / "diagnostics.csv").write_text(
            "# no digest here\nt,m0\n0.0,1.0\n")
    assert main(["compare", "--run-a", str(tmp_path / "X"),
                 "--run-b", str(tmp_path / "Y")]) == 2


def test_compare_scaling_mode(tmp_path, capsys):
    from ringlab import (IntegratorConfig, KernelConfig, RunSink,
                         generate_blob, get_profile, run, scale)
    prof = get_profile("flat_disc")
    seed = generate_blob(prof, 1e-2, (1.0, 0.0), 1.0, 1e-2 / 8)
    kcfg = KernelConfig(delta=1.5e-2 / 8)
    lam, gam = 2.0, 4.0
    dt0 = 6e-5
    sink_a = RunSink(tmp_path / "SA", "digA")
    run(seed, IntegratorConfig(t_end=0.004, cfl=1.0, dt_max=dt0,
                               diag_every=25), kcfg, sink=sink_a)
    sink_a.close()
    sink_b = RunSink(tmp_path / "SB", "digB")
    run(scale(seed, lam, gam),
        IntegratorConfig(t_end=0.001, cfl=1.0, dt_max=dt0 / gam,
                         diag_every=25),
        KernelConfig(delta=kcfg.delta / lam), sink=sink_b)
    sink_b.close()
    assert main(["compare", "--run-a", str(tmp_path / "SA"),
                 "--run-b", str(tmp_path / "SB"), "--mode", "scaling",
                 "--lam", "2.0", "--gam", "4.0"]) == 0
    devs = json.loads(capsys.readouterr().out)["max_deviation"]
    assert devs["final_positions_rel"] <= 1e-6
    assert devs["m0"] <= 1e-12
    assert devs["t"] <= 1e-15


def test_compare_plain_identity(tmp_path, capsys):
    cfg = _thin_cfg(tmp_path, "P1", t_end=0.002)
    assert main(["run", "--config", cfg]) == 0
    cfg2 = json.loads(open(cfg).read())
    cfg2["output"]["dir"] = str(tmp_path / "P2")
    path2 = _write(tmp_path, "p2.json", cfg2)
    assert main(["run", "--config", path2]) == 0
    capsys.readouterr()
    assert main(["compare", "--run-a", str(tmp_path / "P1"),
                 "--run-b", str(tmp_path / "P2"), "--mode", "plain"]) == 0
    devs = json.loads(capsys.readouterr().out)["max_deviation"]
    assert max(v for k, v in devs.items() if not math.isnan(v)) == 0.0
