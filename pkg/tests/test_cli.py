import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from vidsolve.cli import main
from vidsolve.video import load_svtf

STUB = str(Path(__file__).parent / "stub_bridge.py")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def workspace(tmp_path):
    gt = tmp_path / "gt.svtf"
    meas = tmp_path / "meas.svtf"
    assert run("generate", "--kind", "moving_square", "--frames", "8", "--height", "16",
               "--width", "16", "--seed", "3", "--out", gt) == 0
    assert run("degrade", "--input", gt, "--op", "temporal:uniform:7", "--out", meas) == 0
    return tmp_path, gt, meas


def test_generate_writes_file_and_sidecar(tmp_path):
    out = tmp_path / "clip.svtf"
    assert run("generate", "--kind", "static", "--frames", "4", "--out", out) == 0
    v = load_svtf(out)
    assert v.shape == (4, 1, 32, 32)
    sidecar = json.loads((tmp_path / "clip.svtf.gen.json").read_text())
    assert sidecar["kind"] == "static" and sidecar["seed"] == 0


def test_degrade_matches_direct_averaging_oracle(workspace):
    tmp, gt, meas = workspace
    clean = load_svtf(gt).data.astype(np.float64)
    measured = load_svtf(meas).data
    # replicate-padded 7-frame mean, written as a plain loop
    n = clean.shape[0]
    for frame in range(n):
        acc = np.zeros_like(clean[0])
        for j in range(-3, 4):
            acc += clean[min(max(frame + j, 0), n - 1)]
        assert np.allclose(measured[frame], acc / 7.0, atol=1e-6)
    sidecar = json.loads((meas.parent / "meas.svtf.op.json").read_text())
    assert sidecar["op"] == "temporal:uniform:7"


def test_solve_end_to_end_with_defaults(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "run"
    code = run("solve", "--input", meas, "--ref", gt, "--op", "temporal:uniform:7",
               "--nfe", "20", "--l", "5", "--eta", "0.15", "--scale", "0.3",
               "--out-dir", out_dir)
    assert code == 0
    recon = load_svtf(out_dir / "recon.svtf")
    assert recon.shape == (8, 1, 16, 16)
    assert (out_dir / "resolved.cfg").exists()
    assert (out_dir / "metrics.json").exists()
    lines = (out_dir / "trace.jsonl").read_text().strip().splitlines()
    assert len(lines) == 20
    record = json.loads(lines[0])
    assert set(record) == {"t", "residual", "inter_batch_diff"}


def test_solve_uses_sidecar_operator(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "run_sidecar"
    assert run("solve", "--input", meas, "--nfe", "2", "--l", "2", "--out-dir", out_dir) == 0
    assert (out_dir / "recon.svtf").exists()


def test_solve_reproducible_from_resolved_config(workspace):
    tmp, gt, meas = workspace
    first = tmp / "a"
    assert run("solve", "--input", meas, "--op", "temporal:uniform:7", "--nfe", "3",
               "--l", "2", "--seed", "7", "--out-dir", first) == 0
    second = tmp / "b"
    assert run("solve", "--config", first / "resolved.cfg", "--out-dir", second) == 0
    a = (first / "recon.svtf").read_bytes()
    b = (second / "recon.svtf").read_bytes()
    assert a == b


def test_unknown_config_key_exits_2_naming_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[solver]\nfne = 20\n")
    assert run("solve", "--config", cfg) == 2
    assert "fne" in capsys.readouterr().err


def test_unknown_section_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad2.cfg"
    cfg.write_text("[солвер]\nnfe = 20\n")
    assert run("solve", "--config", cfg) == 2


def test_missing_input_exits_2(tmp_path):
    assert run("solve", "--input", tmp_path / "nope.svtf", "--op", "identity") == 2


def test_trace_dumps_tweedie_batches(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "traced"
    assert run("solve", "--input", meas, "--op", "temporal:uniform:7", "--nfe", "3",
               "--l", "1", "--trace", "on", "--out-dir", out_dir) == 0
    dumps = sorted(out_dir.glob("tweedie_t*.svtf"))
    assert len(dumps) == 3


def test_metrics_compare(workspace, capsys):
    tmp, gt, meas = workspace
    assert run("metrics", "--a", meas, "--b", gt) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["psnr_db"] > 0
    assert 0 <= rep["ssim"] <= 1


def test_baseline_cg(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "cg"
    assert run("baseline", "--method", "cg", "--iters", "60", "--input", meas,
               "--ref", gt, "--out-dir", out_dir) == 0
    rep = json.loads((out_dir / "metrics.json").read_text())
    assert rep["psnr_db"] > 30  # noiseless temporal system: CG nearly solves it


def test_baseline_admm(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "admm"
    assert run("baseline", "--method", "admm-tv", "--rho", "1.0", "--lam", "0.001",
               "--outer", "5", "--inner", "5", "--input", meas, "--out-dir", out_dir) == 0
    history = json.loads((out_dir / "objective.json").read_text())
    assert len(history) == 6
    assert history[-1] <= history[0]


def test_blind_cli(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "blind"
    assert run("blind", "--input", meas, "--grid", "5,7,9", "--pre-restoration", gt,
               "--nfe", "10", "--l", "5", "--scale", "0.3", "--out-dir", out_dir) == 0
    psf = json.loads((out_dir / "psf.json").read_text())
    assert psf["initial"] == "temporal:uniform:7"
    assert psf["refined"] == "temporal:uniform:7"


def test_ablate_csv_complete(workspace):
    tmp, gt, meas = workspace
    out_dir = tmp / "ablate"
    code = run("ablate", "--input", meas, "--ref", gt, "--op", "temporal:uniform:7",
               "--nfe", "3", "--l", "2", "--eta-grid", "0,0.5", "--sync-modes", "on,off",
               "--updates", "cg,gd", "--out-dir", out_dir)
    assert code == 0
    with open(out_dir / "ablate.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2 * 2 * 2
    for row in rows:
        assert row["psnr_db"] != "" and row["ssim"] != ""
        assert row["noise_sync"] in ("on", "off")
        assert row["update"] in ("cg", "gd")


def test_ablate_requires_ref(workspace):
    tmp, gt, meas = workspace
    assert run("ablate", "--input", meas, "--op", "temporal:uniform:7") == 2


@pytest.mark.filterwarnings("ignore:overflow")
def test_numeric_failure_exits_3(workspace):
    tmp, gt, meas = workspace
    # an absurd GD step size diverges and must abort with the numeric exit code
    code = run("solve", "--input", meas, "--op", "temporal:uniform:7", "--nfe", "20",
               "--l", "1", "--update", "gd", "--gamma", "1e9", "--denoiser", "zero",
               "--out-dir", tmp / "boom")
    assert code == 3


def test_external_denoiser_failure_exits_4(workspace):
    tmp, gt, meas = workspace
    cmd = f"{sys.executable} {STUB} die-after-handshake"
    code = run("solve", "--input", meas, "--op", "temporal:uniform:7", "--nfe", "2",
               "--l", "1", "--denoiser", "external", "--bridge-cmd", cmd,
               "--timeout", "2.0", "--out-dir", tmp / "ext")
    assert code == 4


def test_external_denoiser_via_stub_bridge(workspace):
    tmp, gt, meas = workspace
    cmd = f"{sys.executable} {STUB} gaussian 0.5 0.5"
    out_dir = tmp / "ext_ok"
    code = run("solve", "--input", meas, "--op", "temporal:uniform:7", "--nfe", "3",
               "--l", "2", "--denoiser", "external", "--bridge-cmd", cmd,
               "--timeout", "5.0", "--out-dir", out_dir)
    assert code == 0
    assert (out_dir / "recon.svtf").exists()
