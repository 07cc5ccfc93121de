import csv
import hashlib
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from tenrec import cli, fixtures, media
from tenrec.errors import NumericalFailure

# sha256 of the decoded pixels, frozen from the first run of the reference implementation
TEXTURE_SHA = "1330260fc7ebb545c760cc2e88dc8f33c60cf0d678cae8d80211a96e6be45984"
CORRUPT_SHA = "d173ff40ee9756a2a8328c06fde80ed1925b5b590d08b2d1a0bf5246784a364e"
MASK_SHA = "1d1a70a07fd149a42ad5581a99d9a11e879907af34b520c00d5eecb8886c3d52"


def pixel_sha(path) -> str:
    return hashlib.sha256(np.asarray(Image.open(path)).tobytes()).hexdigest()


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def texture(tmp_path):
    path = tmp_path / "img.png"
    media.save_any(path, fixtures.tiled_texture())
    return path


@pytest.fixture
def small(tmp_path):
    """32 x 32 crop of the texture plus a corrupted copy, both PNG."""
    x = fixtures.tiled_texture(32)
    media.save_any(tmp_path / "ref.png", x)
    media.save_any(tmp_path / "noisy.png", media.inject_noise(x, media.NoiseSpec(0.2, seed=3))[0])
    return tmp_path / "ref.png", tmp_path / "noisy.png"


# --- corrupt -----------------------------------------------------------------------

def test_corrupt_is_deterministic_and_frozen(texture, tmp_path):
    assert pixel_sha(texture) == TEXTURE_SHA
    out = tmp_path / "noisy.png"
    assert cli.main(["corrupt", "--in", str(texture), "--out", str(out), "--rate", "0.3", "--seed", "7"]) == 0
    assert pixel_sha(out) == CORRUPT_SHA
    assert pixel_sha(tmp_path / "noisy_mask.png") == MASK_SHA
    mask = np.asarray(Image.open(tmp_path / "noisy_mask.png"))[:, :, 0]
    assert int((mask > 0).sum()) == round(0.3 * 64 * 64)


def test_corrupt_rate_zero_copies_pixels(texture, tmp_path):
    out = tmp_path / "same.png"
    assert cli.main(["corrupt", "--in", str(texture), "--out", str(out), "--rate", "0"]) == 0
    assert pixel_sha(out) == TEXTURE_SHA


def test_corrupt_bad_rate_names_flag(texture, tmp_path, capsys):
    assert cli.main(["corrupt", "--in", str(texture), "--out", str(tmp_path / "o.png"), "--rate", "1.5"]) == 3
    assert "--rate" in capsys.readouterr().err


def test_corrupt_raw_mask_is_binary(tmp_path):
    media.save_any(tmp_path / "x.t3rc", np.zeros((5, 5, 2)))
    args = ["corrupt", "--in", str(tmp_path / "x.t3rc"), "--out", str(tmp_path / "y.t3rc"), "--rate", "0.4"]
    assert cli.main(args) == 0
    mask = media.load_any(tmp_path / "y_mask.t3rc")
    assert set(np.unique(mask)) == {0.0, 1.0} and mask[:, :, 0].sum() == 10


@pytest.mark.parametrize("argv, code", [
    (["corrupt", "--in", "missing.png", "--out", "o.png", "--rate", "0.1"], 2),
    (["corrupt", "--in", "x.png"], 3),
    (["frobnicate"], 3),
    ([], 3),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == code


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "recover" in capsys.readouterr().out


# --- recover -------------------------------------------------------------------------

def test_recover_clean_low_rank_fixture(tmp_path):
    x = 128.0 + 100.0 * fixtures.low_tubal_rank(20, 4, 2, seed=8)
    media.save_any(tmp_path / "clean.t3rc", x)
    args = ["recover", "--in", str(tmp_path / "clean.t3rc"), "--out", str(tmp_path / "rec.t3rc"),
            "--method", "ntrpca", "--report", str(tmp_path / "rep.json")]
    assert cli.main(args) == 0
    rec = media.load_any(tmp_path / "rec.t3rc")
    assert np.linalg.norm(rec - x) / np.linalg.norm(x) < 1e-4
    report = json.loads((tmp_path / "rep.json").read_text())
    assert report["converged"] is True and report["method"] == "ntrpca"


def test_recover_degenerate_grouping_matches_global(tmp_path):
    x = np.random.default_rng(0).uniform(0, 255, (16, 16, 3))
    media.save_any(tmp_path / "x.t3rc", x)
    base = ["recover", "--in", str(tmp_path / "x.t3rc")]
    assert cli.main(base + ["--out", str(tmp_path / "a.t3rc"), "--method", "ntrpca"]) == 0
    assert cli.main(base + ["--out", str(tmp_path / "b.t3rc"), "--method", "nntrpca", "--patch", "16",
                            "--group-size", "1", "--stride", "16", "--grouping", "mode3"]) == 0
    a, b = media.load_any(tmp_path / "a.t3rc"), media.load_any(tmp_path / "b.t3rc")
    assert np.linalg.norm(a - b) <= 1e-6 * np.linalg.norm(a)


def test_recover_unknown_method(small, tmp_path):
    assert cli.main(["recover", "--in", str(small[1]), "--out", str(tmp_path / "r.png"), "--method", "svd"]) == 3


def test_recover_max_iters_is_not_an_error(small, tmp_path):
    rep = tmp_path / "rep.json"
    args = ["recover", "--in", str(small[1]), "--out", str(tmp_path / "r.png"), "--method", "tnn",
            "--max-iters", "3", "--report", str(rep)]
    with pytest.warns(Warning):
        assert cli.main(args) == 0
    assert json.loads(rep.read_text())["converged"] is False


def test_recover_numerical_failure_exit_4(small, tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalFailure("svd did not converge")

    monkeypatch.setattr(cli, "restore", boom)
    assert cli.main(["recover", "--in", str(small[1]), "--out", str(tmp_path / "r.png"), "--method", "tnn"]) == 4


def test_recover_bad_solver_flag(small, tmp_path, capsys):
    args = ["recover", "--in", str(small[1]), "--out", str(tmp_path / "r.png"), "--rho", "0.5"]
    assert cli.main(args) == 3
    assert "--rho" in capsys.readouterr().err


def test_recover_video_directory(tmp_path):
    frames = 128.0 + 60.0 * np.sin(np.arange(12 * 10 * 4).reshape(12, 10, 4) / 7.0)
    media.save_video(tmp_path / "vid", frames)
    assert cli.main(["recover", "--in", str(tmp_path / "vid"), "--out", str(tmp_path / "out"),
                     "--method", "tnn", "--scale", "0.5", "--resample", "nearest"]) == 0
    assert media.load_any(tmp_path / "out").shape == (6, 5, 4)


# --- manifests ------------------------------------------------------------------------

def test_manifest_replay_is_bitwise(small, tmp_path):
    out, man = tmp_path / "r.t3rc", tmp_path / "run.json"
    args = ["recover", "--in", str(small[1]), "--out", str(out), "--method", "ntrpca", "--theta", "1.5",
            "--manifest", str(man)]
    assert cli.main(args) == 0
    first = out.read_bytes()
    record = json.loads(man.read_text())
    assert record["command"] == "recover" and record["solver"]["theta"] == 1.5
    assert record["grouping"]["method"] == "unfold1" and record["outputs"] == [str(out)]
    out.unlink()
    assert cli.main(["replay", "--manifest", str(man)]) == 0
    assert out.read_bytes() == first


def test_every_run_leaves_a_manifest(small, tmp_path):
    out = tmp_path / "n.png"
    assert cli.main(["corrupt", "--in", str(small[0]), "--out", str(out), "--rate", "0.1"]) == 0
    record = json.loads((tmp_path / "n.png.manifest.json").read_text())
    assert record["noise"] == {"rate": 0.1, "seed": 0, "low": 0.0, "high": 255.0, "channel_coupled": True}


def test_replay_rejects_garbage(tmp_path):
    (tmp_path / "m.json").write_text("{}")
    assert cli.main(["replay", "--manifest", str(tmp_path / "m.json")]) == 2


# --- bench and sweep ------------------------------------------------------------------

def test_bench_rows_and_schema(small, tmp_path):
    out = tmp_path / "b.csv"
    base = ["bench", "--in", str(small[0]), "--corrupted", str(small[1]), "--csv", str(out)]
    assert cli.main(base + ["--methods", "tnn,ntrpca"]) == 0
    assert cli.main(base + ["--methods", "tnn"]) == 0  # appends without a second header
    lines = out.read_text().splitlines()
    assert lines[0].startswith("schema,input,method,noise_rate,seed")
    assert sum(line.startswith("schema") for line in lines) == 1
    rows = read_rows(out)
    assert [r["method"] for r in rows] == ["tnn", "ntrpca", "tnn"]
    assert all(r["schema"] == cli.CSV_SCHEMA and r["status"] == "ok" for r in rows)
    assert rows[0]["psnr"] == rows[2]["psnr"]


def test_bench_row_failure_is_recorded(small, tmp_path, monkeypatch):
    real = cli.restore

    def flaky(x, method, *args, **kwargs):
        if method == "ntrpca":
            raise NumericalFailure("boom")
        return real(x, method, *args, **kwargs)

    monkeypatch.setattr(cli, "restore", flaky)
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--in", str(small[0]), "--corrupted", str(small[1]), "--methods", "ntrpca,tnn",
                     "--csv", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0]["status"].startswith("failed") and rows[1]["status"] == "ok"


@pytest.mark.parametrize("extra, needle", [(["--methods", ""], "--methods"), (["--methods", "tnn,foo"], "foo")])
def test_bench_bad_methods(small, extra, needle, capsys):
    assert cli.main(["bench", "--in", str(small[0]), "--corrupted", str(small[1])] + extra) == 3
    assert needle in capsys.readouterr().err


def test_bench_shape_mismatch_names_shapes(small, tmp_path, capsys):
    media.save_any(tmp_path / "other.png", np.zeros((16, 32, 3)))
    assert cli.main(["bench", "--in", str(small[0]), "--corrupted", str(tmp_path / "other.png")]) == 3
    err = capsys.readouterr().err
    assert "(32, 32, 3)" in err and "(16, 32, 3)" in err


def test_bench_needs_noise_source(small):
    assert cli.main(["bench", "--in", str(small[0])]) == 3


def test_bench_to_stdout(small, capsys):
    assert cli.main(["bench", "--in", str(small[0]), "--rate", "0.2", "--seed", "3", "--methods", "tnn"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and ",0.2,3," in out[1]


@pytest.mark.slow
def test_bench_method_ordering_on_texture(texture, tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--in", str(texture), "--rate", "0.3", "--seed", "0", "--patch", "8",
                     "--group-size", "16", "--stride", "4", "--csv", str(out)]) == 0
    psnr = {r["method"]: float(r["psnr"]) for r in read_rows(out)}
    assert len(psnr) == 3
    assert psnr["nntrpca"] >= psnr["ntrpca"] and psnr["nntrpca"] >= psnr["tnn"]


@pytest.mark.xfail(reason="global N-TRPCA trails TNN on this texture at default lambda (15.3 vs 16.2 dB)",
                   strict=False)
def test_bench_nonconvex_beats_convex_on_texture(texture, tmp_path):
    out = tmp_path / "b.csv"
    assert cli.main(["bench", "--in", str(texture), "--rate", "0.3", "--seed", "0", "--methods", "tnn,ntrpca",
                     "--csv", str(out)]) == 0
    psnr = {r["method"]: float(r["psnr"]) for r in read_rows(out)}
    assert psnr["ntrpca"] >= psnr["tnn"]


def test_sweep_theta_grid(texture, tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--in", str(texture), "--rate", "0.3", "--param", "theta", "--values", "1:5:0.5",
                     "--csv", str(out)]) == 0
    rows = read_rows(out)
    assert [float(r["value"]) for r in rows] == [1 + 0.5 * i for i in range(9)]
    assert all(r["parameter"] == "theta" and r["method"] == "ntrpca" for r in rows)
    psnr = [float(r["psnr"]) for r in rows]
    assert max(psnr[0], psnr[-1]) <= max(psnr[1:-1])


def test_single_value_sweep_equals_bench(small, tmp_path):
    common = ["--in", str(small[0]), "--corrupted", str(small[1]), "--theta", "2"]
    assert cli.main(["sweep", *common, "--param", "theta", "--values", "2", "--csv", str(tmp_path / "s.csv")]) == 0
    assert cli.main(["bench", *common, "--methods", "ntrpca", "--csv", str(tmp_path / "b.csv")]) == 0
    s, b = read_rows(tmp_path / "s.csv")[0], read_rows(tmp_path / "b.csv")[0]
    for key in ("psnr", "ssim", "iterations", "converged"):
        assert s[key] == b[key]


@pytest.mark.parametrize("param, values", [("theta", "1,abc"), ("p", "4,5.5"), ("m", ""), ("theta", "3:1:0")])
def test_sweep_bad_values(small, param, values, capsys):
    args = ["sweep", "--in", str(small[0]), "--corrupted", str(small[1]), "--param", param, "--values", values]
    assert cli.main(args) == 3
    assert "--values" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::tenrec.errors.MaxItersExceeded")
def test_sweep_patch_size(small, tmp_path):
    out = tmp_path / "p.csv"
    assert cli.main(["sweep", "--in", str(small[0]), "--corrupted", str(small[1]), "--param", "p",
                     "--values", "8,16", "--group-size", "4", "--stride", "8", "--max-iters", "100",
                     "--csv", str(out)]) == 0
    rows = read_rows(out)
    assert [r["value"] for r in rows] == ["8", "16"] and {r["method"] for r in rows} == {"nntrpca"}


def test_console_script(tmp_path):
    exe = shutil.which("tenrec")
    cmd = [exe] if exe else [sys.executable, "-m", "tenrec.cli"]
    res = subprocess.run(cmd + ["corrupt", "--in", "x.png", "--out", "y.png", "--rate", "2"],
                         cwd=tmp_path, capture_output=True, text=True)
    assert res.returncode == 3 and "--rate" in res.stderr
