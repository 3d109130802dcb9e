import json

import numpy as np
import pytest

from neurotopo.cli import main
from neurotopo.export import read_pgm
from neurotopo.optimize import ConvergenceHistory

pytestmark = pytest.mark.filterwarnings("ignore:final volume fraction")

BEAM = "preset: beam\n"


@pytest.fixture
def beam_cfg(tmp_path):
    p = tmp_path / "beam.yaml"
    p.write_text(BEAM)
    return p


def solve(cfg, out, *extra):
    return main(["solve", str(cfg), "--out", str(out), *map(str, extra)])


def test_solve_writes_all_outputs(tmp_path, beam_cfg):
    out = tmp_path / "run"
    assert solve(beam_cfg, out, "--epochs", 30, "--filter", "gamma", "--kernels", 32) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert sorted(p.name for p in out.iterdir()) == manifest["outputs"]
    assert manifest["outputs"] == ["density.csv", "density.pgm", "field.csv", "history.csv",
                                   "manifest.json", "params.csv"]
    assert manifest["optimization"]["filter"] == "gamma" and manifest["seed"] == 0
    hist = ConvergenceHistory.from_csv(out / "history.csv")
    assert hist.epoch == list(range(30))
    img = read_pgm(out / "density.pgm")
    assert img.shape == (20, 40)
    grid = np.loadtxt(out / "density.csv", delimiter=",")
    assert grid.shape == (20, 40) and np.all((grid > 0) & (grid <= 1))
    field = np.loadtxt(out / "field.csv", delimiter=",")
    assert field.shape == (20, 40) and field.max() == pytest.approx(0.4)


def test_solve_with_defaults(tmp_path, beam_cfg):
    assert solve(beam_cfg, tmp_path) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["optimization"]["epochs"] == 1000 and manifest["optimization"]["filter"] == "none"
    hist = ConvergenceHistory.from_csv(tmp_path / "history.csv")
    assert len(hist) == 1000 and abs(hist.vol_frac[-1] / 0.3 - 1) <= 0.01
    assert read_pgm(tmp_path / "density.pgm").shape == (20, 40)
    assert "field.csv" not in manifest["outputs"]


def test_filter_flag_changes_only_the_filter(tmp_path, beam_cfg):
    a, b = tmp_path / "none", tmp_path / "log"
    assert solve(beam_cfg, a, "--epochs", 40, "--kernels", 16) == 0
    assert solve(beam_cfg, b, "--epochs", 40, "--kernels", 16, "--filter", "log") == 0
    assert (a / "history.csv").read_text() != (b / "history.csv").read_text()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    for m in (ma, mb):
        del m["timestamps"], m["optimization"]["filter"], m["outputs"]
    assert ma == mb
    assert not (a / "field.csv").exists()


def test_single_epoch(tmp_path, beam_cfg):
    assert solve(beam_cfg, tmp_path, "--epochs", 1) == 0
    lines = (tmp_path / "history.csv").read_text().splitlines()
    assert len(lines) == 2


def test_rerun_from_manifest_is_byte_identical(tmp_path, beam_cfg):
    first = tmp_path / "first"
    assert solve(beam_cfg, first, "--epochs", 50, "--filter", "log", "--seed", 3, "--kernels", 24) == 0
    second = tmp_path / "second"
    assert solve(first / "manifest.json", second) == 0
    assert (first / "history.csv").read_bytes() == (second / "history.csv").read_bytes()
    assert (first / "params.csv").read_bytes() == (second / "params.csv").read_bytes()


@pytest.mark.parametrize("text", ["preset: nosuch\n", "nelx: 4\n", "- 1\n- 2\n", "preset: beam\nvolfrac: 1.5\n"])
def test_bad_config_exits_2(tmp_path, text):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(text)
    assert solve(cfg, tmp_path / "o") == 2
    assert solve(tmp_path / "missing.yaml", tmp_path / "o") == 2


def test_bad_arguments_exit_2(beam_cfg, tmp_path):
    assert solve(beam_cfg, tmp_path, "--filter", "sqrt") == 2
    assert solve(beam_cfg, tmp_path, "--epochs", 0) == 2


SPEC = """problem: {preset: parametric, preset_args: {nelx: 12, nely: 6}}
loads: [3, 40]
volfracs: [0.3, 0.45]
filters: [none, gamma, log]
seeds: [0]
epochs: 12
n_kernels: 8
"""


def test_sweep_outputs(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(SPEC)
    assert main(["sweep", str(spec), "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 2 * 3
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert set(summary["filters"]) == {"none", "gamma", "log"}
    assert summary["filters"]["log"]["count"] == 4


def test_sweep_worker_count_does_not_change_files(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text(SPEC)
    assert main(["sweep", str(spec), "--out", str(tmp_path / "w1"), "--workers", "1"]) == 0
    assert main(["sweep", str(spec), "--out", str(tmp_path / "w2"), "--workers", "2"]) == 0
    for name in ("results.csv", "summary.json"):
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w2" / name).read_bytes()


def test_sweep_missing_or_bad_spec(tmp_path):
    assert main(["sweep", str(tmp_path / "nope.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text(SPEC.replace("filters: [none, gamma, log]", "filters: []"))
    assert main(["sweep", str(bad)]) == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("trained")
    cfg = root / "beam.yaml"
    cfg.write_text(BEAM)
    assert solve(cfg, root / "run", "--epochs", 30, "--filter", "log", "--kernels", 16) == 0
    return root


def test_render_factor_one_and_four(trained):
    ckpt, cfg = trained / "run" / "params.csv", trained / "beam.yaml"
    one, four = trained / "r1.pgm", trained / "r4.pgm"
    assert main(["render", str(ckpt), "--config", str(cfg), "--out", str(one)]) == 0
    assert main(["render", str(ckpt), "--config", str(cfg), "--upsample", "4", "--out", str(four)]) == 0
    assert read_pgm(one).shape == (20, 40)
    assert read_pgm(four).shape == (80, 160)
    # at factor 1 the render reproduces the training-grid image
    assert np.array_equal(read_pgm(one), read_pgm(trained / "run" / "density.pgm"))


def test_render_accepts_manifest_as_config(trained):
    out = trained / "rm.pgm"
    args = ["render", str(trained / "run" / "params.csv"),
            "--config", str(trained / "run" / "manifest.json"), "--out", str(out)]
    assert main(args) == 0
    assert np.array_equal(read_pgm(out), read_pgm(trained / "run" / "density.pgm"))


def test_render_rejects_bad_input(trained, tmp_path):
    cfg = str(trained / "beam.yaml")
    bad = tmp_path / "bad.csv"
    bad.write_text("3,log\n1,2\n")
    assert main(["render", str(bad), "--config", cfg, "--out", str(tmp_path / "x.pgm")]) == 2
    ckpt = str(trained / "run" / "params.csv")
    assert main(["render", ckpt, "--config", cfg, "--upsample", "0"]) == 2
    assert main(["render", ckpt, "--config", cfg, "--upsample", "-2"]) == 2
