import json

import numpy as np
import pytest

from tubal.cli import main, parse_grid, UsageError
from tubal.io import load_tensor, save_tensor
from tubal.synth import sensitivity_problem
from tubal.t_algebra import identity_tensor


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_info_on_identity(tmp_path, capsys):
    p = tmp_path / "eye.t3b"
    save_tensor(identity_tensor(4, 3), p)
    code, out, _ = run(capsys, "info", p, "--n-target", 2)
    assert code == 0
    assert "tubal_rank: 4" in out
    assert "multi_rank: (4, 4, 4)" in out
    assert "dims: (4, 4, 3)" in out
    code, out, _ = run(capsys, "info", p, "--json")
    info = json.loads(out)
    assert info["tubal_rank"] == 4 and info["tnn"] == pytest.approx(12.0)


def test_complete_fully_observed(tmp_path, capsys, rng):
    a = rng.standard_normal((5, 5, 3))
    save_tensor(a, tmp_path / "o.t3b")
    save_tensor(np.ones(a.shape), tmp_path / "m.t3b")
    out = tmp_path / "x.t3b"
    code, stdout, _ = run(
        capsys, "complete", "--input", tmp_path / "o.t3b", "--mask", tmp_path / "m.t3b",
        "--n-target", 1, "--output", out,
    )
    assert code == 0
    assert np.max(np.abs(load_tensor(out) - a)) <= 1e-5
    assert json.loads(stdout)["converged"] is True
    manifest = json.loads((tmp_path / "x.t3b.manifest.json").read_text())
    assert manifest["config"]["beta"] is not None and manifest["config"]["n_target"] == 1
    assert manifest["outputs"] == [str(out)]


def test_complete_requires_n_target(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["complete", "--input", "o.t3b", "--mask", "m.t3b"])
    assert info.value.code == 1
    assert "--n-target" in capsys.readouterr().err


def test_complete_reports_io_and_dimension_errors(tmp_path, capsys):
    save_tensor(np.ones((2, 2, 2)), tmp_path / "o.t3b")
    save_tensor(np.ones((2, 2, 3)), tmp_path / "m.t3b")
    code, _, err = run(capsys, "complete", "--input", tmp_path / "o.t3b", "--mask", tmp_path / "m.t3b", "--n-target", 1)
    assert code == 1 and "dims" in err
    code, _, err = run(capsys, "complete", "--input", tmp_path / "nope.t3b", "--mask", tmp_path / "m.t3b", "--n-target", 1)
    assert code == 1 and "error" in err


def test_complete_not_converged_exit_code(tmp_path, capsys):
    a, mask = sensitivity_problem((10, 10, 4), 2, 0.5, seed=1)
    save_tensor(np.where(mask, a, 0), tmp_path / "o.t3b")
    save_tensor(mask.astype(float), tmp_path / "m.t3b")
    code, _, _ = run(
        capsys, "complete", "--input", tmp_path / "o.t3b", "--mask", tmp_path / "m.t3b",
        "--n-target", 2, "--max-iters", 2,
    )
    assert code == 2


def test_complete_sensitivity_fixture(tmp_path, capsys):
    a, mask = sensitivity_problem()
    save_tensor(a, tmp_path / "truth.t3b")
    save_tensor(np.where(mask, a, 0.0), tmp_path / "o.t3b")
    save_tensor(mask.astype(float), tmp_path / "m.t3b")
    code, _, _ = run(
        capsys, "complete", "--input", tmp_path / "o.t3b", "--mask", tmp_path / "m.t3b", "--n-target", 5,
        "--truth", tmp_path / "truth.t3b", "--report", tmp_path / "r.json", "--seed", 3,
    )
    rep = json.loads((tmp_path / "r.json").read_text())
    assert code in (0, 2)
    assert set(rep) == {"psnr", "ssim", "rse", "iterations", "converged"}
    assert rep["rse"] < 1e-2


def test_rpca_outputs(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "lowrank", "--dims", "12x12x5", "--rank", 1, "--seed", 2, "--output", tmp_path / "a.t3b")
    assert code == 0
    out_l, out_e = tmp_path / "l.t3b", tmp_path / "e.t3b"
    code, stdout, _ = run(
        capsys, "rpca", "--input", tmp_path / "a.t3b", "--n-target", 1, "--lambda", 10,
        "--output-l", out_l, "--output-e", out_e,
    )
    rep = json.loads(stdout)
    assert code == 0
    o, l, e = load_tensor(tmp_path / "a.t3b"), load_tensor(out_l), load_tensor(out_e)
    assert np.abs(e).max() < 1e-4
    assert np.abs(l + e - o).max() <= rep["residual"] + 1e-15


def test_gen_commands(tmp_path, capsys):
    assert run(capsys, "gen", "mask", "--dims", "4x5x6", "--rate", 0.5, "--output", tmp_path / "m.t3b")[0] == 0
    m = load_tensor(tmp_path / "m.t3b")
    assert m.sum() == 60 and set(np.unique(m)) <= {0.0, 1.0}
    assert run(capsys, "gen", "identity", "--n", 3, "--n3", 2, "--output", tmp_path / "i.t3b")[0] == 0
    np.testing.assert_array_equal(load_tensor(tmp_path / "i.t3b"), identity_tensor(3, 2))
    code, _, _ = run(
        capsys, "gen", "corrupt", "--input", tmp_path / "i.t3b", "--sparsity", 0.25,
        "--output", tmp_path / "c.t3b", "--output-mask", tmp_path / "w.t3b",
    )
    assert code == 0 and load_tensor(tmp_path / "w.t3b").sum() == 4
    assert (tmp_path / "c.t3b.manifest.json").exists()


def test_metrics_command(tmp_path, capsys):
    save_tensor(np.ones((3, 3, 2)), tmp_path / "b.t3b")
    save_tensor(np.full((3, 3, 2), 1.1), tmp_path / "a.t3b")
    code, out, _ = run(capsys, "metrics", "--a", tmp_path / "a.t3b", "--b", tmp_path / "b.t3b")
    assert code == 0
    assert json.loads(out)["psnr"] == pytest.approx(20.0)
    code, out, _ = run(capsys, "metrics", "--a", tmp_path / "b.t3b", "--b", tmp_path / "b.t3b")
    assert json.loads(out)["psnr"] == "inf"


def test_bench_single_cell(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, stdout, _ = run(
        capsys, "bench", "tc", "--grid", "dims=30x30x20;ranks=1;rates=0.9", "--trials", 2, "--out", out,
    )
    assert code == 0
    assert out.read_text() == "rank\\rate,0.9\n1,1.0000\n"
    assert (tmp_path / "grid_tnn.csv").read_text() == "rank\\rate,0.9\n1,1.0000\n"
    assert (tmp_path / "grid_delta.csv").read_text() == "rank\\rate,0.9\n1,0.0000\n"


def test_bench_rerun_and_replay_are_byte_identical(tmp_path, capsys):
    spec = tmp_path / "grid.json"
    spec.write_text(json.dumps({"dims": [10, 10, 4], "ranks": [1, 3], "sparsities": [0.05, 0.2]}))
    args = ["bench", "rpca", "--grid", spec, "--trials", 2, "--seed", 7, "--max-iters", 50]
    assert run(capsys, *args, "--out", tmp_path / "a.csv")[0] == 0
    assert run(capsys, *args, "--out", tmp_path / "b.csv")[0] == 0
    for suffix in ("", "_tnn", "_delta"):
        assert (tmp_path / f"a{suffix}.csv").read_bytes() == (tmp_path / f"b{suffix}.csv").read_bytes()
    first = (tmp_path / "a.csv").read_bytes()
    (tmp_path / "a.csv").unlink()
    assert run(capsys, "replay", tmp_path / "a.csv.manifest.json")[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == first
    assert b"\r" not in first


@pytest.mark.parametrize("grid", ["ranks=1,2", "dims=3x3;ranks=1;rates=0.5", "nonsense", "ranks=;rates=0.5"])
def test_malformed_grid(tmp_path, capsys, grid):
    code, _, err = run(capsys, "bench", "tc", "--grid", grid, "--out", tmp_path / "g.csv")
    assert code == 1 and "grid" in err


def test_parse_grid_synonyms():
    g = parse_grid("dims=40x40x20;ranks=1,2;sparsities=0.05,0.1", "rpca")
    assert g == {"dims": (40, 40, 20), "ranks": [1, 2], "levels": [0.05, 0.1]}
    with pytest.raises(UsageError):
        parse_grid("ranks=1", "tc")
