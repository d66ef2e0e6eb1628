"""End-to-end tests for the cc-fractal command-line interface."""

import json

import pytest

from ccfractal.cli import main

BASE = {
    "spec": {"heisenberg": 1},
    "generator": {"kind": "example1", "m": 1, "depth": 2},
    "seed": 7,
}


def write_config(tmp_path, overrides=None, name="config.json"):
    config = dict(BASE)
    config.update(overrides or {})
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def test_gen_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    (run_dir,) = (tmp_path / "out").iterdir()
    assert run_dir.name.startswith("gen-")
    pieces = json.loads((run_dir / "pieces.json").read_text())
    assert pieces["count"] == 16
    assert (run_dir / "sample.csv").exists()
    sidecar = json.loads((run_dir / "sidecar.json").read_text())
    assert sidecar["command"] == "gen"
    assert sidecar["config"]["seed"] == 7


def test_missing_seed_is_config_error(tmp_path):
    config = {k: v for k, v in BASE.items() if k != "seed"}
    path = tmp_path / "noseed.json"
    path.write_text(json.dumps(config))
    assert main(["gen", "--config", str(path)]) == 2


def test_seed_flag_substitutes(tmp_path):
    config = {k: v for k, v in BASE.items() if k != "seed"}
    path = tmp_path / "noseed.json"
    path.write_text(json.dumps(config))
    assert main(["gen", "--config", str(path), "--seed", "3",
                 "--out", str(tmp_path / "out")]) == 0


def test_missing_config_file(tmp_path):
    assert main(["dims", "--config", str(tmp_path / "absent.json")]) == 2


def test_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["gen", "--config", str(path)]) == 2


def test_unknown_generator_kind(tmp_path):
    cfg = write_config(tmp_path, {"generator": {"kind": "sierpinski", "depth": 2}})
    assert main(["gen", "--config", str(cfg)]) == 2


def test_budget_exceeded_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("CC_FRACTAL_BUDGET", "10")
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 3
    assert not out.exists()  # no partial artifacts


def test_dims_fixture_passes(tmp_path):
    cfg = write_config(tmp_path, {
        "generator": {"kind": "fixture", "name": "vertical-segment"},
        "scales": {"dyadic": [2, 8]},
    })
    out = tmp_path / "out"
    assert main(["dims", "--config", str(cfg), "--out", str(out)]) == 0
    (run_dir,) = out.iterdir()
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["pass"] is True
    assert summary["dim_G"] == pytest.approx(2.0, abs=0.1)
    header = (run_dir / "counts.csv").read_text().splitlines()[0]
    assert header == "r,count_euclid,count_homog"
    assert (run_dir / "loglog.svg").stat().st_size > 0


def test_dims_failure_still_writes_report(tmp_path):
    cfg = write_config(tmp_path, {
        "generator": {"kind": "moran", "s": 2.5, "depth": 5},
        "scales": {"dyadic": [1, 8]},
        "tolerance": 0.0001,
    })
    out = tmp_path / "out"
    assert main(["dims", "--config", str(cfg), "--out", str(out)]) == 1
    (run_dir,) = out.iterdir()
    assert json.loads((run_dir / "summary.json").read_text())["pass"] is False


def test_excise_bound_pass_and_fail(tmp_path):
    ok = write_config(tmp_path, {
        "generator": {"kind": "example1", "m": 1, "depth": 3},
        "excise": {"mode": "linear", "param": 0.125, "radii": {"native_k": [1, 2]},
                   "s": 1.0, "bound": 0.105, "quantile": 0.9, "points": 50},
    }, name="ok.json")
    assert main(["excise", "--config", str(ok), "--out", str(tmp_path / "a")]) == 0
    bad = write_config(tmp_path, {
        "generator": {"kind": "example1", "m": 1, "depth": 3},
        "excise": {"mode": "linear", "param": 0.125, "radii": {"native_k": [1]},
                   "s": 1.0, "bound": 100.0, "quantile": 0.9, "points": 50},
    }, name="bad.json")
    assert main(["excise", "--config", str(bad), "--out", str(tmp_path / "b")]) == 1


def test_density_command(tmp_path):
    cfg = write_config(tmp_path, {
        "density": {"radii": [0.25, 0.125], "s": 1.0, "points": 20},
    })
    out = tmp_path / "out"
    assert main(["density", "--config", str(cfg), "--out", str(out)]) == 0
    (run_dir,) = out.iterdir()
    lines = (run_dir / "ratios.csv").read_text().splitlines()
    assert lines[0] == "r,ratio"
    assert len(lines) == 1 + 2 * 20


def test_calibrate_output(tmp_path):
    cfg = write_config(tmp_path, {"calibrate": {"samples": 5000}})
    out = tmp_path / "out"
    assert main(["calibrate", "--config", str(cfg), "--out", str(out)]) == 0
    (run_dir,) = out.iterdir()
    doc = json.loads((run_dir / "calibration.json").read_text())
    assert 0.0 < doc["c"] < 1.0
    assert doc["violations"] == 0


def test_content_addressed_dirs_differ_by_config(tmp_path):
    a = write_config(tmp_path, name="a.json")
    b = write_config(tmp_path, {"seed": 8}, name="b.json")
    out = tmp_path / "out"
    assert main(["gen", "--config", str(a), "--out", str(out)]) == 0
    assert main(["gen", "--config", str(b), "--out", str(out)]) == 0
    assert len(list(out.iterdir())) == 2


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
    (run_dir,) = out.iterdir()
    before = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
    after = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    assert before == after


def test_native_radii_out_of_range(tmp_path):
    cfg = write_config(tmp_path, {
        "excise": {"mode": "linear", "param": 0.125, "radii": {"native_k": [9]}},
    })
    assert main(["excise", "--config", str(cfg)]) == 2
