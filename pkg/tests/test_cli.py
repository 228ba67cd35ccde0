from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from willmore_lab.cli import main, read_config
from willmore_lab.errors import InvalidInputError

CHECK_KEYS = {"name", "paper_tag", "value", "target", "tol", "pass"}


def run_cli(capsys, *argv):
    code = main(list(argv))
    doc = json.loads(capsys.readouterr().out)
    return code, doc


def strip_meta(doc):
    return {k: v for k, v in doc.items() if k != "meta"}


def assert_well_formed(code, doc):
    assert set(doc) >= {"command", "inputs", "results", "checks", "pass", "meta"}
    assert "timestamp" in doc["meta"] and "backend" in doc["meta"]
    for c in doc["checks"]:
        assert set(c) == CHECK_KEYS
    assert doc["pass"] == all(c["pass"] for c in doc["checks"])
    assert code == (0 if doc["pass"] else 1)


@pytest.mark.parametrize(
    "flags,genus",
    [(["--surface", "clifford"], 1), (["--surface", "gsphere", "--r", "1.0"], 0), (["--surface", "revolution"], 1)],
)
def test_gen_writes_mesh(capsys, tmp_path, flags, genus):
    out = tmp_path / "m.s3m"
    code, doc = run_cli(capsys, "gen", *flags, "--res", "16", "--out", str(out))
    assert_well_formed(code, doc)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "S3MESH 1"
    nv, nf, g = (int(t) for t in lines[1].split())
    assert (nv, nf, g) == (doc["results"]["vertices"], doc["results"]["faces"], genus)


def test_energy_surface(capsys):
    code, doc = run_cli(capsys, "energy", "--surface", "clifford", "--res", "64", "--target", str(2 * np.pi**2))
    assert_well_formed(code, doc)
    assert code == 0
    assert doc["results"]["willmore"] == pytest.approx(2 * np.pi**2, rel=5e-3)
    assert {c["name"] for c in doc["checks"]} == {"willmore_at_least_4pi", "willmore_at_least_2pi2", "willmore_target"}


def test_energy_from_file(capsys, tmp_path):
    out = tmp_path / "c.s3m"
    main(["gen", "--surface", "clifford", "--res", "64", "--out", str(out)])
    capsys.readouterr()
    code, doc = run_cli(capsys, "energy", "--in", str(out), "--tol", "0.05")
    assert_well_formed(code, doc)
    assert doc["inputs"] == {"in": str(out), "tol": 0.05, "target": None}
    assert doc["results"]["willmore"] == pytest.approx(2 * np.pi**2, rel=0.05)


def test_energy_target_mismatch_exits_1(capsys):
    code, doc = run_cli(capsys, "energy", "--surface", "clifford", "--res", "32", "--target", "30")
    assert code == 1 and doc["pass"] is False


def test_sweep_writes_csv(capsys, tmp_path):
    stem = tmp_path / "sweep"
    code, doc = run_cli(capsys, "sweep", "--surface", "flat", "--a", "0.6", "--res", "24", "--vgrid", "2",
                        "--tgrid", "5", "--workers", "1", "--out", str(stem))
    assert_well_formed(code, doc)
    assert doc["results"]["grid"] == {"v_per_axis": 2, "v_points": 16, "t_points": 5}
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) == 1 + 16 * 5
    assert json.loads((tmp_path / "sweep.json").read_text())["results"] == doc["results"]


def test_sweep_workers_do_not_change_output(capsys):
    base = ["sweep", "--surface", "clifford", "--res", "16", "--vgrid", "2", "--tgrid", "3"]
    _, one = run_cli(capsys, *base, "--workers", "1")
    _, two = run_cli(capsys, *base, "--workers", "2")
    one["inputs"].pop("workers")
    two["inputs"].pop("workers")
    assert strip_meta(one) == strip_meta(two)


def test_degree(capsys):
    code, doc = run_cli(capsys, "degree", "--surface", "clifford", "--res", "48")
    assert_well_formed(code, doc)
    assert code == 0
    assert [c["name"] for c in doc["checks"]] == ["degree_equals_genus", "tube_integral"]


def test_sphere_check_structure(capsys):
    code, doc = run_cli(capsys, "sphere-check", "--samples", "10")
    assert_well_formed(code, doc)
    names = [c["name"] for c in doc["checks"]]
    assert names[:4] == ["cap_image_boundary", "hemisphere_image_boundary", "roundtrip", "composition"]
    assert all(c["pass"] for c in doc["checks"][:4])
    assert len(doc["results"]["rates"]) == 5


def test_blowup_structure(capsys):
    code, doc = run_cli(capsys, "blowup", "--surface", "clifford", "--res", "16", "--samples", "2000",
                        "--workers", "1")
    assert_well_formed(code, doc)
    assert [r["case"] for r in doc["results"]["runs"]] == ["ii", "iv", "iv", "iv"]
    assert len(doc["checks"]) == 8


def test_optimize_flat(capsys, tmp_path):
    stem = tmp_path / "opt"
    code, doc = run_cli(capsys, "optimize", "--family", "flat", "--start", "0.4", "--res", "32", "--step", "0.05",
                        "--out", str(stem))
    assert_well_formed(code, doc)
    assert code == 0
    assert doc["results"]["params"][0] == pytest.approx(1 / np.sqrt(2), abs=5e-3)
    assert (tmp_path / "opt.csv").read_text().startswith("iter,area,willmore")


def test_optimize_mesh_needs_input(capsys):
    code, doc = run_cli(capsys, "optimize", "--family", "mesh")
    assert code == 2
    assert doc["error"]["type"] == "InvalidInputError"


def test_cubical_all(capsys):
    code, doc = run_cli(capsys, "cubical")
    assert_well_formed(code, doc)
    assert code == 0
    assert {"boundary_squared", "cell_counts", "fineness_adjacent", "nearest_composition"} <= {
        c["name"] for c in doc["checks"]
    }


def test_errors_exit_2(capsys, tmp_path):
    code, doc = run_cli(capsys, "energy")
    assert code == 2 and doc["pass"] is False and set(doc["error"]) == {"type", "message"}
    code, doc = run_cli(capsys, "energy", "--in", str(tmp_path / "missing.s3m"))
    assert code == 2
    bad = tmp_path / "bad.s3m"
    bad.write_text("not a mesh\n")
    code, doc = run_cli(capsys, "energy", "--in", str(bad))
    assert code == 2 and doc["error"]["type"] == "InvalidInputError"
    code, doc = run_cli(capsys, "energy", "--surface", "clifford", "--res", "16", "--tol", "-1")
    assert code == 2


def test_argparse_rejects_unknown_choice(capsys):
    with pytest.raises(SystemExit):
        main(["gen", "--surface", "klein"])


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# energy run\nsurface = flat\nres = 24  # coarse\na = 0.6\ngrad-tol = 0.5\n")
    assert read_config(cfg) == {"surface": "flat", "res": "24", "a": "0.6", "grad_tol": "0.5"}
    _, doc = run_cli(capsys, "energy", "--config", str(cfg))
    assert doc["inputs"]["res"] == 24 and doc["inputs"]["a"] == 0.6
    _, doc = run_cli(capsys, "energy", "--config", str(cfg), "--res", "32")
    assert doc["inputs"]["res"] == 32 and doc["inputs"]["a"] == 0.6


def test_config_syntax_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("surface flat\n")
    with pytest.raises(InvalidInputError):
        read_config(cfg)


def test_deterministic_apart_from_meta(capsys):
    argv = ["degree", "--surface", "clifford", "--res", "24", "--seed", "3"]
    _, a = run_cli(capsys, *argv)
    _, b = run_cli(capsys, *argv)
    assert strip_meta(a) == strip_meta(b)


def test_workers_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("WILLMORE_LAB_WORKERS", "1")
    _, doc = run_cli(capsys, "blowup", "--surface", "clifford", "--res", "16", "--samples", "500")
    assert doc["inputs"]["workers"] == 1
    monkeypatch.setenv("WILLMORE_LAB_WORKERS", "0")
    code, doc = run_cli(capsys, "blowup", "--surface", "clifford", "--res", "16", "--samples", "500")
    assert code == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "willmore_lab.cli", "cubical", "--audit", "boundary"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    assert json.loads(out.stdout)["command"] == "cubical"
