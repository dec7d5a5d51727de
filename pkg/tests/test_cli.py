from __future__ import annotations

import json
import math
import subprocess
import sys

import pytest

from isoyamabe import c_n_value
from isoyamabe.cli import RunManifest, main, read_table_csv, write_table_csv

SOLVE = ["solve", "--n", "3", "--ell", "2", "--m1", "1", "--m2", "1"]


def test_solve_writes_profile_and_manifest(tmp_path):
    out = tmp_path / "a"
    assert main(SOLVE + ["--k", "1", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    sol = man["results"]["solutions"][0]
    assert sol["energy"] == pytest.approx(326, rel=0.02)
    assert len(sol["zeroes"]) == 1
    assert (out / "profile.csv").read_text().startswith("r,w,wp\n")
    assert "wall_time" not in man and "wall_time" in json.loads((out / "timing.json").read_text())


def test_outputs_are_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(SOLVE + ["--k", "2", "--out", str(a)]) == 0
    monkeypatch.setenv("ISOYAMABE_THREADS", "2")
    assert main(SOLVE + ["--k", "2", "--out", str(b)]) == 0
    for name in ("manifest.json", "profile.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_roundtrip_and_rerun(tmp_path):
    out = tmp_path / "a"
    main(SOLVE + ["--k", "1", "--rtol", "1e-11", "--out", str(out)])
    man = RunManifest.read(out)
    assert RunManifest.from_dict(man.to_dict()) == man
    assert man.wall_time is not None and man.tool_version
    s, c = man.spec, man.config
    again = tmp_path / "b"
    argv = ["solve", "--n", str(s["n"]), "--ell", str(s["ell"]), "--m1", str(s["m1"]), "--m2", str(s["m2"]),
            "--k", "1", "--eps0", repr(c["eps0"]), "--rtol", repr(c["rtol"]), "--atol", repr(c["atol"]), "--out", str(again)]
    assert main(argv) == 0
    first = man.results["solutions"][0]
    second = RunManifest.read(again).results["solutions"][0]
    for key in ("residual", "energy"):
        assert second[key] == pytest.approx(first[key], rel=1e-12, abs=1e-300)


def test_k0_manifest_has_sphere_volume(tmp_path):
    assert main(SOLVE + ["--k", "0", "--out", str(tmp_path)]) == 0
    sol = json.loads((tmp_path / "manifest.json").read_text())["results"]["solutions"][0]
    assert sol["energy"] == pytest.approx(c_n_value(3), rel=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--n", "3", "--ell", "1", "--m1", "2", "--m2", "2", "--k", "1"],
        ["solve", "--n", "3", "--ell", "2", "--m1", "1", "--m2", "2", "--k", "1"],
        SOLVE + ["--k", "1", "--rtol", "-1"],
    ],
)
def test_invalid_input_exit_code(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    assert "invalid input" in capsys.readouterr().err


def test_not_found_exit_code(tmp_path):
    argv = ["solve", "--n", "4", "--ell", "2", "--m1", "1", "--m2", "2", "--k", "5", "--scan-max", "2"]
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_budget_exit_code(tmp_path):
    argv = ["diagnose", "--n", "3", "--ell", "2", "--m1", "1", "--m2", "1", "--scan-points", "2", "--max-samples", "4"]
    assert main(argv + ["--out", str(tmp_path)]) == 3


def test_diagnose_reports(tmp_path):
    argv = ["diagnose", "--n", "3", "--ell", "2", "--m1", "1", "--m2", "1", "--limit-H0", "2", "--limit-p", "5",
            "--ladder", "10,100", "--out", str(tmp_path)]
    assert main(argv) == 0
    rep = json.loads((tmp_path / "diagnose.json").read_text())
    assert rep["theta_min"] < -2 * math.pi
    assert rep["x"]["monotone"] and len(rep["x"]["radii"]) == 4
    assert rep["limit"]["bubble_pass"] and not rep["limit"]["subcritical"]
    assert rep["zero_growth"]["counts"] == [2, 20]
    assert rep["convergence"]["decreasing"]
    for name in ("scan_R.csv", "scan_S.csv", "limit.csv", "manifest.json"):
        assert (tmp_path / name).exists()


def test_table_csv_failure_markers(tmp_path):
    rows = [
        {"n": 3, "k": 2, "m": 2, "c_n": 19.7, "E": 326.0, "ratio": 16.5, "error": None},
        {"n": 4, "k": 2, "m": 3, "c_n": 26.3, "E": None, "ratio": None, "error": "boom"},
    ]
    write_table_csv(rows, tmp_path / "t.csv")
    text = (tmp_path / "t.csv").read_text()
    assert text.splitlines()[0] == "n,k,m,c_n,E,ratio" and "FAILED" in text
    back = read_table_csv(tmp_path / "t.csv")
    assert back[0]["E"] == 326.0 and back[1]["E"] is None


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "isoyamabe", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "solve" in res.stdout
