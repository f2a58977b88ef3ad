import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from chartgeo.cli import main, read_curve
from chartgeo.functionals import energy, length


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def integrate_file(tmp_path, name, *flags):
    path = tmp_path / name
    assert main(["integrate", *map(str, flags), "--out", str(path)]) == 0
    return path


def test_integrate_euclidean(tmp_path):
    path = integrate_file(tmp_path, "line.json", "--manifold", "euclidean:2", "--x0", "0,0",
                          "--v0", "1,2", "--t0", 0, "--t1", 1, "--steps", 100)
    doc = json.loads(path.read_text())
    assert doc["version"] == 1 and doc["manifold"] == "euclidean:2"
    assert len(doc["samples"]) == 101
    assert np.allclose(doc["samples"][-1]["coords"], [1, 2], atol=1e-10)
    assert "embedded" not in doc["samples"][0]
    assert doc["summary"]["length"] == pytest.approx(math.sqrt(5), abs=1e-10)


def test_integrate_equator_closes(tmp_path):
    path = integrate_file(tmp_path, "eq.json", "--manifold", "sphere2", "--chart", "N", "--x0", "1,0",
                          "--v0", "0,1", "--t0", 0, "--t1", 6.283185, "--steps", 1000)
    doc = json.loads(path.read_text())
    first, last = doc["samples"][0], doc["samples"][-1]
    assert np.allclose(last["coords"], first["coords"], atol=1e-5)
    assert all(abs(np.linalg.norm(s["embedded"]) - 1) <= 1e-12 for s in doc["samples"])


def test_integrate_missing_flag_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["integrate", "--manifold", "sphere2", "--v0", "0,1", "--out", str(tmp_path / "x.json")])
    assert info.value.code == 2


@pytest.mark.parametrize("flags", [
    ["--manifold", "torus", "--x0", "0,0", "--v0", "1,0"],
    ["--manifold", "sphere2", "--x0", "0,a", "--v0", "1,0"],
    ["--manifold", "sphere2", "--x0", "0,0", "--v0", "1,0", "--chart", "Q"],
])
def test_integrate_bad_flags_exit_2(tmp_path, flags):
    with pytest.raises(SystemExit) as info:
        main(["integrate", *flags, "--out", str(tmp_path / "x.json")])
    assert info.value.code == 2


def test_integrate_numerical_failure_exits_1(tmp_path, capsys):
    code, _, err = run(capsys, "integrate", "--manifold", "sphere2", "--x0", "0,0,0", "--v0", "1,0",
                       "--out", tmp_path / "x.json")
    assert code == 1 and "error" in err
    code, _, err = run(capsys, "integrate", "--manifold", "sphere2", "--chart", 5, "--x0", "0,0",
                       "--v0", "1,0", "--out", tmp_path / "x.json")
    assert code == 1


def test_shoot_sphere(tmp_path, capsys):
    path = tmp_path / "arc.json"
    code, _, _ = run(capsys, "shoot", "--manifold", "sphere2", "--p", "1,0,0", "--q", "0,1,0",
                     "--out", path)
    assert code == 0
    summary = json.loads(path.read_text())["summary"]
    assert summary["length"] == pytest.approx(math.pi / 2, abs=1e-6)
    assert len(summary["v0"]) == 2


def test_shoot_euclidean(tmp_path, capsys):
    path = tmp_path / "e3.json"
    assert run(capsys, "shoot", "--manifold", "euclidean:3", "--p", "0,0,0", "--q", "1,1,1",
               "--out", path)[0] == 0
    summary = json.loads(path.read_text())["summary"]
    assert summary["length"] == pytest.approx(math.sqrt(3), abs=1e-9)
    assert np.allclose(summary["v0"], [1, 1, 1], atol=1e-8)


def test_shoot_antipodal_exits_1(tmp_path, capsys):
    code, _, err = run(capsys, "shoot", "--manifold", "sphere2", "--p", "0,0,1", "--q=0,0,-1",
                       "--out", tmp_path / "a.json")
    assert code == 1 and "antipodal" in err
    code, _, err = run(capsys, "shoot", "--manifold", "sphere2", "--p", "1,0,0", "--q=-1,0,0",
                       "--out", tmp_path / "a.json")
    assert code == 1 and "antipodal" in err
    assert not (tmp_path / "a.json").exists()


def test_shoot_no_convergence_reports_best(tmp_path, capsys):
    code, _, err = run(capsys, "shoot", "--manifold", "sphere2", "--p", "1,0,0", "--q", "0,0.6,0.8",
                       "--max-iter", 1, "--multi-start", 1, "--steps", 20, "--tol", 1e-14,
                       "--out", tmp_path / "a.json")
    assert code == 1 and "best residual" in err


def test_eval_line(tmp_path, capsys):
    path = integrate_file(tmp_path, "l.json", "--manifold", "euclidean:2", "--x0", "0,0", "--v0", "3,4",
                          "--steps", 100)
    assert run(capsys, "eval", "--curve", path, "--what", "length") == (0, "5.00000000000\n", "")
    code, out, _ = run(capsys, "eval", "--curve", path, "--what", "speed")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 101 and lines[0].split() == ["0.00000000000", "5.00000000000"]


def test_eval_equator(tmp_path, capsys):
    path = integrate_file(tmp_path, "eq.json", "--manifold", "sphere2", "--chart", "N", "--x0", "1,0",
                          "--v0", "0,1", "--t1", 6.283185, "--steps", 1000)
    code, out, _ = run(capsys, "eval", "--curve", path, "--what", "energy")
    assert code == 0 and float(out) == pytest.approx(math.pi, abs=1e-6)
    assert len(out.strip().replace(".", "").lstrip("0")) == 12
    code, out, _ = run(capsys, "eval", "--curve", path, "--what", "residual")
    assert code == 0 and float(out) <= 1e-4


@pytest.mark.parametrize("content", [
    "not json",
    json.dumps({"format": "chartgeo-curve", "manifold": "sphere2", "samples": []}),
    json.dumps({"format": "chartgeo-curve", "version": 99, "manifold": "sphere2", "samples": []}),
    json.dumps({"format": "chartgeo-curve", "version": 1, "manifold": "sphere2", "samples": [
        {"lambda": 0, "chart": 0, "coords": [0, 0], "velocity": [1, 0]},
        {"lambda": 0, "chart": 0, "coords": [0, 0], "velocity": [1, 0]}]}),
    json.dumps({"format": "chartgeo-curve", "version": 1, "manifold": "sphere2", "samples": [
        {"lambda": 0, "chart": 0, "coords": [0, 0], "velocity": [1, 0]},
        {"lambda": 1, "chart": 4, "coords": [0, 0], "velocity": [1, 0]}]}),
    json.dumps({"format": "chartgeo-curve", "version": 1, "manifold": "euclidean:3", "samples": [
        {"lambda": 0, "chart": 0, "coords": [0, 0], "velocity": [1, 0]},
        {"lambda": 1, "chart": 0, "coords": [0, 0], "velocity": [1, 0]}]}),
])
def test_eval_invalid_file_exits_2(tmp_path, capsys, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    code, _, err = run(capsys, "eval", "--curve", path, "--what", "length")
    assert code == 2 and err.startswith("error")


def test_eval_missing_file_exits_2(tmp_path, capsys):
    assert run(capsys, "eval", "--curve", tmp_path / "none.json", "--what", "length")[0] == 2


def test_roundtrip_summary(tmp_path):
    path = integrate_file(tmp_path, "m.json", "--manifold", "sphere2", "--x0", "0,0", "--v0", "0.5,0",
                          "--t1", 3.14159, "--steps", 400)
    _, metric, curve, summary = read_curve(path)
    assert len(curve.switches) == 1
    assert abs(length(metric, curve) - summary["length"]) <= 1e-12
    assert abs(energy(metric, curve) - summary["energy"]) <= 1e-12


def test_determinism(tmp_path):
    flags = ["--manifold", "sphere2", "--x0", "0.2,-0.3", "--v0", "1,2", "--t1", 2, "--steps", 300]
    a = integrate_file(tmp_path, "a.json", *flags)
    b = integrate_file(tmp_path, "b.json", *flags)
    assert a.read_bytes() == b.read_bytes()
    assert main(["shoot", "--manifold", "sphere2", "--p", "1,0,0", "--q", "0,0.6,0.8",
                 "--out", str(tmp_path / "s1.json")]) == 0
    assert main(["shoot", "--manifold", "sphere2", "--p", "1,0,0", "--q", "0,0.6,0.8",
                 "--out", str(tmp_path / "s2.json")]) == 0
    assert (tmp_path / "s1.json").read_bytes() == (tmp_path / "s2.json").read_bytes()


@pytest.mark.parametrize("manifold,x0,v0,header", [
    ("sphere2", "0,0", "0.5,0", ["lambda", "chart", "x1", "x2", "e1", "e2", "e3"]),
    ("euclidean:3", "0,0,0", "1,2,3", ["lambda", "chart", "x1", "x2", "x3"]),
])
def test_csv_export(tmp_path, manifold, x0, v0, header):
    path = integrate_file(tmp_path, "c.csv", "--manifold", manifold, "--x0", x0, "--v0", v0,
                          "--t1", 3, "--steps", 64)
    rows = list(csv.reader(path.read_text().splitlines()))
    assert rows[0] == header
    assert len(rows) - 1 == 65
    assert all(len(r) == len(header) for r in rows[1:])


def test_check_default_passes(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0
    assert "FAIL" not in out and out.strip().endswith("invariants passed")


def test_check_detects_symmetry_defect(capsys):
    code, out, _ = run(capsys, "check", "--corrupt-symmetry", 1e-3)
    assert code == 1
    failed = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert any("metric symmetry" in line for line in failed)


def test_check_is_reproducible(capsys):
    _, a, _ = run(capsys, "check", "--seed", 3)
    _, b, _ = run(capsys, "check", "--seed", 3)
    assert a == b


def test_module_entry_point(tmp_path):
    out = tmp_path / "line.json"
    res = subprocess.run([sys.executable, "-m", "chartgeo.cli", "integrate", "--manifold", "euclidean:2",
                          "--x0", "0,0", "--v0", "3,4", "--steps", "10", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and out.exists()
    res = subprocess.run([sys.executable, "-m", "chartgeo.cli", "eval"], capture_output=True, text=True)
    assert res.returncode == 2
