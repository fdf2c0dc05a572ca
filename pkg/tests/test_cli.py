import json
import subprocess
import sys

import pytest

from perbif.cli import run

EX1 = {"maps": ["x^2+l1", "l3*x^3+l2*x+1"], "mu": 3}
EX2 = {"maps": ["-x^4+l1*x^2+x+l2", "l3*tan(x)"], "mu": 3}


@pytest.fixture
def ex1_file(tmp_path):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps(EX1))
    return p


@pytest.fixture
def ex2_file(tmp_path):
    p = tmp_path / "sys2.json"
    p.write_text(json.dumps(EX2))
    return p


def test_example1_exit_zero_and_exact_zeros(capsys):
    assert run(["example1"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "-243/245" in out and "-944784/214375" in out
    for i in range(4):
        line = next(ln for ln in out.splitlines() if ln.startswith(f"residual {i} (exact)"))
        assert line.split()[3] == "0"


def test_example2_exit_zero(capsys):
    assert run(["example2"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_solve_then_verify(tmp_path, ex1_file, capsys):
    pt = tmp_path / "pt.json"
    code = run(["solve", "-s", str(ex1_file), "-j", "0", "-k", "1", "--mu", "3",
                "--init", "0.8,-1,0.5,0.02", "-o", str(pt)])
    assert code == 0
    data = json.loads(pt.read_text())
    assert data["x"] == pytest.approx(27 / 35, abs=1e-10)
    assert data["class_mu"] == 3
    assert run(["verify", "-s", str(ex1_file), "--point", str(pt)]) == 0
    plain = capsys.readouterr().out
    assert run(["verify", "-s", str(ex1_file), "--point", str(pt), "--rotate", "1"]) == 0
    rotated = capsys.readouterr().out
    # same verdicts and determinants, rows swapped
    assert [ln.split()[-1] for ln in plain.splitlines()[1:]] == [ln.split()[-1] for ln in rotated.splitlines()[1:]]


def test_verify_json(tmp_path, ex1_file, capsys):
    pt = tmp_path / "pt.json"
    run(["solve", "-s", str(ex1_file), "--mu", "3", "--init", "0.8,-1,0.5,0.02", "--mode", "rational", "-o", str(pt)])
    assert json.loads(pt.read_text())["lambda"][2] == "52521875/229582512"
    assert run(["verify", "-s", str(ex1_file), "--point", str(pt), "--mode", "rational", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["rotations"][1]["det"] == "-944784/214375"


def test_determinism(tmp_path, ex1_file):
    outs = []
    for i in range(2):
        path = tmp_path / f"o{i}.json"
        run(["solve", "-s", str(ex1_file), "--mu", "3", "--init", "0.8,-1,0.5,0.02", "-o", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_rational_mode_rejects_transcendental(ex2_file, capsys):
    code = run(["solve", "-s", str(ex2_file), "--mu", "3", "--init", "0.08,-0.04,0,1", "--mode", "rational"])
    assert code == 1
    assert "transcendental" in capsys.readouterr().err


def test_usage_errors(ex1_file, tmp_path, capsys):
    assert run(["solve", "-s", str(ex1_file), "--mu", "3", "--init", "0.8,-1"]) == 1
    assert "--init needs 4 values" in capsys.readouterr().err
    assert run(["solve", "-s", str(tmp_path / "missing.json"), "--mu", "3", "--init", "1,2,3,4"]) == 1
    assert run(["bogus"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"maps": ["x^"], "mu": 1}))
    assert run(["classify", "-s", str(bad), "--x", "0", "--params", "0"]) == 1


def test_solve_failure_exit_two(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"maps": ["x + x^2 + l1^2 + 1"], "mu": 1}))
    assert run(["solve", "-s", str(p), "--mu", "1", "--init", "0.3,0.2", "--max-iter", "5"]) == 2


def test_classify(tmp_path, capsys):
    p = tmp_path / "fold.json"
    p.write_text(json.dumps({"maps": ["x + x^2 + l1"], "mu": 1}))
    assert run(["classify", "-s", str(p), "--x", "0", "--params", "0", "--mode", "rational"]) == 0
    assert json.loads(capsys.readouterr().out)["class"] == "A1"


def test_trace_csv(tmp_path, ex1_file, capsys):
    pt = tmp_path / "pt.json"
    run(["solve", "-s", str(ex1_file), "--mu", "3", "--init", "0.8,-1,0.5,0.02", "-o", str(pt)])
    out = tmp_path / "cloud.csv"
    assert run(["trace", "-s", str(ex1_file), "--point", str(pt), "--grid", "6", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "stratum,x,l1,l2,l3,res_fp,res_dx,res_dxx"
    assert any(ln.startswith("fold,") for ln in lines)


def test_cobweb_csv(ex1_file, capsys):
    code = run(["cobweb", "-s", str(ex1_file), "--x0", "27/35", "--params=-243/245,175/324,52521875/229582512",
                "-n", "2", "--mode", "rational", "--no-graphs"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == [
        "kind,x0,y0,x1,y1",
        "vertical,27/35,27/35,27/35,-486/1225",
        "horizontal,27/35,-486/1225,-486/1225,-486/1225",
        "vertical,-486/1225,-486/1225,-486/1225,27/35",
        "horizontal,-486/1225,27/35,27/35,27/35",
    ]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "perbif", "example1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "contact order" in proc.stdout
