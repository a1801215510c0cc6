from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from morseflow.cli import main
from morseflow.finspace import minimal_sphere_model
from morseflow.lifting import LiftProblem, OrbitPath


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_gradient_pass_and_fail(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-gradient", "--model", "quadratic")
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    code, out, _ = run(capsys, "verify-gradient", "--model", "quadratic", "--field", "reversed")
    assert code == 1 and json.loads(out)["verdict"] == "fail"


def test_certify_box_outputs_certificate(capsys):
    code, out, _ = run(capsys, "certify-box", "--model", "hyperbolic:1:2", "--R0", "0.5", "--grid-step", "0.05")
    assert code == 0
    cert = json.loads(out)
    assert cert["k"] == 1 and cert["r"] >= 0.45 - 1e-12


def test_certify_box_failure_exit_1(capsys):
    code, _, err = run(capsys, "certify-box", "--model", "quadratic", "--point", "0.5,0.5")
    assert code == 1 and err


def test_bad_input_exit_2(capsys, tmp_path):
    assert run(capsys, "trace", "--model", "nosuch", "--point", "1,1", "--time", "1")[0] == 2
    assert run(capsys, "homology", "--input", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["trace", "--point", "a,b", "--time", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_horizon_exceeded_is_input_error(capsys):
    code, _, err = run(capsys, "trace", "--point", "1,1", "--time", "5", "--horizon", "2")
    assert code == 2 and "horizon" in err


def test_trace_csv(capsys):
    code, out, _ = run(capsys, "trace", "--model", "hyperbolic:1:2", "--point", "1,1", "--time", "1", "--format", "csv")
    assert code == 0
    last = out.strip().splitlines()[-1].split(",")
    assert float(last[0]) == 1.0
    assert np.allclose([float(last[1]), float(last[2])], [np.exp(-1), np.e], atol=1e-8)


def test_orbit_eq(capsys):
    code, out, _ = run(capsys, "orbit-eq", "--model", "hyperbolic:1:2", "--p1", "1,1", "--p2", "0.36787944117144233,2.718281828459045")
    assert code == 0 and json.loads(out)["equivalent"] is True


def test_demo_xn(capsys):
    code, out, _ = run(capsys, "demo", "xn", "--n", "3")
    doc = json.loads(out)
    assert code == 0 and len(doc["points"]) == 8
    assert doc["homology"]["groups"] == ["Z", "0", "0", "Z"]


def test_demo_spiral(capsys):
    code, out, _ = run(capsys, "demo", "spiral", "--refine", "4")
    doc = json.loads(out)
    assert code == 0 and doc["strictly_increasing"] and len(doc["max_abs_tau"]) == 4


def test_finite_space_commands(capsys, tmp_path):
    src = tmp_path / "x1.json"
    src.write_text(minimal_sphere_model(1).to_json())
    code, out, _ = run(capsys, "suspend", "--input", str(src))
    assert code == 0 and len(json.loads(out)["points"]) == 6
    code, out, _ = run(capsys, "homology", "--input", str(src))
    assert json.loads(out)["groups"] == ["Z", "Z"]
    code, out, _ = run(capsys, "separation", "--input", str(src))
    assert json.loads(out)["T1"] is False
    code, out, _ = run(capsys, "finite-model", "--model", "hyperbolic:1:2")
    doc = json.loads(out)
    assert len(doc["points"]) == 9 and doc["extension"] is True
    facets = tmp_path / "k.txt"
    facets.write_text("a b\nb c\nc a\n")
    code, out, _ = run(capsys, "homology", "--input", str(facets))
    assert json.loads(out)["groups"] == ["Z", "Z"]


def test_lift_command(capsys, tmp_path):
    s = np.linspace(0, 1, 9)
    reps = np.column_stack([s, np.ones_like(s)])
    reps[0] = [0, 3]
    prob = LiftProblem(OrbitPath(s, reps, (False,) * 9), np.array([0.0, 3.0]), np.array([1.0, -5.0]))
    src = tmp_path / "prob.json"
    src.write_text(prob.to_json())
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "lift", "--model", "punctured_plane", "--input", str(src), "--out", str(out_dir))
    doc = json.loads(out)
    assert code == 0 and doc["diagnostics"]["fiber_correct"]
    assert np.allclose(doc["points"][4], [0.5, -1.0], atol=1e-9)
    assert (out_dir / "lift.csv").exists() and (out_dir / "lift.json").exists()


def test_outputs_are_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(capsys, "verify-gradient", "--seed", "3", "--out", str(d))[0] == 0
    assert (a / "fgradient.json").read_bytes() == (b / "fgradient.json").read_bytes()


def test_env_out_directory(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MORSEFLOW_OUT", str(tmp_path / "env"))
    assert run(capsys, "demo", "xn", "--n", "1")[0] == 0
    assert (tmp_path / "env" / "xn.json").exists()


def test_config_file_with_user_model(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[run]\nseed = 1\n\n[tolerances]\nintegrator = 1e-10\n\n"
        "[model]\nvariables = x, y\nf = (x**2 + y**2)/2\nfield = x, y\ncritical = 0, 0\n"
    )
    code, out, _ = run(capsys, "verify-gradient", "--config", str(cfg))
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    bad = tmp_path / "bad.ini"
    bad.write_text("[tolerances]\nintegrator = -1\n")
    assert run(capsys, "verify-gradient", "--config", str(bad))[0] == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "morseflow.cli", "demo", "xn", "--n", "0"], capture_output=True, text=True)
    assert proc.returncode == 0 and len(json.loads(proc.stdout)["points"]) == 2
