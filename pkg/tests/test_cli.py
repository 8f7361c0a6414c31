import json
import subprocess
import sys

import pytest

from slowfast.cli import ConfigError, RunConfig, main


def _run(tmp_path, body, name="run.ini", argv=()):
    cfg = tmp_path / name
    cfg.write_text(body)
    out = tmp_path / "out"
    return main([str(cfg), "--output", str(out), *argv]), out


def _json(path):
    return json.loads(path.read_text())


def test_analyze_fold(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = analyze\nmodel = fold\n"
                               "[options]\npoint = 0, 0, 0, 0\nexpect = Fold\n")
    assert code == 0
    rep = _json(out / "report.json")
    assert rep["classification"] == "Fold"
    assert rep["margins"]["transversality"] == pytest.approx(1.0)
    assert "_config_hash" in rep


def test_analyze_expectation_fails(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = analyze\nmodel = cusp\n"
                               "[options]\nexpect = Fold\n")
    assert code == 2
    assert (out / "report.json.partial").exists() and not (out / "report.json").exists()


def test_integrate_and_determinism(tmp_path):
    body = ("[run]\ncommand = integrate\nmodel = fold\n"
            "[options]\npoint = 1, 0, -3, 0\nepsilon = 1e-3\nt_end = 0.2\nh = 2e-4\n")
    code, out = _run(tmp_path, body)
    assert code == 0
    first = (out / "trajectory.csv").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "t,x,y,u,v,H"
    code, out = _run(tmp_path, body)
    assert (out / "trajectory.csv").read_bytes() == first


def test_trace_singular(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = trace-singular\nmodel = cusp\n"
                               "[options]\nsteps = 5\nds = 0.02\n")
    assert code == 0
    lines = (out / "singular_curve.csv").read_text().splitlines()
    assert lines[1] == "s,x,y,u,v,delta,class"
    assert len(lines) == 2 + 6
    assert lines[2].endswith("Cusp")


def test_reduce_fold_with_offset(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = reduce\nmodel = fold\n[options]\nc = 0.3\n")
    assert code == 0
    rep = _json(out / "coefficients.json")
    assert rep["kind"] == "fold"
    assert (rep["alpha_c"], rep["gamma_c"], rep["s1"]) == pytest.approx((-1, -1, -0.5))
    assert rep["trace"] == pytest.approx([0, 0, 0, 0.3])


def test_reduce_cusp(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = reduce\nmodel = cusp\n")
    assert code == 0
    rep = _json(out / "coefficients.json")
    assert (rep["rho"], rep["sigma"], rep["beta"], rep["alpha"]) == pytest.approx((1, 1, 1, 1))


def test_reduce_inline_expression_degenerate(tmp_path):
    code, _ = _run(tmp_path, "[run]\ncommand = reduce\nexpression = v + u*x + x^5 + y^2/2\n")
    assert code == 2


def test_painleve_from_model(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = painleve\nmodel = fold\n"
                               "[options]\nkind = PI\ninit = 0, 0, -5\nz_end = 5\n")
    assert code == 0
    rep = _json(out / "report.json")
    assert rep["pole"]["z_est"] == pytest.approx(-0.6116810, abs=1e-4)
    assert rep["standard_form"]["kind"] == "PI"
    assert (out / "trajectory.csv").read_text().splitlines()[1] == "z,X,Y"


def test_painleve_explicit_pii(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = painleve\nmodel = cusp\n[options]\nkind = PII\n"
                               "rho = 1\nsigma = 1\nbeta = 1\nalpha = 1\nA = 0.5\n"
                               "z_end = 2\nsamples = 11\n")
    assert code == 0
    rows = (out / "trajectory.csv").read_text().splitlines()[2:]
    assert len(rows) == 11


def test_verify_fold(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = verify-fold\nmodel = fold\n"
                               "[params]\nq = 1\n[options]\nepsilons = 1e-2, 1e-3\n")
    assert code == 0
    lines = (out / "study.csv").read_text().splitlines()
    assert lines[1] == "epsilon,r,sup_dev,q_fit" and len(lines) == 4
    assert _json(out / "report.json")["deviations_decreasing"]


def test_verify_cusp_records_variants(tmp_path):
    code, out = _run(tmp_path, "[run]\ncommand = verify-cusp\nmodel = cusp\n"
                               "[options]\nepsilons = 1e-2, 1e-3\n")
    assert code == 0
    rep = _json(out / "report.json")
    assert set(rep["variants"]) == {"a2v/rho", "a2v/sigma", "literal/rho", "literal/sigma"}


def test_form_check_random_points_use_seed(tmp_path):
    body = ("[run]\ncommand = form-check\nmodel = fold\n"
            "[options]\nn_points = 5\ncenter = 1, 0, -3, 0\nradius = 0.3\n")
    code, out = _run(tmp_path, body, argv=["--seed", "7"])
    assert code == 0
    rep = _json(out / "report.json")
    assert rep["max_f0_error"] < 1e-10 and rep["all_det_D_nonzero"]
    assert len(rep["reports"]) == 15
    a = (out / "report.json").read_bytes()
    _run(tmp_path, body, argv=["--seed", "7"])
    assert (out / "report.json").read_bytes() == a
    _run(tmp_path, body, argv=["--seed", "8"])
    assert (out / "report.json").read_bytes() != a


def test_missing_model_file(tmp_path):
    code, _ = _run(tmp_path, "[run]\ncommand = analyze\nmodel = nowhere.model\n")
    assert code == 3


def test_config_errors_report_position(tmp_path):
    for body in ("[run]\ncommand = explode\nmodel = fold\n",
                 "[run]\nmodel = fold\n",
                 "[run]\ncommand = analyze\nmodel = fold\n[options]\npoint = 0, zero, 0, 0\n",
                 "no section header\n"):
        code, _ = _run(tmp_path, body)
        assert code == 3
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\ncommand = analyze\nmodel = fold\n[options]\npoint = 0, zero, 0, 0\n")
    with pytest.raises(ConfigError) as info:
        RunConfig.from_file(cfg).vector("point", 4)
    assert info.value.line == 5


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ncommand = analyze\nmodel = cusp\n")
    proc = subprocess.run([sys.executable, "-m", "slowfast", str(cfg), "--output",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert _json(tmp_path / "o" / "report.json")["classification"] == "Cusp"
