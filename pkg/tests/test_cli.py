import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from graze_lab.bodies import SupportBody
from graze_lab.cli import RunConfig, run_command
from graze_lab.errors import InputError
from graze_lab.graze import trace_graze, trace_omega
from graze_lab.io import read_curve_csv, write_graze_csv, write_omega_csv
from graze_lab.svg import emit_svg


def _run(capsys, *argv):
    code = run_command([str(a) for a in argv])
    return code, capsys.readouterr()


def test_verify_lemma1_balls(body_files, tmp_path, capsys):
    code, out = _run(capsys, "verify", "lemma1", "--body-k", body_files["ball4"], "--body-l", body_files["ball1"],
                     "--apex-count", 64, "--out", tmp_path / "o")
    assert code == 0 and "PASS" in out.out
    rep = json.loads((tmp_path / "o" / "report_lemma1.json").read_text())
    assert rep["pass"] is True and rep["worst_defect"] < 1e-8
    assert rep["grid"]["seed"] == 42


def test_certify_perturbed(body_files, tmp_path, capsys):
    code, out = _run(capsys, "certify", "--body-k", body_files["ball6"], "--body-l", body_files["perturbed"],
                     "--apex-count", 8, "--out", tmp_path, "--svg", tmp_path / "w.svg")
    assert code == 1 and "FAIL" in out.out
    rep = json.loads((tmp_path / "report_ellipse_cert.json").read_text())
    assert rep["pass"] is False and rep["witness_apex"] is not None
    ET.parse(tmp_path / "w.svg")


def test_graze_trace_ball(body_files, tmp_path, capsys):
    code, _ = _run(capsys, "graze", "trace", "--body-l", body_files["ball1"], "--apex", "2,0,0",
                   "--out", tmp_path, "--svg", tmp_path / "out.svg")
    assert code == 0
    header, data = read_curve_csv(tmp_path / "graze.csv")
    assert header == ["ux", "uy", "uz", "px", "py", "pz"]
    np.testing.assert_allclose(data[:, 3], 0.5, atol=1e-12)
    np.testing.assert_allclose(np.hypot(data[:, 4], data[:, 5]), np.sqrt(3) / 2, atol=1e-12)
    root = ET.parse(tmp_path / "out.svg").getroot()
    assert root.tag.endswith("svg")
    labels = [t.text for t in root.iter() if t.tag.endswith("text")]
    assert "O_x" in labels


def test_omega_trace(body_files, tmp_path, capsys):
    code, _ = _run(capsys, "omega", "trace", "--body-l", body_files["ball1"], "--apex", "2,0,0",
                   "--out", tmp_path, "--svg", tmp_path / "o.svg")
    assert code == 0
    header, data = read_curve_csv(tmp_path / "omega.csv")
    assert header == ["yx", "yy", "yz", "t"]
    np.testing.assert_allclose(data[:, 0], 0.0, atol=1e-9)
    np.testing.assert_allclose(np.hypot(data[:, 1], data[:, 2]), 2 / np.sqrt(3), atol=1e-9)
    polys = [e for e in ET.parse(tmp_path / "o.svg").getroot().iter() if e.tag.endswith("polygon")]
    assert len(polys) == 2


def test_body_validate(body_files, tmp_path, capsys):
    assert _run(capsys, "body", "validate", "--body-l", body_files["perturbed"], "--out", tmp_path)[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "perturbed_ellipsoid", "matrix": np.diag([4.0, 1, 1]).tolist(),
                               "harmonics": [{"l": 4, "m": 0, "coef": 0.09}]}))
    code, out = _run(capsys, "body", "validate", "--body-l", bad, "--out", tmp_path)
    assert code == 1 and "INVALID" in out.out


@pytest.mark.parametrize("action,extra,expect", [
    ("lemma2", ["--apex-count", 8], 0),
    ("almost-free", ["--apex-count", 8], 0),
    ("ball-remark", ["--apex-count", 8], 0),
    ("lemma3", ["--u", "0,0,1", "--u", "1,1,0"], 0),
    ("theorem", [], 0),
])
def test_verify_subcommands(body_files, tmp_path, capsys, action, extra, expect):
    code, out = _run(capsys, "verify", action, "--body-k", body_files["ball6"], "--body-l", body_files["ball1"],
                     "--out", tmp_path, "--svg", tmp_path / "f.svg", *extra)
    assert code == expect, out.out + out.err
    assert len(list(tmp_path.glob("report_*.json"))) == 1


def test_theorem_figure(body_files, tmp_path, capsys):
    code, _ = _run(capsys, "verify", "theorem", "--body-k", body_files["ball6"], "--body-l", body_files["ellipsoid"],
                   "--out", tmp_path, "--svg", tmp_path / "t.svg")
    assert code == 0
    root = ET.parse(tmp_path / "t.svg").getroot()
    labels = {t.text for t in root.iter() if t.tag.endswith("text")}
    assert {"a0", "b0", "c0"} <= labels
    assert sum(e.tag.endswith("line") for e in root.iter()) >= 7


def test_exit_codes(body_files, tmp_path, capsys):
    k, l = body_files["ball4"], body_files["ball1"]
    code, out = _run(capsys, "verify", "lemma1", "--body-k", k, "--body-l", l, "--bogus")
    assert code == 2 and "usage" in out.err
    assert _run(capsys, "verify", "lemma1", "--body-k", k, "--body-l", tmp_path / "missing.json")[0] == 2
    assert _run(capsys, "verify", "lemma1", "--body-k", k, "--body-l", l, "--apex-count", 4)[0] == 2
    # L ball 1 is not inside K ball 1
    assert _run(capsys, "verify", "lemma1", "--body-k", l, "--body-l", l, "--out", tmp_path)[0] == 2
    assert _run(capsys, "graze", "trace", "--body-l", l, "--apex", "0.5,0,0", "--out", tmp_path)[0] == 2
    assert _run(capsys, "verify", "ball-remark", "--body-k", body_files["ellipsoid"], "--body-l", l,
                "--out", tmp_path)[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2


def test_tolerance_flags(body_files, tmp_path, capsys):
    k, l = body_files["ball6"], body_files["ellipsoid"]
    base = ["verify", "lemma1", "--body-k", k, "--body-l", l, "--apex-count", 8, "--out", tmp_path]
    assert _run(capsys, *base, "--tol-symmetry", "1e-30")[0] == 1
    assert _run(capsys, *base, "--tol-planarity=1e-3")[0] == 0
    assert _run(capsys, *base, "--tol-nonsense", "1")[0] == 2
    assert _run(capsys, *base, "--tol-planarity", "-1")[0] == 2
    assert _run(capsys, *base, "--tol-planarity")[0] == 2


def test_exit_code_matches_report(body_files, tmp_path, capsys):
    for name, expect in (("ellipsoid", 0), ("perturbed", 1)):
        code, _ = _run(capsys, "verify", "lemma1", "--body-k", body_files["ball6"], "--body-l", body_files[name],
                       "--apex-count", 8, "--out", tmp_path / name)
        rep = json.loads((tmp_path / name / "report_lemma1.json").read_text())
        assert code == expect and rep["pass"] is (code == 0)


def test_search_cli(body_files, tmp_path, capsys):
    argv = ["search", "--body-k", body_files["ball6"], "--body-l", body_files["perturbed"], "--budget", 100,
            "--search-apexes", 8, "--search-samples", 16]
    code, out = _run(capsys, *argv, "--out", tmp_path / "a")
    assert code == 0
    lines = (tmp_path / "a" / "search_trace.jsonl").read_text().splitlines()
    assert len(lines) == 100
    assert json.loads(lines[0])["iter"] == 0
    summary = json.loads((tmp_path / "a" / "search_summary.json").read_text())
    assert summary["ellipsoid_distance"] < summary["initial_ellipsoid_distance"]
    _run(capsys, *argv, "--out", tmp_path / "b")
    assert (tmp_path / "a" / "search_trace.jsonl").read_bytes() == (tmp_path / "b" / "search_trace.jsonl").read_bytes()
    assert _run(capsys, *argv[:-4], "--budget", 50, "--out", tmp_path)[0] == 2


def test_console_script(body_files, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "graze_lab", "verify", "lemma1", "--body-k", str(body_files["ball4"]),
                           "--body-l", str(body_files["ball1"]), "--apex-count", "8", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("lemma1: PASS")


def test_run_config_checks(body_files):
    with pytest.raises(InputError):
        RunConfig(body_files["ball4"], body_files["ball1"], apex_count=7)
    with pytest.raises(InputError):
        RunConfig(None, body_files["ball1"], thresholds={"planarity": 0.0})
    cfg = RunConfig(None, body_files["ellipsoid"])
    assert cfg.outer(cfg.inner()).extent[0] == pytest.approx(6.0, rel=1e-3)


def test_csv_roundtrip_bitwise(perturbed, tmp_path):
    x = np.array([1.0, 3.0, 2.0])
    g = trace_graze(perturbed, x, 0.05)
    write_graze_csv(tmp_path / "g.csv", g)
    _, data = read_curve_csv(tmp_path / "g.csv")
    assert np.array_equal(data[:, :3], g.normals) and np.array_equal(data[:, 3:], g.points)
    om = trace_omega(perturbed, x, g)
    write_omega_csv(tmp_path / "o.csv", om)
    _, data = read_curve_csv(tmp_path / "o.csv")
    assert np.array_equal(data[:, :3], om.points) and np.array_equal(data[:, 3], om.ray_params)


def test_csv_errors(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        read_curve_csv(p)
    p.write_text("")
    with pytest.raises(InputError):
        read_curve_csv(p)


def test_svg_deterministic_and_warns():
    g = trace_graze(SupportBody.ball(1.0), [2.0, 0, 0]).points
    a = emit_svg([("graze", g)], points=[("O_x", [0.5, 0, 0])], title="ball")
    assert a == emit_svg([("graze", g)], points=[("O_x", [0.5, 0, 0])], title="ball")
    assert "warning" not in a
    ET.fromstring(a)
    rng = np.random.default_rng(0)
    lumpy = g + 0.05 * rng.standard_normal(g.shape)
    b = emit_svg([("lumpy", lumpy)])
    assert "warning: curves not planar" in b
    ET.fromstring(b)
    with pytest.raises(ValueError):
        emit_svg([])
