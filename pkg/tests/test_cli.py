import json
from fractions import Fraction

import pytest

from pohozaev.cli import fmt, load_config, run


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_threshold_json(capsys):
    code, out, _ = invoke(capsys, "threshold", "--p", "1.5", "--q", "10")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["s_bar"] - float(Fraction(4, 57))) <= 1e-12
    assert doc["q_critical"] == 6.0
    assert doc["config"]["subcommand"] == "threshold"


def test_threshold_outside_window(capsys):
    code, out, err = invoke(capsys, "threshold", "--p", "2.5", "--q", "10")
    assert code == 1 and out == ""
    assert "p outside (1,2)" in err
    assert len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("argv", [["frobnicate"], ["threshold", "--p", "1.5", "--q", "10", "--bogus"], []])
def test_usage_errors(capsys, argv):
    code, _, err = invoke(capsys, *argv)
    assert code == 1
    assert "usage:" in err


def test_bad_nonlinearity(capsys):
    code, _, err = invoke(capsys, "solve", "--f", "cubic:3", "--nr", "4", "--nt", "8")
    assert code == 1
    assert "constant:" in err


def test_bad_domain(capsys):
    code, _, err = invoke(capsys, "mesh", "--s", "1.5")
    assert code == 1 and err.startswith("error:")


def test_nonconvergence_exit_2(capsys):
    code, _, err = invoke(capsys, "solve", "--domain", "annulus", "--p", "1.5",
                          "--nr", "8", "--nt", "24", "--max-iter", "1")
    assert code == 2
    assert "residual" in err


def test_certificate(capsys):
    code, out, _ = invoke(capsys, "certificate", "--p", "1.5", "--q", "10", "--s", "0.05", "--alpha", "3")
    assert code == 0 and json.loads(out)["verdict"] == "NoNontrivialSolution"
    code, out, _ = invoke(capsys, "certificate", "--p", "1.5", "--q", "10", "--s", "0.08", "--alpha", "3")
    doc = json.loads(out)
    assert doc["verdict"] == "Inconclusive" and doc["reasons"]


def test_sweep_csv(capsys):
    code, out, _ = invoke(capsys, "sweep", "--p-steps", "2", "--q-steps", "2", "--s-steps", "3")
    assert code == 0
    body = csv_body(out)
    assert body[0] == "p,q,s,q_critical,coefficient,s_bar,verdict"
    assert len(body) == 1 + 12


def test_field_check_outputs(capsys):
    _, out, _ = invoke(capsys, "field-check", "--points", "50")
    body = csv_body(out)
    assert body[0] == "point_x,point_y,div_analytic,div_fd,err_div,err_quad_max"
    assert len(body) == 51
    assert max(float(r.split(",")[4]) for r in body[1:]) <= 1e-6
    _, out, _ = invoke(capsys, "field-check", "--audit", "100")
    body = csv_body(out)
    assert body[0] == "edge_kind,rho,theta,flux"
    assert len(body) == 101


def test_mesh_sections(capsys):
    _, out, _ = invoke(capsys, "mesh", "--nr", "2", "--nt", "3")
    lines = out.splitlines()
    for section in ("#vertices x,y", "#triangles i,j,k", "#boundary i,j,nx,ny,kind"):
        assert section in lines


def test_solve_csv_and_out_file(capsys, tmp_path):
    path = tmp_path / "u.csv"
    code, out, _ = invoke(capsys, "solve", "--domain", "disk", "--p", "2", "--nr", "8", "--nt", "24",
                          "--out", str(path))
    assert code == 0 and out == ""
    body = csv_body(path.read_text())
    assert body[0] == "vertex_index,x,y,u"
    assert len(body) - 1 == 1 + 8 * 24


def test_verify_identity_json(capsys):
    code, out, _ = invoke(capsys, "verify-identity", "--nr", "8", "--nt", "54")
    doc = json.loads(out)
    assert code == 0
    assert set(doc) >= {"lhs", "rhs_jacobian", "rhs_divergence", "rhs_total", "residual_abs", "residual_rel", "mesh"}
    assert doc["mesh"]["nr"] == 8 and doc["mesh"]["nt"] == 54
    assert doc["config"]["field"] == "paper"


def test_verify_identity_pairing_error(capsys):
    code, _, err = invoke(capsys, "verify-identity", "--domain", "disk", "--field", "paper", "--nr", "4", "--nt", "12")
    assert code == 1 and "sector" in err


def test_convergence_levels_parse(capsys):
    code, _, err = invoke(capsys, "convergence", "--levels", "4,x,8")
    assert code == 1 and "--levels" in err


def test_config_roundtrip(capsys, tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    argv = ["solve", "--domain", "annulus", "--p", "1.7", "--nr", "6", "--nt", "30", "--f", "constant:2"]
    assert run(argv + ["--out", str(first)]) == 0
    cfg = load_config(first)
    assert cfg["p"] == "1.7" and cfg["f"] == "constant:2"
    assert run(["solve", "--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_config_from_json(capsys, tmp_path):
    path = tmp_path / "t.json"
    assert run(["threshold", "--p", "1.3", "--q", "20", "--out", str(path)]) == 0
    code, out, _ = invoke(capsys, "threshold", "--config", str(path))
    assert code == 0 and out == path.read_text()


def test_config_unknown_key(capsys, tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("p=1.5\nzeta=3\n")
    code, _, err = invoke(capsys, "threshold", "--config", str(path), "--q", "10")
    assert code == 1 and "zeta" in err


def test_fmt_round_trip():
    for x in (0.1, 1 / 3, 4 / 57, 1e-300, -2.5e17):
        assert float(fmt(x)) == x
    assert fmt(3) == "3" and fmt(None) == "" and fmt(True) == "true"


def test_deterministic(capsys):
    argv = ["verify-identity", "--domain", "annulus", "--p", "1.5", "--nr", "6", "--nt", "30"]
    _, a, _ = invoke(capsys, *argv)
    _, b, _ = invoke(capsys, *argv)
    assert a == b
