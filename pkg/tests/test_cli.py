import csv
import io
import json

import numpy as np
import pytest

from qhblowup import cli

RICCATI = {"dimension": 1, "components": [[{"exponents": [2], "coefficient": 1.0}]]}
ZERO = {"dimension": 2, "components": [[], []]}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def riccati_model(tmp_path):
    path = tmp_path / "riccati.json"
    path.write_text(json.dumps(RICCATI))
    return str(path)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


# ----------------------------------------------------------------------
def test_scenario_list(capsys):
    code, out, _ = run(capsys, "scenario", "list")
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == ["kk", "lienard", "two-fluid", "riccati"]


def test_analyze_kk_reports_four_classified_equilibria(capsys):
    code, out, _ = run(capsys, "analyze", "--scenario", "kk", "--json")
    assert code == 0
    rep = json.loads(out)
    eqs = rep["equilibria"]
    assert len(eqs) == 4
    assert sorted(e["classification"] for e in eqs) == ["saddle(1,1)", "saddle(1,1)", "sink", "source"]


def test_analyze_kk_table(capsys):
    code, out, _ = run(capsys, "analyze", "--scenario", "kk")
    assert code == 0
    assert "sink" in out and "source" in out


def test_analyze_two_fluid_reports_two_saddles(capsys):
    code, out, _ = run(capsys, "analyze", "--scenario", "two-fluid", "--rho1", "1", "--rho2", "2",
                       "--uL", "1.9,0.25", "--uR", "1.5,0.2", "--json")
    assert code == 0
    eqs = json.loads(out)["equilibria"]
    assert [e["classification"] for e in eqs] == ["saddle(1,1)", "saddle(1,1)"]


def test_analyze_zero_field(capsys, tmp_path):
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(ZERO))
    code, out, _ = run(capsys, "analyze", "--model", str(path))
    assert code == 0
    assert cli.NO_SIGNATURE in out


def test_parse_errors_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "analyze", "--model", str(bad))[0] == 2
    assert run(capsys, "analyze", "--scenario", "nope")[0] == 2
    assert run(capsys, "analyze")[0] == 2
    assert run(capsys, "analyze", "--scenario", "two-fluid", "--rho1", "3")[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "--scenario", "kk", "--tol-rel", "-1"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_blowup_riccati(capsys, riccati_model, tmp_path):
    csv_path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "blowup", "--model", riccati_model, "--x0", "1", "--csv", str(csv_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["estimate"]["t_max"] == pytest.approx(1.0, abs=1e-6)
    assert rep["estimate"]["fitted_norm_exponent"] == pytest.approx(-1.0, rel=0.01)
    assert rep["predicted_norm_exponent"] == "-1"
    assert csv_path.read_text().startswith("tau,t,x1,p\n")


def test_blowup_kk_original_coordinates(capsys):
    code, out, _ = run(capsys, "blowup", "--scenario", "kk", "--x0", "0.5,0")
    assert code == 0
    est = json.loads(out)["estimate"]
    assert est["fitted_norm_exponent"] == pytest.approx(-1.0, rel=0.05)
    assert est["fitted_component_exponents"][1] == pytest.approx(-2.0, rel=0.05)


def test_blowup_without_convergence_exits_4_with_partial_report(capsys):
    code, out, err = run(capsys, "blowup", "--scenario", "kk", "--x0", "0.5,0", "--tau-max", "5")
    assert code == 4
    rep = json.loads(out)
    assert rep["termination"] == "reached-tau-limit"
    assert rep["estimate"] is None
    assert "no blow-up" in err


def test_numeric_failure_exits_3(capsys, monkeypatch):
    def boom(*_a, **_k):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(cli, "find_horizon_equilibria", boom)
    assert run(capsys, "analyze", "--scenario", "kk")[0] == 3


def test_outputs_are_deterministic(capsys, tmp_path, riccati_model):
    outs = []
    for rep in range(2):
        (tmp_path / str(rep)).mkdir()
        csv_path = tmp_path / str(rep) / "t.csv"
        svg_path = tmp_path / str(rep) / "t.svg"
        code, out, _ = run(capsys, "blowup", "--model", riccati_model, "--x0", "1", "--csv", str(csv_path))
        assert code == 0
        assert run(capsys, "plot", str(csv_path), "--svg", str(svg_path))[0] == 0
        outs.append((out, csv_path.read_bytes(), svg_path.read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][2].startswith(b'<svg xmlns="http://www.w3.org/2000/svg" width="640" height="480"')


def test_plot_rejects_foreign_csv(capsys, tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    assert run(capsys, "plot", str(path))[0] == 2


def test_plot_original_coordinates_need_alpha(capsys, tmp_path):
    csv_path = tmp_path / "kk.csv"
    assert run(capsys, "blowup", "--scenario", "kk", "--x0", "0.5,0", "--csv", str(csv_path))[0] == 0
    assert run(capsys, "plot", str(csv_path), "--x", "t", "--y", "y2")[0] == 2
    code, out, _ = run(capsys, "plot", str(csv_path), "--x", "t", "--y", "y2", "--alpha", "1,2", "--scheme-a", "1,2")
    assert code == 0 and out.startswith("<svg")


def test_empty_portrait_is_header_only(capsys):
    code, out, _ = run(capsys, "portrait", "--scenario", "kk", "--grid", "0")
    assert code == 0
    assert out == "id,start_x1,start_x2,omega,alpha,tau_end,t_end\n"


def test_two_fluid_portrait_contains_chain(capsys):
    code, out, _ = run(capsys, "portrait", "--scenario", "two-fluid", "--grid", "2")
    assert code == 0
    chain = {r[0]: r[3] for r in _rows(out)[1:] if r[0].startswith("W")}
    assert chain == {"W1": "x_L", "W2": "p1", "W3": "x_R"}


@pytest.mark.slow
def test_kk_portrait_trajectory_families(capsys, tmp_path):
    svg = tmp_path / "kk.svg"
    code, out, _ = run(capsys, "portrait", "--scenario", "kk", "--grid", "7", "--svg", str(svg))
    assert code == 0
    rows = _rows(out)[1:]
    # tag E<i> by classification so the check does not depend on labelling
    code, rep, _ = run(capsys, "analyze", "--scenario", "kk", "--json")
    cls = {e["label"]: e["classification"] for e in json.loads(rep)["equilibria"]}
    name = dict(cls)
    name["origin"] = "origin"
    name["near:origin"] = "origin"
    families = {(name.get(r[4], r[4]), name.get(r[3], r[3])) for r in rows}
    assert ("source", "sink") in families  # from infinity to infinity
    assert ("source", "origin") in families  # from infinity into the finite equilibrium
    assert ("origin", "sink") in families  # from the finite equilibrium to infinity
    assert ("origin", "origin") in families  # homoclinic-type loops at the origin
    assert svg.read_text().count("<polyline") > len(rows)
