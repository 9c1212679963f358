"""Command-line behavior: exit codes, file formats, determinism."""

import json
import os

import numpy as np
import pytest

from routhian import cli

CHARGED_PARTICLE_DOC = {
    "name": "charged_particle",
    "n": 2,
    "lagrangian": "1/2*m*(qd1^2 + qd2^2) + e*B*(qd1*q2 - qd2*q1)",
    "parameters": {"m": 1.0, "e": 1.0, "B": 1.0},
    "symmetry": {"group_indices": [0, 1], "f": ["-e*B*q2", "e*B*q1"]},
    "momentum": [1.0, 0.0],
    "initial": {"q": [0.0, 0.0], "qd": [1.0, 0.0]},
    "integrator": {"dt": 0.001, "T": 10.0},
}


def run(*argv):
    return cli.main(list(argv))


def write_doc(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def read_report(out_dir):
    with open(os.path.join(out_dir, "report.json"), encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# verify


def test_verify_builtins_pass(tmp_path):
    for name in ("charged_particle", "quasi_cyclic_totalderiv", "functional_toy"):
        out = str(tmp_path / name)
        assert run("verify", "--scenario", name, "--out-dir", out) == 0
        rep = read_report(out)
        assert rep["passed"] is True
        assert rep["scenario"] == name
        assert all(c["residual"] <= c["tolerance"] for c in rep["checks"])


def test_verify_reports_case_tags(tmp_path):
    expected = {
        "charged_particle": "C",
        "free_cyclic": "A",
        "quasi_cyclic_totalderiv": "B",
        "curved_gamma": "A",
        "functional_toy": "D",
    }
    for name, tag in expected.items():
        out = str(tmp_path / name)
        assert run("verify", "--scenario", name, "--out-dir", out) == 0
        assert read_report(out)["case"] == tag


def test_verify_fails_on_wrong_f(tmp_path):
    doc = json.loads(json.dumps(CHARGED_PARTICLE_DOC))
    doc["symmetry"]["f"] = ["0", "0"]
    path = write_doc(tmp_path, doc)
    out = str(tmp_path / "out")
    assert run("verify", "--scenario", path, "--out-dir", out) == 1
    rep = read_report(out)
    assert rep["passed"] is False
    failed = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert "quasi_invariance" in failed


def test_verify_fails_on_linear_group_velocity(tmp_path):
    doc = {
        "name": "linear",
        "n": 2,
        "lagrangian": "qd1*q2 + 1/2*qd2^2",
        "symmetry": {"group_indices": [0]},
        "momentum": [0.1],
        "initial": {"q": [0.0, 1.0], "qd": [0.0, 0.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    path = write_doc(tmp_path, doc)
    out = str(tmp_path / "out")
    assert run("verify", "--scenario", path, "--out-dir", out) == 1
    failed = [c["name"] for c in read_report(out)["checks"] if not c["passed"]]
    assert "g_regularity" in failed


# --------------------------------------------------------------------------
# reduce


def test_reduce_reports_case_and_matrix(tmp_path):
    out = str(tmp_path / "out")
    assert run("reduce", "--scenario", "charged_particle", "--out-dir", out) == 0
    rep = read_report(out)
    assert rep["case"] == "C"
    assert rep["shape_dim"] == 2
    np.testing.assert_allclose(
        rep["gyroscopic_matrix"], [[0.0, 2.0], [-2.0, 0.0]], atol=1e-13
    )
    assert rep["routhian"] == pytest.approx(-0.5)


def test_reduce_momentum_override(tmp_path):
    out = str(tmp_path / "out")
    assert run(
        "reduce", "--scenario", "free_cyclic", "--out-dir", out, "--mu", "2.0"
    ) == 0
    rep = read_report(out)
    assert rep["momentum"] == [2.0]
    # R = 1/2 xd^2 - mu^2/2 at xd = 0.5
    assert rep["routhian"] == pytest.approx(0.5 * 0.25 - 2.0)


def test_reduce_unsupported_case_exits_3(tmp_path, capsys):
    doc = {
        "name": "mixed",
        "n": 3,
        "lagrangian": "1/2*(qd1^2 + qd2^2 + qd3^2) + qd1*q2 - qd2*q1",
        "symmetry": {"group_indices": [0, 1], "f": ["-q2", "q1"]},
        "momentum": [0.0, 0.0],
        "initial": {"q": [0.0, 0.0, 0.0], "qd": [1.0, 0.0, 0.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    path = write_doc(tmp_path, doc)
    assert run("reduce", "--scenario", path, "--out-dir", str(tmp_path / "o")) == 3
    assert "rank" in capsys.readouterr().err


# --------------------------------------------------------------------------
# simulate


def test_simulate_full_csv_contract(tmp_path):
    out = str(tmp_path / "out")
    code = run(
        "simulate", "--scenario", "charged_particle", "--target", "full",
        "--out-dir", out, "--dt", "0.01", "--T", "0.5",
    )
    assert code == 0
    text = open(os.path.join(out, "trajectory_full.csv"), encoding="utf-8").read()
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == "t,q1,q2,qd1,qd2,J1,J2,E"
    assert lines[-1] == ""  # trailing LF
    assert len(lines) == 1 + 51 + 1  # header + samples + final newline
    first = lines[1].split(",")
    assert first[0] == "0.0"
    # every field is the shortest round-trip form of its own float
    for field in lines[25].split(","):
        assert repr(float(field)) == field
    rep = read_report(out)
    assert rep["target"] == "full"
    assert rep["steps"] == 50
    assert rep["momentum_drift"][0] <= 1e-12


def test_simulate_reduced_magnetic_has_no_velocity_columns(tmp_path):
    out = str(tmp_path / "out")
    code = run(
        "simulate", "--scenario", "charged_particle", "--target", "reduced",
        "--out-dir", out, "--dt", "0.01", "--T", "0.5",
    )
    assert code == 0
    header = open(
        os.path.join(out, "trajectory_reduced.csv"), encoding="utf-8"
    ).readline().strip()
    assert header == "t,q1,q2,J1,J2,E"


def test_simulate_reduced_quasi_cyclic_relabels_shape_coords(tmp_path):
    out = str(tmp_path / "out")
    code = run(
        "simulate", "--scenario", "quasi_cyclic_totalderiv", "--target", "reduced",
        "--out-dir", out, "--dt", "0.01", "--T", "0.5",
    )
    assert code == 0
    header = open(
        os.path.join(out, "trajectory_reduced.csv"), encoding="utf-8"
    ).readline().strip()
    assert header == "t,q1,qd1,J1,E"


def test_simulate_reduced_functional_has_no_momentum_columns(tmp_path):
    out = str(tmp_path / "out")
    code = run(
        "simulate", "--scenario", "functional_toy", "--target", "reduced",
        "--out-dir", out, "--dt", "0.01", "--T", "0.5",
    )
    assert code == 0
    header = open(
        os.path.join(out, "trajectory_reduced.csv"), encoding="utf-8"
    ).readline().strip()
    assert header == "t,q1,qd1,E"
    assert read_report(out)["case"] == "D"


def test_simulate_integration_failure_exits_4(tmp_path, capsys):
    doc = {
        "name": "escape",
        "n": 2,
        "lagrangian": "1/2*qd1^2 + 1/2*qd2^2 + 1/4*q2^4",
        "symmetry": {"group_indices": [0]},
        "momentum": [0.0],
        "initial": {"q": [0.0, 2.0], "qd": [0.0, 2.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    path = write_doc(tmp_path, doc)
    code = run(
        "simulate", "--scenario", path, "--target", "full",
        "--out-dir", str(tmp_path / "o"),
    )
    assert code == 4
    assert "step" in capsys.readouterr().err


def test_simulate_deterministic_output(tmp_path):
    outs = []
    for d in ("a", "b"):
        out = str(tmp_path / d)
        assert run(
            "simulate", "--scenario", "curved_gamma", "--target", "reduced",
            "--out-dir", out, "--dt", "0.005", "--T", "1.0",
        ) == 0
        outs.append(out)
    csv_a = open(os.path.join(outs[0], "trajectory_reduced.csv"), "rb").read()
    csv_b = open(os.path.join(outs[1], "trajectory_reduced.csv"), "rb").read()
    assert csv_a == csv_b
    rep_a = open(os.path.join(outs[0], "report.json"), "rb").read()
    rep_b = open(os.path.join(outs[1], "report.json"), "rb").read()
    assert rep_a == rep_b


def test_report_json_keys_sorted(tmp_path):
    out = str(tmp_path / "out")
    assert run(
        "simulate", "--scenario", "free_cyclic", "--target", "full",
        "--out-dir", out, "--dt", "0.01", "--T", "0.2",
    ) == 0
    raw = open(os.path.join(out, "report.json"), encoding="utf-8").read()
    parsed = json.loads(raw)
    assert raw == json.dumps(parsed, sort_keys=True, indent=2) + "\n"


# --------------------------------------------------------------------------
# compare


def test_compare_reports_small_gaps(tmp_path):
    out = str(tmp_path / "out")
    code = run(
        "compare", "--scenario", "quasi_cyclic_totalderiv",
        "--out-dir", out, "--dt", "0.001", "--T", "2.0",
    )
    assert code == 0
    rep = read_report(out)
    assert rep["projection_gap"] <= 1e-6
    assert rep["reconstruction_gap"] <= 1e-6
    assert rep["full"]["energy_drift"] <= 1e-10
    assert os.path.exists(os.path.join(out, "trajectory_full.csv"))
    assert os.path.exists(os.path.join(out, "trajectory_reduced.csv"))


# --------------------------------------------------------------------------
# demo and input validation


def test_demo_prints_loadable_scenario(tmp_path, capsys):
    assert run("demo") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["name"] == "charged_particle"
    path = write_doc(tmp_path, doc)
    assert run("verify", "--scenario", path, "--out-dir", str(tmp_path / "o")) == 0


def test_demo_other_builtin(capsys):
    assert run("demo", "--scenario", "functional_toy") == 0
    assert json.loads(capsys.readouterr().out)["functional"]["phi_index"] == 1


def test_unknown_scenario_exits_2(tmp_path, capsys):
    assert run("verify", "--scenario", "no_such", "--out-dir", str(tmp_path)) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{broken", encoding="utf-8")
    assert run("verify", "--scenario", str(path), "--out-dir", str(tmp_path)) == 2
    assert "JSON" in capsys.readouterr().err


def test_schema_violations_exit_2(tmp_path):
    base = json.loads(json.dumps(CHARGED_PARTICLE_DOC))

    def expect_2(mutate):
        doc = json.loads(json.dumps(base))
        mutate(doc)
        path = write_doc(tmp_path, doc)
        assert run("verify", "--scenario", path, "--out-dir", str(tmp_path / "o")) == 2

    expect_2(lambda d: d.pop("lagrangian"))
    expect_2(lambda d: d.update(surprise=1))
    expect_2(lambda d: d["symmetry"].update(group_indices=[0, 0]))
    expect_2(lambda d: d.update(momentum=[1.0]))
    expect_2(lambda d: d["initial"].update(q=[0.0]))
    expect_2(lambda d: d["integrator"].update(dt=-0.1))
    expect_2(lambda d: d.update(lagrangian="qd1*nope"))
    expect_2(
        lambda d: d.update(
            functional={
                "phi_index": 1,
                "lambda": "0",
                "mass": [["1", "0"], ["0", "1"]],
                "potential": "0",
            }
        )
    )


def test_bad_mu_override_exits_2(tmp_path, capsys):
    assert run(
        "reduce", "--scenario", "free_cyclic",
        "--out-dir", str(tmp_path), "--mu", "one",
    ) == 2
    assert "--mu" in capsys.readouterr().err
