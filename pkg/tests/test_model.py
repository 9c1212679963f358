"""Structural checks, sampling, and symmetry data validation."""

import numpy as np
import pytest

from routhian import model
from routhian.errors import DimensionError, ScenarioError
from routhian.model import LagrangianSystem, State, build_symmetry


def charged_particle():
    sys = LagrangianSystem.from_source(
        2,
        "1/2*m*(qd1^2 + qd2^2) + e*B*(qd1*q2 - qd2*q1)",
        {"m": 1.0, "e": 1.0, "B": 1.0},
    )
    sym = build_symmetry(sys, [0, 1], f=["-e*B*q2", "e*B*q1"])
    return sys, sym


def quasi_cyclic():
    sys = LagrangianSystem.from_source(
        2, "1/2*(qd1^2 + qd2^2) + (qd1 - qd2)*exp(q1 - q2)", {}
    )
    sym = build_symmetry(
        sys, [0], f=["exp(q1 - q2)"], gamma=[["-1"]],
        F=["(exp(s) - 1)*exp(q1 - q2)"],
    )
    return sys, sym


# --------------------------------------------------------------------------
# sampling


def test_halton_points_deterministic_and_in_unit_box():
    a = model.halton_points(5, 64)
    b = model.halton_points(5, 64)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (64, 5)
    assert np.all(a > 0.0) and np.all(a < 1.0)
    # low-discrepancy: no duplicated rows, reasonable spread in dim 0
    assert len({tuple(r) for r in a}) == 64
    assert abs(a[:, 0].mean() - 0.5) < 0.05


def test_sample_states_fills_box():
    box = np.array([[-2.0, -1.0], [3.0, 5.0], [0.0, 0.5], [-1.0, 1.0]])
    pts = model.sample_states(box, 128)
    assert pts.shape == (128, 4)
    for j in range(4):
        assert np.all(pts[:, j] >= box[j, 0]) and np.all(pts[:, j] <= box[j, 1])
        # actually spans a good part of the interval
        assert np.ptp(pts[:, j]) > 0.8 * (box[j, 1] - box[j, 0])


# --------------------------------------------------------------------------
# system and symmetry construction


def test_from_source_rejects_unknown_names():
    with pytest.raises(Exception) as err:
        LagrangianSystem.from_source(2, "qd1*qq + 1", {})
    assert "qq" in str(err.value)


def test_evaluate_plain_floats():
    sys = LagrangianSystem.from_source(1, "1/2*qd1^2 - 1/2*q1^2", {})
    assert float(sys.evaluate([0.3], [0.7])) == pytest.approx(0.5 * 0.49 - 0.5 * 0.09)


def test_build_symmetry_validation():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    with pytest.raises(DimensionError):
        build_symmetry(sys, [0, 0])  # repeated index
    with pytest.raises(DimensionError):
        build_symmetry(sys, [2])  # out of range
    with pytest.raises(DimensionError):
        build_symmetry(sys, [])  # no direction at all
    with pytest.raises(DimensionError):
        build_symmetry(sys, [0], f=["0", "0"])  # one f per direction
    with pytest.raises(DimensionError):
        build_symmetry(sys, [0], gamma=[["0", "0"]])  # k is 1 here
    with pytest.raises(DimensionError):
        build_symmetry(sys, [0], box=[[0, 1]] * 3)  # need 2n rows


def test_gamma_must_be_shape_only():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    # the connection row may reference the shape coordinate q2 but not q1
    sym = build_symmetry(sys, [0], gamma=[["q2"]])
    assert sym.gamma[0][0] is not None
    with pytest.raises(Exception) as err:
        build_symmetry(sys, [0], gamma=[["q1"]])
    assert "q1" in str(err.value)


def test_defaults_zero_f_and_gamma():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    sym = build_symmetry(sys, [1])
    assert sym.m == 1
    assert sym.shape_indices == (0,)
    assert model.f_is_zero(sys, sym)
    box = sym.sample_box
    assert box.shape == (4, 2)
    np.testing.assert_array_equal(box[:, 0], -1.0)


# --------------------------------------------------------------------------
# checks on well-formed systems


def test_quasi_invariance_golden_cases():
    for sys, sym in (charged_particle(), quasi_cyclic()):
        res = model.check_quasi_invariance(sys, sym)
        assert res.passed
        assert res.residual <= 1e-12


def test_quasi_invariance_catches_wrong_f():
    sys, _ = charged_particle()
    bad = build_symmetry(sys, [0, 1], f=["0", "0"])
    res = model.check_quasi_invariance(sys, bad)
    assert not res.passed
    assert res.residual > 0.1
    assert res.worst is not None and set(res.worst) == {"q", "qd"}


def test_finite_cocycle_golden_and_requires_F():
    sys, sym = quasi_cyclic()
    res = model.check_finite_cocycle(sys, sym, [0.5])
    assert res.passed and res.residual <= 1e-12
    res2 = model.check_finite_cocycle(sys, sym, [-1.3])
    assert res2.passed
    nof = build_symmetry(sys, [0], f=["exp(q1 - q2)"], gamma=[["-1"]])
    with pytest.raises(ScenarioError):
        model.check_finite_cocycle(sys, nof, [0.5])


def test_finite_cocycle_catches_wrong_F():
    sys = LagrangianSystem.from_source(
        2, "1/2*(qd1^2 + qd2^2) + (qd1 - qd2)*exp(q1 - q2)", {}
    )
    sym = build_symmetry(
        sys, [0], f=["exp(q1 - q2)"], F=["s*exp(q1 - q2)"]
    )  # linearized, wrong for finite shifts
    res = model.check_finite_cocycle(sys, sym, [0.5])
    assert not res.passed


def test_regularity_passes_and_fails():
    sys, sym = charged_particle()
    assert model.check_G_regularity(sys, sym).passed
    lin = LagrangianSystem.from_source(2, "qd1*q2 + 1/2*qd2^2", {})
    bad = build_symmetry(lin, [0])
    res = model.check_G_regularity(lin, bad)
    assert not res.passed
    assert res.tolerance == 0.0
    assert res.residual > 0.0


def test_connection_condition_entries():
    sys, sym = quasi_cyclic()
    entries = model.check_connection_condition(sys, sym)
    names = [e.name for e in entries]
    assert names == ["connection_condition", "connection_curvature"]
    assert all(e.passed for e in entries)
    # strictly invariant system: no curvature entry even for curved gamma
    sys3 = LagrangianSystem.from_source(
        3, "1/2*(qd1^2 + qd2^2 + qd3^2)", {}
    )
    sym3 = build_symmetry(sys3, [0], gamma=[["0", "q2"]])
    entries3 = model.check_connection_condition(sys3, sym3)
    assert [e.name for e in entries3] == ["connection_condition"]
    assert entries3[0].passed


def test_connection_condition_catches_wrong_gamma():
    sys, _ = quasi_cyclic()
    sym = build_symmetry(sys, [0], f=["exp(q1 - q2)"], gamma=[["1"]])
    entries = model.check_connection_condition(sys, sym)
    assert not entries[0].passed


def test_cocycle_matrix_constant_and_golden():
    sys, sym = charged_particle()
    coc = model.cocycle(sys, sym)
    np.testing.assert_allclose(coc.sigma, [[0.0, 2.0], [-2.0, 0.0]], atol=1e-14)
    assert coc.constancy_residual <= 1e-14


def test_cocycle_constancy_detects_varying_sigma():
    sys = LagrangianSystem.from_source(
        2, "1/2*(qd1^2 + qd2^2) + qd1*q1*q2", {}
    )
    sym = build_symmetry(sys, [0, 1], f=["q1*q2", "0"])
    coc = model.cocycle(sys, sym)
    assert coc.constancy_residual > 0.1


def test_momentum_and_energy_goldens():
    sys, sym = charged_particle()
    st = State(0.0, np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(model.momentum(sys, sym, st).mu, [1.0, 0.0], atol=1e-15)
    assert model.energy(sys, st) == pytest.approx(0.5)
    st2 = State(0.0, np.array([0.4, -0.3]), np.array([1.0, 2.0]))
    # J1 = m qd1 + e B q2 - (-e B q2) = qd1 + 2 q2, J2 = qd2 - 2 q1
    np.testing.assert_allclose(
        model.momentum(sys, sym, st2).mu, [1.0 - 0.6, 2.0 - 0.8], atol=1e-14
    )
    # magnetic coupling contributes nothing to the energy
    assert model.energy(sys, st2) == pytest.approx(0.5 * (1.0 + 4.0))


def test_verification_report_shape():
    sys, sym = quasi_cyclic()
    entries = [
        model.check_quasi_invariance(sys, sym),
        model.check_G_regularity(sys, sym),
    ]
    rep = model.VerificationReport(entries)
    assert rep.passed
    d = rep.as_dict()
    assert d["passed"] is True
    assert [c["name"] for c in d["checks"]] == ["quasi_invariance", "g_regularity"]
