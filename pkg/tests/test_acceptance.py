"""End-to-end acceptance gate.

Each test covers one contract-level guarantee of the package and prints a
single PASS/FAIL line (written straight to the real stdout so the summary
survives pytest's capture).  Tolerances are pinned here and must not be
loosened to make a failing build pass.
"""

import json
import sys

import numpy as np

from routhian import cli, dynamics, model, reduction, scenario


def _record(label: str, pairs) -> None:
    """Print one verdict line for a list of (residual, bound) pairs."""
    worst = max((r / b) for r, b in pairs)
    verdict = "PASS" if worst <= 1.0 else "FAIL"
    print(
        f"[acceptance] {label}: {verdict} (worst residual/bound = {worst:.3e})",
        file=sys.__stdout__,
    )
    assert worst <= 1.0, f"{label}: worst residual/bound {worst:.3e}"


def _load(name: str) -> scenario.Scenario:
    return scenario.load(name)


def _reduce(sc: scenario.Scenario) -> reduction.ReducedSystem:
    return reduction.reduce_system(sc.sys, sc.sym, sc.mu, fspec=sc.fspec)


# --------------------------------------------------------------------------


def test_planar_magnetic_system_golden_values(tmp_path):
    sc = _load("charged_particle")
    pairs = []

    coc = model.cocycle(sc.sys, sc.sym)
    pairs.append((float(np.max(np.abs(coc.sigma - [[0.0, 2.0], [-2.0, 0.0]]))), 1e-12))
    pairs.append((coc.constancy_residual, 1e-12))

    red = _reduce(sc)
    gyro = red.gyro([0.4, -0.9])
    pairs.append((float(np.max(np.abs(gyro - [[0.0, 2.0], [-2.0, 0.0]]))), 1e-12))

    rng = np.random.default_rng(7)
    worst_r = 0.0
    for _ in range(100):
        q = rng.uniform(-2.0, 2.0, size=2)
        want = -0.5 * ((1.0 - 2.0 * q[1]) ** 2 + (0.0 + 2.0 * q[0]) ** 2)
        worst_r = max(worst_r, abs(red.routhian(q, []) - want))
    pairs.append((worst_r, 1e-12))

    # the flow field of the first-order system must return exactly the
    # velocities that put the momentum back on the chosen level
    worst_v = 0.0
    for _ in range(100):
        q = rng.uniform(-2.0, 2.0, size=2)
        v = dynamics.magnetic_flow_rhs(red, q)
        grads = model.lagrangian_input_grad(sc.sys, q, v, slots=(2, 3))
        resid = grads - np.array([-q[1], q[0]]) - sc.mu
        worst_v = max(worst_v, float(np.max(np.abs(resid))))
    pairs.append((worst_v, 1e-8))

    _record("magnetic-case golden values", pairs)


def test_full_flow_conserves_momentum_and_energy():
    pairs = []
    for name in (
        "charged_particle",
        "free_cyclic",
        "quasi_cyclic_totalderiv",
        "curved_gamma",
        "functional_toy",
    ):
        sc = _load(name)
        traj = dynamics.run_full(
            sc.sys, sc.initial, sc.dt, sc.steps, sym=sc.sym, fspec=sc.fspec
        )
        pairs.append((dynamics.drift(traj.momenta), 1e-8))
        pairs.append((dynamics.drift(traj.energy), 1e-8))
    _record("momentum/energy drift over T=10 at dt=1e-3", pairs)


def test_reduced_flow_matches_projected_full_flow():
    pairs = []
    for name in ("quasi_cyclic_totalderiv", "curved_gamma"):
        sc = _load(name)
        red = _reduce(sc)
        full = dynamics.run_full(sc.sys, sc.initial, sc.dt, sc.steps, sym=sc.sym)
        shape = list(sc.sym.shape_indices)
        x0 = sc.initial.q[shape]
        xd0 = sc.initial.qd[shape]
        reduced = dynamics.run_reduced(red, x0, xd0, sc.dt, sc.steps)
        gap = float(np.max(np.abs(dynamics.project(full, sc.sym) - reduced.samples)))
        pairs.append((gap, 1e-6))
    _record("projection gap full vs reduced", pairs)


def test_reconstruction_solves_the_full_equations():
    pairs = []
    for name in ("quasi_cyclic_totalderiv", "curved_gamma"):
        sc = _load(name)
        red = _reduce(sc)
        shape = list(sc.sym.shape_indices)
        group = list(sc.sym.group_indices)
        traj = dynamics.reconstruct(
            red,
            sc.initial.q[shape],
            sc.initial.qd[shape],
            sc.initial.q[group],
            sc.dt,
            sc.steps,
        )
        pairs.append((dynamics.el_residual(sc.sys, traj), 1e-6))
        pairs.append((dynamics.drift(traj.momenta), 1e-8))
        pairs.append((float(np.max(np.abs(traj.momenta[0] - sc.mu))), 1e-8))
    _record("reconstructed trajectory residuals", pairs)


def test_quasi_cyclic_routhian_ignores_group_coordinate():
    sc = _load("quasi_cyclic_totalderiv")
    red = _reduce(sc)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        x = rng.uniform(-1.0, 1.0, size=1)
        xd = rng.uniform(-1.5, 1.5, size=1)
        base = red.routhian(x, xd)
        for off in (-2.0, -0.3, 0.7, 4.0):
            worst = max(worst, abs(red.routhian(x, xd, group_offset=[off]) - base))
    _record("group-coordinate independence", [(worst, 1e-9)])


def test_flat_connection_kills_curvature_and_gyroscopic_terms():
    sc = _load("quasi_cyclic_totalderiv")
    entries = model.check_connection_condition(sc.sys, sc.sym)
    assert [e.name for e in entries] == [
        "connection_condition",
        "connection_curvature",
    ]
    pairs = [(e.residual, 1e-8) for e in entries]
    red = _reduce(sc)
    pairs.append((float(np.max(np.abs(red.gyro([0.6])))), 1e-10))
    _record("flat connection consequences", pairs)


def test_functional_mode_matches_zero_level_flow():
    sc = _load("functional_toy")
    red = _reduce(sc)
    full = dynamics.run_full(sc.sys, sc.initial, sc.dt, sc.steps, fspec=sc.fspec)
    theta = list(sc.fspec.theta_indices)
    x0 = sc.initial.q[theta]
    xd0 = sc.initial.qd[theta]
    reduced = dynamics.run_reduced(red, x0, xd0, sc.dt, sc.steps)
    k = len(theta)
    gap = float(
        np.max(np.abs(full.samples[:, theta] - reduced.samples[:, :k]))
    )
    pairs = [(gap, 1e-6)]

    # the eliminated coordinate must not appear in the substituted Lagrangian
    rng = np.random.default_rng(3)
    worst = 0.0
    base_sys = reduction.functional_lagrangian(sc.sys, sc.fspec)
    for off in (-1.3, 0.5, 2.0):
        other = reduction.functional_lagrangian(sc.sys, sc.fspec, phi_offset=off)
        for _ in range(50):
            th = rng.uniform(-1.0, 1.0, size=k)
            thd = rng.uniform(-1.0, 1.0, size=k)
            worst = max(
                worst, abs(base_sys.evaluate(th, thd) - other.evaluate(th, thd))
            )
    pairs.append((worst, 1e-9))
    _record("substituted-Lagrangian flow on the zero level", pairs)


def test_derivatives_and_integrator_against_baselines():
    pairs = []
    h = 1e-6

    # reduced-gradient components against central finite differences
    sc = _load("curved_gamma")
    red = _reduce(sc)
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(-0.3, 0.3, size=2)
        xd = rng.uniform(-0.8, 0.8, size=2)
        dx, dxd = red.routhian_grad(x, xd)
        for i in range(2):
            for vec, got in ((x, dx), (xd, dxd)):
                up = vec.copy()
                dn = vec.copy()
                up[i] += h
                dn[i] -= h
                if vec is x:
                    fd = (red.routhian(up, xd) - red.routhian(dn, xd)) / (2 * h)
                else:
                    fd = (red.routhian(x, up) - red.routhian(x, dn)) / (2 * h)
                worst = max(worst, abs(got[i] - fd) / max(1.0, abs(fd)))
    pairs.append((worst, 1e-6))

    # raw expression derivatives against finite differences
    worst = 0.0
    for _ in range(10):
        q = rng.uniform(-0.5, 0.5, size=3)
        qd = rng.uniform(-1.0, 1.0, size=3)
        grads = model.lagrangian_input_grad(sc.sys, q, qd, slots=range(6))
        flat = np.concatenate([q, qd])
        for i in range(6):
            up = flat.copy()
            dn = flat.copy()
            up[i] += h
            dn[i] -= h
            fd = (
                sc.sys.evaluate(up[:3], up[3:]) - sc.sys.evaluate(dn[:3], dn[3:])
            ) / (2 * h)
            worst = max(worst, abs(grads[i] - fd) / max(1.0, abs(fd)))
    pairs.append((worst, 1e-6))

    # one oscillator period on an exact grid
    osc = model.LagrangianSystem.from_source(1, "1/2*qd1^2 - 1/2*q1^2", {})
    steps = 6283
    dt = 2.0 * np.pi / steps
    traj = dynamics.run_full(osc, model.State(0.0, [1.0], [0.0]), dt, steps)
    err = float(np.max(np.abs(traj.samples[-1] - [1.0, 0.0])))
    pairs.append((err, 1e-10))
    pairs.append((dynamics.drift(traj.energy), 1e-12))

    _record("derivative and integrator baselines", pairs)


def test_command_line_rejects_broken_inputs(tmp_path):
    def write(doc):
        path = tmp_path / f"{doc['name']}.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    wrong_f = {
        "name": "wrong_f",
        "n": 2,
        "lagrangian": "1/2*(qd1^2 + qd2^2) + qd1*q2 - qd2*q1",
        "symmetry": {"group_indices": [0, 1], "f": ["0", "0"]},
        "momentum": [0.0, 0.0],
        "initial": {"q": [0.0, 0.0], "qd": [1.0, 0.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    linear = {
        "name": "linear_group_velocity",
        "n": 2,
        "lagrangian": "qd1*q2 + 1/2*qd2^2",
        "symmetry": {"group_indices": [0]},
        "momentum": [0.1],
        "initial": {"q": [0.0, 1.0], "qd": [0.0, 0.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    mixed = {
        "name": "mixed_rank",
        "n": 3,
        "lagrangian": "1/2*(qd1^2 + qd2^2 + qd3^2) + qd1*q2 - qd2*q1",
        "symmetry": {"group_indices": [0, 1], "f": ["-q2", "q1"]},
        "momentum": [0.0, 0.0],
        "initial": {"q": [0.0, 0.0, 0.0], "qd": [1.0, 0.0, 0.0]},
        "integrator": {"dt": 0.001, "T": 1.0},
    }
    codes = [
        cli.main(
            ["verify", "--scenario", write(wrong_f), "--out-dir", str(tmp_path / "a")]
        ),
        cli.main(
            ["verify", "--scenario", write(linear), "--out-dir", str(tmp_path / "b")]
        ),
        cli.main(
            ["reduce", "--scenario", write(mixed), "--out-dir", str(tmp_path / "c")]
        ),
    ]
    ok = codes == [1, 1, 3]
    print(
        f"[acceptance] rejection exit codes: {'PASS' if ok else 'FAIL'} "
        f"(got {codes}, want [1, 1, 3])",
        file=sys.__stdout__,
    )
    assert ok
