"""Command-line interface.

Five subcommands sharing one scenario pipeline:

* ``verify``    - run the structural checks, write a report, exit 1 on failure
* ``reduce``    - classify the reduction and report its data at the initial point
* ``simulate``  - integrate the full or reduced dynamics, write CSV + report
* ``compare``   - run both sides and report projection/reconstruction gaps
* ``demo``      - print a scenario document to adapt

Exit codes: 0 success, 1 verification failure, 2 malformed input or CLI
usage, 3 unsupported reduction case, 4 integration failure.  Output files
are deterministic: floats go through ``repr`` (shortest round-trip form),
JSON keys are sorted, newlines are LF.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import backends, builtins, dynamics, model, reduction, scenario
from .dynamics import Trajectory
from .errors import (
    ConvergenceError,
    ExprError,
    IntegrationError,
    RegularityError,
    RouthianError,
    ScenarioError,
    UnsupportedCaseError,
)
from .model import CheckResult, State
from .reduction import ReductionCase
from .scenario import Scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_UNSUPPORTED = 3
EXIT_INTEGRATION = 4

#: finite group shift used by the cocycle check when the scenario gives none
DEFAULT_GROUP_SHIFT = 0.5


def _fmt(value: float) -> str:
    return repr(float(value))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_report(out_dir: str, payload: dict) -> str:
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(_jsonable(payload), sort_keys=True, indent=2))
        fh.write("\n")
    return path


def _write_trajectory(
    out_dir: str, filename: str, traj: Trajectory, header: list
) -> str:
    path = os.path.join(out_dir, filename)
    blocks = [traj.times[:, None], traj.samples]
    if traj.momenta.shape[1]:
        blocks.append(traj.momenta)
    blocks.append(traj.energy[:, None])
    table = np.hstack(blocks)
    if len(header) != table.shape[1]:
        raise RouthianError("internal: trajectory header does not match data")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _state_header(dim: int, with_velocities: bool, n_momenta: int) -> list:
    cols = ["t"] + [f"q{i + 1}" for i in range(dim)]
    if with_velocities:
        cols += [f"qd{i + 1}" for i in range(dim)]
    cols += [f"J{a + 1}" for a in range(n_momenta)]
    return cols + ["E"]


def _full_header(sc: Scenario) -> list:
    m = sc.sym.m if sc.sym is not None else 1
    return _state_header(sc.sys.n, True, m)


def _reduced_header(sc: Scenario, red) -> list:
    if red.case is ReductionCase.MAGNETIC:
        return _state_header(red.sys.n, False, red.mu.shape[0])
    if red.case is ReductionCase.FUNCTIONAL:
        return _state_header(red.shape_dim, True, 0)
    return _state_header(red.shape_dim, True, red.mu.shape[0])


def _run_full(sc: Scenario) -> Trajectory:
    return dynamics.run_full(
        sc.sys, sc.initial, sc.dt, sc.steps, sym=sc.sym, fspec=sc.fspec
    )


def _reduced_initial(sc: Scenario, red) -> tuple:
    q0 = np.asarray(sc.initial.q, dtype=np.float64)
    qd0 = np.asarray(sc.initial.qd, dtype=np.float64)
    if red.case is ReductionCase.MAGNETIC:
        return q0, np.zeros(0)
    if red.case is ReductionCase.FUNCTIONAL:
        idx = list(red.fspec.theta_indices)
        return q0[idx], qd0[idx]
    idx = list(sc.sym.shape_indices)
    return q0[idx], qd0[idx]


def _run_reduced(sc: Scenario, red) -> Trajectory:
    x0, xd0 = _reduced_initial(sc, red)
    return dynamics.run_reduced(red, x0, xd0, sc.dt, sc.steps, t0=sc.initial.t)


def _verification_entries(sc: Scenario) -> tuple:
    """All check entries for a scenario plus the case tag when classifiable."""
    if sc.fspec is not None:
        entries = reduction.check_functional(
            sc.sys, sc.fspec, sc.samples, sc.tolerance
        )
        return entries, ReductionCase.FUNCTIONAL.value
    sym = sc.sym
    entries = [
        model.check_quasi_invariance(sc.sys, sym, sc.samples, sc.tolerance)
    ]
    if sym.F is not None:
        shift = sc.group_shift
        if shift is None:
            shift = np.full(sym.m, DEFAULT_GROUP_SHIFT)
        entries.append(
            model.check_finite_cocycle(sc.sys, sym, shift, sc.samples, sc.tolerance)
        )
    entries.append(model.check_G_regularity(sc.sys, sym, sc.samples))
    entries.extend(
        model.check_connection_condition(sc.sys, sym, sc.samples, sc.tolerance)
    )
    coc = model.cocycle(sc.sys, sym, sc.samples)
    entries.append(
        CheckResult(
            "cocycle_constancy",
            coc.constancy_residual <= sc.tolerance,
            coc.constancy_residual,
            sc.tolerance,
            None,
        )
    )
    try:
        tag = reduction.classify_case(sc.sys, sym, coc).value
    except UnsupportedCaseError:
        tag = None
    return entries, tag


def cmd_verify(sc: Scenario, args) -> int:
    entries, tag = _verification_entries(sc)
    report = model.VerificationReport(entries)
    payload = {
        "command": "verify",
        "scenario": sc.name,
        "case": tag,
        **report.as_dict(),
    }
    _write_report(args.out_dir, payload)
    for e in entries:
        status = "PASS" if e.passed else "FAIL"
        print(
            f"{e.name}: {status} residual={_fmt(e.residual)} "
            f"tolerance={_fmt(e.tolerance)}"
        )
    npass = sum(1 for e in entries if e.passed)
    verdict = "PASSED" if report.passed else "FAILED"
    print(f"verification {verdict} ({npass}/{len(entries)} checks)")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_reduce(sc: Scenario, args) -> int:
    red = reduction.reduce_system(
        sc.sys, sc.sym, sc.mu, fspec=sc.fspec, samples=sc.samples
    )
    x0, xd0 = _reduced_initial(sc, red)
    payload = {
        "command": "reduce",
        "scenario": sc.name,
        "case": red.case.value,
        "shape_dim": red.shape_dim,
        "momentum": red.mu,
        "initial_point": x0,
        "initial_velocity": xd0,
        "gyroscopic_matrix": red.gyro(x0),
        "routhian": red.routhian(x0, xd0),
    }
    if red.case in (ReductionCase.STRICT_CYCLIC, ReductionCase.QUASI_CYCLIC):
        payload["group_velocities"] = red.solve_velocity(x0, xd0)
        payload["cocycle_matrix"] = red.sigma.sigma
    elif red.case is ReductionCase.MAGNETIC:
        payload["group_velocities"] = red.solve_velocity(x0, np.zeros(0))
        payload["cocycle_matrix"] = red.sigma.sigma
    else:
        payload["shifted_momentum"] = reduction.functional_momentum(
            sc.sys, red.fspec, sc.initial
        )
    _write_report(args.out_dir, payload)
    print(f"case {red.case.value}: reduced dimension {red.shape_dim}")
    print(f"routhian at initial point: {_fmt(payload['routhian'])}")
    return EXIT_OK


def cmd_simulate(sc: Scenario, args) -> int:
    if args.target == "full":
        traj = _run_full(sc)
        csv_path = _write_trajectory(
            args.out_dir, "trajectory_full.csv", traj, _full_header(sc)
        )
        case = None
    else:
        red = reduction.reduce_system(
            sc.sys, sc.sym, sc.mu, fspec=sc.fspec, samples=sc.samples
        )
        traj = _run_reduced(sc, red)
        csv_path = _write_trajectory(
            args.out_dir, "trajectory_reduced.csv", traj, _reduced_header(sc, red)
        )
        case = red.case.value
    payload = {
        "command": "simulate",
        "scenario": sc.name,
        "target": args.target,
        "case": case,
        "dt": sc.dt,
        "steps": sc.steps,
        "momentum_drift": _column_drifts(traj.momenta),
        "energy_drift": dynamics.drift(traj.energy),
        "final_state": traj.samples[-1],
        "csv": os.path.basename(csv_path),
    }
    _write_report(args.out_dir, payload)
    print(
        f"simulated {sc.name} [{args.target}] for {sc.steps} steps of {_fmt(sc.dt)}"
    )
    drifts = ", ".join(_fmt(v) for v in payload["momentum_drift"]) or "-"
    print(f"momentum drift: {drifts}")
    print(f"energy drift: {_fmt(payload['energy_drift'])}")
    return EXIT_OK


def _column_drifts(series: np.ndarray) -> list:
    return [dynamics.drift(series[:, a]) for a in range(series.shape[1])]


def _projection_gap(sc: Scenario, red, full: Trajectory, reduced: Trajectory) -> float:
    if red.case is ReductionCase.MAGNETIC:
        return float(np.max(np.abs(reduced.samples - full.samples[:, : red.sys.n])))
    if red.case is ReductionCase.FUNCTIONAL:
        idx = list(red.fspec.theta_indices)
        n = red.sys.n
        proj = np.hstack(
            [full.samples[:, idx], full.samples[:, [n + i for i in idx]]]
        )
        return float(np.max(np.abs(reduced.samples - proj)))
    return float(np.max(np.abs(reduced.samples - dynamics.project(full, sc.sym))))


def cmd_compare(sc: Scenario, args) -> int:
    red = reduction.reduce_system(
        sc.sys, sc.sym, sc.mu, fspec=sc.fspec, samples=sc.samples
    )
    full = _run_full(sc)
    reduced = _run_reduced(sc, red)
    _write_trajectory(args.out_dir, "trajectory_full.csv", full, _full_header(sc))
    _write_trajectory(
        args.out_dir, "trajectory_reduced.csv", reduced, _reduced_header(sc, red)
    )
    gap = _projection_gap(sc, red, full, reduced)
    x0, xd0 = _reduced_initial(sc, red)
    if red.case is ReductionCase.MAGNETIC:
        group0 = None
    elif red.case is ReductionCase.FUNCTIONAL:
        group0 = sc.initial.q[red.fspec.phi_index]
    else:
        group0 = np.asarray(sc.initial.q)[list(sc.sym.group_indices)]
    recon = dynamics.reconstruct(red, x0, xd0, group0, sc.dt, sc.steps, sc.initial.t)
    recon_gap = float(np.max(np.abs(recon.samples - full.samples)))
    payload = {
        "command": "compare",
        "scenario": sc.name,
        "case": red.case.value,
        "dt": sc.dt,
        "steps": sc.steps,
        "projection_gap": gap,
        "reconstruction_gap": recon_gap,
        "full": {
            "momentum_drift": _column_drifts(full.momenta),
            "energy_drift": dynamics.drift(full.energy),
        },
        "reduced": {
            "momentum_drift": _column_drifts(reduced.momenta),
            "energy_drift": dynamics.drift(reduced.energy),
        },
    }
    _write_report(args.out_dir, payload)
    print(f"projection gap: {_fmt(gap)}")
    print(f"reconstruction gap: {_fmt(recon_gap)}")
    return EXIT_OK


def cmd_demo(sc_ref: Optional[str]) -> int:
    name = sc_ref or "charged_particle"
    if name not in builtins.BUILTIN_SCENARIOS:
        raise ScenarioError(
            f"demo wants a builtin name, one of: {', '.join(builtins.builtin_names())}"
        )
    print(json.dumps(builtins.builtin_document(name), sort_keys=True, indent=2))
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="routhian",
        description="Symmetry reduction of Lagrangian systems: verify, reduce, "
        "simulate, compare.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, need_scenario=True):
        if need_scenario:
            sp.add_argument(
                "--scenario",
                required=True,
                help="builtin scenario name or path to a scenario JSON file",
            )
        sp.add_argument(
            "--out-dir",
            default=".",
            help="directory for report.json and CSV output (created if absent)",
        )
        sp.add_argument("--dt", type=float, default=None, help="override step size")
        sp.add_argument(
            "--T", type=float, default=None, help="override total integration time"
        )
        sp.add_argument(
            "--mu",
            default=None,
            help="override the momentum level (comma-separated numbers)",
        )

    add_common(sub.add_parser("verify", help="run the structural checks"))
    add_common(sub.add_parser("reduce", help="classify and report the reduction"))
    sim = sub.add_parser("simulate", help="integrate one side of the reduction")
    add_common(sim)
    sim.add_argument(
        "--target",
        choices=("full", "reduced"),
        default="full",
        help="which dynamics to integrate",
    )
    add_common(sub.add_parser("compare", help="integrate both sides and report gaps"))
    demo = sub.add_parser("demo", help="print a builtin scenario document")
    demo.add_argument(
        "--scenario", default=None, help="builtin name (default: charged_particle)"
    )
    return p


def _apply_overrides(doc: dict, args) -> dict:
    if getattr(args, "dt", None) is not None:
        doc.setdefault("integrator", {})["dt"] = args.dt
    if getattr(args, "T", None) is not None:
        doc.setdefault("integrator", {})["T"] = args.T
    if getattr(args, "mu", None) is not None:
        try:
            doc["momentum"] = [float(v) for v in args.mu.split(",")]
        except ValueError:
            raise ScenarioError(f"--mu must be comma-separated numbers, got {args.mu!r}")
    return doc


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        backends.active()  # fail early on a bad backend request
        if args.command == "demo":
            return cmd_demo(args.scenario)
        doc = _apply_overrides(scenario.load_document(args.scenario), args)
        sc = scenario.build(doc)
        os.makedirs(args.out_dir, exist_ok=True)
        if args.command == "verify":
            return cmd_verify(sc, args)
        if args.command == "reduce":
            return cmd_reduce(sc, args)
        if args.command == "simulate":
            return cmd_simulate(sc, args)
        return cmd_compare(sc, args)
    except (ScenarioError, ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except UnsupportedCaseError as exc:
        print(f"unsupported reduction: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (IntegrationError, ConvergenceError, RegularityError) as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
