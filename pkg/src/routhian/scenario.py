"""Scenario documents: validation and construction of model objects.

A scenario is a JSON object (or a compiled-in dict of the same shape)
describing one system: Lagrangian source, either symmetry data or
functional-elimination data, momentum level, initial state, integrator
grid, and optional check settings.  ``load_document`` resolves a name or
path, ``build`` validates and turns a document into live objects.
"""

from __future__ import annotations

import json
import numbers
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import builtins as builtin_scenarios
from . import model, reduction
from .errors import DimensionError, ScenarioError
from .model import LagrangianSystem, State, SymmetrySpec
from .reduction import FunctionalSpec

_TOP_KEYS = {
    "name",
    "n",
    "lagrangian",
    "parameters",
    "symmetry",
    "functional",
    "momentum",
    "initial",
    "integrator",
    "checks",
}
_SYMMETRY_KEYS = {"group_indices", "f", "gamma", "F", "sample_box"}
_FUNCTIONAL_KEYS = {"phi_index", "lambda", "mass", "potential", "sample_box"}
_INITIAL_KEYS = {"t", "q", "qd"}
_INTEGRATOR_KEYS = {"dt", "T"}
_CHECK_KEYS = {"samples", "tolerance", "group_shift"}


@dataclass(frozen=True)
class Scenario:
    """A validated scenario with its model objects built."""

    name: str
    sys: LagrangianSystem
    sym: Optional[SymmetrySpec]
    fspec: Optional[FunctionalSpec]
    mu: np.ndarray
    initial: State
    dt: float
    steps: int
    samples: int
    tolerance: float
    group_shift: Optional[np.ndarray]

    @property
    def duration(self) -> float:
        return self.dt * self.steps


def load_document(ref: str) -> dict:
    """Resolve a scenario reference: builtin name first, then a JSON file."""
    if ref in builtin_scenarios.BUILTIN_SCENARIOS:
        return builtin_scenarios.builtin_document(ref)
    if os.path.exists(ref):
        try:
            with open(ref, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file {ref!r} is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ScenarioError(f"scenario file {ref!r} must hold a JSON object")
        return doc
    raise ScenarioError(
        f"unknown scenario {ref!r}: not a builtin "
        f"({', '.join(builtin_scenarios.builtin_names())}) and not a file"
    )


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ScenarioError(f"{where} is missing the {key!r} entry")
    value = doc[key]
    if kind is float:
        if not isinstance(value, numbers.Real) or isinstance(value, bool):
            raise ScenarioError(f"{where}.{key} must be a number")
        return float(value)
    if kind is int:
        if not isinstance(value, numbers.Integral) or isinstance(value, bool):
            raise ScenarioError(f"{where}.{key} must be an integer")
        return int(value)
    if not isinstance(value, kind):
        raise ScenarioError(f"{where}.{key} must be of type {kind.__name__}")
    return value


def _reject_unknown(doc: dict, allowed: set, where: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ScenarioError(f"{where} has unknown entries: {', '.join(extra)}")


def _float_list(value, length: int, where: str) -> list:
    if not isinstance(value, list) or len(value) != length:
        raise ScenarioError(f"{where} must be a list of {length} numbers")
    out = []
    for v in value:
        if not isinstance(v, numbers.Real) or isinstance(v, bool):
            raise ScenarioError(f"{where} must contain numbers only")
        out.append(float(v))
    return out


def _string_list(value, where: str) -> list:
    if not isinstance(value, list) or not all(isinstance(s, str) for s in value):
        raise ScenarioError(f"{where} must be a list of strings")
    return list(value)


def _box(value, n: int, where: str):
    if value is None:
        return None
    if not isinstance(value, list) or len(value) != 2 * n:
        raise ScenarioError(
            f"{where} must list one [lo, hi] pair per coordinate and velocity "
            f"({2 * n} pairs)"
        )
    return [
        _float_list(pair, 2, f"{where}[{i}]") for i, pair in enumerate(value)
    ]


def build(doc: dict) -> Scenario:
    """Validate a document and construct the scenario objects.

    Raises :class:`ScenarioError` (or :class:`DimensionError`) on any
    malformed entry; expression problems surface as ``ExprError`` from the
    parser with the source offset attached.
    """
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "scenario")
    name = _require(doc, "name", str, "scenario")
    n = _require(doc, "n", int, "scenario")
    if n < 1:
        raise ScenarioError("scenario.n must be at least 1")
    source = _require(doc, "lagrangian", str, "scenario")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise ScenarioError("scenario.parameters must be an object")
    reserved = set(model.coord_names(n)) | set(model.velocity_names(n)) | {"s"}
    for pname, pval in params.items():
        if not isinstance(pname, str) or not pname.isidentifier():
            raise ScenarioError(f"parameter name {pname!r} is not an identifier")
        if pname in reserved:
            raise ScenarioError(
                f"parameter name {pname!r} collides with a state variable"
            )
        if not isinstance(pval, numbers.Real) or isinstance(pval, bool):
            raise ScenarioError(f"parameter {pname!r} must be a number")
    params = {k: float(v) for k, v in params.items()}

    sys = LagrangianSystem.from_source(n, source, params)

    sym_doc = doc.get("symmetry")
    fct_doc = doc.get("functional")
    if sym_doc is None and fct_doc is None:
        raise ScenarioError(
            "scenario needs a 'symmetry' block or a 'functional' block"
        )
    if sym_doc is not None and fct_doc is not None:
        raise ScenarioError(
            "scenario declares both 'symmetry' and 'functional'; pick one"
        )

    sym = None
    fspec = None
    if sym_doc is not None:
        if not isinstance(sym_doc, dict):
            raise ScenarioError("scenario.symmetry must be an object")
        _reject_unknown(sym_doc, _SYMMETRY_KEYS, "symmetry")
        gidx = sym_doc.get("group_indices")
        if (
            not isinstance(gidx, list)
            or not gidx
            or not all(
                isinstance(i, numbers.Integral) and not isinstance(i, bool)
                for i in gidx
            )
        ):
            raise ScenarioError(
                "symmetry.group_indices must be a non-empty list of integers"
            )
        f_src = sym_doc.get("f")
        if f_src is not None:
            f_src = _string_list(f_src, "symmetry.f")
        gamma_src = sym_doc.get("gamma")
        if gamma_src is not None:
            if not isinstance(gamma_src, list):
                raise ScenarioError("symmetry.gamma must be a list of rows")
            gamma_src = [
                _string_list(row, f"symmetry.gamma[{a}]")
                for a, row in enumerate(gamma_src)
            ]
        cocycle_src = sym_doc.get("F")
        if cocycle_src is not None:
            cocycle_src = _string_list(cocycle_src, "symmetry.F")
        box = _box(sym_doc.get("sample_box"), n, "symmetry.sample_box")
        sym = model.build_symmetry(
            sys,
            [int(i) for i in gidx],
            f=f_src,
            gamma=gamma_src,
            F=cocycle_src,
            box=box,
        )
        m = sym.m
    else:
        if not isinstance(fct_doc, dict):
            raise ScenarioError("scenario.functional must be an object")
        _reject_unknown(fct_doc, _FUNCTIONAL_KEYS, "functional")
        phi_index = _require(fct_doc, "phi_index", int, "functional")
        lam_src = _require(fct_doc, "lambda", str, "functional")
        mass_src = fct_doc.get("mass")
        if not isinstance(mass_src, list):
            raise ScenarioError("functional.mass must be a list of rows")
        mass_src = [
            _string_list(row, f"functional.mass[{i}]")
            for i, row in enumerate(mass_src)
        ]
        pot_src = _require(fct_doc, "potential", str, "functional")
        box = _box(fct_doc.get("sample_box"), n, "functional.sample_box")
        fspec = reduction.build_functional(
            sys, phi_index, lam_src, mass_src, pot_src, box=box
        )
        m = 1

    mu = np.array(
        _float_list(
            _require(doc, "momentum", list, "scenario"), m, "scenario.momentum"
        )
    )

    init_doc = _require(doc, "initial", dict, "scenario")
    _reject_unknown(init_doc, _INITIAL_KEYS, "initial")
    q0 = np.array(_float_list(_require(init_doc, "q", list, "initial"), n, "initial.q"))
    qd0 = np.array(
        _float_list(_require(init_doc, "qd", list, "initial"), n, "initial.qd")
    )
    t0 = float(init_doc.get("t", 0.0))
    initial = State(t0, q0, qd0)

    int_doc = _require(doc, "integrator", dict, "scenario")
    _reject_unknown(int_doc, _INTEGRATOR_KEYS, "integrator")
    dt = _require(int_doc, "dt", float, "integrator")
    duration = _require(int_doc, "T", float, "integrator")
    if dt <= 0.0 or duration <= 0.0:
        raise ScenarioError("integrator.dt and integrator.T must be positive")
    steps = int(round(duration / dt))
    if steps < 1:
        raise ScenarioError("integrator grid has no steps (T < dt)")

    checks = doc.get("checks", {})
    if not isinstance(checks, dict):
        raise ScenarioError("scenario.checks must be an object")
    _reject_unknown(checks, _CHECK_KEYS, "checks")
    samples = checks.get("samples", model.DEFAULT_SAMPLES)
    if not isinstance(samples, numbers.Integral) or isinstance(samples, bool) or samples < 1:
        raise ScenarioError("checks.samples must be a positive integer")
    tolerance = checks.get("tolerance", model.DEFAULT_TOLERANCE)
    if not isinstance(tolerance, numbers.Real) or tolerance <= 0.0:
        raise ScenarioError("checks.tolerance must be a positive number")
    shift = checks.get("group_shift")
    if shift is not None:
        shift = np.array(_float_list(shift, m, "checks.group_shift"))

    return Scenario(
        name=name,
        sys=sys,
        sym=sym,
        fspec=fspec,
        mu=mu,
        initial=initial,
        dt=float(dt),
        steps=steps,
        samples=int(samples),
        tolerance=float(tolerance),
        group_shift=shift,
    )


def load(ref: str) -> Scenario:
    return build(load_document(ref))
