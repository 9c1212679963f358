"""Symmetry reduction of Lagrangian systems with translational symmetries.

The package takes a Lagrangian given as an expression string, checks the
declared symmetry structure (quasi-invariance, regularity, connection,
cocycle), classifies the reduction case, and integrates full and reduced
dynamics with cross-checkable monitors.  Hot loops run on a compiled
backend (see :mod:`routhian.backends`), everything else on a small
operator-overloading autodiff core.
"""

from .autodiff import Dual, HyperDual
from .dynamics import (
    Trajectory,
    drift,
    el_residual,
    full_el_rhs,
    integrate,
    magnetic_flow_rhs,
    project,
    reconstruct,
    reduced_el_rhs,
    run_full,
    run_reduced,
)
from .errors import (
    ConvergenceError,
    DimensionError,
    EvaluationError,
    ExprError,
    ExprSyntaxError,
    IntegrationError,
    RegularityError,
    RouthianError,
    ScenarioError,
    UnknownIdentifierError,
    UnsupportedCaseError,
)
from .model import (
    CheckResult,
    CocycleMatrix,
    LagrangianSystem,
    MomentumValue,
    State,
    SymmetrySpec,
    VerificationReport,
    build_symmetry,
    check_G_regularity,
    check_connection_condition,
    check_finite_cocycle,
    check_quasi_invariance,
    cocycle,
    energy,
    momentum,
)
from .reduction import (
    FunctionalSpec,
    ReducedSystem,
    ReductionCase,
    build_functional,
    check_functional,
    classify_case,
    functional_lagrangian,
    functional_momentum,
    functional_routhian,
    gyroscopic_form,
    reduce_system,
    routhian,
    routhian_grad,
    solve_velocity,
)
from .scenario import Scenario, load, load_document

__version__ = "0.1.0"

__all__ = [
    "Dual",
    "HyperDual",
    "Trajectory",
    "drift",
    "el_residual",
    "full_el_rhs",
    "integrate",
    "magnetic_flow_rhs",
    "project",
    "reconstruct",
    "reduced_el_rhs",
    "run_full",
    "run_reduced",
    "ConvergenceError",
    "DimensionError",
    "EvaluationError",
    "ExprError",
    "ExprSyntaxError",
    "IntegrationError",
    "RegularityError",
    "RouthianError",
    "ScenarioError",
    "UnknownIdentifierError",
    "UnsupportedCaseError",
    "CheckResult",
    "CocycleMatrix",
    "LagrangianSystem",
    "MomentumValue",
    "State",
    "SymmetrySpec",
    "VerificationReport",
    "build_symmetry",
    "check_G_regularity",
    "check_connection_condition",
    "check_finite_cocycle",
    "check_quasi_invariance",
    "cocycle",
    "energy",
    "momentum",
    "FunctionalSpec",
    "ReducedSystem",
    "ReductionCase",
    "build_functional",
    "check_functional",
    "classify_case",
    "functional_lagrangian",
    "functional_momentum",
    "functional_routhian",
    "gyroscopic_form",
    "reduce_system",
    "routhian",
    "routhian_grad",
    "solve_velocity",
    "Scenario",
    "load",
    "load_document",
    "__version__",
]
