"""Routh reduction: velocity solve, Routhian, gyroscopic data, case taxonomy.

Everything here is per-point and built on the object autodiff path; the
compiled backends reimplement the same formulas for the integration loops,
and the two routes are cross-checked in the tests.

Case taxonomy (the ``value`` letter is what reports print):

* ``STRICT_CYCLIC`` (A) — f = 0, the group coordinates are plainly cyclic.
* ``QUASI_CYCLIC`` (B) — f != 0 but its antisymmetrized Jacobian vanishes;
  reduction needs the connection and a covariantly constant f.
* ``MAGNETIC`` (C) — the antisymmetrized Jacobian is nondegenerate and every
  coordinate is a group direction; the reduced dynamics is a first-order
  flow driven by a magnetic 2-form.
* ``FUNCTIONAL`` (D) — the shifted-momentum construction on the zero level
  set of J = dL/dqd_phi - lambda(phi).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import exprlang, linsolve, model
from .autodiff import Dual, hessian_block, value_of
from .errors import (
    ConvergenceError,
    DimensionError,
    EvaluationError,
    RegularityError,
    ScenarioError,
    UnsupportedCaseError,
)
from .model import (
    CheckResult,
    CocycleMatrix,
    LagrangianSystem,
    State,
    SymmetrySpec,
    coord_names,
    velocity_names,
)

#: entries of the cocycle matrix below this are treated as zero
SIGMA_ZERO_TOL = 1e-8

_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 50
_NEWTON_MAX_HALVINGS = 30


class ReductionCase(enum.Enum):
    STRICT_CYCLIC = "A"
    QUASI_CYCLIC = "B"
    MAGNETIC = "C"
    FUNCTIONAL = "D"


def _lagrangian_fn(sys: LagrangianSystem):
    names = sys.input_names

    def fn(vals):
        env: dict = dict(sys.parameters)
        env.update(zip(names, vals))
        return exprlang.evaluate(sys.lagrangian, env)

    return fn


def _f_values(sys: LagrangianSystem, sym: SymmetrySpec, q) -> np.ndarray:
    env: dict = dict(sys.parameters)
    env.update(zip(coord_names(sys.n), (float(v) for v in q)))
    return np.array(
        [float(value_of(exprlang.evaluate(fa, env))) for fa in sym.f]
    )


def _gamma_values(sys: LagrangianSystem, sym: SymmetrySpec, x) -> np.ndarray:
    """Connection coefficients at a shape point, as an (m, k) array."""
    shape_names = tuple(coord_names(sym.n)[i] for i in sym.shape_indices)
    env: dict = dict(sys.parameters)
    env.update(zip(shape_names, (float(v) for v in x)))
    k = len(sym.shape_indices)
    out = np.empty((sym.m, k))
    for a in range(sym.m):
        for kk in range(k):
            out[a, kk] = float(value_of(exprlang.evaluate(sym.gamma[a][kk], env)))
    return out


def _gamma_jacobian(sys: LagrangianSystem, sym: SymmetrySpec, x) -> np.ndarray:
    """gamj[a, kk, ss] = d Gamma^a_kk / d x^ss at a shape point."""
    shape_names = tuple(coord_names(sym.n)[i] for i in sym.shape_indices)
    k = len(sym.shape_indices)
    vals = [float(v) for v in x]
    out = np.empty((sym.m, k, k))
    for ss in range(k):
        env = {
            **sys.parameters,
            **{
                nm: Dual(vals[i], 1.0 if i == ss else 0.0)
                for i, nm in enumerate(shape_names)
            },
        }
        for a in range(sym.m):
            for kk in range(k):
                v = exprlang.evaluate(sym.gamma[a][kk], env)
                out[a, kk, ss] = v.deriv if isinstance(v, Dual) else 0.0
    return out


def _section_config(sym: SymmetrySpec, point, group_offset=None) -> np.ndarray:
    """Configuration for a reduced point: group coordinates frozen on the
    canonical section (all zero unless offset), shape slots from ``point``.
    When every coordinate is a group direction the point *is* the
    configuration."""
    n = sym.n
    if sym.m == n:
        return np.asarray(point, dtype=np.float64).copy()
    q = np.zeros(n)
    if group_offset is not None:
        q[list(sym.group_indices)] = group_offset
    q[list(sym.shape_indices)] = np.asarray(point, dtype=np.float64)
    return q


def classify_case(
    sys: LagrangianSystem, sym: SymmetrySpec, coc: CocycleMatrix
) -> ReductionCase:
    """Reduction case from the cocycle matrix rank and the group size.

    Zero matrix: strict cyclic when f vanishes on the box, quasi-cyclic
    otherwise.  Nondegenerate with every coordinate a group direction:
    magnetic.  Anything in between is out of scope and raises.
    """
    m = sym.m
    n = sym.n
    if float(np.max(np.abs(coc.sigma))) <= SIGMA_ZERO_TOL:
        if model.f_is_zero(sys, sym):
            return ReductionCase.STRICT_CYCLIC
        return ReductionCase.QUASI_CYCLIC
    rank = int(np.linalg.matrix_rank(coc.sigma, tol=SIGMA_ZERO_TOL))
    if rank == m and m == n:
        return ReductionCase.MAGNETIC
    raise UnsupportedCaseError(
        f"cocycle matrix has rank {rank} with {m} group direction(s) in "
        f"dimension {n}; only rank 0, or full rank with m = n, is supported"
    )


def solve_velocity(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    point,
    xd,
    mu,
    group_offset=None,
) -> np.ndarray:
    """Group velocities solving dL/dqd^a = mu_a + f_a(q).

    Damped Newton iteration seeded at zero group velocities: steps are
    halved while the residual sup-norm fails to decrease.  The
    configuration sits on the canonical section (see ``_section_config``).
    """
    n = sys.n
    m = sym.m
    q = _section_config(sym, point, group_offset)
    qd = np.zeros(n)
    if len(sym.shape_indices):
        qd[list(sym.shape_indices)] = np.asarray(xd, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (m,):
        raise DimensionError(f"expected {m} momentum components, got {mu.shape}")
    fv = _f_values(sys, sym, q)
    slots = [n + gi for gi in sym.group_indices]
    fn = _lagrangian_fn(sys)
    w = np.zeros(m)

    def residual(wvec) -> np.ndarray:
        qd_local = qd.copy()
        qd_local[list(sym.group_indices)] = wvec
        return (
            model.lagrangian_input_grad(sys, q, qd_local, slots) - mu - fv
        )

    r = residual(w)
    for _ in range(_NEWTON_MAX_ITER):
        rnorm = float(np.max(np.abs(r)))
        if rnorm <= _NEWTON_TOL:
            return w
        qd_local = qd.copy()
        qd_local[list(sym.group_indices)] = w
        amat = hessian_block(fn, np.concatenate((q, qd_local)), slots, slots)
        ws = linsolve.lu_factor(amat)
        if ws.singular:
            raise RegularityError(
                "group-velocity Hessian block is singular "
                f"(rcond={ws.rcond:.3e}) during the momentum solve"
            )
        delta = linsolve.lu_solve(ws, -r)
        accepted = False
        scale = 1.0
        for _ in range(_NEWTON_MAX_HALVINGS + 1):
            trial = w + scale * delta
            try:
                r_trial = residual(trial)
            except Exception:
                r_trial = None
            if r_trial is not None and float(np.max(np.abs(r_trial))) < rnorm:
                w = trial
                r = r_trial
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"momentum solve stalled at residual {rnorm:.3e}"
            )
    raise ConvergenceError(
        "momentum solve did not converge in "
        f"{_NEWTON_MAX_ITER} iterations; last residual {float(np.max(np.abs(r))):.3e}"
    )


def routhian(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    point,
    xd,
    mu,
    group_offset=None,
) -> float:
    """L - sum_a (mu_a + f_a) (psi^a + Gamma^a_k xd^k) at the solved group
    velocities.  For the magnetic case ``point`` is the full configuration
    and ``xd`` is empty."""
    n = sys.n
    psi = solve_velocity(sys, sym, point, xd, mu, group_offset)
    q = _section_config(sym, point, group_offset)
    qd = np.zeros(n)
    if len(sym.shape_indices):
        qd[list(sym.shape_indices)] = np.asarray(xd, dtype=np.float64)
    qd[list(sym.group_indices)] = psi
    lval = float(value_of(sys.evaluate(q, qd)))
    alpha = np.asarray(mu, dtype=np.float64) + _f_values(sys, sym, q)
    x = q[list(sym.shape_indices)]
    acal = psi.copy()
    if len(sym.shape_indices):
        acal += _gamma_values(sys, sym, x) @ np.asarray(xd, dtype=np.float64)
    return lval - float(alpha @ acal)


def routhian_grad(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    point,
    xd,
    mu,
    group_offset=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Partials of the Routhian in the shape coordinates and velocities.

    Uses the envelope identity — at the solved momentum the sensitivity of
    the group velocities drops out — so nothing differentiates through the
    Newton solve:

        dR/dx^s  = dL/dx^s - df_a/dx^s A^a - (mu_a+f_a) d(Gamma^a_k xd^k)/dx^s
        dR/dxd^s = dL/dxd^s - (mu_a+f_a) Gamma^a_s

    with A^a = psi^a + Gamma^a_k xd^k.  For the magnetic case the first
    array holds all configuration partials and the second is empty.
    """
    n = sys.n
    m = sym.m
    psi = solve_velocity(sys, sym, point, xd, mu, group_offset)
    q = _section_config(sym, point, group_offset)
    shape_idx = list(sym.shape_indices)
    k = len(shape_idx)
    qd = np.zeros(n)
    if k:
        qd[shape_idx] = np.asarray(xd, dtype=np.float64)
    qd[list(sym.group_indices)] = psi
    alpha = np.asarray(mu, dtype=np.float64) + _f_values(sys, sym, q)
    if m == n:
        dl = model.lagrangian_input_grad(sys, q, qd, range(n))
        fjac = np.stack(
            [model.expr_grad_q(fa, sys.parameters, n, q, range(n)) for fa in sym.f]
        )
        return dl - fjac.T @ psi, np.zeros(0)
    x = q[shape_idx]
    xdv = np.asarray(xd, dtype=np.float64)
    gam = _gamma_values(sys, sym, x)
    gamj = _gamma_jacobian(sys, sym, x)
    acal = psi + gam @ xdv
    dl_x = model.lagrangian_input_grad(sys, q, qd, shape_idx)
    dl_xd = model.lagrangian_input_grad(sys, q, qd, [n + i for i in shape_idx])
    fpr = np.stack(
        [model.expr_grad_q(fa, sys.parameters, n, q, shape_idx) for fa in sym.f]
    )
    dx = dl_x - fpr.T @ acal - alpha @ np.einsum("aks,k->as", gamj, xdv)
    dxd = dl_xd - gam.T @ alpha
    return dx, dxd


def gyroscopic_form(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    point,
    mu,
    case: ReductionCase,
) -> np.ndarray:
    """Coordinate matrix of the gyroscopic 2-form at a reduced point.

    Magnetic case: the antisymmetrized Jacobian of f on the configuration.
    Cyclic/quasi-cyclic cases: the exterior derivative of
    (mu_a + f_a) Gamma^a_k dx^k pulled back to the section, which for f = 0
    collapses to mu_a (dGamma^a_s/dx^k - dGamma^a_k/dx^s).  The functional
    mode carries no gyroscopic coupling (its reduced system is an ordinary
    Lagrangian), so it gets a zero matrix.
    """
    n = sys.n
    mu = np.asarray(mu, dtype=np.float64)
    if case is ReductionCase.MAGNETIC:
        q = np.asarray(point, dtype=np.float64)
        fjac = np.stack(
            [model.expr_grad_q(fa, sys.parameters, n, q, range(n)) for fa in sym.f]
        )
        return fjac.T - fjac
    if case is ReductionCase.FUNCTIONAL:
        k = len(point)
        return np.zeros((k, k))
    q = _section_config(sym, point)
    x = q[list(sym.shape_indices)]
    alpha = mu + _f_values(sys, sym, q)
    gam = _gamma_values(sys, sym, x)
    gamj = _gamma_jacobian(sys, sym, x)
    fpr = np.stack(
        [
            model.expr_grad_q(fa, sys.parameters, n, q, sym.shape_indices)
            for fa in sym.f
        ]
    )
    half = fpr.T @ gam + np.einsum("a,ask->ks", alpha, gamj)
    return half - half.T


# --------------------------------------------------------------------------
# functional mode


@dataclass(frozen=True)
class FunctionalSpec:
    """Structured data for the shifted-momentum construction.

    ``phi_index`` singles out the distinguished coordinate; ``lam`` is an
    expression in that coordinate only; ``mass`` is the full symmetric
    matrix of kinetic coefficients and ``potential`` the potential part,
    both in the remaining coordinates only; ``sample_box`` as in
    :class:`~routhian.model.SymmetrySpec`.
    """

    n: int
    phi_index: int
    lam: exprlang.Expr
    mass: tuple[tuple[exprlang.Expr, ...], ...]
    potential: exprlang.Expr
    sample_box: np.ndarray

    @property
    def theta_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if i != self.phi_index)


def build_functional(
    sys: LagrangianSystem,
    phi_index: int,
    lam: str,
    mass: Sequence[Sequence[str]],
    potential: str,
    box=None,
) -> FunctionalSpec:
    """Parse and validate the functional-mode data against a system."""
    n = sys.n
    if not 0 <= phi_index < n:
        raise DimensionError(f"phi index {phi_index} out of range for n={n}")
    params = tuple(sys.parameters)
    phi_name = coord_names(n)[phi_index]
    theta_names = tuple(
        coord_names(n)[i] for i in range(n) if i != phi_index
    )
    lam_expr = exprlang.parse(lam, (phi_name,) + params)
    rows = [list(r) for r in mass]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise DimensionError(f"mass matrix must be {n}x{n} expressions")
    mass_exprs = tuple(
        tuple(exprlang.parse(s, theta_names + params) for s in row) for row in rows
    )
    pot_expr = exprlang.parse(potential, theta_names + params)
    if box is None:
        box_arr = np.array([[-1.0, 1.0]] * (2 * n))
    else:
        box_arr = np.asarray(box, dtype=np.float64)
        if box_arr.shape != (2 * n, 2):
            raise DimensionError(
                f"sample box must have shape ({2 * n}, 2), got {box_arr.shape}"
            )
    return FunctionalSpec(n, phi_index, lam_expr, mass_exprs, pot_expr, box_arr)


def _mass_at(sys: LagrangianSystem, fspec: FunctionalSpec, theta) -> np.ndarray:
    theta_names = tuple(coord_names(fspec.n)[i] for i in fspec.theta_indices)
    env: dict = dict(sys.parameters)
    env.update(zip(theta_names, (float(v) for v in theta)))
    n = fspec.n
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = float(value_of(exprlang.evaluate(fspec.mass[i][j], env)))
    return out


def _lam_at(sys: LagrangianSystem, fspec: FunctionalSpec, phi: float) -> float:
    phi_name = coord_names(fspec.n)[fspec.phi_index]
    env: dict = dict(sys.parameters)
    env[phi_name] = float(phi)
    return float(value_of(exprlang.evaluate(fspec.lam, env)))


def functional_momentum(
    sys: LagrangianSystem, fspec: FunctionalSpec, state: State
) -> float:
    """The shifted momentum M_k,phi qd^k + M_phi,phi phid - lambda(phi)."""
    mass = _mass_at(sys, fspec, [state.q[i] for i in fspec.theta_indices])
    p = fspec.phi_index
    total = 0.0
    for i in range(fspec.n):
        total += mass[i, p] * float(state.qd[i])
    return total - _lam_at(sys, fspec, float(state.q[p]))


def functional_routhian(
    sys: LagrangianSystem,
    fspec: FunctionalSpec,
    theta,
    theta_dot,
    phi_offset: float = 0.0,
) -> float:
    """L - lambda(phi) phid on the zero level of the shifted momentum.

    phid is eliminated through M_k,phi qd^k + M_phi,phi phid = lambda(phi);
    phi itself is frozen at the section (the offset exists so independence
    of the result from phi can be asserted as a property)."""
    p = fspec.phi_index
    mass = _mass_at(sys, fspec, theta)
    mpp = mass[p, p]
    if mpp == 0.0:
        raise RegularityError("mass coefficient of the distinguished coordinate is zero")
    lam = _lam_at(sys, fspec, phi_offset)
    theta_dot = np.asarray(theta_dot, dtype=np.float64)
    coupling = 0.0
    for pos, i in enumerate(fspec.theta_indices):
        coupling += mass[i, p] * theta_dot[pos]
    phid = (lam - coupling) / mpp
    q = np.zeros(fspec.n)
    qd = np.zeros(fspec.n)
    q[p] = phi_offset
    qd[p] = phid
    for pos, i in enumerate(fspec.theta_indices):
        q[i] = float(theta[pos])
        qd[i] = theta_dot[pos]
    return float(value_of(sys.evaluate(q, qd))) - lam * phid


def functional_lagrangian(
    sys: LagrangianSystem, fspec: FunctionalSpec, phi_offset: float = 0.0
) -> LagrangianSystem:
    """The reduced Lagrangian as a system in its own right.

    Substitutes the eliminated velocity (an expression of the remaining
    state) and the frozen coordinate into L - lambda phid, then renames the
    surviving coordinates to the canonical q1..qk so the result can be
    compiled and integrated like any other system."""
    n = fspec.n
    p = fspec.phi_index
    phi_name = coord_names(n)[p]
    phid_name = velocity_names(n)[p]
    num = exprlang.Num(float(phi_offset), 0)
    lam0 = exprlang.substitute(fspec.lam, {phi_name: num})
    # phid = (lambda - sum_k M_k,phi qd^k) / M_phi,phi
    coupling: Optional[exprlang.Expr] = None
    for i in fspec.theta_indices:
        term = exprlang.Binary(
            "*", fspec.mass[i][p], exprlang.Var(velocity_names(n)[i], 0), 0
        )
        coupling = term if coupling is None else exprlang.Binary("+", coupling, term, 0)
    numerator = lam0 if coupling is None else exprlang.Binary("-", lam0, coupling, 0)
    phid_expr = exprlang.Binary("/", numerator, fspec.mass[p][p], 0)
    reduced = exprlang.substitute(
        sys.lagrangian, {phi_name: num, phid_name: phid_expr}
    )
    reduced = exprlang.Binary(
        "-", reduced, exprlang.Binary("*", lam0, phid_expr, 0), 0
    )
    renames: dict = {}
    for pos, i in enumerate(fspec.theta_indices):
        renames[coord_names(n)[i]] = exprlang.Var(f"q{pos + 1}", 0)
        renames[velocity_names(n)[i]] = exprlang.Var(f"qd{pos + 1}", 0)
    return LagrangianSystem(
        n - 1, exprlang.substitute(reduced, renames), dict(sys.parameters)
    )


def check_functional(
    sys: LagrangianSystem,
    fspec: FunctionalSpec,
    samples: int = model.DEFAULT_SAMPLES,
    tolerance: float = model.DEFAULT_TOLERANCE,
) -> list:
    """Checks for the functional mode.

    ``functional_consistency``: L really is of the structured form
    (1/2) qd M(theta) qd - V(theta) + (1/2) lambda(phi)^2 / M_phi,phi.
    ``functional_regularity``: M_phi,phi bounded away from zero.
    ``functional_independence``: the reduced Lagrangian does not depend on
    where phi was frozen (tolerance 1e-9 by contract).
    """
    n = fspec.n
    p = fspec.phi_index
    pts = model.sample_states(fspec.sample_box, samples)
    residual = -1.0
    worst = None
    reg_residual = -1.0
    reg_worst = None
    for row in pts:
        q, qd = row[:n], row[n:]
        theta = [q[i] for i in fspec.theta_indices]
        try:
            mass = _mass_at(sys, fspec, theta)
            lam = _lam_at(sys, fspec, float(q[p]))
            theta_names = tuple(coord_names(n)[i] for i in fspec.theta_indices)
            env: dict = dict(sys.parameters)
            env.update(zip(theta_names, (float(v) for v in theta)))
            vval = float(value_of(exprlang.evaluate(fspec.potential, env)))
            mpp = mass[p, p]
            rr = max(0.0, model.DET_FLOOR - abs(mpp))
            structured = (
                0.5 * float(qd @ mass @ qd)
                - vval
                + (0.5 * lam * lam / mpp if mpp != 0.0 else np.inf)
            )
            r = abs(float(value_of(sys.evaluate(q, qd))) - structured)
        except EvaluationError:
            rr = np.inf
            r = np.inf
        if rr > reg_residual:
            reg_residual = rr
            reg_worst = model._worst_point(row, n)
        if r > residual:
            residual = r
            worst = model._worst_point(row, n)
    # independence of the frozen coordinate (a degenerate mass coefficient
    # surfaces as an infinite residual here rather than an exception, so a
    # misdeclared scenario still produces a readable report)
    ind_residual = -1.0
    ind_worst = None
    for row in pts[:64]:
        q, qd = row[:n], row[n:]
        theta = [q[i] for i in fspec.theta_indices]
        theta_dot = [qd[i] for i in fspec.theta_indices]
        try:
            base = functional_routhian(sys, fspec, theta, theta_dot, 0.0)
            offs = [
                functional_routhian(sys, fspec, theta, theta_dot, off)
                for off in (-0.7, 0.3, 1.1)
            ]
            r = max(abs(v - base) for v in offs)
        except (RegularityError, EvaluationError):
            r = np.inf
        if r > ind_residual:
            ind_residual = r
            ind_worst = model._worst_point(row, n)
    return [
        CheckResult(
            "functional_consistency", residual <= tolerance, residual, tolerance, worst
        ),
        CheckResult(
            "functional_regularity", reg_residual <= 0.0, reg_residual, 0.0, reg_worst
        ),
        CheckResult(
            "functional_independence", ind_residual <= 1e-9, ind_residual, 1e-9, ind_worst
        ),
    ]


# --------------------------------------------------------------------------
# reduced system container


@dataclass(frozen=True)
class ReducedSystem:
    """A classified reduction with evaluators bound to (sys, sym, mu)."""

    case: ReductionCase
    shape_dim: int
    mu: np.ndarray
    sys: LagrangianSystem
    sym: Optional[SymmetrySpec]
    fspec: Optional[FunctionalSpec]
    sigma: Optional[CocycleMatrix]

    def solve_velocity(self, point, xd, group_offset=None) -> np.ndarray:
        return solve_velocity(self.sys, self.sym, point, xd, self.mu, group_offset)

    def routhian(self, point, xd, group_offset=None) -> float:
        if self.case is ReductionCase.FUNCTIONAL:
            off = 0.0 if group_offset is None else float(group_offset)
            return functional_routhian(self.sys, self.fspec, point, xd, off)
        return routhian(self.sys, self.sym, point, xd, self.mu, group_offset)

    def routhian_grad(self, point, xd, group_offset=None):
        return routhian_grad(self.sys, self.sym, point, xd, self.mu, group_offset)

    def gyro(self, point) -> np.ndarray:
        if self.case is ReductionCase.FUNCTIONAL:
            return np.zeros((self.shape_dim, self.shape_dim))
        return gyroscopic_form(self.sys, self.sym, point, self.mu, self.case)


def reduce_system(
    sys: LagrangianSystem,
    sym: Optional[SymmetrySpec],
    mu,
    fspec: Optional[FunctionalSpec] = None,
    samples: int = model.DEFAULT_SAMPLES,
) -> ReducedSystem:
    """Classify and package a reduction.

    With functional data the mode is fixed and the momentum must be zero
    (the construction lives on the zero level set only); otherwise the case
    comes from the cocycle matrix.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    if fspec is not None:
        if np.any(mu != 0.0):
            raise ScenarioError(
                "the functional mode is defined on the zero momentum level only"
            )
        return ReducedSystem(
            ReductionCase.FUNCTIONAL, fspec.n - 1, mu, sys, sym, fspec, None
        )
    if sym is None:
        raise ScenarioError("reduction requires symmetry data (or functional data)")
    if mu.shape != (sym.m,):
        raise DimensionError(
            f"expected {sym.m} momentum components, got {mu.shape[0]}"
        )
    coc = model.cocycle(sys, sym, samples)
    case = classify_case(sys, sym, coc)
    if case is ReductionCase.MAGNETIC:
        shape_dim = sym.n
    else:
        shape_dim = sym.n - sym.m
    return ReducedSystem(case, shape_dim, mu, sys, sym, fspec, coc)
