"""Trajectories: integration, monitors, projection and reconstruction.

The time-stepping loops live in the compiled backends (``routhian.backends``)
and work on tape packs; this module compiles systems into packs, dispatches
by reduction case, and wraps results in :class:`Trajectory`.  It also keeps
slow per-point evaluators on the object autodiff path (``full_el_rhs`` and
friends) which the tests play off against the compiled route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import backends, model, reduction
from .autodiff import hessian_block
from .errors import ConvergenceError, IntegrationError, RegularityError
from .linsolve import LinearSolveWorkspace, lu_factor, lu_solve, solve
from .model import LagrangianSystem, State, SymmetrySpec, coord_names
from .reduction import FunctionalSpec, ReducedSystem, ReductionCase
from .tape import TapePack, compile_tape

__all__ = [
    "Trajectory",
    "integrate",
    "run_full",
    "run_reduced",
    "reconstruct",
    "project",
    "full_el_rhs",
    "reduced_el_rhs",
    "magnetic_flow_rhs",
    "el_residual",
    "drift",
    "LinearSolveWorkspace",
    "solve",
]


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step samples plus conserved-quantity monitors.

    ``samples`` rows are (q, qd) for second-order flows and just q for the
    first-order magnetic flow.  ``momenta`` has one column per monitored
    momentum (possibly none), ``energy`` one value per sample.
    """

    t0: float
    dt: float
    samples: np.ndarray
    momenta: np.ndarray
    energy: np.ndarray

    @property
    def steps(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.shape[0])


def drift(series: np.ndarray) -> float:
    """Largest absolute deviation from the initial value (NaN-safe: NaN
    rows propagate to the result, which is what a failed monitor should
    do)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        return 0.0
    if series.ndim == 1:
        series = series[:, None]
    dev = np.abs(series - series[0])
    return float(np.max(dev))


# --------------------------------------------------------------------------
# tape packs


@dataclass(frozen=True)
class _Pack:
    arrays: tuple
    max_reg: int
    tL: int
    f_idx: np.ndarray
    gam_idx: np.ndarray
    group_idx: np.ndarray
    shape_idx: np.ndarray


def _compile(sys: LagrangianSystem, sym: Optional[SymmetrySpec]) -> _Pack:
    names = sys.input_names
    tapes = [compile_tape(sys.lagrangian, names, sys.parameters)]
    if sym is None:
        empty = np.zeros(0, dtype=np.int64)
        pack = TapePack(tapes)
        return _Pack(pack.arrays, pack.max_reg, 0, empty, empty, empty,
                     np.arange(sys.n, dtype=np.int64))
    m = sym.m
    k = len(sym.shape_indices)
    for fa in sym.f:
        tapes.append(compile_tape(fa, names, sys.parameters))
    for a in range(m):
        for kk in range(k):
            tapes.append(compile_tape(sym.gamma[a][kk], names, sys.parameters))
    pack = TapePack(tapes)
    f_idx = np.arange(1, 1 + m, dtype=np.int64)
    gam_idx = np.arange(1 + m, 1 + m + m * k, dtype=np.int64)
    return _Pack(
        pack.arrays,
        pack.max_reg,
        0,
        f_idx,
        gam_idx,
        np.array(sym.group_indices, dtype=np.int64),
        np.array(sym.shape_indices, dtype=np.int64),
    )


def _monitor_pack_functional(sys: LagrangianSystem, fspec: FunctionalSpec) -> _Pack:
    """Pack whose single f tape is lambda(phi): the shifted momentum then has
    exactly the J = dL/dqd - f shape the ordinary monitor kernel computes."""
    names = sys.input_names
    tapes = [
        compile_tape(sys.lagrangian, names, sys.parameters),
        compile_tape(fspec.lam, names, sys.parameters),
    ]
    pack = TapePack(tapes)
    return _Pack(
        pack.arrays,
        pack.max_reg,
        0,
        np.array([1], dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.array([fspec.phi_index], dtype=np.int64),
        np.array(fspec.theta_indices, dtype=np.int64),
    )


def _check_fail(fail: int, t0: float, dt: float) -> None:
    if fail >= 0:
        raise IntegrationError(
            f"integration failed at step {fail} (t = {t0 + fail * dt!r}): "
            "non-finite state or invalid evaluation"
        )


# --------------------------------------------------------------------------
# runners


def run_full(
    sys: LagrangianSystem,
    initial: State,
    dt: float,
    steps: int,
    sym: Optional[SymmetrySpec] = None,
    fspec: Optional[FunctionalSpec] = None,
) -> Trajectory:
    """Integrate the unreduced Euler-Lagrange equations with RK4.

    Momentum monitors come from the symmetry data when given, from the
    shifted-momentum construction when functional data is given, and are
    absent otherwise.
    """
    b = backends.active()
    n = sys.n
    pk = _compile(sys, sym)
    y0 = np.concatenate(
        [np.asarray(initial.q, dtype=np.float64), np.asarray(initial.qd, dtype=np.float64)]
    )
    out, fail = b.rk4_full(*pk.arrays, pk.tL, n, y0, dt, steps, pk.max_reg)
    _check_fail(int(fail), initial.t, dt)
    qs, qds = out[:, :n], out[:, n:]
    if sym is not None:
        mpk = pk
    elif fspec is not None:
        mpk = _monitor_pack_functional(sys, fspec)
    else:
        mpk = pk
    jout, eout, _ = b.full_monitors(
        *mpk.arrays, mpk.tL, mpk.f_idx, mpk.group_idx, n, qs, qds, mpk.max_reg
    )
    return Trajectory(initial.t, dt, out, jout, eout)


def run_reduced(
    red: ReducedSystem,
    x0,
    xd0,
    dt: float,
    steps: int,
    t0: float = 0.0,
    group_offset=None,
) -> Trajectory:
    """Integrate the reduced dynamics for any case.

    Second-order shape equations for the cyclic cases, the first-order
    magnetic flow (state = configuration, ``xd0`` must be empty), or the
    ordinary Lagrangian flow of the zero-level functional system.
    """
    b = backends.active()
    if red.case is ReductionCase.FUNCTIONAL:
        fsys = reduction.functional_lagrangian(red.sys, red.fspec)
        return run_full(fsys, State(t0, np.asarray(x0), np.asarray(xd0)), dt, steps)
    sym = red.sym
    n = red.sys.n
    pk = _compile(red.sys, sym)
    if red.case is ReductionCase.MAGNETIC:
        if len(np.atleast_1d(xd0)) != 0:
            raise IntegrationError(
                "the magnetic flow is first order; no velocity initial data"
            )
        q0 = np.asarray(x0, dtype=np.float64)
        out, fail = b.rk4_magnetic(
            *pk.arrays, pk.tL, pk.f_idx, n, red.mu, q0, dt, steps, pk.max_reg
        )
        _check_fail(int(fail), t0, dt)
        jout, eout, _ = b.magnetic_monitors(
            *pk.arrays, pk.tL, pk.f_idx, n, red.mu, out, pk.max_reg
        )
        return Trajectory(t0, dt, out, jout, eout)
    k = red.shape_dim
    section = np.zeros(n)
    if group_offset is not None:
        section[list(sym.group_indices)] = group_offset
    y0 = np.concatenate(
        [np.asarray(x0, dtype=np.float64), np.asarray(xd0, dtype=np.float64)]
    )
    out, fail = b.rk4_reduced(
        *pk.arrays, pk.tL, pk.f_idx, pk.gam_idx, pk.group_idx, pk.shape_idx,
        n, section, red.mu, y0, dt, steps, pk.max_reg,
    )
    _check_fail(int(fail), t0, dt)
    jout, eout, _ = b.reduced_monitors(
        *pk.arrays, pk.tL, pk.f_idx, pk.gam_idx, pk.group_idx, pk.shape_idx,
        n, section, red.mu, out[:, :k], out[:, k:], pk.max_reg,
    )
    return Trajectory(t0, dt, out, jout, eout)


def _psi_rows(b, pk: _Pack, n: int, section: np.ndarray, mu, xs, xds) -> np.ndarray:
    """Momentum-matching group velocities along reduced samples."""
    m = pk.group_idx.shape[0]
    out = np.empty((xs.shape[0], m))
    shape_list = list(pk.shape_idx)
    for i in range(xs.shape[0]):
        q = section.copy()
        qd = np.zeros(n)
        q[shape_list] = xs[i]
        qd[shape_list] = xds[i]
        w, ok = b.solve_psi(
            *pk.arrays, pk.tL, pk.f_idx, pk.group_idx, n, q, qd, mu, pk.max_reg
        )
        if not ok:
            raise ConvergenceError(
                f"momentum solve failed along the trajectory at sample {i}"
            )
        out[i] = w
    return out


def reconstruct(
    red: ReducedSystem,
    x0,
    xd0,
    group0,
    dt: float,
    steps: int,
    t0: float = 0.0,
) -> Trajectory:
    """Lift the reduced dynamics back to a full-space trajectory.

    The reduced equations are re-integrated together with the group (or
    eliminated) coordinates, whose velocities are algebraic functions of
    the reduced state: the momentum-matching velocities in the cyclic
    cases, the flow field itself in the magnetic case, and the
    zero-momentum velocity in the functional mode.  Returns a full-system
    trajectory with the ordinary monitors.
    """
    b = backends.active()
    n = red.sys.n
    if red.case is ReductionCase.MAGNETIC:
        traj = run_reduced(red, x0, np.zeros(0), dt, steps, t0)
        pk = _compile(red.sys, red.sym)
        qs = traj.samples
        qds = np.empty_like(qs)
        for i in range(qs.shape[0]):
            v, ok = b.magnetic_rhs(
                *pk.arrays, pk.tL, pk.f_idx, n, red.mu, qs[i], pk.max_reg
            )
            if not ok:
                raise ConvergenceError(
                    f"flow-velocity solve failed along the trajectory at sample {i}"
                )
            qds[i] = v
        samples = np.hstack([qs, qds])
        jout, eout, _ = b.full_monitors(
            *pk.arrays, pk.tL, pk.f_idx, pk.group_idx, n, qs, qds, pk.max_reg
        )
        return Trajectory(t0, dt, samples, jout, eout)
    if red.case is ReductionCase.FUNCTIONAL:
        return _reconstruct_functional(red, x0, xd0, group0, dt, steps, t0)
    sym = red.sym
    m = sym.m
    k = red.shape_dim
    pk = _compile(red.sys, sym)
    section = np.zeros(n)
    y0 = np.concatenate(
        [
            np.asarray(x0, dtype=np.float64),
            np.asarray(xd0, dtype=np.float64),
            np.asarray(group0, dtype=np.float64),
        ]
    )
    out, fail = b.rk4_recon(
        *pk.arrays, pk.tL, pk.f_idx, pk.gam_idx, pk.group_idx, pk.shape_idx,
        n, section, red.mu, y0, dt, steps, pk.max_reg,
    )
    _check_fail(int(fail), t0, dt)
    xs, xds, gs = out[:, :k], out[:, k:2 * k], out[:, 2 * k:]
    psis = _psi_rows(b, pk, n, section, red.mu, xs, xds)
    ns = out.shape[0]
    qs = np.empty((ns, n))
    qds = np.empty((ns, n))
    qs[:, list(sym.shape_indices)] = xs
    qs[:, list(sym.group_indices)] = gs
    qds[:, list(sym.shape_indices)] = xds
    qds[:, list(sym.group_indices)] = psis
    jout, eout, _ = b.full_monitors(
        *pk.arrays, pk.tL, pk.f_idx, pk.group_idx, n, qs, qds, pk.max_reg
    )
    return Trajectory(t0, dt, np.hstack([qs, qds]), jout, eout)


def _reconstruct_functional(
    red: ReducedSystem, x0, xd0, phi0, dt: float, steps: int, t0: float
) -> Trajectory:
    """Functional-mode lift: re-integrate (theta, thetad, phi) with the
    eliminated velocity recovered from the zero momentum level."""
    sys = red.sys
    fspec = red.fspec
    fsys = reduction.functional_lagrangian(sys, fspec)
    k = fspec.n - 1
    p = fspec.phi_index

    def phidot(theta, theta_dot, phi) -> float:
        mass = reduction._mass_at(sys, fspec, theta)
        if mass[p, p] == 0.0:
            raise RegularityError(
                "mass coefficient of the distinguished coordinate is zero"
            )
        lam = reduction._lam_at(sys, fspec, phi)
        coupling = sum(
            mass[i, p] * theta_dot[pos] for pos, i in enumerate(fspec.theta_indices)
        )
        return (lam - coupling) / mass[p, p]

    def rhs(t, y):
        theta, theta_dot, phi = y[:k], y[k:2 * k], y[2 * k]
        acc = full_el_rhs(fsys, State(t, theta, theta_dot))
        return np.concatenate([theta_dot, acc, [phidot(theta, theta_dot, phi)]])

    y0 = np.concatenate(
        [np.asarray(x0, float), np.asarray(xd0, float), np.atleast_1d(phi0)]
    )
    out = integrate(rhs, y0, dt, steps, t0)
    ns = out.shape[0]
    n = fspec.n
    qs = np.empty((ns, n))
    qds = np.empty((ns, n))
    qs[:, list(fspec.theta_indices)] = out[:, :k]
    qs[:, p] = out[:, 2 * k]
    qds[:, list(fspec.theta_indices)] = out[:, k:2 * k]
    for i in range(ns):
        qds[i, p] = phidot(out[i, :k], out[i, k:2 * k], out[i, 2 * k])
    b = backends.active()
    mpk = _monitor_pack_functional(sys, fspec)
    jout, eout, _ = b.full_monitors(
        *mpk.arrays, mpk.tL, mpk.f_idx, mpk.group_idx, n, qs, qds, mpk.max_reg
    )
    return Trajectory(t0, dt, np.hstack([qs, qds]), jout, eout)


def project(traj: Trajectory, sym: SymmetrySpec) -> np.ndarray:
    """Shape part (x, xd) of a full trajectory's samples."""
    n = sym.n
    idx = list(sym.shape_indices)
    qs = traj.samples[:, :n]
    qds = traj.samples[:, n:]
    return np.hstack([qs[:, idx], qds[:, idx]])


# --------------------------------------------------------------------------
# generic integrator and per-point object-path evaluators


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    dt: float,
    steps: int,
    t0: float = 0.0,
) -> np.ndarray:
    """Classical fixed-step RK4 for an arbitrary first-order field."""
    y = np.asarray(y0, dtype=np.float64).copy()
    out = np.empty((steps + 1, y.size))
    out[0] = y
    for s in range(steps):
        t = t0 + s * dt
        k1 = np.asarray(rhs(t, y))
        k2 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k1))
        k3 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k2))
        k4 = np.asarray(rhs(t + dt, y + dt * k3))
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(
                f"integration failed at step {s} (t = {t!r}): non-finite state"
            )
        out[s + 1] = y
    return out


def full_el_rhs(sys: LagrangianSystem, state: State) -> np.ndarray:
    """Accelerations of the unreduced equations at one state (object path)."""
    n = sys.n
    fn = reduction._lagrangian_fn(sys)
    q = np.asarray(state.q, dtype=np.float64)
    qd = np.asarray(state.qd, dtype=np.float64)
    pt = np.concatenate([q, qd])
    vel = list(range(n, 2 * n))
    pos = list(range(n))
    mvv = hessian_block(fn, pt, vel, vel)
    mvq = hessian_block(fn, pt, vel, pos)
    gq = model.lagrangian_input_grad(sys, q, qd, pos)
    return solve(mvv, gq - mvq @ qd)


def reduced_el_rhs(
    red: ReducedSystem, x, xd, group_offset=None
) -> np.ndarray:
    """Shape accelerations of the reduced equations at one reduced state.

    Mirrors the compiled kernel on the object path: Routhian second
    derivatives via implicit differentiation of the momentum solve,
    gyroscopic force added explicitly.
    """
    sys, sym = red.sys, red.sym
    n = sys.n
    if red.case is ReductionCase.FUNCTIONAL:
        fsys = reduction.functional_lagrangian(sys, red.fspec)
        return full_el_rhs(fsys, State(0.0, np.asarray(x), np.asarray(xd)))
    if red.case is ReductionCase.MAGNETIC:
        raise IntegrationError("the magnetic flow is first order; use magnetic_flow_rhs")
    psi = reduction.solve_velocity(sys, sym, x, xd, red.mu, group_offset)
    q = reduction._section_config(sym, x, group_offset)
    shape_idx = list(sym.shape_indices)
    group_idx = list(sym.group_indices)
    xdv = np.asarray(xd, dtype=np.float64)
    qd = np.zeros(n)
    qd[shape_idx] = xdv
    qd[group_idx] = psi
    pt = np.concatenate([q, qd])
    fn = reduction._lagrangian_fn(sys)
    g_v = [n + i for i in group_idx]
    s_v = [n + i for i in shape_idx]
    s_x = shape_idx
    amat = hessian_block(fn, pt, g_v, g_v)
    bmat = hessian_block(fn, pt, g_v, s_v)
    cmat = hessian_block(fn, pt, s_v, s_v)
    dmat = hessian_block(fn, pt, g_v, s_x)
    emat = hessian_block(fn, pt, s_v, s_x)
    xs = q[shape_idx]
    gam = reduction._gamma_values(sys, sym, xs)
    gamj = reduction._gamma_jacobian(sys, sym, xs)
    alpha = red.mu + reduction._f_values(sys, sym, q)
    fpr = np.stack(
        [model.expr_grad_q(fa, sys.parameters, n, q, shape_idx) for fa in sym.f]
    )
    gq_shape = model.lagrangian_input_grad(sys, q, qd, s_x)
    ws = lu_factor(amat)
    if ws.singular:
        raise RegularityError(
            f"group-velocity Hessian block is singular (rcond={ws.rcond:.3e})"
        )
    ainv_b = np.column_stack([lu_solve(ws, bmat[:, j]) for j in range(bmat.shape[1])])
    fd = fpr - dmat
    ainv_fd = np.column_stack([lu_solve(ws, fd[:, j]) for j in range(fd.shape[1])])
    m_red = cmat - bmat.T @ ainv_b
    acal = psi + gam @ xdv
    drdx = gq_shape - fpr.T @ acal - alpha @ np.einsum("aks,k->as", gamj, xdv)
    dgdx = emat + bmat.T @ ainv_fd - np.einsum("as,ak->ks", fpr, gam) \
        - np.einsum("a,aks->ks", alpha, gamj)
    half = fpr.T @ gam + np.einsum("a,ask->ks", alpha, gamj)
    gyro = half - half.T
    return solve(m_red, drdx - dgdx @ xdv + gyro @ xdv)


def magnetic_flow_rhs(red: ReducedSystem, q) -> np.ndarray:
    """First-order velocity field of the magnetic case at one configuration:
    the gyroscopic matrix (transposed) against the Routhian gradient."""
    bmat = red.gyro(q)
    grad, _ = red.routhian_grad(q, np.zeros(0))
    ws = lu_factor(bmat.T)
    if ws.singular:
        raise RegularityError(
            f"gyroscopic matrix is singular (rcond={ws.rcond:.3e})"
        )
    return lu_solve(ws, grad)


def el_residual(sys: LagrangianSystem, traj: Trajectory) -> float:
    """Largest interior violation of the Euler-Lagrange equations along a
    full trajectory, with d/dt of the velocity gradient taken by a
    five-point central stencil (the two samples at each end are skipped)."""
    n = sys.n
    qs = traj.samples[:, :n]
    qds = traj.samples[:, n:]
    ns = qs.shape[0]
    if ns < 5:
        raise IntegrationError("need at least five samples for the stencil")
    p = np.empty((ns, n))
    gq = np.empty((ns, n))
    vel = list(range(n, 2 * n))
    pos = list(range(n))
    for i in range(ns):
        p[i] = model.lagrangian_input_grad(sys, qs[i], qds[i], vel)
        gq[i] = model.lagrangian_input_grad(sys, qs[i], qds[i], pos)
    pdot = (-p[4:] + 8.0 * p[3:-1] - 8.0 * p[1:-3] + p[:-4]) / (12.0 * traj.dt)
    return float(np.max(np.abs(pdot - gq[2:-2])))
