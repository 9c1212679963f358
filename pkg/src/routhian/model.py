"""Lagrangian systems with translational symmetry, and their checks.

A system couples a configuration dimension with a Lagrangian expression
over ``q1..qn, qd1..qdn`` plus named parameters.  A symmetry declaration
singles out translation directions and carries the momentum-shift
functions ``f`` (one per direction), the connection coefficients ``gamma``
(shape coordinates only), and optionally the finite-shift defects ``F``.

Everything here is per-point and runs on the object autodiff path, so the
checks stay independent of the compiled backends.  Residual checks sample
a deterministic Halton set inside the declared box: reports are exactly
reproducible run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import exprlang
from .autodiff import Dual, HyperDual, value_of
from .errors import DimensionError, EvaluationError, ScenarioError

DEFAULT_SAMPLES = 256
DEFAULT_TOLERANCE = 1e-8

#: scaled-determinant floor under which the group-velocity Hessian block is
#: treated as singular
DET_FLOOR = 1e-10

#: sampled sup-norm under which an expression counts as identically zero
ZERO_SAMPLE_TOL = 1e-12


def coord_names(n: int) -> tuple[str, ...]:
    return tuple(f"q{i + 1}" for i in range(n))


def velocity_names(n: int) -> tuple[str, ...]:
    return tuple(f"qd{i + 1}" for i in range(n))


# --------------------------------------------------------------------------
# deterministic sampling


def _first_primes(count: int) -> list[int]:
    primes: list[int] = []
    cand = 2
    while len(primes) < count:
        if all(cand % p for p in primes):
            primes.append(cand)
        cand += 1
    return primes


def _radical_inverse(base: int, index: int) -> float:
    inv = 0.0
    denom = 1.0
    while index:
        denom *= base
        index, digit = divmod(index, base)
        inv += digit / denom
    return inv


def halton_points(dim: int, count: int) -> np.ndarray:
    """The first ``count`` Halton points in [0,1)^dim (index starts at 1)."""
    primes = _first_primes(dim)
    pts = np.empty((count, dim))
    for i in range(count):
        for j in range(dim):
            pts[i, j] = _radical_inverse(primes[j], i + 1)
    return pts


def sample_states(box: np.ndarray, count: int) -> np.ndarray:
    """Rows of (q, qd) samples filling the per-slot interval box."""
    lo = box[:, 0]
    hi = box[:, 1]
    return lo + halton_points(box.shape[0], count) * (hi - lo)


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class State:
    """One sample of a motion: time, configuration, velocity."""

    t: float
    q: np.ndarray
    qd: np.ndarray


@dataclass(frozen=True)
class LagrangianSystem:
    """Dimension, Lagrangian expression and parameter values.

    Parameters are substituted at evaluation time, so :meth:`evaluate`
    works for any scalar family the expression functions accept — plain
    floats as well as first- and second-order forward duals.
    """

    n: int
    lagrangian: exprlang.Expr
    parameters: Mapping[str, float]

    @staticmethod
    def from_source(
        n: int, source: str, parameters: Optional[Mapping[str, float]] = None
    ) -> "LagrangianSystem":
        params = {k: float(v) for k, v in dict(parameters or {}).items()}
        declared = coord_names(n) + velocity_names(n) + tuple(params)
        return LagrangianSystem(n, exprlang.parse(source, declared), params)

    @property
    def coordinate_names(self) -> tuple[str, ...]:
        return coord_names(self.n)

    @property
    def input_names(self) -> tuple[str, ...]:
        return coord_names(self.n) + velocity_names(self.n)

    def env(self, q: Sequence, qd: Sequence) -> dict:
        names = self.input_names
        e: dict = dict(self.parameters)
        for i in range(self.n):
            e[names[i]] = q[i]
            e[names[self.n + i]] = qd[i]
        return e

    def evaluate(self, q: Sequence, qd: Sequence):
        return exprlang.evaluate(self.lagrangian, self.env(q, qd))


@dataclass(frozen=True)
class SymmetrySpec:
    """Translation directions plus quasi-invariance data.

    ``f`` holds one configuration-only expression per group direction;
    ``gamma`` one expression per (direction, shape coordinate) in the shape
    coordinates only — group-coordinate dependence is therefore impossible
    by construction, which is how the independence requirement is enforced.
    ``F`` (optional) gives the finite-shift defect per direction with the
    shift magnitude as the formal parameter ``s``.  ``sample_box`` is a
    (2n, 2) array of lo/hi bounds, q slots first, then qd slots.
    """

    n: int
    group_indices: tuple[int, ...]
    f: tuple[exprlang.Expr, ...]
    gamma: tuple[tuple[exprlang.Expr, ...], ...]
    sample_box: np.ndarray
    F: Optional[tuple[exprlang.Expr, ...]] = None

    @property
    def m(self) -> int:
        return len(self.group_indices)

    @property
    def shape_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if i not in self.group_indices)


def build_symmetry(
    sys: LagrangianSystem,
    group_indices: Sequence[int],
    f: Optional[Sequence[str]] = None,
    gamma: Optional[Sequence[Sequence[str]]] = None,
    F: Optional[Sequence[str]] = None,
    box: Optional[np.ndarray] = None,
) -> SymmetrySpec:
    """Parse and validate symmetry data against a system.

    Expression arguments are source strings; omitted ``f`` means the
    strictly invariant case (f = 0), omitted ``gamma`` a trivial
    connection, omitted ``box`` the cube [-1, 1] on every slot.
    """
    n = sys.n
    idx = tuple(int(i) for i in group_indices)
    if not idx:
        raise DimensionError("at least one group direction is required")
    if len(set(idx)) != len(idx):
        raise DimensionError(f"group indices must be distinct, got {list(idx)}")
    if any(i < 0 or i >= n for i in idx):
        raise DimensionError(f"group indices out of range for n={n}: {list(idx)}")
    m = len(idx)
    shape_names = tuple(coord_names(n)[i] for i in range(n) if i not in idx)
    k = len(shape_names)
    params = tuple(sys.parameters)

    f_src = list(f) if f is not None else ["0"] * m
    if len(f_src) != m:
        raise DimensionError(f"expected {m} f expressions, got {len(f_src)}")
    f_exprs = tuple(exprlang.parse(s, coord_names(n) + params) for s in f_src)

    if gamma is None:
        gamma_src = [["0"] * k for _ in range(m)]
    else:
        gamma_src = [list(row) for row in gamma]
    if len(gamma_src) != m or any(len(row) != k for row in gamma_src):
        raise DimensionError(f"gamma must be {m} rows of {k} expressions")
    gamma_exprs = tuple(
        tuple(exprlang.parse(s, shape_names + params) for s in row)
        for row in gamma_src
    )

    F_exprs = None
    if F is not None:
        if len(F) != m:
            raise DimensionError(f"expected {m} F expressions, got {len(F)}")
        F_exprs = tuple(
            exprlang.parse(s, ("s",) + coord_names(n) + params) for s in F
        )

    if box is None:
        box_arr = np.array([[-1.0, 1.0]] * (2 * n))
    else:
        box_arr = np.asarray(box, dtype=np.float64)
    if box_arr.shape != (2 * n, 2):
        raise DimensionError(
            f"sample box must have shape ({2 * n}, 2), got {box_arr.shape}"
        )
    if np.any(box_arr[:, 0] > box_arr[:, 1]):
        raise DimensionError("sample box has an empty interval (lo > hi)")

    return SymmetrySpec(n, idx, f_exprs, gamma_exprs, box_arr, F_exprs)


@dataclass(frozen=True)
class MomentumValue:
    mu: np.ndarray


@dataclass(frozen=True)
class CocycleMatrix:
    """Antisymmetrized momentum-shift Jacobian, averaged over samples, plus
    the worst entrywise deviation from that average across the sample set."""

    sigma: np.ndarray
    constancy_residual: float


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    worst: Optional[dict] = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "worst": self.worst,
        }


@dataclass
class VerificationReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [e.as_dict() for e in self.entries],
        }


# --------------------------------------------------------------------------
# object-path derivative helpers


def _dual_env(params: Mapping[str, float], names: Sequence[str],
              values: Sequence[float], seed_slot: int) -> dict:
    env: dict = dict(params)
    for i, nm in enumerate(names):
        env[nm] = Dual(float(values[i]), 1.0 if i == seed_slot else 0.0)
    return env


def _deriv(expr: exprlang.Expr, env: dict) -> float:
    val = exprlang.evaluate(expr, env)
    return val.deriv if isinstance(val, Dual) else 0.0


def lagrangian_input_grad(sys: LagrangianSystem, q, qd, slots) -> np.ndarray:
    """Partials of L with respect to the given input slots (0..2n-1)."""
    names = sys.input_names
    base = [float(v) for v in q] + [float(v) for v in qd]
    return np.array(
        [_deriv(sys.lagrangian, _dual_env(sys.parameters, names, base, s))
         for s in slots]
    )


def expr_grad_q(expr: exprlang.Expr, params: Mapping[str, float], n: int,
                q, slots) -> np.ndarray:
    """Partials of a configuration-only expression w.r.t. coordinate slots."""
    names = coord_names(n)
    base = [float(v) for v in q]
    return np.array(
        [_deriv(expr, _dual_env(params, names, base, s)) for s in slots]
    )


def _worst_point(row: np.ndarray, n: int) -> dict:
    return {"q": [float(v) for v in row[:n]], "qd": [float(v) for v in row[n:]]}


def f_is_zero(sys: LagrangianSystem, sym: SymmetrySpec, samples: int = 32) -> bool:
    """Whether every momentum-shift function vanishes on the sample box."""
    pts = sample_states(sym.sample_box, samples)
    n = sys.n
    worst = 0.0
    for row in pts:
        env = dict(sys.parameters)
        env.update(zip(coord_names(n), (float(v) for v in row[:n])))
        for fa in sym.f:
            worst = max(worst, abs(float(value_of(exprlang.evaluate(fa, env)))))
    return worst <= ZERO_SAMPLE_TOL


# --------------------------------------------------------------------------
# checks


def check_quasi_invariance(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    samples: int = DEFAULT_SAMPLES,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CheckResult:
    """Defect of dL/dq^a = sum_i qd^i df_a/dq^i over the sample box."""
    n = sys.n
    pts = sample_states(sym.sample_box, samples)
    residual = -1.0
    worst = None
    for row in pts:
        q, qd = row[:n], row[n:]
        try:
            lhs = lagrangian_input_grad(sys, q, qd, sym.group_indices)
            r = 0.0
            for a in range(sym.m):
                df = expr_grad_q(sym.f[a], sys.parameters, n, q, range(n))
                r = max(r, abs(lhs[a] - float(qd @ df)))
        except EvaluationError:
            r = math.inf
        if r > residual:
            residual = r
            worst = _worst_point(row, n)
    return CheckResult(
        "quasi_invariance", residual <= tolerance, residual, tolerance, worst
    )


def check_finite_cocycle(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    g: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CheckResult:
    """Defect of L(q + shift, qd) - L(q, qd) = sum_i qd^i dF_g/dq^i.

    For a multi-direction shift the defect function composes direction by
    direction in group-index order: F_g(q) = sum_a F_a(g_a, q + partial
    shifts of the earlier directions).
    """
    if sym.F is None:
        raise ScenarioError("finite-shift check requested but no F expressions given")
    n = sys.n
    g = [float(v) for v in g]
    if len(g) != sym.m:
        raise DimensionError(f"expected {sym.m} shift components, got {len(g)}")
    names = coord_names(n)
    pts = sample_states(sym.sample_box, samples)
    residual = -1.0
    worst = None
    for row in pts:
        q, qd = row[:n], row[n:]
        try:
            q_shift = q.copy()
            for a, gi in enumerate(sym.group_indices):
                q_shift[gi] += g[a]
            defect = float(
                value_of(sys.evaluate(q_shift, qd)) - value_of(sys.evaluate(q, qd))
            )
            # directional derivatives of the composite defect function at q
            total = 0.0
            for i in range(n):
                di = 0.0
                offset = np.zeros(n)
                for a, gi in enumerate(sym.group_indices):
                    env = _dual_env(sys.parameters, names, q + offset, i)
                    env["s"] = g[a]
                    di += _deriv(sym.F[a], env)
                    offset[gi] += g[a]
                total += qd[i] * di
            r = abs(defect - total)
        except EvaluationError:
            r = math.inf
        if r > residual:
            residual = r
            worst = _worst_point(row, n)
    return CheckResult(
        "finite_cocycle", residual <= tolerance, residual, tolerance, worst
    )


def check_G_regularity(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    samples: int = DEFAULT_SAMPLES,
) -> CheckResult:
    """Scaled-determinant deficit of the group-velocity Hessian block.

    The block is singular (to the shipped floor) when |det| divided by the
    product of row norms drops below 1e-10; the residual is the worst
    deficit, so the entry passes only at residual 0.
    """
    n = sys.n
    names = sys.input_names
    pts = sample_states(sym.sample_box, samples)
    m = sym.m
    residual = -1.0
    worst = None
    for row in pts:
        base = [float(v) for v in row]
        try:
            block = np.empty((m, m))
            for a in range(m):
                for b in range(a, m):
                    env: dict = dict(sys.parameters)
                    sa, sb = n + sym.group_indices[a], n + sym.group_indices[b]
                    for i, nm in enumerate(names):
                        env[nm] = HyperDual(
                            base[i],
                            1.0 if i == sa else 0.0,
                            1.0 if i == sb else 0.0,
                            0.0,
                        )
                    val = exprlang.evaluate(sys.lagrangian, env)
                    d = val.d12 if isinstance(val, HyperDual) else 0.0
                    block[a, b] = d
                    block[b, a] = d
            norms = np.linalg.norm(block, axis=1)
            denom = float(np.prod(norms))
            scaled = abs(float(np.linalg.det(block))) / denom if denom > 0.0 else 0.0
            r = max(0.0, DET_FLOOR - scaled)
        except EvaluationError:
            r = math.inf
        if r > residual:
            residual = r
            worst = _worst_point(row, n)
    return CheckResult("g_regularity", residual <= 0.0, residual, 0.0, worst)


def check_connection_condition(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    samples: int = DEFAULT_SAMPLES,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list:
    """Covariant-constancy defect of f, plus the connection curvature.

    Main entry: max |df_a/dx^k - sum_b Gamma^b_k df_a/dq^b|.  When f is not
    identically zero a second entry reports the curvature residual
    max |dGamma^a_k/dx^s - dGamma^a_s/dx^k| (for a strictly invariant
    system the connection is unconstrained, so no curvature entry is
    emitted).
    """
    n = sys.n
    pts = sample_states(sym.sample_box, samples)
    shape_idx = sym.shape_indices
    shape_names = tuple(coord_names(n)[i] for i in shape_idx)
    k = len(shape_idx)
    m = sym.m
    residual = -1.0
    worst = None
    curv_residual = -1.0
    curv_worst = None
    for row in pts:
        q = row[:n]
        x = [float(q[i]) for i in shape_idx]
        try:
            gam = np.empty((m, k))
            gamj = np.empty((m, k, k))
            for a in range(m):
                for kk in range(k):
                    env = dict(sys.parameters)
                    env.update(zip(shape_names, x))
                    gam[a, kk] = float(value_of(exprlang.evaluate(sym.gamma[a][kk], env)))
                    for ss in range(k):
                        env_s = _dual_env(sys.parameters, shape_names, x, ss)
                        gamj[a, kk, ss] = _deriv(sym.gamma[a][kk], env_s)
            r = 0.0
            for a in range(m):
                df = expr_grad_q(sym.f[a], sys.parameters, n, q, range(n))
                for kk, si in enumerate(shape_idx):
                    horiz = df[si]
                    for b, gi in enumerate(sym.group_indices):
                        horiz -= gam[b, kk] * df[gi]
                    r = max(r, abs(horiz))
            rc = 0.0
            for a in range(m):
                for kk in range(k):
                    for ss in range(kk + 1, k):
                        rc = max(rc, abs(gamj[a, kk, ss] - gamj[a, ss, kk]))
        except EvaluationError:
            r = math.inf
            rc = math.inf
        if r > residual:
            residual = r
            worst = _worst_point(row, n)
        if rc > curv_residual:
            curv_residual = rc
            curv_worst = _worst_point(row, n)
    entries = [
        CheckResult(
            "connection_condition", residual <= tolerance, residual, tolerance, worst
        )
    ]
    if not f_is_zero(sys, sym):
        entries.append(
            CheckResult(
                "connection_curvature",
                curv_residual <= tolerance,
                curv_residual,
                tolerance,
                curv_worst,
            )
        )
    return entries


def cocycle(
    sys: LagrangianSystem,
    sym: SymmetrySpec,
    samples: int = DEFAULT_SAMPLES,
) -> CocycleMatrix:
    """sigma[a][b] = df_b/dq^a - df_a/dq^b, averaged over the sample box."""
    n = sys.n
    m = sym.m
    pts = sample_states(sym.sample_box, samples)
    acc = np.zeros((m, m))
    mats = []
    for row in pts:
        q = row[:n]
        df = np.stack(
            [expr_grad_q(sym.f[a], sys.parameters, n, q, sym.group_indices)
             for a in range(m)]
        )
        sig = df.T - df  # sig[a, b] = df_b/dq^a - df_a/dq^b
        mats.append(sig)
        acc += sig
    sigma = acc / len(pts)
    constancy = max(float(np.max(np.abs(s - sigma))) for s in mats)
    return CocycleMatrix(sigma, constancy)


def momentum(sys: LagrangianSystem, sym: SymmetrySpec, state: State) -> MomentumValue:
    """mu[a] = dL/dqd^a - f_a(q) at the given state."""
    n = sys.n
    slots = [n + gi for gi in sym.group_indices]
    dl = lagrangian_input_grad(sys, state.q, state.qd, slots)
    env = dict(sys.parameters)
    env.update(zip(coord_names(n), (float(v) for v in state.q)))
    fv = np.array(
        [float(value_of(exprlang.evaluate(fa, env))) for fa in sym.f]
    )
    return MomentumValue(dl - fv)


def energy(sys: LagrangianSystem, state: State) -> float:
    """sum_i qd^i dL/dqd^i - L at the given state."""
    n = sys.n
    dl = lagrangian_input_grad(sys, state.q, state.qd, range(n, 2 * n))
    lval = float(value_of(sys.evaluate(state.q, state.qd)))
    return float(np.asarray(state.qd, dtype=np.float64) @ dl) - lval
