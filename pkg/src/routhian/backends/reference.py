"""Pure-numpy fallback for the jit kernels.

Function-for-function mirror of ``backends/kernels.py`` with identical
signatures and return conventions, selected with ``ROUTHIAN_BACKEND=numpy``.
Instead of compiling tight scalar loops, the tape interpreter here runs all
hyper-dual evaluation contexts of one call as a single vectorized sweep
(registers are (4, K) blocks), and the linear algebra goes through
:mod:`routhian.linsolve`.  Integration loops are plain Python.

Deliberately shares no code with the jit backend so the two act as
independent implementations of the same contract; the two must produce
bitwise-identical trajectories.  That rules out numpy's vectorized
transcendentals: np.exp/np.log/np.tan/np.power round differently from the
libm scalars the jit kernels lower to, so those ops go through ``math.*``
element by element here, and integral exponents use the same explicit
multiplication chain in both backends.
"""

from __future__ import annotations

import math

import numpy as np

from .. import linsolve
from ..tape import (
    OP_ABS,
    OP_ADD,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MUL,
    OP_NEG,
    OP_POWC,
    OP_POWD,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_TAN,
)

NAME = "numpy"

_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 50
_NEWTON_MAX_HALVINGS = 30


def _exp1(t: float) -> float:
    try:
        return math.exp(t)
    except OverflowError:
        return math.inf


def _sin1(t: float) -> float:
    # math.sin/cos/tan raise on +-inf where C quietly returns nan
    return math.sin(t) if math.isfinite(t) else math.nan


def _cos1(t: float) -> float:
    return math.cos(t) if math.isfinite(t) else math.nan


def _tan1(t: float) -> float:
    return math.tan(t) if math.isfinite(t) else math.nan


def _pow1(t: float, p: float) -> float:
    try:
        return math.pow(t, p)
    except OverflowError:
        return math.inf


def _map1(fn, arr: np.ndarray) -> np.ndarray:
    return np.fromiter((fn(t) for t in arr), np.float64, arr.size)


def _eval_batch(code, instr_off, reg0, reg_off, out_reg, t, x, s1, s2):
    """Evaluate tape ``t`` over K hyper-dual contexts at once.

    ``x`` is (n_inputs, K); ``s1``/``s2`` hold the per-context seeded input
    slots (-1 for unseeded).  Returns (out, ok) where out is (4, K) stacked
    as value/d1/d2/d12 and failed contexts are NaN.
    """
    r0 = int(reg_off[t])
    nreg = int(reg_off[t + 1]) - r0
    i0 = int(instr_off[t])
    i1 = int(instr_off[t + 1])
    nin, ncx = x.shape
    reg = np.zeros((nreg, 4, ncx))
    reg[:, 0, :] = reg0[r0 : r0 + nreg, None]
    reg[:nin, 0, :] = x
    cols = np.arange(ncx)
    seeded = s1 >= 0
    reg[s1[seeded], 1, cols[seeded]] = 1.0
    seeded = s2 >= 0
    reg[s2[seeded], 2, cols[seeded]] = 1.0
    ok = np.ones(ncx, dtype=bool)
    dst = nreg - (i1 - i0)
    with np.errstate(all="ignore"):
        for ii in range(i0, i1):
            op = int(code[ii, 0])
            a = int(code[ii, 1])
            b = int(code[ii, 2])
            av, a1, a2, a12 = reg[a]
            out = reg[dst]
            if op == OP_ADD:
                out[:] = reg[a] + reg[b]
            elif op == OP_SUB:
                out[:] = reg[a] - reg[b]
            elif op == OP_MUL:
                bv, b1, b2, b12 = reg[b]
                out[0] = av * bv
                out[1] = av * b1 + a1 * bv
                out[2] = av * b2 + a2 * bv
                out[3] = (av * b12 + a12 * bv) + (a1 * b2 + a2 * b1)
            elif op == OP_DIV:
                bv, b1, b2, b12 = reg[b]
                bad = bv == 0.0
                ok &= ~bad
                inv = 1.0 / np.where(bad, 1.0, bv)
                c1 = -inv * inv
                c2 = 2.0 * inv * inv * inv
                rv = inv
                r1 = c1 * b1
                r2 = c1 * b2
                r12 = c1 * b12 + c2 * (b1 * b2)
                out[0] = av * rv
                out[1] = av * r1 + a1 * rv
                out[2] = av * r2 + a2 * rv
                out[3] = (av * r12 + a12 * rv) + (a1 * r2 + a2 * r1)
            elif op == OP_NEG:
                out[:] = -reg[a]
            elif op == OP_POWC:
                p = float(reg0[r0 + b])
                zero = av == 0.0
                integral = p == np.floor(p)
                if not integral:
                    ok &= ~(av < 0.0)
                if p < 0.0 or 0.0 < p < 1.0 or 1.0 < p < 2.0:
                    ok &= ~zero
                base = np.where(zero, 1.0, av)
                if integral and -16 <= p <= 16:
                    ip = int(p)
                    if ip >= 1:
                        w = np.ones_like(base)
                        for _ in range(ip - 2):
                            w = w * base
                        u = w * base if ip >= 2 else np.ones_like(base)
                        v = u * base
                        c1 = p * u
                        c2 = p * (p - 1.0) * w
                    else:
                        w = np.ones_like(base)
                        for _ in range(-ip):
                            w = w * base
                        v = 1.0 / w
                        c1 = p / (w * base)
                        c2 = p * (p - 1.0) / (w * base * base)
                else:
                    safe = np.where(av < 0.0, 1.0, base)
                    v = _map1(lambda t: _pow1(t, p), safe)
                    c1 = p * _map1(lambda t: _pow1(t, p - 1.0), safe)
                    c2 = p * (p - 1.0) * _map1(lambda t: _pow1(t, p - 2.0), safe)
                if p == 0.0:
                    v0, c10, c20 = 1.0, 0.0, 0.0
                else:
                    v0 = 0.0
                    c10 = 1.0 if p == 1.0 else 0.0
                    c20 = 2.0 if p == 2.0 else 0.0
                v = np.where(zero, v0, v)
                c1 = np.where(zero, c10, c1)
                c2 = np.where(zero, c20, c2)
                out[0] = v
                out[1] = c1 * a1
                out[2] = c1 * a2
                out[3] = c1 * a12 + c2 * (a1 * a2)
            elif op == OP_POWD:
                bv, b1, b2, b12 = reg[b]
                bad = av <= 0.0
                ok &= ~bad
                base = np.where(bad, 1.0, av)
                inv = 1.0 / base
                lv = _map1(math.log, base)
                l1 = inv * a1
                l2 = inv * a2
                l12 = inv * a12 + (-inv * inv) * (a1 * a2)
                mv = bv * lv
                m1 = bv * l1 + b1 * lv
                m2 = bv * l2 + b2 * lv
                m12 = (bv * l12 + b12 * lv) + (b1 * l2 + b2 * l1)
                ev = _map1(_exp1, mv)
                out[0] = ev
                out[1] = ev * m1
                out[2] = ev * m2
                out[3] = ev * m12 + ev * (m1 * m2)
            elif op == OP_SIN:
                s = _map1(_sin1, av)
                c = _map1(_cos1, av)
                out[0] = s
                out[1] = c * a1
                out[2] = c * a2
                out[3] = c * a12 + (-s) * (a1 * a2)
            elif op == OP_COS:
                s = _map1(_sin1, av)
                c = _map1(_cos1, av)
                out[0] = c
                out[1] = -s * a1
                out[2] = -s * a2
                out[3] = -s * a12 + (-c) * (a1 * a2)
            elif op == OP_TAN:
                c = _map1(_cos1, av)
                bad = c == 0.0
                ok &= ~bad
                cs = np.where(bad, 1.0, c)
                sec2 = 1.0 / (cs * cs)
                tv = _map1(_tan1, np.where(bad, 0.0, av))
                out[0] = tv
                out[1] = sec2 * a1
                out[2] = sec2 * a2
                out[3] = sec2 * a12 + (2.0 * sec2 * tv) * (a1 * a2)
            elif op == OP_EXP:
                e = _map1(_exp1, av)
                out[0] = e
                out[1] = e * a1
                out[2] = e * a2
                out[3] = e * a12 + e * (a1 * a2)
            elif op == OP_LOG:
                bad = av <= 0.0
                ok &= ~bad
                base = np.where(bad, 1.0, av)
                inv = 1.0 / base
                out[0] = _map1(math.log, base)
                out[1] = inv * a1
                out[2] = inv * a2
                out[3] = inv * a12 + (-inv * inv) * (a1 * a2)
            elif op == OP_SQRT:
                bad = av <= 0.0
                ok &= ~bad
                base = np.where(bad, 1.0, av)
                r = np.sqrt(base)
                c1 = 0.5 / r
                out[0] = r
                out[1] = c1 * a1
                out[2] = c1 * a2
                out[3] = c1 * a12 + (-0.5 * c1 / base) * (a1 * a2)
            elif op == OP_ABS:
                bad = av == 0.0
                ok &= ~bad
                sgn = np.where(av > 0.0, 1.0, -1.0)
                out[0] = np.abs(av)
                out[1] = sgn * a1
                out[2] = sgn * a2
                out[3] = sgn * a12
            else:  # pragma: no cover - tapes only emit known opcodes
                raise ValueError(f"unknown opcode {op}")
            dst += 1
    result = reg[int(out_reg[t])].copy()
    result[:, ~ok] = np.nan
    return result, ok


def _eval_ctx(arrs, t, inputs, s1, s2):
    """Batch-evaluate one tape at a single input point with many seeds."""
    s1 = np.asarray(s1, dtype=np.int64)
    s2 = np.asarray(s2, dtype=np.int64)
    x = np.repeat(np.asarray(inputs, dtype=np.float64)[:, None], s1.size, axis=1)
    return _eval_batch(*arrs, t, x, s1, s2)


def eval_tape(code, instr_off, reg0, reg_off, out_reg, t, x, s1, s2, max_reg):
    """Single tape evaluation; returns ((value, d1, d2, d12), ok)."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    out, ok = _eval_ctx(arrs, t, x, [s1], [s2])
    return out[:, 0].copy(), bool(ok[0])


def _el_terms(arrs, tL, n, inputs):
    """Lagrangian value, gradients and Hessian blocks at one state, or None
    on a domain failure.  One batched sweep covers every seed pair."""
    iu, ju = np.triu_indices(n)
    rep = np.repeat(np.arange(n), n)
    til = np.tile(np.arange(n), n)
    s1 = np.concatenate((n + iu, n + rep))
    s2 = np.concatenate((n + ju, til))
    out, ok = _eval_ctx(arrs, tL, inputs, s1, s2)
    if not ok.all():
        return None
    kvv = iu.size
    mvv = np.zeros((n, n))
    mvv[iu, ju] = out[3, :kvv]
    mvv[ju, iu] = out[3, :kvv]
    mvq = out[3, kvv:].reshape(n, n).copy()
    gq = out[2, kvv : kvv + n].copy()
    gqd = out[1, kvv:].reshape(n, n)[:, 0].copy()
    lval = float(out[0, -1])
    return lval, gq, gqd, mvv, mvq


def full_rhs(code, instr_off, reg0, reg_off, out_reg, tL, n, q, qd, max_reg):
    """Accelerations of the unreduced Euler-Lagrange equations."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    qd = np.asarray(qd, dtype=np.float64)
    inputs = np.concatenate((np.asarray(q, dtype=np.float64), qd))
    terms = _el_terms(arrs, tL, n, inputs)
    if terms is None:
        return np.full(n, np.nan), False
    _, gq, _, mvv, mvq = terms
    ws = linsolve.lu_factor(mvv)
    if ws.singular:
        return np.full(n, np.nan), False
    return linsolve.lu_solve(ws, gq - mvq @ qd), True


def solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, group_idx,
              n, q, qd_template, mu, max_reg):
    """Newton solve of the momentum relation for the group velocities."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    group_idx = np.asarray(group_idx, dtype=np.int64)
    m = group_idx.size
    inputs = np.concatenate((np.asarray(q, dtype=np.float64),
                             np.asarray(qd_template, dtype=np.float64)))
    inputs[n + group_idx] = 0.0
    w = np.zeros(m)
    fvals = np.empty(m)
    for a in range(m):
        out, ok = _eval_ctx(arrs, int(f_idx[a]), inputs, [-1], [-1])
        if not ok[0]:
            return w, False
        fvals[a] = out[0, 0]
    iu, ju = np.triu_indices(m)
    diag = iu == ju
    noseed = np.full(m, -1, dtype=np.int64)
    for _ in range(_NEWTON_MAX_ITER):
        inputs[n + group_idx] = w
        out, ok = _eval_ctx(arrs, tL, inputs, n + group_idx[iu], n + group_idx[ju])
        if not ok.all():
            return w, False
        amat = np.zeros((m, m))
        amat[iu, ju] = out[3]
        amat[ju, iu] = out[3]
        r = out[1, diag] - mu - fvals
        rnorm = float(np.max(np.abs(r)))
        if rnorm <= _NEWTON_TOL:
            return w, True
        ws = linsolve.lu_factor(amat)
        if ws.singular:
            return w, False
        delta = linsolve.lu_solve(ws, -r)
        scale = 1.0
        accepted = False
        for _ in range(_NEWTON_MAX_HALVINGS + 1):
            trial = w + scale * delta
            inputs[n + group_idx] = trial
            out, ok = _eval_ctx(arrs, tL, inputs, n + group_idx, noseed)
            if ok.all():
                rnew = float(np.max(np.abs(out[1] - mu - fvals)))
                if rnew < rnorm:
                    w = trial
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            return w, False
    return w, False


def reduced_rhs(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
                group_idx, shape_idx, n, section, mu, x, xd, max_reg):
    """Shape accelerations of the reduced equations (cases A and B)."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    group_idx = np.asarray(group_idx, dtype=np.int64)
    shape_idx = np.asarray(shape_idx, dtype=np.int64)
    m = group_idx.size
    k = shape_idx.size
    xd = np.asarray(xd, dtype=np.float64)
    q = np.array(section, dtype=np.float64)
    q[shape_idx] = x
    qdt = np.zeros(n)
    qdt[shape_idx] = xd
    bad = np.full(k, np.nan)
    psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                        group_idx, n, q, qdt, mu, max_reg)
    if not ok:
        return bad, psi, False
    inputs = np.concatenate((q, qdt))
    inputs[n + group_idx] = psi
    terms = _el_terms(arrs, tL, n, inputs)
    if terms is None:
        return bad, psi, False
    _, gq, _, mvv, mvq = terms
    fvals = np.empty(m)
    fjac = np.empty((m, n))
    noseed_n = np.full(n, -1, dtype=np.int64)
    for a in range(m):
        out, oka = _eval_ctx(arrs, int(f_idx[a]), inputs, np.arange(n), noseed_n)
        if not oka.all():
            return bad, psi, False
        fvals[a] = out[0, 0]
        fjac[a] = out[1]
    gam = np.empty((m, k))
    gamj = np.empty((m, k, k))  # gamj[a, kk, ss] = d Gamma^a_kk / d x^ss
    noseed_k = np.full(k, -1, dtype=np.int64)
    for a in range(m):
        for kk in range(k):
            out, oka = _eval_ctx(arrs, int(gam_idx[a * k + kk]), inputs,
                                 shape_idx, noseed_k)
            if not oka.all():
                return bad, psi, False
            gam[a, kk] = out[0, 0]
            gamj[a, kk] = out[1]
    alpha = mu + fvals
    acal = psi + gam @ xd
    amat = mvv[np.ix_(group_idx, group_idx)]
    bmat = mvv[np.ix_(group_idx, shape_idx)]
    cmat = mvv[np.ix_(shape_idx, shape_idx)]
    dmat = mvq[np.ix_(group_idx, shape_idx)]
    emat = mvq[np.ix_(shape_idx, shape_idx)]
    fpr = fjac[:, shape_idx]
    ws = linsolve.lu_factor(amat)
    if ws.singular:
        return bad, psi, False
    if k:
        ainv_b = np.column_stack([linsolve.lu_solve(ws, bmat[:, j]) for j in range(k)])
        ainv_fd = np.column_stack(
            [linsolve.lu_solve(ws, fpr[:, j] - dmat[:, j]) for j in range(k)]
        )
    else:
        ainv_b = np.empty((m, 0))
        ainv_fd = np.empty((m, 0))
    mred = cmat - bmat.T @ ainv_b
    # dR/dx via the envelope identity (psi drops out at the solved momentum).
    gdot = np.einsum("ask,s->ak", gamj, xd)
    drdx = gq[shape_idx] - fpr.T @ acal - alpha @ gdot
    # Jacobian of G = dR/dxd in x.
    dgdx = emat + bmat.T @ ainv_fd - gam.T @ fpr - np.einsum("a,aks->ks", alpha, gamj)
    # Gyroscopic 2-form pulled back to the section.
    half = fpr.T @ gam + np.einsum("a,ask->ks", alpha, gamj)
    gyro = half - half.T
    rhs = drdx - dgdx @ xd + gyro @ xd
    wsk = linsolve.lu_factor(mred)
    if wsk.singular:
        return bad, psi, False
    return linsolve.lu_solve(wsk, rhs), psi, True


def magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n, mu,
                 q, max_reg):
    """First-order velocity field for the fully-symmetric case (C)."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    group_idx = np.arange(n, dtype=np.int64)
    bad = np.full(n, np.nan)
    psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                        group_idx, n, q, np.zeros(n), mu, max_reg)
    if not ok:
        return bad, False
    inputs = np.concatenate((np.asarray(q, dtype=np.float64), psi))
    noseed = np.full(n, -1, dtype=np.int64)
    out, oka = _eval_ctx(arrs, tL, inputs, np.arange(n), noseed)
    if not oka.all():
        return bad, False
    gq = out[1].copy()
    fjac = np.empty((n, n))
    for a in range(n):
        out, oka = _eval_ctx(arrs, int(f_idx[a]), inputs, np.arange(n), noseed)
        if not oka.all():
            return bad, False
        fjac[a] = out[1]
    gradr = gq - fjac.T @ psi
    bt = fjac - fjac.T  # transpose of B_ab = df_b/dq^a - df_a/dq^b
    ws = linsolve.lu_factor(bt)
    if ws.singular:
        return bad, False
    return linsolve.lu_solve(ws, gradr), True


def _rk4(rhs, y0, dt, steps, dim):
    """Fixed-step RK4 shared by every reference integrator; returns the
    sample array and the failing step index (-1 on success)."""
    out = np.empty((steps + 1, dim))
    y = np.array(y0, dtype=np.float64)
    out[0] = y
    for s in range(steps):
        ks = []
        yy = y
        failed = False
        for stage in range(4):
            if stage == 1:
                yy = y + (0.5 * dt) * ks[0]
            elif stage == 2:
                yy = y + (0.5 * dt) * ks[1]
            elif stage == 3:
                yy = y + dt * ks[2]
            kval, ok = rhs(yy)
            if not ok:
                failed = True
                break
            ks.append(kval)
        if failed:
            return out, s
        y = y + (dt / 6.0) * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3])
        if not np.all(np.isfinite(y)):
            return out, s
        out[s + 1] = y
    return out, -1


def rk4_full(code, instr_off, reg0, reg_off, out_reg, tL, n, y0, dt, steps,
             max_reg):
    """RK4 on the full Euler-Lagrange equations; state (q, qd)."""

    def rhs(yy):
        qdd, ok = full_rhs(code, instr_off, reg0, reg_off, out_reg, tL, n,
                           yy[:n], yy[n:], max_reg)
        if not ok:
            return None, False
        return np.concatenate((yy[n:], qdd)), True

    return _rk4(rhs, y0, dt, steps, 2 * n)


def rk4_reduced(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
                group_idx, shape_idx, n, section, mu, y0, dt, steps, max_reg):
    """RK4 on the reduced shape equations; state (x, xd)."""
    k = len(shape_idx)

    def rhs(yy):
        xdd, _, ok = reduced_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                                 f_idx, gam_idx, group_idx, shape_idx, n,
                                 section, mu, yy[:k], yy[k:], max_reg)
        if not ok:
            return None, False
        return np.concatenate((yy[k:], xdd)), True

    return _rk4(rhs, y0, dt, steps, 2 * k)


def rk4_recon(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
              group_idx, shape_idx, n, section, mu, y0, dt, steps, max_reg):
    """RK4 on the reduced equations augmented with group coordinates;
    state (x, xd, g) with g integrating the momentum-matching velocities."""
    k = len(shape_idx)

    def rhs(yy):
        xdd, psi, ok = reduced_rhs(code, instr_off, reg0, reg_off, out_reg,
                                   tL, f_idx, gam_idx, group_idx, shape_idx,
                                   n, section, mu, yy[:k], yy[k : 2 * k],
                                   max_reg)
        if not ok:
            return None, False
        return np.concatenate((yy[k : 2 * k], xdd, psi)), True

    return _rk4(rhs, y0, dt, steps, 2 * k + len(group_idx))


def rk4_magnetic(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n, mu,
                 q0, dt, steps, max_reg):
    """RK4 on the first-order magnetic flow; state is the configuration."""

    def rhs(yy):
        return magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                            f_idx, n, mu, yy, max_reg)

    return _rk4(rhs, q0, dt, steps, n)


def full_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                  group_idx, n, qs, qds, max_reg):
    """Momentum and energy along a full trajectory (vectorized in samples)."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    group_idx = np.asarray(group_idx, dtype=np.int64)
    ns = qs.shape[0]
    m = group_idx.size
    x = np.repeat(np.hstack((qs, qds)).T, n, axis=1)
    s1 = np.tile(np.arange(n, 2 * n), ns)
    s2 = np.full(ns * n, -1, dtype=np.int64)
    out, ok = _eval_batch(*arrs, tL, x, s1, s2)
    rowok = ok.reshape(ns, n).all(axis=1)
    gqd = out[1].reshape(ns, n)
    lval = out[0].reshape(ns, n)[:, 0]
    # accumulate left to right so the result is bitwise identical to the
    # jit kernel's scalar loop
    e = np.zeros(ns)
    for i in range(n):
        e = e + qds[:, i] * gqd[:, i]
    eout = e - lval
    jout = gqd[:, group_idx].copy()
    xval = np.hstack((qs, qds)).T
    nos = np.full(ns, -1, dtype=np.int64)
    for a in range(m):
        outf, okf = _eval_batch(*arrs, int(f_idx[a]), xval, nos, nos)
        rowok &= okf
        jout[:, a] -= outf[0]
    jout[~rowok] = np.nan
    eout[~rowok] = np.nan
    return jout, eout, bool(rowok.all())


def reduced_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                     gam_idx, group_idx, shape_idx, n, section, mu, xs, xds,
                     max_reg):
    """Recomputed momentum and Routhian energy along a reduced trajectory."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    group_idx = np.asarray(group_idx, dtype=np.int64)
    shape_idx = np.asarray(shape_idx, dtype=np.int64)
    ns = xs.shape[0]
    m = group_idx.size
    k = shape_idx.size
    jout = np.full((ns, m), np.nan)
    eout = np.full(ns, np.nan)
    q = np.array(section, dtype=np.float64)
    qdt = np.zeros(n)
    allok = True
    none = np.full(1, -1, dtype=np.int64)
    for s in range(ns):
        q[shape_idx] = xs[s]
        qdt[shape_idx] = xds[s]
        psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL,
                            f_idx, group_idx, n, q, qdt, mu, max_reg)
        if not ok:
            allok = False
            continue
        inputs = np.concatenate((q, qdt))
        inputs[n + group_idx] = psi
        out, okv = _eval_ctx(arrs, tL, inputs, np.arange(n, 2 * n),
                             np.full(n, -1, dtype=np.int64))
        if not okv.all():
            allok = False
            continue
        gqd = out[1]
        lval = float(out[0, 0])
        fv = np.empty(m)
        good = True
        for a in range(m):
            outf, okf = _eval_ctx(arrs, int(f_idx[a]), inputs, none, none)
            if not okf[0]:
                good = False
                break
            fv[a] = outf[0, 0]
        if not good:
            allok = False
            continue
        gamv = np.empty((m, k))
        for a in range(m):
            for kk in range(k):
                outg, okg = _eval_ctx(arrs, int(gam_idx[a * k + kk]), inputs,
                                      none, none)
                if not okg[0]:
                    good = False
                    break
                gamv[a, kk] = outg[0, 0]
            if not good:
                break
        if not good:
            allok = False
            continue
        alpha = mu + fv
        # accumulation order mirrors the jit kernel so both backends give
        # bitwise-identical monitor columns
        acal = psi.copy()
        rval = lval
        for a in range(m):
            for kk in range(k):
                acal[a] += gamv[a, kk] * xds[s, kk]
            rval -= alpha[a] * acal[a]
        e = -rval
        for kk in range(k):
            gk = gqd[shape_idx[kk]]
            for a in range(m):
                gk -= alpha[a] * gamv[a, kk]
            e += xds[s, kk] * gk
        eout[s] = e
        jout[s] = gqd[group_idx] - fv
    return jout, eout, allok


def magnetic_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n,
                      mu, qs, max_reg):
    """Monitors along a magnetic (case C) trajectory; energy slot is -R."""
    arrs = (code, instr_off, reg0, reg_off, out_reg)
    ns = qs.shape[0]
    jout = np.full((ns, n), np.nan)
    eout = np.full(ns, np.nan)
    allok = True
    none = np.full(1, -1, dtype=np.int64)
    for s in range(ns):
        v, ok = magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                             f_idx, n, mu, qs[s], max_reg)
        if not ok:
            allok = False
            continue
        inputs = np.concatenate((qs[s], v))
        out, okv = _eval_ctx(arrs, tL, inputs, np.arange(n, 2 * n),
                             np.full(n, -1, dtype=np.int64))
        if not okv.all():
            allok = False
            continue
        gqd = out[1]
        rval = float(out[0, 0])
        good = True
        for a in range(n):
            outf, okf = _eval_ctx(arrs, int(f_idx[a]), inputs, none, none)
            if not okf[0]:
                good = False
                break
            fval = outf[0, 0]
            jout[s, a] = gqd[a] - fval
            rval -= (mu[a] + fval) * v[a]
        if not good:
            jout[s] = np.nan
            allok = False
            continue
        eout[s] = -rval
    return jout, eout, allok
