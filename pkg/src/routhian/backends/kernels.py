"""Jit-compiled numerical kernels (numba backend).

All functions take plain ndarrays/scalars so numba can compile them; the
first five positional arguments are always the tape-pack arrays produced by
:class:`routhian.tape.TapePack` (``code, instr_off, reg0, reg_off, out_reg``).
Tape evaluation runs in hyper-dual arithmetic — four components per
register: value, two directional derivatives and the mixed second
derivative — which is exactly what the Euler-Lagrange assembly needs.

Failures (domain errors, singular mass matrices, Newton stalls) are
reported through boolean/step-index return values instead of exceptions so
the integration loops can truncate trajectories cleanly.

The module mirrors ``backends/reference.py`` function for function; the
reference implementation is pure numpy and is selected with
``ROUTHIAN_BACKEND=numpy``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

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

NAME = "jit"

_RCOND_FLOOR = 1e-12
_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 50
_NEWTON_MAX_HALVINGS = 30


@njit(cache=True)
def _eval_hd(code, instr_off, reg0, reg_off, out_reg, t, x, s1, s2, reg):
    """Run tape ``t`` on inputs ``x`` with unit seeds at input slots ``s1``
    and ``s2`` (-1 disables a seed).  ``reg`` is a (max_reg, 4) workspace;
    the result lands at row ``out_reg[t]``.  Returns False on domain error.
    """
    r0 = reg_off[t]
    nreg = reg_off[t + 1] - r0
    i0 = instr_off[t]
    i1 = instr_off[t + 1]
    nin = x.shape[0]
    for j in range(nreg):
        reg[j, 0] = reg0[r0 + j]
        reg[j, 1] = 0.0
        reg[j, 2] = 0.0
        reg[j, 3] = 0.0
    for j in range(nin):
        reg[j, 0] = x[j]
    if s1 >= 0:
        reg[s1, 1] = 1.0
    if s2 >= 0:
        reg[s2, 2] = 1.0
    dst = nreg - (i1 - i0)
    for ii in range(i0, i1):
        op = code[ii, 0]
        a = code[ii, 1]
        b = code[ii, 2]
        av = reg[a, 0]
        a1 = reg[a, 1]
        a2 = reg[a, 2]
        a12 = reg[a, 3]
        if op == OP_ADD:
            reg[dst, 0] = av + reg[b, 0]
            reg[dst, 1] = a1 + reg[b, 1]
            reg[dst, 2] = a2 + reg[b, 2]
            reg[dst, 3] = a12 + reg[b, 3]
        elif op == OP_SUB:
            reg[dst, 0] = av - reg[b, 0]
            reg[dst, 1] = a1 - reg[b, 1]
            reg[dst, 2] = a2 - reg[b, 2]
            reg[dst, 3] = a12 - reg[b, 3]
        elif op == OP_MUL:
            bv = reg[b, 0]
            b1 = reg[b, 1]
            b2 = reg[b, 2]
            b12 = reg[b, 3]
            reg[dst, 0] = av * bv
            reg[dst, 1] = av * b1 + a1 * bv
            reg[dst, 2] = av * b2 + a2 * bv
            reg[dst, 3] = (av * b12 + a12 * bv) + (a1 * b2 + a2 * b1)
        elif op == OP_DIV:
            bv = reg[b, 0]
            if bv == 0.0:
                return False
            b1 = reg[b, 1]
            b2 = reg[b, 2]
            b12 = reg[b, 3]
            inv = 1.0 / bv
            c1 = -inv * inv
            c2 = 2.0 * inv * inv * inv
            rv = inv
            r1 = c1 * b1
            r2 = c1 * b2
            r12 = c1 * b12 + c2 * (b1 * b2)
            reg[dst, 0] = av * rv
            reg[dst, 1] = av * r1 + a1 * rv
            reg[dst, 2] = av * r2 + a2 * rv
            reg[dst, 3] = (av * r12 + a12 * rv) + (a1 * r2 + a2 * r1)
        elif op == OP_NEG:
            reg[dst, 0] = -av
            reg[dst, 1] = -a1
            reg[dst, 2] = -a2
            reg[dst, 3] = -a12
        elif op == OP_POWC:
            p = reg[b, 0]
            integral = p == np.floor(p)
            if av < 0.0 and not integral:
                return False
            if av == 0.0:
                if p < 0.0 or (0.0 < p < 1.0) or (1.0 < p < 2.0):
                    return False
                if p == 0.0:
                    v = 1.0
                    c1 = 0.0
                    c2 = 0.0
                else:
                    v = 0.0
                    c1 = 1.0 if p == 1.0 else 0.0
                    c2 = 2.0 if p == 2.0 else 0.0
            elif integral and -16.0 <= p <= 16.0:
                # explicit multiplication chain, mirrored by the numpy
                # backend so both round identically (libm pow may be an
                # ulp away from x*x on near-ties)
                ip = int(p)
                if ip >= 1:
                    w = 1.0
                    for _ in range(ip - 2):
                        w *= av
                    u = w * av if ip >= 2 else 1.0
                    v = u * av
                    c1 = p * u
                    c2 = p * (p - 1.0) * w
                else:
                    w = 1.0
                    for _ in range(-ip):
                        w *= av
                    v = 1.0 / w
                    c1 = p / (w * av)
                    c2 = p * (p - 1.0) / (w * av * av)
            else:
                v = av**p
                c1 = p * av ** (p - 1.0)
                c2 = p * (p - 1.0) * av ** (p - 2.0)
            reg[dst, 0] = v
            reg[dst, 1] = c1 * a1
            reg[dst, 2] = c1 * a2
            reg[dst, 3] = c1 * a12 + c2 * (a1 * a2)
        elif op == OP_POWD:
            # a**b for variable exponent, via exp(b*log(a)); needs a > 0.
            if av <= 0.0:
                return False
            bv = reg[b, 0]
            b1 = reg[b, 1]
            b2 = reg[b, 2]
            b12 = reg[b, 3]
            inv = 1.0 / av
            lv = np.log(av)
            l1 = inv * a1
            l2 = inv * a2
            l12 = inv * a12 + (-inv * inv) * (a1 * a2)
            mv = bv * lv
            m1 = bv * l1 + b1 * lv
            m2 = bv * l2 + b2 * lv
            m12 = (bv * l12 + b12 * lv) + (b1 * l2 + b2 * l1)
            ev = np.exp(mv)
            reg[dst, 0] = ev
            reg[dst, 1] = ev * m1
            reg[dst, 2] = ev * m2
            reg[dst, 3] = ev * m12 + ev * (m1 * m2)
        elif op == OP_SIN:
            s = np.sin(av)
            c = np.cos(av)
            reg[dst, 0] = s
            reg[dst, 1] = c * a1
            reg[dst, 2] = c * a2
            reg[dst, 3] = c * a12 + (-s) * (a1 * a2)
        elif op == OP_COS:
            s = np.sin(av)
            c = np.cos(av)
            reg[dst, 0] = c
            reg[dst, 1] = -s * a1
            reg[dst, 2] = -s * a2
            reg[dst, 3] = -s * a12 + (-c) * (a1 * a2)
        elif op == OP_TAN:
            c = np.cos(av)
            if c == 0.0:
                return False
            tv = np.tan(av)
            sec2 = 1.0 / (c * c)
            reg[dst, 0] = tv
            reg[dst, 1] = sec2 * a1
            reg[dst, 2] = sec2 * a2
            reg[dst, 3] = sec2 * a12 + (2.0 * sec2 * tv) * (a1 * a2)
        elif op == OP_EXP:
            e = np.exp(av)
            reg[dst, 0] = e
            reg[dst, 1] = e * a1
            reg[dst, 2] = e * a2
            reg[dst, 3] = e * a12 + e * (a1 * a2)
        elif op == OP_LOG:
            if av <= 0.0:
                return False
            inv = 1.0 / av
            reg[dst, 0] = np.log(av)
            reg[dst, 1] = inv * a1
            reg[dst, 2] = inv * a2
            reg[dst, 3] = inv * a12 + (-inv * inv) * (a1 * a2)
        elif op == OP_SQRT:
            if av <= 0.0:
                return False
            r = np.sqrt(av)
            c1 = 0.5 / r
            reg[dst, 0] = r
            reg[dst, 1] = c1 * a1
            reg[dst, 2] = c1 * a2
            reg[dst, 3] = c1 * a12 + (-0.5 * c1 / av) * (a1 * a2)
        elif op == OP_ABS:
            if av == 0.0:
                return False
            sgn = 1.0 if av > 0.0 else -1.0
            reg[dst, 0] = abs(av)
            reg[dst, 1] = sgn * a1
            reg[dst, 2] = sgn * a2
            reg[dst, 3] = sgn * a12
        else:
            return False
        dst += 1
    return True


@njit(cache=True)
def eval_tape(code, instr_off, reg0, reg_off, out_reg, t, x, s1, s2, max_reg):
    """Single tape evaluation; returns ((value, d1, d2, d12), ok)."""
    reg = np.empty((max_reg, 4))
    ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t, x, s1, s2, reg)
    out = np.empty(4)
    o = out_reg[t]
    for c in range(4):
        out[c] = reg[o, c] if ok else np.nan
    return out, ok


@njit(cache=True)
def _lu_factor(a, piv):
    """In-place LU with partial pivoting; returns the 1-norm rcond estimate
    (0.0 flags an exactly singular matrix)."""
    d = a.shape[0]
    if d == 0:
        return 1.0
    norm1 = 0.0
    for j in range(d):
        s = 0.0
        for i in range(d):
            s += abs(a[i, j])
        if s > norm1:
            norm1 = s
    for i in range(d):
        piv[i] = i
    for col in range(d):
        p = col
        amax = abs(a[col, col])
        for r in range(col + 1, d):
            if abs(a[r, col]) > amax:
                amax = abs(a[r, col])
                p = r
        if p != col:
            for cc in range(d):
                tmp = a[col, cc]
                a[col, cc] = a[p, cc]
                a[p, cc] = tmp
            tp = piv[col]
            piv[col] = piv[p]
            piv[p] = tp
        pivot = a[col, col]
        if pivot == 0.0:
            return 0.0
        for r in range(col + 1, d):
            f = a[r, col] / pivot
            a[r, col] = f
            for cc in range(col + 1, d):
                a[r, cc] -= f * a[col, cc]
    inv_norm = 0.0
    x = np.empty(d)
    for j in range(d):
        for i in range(d):
            x[i] = 1.0 if piv[i] == j else 0.0
        for i in range(d):
            s = x[i]
            for c in range(i):
                s -= a[i, c] * x[c]
            x[i] = s
        for i in range(d - 1, -1, -1):
            s = x[i]
            for c in range(i + 1, d):
                s -= a[i, c] * x[c]
            x[i] = s / a[i, i]
        colsum = 0.0
        for i in range(d):
            colsum += abs(x[i])
        if colsum > inv_norm:
            inv_norm = colsum
    denom = norm1 * inv_norm
    if denom <= 0.0:
        return 0.0
    return 1.0 / denom


@njit(cache=True)
def _lu_solve(a, piv, b, x):
    d = a.shape[0]
    for i in range(d):
        x[i] = b[piv[i]]
    for i in range(d):
        s = x[i]
        for c in range(i):
            s -= a[i, c] * x[c]
        x[i] = s
    for i in range(d - 1, -1, -1):
        s = x[i]
        for c in range(i + 1, d):
            s -= a[i, c] * x[c]
        x[i] = s / a[i, i]


@njit(cache=True)
def _el_terms(code, instr_off, reg0, reg_off, out_reg, tL, n, inputs, reg,
              gq, gqd, mvv, mvq):
    """All Lagrangian derivative blocks at one state.

    Fills the position gradient, velocity gradient, velocity-velocity and
    velocity-position Hessian blocks; returns (L value, ok).
    """
    o = out_reg[tL]
    lval = 0.0
    for i in range(n):
        for j in range(i, n):
            ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                          inputs, n + i, n + j, reg)
            if not ok:
                return np.nan, False
            mvv[i, j] = reg[o, 3]
            mvv[j, i] = reg[o, 3]
    for i in range(n):
        for j in range(n):
            ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                          inputs, n + i, j, reg)
            if not ok:
                return np.nan, False
            mvq[i, j] = reg[o, 3]
            if i == 0:
                gq[j] = reg[o, 2]
            if j == 0:
                gqd[i] = reg[o, 1]
            lval = reg[o, 0]
    return lval, True


@njit(cache=True)
def full_rhs(code, instr_off, reg0, reg_off, out_reg, tL, n, q, qd, max_reg):
    """Accelerations of the unreduced Euler-Lagrange equations.

    Solves  (d2L/dqd dqd) qdd = dL/dq - (d2L/dqd dq) qd.
    """
    inputs = np.empty(2 * n)
    for i in range(n):
        inputs[i] = q[i]
        inputs[n + i] = qd[i]
    reg = np.empty((max_reg, 4))
    gq = np.empty(n)
    gqd = np.empty(n)
    mvv = np.empty((n, n))
    mvq = np.empty((n, n))
    qdd = np.full(n, np.nan)
    lval, ok = _el_terms(code, instr_off, reg0, reg_off, out_reg, tL, n,
                         inputs, reg, gq, gqd, mvv, mvq)
    if not ok:
        return qdd, False
    b = np.empty(n)
    for i in range(n):
        s = gq[i]
        for j in range(n):
            s -= mvq[i, j] * qd[j]
        b[i] = s
    piv = np.empty(n, dtype=np.int64)
    rcond = _lu_factor(mvv, piv)
    if rcond < _RCOND_FLOOR:
        return qdd, False
    _lu_solve(mvv, piv, b, qdd)
    return qdd, True


@njit(cache=True)
def solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, group_idx,
              n, q, qd_template, mu, max_reg):
    """Newton solve of the momentum relation for the group velocities.

    Unknowns start at zero; the residual is
    dL/dqd[a] - mu[a] - f_a(q) per group direction, the Jacobian is the
    group-velocity Hessian block.  Steps are halved (up to 30 times) when
    the residual sup-norm fails to decrease.
    """
    m = group_idx.shape[0]
    reg = np.empty((max_reg, 4))
    o = out_reg[tL]
    inputs = np.empty(2 * n)
    for i in range(n):
        inputs[i] = q[i]
        inputs[n + i] = qd_template[i]
    w = np.zeros(m)
    fvals = np.empty(m)
    for a in range(m):
        ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, f_idx[a],
                      inputs, -1, -1, reg)
        if not ok:
            return w, False
        fvals[a] = reg[out_reg[f_idx[a]], 0]
    amat = np.empty((m, m))
    r = np.empty(m)
    delta = np.empty(m)
    negr = np.empty(m)
    piv = np.empty(m, dtype=np.int64)
    for _ in range(_NEWTON_MAX_ITER):
        for a in range(m):
            inputs[n + group_idx[a]] = w[a]
        rnorm = 0.0
        for a in range(m):
            for b in range(a, m):
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                              inputs, n + group_idx[a], n + group_idx[b], reg)
                if not ok:
                    return w, False
                amat[a, b] = reg[o, 3]
                amat[b, a] = reg[o, 3]
                if b == a:
                    r[a] = reg[o, 1] - mu[a] - fvals[a]
        for a in range(m):
            if abs(r[a]) > rnorm:
                rnorm = abs(r[a])
        if rnorm <= _NEWTON_TOL:
            return w, True
        rcond = _lu_factor(amat, piv)
        if rcond < _RCOND_FLOOR:
            return w, False
        for a in range(m):
            negr[a] = -r[a]
        _lu_solve(amat, piv, negr, delta)
        scale = 1.0
        accepted = False
        for _ in range(_NEWTON_MAX_HALVINGS + 1):
            for a in range(m):
                inputs[n + group_idx[a]] = w[a] + scale * delta[a]
            rnew = 0.0
            okall = True
            for a in range(m):
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                              inputs, n + group_idx[a], -1, reg)
                if not ok:
                    okall = False
                    break
                res = reg[o, 1] - mu[a] - fvals[a]
                if abs(res) > rnew:
                    rnew = abs(res)
            if okall and rnew < rnorm:
                for a in range(m):
                    w[a] = w[a] + scale * delta[a]
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            return w, False
    return w, False


@njit(cache=True)
def reduced_rhs(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
                group_idx, shape_idx, n, section, mu, x, xd, max_reg):
    """Shape accelerations of the reduced equations (cases A and B).

    Assembles the Routhian's Euler-Lagrange system from full-Lagrangian
    derivative blocks at the canonical section plus the implicit-function
    derivatives of the momentum solve, then adds the gyroscopic force
    (matrix of d[(mu+f) A] contracted with the shape velocity).  Returns
    (xdd, psi, ok) with psi the group velocities.
    """
    m = group_idx.shape[0]
    k = shape_idx.shape[0]
    q = section.copy()
    qd_template = np.zeros(n)
    for j in range(k):
        q[shape_idx[j]] = x[j]
        qd_template[shape_idx[j]] = xd[j]
    xdd = np.full(k, np.nan)
    psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                        group_idx, n, q, qd_template, mu, max_reg)
    if not ok:
        return xdd, psi, False
    inputs = np.empty(2 * n)
    for i in range(n):
        inputs[i] = q[i]
        inputs[n + i] = qd_template[i]
    for a in range(m):
        inputs[n + group_idx[a]] = psi[a]
    reg = np.empty((max_reg, 4))
    gq = np.empty(n)
    gqd = np.empty(n)
    mvv = np.empty((n, n))
    mvq = np.empty((n, n))
    lval, ok = _el_terms(code, instr_off, reg0, reg_off, out_reg, tL, n,
                         inputs, reg, gq, gqd, mvv, mvq)
    if not ok:
        return xdd, psi, False
    # Momentum-shift values and position Jacobian.
    fvals = np.empty(m)
    fjac = np.empty((m, n))
    for a in range(m):
        t = f_idx[a]
        for i in range(n):
            ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t,
                          inputs, i, -1, reg)
            if not ok:
                return xdd, psi, False
            fjac[a, i] = reg[out_reg[t], 1]
            fvals[a] = reg[out_reg[t], 0]
    # Connection coefficients and their shape-coordinate Jacobian.
    gam = np.empty((m, k))
    gamj = np.empty((m, k, k))
    for a in range(m):
        for kk in range(k):
            t = gam_idx[a * k + kk]
            for ss in range(k):
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t,
                              inputs, shape_idx[ss], -1, reg)
                if not ok:
                    return xdd, psi, False
                gamj[a, kk, ss] = reg[out_reg[t], 1]
                gam[a, kk] = reg[out_reg[t], 0]
    alpha = np.empty(m)
    acal = np.empty(m)
    for a in range(m):
        alpha[a] = mu[a] + fvals[a]
        s = psi[a]
        for kk in range(k):
            s += gam[a, kk] * xd[kk]
        acal[a] = s
    # Blocks of the full Hessians in (group, shape) split.
    amat = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            amat[a, b] = mvv[group_idx[a], group_idx[b]]
    bmat = np.empty((m, k))
    dmat = np.empty((m, k))
    fpr = np.empty((m, k))
    for a in range(m):
        for kk in range(k):
            bmat[a, kk] = mvv[group_idx[a], shape_idx[kk]]
            dmat[a, kk] = mvq[group_idx[a], shape_idx[kk]]
            fpr[a, kk] = fjac[a, shape_idx[kk]]
    piv = np.empty(m, dtype=np.int64)
    rcond = _lu_factor(amat, piv)
    if rcond < _RCOND_FLOOR:
        return xdd, psi, False
    # ainv_b = A^-1 B  and  ainv_fd = A^-1 (f' - D): the velocity and
    # position sensitivities of the momentum solve.
    ainv_b = np.empty((m, k))
    ainv_fd = np.empty((m, k))
    col = np.empty(m)
    sol = np.empty(m)
    for kk in range(k):
        for a in range(m):
            col[a] = bmat[a, kk]
        _lu_solve(amat, piv, col, sol)
        for a in range(m):
            ainv_b[a, kk] = sol[a]
        for a in range(m):
            col[a] = fpr[a, kk] - dmat[a, kk]
        _lu_solve(amat, piv, col, sol)
        for a in range(m):
            ainv_fd[a, kk] = sol[a]
    mred = np.empty((k, k))
    for kk in range(k):
        for ss in range(k):
            s = mvv[shape_idx[kk], shape_idx[ss]]
            for a in range(m):
                s -= bmat[a, kk] * ainv_b[a, ss]
            mred[kk, ss] = s
    rhs = np.empty(k)
    for kk in range(k):
        # dR/dx at frozen velocities (envelope identity).
        s = gq[shape_idx[kk]]
        for a in range(m):
            gdot = 0.0
            for ss in range(k):
                gdot += gamj[a, ss, kk] * xd[ss]
            s -= fpr[a, kk] * acal[a] + alpha[a] * gdot
        # minus (dG/dx) xd with G = dR/dxd.
        for ss in range(k):
            dg = mvq[shape_idx[kk], shape_idx[ss]]
            for a in range(m):
                dg += bmat[a, kk] * ainv_fd[a, ss]
                dg -= fpr[a, ss] * gam[a, kk] + alpha[a] * gamj[a, kk, ss]
            s -= dg * xd[ss]
        # plus the gyroscopic force (minus the shape velocity hooked into
        # the exterior derivative of (mu+f) A).
        for ss in range(k):
            g = 0.0
            for a in range(m):
                g += fpr[a, kk] * gam[a, ss] + alpha[a] * gamj[a, ss, kk]
                g -= fpr[a, ss] * gam[a, kk] + alpha[a] * gamj[a, kk, ss]
            s += g * xd[ss]
        rhs[kk] = s
    pivk = np.empty(k, dtype=np.int64)
    rcond = _lu_factor(mred, pivk)
    if rcond < _RCOND_FLOOR:
        return xdd, psi, False
    _lu_solve(mred, pivk, rhs, xdd)
    return xdd, psi, True


@njit(cache=True)
def magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n, mu,
                 q, max_reg):
    """First-order velocity field for the fully-symmetric case (C).

    Solves  B^T v = grad R  with B the curvature matrix
    df_b/dq^a - df_a/dq^b and R the reduced potential.
    """
    v = np.full(n, np.nan)
    qd_template = np.zeros(n)
    group_idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        group_idx[i] = i
    psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                        group_idx, n, q, qd_template, mu, max_reg)
    if not ok:
        return v, False
    inputs = np.empty(2 * n)
    for i in range(n):
        inputs[i] = q[i]
        inputs[n + i] = psi[i]
    reg = np.empty((max_reg, 4))
    o = out_reg[tL]
    gq = np.empty(n)
    for i in range(n):
        ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL, inputs,
                      i, -1, reg)
        if not ok:
            return v, False
        gq[i] = reg[o, 1]
    fjac = np.empty((n, n))
    for a in range(n):
        t = f_idx[a]
        for i in range(n):
            ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t, inputs,
                          i, -1, reg)
            if not ok:
                return v, False
            fjac[a, i] = reg[out_reg[t], 1]
    # grad R via the envelope identity: dR/dq^b = dL/dq^b - df_a/dq^b psi^a.
    gradr = np.empty(n)
    for b in range(n):
        s = gq[b]
        for a in range(n):
            s -= fjac[a, b] * psi[a]
        gradr[b] = s
    bt = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            # transpose of B_ab = df_b/dq^a - df_a/dq^b
            bt[i, j] = fjac[i, j] - fjac[j, i]
    piv = np.empty(n, dtype=np.int64)
    rcond = _lu_factor(bt, piv)
    if rcond < _RCOND_FLOOR:
        return v, False
    _lu_solve(bt, piv, gradr, v)
    return v, True


@njit(cache=True)
def rk4_full(code, instr_off, reg0, reg_off, out_reg, tL, n, y0, dt, steps,
             max_reg):
    """Classical fixed-step RK4 on the full Euler-Lagrange equations.

    State is (q, qd) stacked.  Returns the (steps+1, 2n) sample array and
    the failing step index (-1 when the whole run succeeded); on failure
    samples from the failing step on are unwritten.
    """
    dim = 2 * n
    out = np.empty((steps + 1, dim))
    y = y0.copy()
    for j in range(dim):
        out[0, j] = y[j]
    k = np.empty((4, dim))
    yy = np.empty(dim)
    for s in range(steps):
        okstep = True
        for stage in range(4):
            if stage == 0:
                for j in range(dim):
                    yy[j] = y[j]
            elif stage == 1:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[0, j]
            elif stage == 2:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[1, j]
            else:
                for j in range(dim):
                    yy[j] = y[j] + dt * k[2, j]
            qdd, ok = full_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                               n, yy[:n], yy[n:], max_reg)
            if not ok:
                okstep = False
                break
            for j in range(n):
                k[stage, j] = yy[n + j]
                k[stage, n + j] = qdd[j]
        if not okstep:
            return out, s
        allfinite = True
        for j in range(dim):
            y[j] = y[j] + (dt / 6.0) * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j] + k[3, j])
            if not np.isfinite(y[j]):
                allfinite = False
        if not allfinite:
            return out, s
        for j in range(dim):
            out[s + 1, j] = y[j]
    return out, -1


@njit(cache=True)
def rk4_reduced(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
                group_idx, shape_idx, n, section, mu, y0, dt, steps, max_reg):
    """RK4 on the reduced shape equations; state is (x, xd)."""
    k_dim = shape_idx.shape[0]
    dim = 2 * k_dim
    out = np.empty((steps + 1, dim))
    y = y0.copy()
    for j in range(dim):
        out[0, j] = y[j]
    k = np.empty((4, dim))
    yy = np.empty(dim)
    for s in range(steps):
        okstep = True
        for stage in range(4):
            if stage == 0:
                for j in range(dim):
                    yy[j] = y[j]
            elif stage == 1:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[0, j]
            elif stage == 2:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[1, j]
            else:
                for j in range(dim):
                    yy[j] = y[j] + dt * k[2, j]
            xdd, _, ok = reduced_rhs(code, instr_off, reg0, reg_off, out_reg,
                                     tL, f_idx, gam_idx, group_idx, shape_idx,
                                     n, section, mu, yy[:k_dim], yy[k_dim:],
                                     max_reg)
            if not ok:
                okstep = False
                break
            for j in range(k_dim):
                k[stage, j] = yy[k_dim + j]
                k[stage, k_dim + j] = xdd[j]
        if not okstep:
            return out, s
        allfinite = True
        for j in range(dim):
            y[j] = y[j] + (dt / 6.0) * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j] + k[3, j])
            if not np.isfinite(y[j]):
                allfinite = False
        if not allfinite:
            return out, s
        for j in range(dim):
            out[s + 1, j] = y[j]
    return out, -1


@njit(cache=True)
def rk4_recon(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, gam_idx,
              group_idx, shape_idx, n, section, mu, y0, dt, steps, max_reg):
    """RK4 on the reduced equations augmented with the group coordinates.

    State is (x, xd, g); the group block integrates the momentum-matching
    group velocities, which is how reduced trajectories are lifted back to
    the full space.
    """
    k_dim = shape_idx.shape[0]
    m = group_idx.shape[0]
    dim = 2 * k_dim + m
    out = np.empty((steps + 1, dim))
    y = y0.copy()
    for j in range(dim):
        out[0, j] = y[j]
    k = np.empty((4, dim))
    yy = np.empty(dim)
    for s in range(steps):
        okstep = True
        for stage in range(4):
            if stage == 0:
                for j in range(dim):
                    yy[j] = y[j]
            elif stage == 1:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[0, j]
            elif stage == 2:
                for j in range(dim):
                    yy[j] = y[j] + 0.5 * dt * k[1, j]
            else:
                for j in range(dim):
                    yy[j] = y[j] + dt * k[2, j]
            xdd, psi, ok = reduced_rhs(code, instr_off, reg0, reg_off,
                                       out_reg, tL, f_idx, gam_idx, group_idx,
                                       shape_idx, n, section, mu, yy[:k_dim],
                                       yy[k_dim:2 * k_dim], max_reg)
            if not ok:
                okstep = False
                break
            for j in range(k_dim):
                k[stage, j] = yy[k_dim + j]
                k[stage, k_dim + j] = xdd[j]
            for j in range(m):
                k[stage, 2 * k_dim + j] = psi[j]
        if not okstep:
            return out, s
        allfinite = True
        for j in range(dim):
            y[j] = y[j] + (dt / 6.0) * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j] + k[3, j])
            if not np.isfinite(y[j]):
                allfinite = False
        if not allfinite:
            return out, s
        for j in range(dim):
            out[s + 1, j] = y[j]
    return out, -1


@njit(cache=True)
def rk4_magnetic(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n, mu,
                 q0, dt, steps, max_reg):
    """RK4 on the first-order magnetic flow; state is the configuration."""
    out = np.empty((steps + 1, n))
    y = q0.copy()
    for j in range(n):
        out[0, j] = y[j]
    k = np.empty((4, n))
    yy = np.empty(n)
    for s in range(steps):
        okstep = True
        for stage in range(4):
            if stage == 0:
                for j in range(n):
                    yy[j] = y[j]
            elif stage == 1:
                for j in range(n):
                    yy[j] = y[j] + 0.5 * dt * k[0, j]
            elif stage == 2:
                for j in range(n):
                    yy[j] = y[j] + 0.5 * dt * k[1, j]
            else:
                for j in range(n):
                    yy[j] = y[j] + dt * k[2, j]
            v, ok = magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                                 f_idx, n, mu, yy, max_reg)
            if not ok:
                okstep = False
                break
            for j in range(n):
                k[stage, j] = v[j]
        if not okstep:
            return out, s
        allfinite = True
        for j in range(n):
            y[j] = y[j] + (dt / 6.0) * (k[0, j] + 2.0 * k[1, j] + 2.0 * k[2, j] + k[3, j])
            if not np.isfinite(y[j]):
                allfinite = False
        if not allfinite:
            return out, s
        for j in range(n):
            out[s + 1, j] = y[j]
    return out, -1


@njit(cache=True)
def full_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                  group_idx, n, qs, qds, max_reg):
    """Momentum and energy along a full trajectory.

    J_a = dL/dqd[a-th group slot] - f_a(q);  E = qd . dL/dqd - L.
    Failed samples are filled with NaN.
    """
    ns = qs.shape[0]
    m = group_idx.shape[0]
    jout = np.empty((ns, m))
    eout = np.empty(ns)
    reg = np.empty((max_reg, 4))
    o = out_reg[tL]
    inputs = np.empty(2 * n)
    allok = True
    for s in range(ns):
        for i in range(n):
            inputs[i] = qs[s, i]
            inputs[n + i] = qds[s, i]
        e = 0.0
        lval = 0.0
        okrow = True
        gqd = np.empty(n)
        for i in range(n):
            ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                          inputs, n + i, -1, reg)
            if not ok:
                okrow = False
                break
            gqd[i] = reg[o, 1]
            lval = reg[o, 0]
            e += qds[s, i] * reg[o, 1]
        if okrow:
            for a in range(m):
                t = f_idx[a]
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t,
                              inputs, -1, -1, reg)
                if not ok:
                    okrow = False
                    break
                jout[s, a] = gqd[group_idx[a]] - reg[out_reg[t], 0]
        if okrow:
            eout[s] = e - lval
        else:
            allok = False
            eout[s] = np.nan
            for a in range(m):
                jout[s, a] = np.nan
    return jout, eout, allok


@njit(cache=True)
def reduced_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx,
                     gam_idx, group_idx, shape_idx, n, section, mu, xs, xds,
                     max_reg):
    """Recomputed momentum and Routhian energy along a reduced trajectory.

    The momentum column re-solves the defining relation at each sample (a
    self-check: it must sit at mu up to the Newton tolerance); the energy
    is  xd . dR/dxd - R.
    """
    ns = xs.shape[0]
    m = group_idx.shape[0]
    k = shape_idx.shape[0]
    jout = np.empty((ns, m))
    eout = np.empty(ns)
    reg = np.empty((max_reg, 4))
    o = out_reg[tL]
    q = section.copy()
    qd_template = np.zeros(n)
    inputs = np.empty(2 * n)
    allok = True
    for s in range(ns):
        for j in range(k):
            q[shape_idx[j]] = xs[s, j]
            qd_template[shape_idx[j]] = xds[s, j]
        psi, ok = solve_psi(code, instr_off, reg0, reg_off, out_reg, tL,
                            f_idx, group_idx, n, q, qd_template, mu, max_reg)
        okrow = ok
        if okrow:
            for i in range(n):
                inputs[i] = q[i]
                inputs[n + i] = qd_template[i]
            for a in range(m):
                inputs[n + group_idx[a]] = psi[a]
            gqd = np.empty(n)
            lval = 0.0
            for i in range(n):
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                              inputs, n + i, -1, reg)
                if not ok:
                    okrow = False
                    break
                gqd[i] = reg[o, 1]
                lval = reg[o, 0]
        if okrow:
            acal = np.empty(m)
            alpha = np.empty(m)
            for a in range(m):
                t = f_idx[a]
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t,
                              inputs, -1, -1, reg)
                if not ok:
                    okrow = False
                    break
                fval = reg[out_reg[t], 0]
                alpha[a] = mu[a] + fval
                jout[s, a] = gqd[group_idx[a]] - fval
                acal[a] = psi[a]
            if okrow:
                rval = lval
                for a in range(m):
                    for kk in range(k):
                        t = gam_idx[a * k + kk]
                        ok = _eval_hd(code, instr_off, reg0, reg_off,
                                      out_reg, t, inputs, -1, -1, reg)
                        if not ok:
                            okrow = False
                            break
                        acal[a] += reg[out_reg[t], 0] * xds[s, kk]
                    if not okrow:
                        break
                    rval -= alpha[a] * acal[a]
            if okrow:
                # dR/dxd_k = dL/dxd_k - alpha . gamma[:, k]
                e = -rval
                for kk in range(k):
                    gk = gqd[shape_idx[kk]]
                    for a in range(m):
                        t = gam_idx[a * k + kk]
                        ok = _eval_hd(code, instr_off, reg0, reg_off,
                                      out_reg, t, inputs, -1, -1, reg)
                        if not ok:
                            okrow = False
                            break
                        gk -= alpha[a] * reg[out_reg[t], 0]
                    if not okrow:
                        break
                    e += xds[s, kk] * gk
        if okrow:
            eout[s] = e
        else:
            allok = False
            eout[s] = np.nan
            for a in range(m):
                jout[s, a] = np.nan
    return jout, eout, allok


@njit(cache=True)
def magnetic_monitors(code, instr_off, reg0, reg_off, out_reg, tL, f_idx, n,
                      mu, qs, max_reg):
    """Monitors along a magnetic (case C) trajectory.

    Momentum is recomputed from the defining relation at the flow velocity;
    the conserved energy slot carries -R (the reduced function itself is
    the invariant of a magnetic flow).
    """
    ns = qs.shape[0]
    jout = np.empty((ns, n))
    eout = np.empty(ns)
    reg = np.empty((max_reg, 4))
    o = out_reg[tL]
    inputs = np.empty(2 * n)
    allok = True
    for s in range(ns):
        okrow = True
        v, ok = magnetic_rhs(code, instr_off, reg0, reg_off, out_reg, tL,
                             f_idx, n, mu, qs[s], max_reg)
        okrow = ok
        if okrow:
            for i in range(n):
                inputs[i] = qs[s, i]
                inputs[n + i] = v[i]
            lval = 0.0
            gqd = np.empty(n)
            for i in range(n):
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, tL,
                              inputs, n + i, -1, reg)
                if not ok:
                    okrow = False
                    break
                gqd[i] = reg[o, 1]
                lval = reg[o, 0]
        if okrow:
            rval = lval
            for a in range(n):
                t = f_idx[a]
                ok = _eval_hd(code, instr_off, reg0, reg_off, out_reg, t,
                              inputs, -1, -1, reg)
                if not ok:
                    okrow = False
                    break
                fval = reg[out_reg[t], 0]
                jout[s, a] = gqd[a] - fval
                rval -= (mu[a] + fval) * v[a]
        if okrow:
            eout[s] = -rval
        else:
            allok = False
            eout[s] = np.nan
            for a in range(n):
                jout[s, a] = np.nan
    return jout, eout, allok
