"""Dense LU solves for the small matrices this package produces.

Velocity Hessians are at most a handful of rows, so a textbook LU with
partial pivoting is plenty — but silent near-singularity is not acceptable
(a Lagrangian that degenerates mid-trajectory must truncate the run, not
emit garbage), so factorization also estimates the reciprocal condition
number in the 1-norm by solving for the explicit inverse.  That is O(d^3)
extra work, which is nothing at these sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegularityError

__all__ = ["LinearSolveWorkspace", "lu_factor", "lu_solve", "solve", "RCOND_FLOOR"]

# Below this reciprocal condition number a matrix is treated as singular.
RCOND_FLOOR = 1e-12


@dataclass
class LinearSolveWorkspace:
    """Factorization record: packed LU, pivot rows and the rcond estimate."""

    lu: np.ndarray
    piv: np.ndarray
    rcond: float

    @property
    def singular(self) -> bool:
        return not (self.rcond >= RCOND_FLOOR)


def lu_factor(matrix: np.ndarray) -> LinearSolveWorkspace:
    """LU-factor ``matrix`` with partial pivoting.

    Never raises on singular input; inspect ``.singular`` (or call
    :func:`solve`, which does raise) so integrators can truncate cleanly.
    """
    a = np.array(matrix, dtype=np.float64)
    d = a.shape[0]
    if a.shape != (d, d):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    piv = np.arange(d, dtype=np.int64)
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if d else 0.0
    for col in range(d):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if p != col:
            a[[col, p]] = a[[p, col]]
            piv[col], piv[p] = piv[p], piv[col]
        pivot = a[col, col]
        if pivot == 0.0:
            return LinearSolveWorkspace(a, piv, 0.0)
        for row in range(col + 1, d):
            factor = a[row, col] / pivot
            a[row, col] = factor
            a[row, col + 1 :] -= factor * a[col, col + 1 :]
    if d == 0:
        return LinearSolveWorkspace(a, piv, 1.0)
    ws = LinearSolveWorkspace(a, piv, 1.0)
    inv_norm1 = 0.0
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        col_sum = float(np.sum(np.abs(lu_solve(ws, e))))
        inv_norm1 = max(inv_norm1, col_sum)
    ws.rcond = 1.0 / (norm1 * inv_norm1) if norm1 * inv_norm1 > 0.0 else 0.0
    return ws


def lu_solve(ws: LinearSolveWorkspace, rhs: np.ndarray) -> np.ndarray:
    """Back-substitute one right-hand side through a factorization."""
    d = ws.lu.shape[0]
    x = np.array([rhs[ws.piv[i]] for i in range(d)], dtype=np.float64)
    for i in range(d):
        x[i] -= np.dot(ws.lu[i, :i], x[:i])
    for i in range(d - 1, -1, -1):
        x[i] = (x[i] - np.dot(ws.lu[i, i + 1 :], x[i + 1 :])) / ws.lu[i, i]
    return x


def solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs``, raising :class:`RegularityError` when the
    matrix is singular to working precision."""
    ws = lu_factor(matrix)
    if ws.singular:
        raise RegularityError(
            f"matrix is singular to working precision (rcond={ws.rcond:.3e})"
        )
    return lu_solve(ws, np.asarray(rhs, dtype=np.float64))
