"""Compilation of expression trees to flat instruction tapes.

The dynamics kernels cannot walk a Python AST, so expression-backed models
are lowered once into a register machine: a ``(op, a, b)`` instruction
array plus an initial register image.  Registers are laid out as

    [inputs | folded constants | one output slot per instruction]

and instruction ``i`` always writes register ``n_inputs + n_consts + i``,
so the tape needs no explicit destination field.  Parameter references and
any subtree without an input variable are folded to constants at compile
time (parameters are plain numbers by the time a system is built).

A literal or otherwise constant exponent compiles to ``OP_POWC`` so the
kernels can use the power rule, which stays valid for negative bases with
integral exponents; a genuinely variable exponent compiles to ``OP_POWD``
and is evaluated as ``exp(b*log(a))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import exprlang
from .exprlang import Binary, Call, Expr, Num, Unary, Var

__all__ = ["Tape", "TapePack", "compile_tape", "OPCODES"]

OP_ADD = 0
OP_SUB = 1
OP_MUL = 2
OP_DIV = 3
OP_NEG = 4
OP_SIN = 5
OP_COS = 6
OP_TAN = 7
OP_EXP = 8
OP_LOG = 9
OP_SQRT = 10
OP_ABS = 11
OP_POWC = 12
OP_POWD = 13

_CALL_OPS = {
    "sin": OP_SIN,
    "cos": OP_COS,
    "tan": OP_TAN,
    "exp": OP_EXP,
    "log": OP_LOG,
    "sqrt": OP_SQRT,
    "abs": OP_ABS,
}

_BINARY_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}

OPCODES = dict(_CALL_OPS, **{
    "add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV,
    "neg": OP_NEG, "powc": OP_POWC, "powd": OP_POWD,
})


@dataclass(frozen=True)
class Tape:
    """One compiled scalar function of a fixed input vector."""

    code: np.ndarray      # int64 (n_instr, 3) rows of (op, a, b)
    reg0: np.ndarray      # float64 (n_reg,) initial register image
    n_inputs: int
    out_reg: int

    @property
    def n_reg(self) -> int:
        return self.reg0.shape[0]


def compile_tape(
    expr: Expr,
    input_names: Sequence[str],
    params: Mapping[str, float] | None = None,
) -> Tape:
    """Lower ``expr`` to a :class:`Tape` over the given input ordering."""
    params = dict(params or {})
    input_index = {name: i for i, name in enumerate(input_names)}
    n_in = len(input_names)

    const_values: list[float] = []
    const_index: dict[float, int] = {}
    sym_code: list[tuple[int, tuple, tuple | None]] = []

    def const_slot(value: float) -> tuple:
        value = float(value)
        if value not in const_index:
            const_index[value] = len(const_values)
            const_values.append(value)
        return ("c", const_index[value])

    def is_foldable(node: Expr) -> bool:
        return not (exprlang.free_names(node) & input_index.keys())

    def emit(op: int, a: tuple, b: tuple | None) -> tuple:
        sym_code.append((op, a, b))
        return ("t", len(sym_code) - 1)

    def build(node: Expr) -> tuple:
        if is_foldable(node):
            return const_slot(exprlang.evaluate(node, params))
        if isinstance(node, Var):
            return ("i", input_index[node.name])
        if isinstance(node, Unary):
            return emit(OP_NEG, build(node.operand), None)
        if isinstance(node, Binary):
            if node.op == "^" and is_foldable(node.right):
                exponent = const_slot(exprlang.evaluate(node.right, params))
                return emit(OP_POWC, build(node.left), exponent)
            if node.op == "^":
                return emit(OP_POWD, build(node.left), build(node.right))
            return emit(_BINARY_OPS[node.op], build(node.left), build(node.right))
        if isinstance(node, Call):
            return emit(_CALL_OPS[node.fn], build(node.arg), None)
        raise TypeError(f"not an expression node: {node!r}")

    out_sym = build(expr)
    n_consts = len(const_values)

    def resolve(slot: tuple | None) -> int:
        if slot is None:
            return 0
        kind, idx = slot
        if kind == "i":
            return idx
        if kind == "c":
            return n_in + idx
        return n_in + n_consts + idx

    code = np.zeros((len(sym_code), 3), dtype=np.int64)
    for i, (op, a, b) in enumerate(sym_code):
        code[i, 0] = op
        code[i, 1] = resolve(a)
        code[i, 2] = resolve(b)

    reg0 = np.zeros(n_in + n_consts + len(sym_code), dtype=np.float64)
    for j, value in enumerate(const_values):
        reg0[n_in + j] = value

    return Tape(code=code, reg0=reg0, n_inputs=n_in, out_reg=resolve(out_sym))


class TapePack:
    """Several tapes over one shared input vector, packed for the kernels.

    The kernels receive plain arrays (numba cannot take Python objects):
    concatenated code and register images plus per-tape offset tables.
    """

    def __init__(self, tapes: Sequence[Tape]):
        if not tapes:
            raise ValueError("TapePack needs at least one tape")
        n_in = {t.n_inputs for t in tapes}
        if len(n_in) != 1:
            raise ValueError("all tapes in a pack must share the input vector")
        self.n_inputs = n_in.pop()
        self.code = np.ascontiguousarray(np.concatenate([t.code for t in tapes]))
        self.instr_off = np.zeros(len(tapes) + 1, dtype=np.int64)
        self.reg_off = np.zeros(len(tapes) + 1, dtype=np.int64)
        self.out_reg = np.zeros(len(tapes), dtype=np.int64)
        for i, t in enumerate(tapes):
            self.instr_off[i + 1] = self.instr_off[i] + t.code.shape[0]
            self.reg_off[i + 1] = self.reg_off[i] + t.n_reg
            self.out_reg[i] = t.out_reg
        self.reg0 = np.ascontiguousarray(np.concatenate([t.reg0 for t in tapes]))
        self.max_reg = int(max(t.n_reg for t in tapes))

    @property
    def arrays(self) -> tuple:
        """Positional argument block every kernel starts with."""
        return (self.code, self.instr_off, self.reg0, self.reg_off, self.out_reg)
