"""A small arithmetic expression language for model definitions.

Grammar (precedence climbing / Pratt): binary ``+ - * / ^``, unary minus,
parentheses, calls to a fixed set of elementary functions, decimal number
literals with optional exponent, identifiers ``[a-zA-Z_][a-zA-Z0-9_]*``.
``^`` binds tightest and associates to the right; unary minus sits between
``^`` and ``* /``, so ``-q1^2`` is ``-(q1^2)``; ``-`` and ``/`` associate to
the left.

Every identifier must be declared up front (coordinates, velocities,
parameters), which turns typos into parse-time errors with a character
offset instead of mysterious NaNs at run time.  Evaluation is generic over
the scalar type: plain floats, :class:`~routhian.autodiff.Dual` or
:class:`~routhian.autodiff.HyperDual` all work, which is how models defined
as text get exact derivatives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from . import autodiff
from .autodiff import Scalar
from .errors import EvaluationError, ExprSyntaxError, UnknownIdentifierError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "FUNCTIONS",
    "parse",
    "evaluate",
    "to_source",
    "substitute",
    "free_names",
]

FUNCTIONS = {
    "sin": autodiff.sin,
    "cos": autodiff.cos,
    "tan": autodiff.tan,
    "exp": autodiff.exp,
    "log": autodiff.log,
    "sqrt": autodiff.sqrt,
    "abs": autodiff.absval,
}


@dataclass(frozen=True)
class Num:
    value: float
    offset: int = 0


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = 0


@dataclass(frozen=True)
class Unary:
    op: str  # always "-"
    operand: "Expr"
    offset: int = 0


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"
    offset: int = 0


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"
    offset: int = 0


Expr = Union[Num, Var, Unary, Binary, Call]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<op>[+\-*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


# Binding powers.  ^ > unary minus > * / > + -
_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, tokens: list[_Token], declared: frozenset[str]):
        self.tokens = tokens
        self.declared = declared
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(
                f"expected {text!r} but found {tok.text or 'end of input'!r}",
                tok.offset,
            )
        return tok

    def expression(self, min_bp: int) -> Expr:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BP:
                break
            bp = _BP[tok.text]
            if bp <= min_bp:
                break
            self.advance()
            # Right-associative ^ re-enters at bp - 1 so an equal-precedence
            # operator on the right still binds; left-associative ops re-enter
            # at bp and therefore group to the left.
            right = self.expression(bp - 1 if tok.text == "^" else bp)
            left = Binary(tok.text, left, right, tok.offset)
        return left

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "number":
            return Num(float(tok.text), tok.offset)
        if tok.kind == "ident":
            if self.peek().kind == "op" and self.peek().text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(tok.text, tok.offset)
                self.advance()
                arg = self.expression(0)
                self.expect(")")
                return Call(tok.text, arg, tok.offset)
            if tok.text not in self.declared:
                raise UnknownIdentifierError(tok.text, tok.offset)
            return Var(tok.text, tok.offset)
        if tok.kind == "op":
            if tok.text == "-":
                return Unary("-", self.expression(_UNARY_BP), tok.offset)
            if tok.text == "+":
                # Unary plus is harmless; accept and discard it.
                return self.expression(_UNARY_BP)
            if tok.text == "(":
                inner = self.expression(0)
                self.expect(")")
                return inner
        raise ExprSyntaxError(
            f"unexpected token {tok.text or 'end of input'!r}", tok.offset
        )


def parse(src: str, declared: Iterable[str]) -> Expr:
    """Parse ``src`` into an expression tree.

    ``declared`` is the complete set of identifiers allowed as variable or
    parameter references.  Raises :class:`ExprSyntaxError` or
    :class:`UnknownIdentifierError` with a character offset on bad input.
    """
    parser = _Parser(_tokenize(src), frozenset(declared))
    expr = parser.expression(0)
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ExprSyntaxError(
            f"unexpected trailing input {trailing.text!r}", trailing.offset
        )
    return expr


def _pow(a: Scalar, b: Scalar) -> Scalar:
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        value, _, _ = autodiff._pow_coeffs(float(a), float(b), second=False)
        return value
    return a**b


def evaluate(expr: Expr, env: Mapping[str, Scalar]) -> Scalar:
    """Evaluate ``expr`` with variables bound by ``env``.

    The scalar type of the result follows the types in ``env``; number
    literals stay plain floats, so a literal exponent takes the
    power-rule path of the dual arithmetic (valid for negative bases).
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise EvaluationError(
                f"variable '{expr.name}' is not bound (at offset {expr.offset})"
            ) from None
    if isinstance(expr, Unary):
        return -evaluate(expr.operand, env)
    if isinstance(expr, Binary):
        a = evaluate(expr.left, env)
        b = evaluate(expr.right, env)
        try:
            if expr.op == "+":
                return a + b
            if expr.op == "-":
                return a - b
            if expr.op == "*":
                return a * b
            if expr.op == "/":
                if autodiff.value_of(b) == 0.0:
                    raise EvaluationError("division by zero")
                return a / b
            return _pow(a, b)
        except EvaluationError as err:
            raise EvaluationError(f"{err} (at offset {expr.offset})") from None
    if isinstance(expr, Call):
        arg = evaluate(expr.arg, env)
        try:
            return FUNCTIONS[expr.fn](arg)
        except EvaluationError as err:
            raise EvaluationError(f"{err} (at offset {expr.offset})") from None
    raise TypeError(f"not an expression node: {expr!r}")


_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}


def _node_prec(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _PREC[expr.op]
    if isinstance(expr, Unary):
        return _UNARY_BP
    return 100


def to_source(expr: Expr) -> str:
    """Render a tree back to source that parses to an equivalent tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.fn}({to_source(expr.arg)})"
    if isinstance(expr, Unary):
        inner = to_source(expr.operand)
        if _node_prec(expr.operand) < _UNARY_BP:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        left = to_source(expr.left)
        right = to_source(expr.right)
        if expr.op == "^":
            if _node_prec(expr.left) <= prec:
                left = f"({left})"
            if _node_prec(expr.right) < prec:
                right = f"({right})"
        else:
            if _node_prec(expr.left) < prec:
                left = f"({left})"
            if _node_prec(expr.right) <= prec:
                right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression node: {expr!r}")


def substitute(expr: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variable references by whole subtrees (used to build
    composite models such as the zero-momentum functional Lagrangian)."""
    if isinstance(expr, Var) and expr.name in mapping:
        return mapping[expr.name]
    if isinstance(expr, Unary):
        return Unary(expr.op, substitute(expr.operand, mapping), expr.offset)
    if isinstance(expr, Binary):
        return Binary(
            expr.op,
            substitute(expr.left, mapping),
            substitute(expr.right, mapping),
            expr.offset,
        )
    if isinstance(expr, Call):
        return Call(expr.fn, substitute(expr.arg, mapping), expr.offset)
    return expr


def free_names(expr: Expr) -> set[str]:
    """All variable names referenced by ``expr``."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Unary):
        return free_names(expr.operand)
    if isinstance(expr, Binary):
        return free_names(expr.left) | free_names(expr.right)
    if isinstance(expr, Call):
        return free_names(expr.arg)
    return set()
