"""Forward-mode automatic differentiation on 64-bit floats.

Two scalar carriers:

* :class:`Dual` propagates a value and one directional derivative.
* :class:`HyperDual` propagates a value, two directional derivatives and the
  mixed second derivative, so a single evaluation of ``f`` yields an exact
  Hessian entry (no truncation error, unlike finite differences).

Arithmetic mixes freely with ``int``/``float``; seeding every derivative
slot with zero reproduces ordinary float arithmetic bit for bit for
``+ - *``.  The elementary function set is fixed: sin, cos, tan, exp, log,
sqrt, abs.  Domain violations raise :class:`~routhian.errors.EvaluationError`
rather than returning NaN, because a NaN deep inside an integrator is much
harder to diagnose than an exception at the offending call.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence, Union

import numpy as np

from .errors import EvaluationError

Number = Union[int, float]

__all__ = [
    "Dual",
    "HyperDual",
    "grad",
    "hessian_block",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "absval",
    "value_of",
]


def _pow_coeffs(v: float, p: float, second: bool) -> tuple[float, float, float]:
    """Value and chain-rule coefficients of v**p for a constant exponent p.

    Returns ``(v**p, p*v**(p-1), p*(p-1)*v**(p-2))``; the last entry is only
    meaningful when ``second`` is true.  Raises on non-differentiable points
    (negative base with fractional exponent, zero base with an exponent that
    makes a derivative blow up).
    """
    if v < 0.0 and p != round(p):
        raise EvaluationError(
            f"cannot raise negative base {v!r} to fractional power {p!r}"
        )
    if v == 0.0:
        if p < 0.0:
            raise EvaluationError("zero base with negative exponent")
        if p == 0.0:
            return 1.0, 0.0, 0.0
        # p > 0: value is 0; first derivative exists only for p >= 1,
        # second only for p >= 2 (p == 1 has zero second derivative).
        if p < 1.0:
            raise EvaluationError(
                f"derivative of x**{p!r} is unbounded at x = 0"
            )
        c1 = 1.0 if p == 1.0 else 0.0
        if second and 1.0 < p < 2.0:
            raise EvaluationError(
                f"second derivative of x**{p!r} is unbounded at x = 0"
            )
        c2 = 2.0 if p == 2.0 else 0.0
        return 0.0, c1, c2
    value = v**p
    c1 = p * v ** (p - 1.0)
    c2 = p * (p - 1.0) * v ** (p - 2.0) if second else 0.0
    return value, c1, c2


class Dual:
    """First-order dual number ``value + deriv * eps`` with ``eps**2 == 0``."""

    __slots__ = ("value", "deriv")

    def __init__(self, value: float, deriv: float = 0.0):
        self.value = float(value)
        self.deriv = float(deriv)

    @staticmethod
    def _coerce(other) -> "Dual | None":
        if isinstance(other, Dual):
            return other
        if isinstance(other, (int, float)):
            return Dual(other, 0.0)
        return None

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.deriv!r})"

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.deriv)

    def __pos__(self) -> "Dual":
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(o.value - self.value, o.deriv - self.deriv)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Dual(self.value * o.value, self.value * o.deriv + self.deriv * o.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.value == 0.0:
            raise EvaluationError("division by zero")
        v = self.value / o.value
        return Dual(v, (self.deriv - v * o.deriv) / o.value)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, other):
        if isinstance(other, (int, float)):
            v, c1, _ = _pow_coeffs(self.value, float(other), second=False)
            return Dual(v, c1 * self.deriv)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return exp(o * log(self))

    def __rpow__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__pow__(self)

    def __abs__(self) -> "Dual":
        if self.value == 0.0:
            raise EvaluationError("abs is not differentiable at 0")
        s = 1.0 if self.value > 0.0 else -1.0
        return Dual(abs(self.value), s * self.deriv)

    # Elementary functions (also reachable via the module-level wrappers).

    def sin(self) -> "Dual":
        return Dual(math.sin(self.value), math.cos(self.value) * self.deriv)

    def cos(self) -> "Dual":
        return Dual(math.cos(self.value), -math.sin(self.value) * self.deriv)

    def tan(self) -> "Dual":
        c = math.cos(self.value)
        if c == 0.0:
            raise EvaluationError("tan is singular at this point")
        return Dual(math.tan(self.value), self.deriv / (c * c))

    def exp(self) -> "Dual":
        e = math.exp(self.value)
        return Dual(e, e * self.deriv)

    def log(self) -> "Dual":
        if self.value <= 0.0:
            raise EvaluationError(f"log of non-positive value {self.value!r}")
        return Dual(math.log(self.value), self.deriv / self.value)

    def sqrt(self) -> "Dual":
        if self.value < 0.0:
            raise EvaluationError(f"sqrt of negative value {self.value!r}")
        if self.value == 0.0:
            raise EvaluationError("sqrt is not differentiable at 0")
        r = math.sqrt(self.value)
        return Dual(r, self.deriv / (2.0 * r))


class HyperDual:
    """Second-order number ``value + d1*e1 + d2*e2 + d12*e1*e2``.

    ``e1**2 == e2**2 == 0`` but ``e1*e2`` survives, so seeding ``d1`` along
    direction *u* and ``d2`` along direction *v* makes ``d12`` carry the
    exact mixed second derivative d2f/(du dv).  The ``d12`` update rules
    group the two cross terms so that swapping the seed directions gives a
    bit-for-bit identical result.
    """

    __slots__ = ("value", "d1", "d2", "d12")

    def __init__(self, value: float, d1: float = 0.0, d2: float = 0.0, d12: float = 0.0):
        self.value = float(value)
        self.d1 = float(d1)
        self.d2 = float(d2)
        self.d12 = float(d12)

    @staticmethod
    def _coerce(other) -> "HyperDual | None":
        if isinstance(other, HyperDual):
            return other
        if isinstance(other, (int, float)):
            return HyperDual(other)
        return None

    def __repr__(self) -> str:
        return f"HyperDual({self.value!r}, {self.d1!r}, {self.d2!r}, {self.d12!r})"

    def _chain(self, f0: float, c1: float, c2: float) -> "HyperDual":
        """Apply a univariate function with value f0, derivative c1, second c2."""
        return HyperDual(
            f0,
            c1 * self.d1,
            c1 * self.d2,
            c1 * self.d12 + c2 * (self.d1 * self.d2),
        )

    def __neg__(self) -> "HyperDual":
        return HyperDual(-self.value, -self.d1, -self.d2, -self.d12)

    def __pos__(self) -> "HyperDual":
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return HyperDual(
            self.value + o.value, self.d1 + o.d1, self.d2 + o.d2, self.d12 + o.d12
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return HyperDual(
            self.value - o.value, self.d1 - o.d1, self.d2 - o.d2, self.d12 - o.d12
        )

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__sub__(self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return HyperDual(
            self.value * o.value,
            self.value * o.d1 + self.d1 * o.value,
            self.value * o.d2 + self.d2 * o.value,
            (self.value * o.d12 + self.d12 * o.value)
            + (self.d1 * o.d2 + self.d2 * o.d1),
        )

    __rmul__ = __mul__

    def _reciprocal(self) -> "HyperDual":
        if self.value == 0.0:
            raise EvaluationError("division by zero")
        inv = 1.0 / self.value
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.__mul__(o._reciprocal())

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__mul__(self._reciprocal())

    def __pow__(self, other):
        if isinstance(other, (int, float)):
            v, c1, c2 = _pow_coeffs(self.value, float(other), second=True)
            return self._chain(v, c1, c2)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return exp(o * log(self))

    def __rpow__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o.__pow__(self)

    def __abs__(self) -> "HyperDual":
        if self.value == 0.0:
            raise EvaluationError("abs is not differentiable at 0")
        s = 1.0 if self.value > 0.0 else -1.0
        return self._chain(abs(self.value), s, 0.0)

    def sin(self) -> "HyperDual":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> "HyperDual":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(c, -s, -c)

    def tan(self) -> "HyperDual":
        c = math.cos(self.value)
        if c == 0.0:
            raise EvaluationError("tan is singular at this point")
        t = math.tan(self.value)
        sec2 = 1.0 / (c * c)
        return self._chain(t, sec2, 2.0 * sec2 * t)

    def exp(self) -> "HyperDual":
        e = math.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> "HyperDual":
        if self.value <= 0.0:
            raise EvaluationError(f"log of non-positive value {self.value!r}")
        inv = 1.0 / self.value
        return self._chain(math.log(self.value), inv, -inv * inv)

    def sqrt(self) -> "HyperDual":
        if self.value < 0.0:
            raise EvaluationError(f"sqrt of negative value {self.value!r}")
        if self.value == 0.0:
            raise EvaluationError("sqrt is not differentiable at 0")
        r = math.sqrt(self.value)
        c1 = 0.5 / r
        return self._chain(r, c1, -0.5 * c1 / self.value)


Scalar = Union[Number, Dual, HyperDual]


def sin(x: Scalar) -> Scalar:
    return x.sin() if isinstance(x, (Dual, HyperDual)) else math.sin(x)


def cos(x: Scalar) -> Scalar:
    return x.cos() if isinstance(x, (Dual, HyperDual)) else math.cos(x)


def tan(x: Scalar) -> Scalar:
    if isinstance(x, (Dual, HyperDual)):
        return x.tan()
    c = math.cos(x)
    if c == 0.0:
        raise EvaluationError("tan is singular at this point")
    return math.tan(x)


def exp(x: Scalar) -> Scalar:
    return x.exp() if isinstance(x, (Dual, HyperDual)) else math.exp(x)


def log(x: Scalar) -> Scalar:
    if isinstance(x, (Dual, HyperDual)):
        return x.log()
    if x <= 0.0:
        raise EvaluationError(f"log of non-positive value {x!r}")
    return math.log(x)


def sqrt(x: Scalar) -> Scalar:
    if isinstance(x, (Dual, HyperDual)):
        return x.sqrt()
    if x < 0.0:
        raise EvaluationError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def absval(x: Scalar) -> Scalar:
    return abs(x)


def value_of(x: Scalar) -> float:
    """Strip any derivative payload and return the plain float value."""
    if isinstance(x, (Dual, HyperDual)):
        return x.value
    return float(x)


def grad(fn: Callable[[Sequence[Scalar]], Scalar], point: Sequence[float]) -> np.ndarray:
    """Gradient of ``fn`` at ``point`` by k single-seed forward passes.

    ``fn`` receives a list of scalars and returns one scalar; it must be
    built from the supported arithmetic and elementary functions.
    """
    base = [float(x) for x in point]
    out = np.empty(len(base))
    for i in range(len(base)):
        args = [Dual(v, 1.0 if j == i else 0.0) for j, v in enumerate(base)]
        r = fn(args)
        out[i] = r.deriv if isinstance(r, Dual) else 0.0
    return out


def hessian_block(
    fn: Callable[[Sequence[Scalar]], Scalar],
    point: Sequence[float],
    rows: Sequence[int],
    cols: Sequence[int],
) -> np.ndarray:
    """Second-derivative block ``H[i, j] = d2 fn / (dx[rows[i]] dx[cols[j]])``.

    One hyper-dual evaluation per entry; when ``rows == cols`` only the upper
    triangle is evaluated and mirrored, so the returned block is exactly
    symmetric.
    """
    base = [float(x) for x in point]
    rows = list(rows)
    cols = list(cols)
    out = np.empty((len(rows), len(cols)))
    symmetric = rows == cols

    def entry(r: int, c: int) -> float:
        args = [
            HyperDual(v, 1.0 if j == r else 0.0, 1.0 if j == c else 0.0)
            for j, v in enumerate(base)
        ]
        res = fn(args)
        return res.d12 if isinstance(res, HyperDual) else 0.0

    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            if symmetric and j < i:
                out[i, j] = out[j, i]
            else:
                out[i, j] = entry(r, c)
    return out
