"""Dual and hyper-dual scalars against closed forms and finite differences."""

import math

import numpy as np
import pytest

from routhian.autodiff import (
    Dual,
    HyperDual,
    absval,
    cos,
    exp,
    grad,
    hessian_block,
    log,
    sin,
    sqrt,
    tan,
    value_of,
)
from routhian.errors import EvaluationError


def fd_derivative(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def test_dual_arithmetic_chain():
    x = Dual(0.7, 1.0)
    y = (x * x + 3.0) / (x - 2.0) - exp(sin(x))
    f = lambda v: (v * v + 3.0) / (v - 2.0) - math.exp(math.sin(v))
    assert y.value == pytest.approx(f(0.7), abs=1e-15)
    assert y.deriv == pytest.approx(fd_derivative(f, 0.7), rel=1e-9)


def test_dual_right_operations():
    x = Dual(1.3, 1.0)
    assert (2.0 / x).deriv == pytest.approx(-2.0 / 1.3**2, rel=1e-14)
    assert (5.0 - x).deriv == -1.0
    assert (1.5 + x).value == pytest.approx(2.8)
    assert (2.0 * x).deriv == 2.0


@pytest.mark.parametrize("p", [2, 3, -1, 0.5, 2.5, 0])
def test_dual_power_rule(p):
    x = Dual(1.7, 1.0)
    y = x**p
    assert y.value == pytest.approx(1.7**p, rel=1e-14)
    assert y.deriv == pytest.approx(p * 1.7 ** (p - 1) if p != 0 else 0.0, rel=1e-13)


def test_power_guards():
    with pytest.raises(EvaluationError):
        Dual(-1.5, 1.0) ** 0.5
    with pytest.raises(EvaluationError):
        Dual(0.0, 1.0) ** (-2)
    # integral powers at negative base are fine
    assert (Dual(-2.0, 1.0) ** 3).value == pytest.approx(-8.0)
    assert (Dual(-2.0, 1.0) ** 3).deriv == pytest.approx(12.0)


def test_hyperdual_second_derivative():
    x = HyperDual(0.9, 1.0, 1.0, 0.0)
    y = exp(x) * sin(x)
    f = lambda v: math.exp(v) * math.sin(v)
    h = 1e-4
    d2 = (f(0.9 + h) - 2.0 * f(0.9) + f(0.9 - h)) / h**2
    assert y.value == pytest.approx(f(0.9), abs=1e-15)
    assert y.d1 == pytest.approx(fd_derivative(f, 0.9), rel=1e-9)
    assert y.d12 == pytest.approx(d2, rel=1e-6)


def test_hyperdual_mixed_partial_symmetry():
    # f(a, b) = exp(a b) / (a + b); d2f/dadb must not depend on seed order
    def build(sa, sb):
        a = HyperDual(0.6, 1.0 if sa == 1 else 0.0, 1.0 if sa == 2 else 0.0, 0.0)
        b = HyperDual(1.1, 1.0 if sb == 1 else 0.0, 1.0 if sb == 2 else 0.0, 0.0)
        return exp(a * b) / (a + b)

    first = build(1, 2)
    second = build(2, 1)
    assert first.d12 == pytest.approx(second.d12, rel=1e-14)
    # cross-check against central differences
    f = lambda a, b: math.exp(a * b) / (a + b)
    h = 1e-4
    fd = (
        f(0.6 + h, 1.1 + h) - f(0.6 + h, 1.1 - h)
        - f(0.6 - h, 1.1 + h) + f(0.6 - h, 1.1 - h)
    ) / (4.0 * h * h)
    assert first.d12 == pytest.approx(fd, rel=1e-7)


def test_hyperdual_division_matches_product_rule():
    rng = np.random.default_rng(3)
    for _ in range(20):
        av, bv = rng.uniform(0.5, 2.0, size=2)
        a = HyperDual(av, 1.0, 0.0, 0.0)
        b = HyperDual(bv, 0.0, 1.0, 0.0)
        left = a / b
        right = a * (b ** (-1))
        assert left.value == pytest.approx(right.value, rel=1e-14)
        assert left.d1 == pytest.approx(right.d1, rel=1e-13)
        assert left.d2 == pytest.approx(right.d2, rel=1e-13)
        assert left.d12 == pytest.approx(right.d12, rel=1e-13)


def test_unary_functions_and_derivatives():
    cases = [
        (sin, math.sin, math.cos, 0.8),
        (cos, math.cos, lambda v: -math.sin(v), 0.8),
        (exp, math.exp, math.exp, 0.3),
        (log, math.log, lambda v: 1.0 / v, 1.9),
        (sqrt, math.sqrt, lambda v: 0.5 / math.sqrt(v), 2.3),
        (tan, math.tan, lambda v: 1.0 / math.cos(v) ** 2, 0.4),
    ]
    for fn, ref, dref, at in cases:
        out = fn(Dual(at, 1.0))
        assert out.value == pytest.approx(ref(at), rel=1e-14)
        assert out.deriv == pytest.approx(dref(at), rel=1e-13)


def test_domain_errors():
    with pytest.raises(EvaluationError):
        log(Dual(-1.0, 1.0))
    with pytest.raises(EvaluationError):
        sqrt(Dual(-4.0, 1.0))
    with pytest.raises(EvaluationError):
        absval(Dual(0.0, 1.0))  # kink: derivative undefined
    assert absval(Dual(-2.0, 1.0)).deriv == -1.0
    assert absval(3.5) == 3.5


def test_value_of_unwraps_all_levels():
    assert value_of(4.2) == 4.2
    assert value_of(Dual(1.5, 2.0)) == 1.5
    assert value_of(HyperDual(0.25, 1.0, 2.0, 3.0)) == 0.25


def test_grad_matches_analytic():
    fn = lambda v: v[0] * v[0] * v[1] + sin(v[2])
    g = grad(fn, np.array([1.2, -0.7, 0.4]))
    assert np.allclose(g, [2 * 1.2 * (-0.7), 1.2**2, math.cos(0.4)], atol=1e-13)


def test_hessian_block_full_and_mixed():
    fn = lambda v: v[0] ** 3 * v[1] + exp(v[1] * v[2])
    pt = np.array([0.8, 1.1, -0.4])
    full = hessian_block(fn, pt, [0, 1, 2], [0, 1, 2])
    assert np.allclose(full, full.T, atol=1e-14)
    assert full[0, 0] == pytest.approx(6 * 0.8 * 1.1, rel=1e-13)
    assert full[0, 1] == pytest.approx(3 * 0.8**2, rel=1e-13)
    mixed = hessian_block(fn, pt, [0], [1, 2])
    assert mixed.shape == (1, 2)
    assert mixed[0, 0] == pytest.approx(3 * 0.8**2, rel=1e-13)
    assert mixed[0, 1] == pytest.approx(0.0, abs=1e-14)
