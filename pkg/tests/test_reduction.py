"""Momentum solve, Routhian, gyroscopic data, and case classification."""

import numpy as np
import pytest

from routhian import exprlang, model, reduction
from routhian.errors import (
    ConvergenceError,
    DimensionError,
    RegularityError,
    ScenarioError,
    UnsupportedCaseError,
)
from routhian.model import LagrangianSystem, State, build_symmetry
from routhian.reduction import ReductionCase


def charged_particle(mu=(1.0, 0.0)):
    sys = LagrangianSystem.from_source(
        2,
        "1/2*m*(qd1^2 + qd2^2) + e*B*(qd1*q2 - qd2*q1)",
        {"m": 1.0, "e": 1.0, "B": 1.0},
    )
    sym = build_symmetry(sys, [0, 1], f=["-e*B*q2", "e*B*q1"])
    return reduction.reduce_system(sys, sym, list(mu))


def quasi_cyclic(mu=0.5):
    sys = LagrangianSystem.from_source(
        2, "1/2*(qd1^2 + qd2^2) + (qd1 - qd2)*exp(q1 - q2)", {}
    )
    sym = build_symmetry(
        sys, [0], f=["exp(q1 - q2)"], gamma=[["-1"]],
        F=["(exp(s) - 1)*exp(q1 - q2)"],
    )
    return reduction.reduce_system(sys, sym, [mu])


def curved_gamma(mu=1.0):
    sys = LagrangianSystem.from_source(
        3,
        "1/2*(qd1^2 + qd2^2 + qd3^2) + 1/2*q2*qd1*qd3 - 1/2*(q2^2 + q3^2)",
        {},
    )
    sym = build_symmetry(sys, [0], gamma=[["0", "q2"]], box=[[-0.5, 0.5]] * 6)
    return reduction.reduce_system(sys, sym, [mu])


# --------------------------------------------------------------------------
# classification


def test_classify_all_cases():
    assert charged_particle().case is ReductionCase.MAGNETIC
    assert quasi_cyclic().case is ReductionCase.QUASI_CYCLIC
    assert curved_gamma().case is ReductionCase.STRICT_CYCLIC


def test_classify_numerically_zero_f_counts_as_strict():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    sym = build_symmetry(sys, [0], f=["q2 - q2"])  # vanishes identically
    red = reduction.reduce_system(sys, sym, [0.3])
    assert red.case is ReductionCase.STRICT_CYCLIC


def test_classify_rejects_partial_rank_with_rank_in_message():
    sys = LagrangianSystem.from_source(
        3, "1/2*(qd1^2 + qd2^2 + qd3^2) + qd1*q2 - qd2*q1", {}
    )
    sym = build_symmetry(sys, [0, 1], f=["-q2", "q1"])
    with pytest.raises(UnsupportedCaseError, match="rank 2"):
        reduction.reduce_system(sys, sym, [0.0, 0.0])


def test_classify_rejects_nondegenerate_sigma_on_proper_subgroup():
    # m = n is required for the magnetic route even at full sigma rank
    sys = LagrangianSystem.from_source(
        3, "1/2*(qd1^2 + qd2^2 + qd3^2) + qd1*q2 - qd2*q1 + qd3*q3", {}
    )
    sym = build_symmetry(sys, [0, 1], f=["-q2", "q1"])
    with pytest.raises(UnsupportedCaseError):
        reduction.reduce_system(sys, sym, [0.0, 0.0])


def test_momentum_length_validated():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    sym = build_symmetry(sys, [0])
    with pytest.raises(DimensionError):
        reduction.reduce_system(sys, sym, [1.0, 2.0])


# --------------------------------------------------------------------------
# momentum solve


def test_solve_velocity_linear_momentum_relation():
    red = charged_particle()
    # m qd1 + e B q2 = mu1 - e B q2  =>  qd1 = mu1 - 2 q2 (m = e = B = 1)
    psi = red.solve_velocity([0.3, -0.4], [])
    np.testing.assert_allclose(psi, [1.0 + 0.8, 0.6], atol=1e-14)


def bisect_root(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def test_solve_velocity_cubic_relation_against_bisection():
    # dL/dqd1 = qd1 + qd1^3, held to mu = 2: the root of w + w^3 = 2 is
    # exactly 1 (2 - 1 - 1 = 0), and an independent bisection agrees.
    sys = LagrangianSystem.from_source(
        2, "1/2*qd2^2 + 1/2*qd1^2 + 1/4*qd1^4", {}
    )
    sym = build_symmetry(sys, [0])
    oracle = bisect_root(lambda w: w + w**3 - 2.0, 0.0, 2.0)
    assert oracle == pytest.approx(1.0, abs=1e-14)
    psi = reduction.solve_velocity(sys, sym, [0.0], [0.0], [2.0])
    assert psi[0] == pytest.approx(oracle, abs=1e-12)
    assert psi[0] == pytest.approx(1.0, abs=1e-12)


def test_solve_velocity_respects_f_and_shape_velocity():
    red = quasi_cyclic(mu=0.5)
    # dL/dqd1 = qd1 + exp(q1 - q2) = mu + exp(q1 - q2)  =>  qd1 = mu always
    for x, xd in [(0.0, 0.2), (1.3, -0.7), (-0.8, 0.05)]:
        psi = red.solve_velocity([x], [xd])
        assert psi[0] == pytest.approx(0.5, abs=1e-13)


def test_solve_velocity_singular_hessian_raises():
    sys = LagrangianSystem.from_source(2, "qd1*q2 + 1/2*qd2^2", {})
    sym = build_symmetry(sys, [0])
    with pytest.raises(RegularityError):
        reduction.solve_velocity(sys, sym, [1.0], [0.0], [0.7])


# --------------------------------------------------------------------------
# Routhian and its gradient


def test_routhian_magnetic_closed_form():
    red = charged_particle(mu=(1.0, 0.0))
    rng = np.random.default_rng(42)
    for _ in range(100):
        q = rng.uniform(-2.0, 2.0, size=2)
        want = -0.5 * ((1.0 - 2.0 * q[1]) ** 2 + (0.0 + 2.0 * q[0]) ** 2)
        assert red.routhian(q, []) == pytest.approx(want, abs=1e-12)


def test_routhian_quasi_cyclic_closed_form_and_section_independence():
    red = quasi_cyclic(mu=0.5)
    for xd in (-0.7, 0.0, 0.4, 1.2):
        want = 0.5 * xd**2 + 0.5 * xd - 0.5 * 0.25
        base = red.routhian([0.9], [xd])
        assert base == pytest.approx(want, abs=1e-13)
        for off in (-2.0, 0.7, 5.0):
            shifted = red.routhian([0.9], [xd], group_offset=[off])
            assert abs(shifted - base) <= 1e-9


def test_routhian_free_cyclic_closed_form():
    sys = LagrangianSystem.from_source(2, "1/2*(qd1^2 + qd2^2)", {})
    sym = build_symmetry(sys, [1])  # make the second slot the group one
    red = reduction.reduce_system(sys, sym, [2.0])
    # R = 1/2 xd^2 - mu^2/2
    assert red.routhian([0.3], [0.8]) == pytest.approx(0.5 * 0.64 - 2.0, abs=1e-14)


def test_routhian_grad_matches_finite_differences():
    rng = np.random.default_rng(9)
    red = curved_gamma(mu=1.0)
    h = 1e-6
    for _ in range(5):
        x = rng.uniform(-0.3, 0.3, size=2)
        xd = rng.uniform(-0.8, 0.8, size=2)
        dx, dxd = red.routhian_grad(x, xd)
        for s in range(2):
            e = np.zeros(2)
            e[s] = h
            fd_x = (red.routhian(x + e, xd) - red.routhian(x - e, xd)) / (2 * h)
            fd_xd = (red.routhian(x, xd + e) - red.routhian(x, xd - e)) / (2 * h)
            assert dx[s] == pytest.approx(fd_x, rel=2e-6, abs=2e-7)
            assert dxd[s] == pytest.approx(fd_xd, rel=2e-6, abs=2e-7)


def test_routhian_grad_magnetic_matches_closed_form():
    red = charged_particle(mu=(1.0, 0.0))
    q = np.array([0.3, -0.4])
    dx, dxd = red.routhian_grad(q, [])
    # grad of -((mu1 - 2y)^2 + (mu2 + 2x)^2)/2
    np.testing.assert_allclose(
        dx, [-2.0 * (0.0 + 2 * 0.3), 2.0 * (1.0 - 2 * (-0.4))], atol=1e-12
    )
    assert dxd.size == 0


# --------------------------------------------------------------------------
# gyroscopic 2-form


def test_gyroscopic_magnetic_golden():
    red = charged_particle()
    rng = np.random.default_rng(1)
    for _ in range(5):
        q = rng.uniform(-3, 3, size=2)
        np.testing.assert_allclose(
            red.gyro(q), [[0.0, 2.0], [-2.0, 0.0]], atol=1e-13
        )


def test_gyroscopic_strict_cyclic_from_curved_connection():
    red = curved_gamma(mu=1.0)
    # B_ks = mu (dGamma_s/dx^k - dGamma_k/dx^s); Gamma = (0, x1)
    np.testing.assert_allclose(
        red.gyro([0.2, 0.1]), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-14
    )
    half = curved_gamma(mu=0.5)
    np.testing.assert_allclose(
        half.gyro([0.0, 0.0]), [[0.0, 0.5], [-0.5, 0.0]], atol=1e-14
    )


def test_gyroscopic_quasi_cyclic_constant_connection_cancels():
    # with Gamma constant and f' parallel to Gamma the two halves coincide,
    # so the form vanishes identically
    sys = LagrangianSystem.from_source(
        3,
        "1/2*(qd1^2 + qd2^2 + qd3^2) + (qd1 - qd2 - 2*qd3)*exp(q1 - q2 - 2*q3)",
        {},
    )
    sym = build_symmetry(
        sys, [0], f=["exp(q1 - q2 - 2*q3)"], gamma=[["-1", "-2"]]
    )
    red = reduction.reduce_system(sys, sym, [0.4])
    assert red.case is ReductionCase.QUASI_CYCLIC
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, size=2)
        np.testing.assert_allclose(red.gyro(x), np.zeros((2, 2)), atol=1e-13)


def test_gyroscopic_one_dimensional_shape_is_zero():
    red = quasi_cyclic()
    np.testing.assert_allclose(red.gyro([0.7]), [[0.0]], atol=1e-15)


# --------------------------------------------------------------------------
# functional mode


def functional_toy():
    sys = LagrangianSystem.from_source(
        2, "1/2*qd1^2 + 1/2*qd2^2 - 1/2*q1^2 + 1/2*q2^2", {}
    )
    fspec = reduction.build_functional(
        sys, 1, "-q2", [["1", "0"], ["0", "1"]], "1/2*q1^2"
    )
    return sys, fspec


def test_functional_momentum_golden():
    sys, fspec = functional_toy()
    st = State(0.0, np.array([1.0, 0.4]), np.array([0.0, -0.4]))
    assert reduction.functional_momentum(sys, fspec, st) == pytest.approx(0.0, abs=1e-15)
    st2 = State(0.0, np.array([0.2, -1.1]), np.array([0.7, 0.3]))
    # J = phid - lambda(phi) = 0.3 - 1.1
    assert reduction.functional_momentum(sys, fspec, st2) == pytest.approx(-0.8)


def test_functional_routhian_golden_and_phi_independence():
    sys, fspec = functional_toy()
    for th, thd in [(0.3, -1.1), (1.0, 0.0)]:
        want = 0.5 * thd**2 - 0.5 * th**2
        vals = [
            reduction.functional_routhian(sys, fspec, [th], [thd], off)
            for off in (0.0, -0.7, 1.3)
        ]
        assert max(abs(v - want) for v in vals) < 1e-14


def test_functional_lagrangian_is_reduced_system():
    sys, fspec = functional_toy()
    lsys = reduction.functional_lagrangian(sys, fspec)
    assert lsys.n == 1
    assert exprlang.free_names(lsys.lagrangian) <= {"q1", "qd1"}
    for th, thd in [(0.7, -0.2), (-1.4, 0.9)]:
        got = float(lsys.evaluate([th], [thd]))
        assert got == pytest.approx(0.5 * thd**2 - 0.5 * th**2, abs=1e-14)


def test_functional_checks_pass_on_toy():
    sys, fspec = functional_toy()
    entries = reduction.check_functional(sys, fspec)
    assert [e.name for e in entries] == [
        "functional_consistency",
        "functional_regularity",
        "functional_independence",
    ]
    assert all(e.passed for e in entries)
    assert entries[2].tolerance == 1e-9


def test_functional_checks_catch_wrong_potential():
    sys, _ = functional_toy()
    bad = reduction.build_functional(
        sys, 1, "-q2", [["1", "0"], ["0", "1"]], "q1^2"
    )
    entries = reduction.check_functional(sys, bad)
    assert not entries[0].passed


def test_functional_checks_catch_degenerate_mass():
    sys, _ = functional_toy()
    bad = reduction.build_functional(
        sys, 1, "-q2", [["1", "0"], ["0", "0"]], "1/2*q1^2"
    )
    entries = reduction.check_functional(sys, bad)
    by_name = {e.name: e for e in entries}
    assert not by_name["functional_regularity"].passed
    assert not by_name["functional_independence"].passed  # inf, not a crash


def test_functional_rejects_nonzero_momentum():
    sys, fspec = functional_toy()
    with pytest.raises(ScenarioError):
        reduction.reduce_system(sys, None, [0.2], fspec=fspec)


def test_functional_mass_must_be_square():
    sys, _ = functional_toy()
    with pytest.raises(DimensionError):
        reduction.build_functional(sys, 1, "-q2", [["1", "0"]], "1/2*q1^2")
    with pytest.raises(DimensionError):
        reduction.build_functional(
            sys, 5, "-q2", [["1", "0"], ["0", "1"]], "1/2*q1^2"
        )


def test_functional_regularity_error_at_zero_mass_point():
    sys = LagrangianSystem.from_source(
        2, "1/2*qd1^2 + 1/2*q1*qd2^2 - 1/2*q1^2", {}
    )
    fspec = reduction.build_functional(
        sys, 1, "0", [["1", "0"], ["0", "q1"]], "1/2*q1^2"
    )
    with pytest.raises(RegularityError):
        reduction.functional_routhian(sys, fspec, [0.0], [0.3])


# --------------------------------------------------------------------------
# container behavior


def test_reduced_system_shape_dims():
    assert charged_particle().shape_dim == 2
    assert quasi_cyclic().shape_dim == 1
    assert curved_gamma().shape_dim == 2
    sys, fspec = functional_toy()
    red = reduction.reduce_system(sys, None, [0.0], fspec=fspec)
    assert red.shape_dim == 1
    assert red.case is ReductionCase.FUNCTIONAL
    np.testing.assert_allclose(red.gyro([0.3]), [[0.0]])
    assert red.routhian([0.3], [-1.1]) == pytest.approx(0.5 * 1.21 - 0.5 * 0.09)


def test_reduce_requires_some_structure():
    sys = LagrangianSystem.from_source(1, "1/2*qd1^2", {})
    with pytest.raises(ScenarioError):
        reduction.reduce_system(sys, None, [0.0])
