"""Tests for the scalar fractional ODE stepper and its theory helpers."""

import math

import numpy as np
import pytest

from subdiff.l1op import l1_row
from subdiff.mesh import build_graded
from subdiff.ode import (
    ScalarProblem,
    StepConditionError,
    solve_ode,
    solve_relaxed_linear,
    solve_step_scalar,
    stability_envelope,
    step_condition_ok,
    theoretical_bound,
)
from subdiff.problems import cubic_scheme
from subdiff.problems import test_a_problem as make_test_a
from subdiff.schemes import make_scheme


def mittag_leffler(alpha: float, z: float, terms: int = 200) -> float:
    """E_alpha(z) by its power series; fine for moderate |z|."""
    acc = 0.0
    for k in range(terms):
        g = math.gamma(alpha * k + 1.0)
        if math.isinf(g):
            break
        acc += z**k / g
    return acc


def test_catalog_problem_exact_for_linear_solution():
    # sigma = 1 makes the solution piecewise linear on every mesh, where the
    # operator is exact, so the only error left is rounding
    problem = make_test_a(0.5, 1.0)
    mesh = build_graded(64, 2.0, 1.0)
    traj = solve_ode(problem, mesh)
    np.testing.assert_allclose(traj.values, mesh.points, rtol=0.0, atol=1e-10)


def test_catalog_problem_convergence_rate():
    problem = make_test_a(0.4, 0.8)
    errors = []
    for M in (256, 512):
        mesh = build_graded(M, 2.0, 1.0)
        traj = solve_ode(problem, mesh)
        errors.append(float(np.max(traj.errors(problem.exact))))
    rate = math.log2(errors[0] / errors[1])
    # optimal grading gives the rate min(2 - alpha, r nu) = 1.6
    assert 1.4 <= rate <= 1.75


def test_linear_problem_against_mittag_leffler():
    # d^alpha u + u = 0, u(0) = 1 has the closed solution E_alpha(-t^alpha);
    # the series is an oracle independent of every mesh quantity
    alpha = 0.5
    scheme = make_scheme("implicit", lambda v: v, fp=lambda v: np.ones_like(
        np.asarray(v, dtype=float)), solution_range=(-0.5, 1.5))
    problem = ScalarProblem(alpha=alpha, scheme=scheme, g=lambda t: 0.0, u0=1.0, T=1.0)
    final_errors = []
    global_errors = []
    for M in (512, 1024):
        mesh = build_graded(M, 2.0, 1.0)
        traj = solve_ode(problem, mesh)
        exact = np.array([mittag_leffler(alpha, -tm**alpha) for tm in mesh.points])
        final_errors.append(abs(traj.values[-1] - exact[-1]))
        global_errors.append(float(np.max(np.abs(traj.values - exact))))
    # pointwise at T = 1 the rate is 2 - alpha; globally the initial layer
    # limits it to r sigma = 1 for this grading (sigma = alpha here)
    final_rate = math.log2(final_errors[0] / final_errors[1])
    global_rate = math.log2(global_errors[0] / global_errors[1])
    assert final_rate == pytest.approx(2.0 - alpha, abs=0.2)
    assert global_rate == pytest.approx(1.0, abs=0.15)
    assert global_errors[-1] < 5e-3


def test_step_solve_residual_nonlinear():
    scheme = cubic_scheme("implicit")
    for rhs in (-3.0, 0.0, 0.4, 12.0):
        u = solve_step_scalar(2.0, scheme.lambda0, scheme, w=0.1, rhs=rhs)
        residual = 2.0 * u + scheme.F(u, 0.1) - rhs
        assert abs(residual) <= 1e-12 * (1.0 + abs(rhs))


def test_step_solve_without_derivative_falls_back_to_bisection():
    scheme = make_scheme("implicit", lambda v: v**3 - v)
    u = solve_step_scalar(2.0, scheme.lambda0, scheme, w=0.1, rhs=0.7)
    residual = 2.0 * u + scheme.F(u, 0.1) - 0.7
    assert abs(residual) <= 1e-12 * 1.7


def test_step_solve_affine_is_direct():
    scheme = cubic_scheme("imex2")
    w, rhs, kappa = -0.4, 1.3, 6.0
    u = solve_step_scalar(kappa, scheme.lambda0, scheme, w=w, rhs=rhs)
    residual = kappa * u + scheme.F(u, w) - rhs
    assert abs(residual) <= 1e-12 * (1.0 + abs(rhs))


def test_step_solve_rejects_nonmonotone_setup():
    scheme = cubic_scheme("implicit")
    with pytest.raises(StepConditionError):
        solve_step_scalar(0.5, 1.0, scheme, w=0.0, rhs=0.0)


def test_step_condition_gate():
    mesh = build_graded(4, 1.0, 8.0)  # tau = 2
    assert step_condition_ok(mesh, 0.5, 0.0)
    assert not step_condition_ok(mesh, 0.5, 1.0)
    # tau = 1, alpha = 0.5: the threshold is 1/Gamma(1.5) ~ 1.128
    unit = build_graded(1, 1.0, 1.0)
    assert step_condition_ok(unit, 0.5, 1.0)
    assert not step_condition_ok(unit, 0.5, 2.0)
    problem = ScalarProblem(alpha=0.5, scheme=cubic_scheme("implicit"),
                            g=lambda t: 0.0, u0=0.0, T=8.0)
    with pytest.raises(StepConditionError):
        solve_ode(problem, mesh)


def test_solver_checks_horizon():
    problem = make_test_a(0.4, 0.8, T=1.0)
    with pytest.raises(ValueError, match="horizon"):
        solve_ode(problem, build_graded(16, 2.0, 2.0))


def test_relaxed_linear_against_dense_solve():
    # assemble the lower-triangular system explicitly and solve it by LU,
    # a different path than the forward recurrence
    rng = np.random.default_rng(31)
    mesh = build_graded(40, 2.5, 1.3)
    alpha, lam0, lam1 = 0.6, 0.3, 0.8
    rhs = rng.normal(size=40)
    v0 = 0.7
    got = solve_relaxed_linear(mesh, alpha, lam0, lam1, rhs, v0)

    M = mesh.M
    A = np.zeros((M, M))
    b = rhs.copy()
    for m in range(1, M + 1):
        row = l1_row(mesh, alpha, m)
        A[m - 1, m - 1] = row.kappa_mm - lam0
        if m > 1:
            A[m - 1, : m - 1] -= row.kappa[1:]
            A[m - 1, m - 2] -= lam1
        b[m - 1] += row.kappa[0] * v0
        if m == 1:
            b[0] += lam1 * v0
    dense = np.linalg.solve(A, b)
    np.testing.assert_allclose(got[1:], dense, rtol=1e-10, atol=1e-12)
    assert got[0] == v0


def test_relaxed_linear_validation():
    mesh = build_graded(8, 1.0, 8.0)
    with pytest.raises(ValueError, match="one entry per step"):
        solve_relaxed_linear(mesh, 0.5, 0.0, 0.0, np.zeros(5))
    with pytest.raises(StepConditionError):
        solve_relaxed_linear(mesh, 0.5, 5.0, 0.0, np.zeros(8))


def test_comparison_principle_sample():
    # nonpositive data keep the trajectory nonpositive
    rng = np.random.default_rng(32)
    for _ in range(50):
        mesh = build_graded(int(rng.integers(4, 32)), float(rng.uniform(1, 3)))
        alpha = float(rng.uniform(0.1, 0.9))
        values = solve_relaxed_linear(
            mesh, alpha, 0.0, float(rng.uniform(0, 1)),
            -rng.uniform(0.0, 1.0, mesh.M), -float(rng.uniform(0, 1))
        )
        assert float(np.max(values)) <= 1e-12


def test_stability_envelope_shapes():
    mesh = build_graded(32, 2.0, 1.0)
    t = mesh.points[1:]
    tau = mesh.t1
    np.testing.assert_allclose(
        stability_envelope(mesh, 0.4, -0.5),
        tau * t ** (0.4 - 1.0) * (tau / t) ** (-0.5),
        rtol=1e-14,
    )
    np.testing.assert_allclose(
        stability_envelope(mesh, 0.4, 0.3),
        tau * t ** (0.4 - 1.0),
        rtol=1e-14,
    )
    with_log = stability_envelope(mesh, 0.4, 0.0)
    np.testing.assert_allclose(
        with_log, tau * t ** (0.4 - 1.0) * (1.0 + np.log(t / tau)), rtol=1e-14
    )


def test_theoretical_bound_branches():
    alpha, sigma, T = 0.4, 0.8, 1.0
    nu = 1.0 + sigma - alpha  # 1.4, so r* = 1.6 / 1.4
    r_star = (2.0 - alpha) / nu
    M = 64
    t = 0.25

    below = theoretical_bound(alpha, sigma, 1.0, M, t)
    assert below == pytest.approx(M ** (-nu) * t ** (alpha - 1.0))

    at = theoretical_bound(alpha, sigma, r_star, M, t)
    t1 = T * M ** (-r_star)
    assert at == pytest.approx(M ** (alpha - 2.0) * t ** (alpha - 1.0) * (1.0 + math.log(t / t1)))

    above = theoretical_bound(alpha, sigma, 2.0, M, t)
    assert above == pytest.approx(M ** (alpha - 2.0) * t ** (sigma - (2.0 - alpha) / 2.0))

    extra = theoretical_bound(alpha, sigma, 2.0, M, t, variant="E_tilde")
    assert extra == pytest.approx(above + M ** (-1.0) * t ** (sigma + alpha - 0.5))

    arr = theoretical_bound(alpha, sigma, 2.0, M, np.array([0.25, 0.5]))
    assert arr.shape == (2,)
    with pytest.raises(ValueError, match="variant"):
        theoretical_bound(alpha, sigma, 2.0, M, t, variant="F")


def test_trajectory_errors_method():
    problem = make_test_a(0.4, 0.8)
    mesh = build_graded(32, 2.0)
    traj = solve_ode(problem, mesh)
    errs = traj.errors(problem.exact)
    assert errs.shape == (33,)
    assert errs[0] == 0.0
