"""L1 stepping for quasilinear problems via the Kirchhoff transformation.

The flux is -(a(u) u_x + b(x, t, u)) with 0 < c_a <= a(u) <= c_bar_a. Writing
A(w) = int_0^w a(s) ds, the diffusion term a(u) u_x equals (A(u))_x, so the
time step at t_m is the fixed point w = T v of

    -D2_h A(w) + kappa_mm w + f(x, t_m, w) = D_h b(x, t_m, v) + history sum,

where D2_h is the standard second difference and D_h the centered first
difference. Each map evaluation is a monotone tridiagonal system, solved by
damped Newton in the transformed variable W = A(w); the outer iteration over
v is a contraction under the step condition

    lambda * tau_m**alpha < 1 / Gamma(2 - alpha),
    lambda = lambda0 + (C_a C_u + C_b sqrt(d))**2 / (4 c_a),

and collapses to a single pass when b is absent, since v enters only
through b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .fdspace import NewtonError, SpatialGrid, newton_tridiagonal
from .l1op import L1Row
from .mesh import TemporalMesh
from .ode import StepConditionError


class ContractionError(RuntimeError):
    """The outer fixed-point iteration stopped contracting."""


@dataclass(frozen=True)
class QuasilinearProblem:
    """Quasilinear subdiffusion problem with declared structure constants.

    Attributes:
        alpha: Caputo order in (0, 1).
        a: diffusion coefficient a(u), elementwise over arrays.
        f: reaction term f(x, t, u).
        u0: initial profile u0(x).
        T: final time.
        b: optional flux term b(x, t, u); None means absent.
        A: antiderivative of a with A(0) = 0, when known in closed form.
        A_inv: inverse of A, when known in closed form.
        f_u: partial derivative of f in u; finite differences otherwise.
        c_a, c_bar_a: declared bounds 0 < c_a <= a <= c_bar_a.
        C_a: Lipschitz constant of a on the solution range.
        C_b: Lipschitz constant of b in u.
        lambda0: one-sided bound -lambda0 <= f_u on the solution range.
        C_u: declared bound on the solution gradient.
    """

    alpha: float
    a: Callable
    f: Callable
    u0: Callable
    T: float
    c_a: float
    c_bar_a: float
    C_a: float
    b: Optional[Callable] = None
    A: Optional[Callable] = None
    A_inv: Optional[Callable] = None
    f_u: Optional[Callable] = None
    C_b: float = 0.0
    lambda0: float = 0.0
    C_u: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.c_a <= self.c_bar_a:
            raise ValueError("need 0 < c_a <= c_bar_a")
        if self.A is not None and abs(float(self.A(0.0))) > 1e-14:
            raise ValueError("antiderivative must satisfy A(0) = 0")


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(32)


def kirchhoff(problem: QuasilinearProblem, w):
    """Evaluate A(w) = int_0^w a(s) ds, elementwise.

    Uses the closed form when the problem carries one, otherwise a 32-node
    Gauss-Legendre rule on [0, w], which is exact to rounding for smooth a.
    """
    if problem.A is not None:
        return problem.A(w)
    w_arr = np.asarray(w, dtype=float)
    scalar = w_arr.ndim == 0
    w_arr = np.atleast_1d(w_arr)
    # nodes s = w (xi + 1) / 2 for xi on [-1, 1], Jacobian w / 2
    s = 0.5 * w_arr[None, :] * (_GAUSS_NODES[:, None] + 1.0)
    vals = 0.5 * w_arr * np.sum(_GAUSS_WEIGHTS[:, None] * problem.a(s), axis=0)
    return float(vals[0]) if scalar else vals


def kirchhoff_inverse(problem: QuasilinearProblem, W):
    """Solve A(w) = W for w, elementwise.

    Uses the closed-form inverse when available; otherwise brackets with the
    declared bounds (W / c_bar_a and W / c_a enclose the root) and runs
    bisection with a Newton polish, since A' = a >= c_a > 0.
    """
    if problem.A_inv is not None:
        return problem.A_inv(W)
    W_arr = np.asarray(W, dtype=float)
    scalar = W_arr.ndim == 0
    W_arr = np.atleast_1d(W_arr).astype(float)
    lo = np.minimum(W_arr / problem.c_bar_a, W_arr / problem.c_a)
    hi = np.maximum(W_arr / problem.c_bar_a, W_arr / problem.c_a)
    pad = 1e-12 * (1.0 + np.abs(W_arr))
    lo -= pad
    hi += pad
    if np.any(kirchhoff(problem, lo) > W_arr) or np.any(kirchhoff(problem, hi) < W_arr):
        raise ValueError("value outside the range implied by the declared bounds on a")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = kirchhoff(problem, mid) > W_arr
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    w = 0.5 * (lo + hi)
    for _ in range(3):
        w = w - (kirchhoff(problem, w) - W_arr) / problem.a(w)
    return float(w[0]) if scalar else w


def lambda_total(problem: QuasilinearProblem, d: int = 1) -> float:
    """Effective one-sided constant lambda0 + (C_a C_u + C_b sqrt(d))^2/(4 c_a)."""
    drift = problem.C_a * problem.C_u + problem.C_b * math.sqrt(d)
    return problem.lambda0 + drift * drift / (4.0 * problem.c_a)


def quasilinear_step_condition_ok(problem: QuasilinearProblem, mesh: TemporalMesh) -> bool:
    """Whether lambda_total * tau_j**alpha < 1 / Gamma(2 - alpha) on every step."""
    lam = lambda_total(problem)
    if lam <= 0.0:
        return True
    bound = 1.0 / math.gamma(2.0 - problem.alpha)
    return bool(np.all(lam * mesh.tau**problem.alpha < bound))


def _f_slope(problem: QuasilinearProblem, x: np.ndarray, t: float, u: np.ndarray):
    if problem.f_u is not None:
        return problem.f_u(x, t, u)
    du = 1e-6 * (1.0 + np.abs(u))
    return (problem.f(x, t, u + du) - problem.f(x, t, u - du)) / (2.0 * du)


def _flux_difference(problem, grid: SpatialGrid, t: float, v: np.ndarray) -> np.ndarray:
    # centered D_h b(x, t, v) with homogeneous wall values
    x_full = np.concatenate(([grid.x_lo], grid.x, [grid.x_hi]))
    v_full = np.concatenate(([0.0], v, [0.0]))
    b_full = np.asarray(problem.b(x_full, t, v_full), dtype=float)
    if b_full.ndim == 0:
        b_full = np.full(x_full.shape, float(b_full))
    return (b_full[2:] - b_full[:-2]) / (2.0 * grid.h)


def _inner_solve(problem, grid, kappa_mm, t_m, rhs, w_start):
    # Newton in W = A(w): -D2_h W + kappa_mm Ainv(W) + f(x, t, Ainv(W)) = rhs
    h2 = grid.h * grid.h
    n = grid.N
    off = np.full(n, -1.0 / h2)
    diag = np.full(n, 2.0 / h2)
    x = grid.x

    def nonlinear(W):
        u = kirchhoff_inverse(problem, W)
        return kappa_mm * u + problem.f(x, t_m, u)

    def nonlinear_slope(W):
        u = kirchhoff_inverse(problem, W)
        return (kappa_mm + _f_slope(problem, x, t_m, u)) / problem.a(u)

    tol = 1e-11 * (1.0 + float(np.max(np.abs(rhs))))
    W0 = np.asarray(kirchhoff(problem, w_start), dtype=float)
    W, history = newton_tridiagonal(
        off, diag, off, nonlinear, nonlinear_slope, rhs, start=W0, tol=tol
    )
    return np.asarray(kirchhoff_inverse(problem, W), dtype=float), len(history) - 1


def quasilinear_step(
    grid: SpatialGrid,
    problem: QuasilinearProblem,
    row: L1Row,
    history: np.ndarray,
    t_m: float,
):
    """Advance one quasilinear step; returns (values, info).

    info carries 'outer_iterations' and 'inner_iterations' counts. Raises
    ContractionError when the outer fixed point fails to converge in 100
    iterations or stalls for 5 consecutive ones.
    """
    if history.shape[0] != row.m:
        raise ValueError(f"history must hold {row.m} rows, got {history.shape[0]}")
    history_sum = row.kappa @ history
    w = history[-1]
    if problem.b is None:
        w_new, inner = _inner_solve(problem, grid, row.kappa_mm, t_m, history_sum, w)
        return w_new, {"outer_iterations": 1, "inner_iterations": inner}
    v = w
    inner_total = 0
    distances = []
    for outer in range(1, 101):
        rhs = history_sum + _flux_difference(problem, grid, t_m, v)
        w_new, inner = _inner_solve(problem, grid, row.kappa_mm, t_m, rhs, w)
        inner_total += inner
        dist = float(np.max(np.abs(w_new - v)))
        distances.append(dist)
        v = w = w_new
        if dist <= 1e-10:
            return w_new, {"outer_iterations": outer, "inner_iterations": inner_total}
        if len(distances) >= 5 and all(
            distances[-k] >= distances[-k - 1] for k in range(1, 5)
        ):
            raise ContractionError(
                f"outer iteration stalled at distance {dist}; step condition too tight"
            )
    raise ContractionError("outer iteration did not converge in 100 passes")


def step_residual(
    grid: SpatialGrid,
    problem: QuasilinearProblem,
    row: L1Row,
    history: np.ndarray,
    t_m: float,
    values: np.ndarray,
) -> float:
    """Max-norm residual of the discrete quasilinear equation at values."""
    history_sum = row.kappa @ history
    W = np.asarray(kirchhoff(problem, values), dtype=float)
    h2 = grid.h * grid.h
    lap = np.empty(grid.N)
    lap[:] = -2.0 * W / h2
    lap[1:] += W[:-1] / h2
    lap[:-1] += W[1:] / h2
    res = row.kappa_mm * values - history_sum - lap + problem.f(grid.x, t_m, values)
    if problem.b is not None:
        res -= _flux_difference(problem, grid, t_m, values)
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class QuasilinearTrajectory:
    """Discrete solution values plus per-step outer iteration counts."""

    mesh: TemporalMesh
    grid: SpatialGrid
    values: np.ndarray
    outer_iterations: np.ndarray


def solve_quasilinear(
    problem: QuasilinearProblem, mesh: TemporalMesh, grid: SpatialGrid
) -> QuasilinearTrajectory:
    """March the quasilinear L1 scheme over the mesh.

    Raises StepConditionError when lambda_total violates the step condition.
    """
    if not quasilinear_step_condition_ok(problem, mesh):
        raise StepConditionError(
            f"lambda = {lambda_total(problem)} violates the step condition on this mesh"
        )
    t = mesh.points
    tau = mesh.tau
    M = mesh.M
    values = np.empty((M + 1, grid.N))
    values[0] = problem.u0(grid.x)
    outer_counts = np.empty(M, dtype=int)
    for m in range(1, M + 1):
        kappa_mm, kappa = _kernels.l1_row(t, tau, float(problem.alpha), m)
        row = L1Row(m=m, alpha=float(problem.alpha), kappa_mm=float(kappa_mm), kappa=kappa)
        values[m], info = quasilinear_step(grid, problem, row, values[:m], t[m])
        outer_counts[m - 1] = info["outer_iterations"]
    return QuasilinearTrajectory(
        mesh=mesh, grid=grid, values=values, outer_iterations=outer_counts
    )


def stationary_state(
    problem: QuasilinearProblem, grid: SpatialGrid, start: Optional[np.ndarray] = None
) -> np.ndarray:
    """Solve the discrete stationary problem -D2_h A(u) + f(x, u) = D_h b(x, u).

    Time enters f and b at t = 0. A trajectory started from the returned
    state stays on it, because the L1 weights of a constant history cancel
    exactly.
    """
    h2 = grid.h * grid.h
    n = grid.N
    off = np.full(n, -1.0 / h2)
    diag = np.full(n, 2.0 / h2)
    x = grid.x
    u_start = problem.u0(x) if start is None else start
    v = np.asarray(u_start, dtype=float)
    for _ in range(100):
        rhs = (
            _flux_difference(problem, grid, 0.0, v)
            if problem.b is not None
            else np.zeros(n)
        )

        def nonlinear(W):
            return problem.f(x, 0.0, kirchhoff_inverse(problem, W))

        def nonlinear_slope(W):
            u = kirchhoff_inverse(problem, W)
            return _f_slope(problem, x, 0.0, u) / problem.a(u)

        W, _ = newton_tridiagonal(
            off,
            diag,
            off,
            nonlinear,
            nonlinear_slope,
            rhs,
            start=np.asarray(kirchhoff(problem, v), dtype=float),
            tol=1e-13 * (1.0 + float(np.max(np.abs(rhs)))),
        )
        w = np.asarray(kirchhoff_inverse(problem, W), dtype=float)
        if problem.b is None or float(np.max(np.abs(w - v))) <= 1e-12:
            return w
        v = w
    raise NewtonError("stationary iteration did not converge")
