"""Finite difference semidiscretization of -(a u')' + b u' + c u on an interval.

Interior nodes x_i = x_lo + i h, i = 1..N, h = (x_hi - x_lo)/(N + 1), with
homogeneous Dirichlet values at both ends. The operator row at x_i is

    -h^{-2} a(x_i - h/2) U_{i-1}
    + [h^{-2} (a(x_i + h/2) + a(x_i - h/2)) + c(x_i)] U_i
    - h^{-2} a(x_i + h/2) U_{i+1}
    + (2h)^{-1} b(x_i) (U_{i+1} - U_{i-1}),

second order in h for smooth coefficients. Whenever the mesh condition
h^{-1} >= sup|b| * sup(1/a) / 2 holds, the shifted matrix L_h + kappa I with
kappa > 0 is an M-matrix, which is what the discrete comparison arguments
and the monotone step solves rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .l1op import L1Row
from .mesh import TemporalMesh
from .ode import StepConditionError, step_condition_ok
from .schemes import SchemeDescriptor


class NewtonError(RuntimeError):
    """Damped Newton failed to reduce the step residual."""


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform interior grid on (x_lo, x_hi) with N nodes."""

    N: int
    x_lo: float = 0.0
    x_hi: float = 1.0
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"need at least one interior node, got N = {self.N}")
        if not self.x_lo < self.x_hi:
            raise ValueError("empty spatial interval")
        nodes = self.x_lo + self.h * np.arange(1, self.N + 1)
        nodes.setflags(write=False)
        object.__setattr__(self, "x", nodes)

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / (self.N + 1)


@dataclass(frozen=True)
class PdeProblem:
    """Semilinear subdiffusion problem on an interval with Dirichlet walls.

    Coefficients a, b, c and the source g are callables of (x, t) where x is
    the array of grid nodes; they may return scalars, which broadcast. b and
    c may be None, meaning identically zero. The semilinear term and its
    constants live in the scheme.
    """

    alpha: float
    a: Callable
    b: Optional[Callable]
    c: Optional[Callable]
    scheme: SchemeDescriptor
    g: Callable
    u0: Callable
    T: float
    exact: Optional[Callable] = None


@dataclass(frozen=True)
class TridiagonalOperator:
    """Rows of L_h at a fixed time; lower[0] and upper[-1] are unused."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    t: float

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = self.diag * values
        out[1:] += self.lower[1:] * values[:-1]
        out[:-1] += self.upper[:-1] * values[1:]
        return out

    def is_m_matrix(self, kappa: float) -> bool:
        """Off-diagonals nonpositive and L_h + kappa I strictly row dominant."""
        if np.any(self.lower[1:] > 0.0) or np.any(self.upper[:-1] > 0.0):
            return False
        # boundary rows only couple inward, so the unused entries drop out
        row_sum = np.zeros_like(self.diag)
        row_sum[1:] += np.abs(self.lower[1:])
        row_sum[:-1] += np.abs(self.upper[:-1])
        return bool(np.all(self.diag + kappa > row_sum))


def _eval_coefficient(fn: Optional[Callable], x: np.ndarray, t: float) -> np.ndarray:
    if fn is None:
        return np.zeros(x.shape)
    values = np.asarray(fn(x, t), dtype=float)
    if values.ndim == 0:
        return np.full(x.shape, float(values))
    return values


def build_Lh(grid: SpatialGrid, problem: PdeProblem, t: float) -> TridiagonalOperator:
    """Assemble the operator rows at time t.

    Raises ValueError if the sampled diffusion coefficient is not strictly
    positive or the reaction coefficient is negative.
    """
    h = grid.h
    x = grid.x
    a_minus = _eval_coefficient(problem.a, x - 0.5 * h, t)
    a_plus = _eval_coefficient(problem.a, x + 0.5 * h, t)
    b_mid = _eval_coefficient(problem.b, x, t)
    c_mid = _eval_coefficient(problem.c, x, t)
    if np.any(a_minus <= 0.0) or np.any(a_plus <= 0.0):
        raise ValueError("diffusion coefficient must be strictly positive")
    if np.any(c_mid < 0.0):
        raise ValueError("reaction coefficient must be nonnegative")
    inv_h2 = 1.0 / (h * h)
    inv_2h = 0.5 / h
    lower = -inv_h2 * a_minus - inv_2h * b_mid
    upper = -inv_h2 * a_plus + inv_2h * b_mid
    diag = inv_h2 * (a_plus + a_minus) + c_mid
    return TridiagonalOperator(lower=lower, diag=diag, upper=upper, t=t)


def check_h_condition(grid: SpatialGrid, problem: PdeProblem, times=None) -> bool:
    """Whether 1/h >= sup|b| * sup(1/a) / 2, sampling coefficients on the grid.

    Samples nodes and midpoints at the given times (default 0, T/2, T).
    Trivially true when b vanishes.
    """
    if times is None:
        times = (0.0, 0.5 * problem.T, problem.T)
    h = grid.h
    sample_x = np.concatenate([grid.x, grid.x - 0.5 * h, grid.x + 0.5 * h])
    sup_b = 0.0
    sup_inv_a = 0.0
    for t in times:
        a_vals = _eval_coefficient(problem.a, sample_x, t)
        if np.any(a_vals <= 0.0):
            raise ValueError("diffusion coefficient must be strictly positive")
        sup_b = max(sup_b, float(np.max(np.abs(_eval_coefficient(problem.b, sample_x, t)))))
        sup_inv_a = max(sup_inv_a, float(np.max(1.0 / a_vals)))
    return 1.0 / h >= 0.5 * sup_b * sup_inv_a


def newton_tridiagonal(
    lower: np.ndarray,
    diag_linear: np.ndarray,
    upper: np.ndarray,
    nonlinear: Callable,
    nonlinear_slope: Callable,
    rhs: np.ndarray,
    start: np.ndarray,
    tol: float,
    max_iter: int = 50,
):
    """Damped Newton for A u + phi(u) = rhs with tridiagonal linear part A.

    phi acts elementwise with slope phi'(u) from nonlinear_slope. Each step
    solves the tridiagonal Jacobian system and halves the update until the
    max-norm residual decreases. Returns (solution, residual_history).
    """
    u = np.array(start, dtype=float)
    eps = float(np.finfo(float).eps)

    def residual(vec):
        # mag tracks the size of the summands, giving the rounding floor the
        # assembled residual cannot be evaluated below (dominant at small h
        # where diag_linear ~ 1/h**2 dwarfs the requested tolerance)
        nl = np.asarray(nonlinear(vec), dtype=float)
        main = diag_linear * vec
        out = main + nl - rhs
        mag = np.abs(main) + np.abs(nl) + np.abs(rhs)
        out[1:] += lower[1:] * vec[:-1]
        mag[1:] += np.abs(lower[1:] * vec[:-1])
        out[:-1] += upper[:-1] * vec[1:]
        mag[:-1] += np.abs(upper[:-1] * vec[1:])
        floor = 4.0 * eps * float(np.max(mag))
        return out, float(np.max(np.abs(out))), floor

    res, res_norm, floor = residual(u)
    history = [res_norm]
    for _ in range(max_iter):
        if res_norm <= max(tol, floor):
            return u, history
        jac_diag = diag_linear + nonlinear_slope(u)
        delta = _kernels.thomas_solve(lower, jac_diag, upper, -res)
        step = 1.0
        accepted = False
        for _ in range(25):
            candidate = u + step * delta
            cand_res, cand_norm, cand_floor = residual(candidate)
            if cand_norm < res_norm or cand_norm <= max(tol, cand_floor):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if res_norm <= max(tol, 8.0 * floor):
                return u, history
            raise NewtonError("no residual decrease along the Newton direction")
        u, res, res_norm, floor = candidate, cand_res, cand_norm, cand_floor
        history.append(res_norm)
    if res_norm <= max(tol, 8.0 * floor):
        return u, history
    raise NewtonError(f"residual {res_norm} above tolerance {tol} after {max_iter} iterations")


def semilinear_step(
    grid: SpatialGrid,
    Lh: TridiagonalOperator,
    row: L1Row,
    scheme: SchemeDescriptor,
    history: np.ndarray,
    g_m,
) -> np.ndarray:
    """Advance one step: solve kappa_mm U + L_h U + F(U, w) = history sum + g_m.

    history holds U^0..U^{m-1} as rows; w = history[-1]. Schemes affine in
    the unknown reduce to one tridiagonal solve, the rest run damped Newton
    started at w.
    """
    if history.shape[0] != row.m:
        raise ValueError(f"history must hold {row.m} rows, got {history.shape[0]}")
    w = history[-1]
    rhs = row.kappa @ history + g_m
    kappa_mm = row.kappa_mm
    affine = scheme.affine_in_v(w)
    if affine is not None:
        slope, offset = affine
        return _kernels.thomas_solve(
            Lh.lower, Lh.diag + kappa_mm + slope, Lh.upper, rhs - offset
        )
    tol = 1e-11 * (1.0 + float(np.max(np.abs(rhs))))
    solution, _ = newton_tridiagonal(
        Lh.lower,
        Lh.diag + kappa_mm,
        Lh.upper,
        lambda vec: scheme.F(vec, w),
        lambda vec: scheme.dF_dv(vec, w),
        rhs,
        start=w,
        tol=tol,
    )
    return solution


@dataclass(frozen=True)
class PdeTrajectory:
    """Discrete solution values (M + 1 rows of N nodal values) plus errors."""

    mesh: TemporalMesh
    grid: SpatialGrid
    values: np.ndarray
    error_max: Optional[np.ndarray] = None
    error_l2: Optional[np.ndarray] = None


def solve_pde(
    problem: PdeProblem,
    mesh: TemporalMesh,
    grid: SpatialGrid,
    debug_checks: bool = False,
) -> PdeTrajectory:
    """March the L1 scheme for the semilinear problem over the mesh.

    Raises StepConditionError or ValueError when the step condition or the
    spatial mesh condition fails. With debug_checks the M-matrix structure of
    every assembled step matrix is verified.
    """
    alpha = problem.alpha
    scheme = problem.scheme
    if not step_condition_ok(mesh, alpha, scheme.lambda0):
        raise StepConditionError(
            f"lambda0 = {scheme.lambda0} violates the step condition on this mesh"
        )
    if not check_h_condition(grid, problem):
        raise ValueError("spatial grid too coarse for the convection coefficient")
    t = mesh.points
    tau = mesh.tau
    M = mesh.M
    x = grid.x
    values = np.empty((M + 1, grid.N))
    values[0] = problem.u0(x)
    for m in range(1, M + 1):
        Lh = build_Lh(grid, problem, t[m])
        kappa_mm, kappa = _kernels.l1_row(t, tau, float(alpha), m)
        row = L1Row(m=m, alpha=float(alpha), kappa_mm=float(kappa_mm), kappa=kappa)
        if debug_checks and not Lh.is_m_matrix(kappa_mm):
            raise ValueError(f"step matrix at t = {t[m]} is not an M-matrix")
        g_m = _eval_coefficient(problem.g, x, t[m])
        values[m] = semilinear_step(grid, Lh, row, scheme, values[:m], g_m)
    error_max = None
    error_l2 = None
    if problem.exact is not None:
        diffs = values - np.stack([problem.exact(x, tj) for tj in t])
        error_max = np.max(np.abs(diffs), axis=1)
        error_l2 = np.sqrt(grid.h * np.sum(diffs * diffs, axis=1))
    return PdeTrajectory(
        mesh=mesh, grid=grid, values=values, error_max=error_max, error_l2=error_l2
    )
