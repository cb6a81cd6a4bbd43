"""L1 time stepping for scalar semilinear fractional ODEs.

Solves d^alpha u/dt^alpha + f(u) = g(t), u(0) = u0, with the Caputo
derivative replaced by the L1 operator and f(u^m) by a scheme F(U^m, U^{m-1}).
Each step reduces to the scalar equation

    kappa_mm U + F(U, w) = sum_j kappa_j U^j + g(t_m)

whose left side is strictly increasing in U whenever the step condition
lambda0 * tau_m**alpha < 1 / Gamma(2 - alpha) holds, so the step has exactly
one solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .mesh import TemporalMesh
from .schemes import SchemeDescriptor


class StepConditionError(ValueError):
    """The mesh violates lambda0 * tau**alpha < 1 / Gamma(2 - alpha)."""


class BracketError(RuntimeError):
    """Geometric bracket expansion failed to enclose the step root."""


@dataclass(frozen=True)
class ScalarProblem:
    """Scalar subdiffusion initial value problem on (0, T].

    Attributes:
        alpha: Caputo order in (0, 1).
        scheme: discretization of the semilinear term.
        g: source term g(t).
        u0: initial value.
        T: final time.
        exact: known solution u(t), if any, for error reporting.
    """

    alpha: float
    scheme: SchemeDescriptor
    g: Callable
    u0: float
    T: float
    exact: Optional[Callable] = None


@dataclass(frozen=True)
class Trajectory:
    """Discrete solution values at the mesh points."""

    mesh: TemporalMesh
    values: np.ndarray

    def errors(self, exact: Callable) -> np.ndarray:
        return np.abs(self.values - exact(self.mesh.points))


def step_condition_ok(mesh: TemporalMesh, alpha: float, lambda0: float) -> bool:
    """Whether lambda0 * tau_j**alpha < 1 / Gamma(2 - alpha) on every step."""
    if lambda0 <= 0.0:
        return True
    bound = 1.0 / math.gamma(2.0 - alpha)
    return bool(np.all(lambda0 * mesh.tau**alpha < bound))


def solve_step_scalar(
    kappa_mm: float,
    lambda0: float,
    scheme: SchemeDescriptor,
    w: float,
    rhs: float,
) -> float:
    """Solve kappa_mm * U + F(U, w) = rhs for the unique root U.

    Schemes affine in the unknown are solved directly. Otherwise the root is
    bracketed by geometric expansion around w, narrowed by bisection to width
    1e-8, and polished by safeguarded Newton when a derivative is available
    (continued bisection when not). The residual at the returned value
    satisfies |kappa_mm U + F(U, w) - rhs| <= 1e-12 (1 + |rhs|).

    Raises:
        StepConditionError: kappa_mm <= lambda0, so monotonicity of the step
            equation is not guaranteed.
        BracketError: no sign change found after 200 doublings.
    """
    if kappa_mm <= lambda0:
        raise StepConditionError(
            f"need kappa_mm > lambda0 for a monotone step, got {kappa_mm} <= {lambda0}"
        )
    affine = scheme.affine_in_v(w)
    if affine is not None:
        slope, offset = affine
        denom = kappa_mm + float(slope)
        if denom <= 0.0:
            raise StepConditionError(
                "step equation lost monotonicity; solution left the declared range"
            )
        return (rhs - float(offset)) / denom

    def residual(u):
        return kappa_mm * u + float(scheme.F(u, w)) - rhs

    tol = 1e-12 * (1.0 + abs(rhs))

    half_width = max(1.0, abs(w))
    lo = w - half_width
    for _ in range(200):
        if residual(lo) <= 0.0:
            break
        half_width *= 2.0
        lo = w - half_width
    else:
        raise BracketError("no lower bracket after 200 doublings")
    half_width = max(1.0, abs(w))
    hi = w + half_width
    for _ in range(200):
        if residual(hi) >= 0.0:
            break
        half_width *= 2.0
        hi = w + half_width
    else:
        raise BracketError("no upper bracket after 200 doublings")

    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if residual(mid) <= 0.0:
            lo = mid
        else:
            hi = mid

    u = 0.5 * (lo + hi)
    r = residual(u)
    try:
        have_derivative = True
        scheme.dF_dv(u, w)
    except ValueError:
        have_derivative = False

    for _ in range(60):
        if abs(r) <= tol:
            return u
        if have_derivative:
            slope = kappa_mm + float(scheme.dF_dv(u, w))
            candidate = u - r / slope if slope > 0.0 else None
        else:
            candidate = None
        if candidate is None or not lo <= candidate <= hi:
            candidate = 0.5 * (lo + hi)
        # keep the bracket valid around the root
        if residual(candidate) <= 0.0:
            lo = candidate
        else:
            hi = candidate
        u = candidate
        r = residual(u)
    if abs(r) <= tol:
        return u
    raise BracketError(f"step root refinement stalled with residual {r}")


def solve_ode(problem: ScalarProblem, mesh: TemporalMesh) -> Trajectory:
    """March the L1 scheme over the mesh.

    Raises StepConditionError when the scheme's lambda0 violates the step
    condition anywhere on the mesh.
    """
    if abs(mesh.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ValueError(f"mesh horizon {mesh.T} does not match problem T = {problem.T}")
    scheme = problem.scheme
    alpha = problem.alpha
    if not step_condition_ok(mesh, alpha, scheme.lambda0):
        raise StepConditionError(
            f"lambda0 = {scheme.lambda0} violates the step condition on this mesh"
        )
    t = mesh.points
    tau = mesh.tau
    M = mesh.M
    values = np.empty(M + 1)
    values[0] = problem.u0
    for m in range(1, M + 1):
        kappa_mm, kappa = _kernels.l1_row(t, tau, float(alpha), m)
        rhs = float(np.dot(kappa, values[:m])) + float(problem.g(t[m]))
        values[m] = solve_step_scalar(kappa_mm, scheme.lambda0, scheme, values[m - 1], rhs)
    return Trajectory(mesh=mesh, values=values)


def solve_relaxed_linear(
    mesh: TemporalMesh,
    alpha: float,
    lambda0: float,
    lambda1: float,
    rhs: np.ndarray,
    v0: float = 0.0,
) -> np.ndarray:
    """Trajectory of (delta^alpha - lambda0) U^m - lambda1 U^{m-1} = rhs_m.

    This is the relaxed linear recurrence behind the stability bound and the
    comparison principle. rhs has one entry per step.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha}")
    rhs = np.ascontiguousarray(rhs, dtype=float)
    if rhs.shape != (mesh.M,):
        raise ValueError(f"rhs must have one entry per step, expected {mesh.M}")
    if not step_condition_ok(mesh, alpha, lambda0):
        raise StepConditionError(
            f"lambda0 = {lambda0} violates the step condition on this mesh"
        )
    return _kernels.fode_linear_solve(
        mesh.points, mesh.tau, float(alpha), float(lambda0), float(lambda1), rhs, float(v0)
    )


def stability_envelope(mesh: TemporalMesh, alpha: float, gamma: float) -> np.ndarray:
    """Envelope for solutions driven by rhs_m = (tau / t_m)**(gamma + 1).

    Returns ell_gamma * tau * t_j**(alpha - 1) * (tau / t_j)**min(0, gamma)
    for j = 1..M, with tau = t_1 and the log factor ell = 1 + ln(t_j / tau)
    present exactly when gamma = 0.
    """
    tau1 = mesh.t1
    t_pos = mesh.points[1:]
    envelope = tau1 * t_pos ** (alpha - 1.0) * (tau1 / t_pos) ** min(0.0, gamma)
    if gamma == 0.0:
        envelope = envelope * (1.0 + np.log(t_pos / tau1))
    return envelope


def theoretical_bound(
    alpha: float,
    sigma: float,
    r: float,
    M: int,
    t_m,
    variant: str = "E",
    T: float = 1.0,
):
    """Pointwise error bound E^m (or E-tilde^m) at time t_m.

    With nu = 1 + sigma - alpha and the threshold exponent r* = (2 - alpha)/nu:

      r < r*:  M**(-nu r)       * t_m**(alpha - 1)
      r = r*:  M**(alpha - 2)   * t_m**(alpha - 1) * (1 + ln(t_m / t_1))
      r > r*:  M**(alpha - 2)   * t_m**(sigma - (2 - alpha)/r)

    The 'E_tilde' variant, the bound for schemes with first-order consistency
    (q = 1), adds M**(-1) * t_m**(min(sigma, 1) + alpha - 1/r).
    """
    if variant not in ("E", "E_tilde"):
        raise ValueError(f"variant must be 'E' or 'E_tilde', got {variant!r}")
    nu = 1.0 + sigma - alpha
    r_star = (2.0 - alpha) / nu
    t_arr = np.asarray(t_m, dtype=float)
    if r < r_star - 1e-12:
        bound = float(M) ** (-nu * r) * t_arr ** (alpha - 1.0)
    elif r <= r_star + 1e-12:
        t1 = T * float(M) ** (-r)
        bound = float(M) ** (alpha - 2.0) * t_arr ** (alpha - 1.0) * (1.0 + np.log(t_arr / t1))
    else:
        bound = float(M) ** (alpha - 2.0) * t_arr ** (sigma - (2.0 - alpha) / r)
    if variant == "E_tilde":
        bound = bound + float(M) ** (-1.0) * t_arr ** (min(sigma, 1.0) + alpha - 1.0 / r)
    if np.isscalar(t_m) or t_arr.ndim == 0:
        return float(bound)
    return bound
