"""L1 discretization of the Caputo derivative of order alpha in (0, 1).

The operator at step m acts on a history V^0..V^m as

    delta^alpha V^m = kappa_mm V^m - sum_{j=0}^{m-1} kappa_{m,j} V^j

with kappa_mm = tau_m**(-alpha) / Gamma(2 - alpha) and positive history
weights that sum exactly to kappa_mm, so constants are annihilated and the
operator is exact on functions that are linear on every mesh interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mesh import TemporalMesh


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class L1Row:
    """Weights of the L1 operator at one step.

    Attributes:
        m: step index, 1 <= m <= M.
        alpha: fractional order.
        kappa_mm: diagonal weight multiplying V^m.
        kappa: history weights, kappa[j] multiplies V^j for j = 0..m-1.
            All positive, summing to kappa_mm.
    """

    m: int
    alpha: float
    kappa_mm: float
    kappa: np.ndarray


def l1_row(mesh: TemporalMesh, alpha: float, m: int) -> L1Row:
    """Compute the L1 weights at step m on the given mesh."""
    _check_alpha(alpha)
    if not 1 <= m <= mesh.M:
        raise ValueError(f"step index must lie in 1..{mesh.M}, got {m}")
    kappa_mm, kappa = _kernels.l1_row(mesh.points, mesh.tau, float(alpha), int(m))
    kappa.setflags(write=False)
    return L1Row(m=int(m), alpha=float(alpha), kappa_mm=float(kappa_mm), kappa=kappa)


def apply_l1(row: L1Row, history) -> float:
    """Evaluate delta^alpha V^m for a scalar history V^0..V^m.

    Args:
        row: weights from l1_row at step m.
        history: array of m + 1 values.
    """
    values = np.asarray(history, dtype=float)
    if values.shape != (row.m + 1,):
        raise ValueError(f"history must have {row.m + 1} entries, got shape {values.shape}")
    return row.kappa_mm * values[row.m] - float(np.dot(row.kappa, values[: row.m]))


class L1WeightTable:
    """Precomputed triangular weight cache for repeated sweeps on one mesh.

    Holds the rows for m = 1..M. Memory is O(M^2); intended for moderate M
    where many trajectories are stepped on the same mesh.
    """

    def __init__(self, mesh: TemporalMesh, alpha: float):
        _check_alpha(alpha)
        self.mesh = mesh
        self.alpha = float(alpha)
        self._rows = [l1_row(mesh, alpha, m) for m in range(1, mesh.M + 1)]

    def row(self, m: int) -> L1Row:
        if not 1 <= m <= self.mesh.M:
            raise ValueError(f"step index must lie in 1..{self.mesh.M}, got {m}")
        return self._rows[m - 1]


def caputo_power(alpha: float, sigma: float, t):
    """Exact Caputo derivative of t**sigma.

    Returns Gamma(sigma + 1) / Gamma(sigma + 1 - alpha) * t**(sigma - alpha),
    elementwise for array t. At t = 0 the value is 0 for sigma > alpha,
    Gamma(sigma + 1) for sigma == alpha, and inf for sigma < alpha.
    """
    _check_alpha(alpha)
    if sigma <= 0.0:
        raise ValueError(f"power must be positive, got sigma = {sigma}")
    coef = math.gamma(sigma + 1.0) / math.gamma(sigma + 1.0 - alpha)
    t_arr = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = coef * t_arr ** (sigma - alpha)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def truncation_gamma(alpha: float, sigma: float, r: float) -> float:
    """Exponent gamma = min(alpha, (2 - alpha)/r + alpha - sigma - 1)."""
    return min(alpha, (2.0 - alpha) / r + alpha - sigma - 1.0)


def truncation_profile(mesh: TemporalMesh, alpha: float, sigma: float) -> np.ndarray:
    """L1 truncation error on t**sigma at every mesh point.

    Returns the array r_m = delta^alpha [t**sigma] - caputo_power(t_m) for
    m = 1..M. Identically zero (to rounding) for sigma = 1 since the
    operator is exact on piecewise-linear data.
    """
    _check_alpha(alpha)
    if sigma <= 0.0:
        raise ValueError(f"power must be positive, got sigma = {sigma}")
    values = mesh.points ** sigma
    discrete = _kernels.caputo_l1_profile(mesh.points, mesh.tau, float(alpha), values)
    exact = caputo_power(alpha, sigma, mesh.points[1:])
    return discrete - exact


def truncation_bound(
    mesh: TemporalMesh, alpha: float, sigma: float, r: float | None = None
) -> np.ndarray:
    """Truncation envelope tau**(sigma - alpha) * (tau / t_m)**(gamma + 1).

    tau means t_1. The profile from truncation_profile stays within a
    mesh-independent constant times this bound on quasi-graded meshes.
    """
    _check_alpha(alpha)
    if r is None:
        r = mesh.r
    gamma = truncation_gamma(alpha, sigma, r)
    tau1 = mesh.t1
    return tau1 ** (sigma - alpha) * (tau1 / mesh.points[1:]) ** (gamma + 1.0)
