"""Graded and quasi-graded temporal meshes on [0, T]."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class TemporalMesh:
    """Temporal mesh 0 = t_0 < t_1 < ... < t_M = T with grading exponent r.

    The exponent records the grading strength the mesh is meant to carry; it
    is what quasi-gradedness and the error bounds are evaluated against. For
    hand-built point sets pass the exponent the points were designed for
    (r = 1 for a uniform mesh).

    Attributes:
        points: array of shape (M + 1,), strictly increasing, pinned so that
            points[0] == 0.0 and points[-1] == T exactly.
        r: grading exponent, >= 1.
        T: final time, > 0.
        tau: array of the M step sizes, tau[j - 1] = t_j - t_{j-1}.
    """

    points: np.ndarray
    r: float
    T: float
    tau: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.r < 1.0:
            raise ValueError(f"grading exponent must satisfy r >= 1, got {self.r}")
        if self.T <= 0.0:
            raise ValueError(f"final time must be positive, got {self.T}")
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.shape[0] < 2:
            raise ValueError("mesh needs a 1-d array of at least two points")
        if pts[0] != 0.0:
            raise ValueError("mesh must start at t_0 = 0")
        if not np.all(np.diff(pts) > 0.0):
            raise ValueError("mesh points must be strictly increasing")
        if abs(pts[-1] - self.T) > 1e-12 * self.T:
            raise ValueError(f"last mesh point {pts[-1]} does not match T = {self.T}")
        pts[-1] = self.T
        tau = np.diff(pts)
        pts.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tau", tau)

    @property
    def M(self) -> int:
        """Number of time steps."""
        return self.points.shape[0] - 1

    @property
    def t1(self) -> float:
        """First positive mesh point; the tau in step-size bounds."""
        return float(self.points[1])


def build_graded(M: int, r: float, T: float = 1.0) -> TemporalMesh:
    """Build the graded mesh t_j = T (j / M)**r.

    Args:
        M: number of steps, >= 1.
        r: grading exponent, >= 1. r = 1 gives the uniform mesh.
        T: final time.

    Returns:
        TemporalMesh with t_M pinned to exactly T.
    """
    if M < 1:
        raise ValueError(f"need at least one step, got M = {M}")
    j = np.arange(M + 1, dtype=float)
    points = T * (j / M) ** r
    points[-1] = T
    return TemporalMesh(points=points, r=float(r), T=float(T))


def quasi_graded_constant(mesh: TemporalMesh, r: float | None = None) -> float:
    """Smallest C with tau_j <= C * tau**(1/r) * t_j**(1 - 1/r) for all j.

    This is the constant in the quasi-gradedness condition, computed by
    direct evaluation over the mesh (tau means t_1 here). For the uniform
    mesh and r = 1 it equals 1; for the graded mesh it stays bounded by a
    constant depending only on r.

    Args:
        mesh: temporal mesh.
        r: exponent to evaluate against; defaults to mesh.r.
    """
    if r is None:
        r = mesh.r
    if r < 1.0:
        raise ValueError(f"grading exponent must satisfy r >= 1, got {r}")
    tau1 = mesh.t1
    t_pos = mesh.points[1:]
    denom = tau1 ** (1.0 / r) * t_pos ** (1.0 - 1.0 / r)
    return float(np.max(mesh.tau / denom))


def is_nested_refinement(coarse: TemporalMesh, fine: TemporalMesh) -> bool:
    """True when fine halves every step of coarse (fine.t_{2j} = coarse.t_j).

    The check is numerical: every coarse point must appear among the fine
    points of even index to within 1e-13 relative tolerance. Meshes whose
    sizes are not in a 1:2 ratio, or whose final times differ, are not
    nested.
    """
    if fine.M != 2 * coarse.M:
        return False
    if coarse.T != fine.T:
        return False
    shared = fine.points[::2]
    scale = np.maximum(np.abs(coarse.points), np.abs(shared))
    return bool(np.all(np.abs(shared - coarse.points) <= 1e-13 * scale))


def mesh_from_config(config: dict) -> TemporalMesh:
    """Build a mesh from a config mapping.

    Either {"M": ..., "r": ..., "T": ...} for a graded mesh (T defaults to
    1.0), or {"points": [...], "r": ..., "T": ...} for explicit points (r
    defaults to 1.0, T to the last point).
    """
    if "points" in config:
        points = np.asarray(config["points"], dtype=float)
        r = float(config.get("r", 1.0))
        T = float(config.get("T", points[-1]))
        return TemporalMesh(points=points, r=r, T=T)
    if "M" in config:
        return build_graded(
            int(config["M"]), float(config.get("r", 1.0)), float(config.get("T", 1.0))
        )
    raise ValueError("mesh config needs either 'M' or 'points'")
