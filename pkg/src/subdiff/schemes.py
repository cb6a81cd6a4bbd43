"""Discretizations F(v, w) of a semilinear term f(u) and their constants.

Each scheme replaces f(u^m) in the time step by F(U^m, U^{m-1}), where v is
the unknown and w the previous value. A scheme is admissible when

  A1:  |F(v, w) - f(v)| <= L |v - w|**q        (consistency of order q)
  A2:  F(v, w) + lambda0 * v nondecreasing in v, and
       |F(v, w) - F(v, w')| <= lambda1 |w - w'|  (one-sided monotonicity)

on the range the solution lives in. make_scheme computes the constants
(L, q, lambda0, lambda1) for the five built-in kinds by sampling f and its
derivatives over a declared solution range; check_A1/check_A2 verify them
numerically.

Kinds:
  implicit          F(v, w) = f(v)
  convex-splitting  F(v, w) = v**3 - w      (for the cubic f(u) = u**3 - u)
  imex1             F(v, w) = f(w)
  imex2             F(v, w) = f(w) + (v - w) f'(w)
  stabilized        F(v, w) = f(w) + S (v - w)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

KINDS = ("implicit", "convex-splitting", "imex1", "imex2", "stabilized")


@dataclass(frozen=True)
class SchemeDescriptor:
    """A semilinear discretization with its declared admissibility constants.

    Attributes:
        kind: one of KINDS.
        f: the semilinear term.
        fp: derivative of f, or None.
        fpp: second derivative of f, or None.
        q: consistency order in A1.
        L: consistency constant in A1.
        lambda0: one-sided monotonicity shift in A2.
        lambda1: Lipschitz constant in w in A2.
        S: stabilization slope (stabilized kind only).
        solution_range: interval the constants were computed on.
    """

    kind: str
    f: Callable
    fp: Optional[Callable]
    fpp: Optional[Callable]
    q: int
    L: float
    lambda0: float
    lambda1: float
    S: float
    solution_range: tuple

    def F(self, v, w):
        """Evaluate F(v, w); accepts scalars or arrays."""
        if self.kind == "implicit":
            return self.f(v)
        if self.kind == "convex-splitting":
            return v * v * v - w
        if self.kind == "imex1":
            return self.f(w)
        if self.kind == "imex2":
            return self.f(w) + (v - w) * self.fp(w)
        return self.f(w) + self.S * (v - w)

    def dF_dv(self, v, w):
        """Partial derivative of F in its first argument, for Newton steps."""
        if self.kind == "implicit":
            if self.fp is None:
                raise ValueError("implicit scheme needs fp for derivative-based solves")
            return self.fp(v)
        if self.kind == "convex-splitting":
            return 3.0 * v * v
        if self.kind == "imex1":
            return np.zeros_like(np.asarray(v, dtype=float))
        if self.kind == "imex2":
            return self.fp(w)
        return self.S * np.ones_like(np.asarray(v, dtype=float))

    def affine_in_v(self, w):
        """(slope, offset) with F(v, w) = slope * v + offset, or None.

        Available for the kinds that are affine in the unknown, which admit a
        direct linear step solve.
        """
        if self.kind == "imex1":
            fw = self.f(w)
            return np.zeros_like(np.asarray(fw, dtype=float)), fw
        if self.kind == "imex2":
            slope = self.fp(w)
            return slope, self.f(w) - w * slope
        if self.kind == "stabilized":
            fw = self.f(w)
            slope = self.S * np.ones_like(np.asarray(fw, dtype=float))
            return slope, fw - self.S * w
        return None


def eval_F(scheme: SchemeDescriptor, v, w):
    """Evaluate the scheme's F(v, w)."""
    return scheme.F(v, w)


def _sampled_derivatives(f, fp, fpp, lo, hi, n):
    u = np.linspace(lo, hi, n)
    if fp is not None:
        fpv = fp(u)
    else:
        du = (hi - lo) / (8.0 * n)
        fpv = (f(u + du) - f(u - du)) / (2.0 * du)
    if fpp is not None:
        fppv = fpp(u)
    else:
        du = (hi - lo) / (8.0 * n)
        fppv = (f(u + du) - 2.0 * f(u) + f(u - du)) / (du * du)
    return fpv, fppv


def make_scheme(
    kind: str,
    f: Callable,
    fp: Optional[Callable] = None,
    fpp: Optional[Callable] = None,
    solution_range: tuple = (-1.5, 1.5),
    S: Optional[float] = None,
    n_samples: int = 4001,
) -> SchemeDescriptor:
    """Build a scheme descriptor with constants valid on solution_range.

    The constants follow the admissibility analysis of each kind, with the
    suprema of f', f'' taken over the declared range (by sampling, or from
    fp/fpp when supplied):

      implicit          q=1, L=0,               lambda0=max(0, sup(-f')), lambda1=0
      convex-splitting  q=1, L=1,               lambda0=0, lambda1=1
      imex1             q=1, L=sup|f'|,          lambda0=0, lambda1=sup|f'|
      imex2             q=2, L=sup|f''|/2,       lambda0=max(0, sup(-f')),
                        lambda1=2 sup|f'| + 2 L diam(range)
      stabilized        q=1, L=S+sup|f'|,        lambda0=0, lambda1=sup|f'-S|
                        with S defaulting to sup|f'|

    Args:
        kind: one of KINDS.
        f: semilinear term; must be vectorized over numpy arrays.
        fp, fpp: optional derivatives; imex2 requires fp.
        solution_range: interval the discrete solution is expected to stay in.
        S: stabilization slope for the stabilized kind.
        n_samples: sampling resolution for the suprema.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scheme kind {kind!r}, expected one of {KINDS}")
    lo, hi = float(solution_range[0]), float(solution_range[1])
    if not lo < hi:
        raise ValueError("solution_range must be a nonempty interval")
    if kind == "imex2" and fp is None:
        raise ValueError("imex2 needs the derivative fp")

    fpv, fppv = _sampled_derivatives(f, fp, fpp, lo, hi, n_samples)
    sup_abs_fp = float(np.max(np.abs(fpv)))
    sup_neg_fp = float(max(0.0, np.max(-fpv)))
    sup_abs_fpp = float(np.max(np.abs(fppv)))
    diam = hi - lo

    if kind == "implicit":
        q, L, lam0, lam1, S_val = 1, 0.0, sup_neg_fp, 0.0, 0.0
    elif kind == "convex-splitting":
        q, L, lam0, lam1, S_val = 1, 1.0, 0.0, 1.0, 0.0
    elif kind == "imex1":
        q, L, lam0, lam1, S_val = 1, sup_abs_fp, 0.0, sup_abs_fp, 0.0
    elif kind == "imex2":
        L = 0.5 * sup_abs_fpp
        q, lam0, lam1, S_val = 2, sup_neg_fp, 2.0 * sup_abs_fp + 2.0 * L * diam, 0.0
    else:
        S_val = float(S) if S is not None else sup_abs_fp
        q = 1
        L = S_val + sup_abs_fp
        lam0 = 0.0
        lam1 = float(np.max(np.abs(fpv - S_val)))

    return SchemeDescriptor(
        kind=kind,
        f=f,
        fp=fp,
        fpp=fpp,
        q=q,
        L=L,
        lambda0=lam0,
        lambda1=lam1,
        S=S_val,
        solution_range=(lo, hi),
    )


def check_A1(
    scheme: SchemeDescriptor,
    sample_range: tuple | None = None,
    n_samples: int = 10_000,
) -> float:
    """Largest observed |F(v, w) - f(v)| / |v - w|**q over a (v, w) grid.

    Admissibility requires the returned value to stay at or below scheme.L.
    """
    lo, hi = sample_range if sample_range is not None else scheme.solution_range
    n = max(2, int(np.sqrt(n_samples)))
    grid = np.linspace(lo, hi, n)
    v, w = np.meshgrid(grid, grid, indexing="ij")
    gap = np.abs(v - w)
    mask = gap > 0.0
    num = np.abs(scheme.F(v, w) - scheme.f(v))
    ratio = num[mask] / gap[mask] ** scheme.q
    return float(np.max(ratio))


def check_A2(
    scheme: SchemeDescriptor,
    sample_range: tuple | None = None,
    n_samples: int = 10_000,
) -> tuple:
    """Check one-sided monotonicity in v and the Lipschitz bound in w.

    Returns (min_shifted_slope, max_w_lipschitz): the smallest finite
    difference slope of F(v, w) + lambda0 * v in v, and the largest
    |F(v, w) - F(v, w')| / |w - w'| over adjacent grid values. Admissibility
    requires min_shifted_slope >= 0 (up to rounding) and
    max_w_lipschitz <= lambda1.
    """
    lo, hi = sample_range if sample_range is not None else scheme.solution_range
    n = max(3, int(np.sqrt(n_samples)))
    grid = np.linspace(lo, hi, n)
    v, w = np.meshgrid(grid, grid, indexing="ij")
    vals = scheme.F(v, w) + scheme.lambda0 * v
    dv = grid[1] - grid[0]
    slopes = (vals[1:, :] - vals[:-1, :]) / dv
    min_slope = float(np.min(slopes))
    raw = scheme.F(v, w)
    wlip = np.abs(raw[:, 1:] - raw[:, :-1]) / dv
    max_wlip = float(np.max(wlip))
    return min_slope, max_wlip
