"""Built-in test problems and the coefficient catalog for config files.

Three verification problems are provided:

  test-a             scalar, f = 0, source chosen so u(t) = t**sigma exactly
  test-b             semilinear heat equation on (0, pi) with the cubic
                     f(u) = u**3 - u and a manufactured solution
                     u = t**sigma sin(x**2 / pi)
  fisher-kolmogorov  quasilinear: a(u) = 1 + u, f(u) = u (1 - u), no known
                     solution; errors come from double-mesh differences

Coefficient entries in config files name members of a small catalog
(constant and affine in x); there is no expression parser.
"""

from __future__ import annotations

import math

import numpy as np

from .fdspace import PdeProblem
from .l1op import caputo_power
from .ode import ScalarProblem
from .quasilinear import QuasilinearProblem
from .schemes import SchemeDescriptor, make_scheme

PROBLEM_IDS = ("test-a", "test-b", "fisher-kolmogorov")


def coefficient_constant(value: float):
    """Coefficient (x, t) -> value."""
    value = float(value)

    def fn(x, t):
        return np.full(np.shape(x), value) if np.ndim(x) else value

    return fn


def coefficient_affine(c0: float, c1: float):
    """Coefficient (x, t) -> c0 + c1 * x."""
    c0, c1 = float(c0), float(c1)

    def fn(x, t):
        return c0 + c1 * np.asarray(x, dtype=float)

    return fn


def coefficient_from_config(entry) -> callable:
    """Build a coefficient callable from a config entry.

    Accepts a bare number (constant) or a mapping with kind 'constant'
    ({'value': v}) or 'affine' ({'c0': ..., 'c1': ...}).
    """
    if isinstance(entry, (int, float)):
        return coefficient_constant(entry)
    kind = entry.get("kind")
    if kind == "constant":
        return coefficient_constant(entry["value"])
    if kind == "affine":
        return coefficient_affine(entry.get("c0", 0.0), entry.get("c1", 0.0))
    raise ValueError(f"unknown coefficient kind {kind!r}; catalog has constant, affine")


def cubic_f(u):
    """The double-well term u**3 - u."""
    return u**3 - u


def cubic_fp(u):
    return 3.0 * u**2 - 1.0


def cubic_fpp(u):
    return 6.0 * u


def cubic_scheme(kind: str, solution_range=(-1.5, 1.5), S=None) -> SchemeDescriptor:
    """Scheme for f(u) = u**3 - u with constants on the given range."""
    return make_scheme(
        kind, cubic_f, fp=cubic_fp, fpp=cubic_fpp, solution_range=solution_range, S=S
    )


def _zero_scheme() -> SchemeDescriptor:
    def zero(u):
        return np.zeros_like(np.asarray(u, dtype=float)) if np.ndim(u) else 0.0

    def zero_d(u):
        return zero(u)

    return make_scheme("implicit", zero, fp=zero_d, fpp=zero_d, solution_range=(-2.0, 2.0))


def test_a_problem(alpha: float, sigma: float, T: float = 1.0) -> ScalarProblem:
    """Scalar problem with f = 0 and exact solution u(t) = t**sigma."""

    def g(t):
        return caputo_power(alpha, sigma, t)

    def exact(t):
        return np.asarray(t, dtype=float) ** sigma

    return ScalarProblem(alpha=alpha, scheme=_zero_scheme(), g=g, u0=0.0, T=T, exact=exact)


def test_b_phi(x):
    """Spatial profile sin(x**2 / pi) of the manufactured solution."""
    x = np.asarray(x, dtype=float)
    return np.sin(x * x / math.pi)


def test_b_phi_xx(x):
    x = np.asarray(x, dtype=float)
    arg = x * x / math.pi
    return (2.0 / math.pi) * np.cos(arg) - (2.0 * x / math.pi) ** 2 * np.sin(arg)


def test_b_problem(
    alpha: float, sigma: float, scheme_kind: str = "imex2", T: float = 1.0
) -> PdeProblem:
    """Semilinear heat equation on (0, pi) with u = t**sigma sin(x**2/pi).

    The source is manufactured so that d^alpha u - u_xx + u**3 - u = g with
    homogeneous Dirichlet walls (the profile vanishes at both ends).
    """
    scheme = cubic_scheme(scheme_kind, solution_range=(-0.5, 1.5))

    def exact(x, t):
        return float(t) ** sigma * test_b_phi(x)

    def g(x, t):
        u = exact(x, t)
        return (
            caputo_power(alpha, sigma, t) * test_b_phi(x)
            - float(t) ** sigma * test_b_phi_xx(x)
            + u**3
            - u
        )

    def u0(x):
        return np.zeros(np.shape(x))

    one = coefficient_constant(1.0)
    zero = coefficient_constant(0.0)
    return PdeProblem(
        alpha=alpha,
        a=one,
        b=zero,
        c=zero,
        scheme=scheme,
        g=g,
        u0=u0,
        T=T,
        exact=exact,
    )


def fisher_kolmogorov_problem(alpha: float, T: float = 1.0) -> QuasilinearProblem:
    """Degenerate-free Fisher-KPP model: a(u) = 1 + u, f(u) = u(1 - u).

    Constants are declared on the invariant range [-0.5, 1]: the solution
    starts at x(1 - x) in [0, 1/4] and stays inside [0, 1].
    """

    def a(u):
        return 1.0 + u

    def A(w):
        return w + 0.5 * w * w

    def A_inv(W):
        return -1.0 + np.sqrt(1.0 + 2.0 * W)

    def f(x, t, u):
        return u * (1.0 - u)

    def f_u(x, t, u):
        return 1.0 - 2.0 * u

    def u0(x):
        x = np.asarray(x, dtype=float)
        return x * (1.0 - x)

    return QuasilinearProblem(
        alpha=alpha,
        a=a,
        f=f,
        u0=u0,
        T=T,
        c_a=0.5,
        c_bar_a=2.0,
        C_a=1.0,
        A=A,
        A_inv=A_inv,
        f_u=f_u,
        C_b=0.0,
        lambda0=1.0,
        C_u=1.5,
    )
