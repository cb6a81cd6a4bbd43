"""Hot numerical kernels, jitted with numba when available.

Every kernel exists in two interchangeable implementations: a loop form
compiled with ``numba.njit`` and a vectorized numpy form. The module-level
names (``l1_row``, ``caputo_l1_profile``, ``fode_linear_solve``,
``thomas_solve``) dispatch to the numba build unless numba is missing or the
environment variable ``SUBDIFF_NO_NUMBA`` is set to a truthy value, in which
case the numpy build is used. Both builds agree to rounding error; the
benchmark in ``benchmarks/bench_kernels.py`` times them against each other.

Gamma values come from ``math.gamma`` (the platform libm implementation),
which numba supports natively.
"""

import math
import os

import numpy as np
from scipy.linalg import solve_banded

GAMMA_BACKEND = "math.gamma"


def _numba_disabled():
    value = os.environ.get("SUBDIFF_NO_NUMBA", "").strip().lower()
    return value not in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# Loop implementations. These are written in njit-compatible style: scalars,
# preallocated outputs, no fancy indexing.
# ---------------------------------------------------------------------------


def _l1_row_loop(t, tau, alpha, m):
    # History weights of the L1 operator at step m:
    #   delta^alpha V^m = kappa_mm V^m - sum_{j<m} kappa[j] V^j
    # built from I_j = [(t_m-t_{j-1})^{1-a} - (t_m-t_j)^{1-a}] / (G(2-a) tau_j)
    # via kappa[0] = I_1, kappa[j] = I_{j+1} - I_j. The j = m term reduces to
    # tau_m^{-alpha}/G(2-a) exactly, so it is computed in that form.
    #
    # The power difference is evaluated as b^beta expm1(beta log1p(tau_j/b))
    # with b = t_m - t_j and the exact step size: subtracting the two powers
    # directly loses all significant digits when tau_j << t_m, and that noise
    # would dominate the small late-time weights on strongly graded meshes.
    g2 = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    kappa = np.empty(m)
    tm = t[m]
    prev = 0.0
    for j in range(1, m):
        b = tm - t[j]
        cur = b**beta * math.expm1(beta * math.log1p(tau[j - 1] / b)) / (g2 * tau[j - 1])
        kappa[j - 1] = cur - prev
        prev = cur
    kappa_mm = tau[m - 1] ** (-alpha) / g2
    kappa[m - 1] = kappa_mm - prev
    return kappa_mm, kappa


def _caputo_l1_profile_loop(t, tau, alpha, values):
    # delta^alpha values at every t_m, m = 1..M, as the weighted sum of the
    # piecewise slopes (values[j]-values[j-1])/tau_j. Power differences use
    # the expm1/log1p form for the same precision reason as in _l1_row_loop.
    num_steps = t.shape[0] - 1
    g2 = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    out = np.empty(num_steps)
    for m in range(1, num_steps + 1):
        tm = t[m]
        acc = 0.0
        for j in range(1, m):
            b = tm - t[j]
            weight = b**beta * math.expm1(beta * math.log1p(tau[j - 1] / b))
            acc += (values[j] - values[j - 1]) / tau[j - 1] * weight
        acc += (values[m] - values[m - 1]) / tau[m - 1] * tau[m - 1] ** beta
        out[m - 1] = acc / g2
    return out


def _fode_linear_loop(t, tau, alpha, lam0, lam1, rhs, v0):
    # Forward sweep for (delta^alpha - lam0) U^m - lam1 U^{m-1} = rhs_m:
    #   U^m = (sum_j kappa[j] U^j + lam1 U^{m-1} + rhs_m) / (kappa_mm - lam0)
    # Caller guarantees kappa_mm > lam0 for every step.
    num_steps = t.shape[0] - 1
    g2 = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    out = np.empty(num_steps + 1)
    out[0] = v0
    for m in range(1, num_steps + 1):
        tm = t[m]
        acc = 0.0
        prev = 0.0
        for j in range(1, m):
            b = tm - t[j]
            cur = b**beta * math.expm1(beta * math.log1p(tau[j - 1] / b)) / (g2 * tau[j - 1])
            acc += (cur - prev) * out[j - 1]
            prev = cur
        kappa_mm = tau[m - 1] ** (-alpha) / g2
        acc += (kappa_mm - prev) * out[m - 1]
        out[m] = (acc + lam1 * out[m - 1] + rhs[m - 1]) / (kappa_mm - lam0)
    return out


def _thomas_loop(lower, diag, upper, rhs):
    # Tridiagonal solve; lower[0] and upper[n-1] are ignored.
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    x = np.empty(n)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / den
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


# ---------------------------------------------------------------------------
# Numpy implementations.
# ---------------------------------------------------------------------------


def _interval_weights(t, tau, beta, m):
    # w_j = (t_m - t_{j-1})^beta - (t_m - t_j)^beta for j = 1..m, in the
    # cancellation-free expm1/log1p form (see _l1_row_loop).
    weights = np.empty(m)
    if m > 1:
        b = t[m] - t[1:m]
        weights[: m - 1] = b**beta * np.expm1(beta * np.log1p(tau[: m - 1] / b))
    weights[m - 1] = tau[m - 1] ** beta
    return weights


def _l1_row_numpy(t, tau, alpha, m):
    g2 = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    kappa_mm = tau[m - 1] ** (-alpha) / g2
    if m == 1:
        return kappa_mm, np.array([kappa_mm])
    integrals = _interval_weights(t, tau, beta, m) / (g2 * tau[:m])
    integrals[m - 1] = kappa_mm
    kappa = np.empty(m)
    kappa[0] = integrals[0]
    np.subtract(integrals[1:], integrals[:-1], out=kappa[1:])
    return kappa_mm, kappa


def _caputo_l1_profile_numpy(t, tau, alpha, values):
    num_steps = t.shape[0] - 1
    g2 = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    slopes = np.diff(values) / tau
    out = np.empty(num_steps)
    for m in range(1, num_steps + 1):
        out[m - 1] = np.dot(slopes[:m], _interval_weights(t, tau, beta, m)) / g2
    return out


def _fode_linear_numpy(t, tau, alpha, lam0, lam1, rhs, v0):
    num_steps = t.shape[0] - 1
    out = np.empty(num_steps + 1)
    out[0] = v0
    for m in range(1, num_steps + 1):
        kappa_mm, kappa = _l1_row_numpy(t, tau, alpha, m)
        acc = np.dot(kappa, out[:m])
        out[m] = (acc + lam1 * out[m - 1] + rhs[m - 1]) / (kappa_mm - lam0)
    return out


def _thomas_scipy(lower, diag, upper, rhs):
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


# ---------------------------------------------------------------------------
# Dispatch.
# ---------------------------------------------------------------------------

USING_NUMBA = False
l1_row_numba = None
caputo_l1_profile_numba = None
fode_linear_numba = None
thomas_numba = None

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        l1_row_numba = njit(cache=True)(_l1_row_loop)
        caputo_l1_profile_numba = njit(cache=True)(_caputo_l1_profile_loop)
        fode_linear_numba = njit(cache=True)(_fode_linear_loop)
        thomas_numba = njit(cache=True)(_thomas_loop)
        USING_NUMBA = True

if USING_NUMBA:
    l1_row = l1_row_numba
    caputo_l1_profile = caputo_l1_profile_numba
    fode_linear_solve = fode_linear_numba
    thomas_solve = thomas_numba
else:
    l1_row = _l1_row_numpy
    caputo_l1_profile = _caputo_l1_profile_numpy
    fode_linear_solve = _fode_linear_numpy
    thomas_solve = _thomas_scipy


def backend():
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return "numba" if USING_NUMBA else "numpy"
