"""Acceptance suite: one test per advertised guarantee, one verdict line each.

Every test prints `criterion N (name): PASS/FAIL - detail` before asserting,
so a full run always shows the complete scorecard. The heavy trajectory
ladders are solved once in module fixtures and shared.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning, quad

from subdiff.fdspace import (
    PdeProblem,
    SpatialGrid,
    build_Lh,
    check_h_condition,
    solve_pde,
)
from subdiff.l1op import l1_row
from subdiff.mesh import build_graded
from subdiff.ode import solve_ode
from subdiff.problems import coefficient_constant, cubic_scheme
from subdiff.problems import test_a_problem as make_test_a
from subdiff.problems import test_b_problem as make_test_b
from subdiff.quasilinear import QuasilinearProblem, solve_quasilinear
from subdiff.harness import (
    double_mesh_error,
    verify_comparison_principle,
    verify_stability_bound,
    verify_truncation_bound,
)
from subdiff.schemes import KINDS, check_A1, check_A2


ALPHA_A = 0.4
SIGMA_A = 0.8


def _report(num: int, name: str, ok: bool, detail: str):
    verdict = "PASS" if ok else "FAIL"
    print(f"criterion {num} ({name}): {verdict} - {detail}")


def _doubling_rates(errors: dict) -> list:
    Ms = sorted(errors)
    return [
        math.log2(errors[M] / errors[2 * M]) for M in Ms[:-1]
    ]


@pytest.fixture(scope="module")
def test_a_graded():
    """Test A trajectories on the r = 2 ladder, with max errors and timing."""
    start = time.perf_counter()
    problem = make_test_a(ALPHA_A, SIGMA_A)
    solved = {}
    for k in range(9, 14):
        M = 2**k
        mesh = build_graded(M, 2.0, 1.0)
        traj = solve_ode(problem, mesh)
        err = np.abs(traj.values - mesh.points**SIGMA_A)
        solved[M] = {"mesh": mesh, "error": err, "max": float(np.max(err[1:]))}
    return {"solved": solved, "elapsed": time.perf_counter() - start}


def test_criterion_01_scalar_rates(test_a_graded):
    start = time.perf_counter()
    problem = make_test_a(ALPHA_A, SIGMA_A)
    uniform_errors = {}
    for k in range(9, 14):
        M = 2**k
        mesh = build_graded(M, 1.0, 1.0)
        traj = solve_ode(problem, mesh)
        uniform_errors[M] = float(np.max(np.abs(traj.values - mesh.points**SIGMA_A)[1:]))
    graded_errors = {M: d["max"] for M, d in test_a_graded["solved"].items()}
    graded_rates = _doubling_rates(graded_errors)
    uniform_rates = _doubling_rates(uniform_errors)
    elapsed = time.perf_counter() - start + test_a_graded["elapsed"]
    ok = (
        all(abs(rate - 1.6) <= 0.1 for rate in graded_rates)
        and all(abs(rate - 0.8) <= 0.1 for rate in uniform_rates)
        and elapsed < 30.0
    )
    _report(
        1,
        "scalar temporal rates",
        ok,
        f"r=2 rates {min(graded_rates):.3f}..{max(graded_rates):.3f} (want 1.6+/-0.1), "
        f"r=1 rates {min(uniform_rates):.3f}..{max(uniform_rates):.3f} (want 0.8+/-0.1), "
        f"{elapsed:.1f}s of 30s",
    )
    assert ok


def test_criterion_02_scalar_pointwise_profile(test_a_graded):
    spreads = []
    for M in (2**10, 2**12):
        data = test_a_graded["solved"][M]
        t = data["mesh"].points
        lo = M // 8
        m_idx = np.arange(lo, M + 1)
        shape = M ** -(2.0 - ALPHA_A) * t[m_idx] ** (SIGMA_A - (2.0 - ALPHA_A) / 2.0)
        ratios = data["error"][m_idx] / shape
        med = float(np.median(ratios))
        spreads.append(
            (M, float(np.max(ratios)) / med, med / float(np.min(ratios)))
        )
    ok = all(up <= 3.0 and down <= 3.0 for _, up, down in spreads)
    detail = ", ".join(
        f"M={M}: x{up:.2f} above / x{down:.2f} below median" for M, up, down in spreads
    )
    _report(2, "scalar pointwise error shape", ok, detail + " (want within x3)")
    assert ok


def test_criterion_03_field_rates():
    start = time.perf_counter()
    alpha = 0.4
    sigma = alpha
    r = (2.0 - alpha) / sigma
    N = 2**11
    grid = SpatialGrid(N, 0.0, math.pi)
    rates = {}
    for kind, target, tol in (("imex2", 1.6, 0.15), ("imex1", 1.0, 0.15)):
        problem = make_test_b(alpha, sigma, scheme_kind=kind)
        errors = {}
        for k in range(7, 12):
            M = 2**k
            traj = solve_pde(problem, build_graded(M, r, 1.0), grid)
            errors[M] = float(np.max(traj.error_max[1:]))
        rates[kind] = _doubling_rates(errors)
    elapsed = time.perf_counter() - start
    ok = (
        all(abs(rate - 1.6) <= 0.15 for rate in rates["imex2"])
        and all(abs(rate - 1.0) <= 0.15 for rate in rates["imex1"])
        and elapsed < 300.0
    )
    _report(
        3,
        "field temporal rates",
        ok,
        f"imex2 rates {min(rates['imex2']):.3f}..{max(rates['imex2']):.3f} (want 1.6+/-0.15), "
        f"imex1 rates {min(rates['imex1']):.3f}..{max(rates['imex1']):.3f} (want 1.0+/-0.15), "
        f"{elapsed:.1f}s of 300s",
    )
    assert ok


TABLE_QUASILINEAR = {
    0.3: ([2.257e-4, 7.628e-5, 2.530e-5, 8.295e-6], [1.565, 1.592, 1.609]),
    0.5: ([4.860e-4, 1.869e-4, 6.916e-5, 2.521e-5], [1.379, 1.434, 1.456]),
    0.7: ([9.214e-4, 4.168e-4, 1.798e-4, 7.611e-5], [1.144, 1.213, 1.241]),
}


def test_criterion_04_quasilinear_table():
    from subdiff.problems import fisher_kolmogorov_problem

    start = time.perf_counter()
    grid = SpatialGrid(2**12, 0.0, 1.0)
    lines = []
    ok = True
    for alpha, (ref_errors, ref_rates) in TABLE_QUASILINEAR.items():
        r = (2.0 - alpha) / alpha
        problem = fisher_kolmogorov_problem(alpha)
        solved = {
            M: solve_quasilinear(problem, build_graded(M, r, 1.0), grid)
            for M in (2**k for k in range(7, 12))
        }
        errors = {
            M: float(np.max(double_mesh_error(solved[M], solved[2 * M])[1:]))
            for M in (2**k for k in range(7, 11))
        }
        rates = _doubling_rates(errors)
        err_list = [errors[2**k] for k in range(7, 11)]
        factor = max(
            max(e / ref, ref / e) for e, ref in zip(err_list, ref_errors)
        )
        rate_gap = max(abs(rate - ref) for rate, ref in zip(rates, ref_rates))
        ok = ok and factor <= 3.0 and rate_gap <= 0.1
        lines.append(f"alpha={alpha}: errors within x{factor:.2f}, rates within {rate_gap:.3f}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 600.0
    _report(
        4,
        "quasilinear reference table",
        ok,
        "; ".join(lines) + f" (want x3 and 0.1); {elapsed:.1f}s of 600s",
    )
    assert ok


def _caputo_pwlinear_quadrature(mesh, alpha, values):
    """Caputo derivative of the piecewise-linear interpolant at t_M, by quadrature."""
    t = mesh.points
    M = mesh.M
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for j in range(M):
            slope = (values[j + 1] - values[j]) / (t[j + 1] - t[j])
            part, _ = quad(
                lambda s: (t[M] - s) ** (-alpha),
                t[j],
                t[j + 1],
                epsabs=1e-14,
                epsrel=1e-12,
            )
            total += slope * part
    return total / math.gamma(1.0 - alpha)


def test_criterion_05_kernel_identities():
    rng = np.random.default_rng(0)
    worst_rowsum = 0.0
    for _ in range(1000):
        alpha = rng.uniform(0.05, 0.95)
        r = rng.uniform(1.0, 4.0)
        M = int(rng.integers(2, 65))
        mesh = build_graded(M, r, float(rng.uniform(0.5, 2.0)))
        m = int(rng.integers(1, M + 1))
        row = l1_row(mesh, alpha, m)
        gap = abs(row.kappa_mm - float(np.sum(row.kappa))) / row.kappa_mm
        worst_rowsum = max(worst_rowsum, gap)

    worst_linear = 0.0
    for _ in range(100):
        alpha = rng.uniform(0.05, 0.95)
        mesh = build_graded(int(rng.integers(2, 33)), rng.uniform(1.0, 3.0), 1.0)
        c0, c1 = rng.normal(size=2)
        values = c0 + c1 * mesh.points
        m = mesh.M
        row = l1_row(mesh, alpha, m)
        approx = row.kappa_mm * values[m] - float(row.kappa @ values[:m])
        exact = c1 * mesh.points[m] ** (1.0 - alpha) / math.gamma(2.0 - alpha)
        worst_linear = max(worst_linear, abs(approx - exact) / (1.0 + abs(exact)))

    worst_quad = 0.0
    for _ in range(25):
        alpha = rng.uniform(0.1, 0.9)
        M = int(rng.integers(2, 33))
        mesh = build_graded(M, rng.uniform(1.0, 3.0), float(rng.uniform(0.5, 1.5)))
        values = rng.normal(size=M + 1)
        row = l1_row(mesh, alpha, M)
        approx = row.kappa_mm * values[M] - float(row.kappa @ values[:M])
        exact = _caputo_pwlinear_quadrature(mesh, alpha, values)
        worst_quad = max(worst_quad, abs(approx - exact) / (1.0 + abs(exact)))

    ok = worst_rowsum <= 1e-12 and worst_linear <= 1e-12 and worst_quad <= 1e-9
    _report(
        5,
        "kernel identities",
        ok,
        f"row-sum gap {worst_rowsum:.2e} (want <=1e-12), "
        f"linear exactness {worst_linear:.2e} (want <=1e-12), "
        f"quadrature oracle {worst_quad:.2e} (want <=1e-9)",
    )
    assert ok


def test_criterion_06_comparison_principle():
    result = verify_comparison_principle(n_trials=1000, seed=0)
    ok = result["pass"]
    _report(
        6,
        "comparison principle",
        ok,
        f"max value {result['max_value']:.2e} over {result['n_trials']} trials "
        "(want <=1e-12)",
    )
    assert ok


def test_criterion_07_stability_envelope():
    result = verify_stability_bound()
    ok = result["pass"]
    _report(
        7,
        "stability envelope",
        ok,
        f"worst sup-ratio spread {result['max_spread']:.3f} across M=256..4096 "
        "(want <=1.5)",
    )
    assert ok


def test_criterion_08_truncation_envelope():
    result = verify_truncation_bound()
    ok = result["pass"]
    _report(
        8,
        "truncation envelope",
        ok,
        f"worst ratio spread {result['max_spread']:.3f} (want <=1.5), "
        f"linear residual {result['linear_max']:.2e} (want <=1e-12)",
    )
    assert ok


def test_criterion_09_spatial_structure():
    # (a) every operator passing the mesh condition is an M-matrix
    rng = np.random.default_rng(1)
    scheme = cubic_scheme("imex1")
    checked = 0
    m_matrix_ok = True
    for _ in range(300):
        N = int(rng.integers(4, 65))
        a0 = float(rng.uniform(0.05, 2.0))
        b0 = float(rng.uniform(-8.0, 8.0))
        c0 = float(rng.uniform(0.0, 2.0))
        problem = PdeProblem(
            alpha=0.5,
            a=coefficient_constant(a0),
            b=coefficient_constant(b0),
            c=coefficient_constant(c0),
            scheme=scheme,
            g=lambda x, t: 0.0 * x,
            u0=lambda x: 0.0 * x,
            T=1.0,
        )
        grid = SpatialGrid(N)
        if not check_h_condition(grid, problem):
            continue
        checked += 1
        kappa = float(rng.uniform(0.01, 10.0))
        if not build_Lh(grid, problem, 0.0).is_m_matrix(kappa):
            m_matrix_ok = False

    # (b) second-order spatial accuracy on a temporally smooth solution
    errors = {}
    mesh = build_graded(2**12, 1.0, 1.0)
    for N in (32, 64, 128):
        problem = make_test_b(0.4, 2.0, scheme_kind="imex2")
        traj = solve_pde(problem, mesh, SpatialGrid(N, 0.0, math.pi))
        errors[N] = float(np.max(traj.error_max[1:]))
    spatial_rates = [
        math.log2(errors[32] / errors[64]),
        math.log2(errors[64] / errors[128]),
    ]
    rates_ok = all(abs(rate - 2.0) <= 0.1 for rate in spatial_rates)

    # (c) the quasilinear march with a = 1, b absent reproduces the
    # semilinear march
    mesh = build_graded(64, 2.0, 1.0)
    grid = SpatialGrid(129)
    quasi = QuasilinearProblem(
        alpha=0.5,
        a=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        f=lambda x, t, u: u * (1.0 - u),
        u0=lambda x: np.sin(math.pi * np.asarray(x)),
        T=1.0,
        c_a=1.0,
        c_bar_a=1.0,
        C_a=0.0,
        A=lambda w: w,
        A_inv=lambda W: W,
        f_u=lambda x, t, u: 1.0 - 2.0 * u,
        lambda0=1.0,
        C_u=1.0,
    )
    from subdiff.schemes import make_scheme

    semi_scheme = make_scheme(
        "implicit",
        lambda u: u * (1.0 - u),
        fp=lambda u: 1.0 - 2.0 * u,
        solution_range=(-0.5, 1.5),
    )
    semi = PdeProblem(
        alpha=0.5,
        a=lambda x, t: np.ones_like(x),
        b=None,
        c=None,
        scheme=semi_scheme,
        g=lambda x, t: 0.0 * x,
        u0=lambda x: np.sin(math.pi * np.asarray(x)),
        T=1.0,
    )
    gap = float(
        np.max(
            np.abs(
                solve_quasilinear(quasi, mesh, grid).values
                - solve_pde(semi, mesh, grid).values
            )
        )
    )
    degeneration_ok = gap <= 1e-11

    ok = m_matrix_ok and checked >= 50 and rates_ok and degeneration_ok
    _report(
        9,
        "spatial structure",
        ok,
        f"M-matrix held on {checked} admissible draws, "
        f"spatial rates {spatial_rates[0]:.3f}/{spatial_rates[1]:.3f} (want 2+/-0.1), "
        f"degeneration gap {gap:.2e} (want <=1e-11)",
    )
    assert ok


def test_criterion_10_scheme_admissibility():
    lines = []
    ok = True
    for kind in KINDS:
        scheme = cubic_scheme(kind)
        L_emp = check_A1(scheme)
        min_slope, wlip = check_A2(scheme)
        kind_ok = (
            L_emp <= scheme.L + 1e-6
            and min_slope >= -1e-6
            and wlip <= scheme.lambda1 + 1e-6
        )
        ok = ok and kind_ok
        lines.append(f"{kind}: L {L_emp:.3f}<={scheme.L:.3f}, wlip {wlip:.3f}<={scheme.lambda1:.3f}")
    _report(
        10,
        "scheme admissibility",
        ok,
        "; ".join(lines) + " (empirical <= declared + 1e-6)",
    )
    assert ok
