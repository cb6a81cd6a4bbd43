"""Command line harness.

Subcommands:
  solve-ode          solve the scalar catalog problem and write the per-step
                     profile CSV (values, errors, theoretical bounds)
  solve-pde          solve a semilinear field problem (built-in or from a
                     TOML/JSON config) and write per-step errors
  solve-quasilinear  solve a quasilinear catalog problem and write a per-step
                     summary with outer iteration counts
  convergence        run a mesh ladder and write the rate table CSV
  verify             run the stability, truncation, and comparison-principle
                     suites; exits nonzero when any of them fails
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .fdspace import PdeProblem, SpatialGrid, solve_pde
from .harness import (
    ProfileData,
    StudyConfig,
    emit_csv,
    emit_profile_csv,
    load_config,
    run_convergence,
    run_verification,
    study_from_config,
)
from .mesh import build_graded
from .ode import solve_ode, theoretical_bound
from .problems import (
    coefficient_from_config,
    cubic_scheme,
    fisher_kolmogorov_problem,
    test_a_problem,
    test_b_problem,
)
from .quasilinear import solve_quasilinear


def _add_common(parser, *names):
    if "alpha" in names:
        parser.add_argument("--alpha", type=float, required=True, help="Caputo order in (0, 1)")
    if "alpha?" in names:
        # commands that can read alpha from a config file instead
        parser.add_argument("--alpha", type=float, help="Caputo order in (0, 1)")
    if "sigma" in names:
        parser.add_argument("--sigma", type=float, help="regularity exponent of the data")
    if "r" in names:
        parser.add_argument("--r", type=float, default=1.0, help="mesh grading exponent")
    if "T" in names:
        parser.add_argument("--T", type=float, default=1.0, help="final time")
    if "scheme" in names:
        parser.add_argument(
            "--scheme",
            default="implicit",
            help="semilinear discretization kind",
        )
    if "seed" in names:
        parser.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    if "out" in names:
        parser.add_argument("--out", required=True, help="output CSV path")


def _cmd_solve_ode(args) -> int:
    if args.sigma is None:
        raise SystemExit("solve-ode needs --sigma")
    problem = test_a_problem(args.alpha, args.sigma, args.T)
    mesh = build_graded(args.M, args.r, args.T)
    traj = solve_ode(problem, mesh)
    t_pos = mesh.points[1:]
    exact = t_pos**args.sigma
    profile = ProfileData(
        M=args.M,
        t=t_pos,
        values=traj.values[1:],
        exact=exact,
        error=np.abs(traj.values[1:] - exact),
        bound_E=theoretical_bound(args.alpha, args.sigma, args.r, args.M, t_pos, "E", args.T),
        bound_E_tilde=theoretical_bound(
            args.alpha, args.sigma, args.r, args.M, t_pos, "E_tilde", args.T
        ),
    )
    emit_profile_csv(profile, args.out)
    print(f"solve-ode: M={args.M} max error {np.max(profile.error):.6e} -> {args.out}")
    return 0


def _pde_problem_from_config(mapping) -> tuple:
    alpha = float(mapping["alpha"])
    scheme = cubic_scheme(mapping.get("scheme", "implicit")) if mapping.get("f", "cubic") == "cubic" else None
    if scheme is None:
        raise SystemExit("config key f must be 'cubic' (the catalog has no other term)")
    grid_cfg = mapping.get("grid", {})
    grid = SpatialGrid(
        int(grid_cfg["N"]), float(grid_cfg.get("x_lo", 0.0)), float(grid_cfg.get("x_hi", 1.0))
    )
    mesh_cfg = mapping.get("mesh", {})
    T = float(mesh_cfg.get("T", 1.0))
    mesh = build_graded(int(mesh_cfg["M"]), float(mesh_cfg.get("r", 1.0)), T)

    def g(x, t):
        return np.zeros(np.shape(x))

    def u0(x):
        return np.asarray(mapping.get("u0_scale", 0.0)) * np.ones(np.shape(x))

    problem = PdeProblem(
        alpha=alpha,
        a=coefficient_from_config(mapping.get("a", 1.0)),
        b=coefficient_from_config(mapping.get("b", 0.0)),
        c=coefficient_from_config(mapping.get("c", 0.0)),
        scheme=scheme,
        g=g,
        u0=u0,
        T=T,
        exact=None,
    )
    return problem, mesh, grid


def _cmd_solve_pde(args) -> int:
    if args.config is not None:
        problem, mesh, grid = _pde_problem_from_config(load_config(args.config))
    else:
        if args.alpha is None or args.sigma is None or args.N is None:
            raise SystemExit("solve-pde needs --config, or --alpha, --sigma, and --N for test-b")
        problem = test_b_problem(args.alpha, args.sigma, args.scheme, args.T)
        mesh = build_graded(args.M, args.r, args.T)
        grid = SpatialGrid(args.N, 0.0, math.pi)
    traj = solve_pde(problem, mesh, grid)
    lines = ["m,t_m,error_max,error_l2"]
    if traj.error_max is None:
        # no exact solution: report the solution magnitude instead of errors
        mags = np.max(np.abs(traj.values), axis=1)
        lines = ["m,t_m,max_abs_u"]
        for m in range(1, mesh.M + 1):
            lines.append(f"{m},{mesh.points[m]:.17g},{mags[m]:.17g}")
    else:
        for m in range(1, mesh.M + 1):
            lines.append(
                f"{m},{mesh.points[m]:.17g},{traj.error_max[m]:.17g},{traj.error_l2[m]:.17g}"
            )
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if traj.error_max is not None:
        print(f"solve-pde: M={mesh.M} N={grid.N} max error {np.max(traj.error_max):.6e} -> {args.out}")
    else:
        print(f"solve-pde: M={mesh.M} N={grid.N} -> {args.out}")
    return 0


def _cmd_solve_quasilinear(args) -> int:
    if args.problem != "fisher-kolmogorov":
        raise SystemExit("the quasilinear catalog has one problem: fisher-kolmogorov")
    problem = fisher_kolmogorov_problem(args.alpha, args.T)
    mesh = build_graded(args.M, args.r, args.T)
    grid = SpatialGrid(args.N, 0.0, 1.0)
    traj = solve_quasilinear(problem, mesh, grid)
    lines = ["m,t_m,max_abs_u,outer_iterations"]
    mags = np.max(np.abs(traj.values), axis=1)
    for m in range(1, mesh.M + 1):
        lines.append(
            f"{m},{mesh.points[m]:.17g},{mags[m]:.17g},{traj.outer_iterations[m - 1]}"
        )
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"solve-quasilinear: M={args.M} N={args.N} -> {args.out}")
    return 0


def _cmd_convergence(args) -> int:
    if args.config is not None:
        cfg = study_from_config(load_config(args.config))
    else:
        if args.alpha is None:
            raise SystemExit("convergence needs --alpha (or --config)")
        if args.M is None:
            raise SystemExit("convergence needs --M as a comma-separated ladder")
        cfg = StudyConfig(
            problem=args.problem,
            alpha=args.alpha,
            r=args.r,
            M_values=tuple(int(tok) for tok in args.M.split(",")),
            scheme=args.scheme,
            sigma=args.sigma,
            N=args.N,
            T=args.T,
            error_kind="double-mesh" if args.double_mesh else "exact",
            workers=args.workers,
        )
    report = run_convergence(cfg)
    emit_csv(report, args.out)
    print(f"convergence: {cfg.problem} ({cfg.scheme}), alpha={cfg.alpha}, r={cfg.r}")
    for entry in report.entries:
        rate = f"{entry.rate:.3f}" if entry.rate is not None else "   --"
        print(f"  M={entry.M:6d}  error={entry.error_max:.6e}  rate={rate}")
    print(f"table written to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    result = run_verification(seed=args.seed, quick=args.quick)
    comparison = result["comparison"]
    stability = result["stability"]
    truncation = result["truncation"]
    print(
        f"comparison principle: max value {comparison['max_value']:.3e} over "
        f"{comparison['n_trials']} trials -> {'pass' if comparison['pass'] else 'FAIL'}"
    )
    print(
        f"stability envelope:   worst ratio spread {stability['max_spread']:.3f} "
        f"-> {'pass' if stability['pass'] else 'FAIL'}"
    )
    print(
        f"truncation envelope:  worst ratio spread {truncation['max_spread']:.3f}, "
        f"linear residual {truncation['linear_max']:.3e} "
        f"-> {'pass' if truncation['pass'] else 'FAIL'}"
    )
    return 0 if result["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subdiff",
        description="L1 solvers for semilinear and quasilinear subdiffusion on graded meshes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-ode", help="solve the scalar catalog problem")
    _add_common(p, "alpha", "sigma", "r", "T", "out")
    p.add_argument("--M", type=int, required=True, help="number of time steps")
    p.set_defaults(fn=_cmd_solve_ode)

    p = sub.add_parser("solve-pde", help="solve a semilinear field problem")
    _add_common(p, "alpha?", "sigma", "r", "T", "scheme", "out")
    p.add_argument("--M", type=int, default=64, help="number of time steps")
    p.add_argument("--N", type=int, help="number of interior spatial nodes")
    p.add_argument("--config", help="TOML/JSON problem description")
    p.set_defaults(fn=_cmd_solve_pde)

    p = sub.add_parser("solve-quasilinear", help="solve a quasilinear catalog problem")
    _add_common(p, "alpha", "r", "T", "out")
    p.add_argument("--M", type=int, required=True, help="number of time steps")
    p.add_argument("--N", type=int, required=True, help="number of interior spatial nodes")
    p.add_argument("--problem", default="fisher-kolmogorov")
    p.set_defaults(fn=_cmd_solve_quasilinear)

    p = sub.add_parser("convergence", help="run a mesh ladder and tabulate rates")
    _add_common(p, "alpha?", "sigma", "r", "T", "scheme", "out")
    p.add_argument("--problem", default="test-a", help="test-a, test-b, or fisher-kolmogorov")
    p.add_argument("--M", help="comma-separated ladder, e.g. 512,1024,2048")
    p.add_argument("--N", type=int, help="spatial nodes (field problems)")
    p.add_argument("--double-mesh", action="store_true", help="use double-mesh error estimates")
    p.add_argument("--workers", type=int, default=1, help="parallel ladder tasks")
    p.add_argument("--config", help="TOML/JSON study description")
    p.set_defaults(fn=_cmd_convergence)

    p = sub.add_parser("verify", help="run the verification suites")
    _add_common(p, "seed")
    p.add_argument("--quick", action="store_true", help="smaller sweeps for a fast check")
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
