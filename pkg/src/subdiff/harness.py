"""Convergence studies, verification suites, and deterministic CSV output.

The harness drives the solvers over mesh ladders, assembles error reports
with observed rates, and runs the randomized and swept property checks
(comparison principle, stability envelope, truncation envelope) behind the
verify command. Ladder entries are independent tasks; with workers > 1 they
run on a thread pool and the report assembly stays a single-threaded
reduction, so reports and CSV files are byte-identical for identical
configurations regardless of worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .fdspace import SpatialGrid, solve_pde
from .l1op import truncation_bound, truncation_profile
from .mesh import TemporalMesh, build_graded, is_nested_refinement
from .ode import (
    solve_ode,
    solve_relaxed_linear,
    stability_envelope,
    step_condition_ok,
    theoretical_bound,
)
from .problems import (
    PROBLEM_IDS,
    fisher_kolmogorov_problem,
    test_a_problem,
    test_b_problem,
)
from .quasilinear import solve_quasilinear

try:
    import tomllib as _toml
except ImportError:
    import tomli as _toml


def load_config(path: str) -> dict:
    """Parse a TOML config file, falling back to JSON."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if str(path).endswith(".json"):
        return json.loads(raw.decode())
    try:
        return _toml.loads(raw.decode())
    except _toml.TOMLDecodeError:
        return json.loads(raw.decode())


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of one convergence study over a mesh ladder."""

    problem: str
    alpha: float
    r: float
    M_values: tuple
    scheme: str = "implicit"
    sigma: Optional[float] = None
    N: Optional[int] = None
    T: float = 1.0
    error_kind: str = "exact"
    profile_M: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEM_IDS:
            raise ValueError(f"unknown problem {self.problem!r}, expected one of {PROBLEM_IDS}")
        if self.error_kind not in ("exact", "double-mesh"):
            raise ValueError("error_kind must be 'exact' or 'double-mesh'")
        object.__setattr__(self, "M_values", tuple(int(M) for M in self.M_values))


def study_from_config(mapping: dict) -> StudyConfig:
    """Build a StudyConfig from a parsed config mapping."""
    known = {
        "problem",
        "alpha",
        "r",
        "M",
        "M_values",
        "scheme",
        "sigma",
        "N",
        "T",
        "error_kind",
        "profile_M",
        "workers",
    }
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    M_values = mapping.get("M_values", mapping.get("M"))
    if M_values is None:
        raise ValueError("config needs M (an integer or list of ladder sizes)")
    if isinstance(M_values, (int, float)):
        M_values = [int(M_values)]
    return StudyConfig(
        problem=mapping["problem"],
        alpha=float(mapping["alpha"]),
        r=float(mapping.get("r", 1.0)),
        M_values=tuple(int(M) for M in M_values),
        scheme=mapping.get("scheme", "implicit"),
        sigma=None if mapping.get("sigma") is None else float(mapping["sigma"]),
        N=None if mapping.get("N") is None else int(mapping["N"]),
        T=float(mapping.get("T", 1.0)),
        error_kind=mapping.get("error_kind", "exact"),
        profile_M=None if mapping.get("profile_M") is None else int(mapping["profile_M"]),
        workers=int(mapping.get("workers", 1)),
    )


@dataclass
class LadderEntry:
    """One row of a convergence table."""

    M: int
    error_max: float
    error_l2: float
    rate: Optional[float] = None


@dataclass
class ProfileData:
    """Per-step errors and bounds for one mesh of the ladder."""

    M: int
    t: np.ndarray
    values: np.ndarray
    exact: Optional[np.ndarray]
    error: np.ndarray
    bound_E: Optional[np.ndarray]
    bound_E_tilde: Optional[np.ndarray]


@dataclass
class ErrorReport:
    """Convergence table plus optional pointwise profile."""

    problem: str
    scheme: str
    alpha: float
    sigma: Optional[float]
    r: float
    N: Optional[int]
    entries: List[LadderEntry] = field(default_factory=list)
    profile: Optional[ProfileData] = None

    @property
    def rates(self) -> list:
        return [e.rate for e in self.entries if e.rate is not None]


def double_mesh_error(coarse, fine) -> np.ndarray:
    """Per-shared-time differences |U_M^m - U_{2M}^{2m}|, m = 0..M.

    Trajectories must live on nested meshes (fine halves coarse); field
    trajectories must share the spatial grid. For fields the nodal max is
    taken at each shared time.
    """
    if not is_nested_refinement(coarse.mesh, fine.mesh):
        raise ValueError("double-mesh differences need nested meshes (M and 2M, same r)")
    if coarse.values.ndim == 2:
        g1, g2 = coarse.grid, fine.grid
        if (g1.N, g1.x_lo, g1.x_hi) != (g2.N, g2.x_lo, g2.x_hi):
            raise ValueError("double-mesh differences need a shared spatial grid")
        return np.max(np.abs(coarse.values - fine.values[::2]), axis=1)
    return np.abs(coarse.values - fine.values[::2])


def _solve_study_case(cfg: StudyConfig, M: int):
    mesh = build_graded(M, cfg.r, cfg.T)
    if cfg.problem == "test-a":
        problem = test_a_problem(cfg.alpha, cfg.sigma, cfg.T)
        return solve_ode(problem, mesh)
    if cfg.problem == "test-b":
        if cfg.sigma is None or cfg.N is None:
            raise ValueError("test-b needs sigma and N")
        problem = test_b_problem(cfg.alpha, cfg.sigma, cfg.scheme, cfg.T)
        grid = SpatialGrid(cfg.N, 0.0, math.pi)
        return solve_pde(problem, mesh, grid)
    if cfg.N is None:
        raise ValueError("fisher-kolmogorov needs N")
    problem = fisher_kolmogorov_problem(cfg.alpha, cfg.T)
    grid = SpatialGrid(cfg.N, 0.0, 1.0)
    return solve_quasilinear(problem, mesh, grid)


def _entry_from_exact(cfg: StudyConfig, M: int, traj) -> LadderEntry:
    if cfg.problem == "test-a":
        problem_exact = np.asarray(traj.mesh.points, dtype=float) ** cfg.sigma
        err = np.abs(traj.values - problem_exact)[1:]
        l2 = float(np.sqrt(np.sum(traj.mesh.tau * err * err)))
        return LadderEntry(M=M, error_max=float(np.max(err)), error_l2=l2)
    return LadderEntry(
        M=M,
        error_max=float(np.max(traj.error_max[1:])),
        error_l2=float(np.max(traj.error_l2[1:])),
    )


def _entry_from_double_mesh(cfg: StudyConfig, M: int, coarse, fine) -> LadderEntry:
    diffs = double_mesh_error(coarse, fine)[1:]
    error_max = float(np.max(diffs))
    if coarse.values.ndim == 2:
        h = coarse.grid.h
        gap = coarse.values[1:] - fine.values[::2][1:]
        l2 = float(np.max(np.sqrt(h * np.sum(gap * gap, axis=1))))
    else:
        l2 = float(np.sqrt(np.sum(coarse.mesh.tau * diffs * diffs)))
    return LadderEntry(M=M, error_max=error_max, error_l2=l2)


def run_convergence(cfg: StudyConfig) -> ErrorReport:
    """Run the ladder described by cfg and assemble the error report.

    The fisher-kolmogorov problem has no closed-form solution, so its errors
    always come from double-mesh differences; the other problems compare
    against the exact solution unless error_kind says otherwise. Rates are
    attached between consecutive entries whose sizes double.
    """
    error_kind = cfg.error_kind
    if cfg.problem == "fisher-kolmogorov":
        error_kind = "double-mesh"
    needed = set(cfg.M_values)
    if error_kind == "double-mesh":
        needed |= {2 * M for M in cfg.M_values}
    needed = sorted(needed)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            solved = dict(zip(needed, pool.map(lambda M: _solve_study_case(cfg, M), needed)))
    else:
        solved = {M: _solve_study_case(cfg, M) for M in needed}

    entries = []
    for M in sorted(cfg.M_values):
        if error_kind == "double-mesh":
            entries.append(_entry_from_double_mesh(cfg, M, solved[M], solved[2 * M]))
        else:
            entries.append(_entry_from_exact(cfg, M, solved[M]))
    for prev, cur in zip(entries, entries[1:]):
        if cur.M == 2 * prev.M and cur.error_max > 0.0 and prev.error_max > 0.0:
            prev.rate = float(np.log2(prev.error_max / cur.error_max))

    profile = None
    if cfg.profile_M is not None:
        if cfg.problem != "test-a":
            raise ValueError("pointwise profiles with bounds are available for test-a only")
        traj = solved.get(cfg.profile_M) or _solve_study_case(cfg, cfg.profile_M)
        t_pos = traj.mesh.points[1:]
        exact_vals = t_pos**cfg.sigma
        error = np.abs(traj.values[1:] - exact_vals)
        profile = ProfileData(
            M=cfg.profile_M,
            t=t_pos,
            values=traj.values[1:],
            exact=exact_vals,
            error=error,
            bound_E=theoretical_bound(cfg.alpha, cfg.sigma, cfg.r, cfg.profile_M, t_pos, "E", cfg.T),
            bound_E_tilde=theoretical_bound(
                cfg.alpha, cfg.sigma, cfg.r, cfg.profile_M, t_pos, "E_tilde", cfg.T
            ),
        )

    return ErrorReport(
        problem=cfg.problem,
        scheme=cfg.scheme,
        alpha=cfg.alpha,
        sigma=cfg.sigma,
        r=cfg.r,
        N=cfg.N,
        entries=entries,
        profile=profile,
    )


# ---------------------------------------------------------------------------
# Deterministic CSV output. Floats are written with 17 significant digits,
# which round-trips IEEE doubles exactly.
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{float(x):.17g}"


def emit_csv(report: ErrorReport, path: str):
    """Write the convergence table with a metadata comment line."""
    meta = (
        f"# problem={report.problem} scheme={report.scheme} alpha={_fmt(report.alpha)}"
        f" sigma={_fmt(report.sigma) if report.sigma is not None else 'none'}"
        f" r={_fmt(report.r)} N={report.N if report.N is not None else 'none'}"
    )
    lines = [meta, "M,error_max,error_l2,rate"]
    for e in report.entries:
        lines.append(f"{e.M},{_fmt(e.error_max)},{_fmt(e.error_l2)},{_fmt(e.rate)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path: str) -> ErrorReport:
    """Read back a table written by emit_csv."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    meta = {}
    for token in lines[0].lstrip("# ").split():
        key, _, val = token.partition("=")
        meta[key] = val
    entries = []
    for ln in lines[2:]:
        M, emax, el2, rate = ln.split(",")
        entries.append(
            LadderEntry(
                M=int(M),
                error_max=float(emax),
                error_l2=float(el2),
                rate=float(rate) if rate else None,
            )
        )
    return ErrorReport(
        problem=meta["problem"],
        scheme=meta["scheme"],
        alpha=float(meta["alpha"]),
        sigma=None if meta["sigma"] == "none" else float(meta["sigma"]),
        r=float(meta["r"]),
        N=None if meta["N"] == "none" else int(meta["N"]),
        entries=entries,
    )


def emit_profile_csv(profile: ProfileData, path: str):
    """Write per-step values, errors, and bounds (solve-ode output format)."""
    lines = ["m,t_m,U_m,u_exact,error,bound_E,bound_E_tilde"]
    M = profile.t.shape[0]
    for i in range(M):
        exact = _fmt(profile.exact[i]) if profile.exact is not None else ""
        be = _fmt(profile.bound_E[i]) if profile.bound_E is not None else ""
        bt = _fmt(profile.bound_E_tilde[i]) if profile.bound_E_tilde is not None else ""
        lines.append(
            f"{i + 1},{_fmt(profile.t[i])},{_fmt(profile.values[i])},{exact},"
            f"{_fmt(profile.error[i])},{be},{bt}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_truncation_csv(mesh: TemporalMesh, alpha: float, sigma: float, path: str):
    """Write the truncation profile on t**sigma with its envelope and ratio."""
    residual = truncation_profile(mesh, alpha, sigma)
    bound = truncation_bound(mesh, alpha, sigma)
    lines = ["m,t_m,r_m,bound_m,ratio"]
    for i in range(mesh.M):
        lines.append(
            f"{i + 1},{_fmt(mesh.points[i + 1])},{_fmt(residual[i])},"
            f"{_fmt(bound[i])},{_fmt(abs(residual[i]) / bound[i])}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_plotdata(report: ErrorReport, path: str):
    """Write (t, error, bound) triples of the report's profile for log-log plots."""
    if report.profile is None:
        raise ValueError("report carries no pointwise profile")
    p = report.profile
    lines = ["t,error,bound"]
    for i in range(p.t.shape[0]):
        bound = _fmt(p.bound_E[i]) if p.bound_E is not None else ""
        lines.append(f"{_fmt(p.t[i])},{_fmt(p.error[i])},{bound}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Verification suites.
# ---------------------------------------------------------------------------


def verify_comparison_principle(n_trials: int = 1000, seed: int = 0) -> dict:
    """Randomized check of the discrete comparison principle.

    Each trial draws a graded mesh, admissible lambda0, lambda1 in [0, 1],
    a nonpositive initial value, and nonpositive sources, then solves the
    relaxed linear recurrence. The principle demands all values stay
    nonpositive; the report carries the largest value seen.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_trials):
        alpha = rng.uniform(0.05, 0.95)
        r = rng.uniform(1.0, 4.0)
        M = int(rng.integers(4, 49))
        T = rng.uniform(0.5, 2.0)
        mesh = build_graded(M, r, T)
        kappa_min = float(np.min(mesh.tau**-alpha)) / math.gamma(2.0 - alpha)
        lambda0 = rng.uniform(0.0, min(1.0, 0.95 * kappa_min))
        lambda1 = rng.uniform(0.0, 1.0)
        v0 = -rng.uniform(0.0, 1.0)
        rhs = -rng.uniform(0.0, 1.0, M)
        values = solve_relaxed_linear(mesh, alpha, lambda0, lambda1, rhs, v0)
        worst = max(worst, float(np.max(values)))
    return {"n_trials": n_trials, "max_value": worst, "pass": worst <= 1e-12}


def verify_stability_bound(
    alpha: float = 0.4,
    gammas=(-1.0, -0.2, 0.0, 0.3, "alpha"),
    lambdas=(0.0, 0.5),
    rs=(1.0, 2.0, 5.0),
    Ms=(256, 1024, 4096),
    T: float = 1.0,
) -> dict:
    """Sweep the stability envelope: sup_j U^j / cal-U^j must be M-stable.

    For each (gamma, lambda0, lambda1, r) the relaxed recurrence is driven by
    rhs_m = (tau / t_m)**(gamma + 1) and the sup ratio against the envelope
    is recorded per M. The suite passes when every combination's ratios vary
    by less than 50% (max/min <= 1.5) across the ladder.
    """
    rows = []
    worst_spread = 0.0
    for gamma_spec in gammas:
        gamma = alpha if gamma_spec == "alpha" else float(gamma_spec)
        for lambda0 in lambdas:
            for lambda1 in lambdas:
                for r in rs:
                    ratios = []
                    for M in Ms:
                        mesh = build_graded(M, r, T)
                        if not step_condition_ok(mesh, alpha, lambda0):
                            raise ValueError("sweep includes an inadmissible lambda0")
                        t_pos = mesh.points[1:]
                        rhs = (mesh.t1 / t_pos) ** (gamma + 1.0)
                        values = solve_relaxed_linear(mesh, alpha, lambda0, lambda1, rhs)
                        envelope = stability_envelope(mesh, alpha, gamma)
                        ratios.append(float(np.max(values[1:] / envelope)))
                    spread = max(ratios) / min(ratios)
                    worst_spread = max(worst_spread, spread)
                    rows.append(
                        {
                            "gamma": gamma,
                            "lambda0": lambda0,
                            "lambda1": lambda1,
                            "r": r,
                            "ratios": ratios,
                            "spread": spread,
                        }
                    )
    return {"rows": rows, "max_spread": worst_spread, "pass": worst_spread <= 1.5}


def verify_truncation_bound(
    alphas=(0.3, 0.5, 0.7),
    sigmas=(0.4, 0.8, 1.5),
    rs=(1.0, 2.0, 4.0),
    Ms=(256, 1024, 4096),
    T: float = 1.0,
) -> dict:
    """Sweep the truncation envelope on t**sigma across mesh ladders.

    Passes when sup_m |r_m| / bound_m is M-stable (max/min <= 1.5) for every
    (alpha, sigma, r) and the sigma = 1 profiles vanish to rounding.
    """
    rows = []
    worst_spread = 0.0
    for alpha in alphas:
        for sigma in sigmas:
            for r in rs:
                ratios = []
                for M in Ms:
                    mesh = build_graded(M, r, T)
                    residual = np.abs(truncation_profile(mesh, alpha, sigma))
                    bound = truncation_bound(mesh, alpha, sigma, r)
                    ratios.append(float(np.max(residual / bound)))
                spread = max(ratios) / min(ratios)
                worst_spread = max(worst_spread, spread)
                rows.append(
                    {"alpha": alpha, "sigma": sigma, "r": r, "ratios": ratios, "spread": spread}
                )
    linear_max = 0.0
    for alpha in alphas:
        for r in rs:
            mesh = build_graded(Ms[0], r, T)
            linear_max = max(
                linear_max, float(np.max(np.abs(truncation_profile(mesh, alpha, 1.0))))
            )
    passed = worst_spread <= 1.5 and linear_max <= 1e-12
    return {
        "rows": rows,
        "max_spread": worst_spread,
        "linear_max": linear_max,
        "pass": passed,
    }


def run_verification(seed: int = 0, quick: bool = False) -> dict:
    """Run all verification suites; overall pass requires every suite to pass."""
    if quick:
        comparison = verify_comparison_principle(n_trials=100, seed=seed)
        stability = verify_stability_bound(Ms=(128, 256, 512))
        truncation = verify_truncation_bound(Ms=(128, 256, 512))
    else:
        comparison = verify_comparison_principle(seed=seed)
        stability = verify_stability_bound()
        truncation = verify_truncation_bound()
    return {
        "comparison": comparison,
        "stability": stability,
        "truncation": truncation,
        "pass": comparison["pass"] and stability["pass"] and truncation["pass"],
    }
