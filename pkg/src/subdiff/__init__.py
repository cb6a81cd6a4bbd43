"""L1 time stepping for time-fractional semilinear and quasilinear diffusion.

Solvers for Caputo-order-alpha problems on graded temporal meshes, with a
family of semilinear-term discretizations, sharp pointwise error bounds, and
a verification harness for the stability, truncation, and convergence
properties the schemes are built on.
"""

from ._kernels import backend
from .l1op import (
    L1Row,
    L1WeightTable,
    apply_l1,
    caputo_power,
    l1_row,
    truncation_bound,
    truncation_profile,
)
from .mesh import TemporalMesh, build_graded, is_nested_refinement, quasi_graded_constant
from .ode import (
    ScalarProblem,
    StepConditionError,
    Trajectory,
    solve_ode,
    solve_step_scalar,
    step_condition_ok,
    theoretical_bound,
)
from .fdspace import (
    PdeProblem,
    SpatialGrid,
    TridiagonalOperator,
    build_Lh,
    check_h_condition,
    semilinear_step,
    solve_pde,
)
from .quasilinear import (
    QuasilinearProblem,
    kirchhoff,
    kirchhoff_inverse,
    quasilinear_step,
    solve_quasilinear,
)
from .problems import (
    PROBLEM_IDS,
    cubic_scheme,
    fisher_kolmogorov_problem,
    test_a_problem,
    test_b_problem,
)
from .schemes import KINDS, SchemeDescriptor, check_A1, check_A2, eval_F, make_scheme
from .harness import (
    ErrorReport,
    StudyConfig,
    double_mesh_error,
    emit_csv,
    emit_plotdata,
    emit_profile_csv,
    run_convergence,
    run_verification,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "L1Row",
    "L1WeightTable",
    "apply_l1",
    "caputo_power",
    "l1_row",
    "truncation_bound",
    "truncation_profile",
    "TemporalMesh",
    "build_graded",
    "is_nested_refinement",
    "quasi_graded_constant",
    "ScalarProblem",
    "StepConditionError",
    "Trajectory",
    "solve_ode",
    "solve_step_scalar",
    "step_condition_ok",
    "theoretical_bound",
    "PdeProblem",
    "SpatialGrid",
    "TridiagonalOperator",
    "build_Lh",
    "check_h_condition",
    "semilinear_step",
    "solve_pde",
    "QuasilinearProblem",
    "kirchhoff",
    "kirchhoff_inverse",
    "quasilinear_step",
    "solve_quasilinear",
    "PROBLEM_IDS",
    "cubic_scheme",
    "fisher_kolmogorov_problem",
    "test_a_problem",
    "test_b_problem",
    "KINDS",
    "SchemeDescriptor",
    "check_A1",
    "check_A2",
    "eval_F",
    "make_scheme",
    "ErrorReport",
    "StudyConfig",
    "double_mesh_error",
    "emit_csv",
    "emit_plotdata",
    "emit_profile_csv",
    "run_convergence",
    "run_verification",
    "__version__",
]
