"""Beta-weighted two-step Newton iteration and experiment harness.

The update rule inserts a weighted second correction into each Newton step,
reusing the derivative from the step's starting point.  A weight of zero
recovers the classical method; a weight of one gives cubic local convergence;
an adaptive schedule picks the weight from the derivative drift each step.
The package adds complex-plane basin sweeps with entropy measurement,
empirical convergence-order estimation, a contraction analysis for the
cube-root singularity, and a dense multivariate variant applied to
Kuramoto-style phase locking.
"""

from .core import (
    ANNEALING,
    FIXED,
    BetaSchedule,
    DegenerateScheduleInput,
    DerivativeUnderflow,
    IterationConfig,
    IterationOutcome,
    NonFiniteStep,
    ScalarProblem,
    Status,
    UnknownProblem,
    annealing_beta,
    extended_step,
    extended_step_order2,
    get_problem,
    iterate,
    list_problems,
    make_affine_problem,
)
from .convergence import (
    CubeRootWindow,
    DegenerateRoot,
    OrderEstimate,
    analytic_error_ratio,
    cube_root_problem,
    cube_root_window,
    estimate_order,
    local_error_ratio,
    order_probe,
)
from .basin import (
    AllSamplesSingular,
    BasinMap,
    GridSpec,
    IncompatibleCovering,
    RootCatalog,
    SweepMetrics,
    basin_entropy,
    basin_map_to_json,
    default_palette,
    entropy_beta_sweep,
    render_ppm,
    singularity_probe,
    sweep,
)
from .multivariate import (
    KuramotoSystem,
    MalformedSystem,
    SingularJacobian,
    SyncSolution,
    VectorProblem,
    build_kuramoto_problem,
    kuramoto_from_json,
    kuramoto_to_json,
    omega_from_phases,
    random_kuramoto,
    rotor_velocities,
    solve_sync,
    sync_solution_to_json,
    vector_extended_step,
)
from .report import (
    TableRow,
    build_table1,
    build_table2,
    order_estimate_for,
    rows_from_csv,
    to_csv,
    to_json,
    to_markdown,
)

__version__ = "0.1.0"

__all__ = [
    "ANNEALING",
    "FIXED",
    "AllSamplesSingular",
    "BasinMap",
    "BetaSchedule",
    "CubeRootWindow",
    "DegenerateRoot",
    "DegenerateScheduleInput",
    "DerivativeUnderflow",
    "GridSpec",
    "IncompatibleCovering",
    "IterationConfig",
    "IterationOutcome",
    "KuramotoSystem",
    "MalformedSystem",
    "NonFiniteStep",
    "OrderEstimate",
    "RootCatalog",
    "ScalarProblem",
    "SingularJacobian",
    "Status",
    "SweepMetrics",
    "SyncSolution",
    "TableRow",
    "UnknownProblem",
    "VectorProblem",
    "analytic_error_ratio",
    "annealing_beta",
    "basin_entropy",
    "basin_map_to_json",
    "build_kuramoto_problem",
    "build_table1",
    "build_table2",
    "cube_root_problem",
    "cube_root_window",
    "default_palette",
    "entropy_beta_sweep",
    "estimate_order",
    "extended_step",
    "extended_step_order2",
    "get_problem",
    "iterate",
    "kuramoto_from_json",
    "kuramoto_to_json",
    "list_problems",
    "local_error_ratio",
    "make_affine_problem",
    "omega_from_phases",
    "order_estimate_for",
    "order_probe",
    "random_kuramoto",
    "render_ppm",
    "rotor_velocities",
    "rows_from_csv",
    "singularity_probe",
    "solve_sync",
    "sweep",
    "sync_solution_to_json",
    "to_csv",
    "to_json",
    "to_markdown",
    "vector_extended_step",
]
