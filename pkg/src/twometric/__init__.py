"""Two-metric projection solvers for nonnegativity-constrained and
l1-regularized minimization, with first-order baselines and a benchmark
harness."""

from .baselines import (
    BaselineConfig,
    fista_solve,
    ista_solve,
    projected_gradient_solve,
    soft_threshold,
)
from .bench import (
    ComparisonSummary,
    ExperimentPlan,
    ProblemSpec,
    SolverSpec,
    emit_plot,
    estimate_convergence_order,
    figure1_plan,
    run_experiment,
)
from .bound import (
    SolverConfig,
    StationarityConfig,
    eps_1o_check,
    linesearch_bound,
    omega_measure,
    partition_bound,
    project_nonneg,
    scaled_alpha_floor,
    scaled_decrease_witness,
    scaled_iteration_bound,
    scaling_matrix,
    solve_bound_classic,
    solve_bound_scaled,
)
from .exceptions import (
    BacktrackCapError,
    MetricError,
    NumericError,
    ParameterError,
    TwoMetricError,
)
from .l1 import (
    ContinuationConfig,
    L1State,
    default_gamma_start,
    l1_classify,
    l1_project,
    l1_residual,
    l1_step_direction,
    linesearch_l1,
    solve_l1,
    solve_lasso_continuation,
)
from .metric import IndexPartition, MetricSpec, apply_metric, metric_bounds
from .oracle import (
    LassoInstance,
    OracleProblem,
    instance_from_json,
    instance_to_json,
    lasso_oracle,
    make_lasso,
    make_nonconvex,
    make_quadratic_box,
)
from .report import SolverReport

__version__ = "0.1.0"
