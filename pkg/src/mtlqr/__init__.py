"""Multitask LQR policy gradient with bisimulation-based heterogeneity certificates."""

__version__ = "0.1.0"

from .matops import (  # noqa: F401
    DEFAULT_TOL,
    DimensionError,
    DomainError,
    InstabilityError,
    NumericError,
    SymmetryError,
    Tolerances,
    is_psd,
    min_eig_sym,
    solve_dlyap,
    spectral_radius,
)
from .lqr import (  # noqa: F401
    BoundConstants,
    NonStabilizableError,
    Task,
    TaskSolution,
    dare_solve,
    is_stabilizing,
    solve_task,
)
from .policy_grad import (  # noqa: F401
    PGConfig,
    RunLog,
    DescentConditionsReport,
    avg_gradient,
    check_stabilizing_subset,
    check_descent_conditions,
    estimate_smoothness,
    initial_controller,
    pg_step,
    run_pg,
)
from .bisim import (  # noqa: F401
    Certificate,
    PairSystem,
    bisim_value,
    build_certificate_program,
    build_pair,
    certify_all_pairs,
    certify_pair,
    constructive_certificate,
    hetero_profile,
    lambda_for_pair,
    validate_certificate,
)
from .conic import (  # noqa: F401
    Cone,
    ConicProgram,
    ConicSolution,
    check_solution,
    solve_conic,
)
from .hetero_baseline import (  # noqa: F401
    DeviationBounds,
    deviation_bounds,
    evaluate_baseline,
    pairwise_gaps,
)
from .bench import (  # noqa: F401
    ExperimentConfig,
    collection_stats,
    controller_bound_report,
    gen_pendulum,
    gen_unicycle,
    generate_tasks,
    reduction_stats,
    run_experiment,
    validate_bounds,
)
