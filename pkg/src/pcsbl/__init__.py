"""Block-sparse signal recovery via pattern-coupled sparse Bayesian
learning, a conventional SBL baseline, and (re)weighted-l1 solvers,
plus the synthetic ensemble generator and Monte-Carlo benchmark used
to evaluate them."""

from .baseline import solve_sbl
from .bench import (
    SUCCESS_NMSE,
    PointAggregate,
    SweepResult,
    TrialRecord,
    emit_results,
    nmse,
    run_sweep,
    success_rate,
)
from .em import (
    IterationStats,
    SolverConfig,
    SolverResult,
    coupled_second_moments,
    expected_residual_power,
    q_function,
    shrinkage_factors,
    solve_pcsbl,
    update_hyperparams,
    update_noise_precision,
)
from .errors import (
    ConsistencyError,
    GenerationError,
    InfeasibleProblemError,
    InnerSolverError,
    SingularSystemError,
)
from .model import (
    NOISE_FLOOR,
    Posterior,
    PriorConfig,
    Problem,
    compute_posterior,
    coupled_precision,
    map_estimate,
)
from .rwl1 import (
    InnerResult,
    InnerSolverConfig,
    RwConfig,
    RwResult,
    solve_l1,
    solve_mrl1,
    solve_rl1,
    update_weights,
    weighted_l1_solve,
)
from .synthgen import EnsembleSpec, Instance, draw_partition, generate, place_blocks

__all__ = [
    "NOISE_FLOOR",
    "SUCCESS_NMSE",
    "ConsistencyError",
    "EnsembleSpec",
    "GenerationError",
    "InfeasibleProblemError",
    "InnerResult",
    "InnerSolverConfig",
    "InnerSolverError",
    "Instance",
    "IterationStats",
    "PointAggregate",
    "Posterior",
    "PriorConfig",
    "Problem",
    "RwConfig",
    "RwResult",
    "SingularSystemError",
    "SolverConfig",
    "SolverResult",
    "SweepResult",
    "TrialRecord",
    "compute_posterior",
    "coupled_precision",
    "coupled_second_moments",
    "draw_partition",
    "emit_results",
    "expected_residual_power",
    "generate",
    "map_estimate",
    "nmse",
    "place_blocks",
    "q_function",
    "run_sweep",
    "shrinkage_factors",
    "solve_l1",
    "solve_mrl1",
    "solve_pcsbl",
    "solve_rl1",
    "solve_sbl",
    "success_rate",
    "update_hyperparams",
    "update_noise_precision",
    "update_weights",
    "weighted_l1_solve",
]
