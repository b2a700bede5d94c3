"""Spectral estimation and minimax lower bounds for degree-corrected mixed membership networks."""

__version__ = "0.1.0"

from .errors import DcmmError, PipelineError, ValidationError  # noqa: E402
from .estimation import (  # noqa: E402
    EstimationConfig,
    EstimationResult,
    align_permutation,
    estimate_all,
)
from .experiments import (  # noqa: E402
    ExperimentConfig,
    fit_loglog_slope,
    run_experiment_p,
    run_experiment_theta,
)
from .lower_bounds import (  # noqa: E402
    build_p_pair,
    build_theta_pair_degree,
    build_theta_pair_membership,
    kl_divergence,
    verify_pair,
)
from .model import (  # noqa: E402
    AdjacencyMatrix,
    DcmmParams,
    build_h,
    experiment_params,
    sample_adjacency,
    validate_params,
)
from .spectral import decompose, score_embedding  # noqa: E402
from .vertex_hunting import spa_modified, svs  # noqa: E402

__all__ = [
    "AdjacencyMatrix", "DcmmError", "DcmmParams", "EstimationConfig", "EstimationResult",
    "ExperimentConfig", "PipelineError", "ValidationError", "align_permutation", "build_h",
    "build_p_pair", "build_theta_pair_degree", "build_theta_pair_membership", "decompose",
    "estimate_all", "experiment_params", "fit_loglog_slope", "kl_divergence",
    "run_experiment_p", "run_experiment_theta", "sample_adjacency", "score_embedding",
    "spa_modified", "svs", "validate_params", "verify_pair", "__version__",
]
