"""Sequential model-based search over conditional hyper-parameter spaces."""

from ._core import (
    DensityModel,
    Error,
    HardFault,
    SearchSpace,
    best_trials,
    cli,
    compute_curves,
    dcn_default_profile,
    dcn_space,
    decode_architecture,
    load_trials,
    optimize,
    propose_next,
    random_surface,
    score_simplified,
    score_tpe,
    split_trials,
    surrogate_error,
)

__all__ = [
    "DensityModel",
    "Error",
    "HardFault",
    "SearchSpace",
    "best_trials",
    "cli",
    "compute_curves",
    "dcn_default_profile",
    "dcn_space",
    "decode_architecture",
    "load_trials",
    "optimize",
    "propose_next",
    "random_surface",
    "score_simplified",
    "score_tpe",
    "split_trials",
    "surrogate_error",
]
