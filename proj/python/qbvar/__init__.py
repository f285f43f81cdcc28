"""Quantile Bayesian VAR: Gibbs sampler, forecasts, quantile scores and combinations."""

from ._qbvar import (
    InvalidArgument,
    IoError,
    NumericError,
    PosteriorDraws,
    __version__,
    combined_loss,
    draw_gig,
    empirical_quantile,
    mixture_constants,
    optimal_weight,
    performance_weight,
    pinball,
    report,
    run_bvar_chain,
    run_chain,
    run_experiment,
    simulate_mixture,
    simulate_paths,
)

__all__ = [
    "InvalidArgument",
    "IoError",
    "NumericError",
    "PosteriorDraws",
    "__version__",
    "combined_loss",
    "draw_gig",
    "empirical_quantile",
    "mixture_constants",
    "optimal_weight",
    "performance_weight",
    "pinball",
    "report",
    "run_bvar_chain",
    "run_chain",
    "run_experiment",
    "simulate_mixture",
    "simulate_paths",
]
