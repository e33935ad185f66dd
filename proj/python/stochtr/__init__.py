"""Seeded experiments for transport equations driven by multiplicative noise."""

from ._core import (
    ConfigError,
    StochtrError,
    __version__,
    brownian_path,
    catalog,
    commutator_ladder,
    config_hash,
    default_config,
    estimate_mean,
    experiments,
    exponential_means,
    run_experiment,
    solve_mean_equation,
    transport,
)

__all__ = [
    "ConfigError",
    "StochtrError",
    "__version__",
    "brownian_path",
    "catalog",
    "commutator_ladder",
    "config_hash",
    "default_config",
    "estimate_mean",
    "experiments",
    "exponential_means",
    "run_experiment",
    "solve_mean_equation",
    "transport",
]
