"""Monte Carlo engines and the exact enumeration oracle."""

from .continuous import simulate_continuous_clone, simulate_continuous_population
from .discrete import (
    PopulationSnapshot,
    WStatistic,
    fractions,
    simulate_population,
    step_generation,
    w_statistics,
)
from .ensemble import EnsembleSummary, monte_carlo, replicate_snapshot, simulate_counts
from .enumeration import ExactDistribution, brute_force_distribution
from .seeding import GENERATOR, make_rng, mix64, replicate_rng, splitmix64

__all__ = [
    "EnsembleSummary",
    "ExactDistribution",
    "GENERATOR",
    "PopulationSnapshot",
    "WStatistic",
    "brute_force_distribution",
    "fractions",
    "make_rng",
    "mix64",
    "monte_carlo",
    "replicate_rng",
    "replicate_snapshot",
    "simulate_continuous_clone",
    "simulate_continuous_population",
    "simulate_counts",
    "simulate_population",
    "splitmix64",
    "step_generation",
    "w_statistics",
]
