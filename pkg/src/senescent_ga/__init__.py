"""Senescence-enhanced genetic algorithms on the symmetric TSP."""

__version__ = "0.1.0"

from .chromosome import (  # noqa: E402
    Chromosome, forced_single_mutation, make_rng, mutate, random_chromosome, two_point_crossover,
)
from .engines import GenerationOutcome, Population, StrategyConfig, Variant, aged_fitness, step  # noqa: E402
from .experiment import (  # noqa: E402
    CampaignSummary, RunRecord, compare, run_campaign, run_single, sweep, write_reports,
)
from .torus import CaConfig, Grid, ca_generation, run_ca  # noqa: E402
from .tsp import TspInstance, generate_instance, load_instance, save_instance, tour_length  # noqa: E402

__all__ = [
    "CaConfig", "CampaignSummary", "Chromosome", "GenerationOutcome", "Grid", "Population",
    "RunRecord", "StrategyConfig", "TspInstance", "Variant", "aged_fitness", "ca_generation",
    "compare", "forced_single_mutation", "generate_instance", "load_instance", "make_rng", "mutate",
    "random_chromosome", "run_ca", "run_campaign", "run_single", "save_instance", "step", "sweep",
    "tour_length", "two_point_crossover", "write_reports",
]
