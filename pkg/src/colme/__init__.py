"""Collaborative mean estimation with multifold confidence intervals."""
from .algorithms import ColME, Consensus, MessagePassing, alpha_schedule, ccolme_step, oracle_estimate
from .confidence import AgentStats, BoundConfig, Fold, Interval, laplace_bound, multifold_decision
from .config import ScenarioConfig, get_preset, presets
from .distributions import ClassSpec, sample, sample_streams
from .errors import ColmeError, ConfigError
from .graph import DynamicGraph, generate_random_regular, metropolis_weights
from .harness import MetricsSeries, bootstrap_band, run_scenario, write_outputs
from .moments import MomentAccumulator, kurtosis_estimate, sigma_collaborative, sigma_local
from .separation import SeparationQuery, pair_separation, separation_table, separation_time

__version__ = "0.1.0"
