"""Simulated moments estimation for monotone Markov maps on a box."""

__version__ = "0.1.0"

from .envelopes import ShiftFamily, check_dominance, check_parameter_neighborhood, majorize, minorize
from .errors import ConfigError, DimensionError, DomainError, GridTooLarge, SMEError
from .estimator import (DataSeries, DistanceSpec, HorizonRule, OracleConfig, SearchConfig, consistency_study,
                        estimate, population_solve, volatility_objective_preset)
from .models import (ZOO, MarkovMap, ParameterBox, check_feller, check_monotone, eval_map, get_model,
                     make_adoption_diffusion, make_log_growth, make_threshold_jump)
from .moments import MomentSpec, map_distance, mean_variance_spec, oracle_expectation, scaled_level_spec
from .shocks import ShockSpec, ShockStream
from .simulate import run_chains, simulate_path, simulate_sandwich
from .state_space import Box, lattice_grid, project

__all__ = ["__version__", "Box", "project", "lattice_grid", "ShockSpec", "ShockStream", "MarkovMap",
           "ParameterBox", "ZOO", "get_model", "eval_map", "make_threshold_jump", "make_log_growth",
           "make_adoption_diffusion", "check_monotone", "check_feller", "majorize", "minorize", "ShiftFamily",
           "check_dominance", "check_parameter_neighborhood", "run_chains", "simulate_path", "simulate_sandwich",
           "MomentSpec", "mean_variance_spec", "scaled_level_spec", "oracle_expectation", "map_distance",
           "DistanceSpec", "HorizonRule", "SearchConfig", "OracleConfig", "DataSeries", "estimate",
           "consistency_study", "population_solve", "volatility_objective_preset", "SMEError", "ConfigError",
           "DimensionError", "DomainError", "GridTooLarge"]
