"""Reinforcement-learning search for CFT data constrained by integral identities."""

from .config import ExperimentConfig, load_config, save_config
from .environment import CftState, CrossingEnvironment, RewardConfig, RewardForm, SearchWindow
from .estimator import MultiSTOP
from .exceptions import MultiStopError
from .experiment import ablation_compare, run_experiment
from .precompute import BlockTable, SamplePointSet, build_table, plant_solution
from .search import RunRecord, SearchSchedule, run_search

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "load_config", "save_config",
    "CftState", "CrossingEnvironment", "RewardConfig", "RewardForm", "SearchWindow",
    "MultiSTOP", "MultiStopError", "ablation_compare", "run_experiment",
    "BlockTable", "SamplePointSet", "build_table", "plant_solution",
    "RunRecord", "SearchSchedule", "run_search",
]
