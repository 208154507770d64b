# Основні експорти пакету
from .params import SystemParams, Topology, validate_params, skew_bounds, derived_delta
from .logic import OffsetView, fast_condition, slow_condition, fast_trigger, classify_region
from .pipeline import ThresholdWord, sample_thresholds, controller
from .engine import Scenario, TraceSet, run
from .scenarios import builtin_scenario, list_scenarios, random_scenario
from .analytics import skews, check_bounds, verify_implementation
from .fairbanks import run_fairbanks, fairbanks_swap_experiment
from .tree import builtin_tree, tree_local_skew, tree_vs_gcs
from .io import load_config, write_run, read_trace
from .utils import localize

__version__ = "0.1.0"
__author__ = "Ігор Кушнерук"

__all__ = [
    'SystemParams', 'Topology', 'validate_params', 'skew_bounds', 'derived_delta',
    'OffsetView', 'fast_condition', 'slow_condition', 'fast_trigger', 'classify_region',
    'ThresholdWord', 'sample_thresholds', 'controller',
    'Scenario', 'TraceSet', 'run',
    'builtin_scenario', 'list_scenarios', 'random_scenario',
    'skews', 'check_bounds', 'verify_implementation',
    'run_fairbanks', 'fairbanks_swap_experiment',
    'builtin_tree', 'tree_local_skew', 'tree_vs_gcs',
    'load_config', 'write_run', 'read_trace',
    'localize'
]
