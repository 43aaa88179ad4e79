"""Scenario configuration, Monte Carlo harness, metrics, and CLI."""

from .config import (GroupSpec, PRESET_NAMES, ScenarioConfig, SnrSetting,
                     config_from_dict, config_to_dict, load_config, preset,
                     save_config)
from .metrics import (CSV_COLUMNS, MetricsReport, MetricsRow, asce, emit_csv,
                      nmse)
from .runner import TrialData, generate_trial_data, run_scenario, trial_rng

__all__ = [
    "CSV_COLUMNS", "GroupSpec", "MetricsReport", "MetricsRow", "PRESET_NAMES",
    "ScenarioConfig", "SnrSetting", "TrialData", "asce", "config_from_dict",
    "config_to_dict", "emit_csv", "generate_trial_data", "load_config",
    "nmse", "preset", "run_scenario", "save_config", "trial_rng",
]
