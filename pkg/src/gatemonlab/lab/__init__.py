from importlib import resources

from .config import (CONFIG_PATH_ENV, ConfigError, ExperimentConfig, load_config, parse_config,
                     validate_config)
from .experiments import RunDirectoryError, RunManifest, run_experiment, t1_noise_for_stderr
from .report import LossBudget, report_loss_budget


def example_config_path():
    return resources.files("gatemonlab") / "configs" / "example_config.json"


__all__ = ["CONFIG_PATH_ENV", "ConfigError", "ExperimentConfig", "load_config", "parse_config",
           "validate_config", "RunDirectoryError", "RunManifest", "run_experiment",
           "t1_noise_for_stderr", "LossBudget", "report_loss_budget", "example_config_path"]
