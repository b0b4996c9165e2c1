"""Agent-based simulation harness."""

from .config import Archetype, ConfigError, ScenarioConfig, load_config, parse_config
from .metrics import compute_metrics
from .scenario import run_scenario, write_outputs

__all__ = ["Archetype", "ConfigError", "ScenarioConfig", "compute_metrics", "load_config",
           "parse_config", "run_scenario", "write_outputs"]
