"""Deterministic simulator for a Maker-style collateralized stablecoin protocol."""

from .config import Config, ConfigError, load_config
from .errors import SimError
from .protocol import AuditFailure, Protocol
from .runner import RunResult, replay_check, run, run_events
from .scenario import ScenarioError, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "AuditFailure",
    "Config",
    "ConfigError",
    "Protocol",
    "RunResult",
    "ScenarioError",
    "SimError",
    "load_config",
    "load_scenario",
    "parse_scenario",
    "replay_check",
    "run",
    "run_events",
]
