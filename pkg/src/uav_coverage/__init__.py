"""
UAV Coverage Analyzer

Coverage probability of UAV-powered battery-less sensors served from
Poisson-distributed recharging stations, by closed form and by Monte Carlo.
"""

__version__ = "1.0.0"

from .config import (
    ConfigurationError,
    SchemaError,
    apply_overrides,
    load_config,
    parse_config,
)
from .coverage import coverage_sensor, coverage_total
from .model import (
    CoverageMode,
    DomainError,
    InvariantViolation,
    ModelError,
    PropulsionModel,
    RectennaModel,
    ScenarioConfig,
    check_eirp_compliance,
)
from .monte_carlo import SimConfig, simulate
from .service import service_analytics, service_probability
from .sweep import SweepSpec, run_sweep

__all__ = [
    "ConfigurationError",
    "SchemaError",
    "apply_overrides",
    "load_config",
    "parse_config",
    "coverage_sensor",
    "coverage_total",
    "CoverageMode",
    "DomainError",
    "InvariantViolation",
    "ModelError",
    "PropulsionModel",
    "RectennaModel",
    "ScenarioConfig",
    "check_eirp_compliance",
    "SimConfig",
    "simulate",
    "service_analytics",
    "service_probability",
    "SweepSpec",
    "run_sweep",
]
