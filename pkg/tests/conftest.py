"""
Shared fixtures: the parameter-table scenario and variations of it.
"""

from typing import Callable, Dict, Optional

import pytest

from uav_coverage.config import apply_overrides, config_from_mapping
from uav_coverage.model import ScenarioConfig

BASE_DOCUMENT = """\
schema_version=1
link.theta_b_deg=30.8
uav.e_pt_j=7.55
"""

BASE_KEYS: Dict[str, str] = {
    "schema_version": "1",
    "link.theta_b_deg": "30.8",
    "uav.e_pt_j": "7.55",
}


def build_config(overrides: Optional[Dict[str, object]] = None) -> ScenarioConfig:
    """Parameter-table scenario with schema-key overrides in human units."""
    base = config_from_mapping(BASE_KEYS)
    return apply_overrides(base, overrides or {})


@pytest.fixture
def base_config() -> ScenarioConfig:
    return build_config()


@pytest.fixture
def make_config() -> Callable[..., ScenarioConfig]:
    return build_config
