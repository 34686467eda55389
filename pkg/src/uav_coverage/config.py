"""
Configuration management for scenario documents.

Scenario documents are flat ``namespace.key=value`` files read with
python-dotenv. Values are given in the human units of the parameter table
(dBm, dBi, MHz, Wh, per km^2, ...) and converted to SI on load.
"""

import io
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv

from .model import CoverageMode, PropulsionModel, RectennaModel, ScenarioConfig
from .units import (
    dbm_to_watts,
    joules_to_wh,
    per_km2_to_per_m2,
    per_m2_to_per_km2,
    watts_to_dbm,
    wh_to_joules,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DATA_DIR = Path(__file__).parent / "data"
CALIBRATION_FILE = "calibration.paper-figs"
OUTPUT_DIR = "output"

OverrideValue = Union[str, float, int, bool]


class ConfigurationError(Exception):
    """Configuration error."""

    pass


class SchemaError(ConfigurationError):
    """A scenario document does not conform to the schema."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not a valid value")
    return value


def _parse_coeffs(text: str) -> List[float]:
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise ValueError("expected a comma separated list of numbers")
    return [_parse_float(part) for part in parts]


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_mode(text: str) -> CoverageMode:
    mode = CoverageMode.from_string(text)
    if mode is None:
        raise ValueError(f"expected one of {', '.join(CoverageMode.all_keys())}")
    return mode


@dataclass(frozen=True)
class SchemaField:
    """One key of the scenario document."""

    key: str
    unit: str
    default: Optional[str]
    parse: Callable[[str], Any]
    description: str
    required: bool = False

    @property
    def numeric(self) -> bool:
        return self.parse is _parse_float


SCHEMA: Dict[str, SchemaField] = {
    f.key: f
    for f in (
        SchemaField("schema_version", "", None, _parse_int, "Document schema version", True),
        # Link
        SchemaField("link.p_t_dbm", "dBm", "21", _parse_float, "UAV transmit power P_T"),
        SchemaField("link.g_t_dbi", "dBi", None, _parse_float, "Transmit antenna gain G_T"),
        SchemaField("link.theta_b_deg", "deg", None, _parse_float, "Half-power beamwidth"),
        SchemaField("link.f_c_mhz", "MHz", "868", _parse_float, "Carrier frequency f_c"),
        SchemaField("link.gamma_th_uw", "uW", "1", _parse_float, "Sensor activation threshold"),
        SchemaField("link.g_r_dbi", "dBi", "9", _parse_float, "Sensor antenna gain G_R"),
        # Environment
        SchemaField("environment.eta_los_db", "dB", "1.6034", _parse_float, "Excess LoS loss"),
        SchemaField("environment.eta_nlos_db", "dB", "29.6462", _parse_float, "Excess NLoS loss"),
        SchemaField("environment.gamma", "", "27.1157", _parse_float, "LoS model constant"),
        SchemaField("environment.delta", "", "0.1232", _parse_float, "LoS model constant"),
        # UAV
        SchemaField("uav.b_max_wh", "Wh", "770", _parse_float, "Battery capacity B_max"),
        SchemaField("uav.v_mps", "m/s", "10.36", _parse_float, "Trip velocity V"),
        SchemaField("uav.h_ch_m", "m", "100", _parse_float, "Cruise/station altitude h_Ch"),
        SchemaField("uav.h_l_m", "m", "80", _parse_float, "Descent distance h_l"),
        SchemaField("uav.h_ut_m", "m", None, _parse_float, "Hover altitude override"),
        SchemaField("uav.e_pt_j", "J", None, _parse_float, "Power transfer energy E_PT", True),
        # Stations
        SchemaField("stations.lambda_ch_per_km2", "1/km^2", "1", _parse_float, "Station density"),
        SchemaField("stations.xi_ch_w", "W", "770", _parse_float, "Recharge rate"),
        SchemaField("stations.t_ch_s", "s", "1800", _parse_float, "Recharge dwell time"),
        SchemaField("event.radius_m", "m", "0", _parse_float, "Event area radius"),
        # Propulsion aggregates
        SchemaField("propulsion.p0_w", "W", "79.8563", _parse_float, "Blade profile power"),
        SchemaField("propulsion.p_i_w", "W", "88.6279", _parse_float, "Induced hover power"),
        SchemaField("propulsion.u_tip_mps", "m/s", "120", _parse_float, "Rotor tip speed"),
        SchemaField("propulsion.v0_mps", "m/s", "4.03", _parse_float, "Induced hover velocity"),
        SchemaField("propulsion.d0", "", "0.6", _parse_float, "Fuselage drag ratio"),
        SchemaField("propulsion.rho_kgm3", "kg/m^3", "1.225", _parse_float, "Air density"),
        SchemaField("propulsion.s", "", "0.05", _parse_float, "Rotor solidity"),
        SchemaField("propulsion.a_m2", "m^2", "0.503", _parse_float, "Rotor disc area"),
        # Rectenna
        SchemaField("rectenna.p_th_dbm", "dBm", "-20", _parse_float, "Rectifier sensitivity"),
        SchemaField("rectenna.p_sat_dbm", "dBm", "10", _parse_float, "Rectifier saturation"),
        SchemaField(
            "rectenna.coeffs",
            "",
            "300000, -12000, 150, 0.15",
            _parse_coeffs,
            "Efficiency polynomial, highest power first (P in W)",
        ),
        SchemaField("rectenna.eta_fixed", "", "0.5", _parse_float, "Fixed rectifier efficiency"),
        # Coverage
        SchemaField("coverage.mode", "", "paper", _parse_mode, "paper or nonlinear"),
        SchemaField("coverage.strict_paper_mode", "", "false", _parse_bool, "Literal service formula"),
    )
}

GAIN_KEYS = ("link.g_t_dbi", "link.theta_b_deg")


def parse_document(text: str) -> Dict[str, Optional[str]]:
    """
    Parse a flat key-value document into raw string values.

    Args:
        text: Document contents.

    Returns:
        Mapping of key to raw value (None for keys without a value).
    """
    return dict(dotenv_values(stream=io.StringIO(text), interpolate=False))


def _parse_values(values: Mapping[str, Optional[OverrideValue]]) -> Dict[str, Any]:
    parsed: Dict[str, Any] = {}
    for key, raw in values.items():
        field_spec = SCHEMA.get(key)
        if field_spec is None:
            raise SchemaError(key, "unknown key")
        if raw is None or (isinstance(raw, str) and not raw.strip()):
            raise SchemaError(key, "missing value")
        try:
            parsed[key] = field_spec.parse(str(raw))
        except ValueError as e:
            raise SchemaError(key, f"cannot parse {raw!r} ({e})") from e
    return parsed


def config_from_mapping(values: Mapping[str, Optional[OverrideValue]]) -> ScenarioConfig:
    """
    Build a validated ScenarioConfig from schema keys in human units.

    Args:
        values: Mapping of schema key to value.

    Returns:
        ScenarioConfig instance.

    Raises:
        SchemaError: Unknown key, unparsable value or missing required key.
        InvariantViolation: A model invariant does not hold.
    """
    parsed = _parse_values(values)

    for key, spec in SCHEMA.items():
        if spec.required and key not in parsed:
            raise SchemaError(key, "required key is missing")
    if parsed["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(
            "schema_version",
            f"unsupported version {parsed['schema_version']} (expected {SCHEMA_VERSION})",
        )

    given_gain_keys = [key for key in GAIN_KEYS if key in parsed]
    if len(given_gain_keys) != 1:
        raise SchemaError(
            "link.g_t_dbi",
            "exactly one of link.g_t_dbi / link.theta_b_deg must be given, "
            f"got {len(given_gain_keys)}",
        )

    def get(key: str) -> Any:
        if key in parsed:
            return parsed[key]
        default = SCHEMA[key].default
        return None if default is None else SCHEMA[key].parse(default)

    rectenna = RectennaModel(
        p_th=dbm_to_watts(get("rectenna.p_th_dbm")),
        p_sat=_dbm_or_inf(get("rectenna.p_sat_dbm")),
        coeffs=tuple(get("rectenna.coeffs")),
        eta_fixed=get("rectenna.eta_fixed"),
    )
    propulsion = PropulsionModel(
        p0=get("propulsion.p0_w"),
        p_i=get("propulsion.p_i_w"),
        u_tip=get("propulsion.u_tip_mps"),
        v0=get("propulsion.v0_mps"),
        d0=get("propulsion.d0"),
        rho=get("propulsion.rho_kgm3"),
        s=get("propulsion.s"),
        a=get("propulsion.a_m2"),
    )

    return ScenarioConfig(
        p_t=dbm_to_watts(get("link.p_t_dbm")),
        g_t_dbi=get("link.g_t_dbi"),
        theta_b_deg=get("link.theta_b_deg"),
        f_c=get("link.f_c_mhz") * 1e6,
        gamma_th=get("link.gamma_th_uw") * 1e-6,
        g_r_dbi=get("link.g_r_dbi"),
        eta_los_db=get("environment.eta_los_db"),
        eta_nlos_db=get("environment.eta_nlos_db"),
        env_gamma=get("environment.gamma"),
        env_delta=get("environment.delta"),
        b_max=wh_to_joules(get("uav.b_max_wh")),
        xi_ch=get("stations.xi_ch_w"),
        t_ch=get("stations.t_ch_s"),
        v=get("uav.v_mps"),
        h_ch=get("uav.h_ch_m"),
        h_l=get("uav.h_l_m"),
        h_ut_override=get("uav.h_ut_m"),
        lambda_ch=per_km2_to_per_m2(get("stations.lambda_ch_per_km2")),
        e_pt=get("uav.e_pt_j"),
        event_radius=get("event.radius_m"),
        rectenna=rectenna,
        propulsion=propulsion,
        coverage_mode=get("coverage.mode"),
        strict_paper_mode=get("coverage.strict_paper_mode"),
    )


def _dbm_or_inf(dbm: float) -> float:
    return math.inf if math.isinf(dbm) and dbm > 0 else dbm_to_watts(dbm)


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def to_mapping(cfg: ScenarioConfig) -> Dict[str, str]:
    """
    Express a ScenarioConfig as schema keys in human units.

    The beamwidth is emitted and the gain left to be derived from it.
    """
    mapping = {
        "schema_version": str(SCHEMA_VERSION),
        "link.p_t_dbm": _fmt(watts_to_dbm(cfg.p_t)),
        "link.theta_b_deg": _fmt(cfg.theta_b_deg),
        "link.f_c_mhz": _fmt(cfg.f_c / 1e6),
        "link.gamma_th_uw": _fmt(cfg.gamma_th / 1e-6),
        "link.g_r_dbi": _fmt(cfg.g_r_dbi),
        "environment.eta_los_db": _fmt(cfg.eta_los_db),
        "environment.eta_nlos_db": _fmt(cfg.eta_nlos_db),
        "environment.gamma": _fmt(cfg.env_gamma),
        "environment.delta": _fmt(cfg.env_delta),
        "uav.b_max_wh": _fmt(joules_to_wh(cfg.b_max)),
        "uav.v_mps": _fmt(cfg.v),
        "uav.h_ch_m": _fmt(cfg.h_ch),
        "uav.h_l_m": _fmt(cfg.h_l),
        "uav.e_pt_j": _fmt(cfg.e_pt),
        "stations.lambda_ch_per_km2": _fmt(per_m2_to_per_km2(cfg.lambda_ch)),
        "stations.xi_ch_w": _fmt(cfg.xi_ch),
        "stations.t_ch_s": _fmt(cfg.t_ch),
        "event.radius_m": _fmt(cfg.event_radius),
        "propulsion.p0_w": _fmt(cfg.propulsion.p0),
        "propulsion.p_i_w": _fmt(cfg.propulsion.p_i),
        "propulsion.u_tip_mps": _fmt(cfg.propulsion.u_tip),
        "propulsion.v0_mps": _fmt(cfg.propulsion.v0),
        "propulsion.d0": _fmt(cfg.propulsion.d0),
        "propulsion.rho_kgm3": _fmt(cfg.propulsion.rho),
        "propulsion.s": _fmt(cfg.propulsion.s),
        "propulsion.a_m2": _fmt(cfg.propulsion.a),
        "rectenna.p_th_dbm": _fmt(watts_to_dbm(cfg.rectenna.p_th)),
        "rectenna.p_sat_dbm": _fmt(
            math.inf if not cfg.rectenna.clamped else watts_to_dbm(cfg.rectenna.p_sat)
        ),
        "rectenna.coeffs": ", ".join(_fmt(c) for c in cfg.rectenna.coeffs),
        "rectenna.eta_fixed": _fmt(cfg.rectenna.eta_fixed),
        "coverage.mode": cfg.coverage_mode.key,
        "coverage.strict_paper_mode": "true" if cfg.strict_paper_mode else "false",
    }
    if cfg.h_ut_override is not None:
        mapping["uav.h_ut_m"] = _fmt(cfg.h_ut_override)
    return mapping


def render_document(mapping: Mapping[str, str], header: Optional[str] = None) -> str:
    """Render schema keys as a scenario document."""
    lines = []
    if header:
        lines.extend(f"# {line}" for line in header.splitlines())
    lines.extend(f"{key}={value}" for key, value in mapping.items())
    return "\n".join(lines) + "\n"


def apply_overrides(
    cfg: ScenarioConfig, overrides: Mapping[str, OverrideValue]
) -> ScenarioConfig:
    """
    Return a new config with schema keys replaced, fully re-validated.

    Args:
        cfg: Base configuration.
        overrides: Schema keys in human units.

    Returns:
        New ScenarioConfig.
    """
    if not overrides:
        return cfg
    mapping: Dict[str, Optional[OverrideValue]] = dict(to_mapping(cfg))
    for key, value in overrides.items():
        if key in GAIN_KEYS:
            for other in GAIN_KEYS:
                mapping.pop(other, None)
        if isinstance(value, bool):
            value = "true" if value else "false"
        mapping[key] = value if isinstance(value, str) else _fmt(float(value))
    return config_from_mapping(mapping)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """
    Parse and validate a scenario document.

    Args:
        text: Document contents.
        source: Name used in log messages.

    Returns:
        ScenarioConfig instance.
    """
    values = parse_document(text)
    logger.debug("Parsed %d keys from %s", len(values), source)
    return config_from_mapping(values)


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load a scenario document from disk.

    Args:
        path: Path to the document.

    Returns:
        ScenarioConfig instance.

    Raises:
        ConfigurationError: If the file cannot be read or is invalid.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {e}") from e
    return parse_config(text, source=str(path))


def calibration_path() -> Path:
    """Location of the bundled figure-reproduction calibration document."""
    return DATA_DIR / CALIBRATION_FILE


@dataclass
class RuntimeSettings:
    """Process-level settings taken from the environment."""

    output_dir: str = OUTPUT_DIR

    @classmethod
    def from_env(cls, env_path: Optional[str] = None) -> "RuntimeSettings":
        """
        Load settings from environment variables.

        Args:
            env_path: Optional path to .env file.

        Returns:
            RuntimeSettings instance.
        """
        if env_path:
            load_dotenv(env_path)
        else:
            load_dotenv()

        return cls(output_dir=os.getenv("UAV_COVERAGE_OUTPUT_DIR", OUTPUT_DIR))

    def validate(self) -> tuple[bool, List[str]]:
        """
        Validate the settings.

        Returns:
            Tuple of (is_valid, list of error messages).
        """
        errors = []
        if not self.output_dir.strip():
            errors.append("UAV_COVERAGE_OUTPUT_DIR must not be empty.")
        elif Path(self.output_dir).exists() and not Path(self.output_dir).is_dir():
            errors.append(f"UAV_COVERAGE_OUTPUT_DIR is not a directory: {self.output_dir}")
        return len(errors) == 0, errors


def get_settings(env_path: Optional[str] = None) -> RuntimeSettings:
    """
    Get the runtime settings, validating them.

    Raises:
        ConfigurationError: If the settings are invalid.
    """
    settings = RuntimeSettings.from_env(env_path)

    is_valid, errors = settings.validate()
    if not is_valid:
        raise ConfigurationError(
            "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
        )

    return settings
