"""
Parameter sweeps over scenario keys with CSV output.

A sweep spec is a flat key-value document (python-dotenv syntax):

    axis1.key=stations.lambda_ch_per_km2
    axis1.values=logspace(-3, 2, 31)
    axis2.key=stations.t_ch_s
    axis2.values=600, 1200, 1800
    override.uav.e_pt_j=7.55
    outputs=p_e, p_cov_s, p_cov
    engine=both
    mc.trials=100000
    mc.seed=7
    workers=4
"""

import csv
import io
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from .config import SCHEMA, ConfigurationError, SchemaError, apply_overrides, parse_document
from .coverage import coverage_total
from .model import ModelError, ScenarioConfig
from .monte_carlo import SimConfig, simulate
from .rectenna import RectennaError
from .service import QuadratureError, service_analytics
from .units import joules_to_wh

logger = logging.getLogger(__name__)

BASE_COLUMNS = ("lambda_ch", "t_ch", "b_max_wh", "v")
ANALYTIC_OUTPUTS = ("p_e", "p_los", "p_cov_s", "p_cov", "zeta", "r_max", "r_cutoff", "x0", "x_max")
DEFAULT_OUTPUTS = ("p_e", "p_los", "p_cov_s", "p_cov")
# Analytic output -> Monte Carlo estimator it is checked against.
MC_ESTIMATORS = {"p_e": "service", "p_cov_s": "sensor_coverage", "p_cov": "coverage"}

_GRID_FUNCTION = re.compile(r"^\s*(logspace|linspace)\s*\(([^)]*)\)\s*$")


class SweepError(Exception):
    """Base exception for sweep errors."""

    pass


class CalibrationMissingError(SweepError):
    """The calibration document needed for figure reproduction is absent."""

    pass


class Engine(Enum):
    """Which evaluator produces the sweep values."""

    ANALYTIC = ("analytic", "Closed forms and quadrature")
    MONTE_CARLO = ("montecarlo", "Monte Carlo simulation")
    BOTH = ("both", "Closed forms with Monte Carlo cross-check")

    def __init__(self, key: str, description: str):
        self.key = key
        self.description = description

    @classmethod
    def from_string(cls, value: str) -> Optional["Engine"]:
        """Get an Engine from its key (case-insensitive, '-' and '_' ignored)."""
        value = value.strip().lower().replace("-", "").replace("_", "")
        for engine in cls:
            if engine.key == value:
                return engine
        return None

    @property
    def analytic(self) -> bool:
        return self is not Engine.MONTE_CARLO

    @property
    def monte_carlo(self) -> bool:
        return self is not Engine.ANALYTIC


@dataclass(frozen=True)
class Axis:
    """One swept schema key and its values (human units)."""

    key: str
    values: Tuple[float, ...]

    def __post_init__(self):
        spec = SCHEMA.get(self.key)
        if spec is None:
            raise SweepError(f"axis key {self.key!r} is not a schema key")
        if not spec.numeric:
            raise SweepError(f"axis key {self.key!r} is not a numeric key")
        if not self.values:
            raise SweepError(f"axis {self.key!r} has no values")
        if not all(math.isfinite(v) for v in self.values):
            raise SweepError(f"axis {self.key!r} has non-finite values")


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition, fixed overrides, outputs and engine of a sweep."""

    axis1: Axis
    axis2: Optional[Axis] = None
    overrides: Dict[str, str] = field(default_factory=dict)
    outputs: Tuple[str, ...] = DEFAULT_OUTPUTS
    engine: Engine = Engine.ANALYTIC
    mc_trials: int = 100_000
    mc_seed: int = 1
    workers: int = 1

    def __post_init__(self):
        unknown = [o for o in self.outputs if o not in ANALYTIC_OUTPUTS]
        if unknown:
            raise SweepError(
                f"unknown outputs {', '.join(unknown)}; valid: {', '.join(ANALYTIC_OUTPUTS)}"
            )
        bad_keys = [k for k in self.overrides if k not in SCHEMA]
        if bad_keys:
            raise SweepError(f"unknown override keys: {', '.join(bad_keys)}")
        if self.engine is Engine.MONTE_CARLO:
            unestimated = [o for o in self.outputs if o not in MC_ESTIMATORS]
            if unestimated:
                raise SchemaError(
                    "outputs",
                    f"{', '.join(unestimated)} have no Monte Carlo estimator; "
                    f"the montecarlo engine supports {', '.join(MC_ESTIMATORS)}",
                )
        if self.workers < 1:
            raise SweepError("workers must be >= 1")

    @property
    def axes(self) -> List[Axis]:
        return [self.axis1] if self.axis2 is None else [self.axis1, self.axis2]

    @property
    def grid_size(self) -> int:
        size = 1
        for axis in self.axes:
            size *= len(axis.values)
        return size

    def grid(self) -> List[Tuple[float, ...]]:
        """Grid points, axis1-major."""
        return list(product(*(axis.values for axis in self.axes)))

    def columns(self) -> List[str]:
        """CSV header for this spec."""
        columns = [axis.key for axis in self.axes] + list(BASE_COLUMNS)
        if self.engine.analytic:
            columns.extend(self.outputs)
        if self.engine.monte_carlo:
            for output in self.outputs:
                if output in MC_ESTIMATORS:
                    columns.extend([f"mc_{output}", f"mc_{output}_se"])
                    if self.engine is Engine.BOTH:
                        columns.append(f"z_{output}")
        columns.append("status")
        return columns


@dataclass
class SweepResult:
    """Evaluated sweep rows in grid order."""

    columns: List[str]
    rows: List[Dict[str, Any]]

    def column(self, name: str) -> np.ndarray:
        """A column as a float array (errors and blanks become NaN)."""
        values = []
        for row in self.rows:
            value = row.get(name)
            values.append(float(value) if isinstance(value, (int, float)) else math.nan)
        return np.array(values, dtype=float)

    def where(self, criteria: Dict[str, float]) -> "SweepResult":
        """Rows whose columns equal the given values."""
        rows = [
            row for row in self.rows
            if all(row.get(k) == v for k, v in criteria.items())
        ]
        return SweepResult(columns=list(self.columns), rows=rows)

    @property
    def ok(self) -> bool:
        return all(row.get("status") == "ok" for row in self.rows)


def parse_values(text: str) -> Tuple[float, ...]:
    """
    Parse axis values: a comma list, logspace(a, b, n) or linspace(a, b, n).

    Raises:
        SweepError: If the text cannot be parsed.
    """
    match = _GRID_FUNCTION.match(text)
    try:
        if match:
            args = [float(a) for a in match.group(2).split(",")]
            if len(args) != 3 or args[2] < 1 or args[2] != int(args[2]):
                raise ValueError(f"{match.group(1)} takes (start, stop, count)")
            func = np.logspace if match.group(1) == "logspace" else np.linspace
            return tuple(float(v) for v in func(args[0], args[1], int(args[2])))
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise SweepError(f"cannot parse axis values {text!r}: {e}") from e


def _axis(values: Dict[str, Optional[str]], name: str) -> Optional[Axis]:
    key = values.get(f"{name}.key")
    raw = values.get(f"{name}.values")
    if key is None and raw is None:
        return None
    if not key or not raw:
        raise SweepError(f"{name} needs both {name}.key and {name}.values")
    return Axis(key=key.strip(), values=parse_values(raw))


def parse_sweep_spec(text: str) -> SweepSpec:
    """
    Parse a sweep spec document.

    Returns:
        SweepSpec instance.

    Raises:
        SweepError: If the document is malformed.
        SchemaError: If the montecarlo engine is asked for an output it
            cannot estimate.
    """
    values = parse_document(text)
    known = {"axis1.key", "axis1.values", "axis2.key", "axis2.values", "outputs", "engine",
             "mc.trials", "mc.seed", "workers"}
    unknown = [k for k in values if k not in known and not k.startswith("override.")]
    if unknown:
        raise SweepError(f"unknown sweep keys: {', '.join(unknown)}")

    axis1 = _axis(values, "axis1")
    if axis1 is None:
        raise SweepError("axis1.key and axis1.values are required")

    engine = Engine.ANALYTIC
    if values.get("engine"):
        parsed = Engine.from_string(values["engine"] or "")
        if parsed is None:
            raise SweepError(f"unknown engine {values['engine']!r}")
        engine = parsed

    outputs = DEFAULT_OUTPUTS
    if engine is Engine.MONTE_CARLO:
        outputs = tuple(o for o in DEFAULT_OUTPUTS if o in MC_ESTIMATORS)
    if values.get("outputs"):
        outputs = tuple(o.strip() for o in (values["outputs"] or "").split(",") if o.strip())

    try:
        mc_trials = int(values.get("mc.trials") or 100_000)
        mc_seed = int(values.get("mc.seed") or 1)
        workers = int(values.get("workers") or 1)
    except ValueError as e:
        raise SweepError(f"invalid integer setting: {e}") from e

    overrides = {
        k[len("override."):]: (v or "") for k, v in values.items() if k.startswith("override.")
    }
    return SweepSpec(
        axis1=axis1,
        axis2=_axis(values, "axis2"),
        overrides=overrides,
        outputs=outputs,
        engine=engine,
        mc_trials=mc_trials,
        mc_seed=mc_seed,
        workers=workers,
    )


def load_sweep_spec(path: Union[str, Path]) -> SweepSpec:
    """Load a sweep spec document from disk."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SweepError(f"Cannot read sweep spec {path}: {e}") from e
    return parse_sweep_spec(text)


def analytic_row(cfg: ScenarioConfig, outputs: Sequence[str] = DEFAULT_OUTPUTS) -> Dict[str, Any]:
    """Base columns plus the requested closed-form outputs for one config."""
    an = service_analytics(cfg)
    result = coverage_total(cfg, an)
    available = {
        "p_e": result.p_e,
        "p_los": result.p_los,
        "p_cov_s": result.p_cov_s,
        "p_cov": result.p_cov,
        "zeta": an.zeta,
        "r_max": an.r_max,
        "r_cutoff": an.r_cutoff,
        "x0": an.x0,
        "x_max": an.x_max,
    }
    row: Dict[str, Any] = base_row(cfg)
    row.update({name: available[name] for name in outputs})
    return row


def base_row(cfg: ScenarioConfig) -> Dict[str, Any]:
    return {
        "lambda_ch": cfg.lambda_ch,
        "t_ch": cfg.t_ch,
        "b_max_wh": joules_to_wh(cfg.b_max),
        "v": cfg.v,
    }


def evaluate_point(
    base: ScenarioConfig, spec: SweepSpec, point: Tuple[float, ...]
) -> Dict[str, Any]:
    """
    Evaluate one grid point; failures are recorded in the status column.
    """
    row: Dict[str, Any] = {axis.key: value for axis, value in zip(spec.axes, point)}
    try:
        overrides: Dict[str, Any] = dict(spec.overrides)
        overrides.update(row)
        cfg = apply_overrides(base, overrides)
        row.update(base_row(cfg))

        if spec.engine.analytic:
            row.update(analytic_row(cfg, spec.outputs))

        if spec.engine.monte_carlo:
            sim = SimConfig(trials=spec.mc_trials, seed=spec.mc_seed)
            estimates = simulate(cfg, sim)
            for output in spec.outputs:
                estimator = MC_ESTIMATORS.get(output)
                if estimator is None:
                    continue
                estimate = estimates[estimator]
                row[f"mc_{output}"] = estimate.mean
                row[f"mc_{output}_se"] = estimate.std_error
                if spec.engine is Engine.BOTH:
                    row[f"z_{output}"] = estimate.z_score(row[output])
        row["status"] = "ok"
    except (ModelError, ConfigurationError, RectennaError, QuadratureError) as e:
        logger.warning("Sweep point %s failed: %s", point, e)
        row["status"] = f"error: {e}"
    except Exception as e:
        logger.exception("Sweep point %s failed unexpectedly", point)
        row["status"] = f"error: {type(e).__name__}: {e}"
    return row


def run_sweep(base: ScenarioConfig, spec: SweepSpec) -> SweepResult:
    """
    Evaluate the Cartesian product of the spec's axes.

    Points run in a process pool when spec.workers > 1; rows are returned
    in grid order (axis1-major) either way.

    Args:
        base: Base configuration.
        spec: Sweep spec.

    Returns:
        SweepResult with one row per grid point.
    """
    grid = spec.grid()
    logger.info("Running sweep of %d points with %s engine", len(grid), spec.engine.key)
    evaluate = partial(evaluate_point, base, spec)

    if spec.workers == 1 or len(grid) == 1:
        rows = [evaluate(point) for point in grid]
    else:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(evaluate, grid))

    return SweepResult(columns=spec.columns(), rows=rows)


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    result: SweepResult, stream: TextIO, banner: Optional[str] = None
) -> None:
    """
    Write a sweep result as CSV with a header row.

    Args:
        result: Rows to write.
        stream: Output text stream.
        banner: Optional comment line written before the header.
    """
    if banner:
        stream.write(f"# {banner}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(row.get(column)) for column in result.columns])


def to_csv(result: SweepResult, banner: Optional[str] = None) -> str:
    buffer = io.StringIO()
    write_csv(result, buffer, banner)
    return buffer.getvalue()
