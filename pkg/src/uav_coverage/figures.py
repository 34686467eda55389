"""
Figure reproduction pipelines.

Each figure is a sweep (or curve) over the calibration scenario plus a list
of qualitative checks. Checks that depend on parameters the calibration
had to assume are reported as informational and never fail a run.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .config import apply_overrides, calibration_path, load_config
from .model import ScenarioConfig
from .propulsion import max_range_velocity, optimal_trip_velocity, trip_power
from .rectenna import efficiency, fit_rmse, load_rectenna_csv, rectify
from .service import saturation_time
from .sweep import Axis, CalibrationMissingError, SweepResult, SweepSpec, run_sweep
from .units import dbm_to_watts, per_m2_to_per_km2

logger = logging.getLogger(__name__)

LAMBDA_KEY = "stations.lambda_ch_per_km2"
T_CH_KEY = "stations.t_ch_s"
B_MAX_KEY = "uav.b_max_wh"
V_KEY = "uav.v_mps"

# Density grid 1e-9 .. 1e-4 per m^2, expressed per km^2.
FIG3_LAMBDAS = tuple(float(v) for v in np.logspace(-3.0, 2.0, 31))
FIG3_T_CH = {
    "fig3a": (600.0, 1200.0, 1800.0),
    "fig3b": (600.0, 1200.0, 1800.0, 2850.0, 3600.0),
    "fig3c": (600.0, 1200.0, 1800.0, 2850.0, 3600.0, 4350.0),
}
FIG4_BATTERIES_WH = (308.0, 462.0, 616.0, 770.0)
FIG4_LAMBDA_M2 = {"fig4a": 1e-9, "fig4b": 1e-6}
FIG5_BATTERY_WH = 192.5
FIG5_T_CH = 450.0
FIG5_LAMBDAS_M2 = (1e-9, 1e-8, 1e-7, 1e-6)
FIG5_VELOCITIES = tuple(float(v) for v in np.arange(1.0, 30.0 + 0.25, 0.5))

REFERENCE_CROSSING_M2 = 7.81e-6
TABLE_HOVER_POWER = 168.48
TABLE_TRIP_POWER = 126.395
TABLE_VELOCITY = 10.36
E_PT_SENSITIVITY = (0.0, 10.0)

SHIPPED_RECTENNA_CSV = Path(__file__).parent / "data" / "rectenna_868mhz.csv"


class FigureId(Enum):
    """Reproducible figures."""

    FIG2A = ("fig2a", "Propulsion power vs. velocity")
    FIG2B = ("fig2b", "Rectenna efficiency and output vs. input power")
    FIG3A = ("fig3a", "P_cov vs. station density, half-charged battery")
    FIG3B = ("fig3b", "P_cov vs. station density, up to full charge")
    FIG3C = ("fig3c", "P_cov vs. station density, including overflow")
    FIG4A = ("fig4a", "P_cov vs. recharge time, lambda = 1e-9 per m^2")
    FIG4B = ("fig4b", "P_cov vs. recharge time, lambda = 1e-6 per m^2")
    FIG5 = ("fig5", "P_cov vs. UAV velocity")

    def __init__(self, key: str, description: str):
        self.key = key
        self.description = description

    @classmethod
    def from_string(cls, value: str) -> Optional["FigureId"]:
        """Get a FigureId from its key (case-insensitive)."""
        value = value.strip().lower()
        for figure in cls:
            if figure.key == value:
                return figure
        return None

    @classmethod
    def all_keys(cls) -> List[str]:
        return [figure.key for figure in cls]


@dataclass(frozen=True)
class Check:
    """One qualitative assertion about a figure."""

    name: str
    passed: bool
    detail: str = ""
    informational: bool = False

    @property
    def status(self) -> str:
        if self.informational:
            return "info"
        return "pass" if self.passed else "FAIL"


@dataclass
class FigureResult:
    """Data grid and check summary of a reproduced figure."""

    figure: FigureId
    table: SweepResult
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks if not check.informational)


def load_calibration(path: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """
    Load the figure-reproduction calibration document.

    Raises:
        CalibrationMissingError: If the document does not exist.
    """
    path = Path(path) if path is not None else calibration_path()
    if not path.is_file():
        raise CalibrationMissingError(
            f"Calibration document not found: {path}. Figure reproduction needs the "
            "power-transfer energy and the other assumed constants it records."
        )
    return load_config(path)


def find_crossing(
    xs: Sequence[float], ys_a: Sequence[float], ys_b: Sequence[float], log_x: bool = True
) -> Optional[float]:
    """
    First abscissa where curve a overtakes curve b.

    The crossing between two grid points is interpolated linearly in the
    difference and (by default) logarithmically in x.

    Returns:
        Crossing abscissa, xs[0] if a is already above b, or None.
    """
    x = np.asarray(xs, dtype=float)
    diff = np.asarray(ys_a, dtype=float) - np.asarray(ys_b, dtype=float)
    if diff.size == 0:
        return None
    if diff[0] > 0.0:
        return float(x[0])

    for i in range(1, diff.size):
        if diff[i - 1] <= 0.0 < diff[i]:
            t = -diff[i - 1] / (diff[i] - diff[i - 1])
            if log_x and x[i - 1] > 0.0:
                return float(math.exp(math.log(x[i - 1]) + t * (math.log(x[i]) - math.log(x[i - 1]))))
            return float(x[i - 1] + t * (x[i] - x[i - 1]))
    return None


def _is_non_decreasing(values: np.ndarray, rtol: float = 1e-9) -> bool:
    steps = np.diff(values)
    return bool(np.all(steps >= -rtol * np.maximum(np.abs(values[1:]), 1e-300)))


def _curve(table: SweepResult, key: str, value: float, column: str) -> np.ndarray:
    return table.where({key: value}).column(column)


def _density_table(base: ScenarioConfig, t_ch_values: Sequence[float], workers: int) -> SweepResult:
    spec = SweepSpec(
        axis1=Axis(T_CH_KEY, tuple(t_ch_values)),
        axis2=Axis(LAMBDA_KEY, FIG3_LAMBDAS),
        workers=workers,
    )
    return run_sweep(base, spec)


def _fig3(figure: FigureId, base: ScenarioConfig, workers: int) -> FigureResult:
    t_values = FIG3_T_CH[figure.key]
    table = _density_table(base, t_values, workers)
    lambdas_m2 = _curve(table, T_CH_KEY, t_values[0], "lambda_ch")
    checks = [Check("all grid points evaluated", table.ok)]

    for t in t_values:
        p_cov = _curve(table, T_CH_KEY, t, "p_cov")
        checks.append(
            Check(f"P_cov non-decreasing in density (t_Ch={t:g} s)", _is_non_decreasing(p_cov))
        )

    t_sat = saturation_time(base.xi_ch, base.b_max)
    charging = [t for t in t_values if t <= t_sat]
    if len(charging) > 1:
        stacked = np.vstack([_curve(table, T_CH_KEY, t, "p_cov") for t in charging])
        ordered = bool(np.all(np.diff(stacked, axis=0) >= -1e-12))
        checks.append(
            Check(
                "longer charging up to saturation never lowers P_cov",
                ordered,
                f"t_Ch in {', '.join(f'{t:g}' for t in charging)} s",
            )
        )

    if figure is FigureId.FIG3C:
        checks.extend(_overflow_checks(base, table, lambdas_m2, workers))
    return FigureResult(figure=figure, table=table, checks=checks)


def _overflow_checks(
    base: ScenarioConfig, table: SweepResult, lambdas_m2: np.ndarray, workers: int
) -> List[Check]:
    short = _curve(table, T_CH_KEY, 600.0, "p_cov")
    overflow = _curve(table, T_CH_KEY, 4350.0, "p_cov")
    crossing = find_crossing(lambdas_m2, short, overflow)

    checks = []
    if crossing is None:
        checks.append(Check("t_Ch=600 s overtakes t_Ch=4350 s", False, "no crossing on the grid"))
        return checks

    after = lambdas_m2 > crossing
    holds = bool(np.all(short[after] > overflow[after])) and bool(np.any(after))
    checks.append(
        Check(
            "t_Ch=600 s overtakes t_Ch=4350 s",
            holds,
            f"crossing at {crossing:.3e} per m^2",
        )
    )
    ratio = crossing / REFERENCE_CROSSING_M2
    checks.append(
        Check(
            "crossing density within a decade of 7.81e-6 per m^2",
            0.1 <= ratio <= 10.0,
            f"{crossing:.3e} per m^2 ({ratio:.2g} x reference); depends on the assumed E_PT",
            informational=True,
        )
    )

    for factor in E_PT_SENSITIVITY:
        variant = apply_overrides(base, {"uav.e_pt_j": base.e_pt * factor})
        sub = _density_table(variant, (600.0, 4350.0), workers)
        moved = find_crossing(
            lambdas_m2, _curve(sub, T_CH_KEY, 600.0, "p_cov"), _curve(sub, T_CH_KEY, 4350.0, "p_cov")
        )
        detail = "no crossing" if moved is None else f"crossing at {moved:.3e} per m^2"
        checks.append(
            Check(
                f"E_PT x{factor:g} ({base.e_pt * factor:g} J)",
                True,
                detail,
                informational=True,
            )
        )
    return checks


def _fig4(figure: FigureId, base: ScenarioConfig, workers: int) -> FigureResult:
    lambda_km2 = per_m2_to_per_km2(FIG4_LAMBDA_M2[figure.key])
    base = apply_overrides(base, {LAMBDA_KEY: lambda_km2})
    saturation_points = [saturation_time(base.xi_ch, b * 3600.0) for b in FIG4_BATTERIES_WH]
    t_values = sorted(set(float(t) for t in np.arange(0.0, 5000.0 + 1.0, 50.0)) | set(saturation_points))

    spec = SweepSpec(
        axis1=Axis(B_MAX_KEY, FIG4_BATTERIES_WH),
        axis2=Axis(T_CH_KEY, tuple(t_values)),
        workers=workers,
    )
    table = run_sweep(base, spec)
    t_grid = np.array(t_values)
    checks = [Check("all grid points evaluated", table.ok)]

    expected = {308.0: 1440.0, 770.0: 3600.0}
    for b_wh, t_expected in expected.items():
        t_sat = saturation_time(base.xi_ch, b_wh * 3600.0)
        checks.append(
            Check(
                f"saturation time of {b_wh:g} Wh is {t_expected:g} s",
                t_sat == t_expected,
                f"{t_sat:g} s at {base.xi_ch:g} W",
            )
        )

    curves = {b: _curve(table, B_MAX_KEY, b, "p_cov") for b in FIG4_BATTERIES_WH}
    smallest = min(FIG4_BATTERIES_WH)
    t_first = saturation_time(base.xi_ch, smallest * 3600.0)
    early = t_grid <= t_first
    reference = curves[smallest][early]
    identical = all(
        np.allclose(curves[b][early], reference, rtol=1e-9, atol=0.0) for b in FIG4_BATTERIES_WH
    )
    checks.append(
        Check(f"all batteries coincide up to t_Ch={t_first:g} s", identical)
    )

    for b_wh, t_sat in zip(FIG4_BATTERIES_WH, saturation_points):
        curve = curves[b_wh]
        late = curve[t_grid >= t_sat]
        peak = float(t_grid[int(np.argmax(curve))])
        checks.append(
            Check(
                f"{b_wh:g} Wh: P_cov strictly decreasing after saturation at {t_sat:g} s",
                bool(np.all(np.diff(late) < 0.0)),
            )
        )
        checks.append(
            Check(
                f"{b_wh:g} Wh: kink (maximum) at the saturation time",
                peak == t_sat,
                f"maximum at t_Ch={peak:g} s",
            )
        )
    return FigureResult(figure=figure, table=table, checks=checks)


def _fig5(base: ScenarioConfig, workers: int) -> FigureResult:
    base = apply_overrides(base, {B_MAX_KEY: FIG5_BATTERY_WH, T_CH_KEY: FIG5_T_CH})
    lambdas_km2 = tuple(per_m2_to_per_km2(lam) for lam in FIG5_LAMBDAS_M2)
    spec = SweepSpec(
        axis1=Axis(LAMBDA_KEY, lambdas_km2),
        axis2=Axis(V_KEY, FIG5_VELOCITIES),
        workers=workers,
    )
    table = run_sweep(base, spec)
    table.columns.insert(table.columns.index("status"), "v_opt")

    velocities = np.array(FIG5_VELOCITIES)
    optima: Dict[float, float] = {}
    for lam_km2, lam_m2 in zip(lambdas_km2, FIG5_LAMBDAS_M2):
        curve = _curve(table, LAMBDA_KEY, lam_km2, "p_cov")
        optima[lam_m2] = float(velocities[int(np.nanargmax(curve))])
        for row in table.where({LAMBDA_KEY: lam_km2}).rows:
            row["v_opt"] = optima[lam_m2]

    checks = [Check("all grid points evaluated", table.ok)]
    lowest = FIG5_LAMBDAS_M2[0]
    interior = velocities[0] < optima[lowest] < velocities[-1]
    checks.append(
        Check(
            f"interior optimal velocity at lambda={lowest:g} per m^2",
            interior,
            f"v_opt = {optima[lowest]:g} m/s",
        )
    )
    # At the optimum P_J'(V) V - P_J(V) equals the usable energy over the
    # cycle time; that ratio falls with the station distance, so the optimum
    # rises with density and always sits above the max-range speed.
    sequence = [optima[lam] for lam in FIG5_LAMBDAS_M2]
    v_range = max_range_velocity(base.propulsion)
    detail = "v_opt = " + ", ".join(f"{v:g}" for v in sequence) + " m/s"
    checks.append(
        Check(
            "optimal velocity non-decreasing with density",
            all(b >= a for a, b in zip(sequence, sequence[1:])),
            detail,
        )
    )
    checks.append(
        Check(
            "optimal velocity above the max-range speed",
            all(v > v_range for v in sequence),
            f"max-range speed {v_range:.2f} m/s",
        )
    )
    return FigureResult(figure=FigureId.FIG5, table=table, checks=checks)


def _fig2a(base: ScenarioConfig) -> FigureResult:
    model = base.propulsion
    velocities = np.array(FIG5_VELOCITIES)
    powers = trip_power(model, velocities)
    columns = ["v", "p_j", "p_h", "energy_per_m", "status"]
    rows = [
        {"v": float(v), "p_j": float(p), "p_h": model.hover_power, "energy_per_m": float(p / v), "status": "ok"}
        for v, p in zip(velocities, powers)
    ]
    table = SweepResult(columns=columns, rows=rows)

    p_j = trip_power(model, TABLE_VELOCITY)
    grid = trip_power(model, np.linspace(1.0, 30.0, 1000))
    checks = [
        Check(
            "hover power 168.48 W",
            abs(model.hover_power - TABLE_HOVER_POWER) <= 0.05,
            f"{model.hover_power:.4f} W",
        ),
        Check(
            "trip power 126.395 W at 10.36 m/s",
            abs(p_j - TABLE_TRIP_POWER) <= 0.05,
            f"{p_j:.4f} W",
        ),
        Check(
            "trip power convex on [1, 30] m/s",
            bool(np.all(np.diff(grid, 2) >= -1e-6)),
        ),
        Check(
            "speeds of minimum power and maximum range",
            True,
            f"{optimal_trip_velocity(model):.3f} m/s and {max_range_velocity(model):.3f} m/s",
            informational=True,
        ),
    ]
    return FigureResult(figure=FigureId.FIG2A, table=table, checks=checks)


def _fig2b(base: ScenarioConfig) -> FigureResult:
    model = base.rectenna
    powers_dbm = np.arange(-30.0, 15.0 + 0.25, 0.5)
    powers = np.array([dbm_to_watts(p) for p in powers_dbm])
    outputs = np.asarray(rectify(model, powers))
    eff = np.asarray(efficiency(model, powers))
    columns = ["power_dbm", "p_in", "efficiency", "p_out", "status"]
    rows = [
        {"power_dbm": float(d), "p_in": float(p), "efficiency": float(e), "p_out": float(o), "status": "ok"}
        for d, p, e, o in zip(powers_dbm, powers, eff, outputs)
    ]
    table = SweepResult(columns=columns, rows=rows)

    in_range = (powers >= model.p_th) & (powers <= model.p_sat)
    checks = [
        Check("rectified output non-decreasing", _is_non_decreasing(outputs[powers >= model.p_th])),
        Check(
            "efficiency in [0, 1) on the operating range",
            bool(np.all((eff[in_range] >= 0.0) & (eff[in_range] < 1.0))),
        ),
        Check("output never exceeds input", bool(np.all(outputs <= powers))),
    ]
    if SHIPPED_RECTENNA_CSV.is_file():
        samples = load_rectenna_csv(SHIPPED_RECTENNA_CSV)
        checks.append(
            Check(
                "model against the shipped rectenna samples",
                True,
                f"rmse {fit_rmse(model, samples):.2e}",
                informational=True,
            )
        )
    return FigureResult(figure=FigureId.FIG2B, table=table, checks=checks)


def reproduce_figure(
    figure: FigureId,
    calibration: Optional[Union[str, Path]] = None,
    workers: int = 1,
) -> FigureResult:
    """
    Reproduce one figure from the calibration document.

    Args:
        figure: Figure to reproduce.
        calibration: Path to the calibration document; the bundled one by
            default.
        workers: Process count for the sweep.

    Returns:
        FigureResult with the data grid and the checks.

    Raises:
        CalibrationMissingError: If the calibration document is absent.
    """
    base = load_calibration(calibration)
    logger.info("Reproducing %s: %s", figure.key, figure.description)

    builders: Dict[FigureId, Callable[[], FigureResult]] = {
        FigureId.FIG2A: lambda: _fig2a(base),
        FigureId.FIG2B: lambda: _fig2b(base),
        FigureId.FIG3A: lambda: _fig3(FigureId.FIG3A, base, workers),
        FigureId.FIG3B: lambda: _fig3(FigureId.FIG3B, base, workers),
        FigureId.FIG3C: lambda: _fig3(FigureId.FIG3C, base, workers),
        FigureId.FIG4A: lambda: _fig4(FigureId.FIG4A, base, workers),
        FigureId.FIG4B: lambda: _fig4(FigureId.FIG4B, base, workers),
        FigureId.FIG5: lambda: _fig5(base, workers),
    }
    result = builders[figure]()

    for check in result.checks:
        if not check.passed and not check.informational:
            logger.warning("%s: check failed: %s %s", figure.key, check.name, check.detail)
    return result
