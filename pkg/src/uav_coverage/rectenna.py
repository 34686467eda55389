"""
Nonlinear RF-to-DC conversion of the sensor rectenna.

The efficiency is a polynomial in the input power (highest power first,
watts). Output is zero below the sensitivity floor and clamped at the
saturation power.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from .model import InvariantViolation, RectennaModel
from .units import dbm_to_watts, watts_to_dbm

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
Sample = Tuple[float, float]

CSV_COLUMNS = ("power_dbm", "efficiency")
BISECT_RTOL = 1e-12
MAX_BRACKET_DOUBLINGS = 200


class RectennaError(Exception):
    """Base exception for rectenna model errors."""

    pass


class UnreachableTargetError(RectennaError):
    """Requested output power lies above the saturated output."""

    def __init__(self, target: float, ceiling: float):
        self.target = target
        self.ceiling = ceiling
        super().__init__(
            f"target output {target:.6g} W exceeds the saturated output {ceiling:.6g} W"
        )


class UnderdeterminedFitError(RectennaError):
    """Not enough samples for the requested polynomial degree."""

    pass


class MonotonicityError(RectennaError):
    """Fitted output power decreases somewhere on the fitted range."""

    def __init__(self, worst_power: float, drop: float):
        self.worst_power = worst_power
        self.drop = drop
        super().__init__(
            f"fitted output decreases by {drop:.6g} W after {worst_power:.6g} W "
            f"({watts_to_dbm(worst_power):.2f} dBm)"
        )


def efficiency(model: RectennaModel, p_in: ArrayLike) -> ArrayLike:
    """Raw polynomial efficiency, without the sensitivity gate or clamp."""
    return np.polyval(model.coeffs, p_in)


def rectify(model: RectennaModel, p_in: ArrayLike) -> ArrayLike:
    """
    Rectified DC output for an input RF power.

    Args:
        model: Rectenna model.
        p_in: Input power in watts (>= 0), scalar or array.

    Returns:
        0 below p_th, efficiency * p_in up to p_sat, and the saturated
        output above it.
    """
    power = np.asarray(p_in, dtype=float)
    if np.any(power < 0.0):
        raise RectennaError(f"input power must be >= 0, got {p_in}")

    clamped = np.minimum(power, model.p_sat)
    output = np.polyval(model.coeffs, clamped) * clamped
    output = np.where(power < model.p_th, 0.0, output)

    if np.ndim(output) == 0:
        return float(output)
    return output


def saturated_output(model: RectennaModel) -> float:
    """Largest achievable output, rectify(p_sat); infinite for an unclamped model."""
    if not model.clamped:
        return math.inf
    return rectify(model, model.p_sat)


def invert_rectify(model: RectennaModel, p_out_target: float) -> float:
    """
    Smallest input power whose rectified output reaches a target.

    Bisection on [p_th, p_sat] is valid because the output is
    non-decreasing there.

    Args:
        model: Rectenna model.
        p_out_target: Required DC output in watts (> 0).

    Returns:
        Input power in watts with rectify(result) >= p_out_target.

    Raises:
        RectennaError: If the target is not positive.
        UnreachableTargetError: If the target exceeds the saturated output.
    """
    if not p_out_target > 0.0:
        raise RectennaError(f"target output must be > 0, got {p_out_target}")

    ceiling = saturated_output(model)
    if p_out_target > ceiling:
        raise UnreachableTargetError(p_out_target, ceiling)
    if rectify(model, model.p_th) >= p_out_target:
        return model.p_th

    def shortfall(p: float) -> float:
        return float(np.polyval(model.coeffs, p) * p) - p_out_target

    upper = model.p_sat if model.clamped else _find_upper_bracket(model, shortfall)
    if shortfall(upper) == 0.0:
        return upper

    root = bisect(shortfall, model.p_th, upper, xtol=1e-30, rtol=BISECT_RTOL)
    while shortfall(root) < 0.0 and root < upper:
        root = min(root * (1.0 + 1e-11), upper)
    return root


def _find_upper_bracket(model: RectennaModel, shortfall: Callable[[float], float]) -> float:
    upper = max(2.0 * model.p_th, 1e-12)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if shortfall(upper) >= 0.0:
            return upper
        upper *= 2.0
    raise RectennaError(f"unclamped output never reaches the target below {upper:.3g} W")


def fit_rectenna(
    samples: Sequence[Sample], degree: int, eta_fixed: float = 0.5
) -> RectennaModel:
    """
    Least-squares fit of the efficiency polynomial to measured samples.

    Args:
        samples: (input power in W, efficiency) pairs.
        degree: Degree of the efficiency polynomial; degree + 1 coefficients
            are fitted.
        eta_fixed: Fixed efficiency stored for the closed-form mode.

    Returns:
        RectennaModel with p_th / p_sat set to the sampled power range.

    Raises:
        UnderdeterminedFitError: Fewer than degree + 1 distinct powers.
        RectennaError: Efficiencies outside [0, 1).
        MonotonicityError: The fitted output is not non-decreasing.
    """
    if degree < 0:
        raise UnderdeterminedFitError(f"degree must be >= 0, got {degree}")
    powers = np.array([s[0] for s in samples], dtype=float)
    values = np.array([s[1] for s in samples], dtype=float)
    if np.unique(powers).size < degree + 1:
        raise UnderdeterminedFitError(
            f"degree {degree} needs at least {degree + 1} distinct sample powers, "
            f"got {np.unique(powers).size}"
        )
    if np.any(powers < 0.0):
        raise RectennaError("sample powers must be >= 0")
    if np.any((values < 0.0) | (values >= 1.0)):
        raise RectennaError("sample efficiencies must lie in [0, 1)")

    coeffs = np.polyfit(powers, values, degree)
    p_th, p_sat = float(powers.min()), float(powers.max())

    grid = np.linspace(p_th, p_sat, 1000)
    output = np.polyval(coeffs, grid) * grid
    steps = np.diff(output)
    worst = int(np.argmin(steps))
    if steps[worst] < -1e-12 * max(float(np.max(np.abs(output))), 1e-300):
        raise MonotonicityError(float(grid[worst]), float(-steps[worst]))

    try:
        model = RectennaModel(p_th=p_th, p_sat=p_sat, coeffs=tuple(coeffs), eta_fixed=eta_fixed)
    except InvariantViolation as e:
        raise RectennaError(f"fitted model rejected: {e}") from e

    logger.debug(
        "Fitted degree-%d rectenna on %d samples, rmse %.3e",
        degree, len(samples), fit_rmse(model, samples),
    )
    return model


def fit_rmse(model: RectennaModel, samples: Sequence[Sample]) -> float:
    """Root-mean-square efficiency residual of a model against samples."""
    powers = np.array([s[0] for s in samples], dtype=float)
    values = np.array([s[1] for s in samples], dtype=float)
    return float(np.sqrt(np.mean((np.polyval(model.coeffs, powers) - values) ** 2)))


def load_rectenna_csv(path: Union[str, Path]) -> List[Sample]:
    """
    Read efficiency samples from a two-column CSV.

    The header row must be ``power_dbm,efficiency``; powers are converted
    to watts. Lines starting with ``#`` are ignored.

    Returns:
        List of (power in W, efficiency) pairs in file order.
    """
    path = Path(path)
    samples: List[Sample] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        rows = (line for line in f if line.strip() and not line.lstrip().startswith("#"))
        reader = csv.reader(rows)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise RectennaError(
                f"{path}: expected header {','.join(CSV_COLUMNS)}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise RectennaError(f"{path}: row {line_no} must have 2 columns")
            try:
                samples.append((dbm_to_watts(float(row[0])), float(row[1])))
            except ValueError as e:
                raise RectennaError(f"{path}: row {line_no}: {e}") from e
    return samples


def rectenna_block(model: RectennaModel, comment: Optional[str] = None) -> str:
    """
    Render a model as scenario-document lines for the rectenna namespace.

    Returns:
        Text that can be pasted into a scenario document.
    """
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    p_sat_dbm = watts_to_dbm(model.p_sat) if model.clamped else math.inf
    lines.append(f"rectenna.p_th_dbm={watts_to_dbm(model.p_th)!r}")
    lines.append(f"rectenna.p_sat_dbm={p_sat_dbm!r}")
    lines.append("rectenna.coeffs=" + ", ".join(repr(float(c)) for c in model.coeffs))
    lines.append(f"rectenna.eta_fixed={model.eta_fixed!r}")
    return "\n".join(lines) + "\n"
