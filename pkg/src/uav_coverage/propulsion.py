"""
Rotary-wing UAV power consumption.

Trip power follows the blade profile / induced / parasite decomposition of
the rotary-wing energy model; hover power is the zero-speed aggregate
P_0 + P_i. Functions accept scalars or numpy arrays of velocities.
"""

import logging
from typing import Callable, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .model import DomainError, PropulsionModel

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_VELOCITY_RANGE: Tuple[float, float] = (1.0, 30.0)
UNIMODALITY_GRID_POINTS = 10_000
VELOCITY_TOLERANCE = 1e-6


def trip_power(model: PropulsionModel, v: ArrayLike) -> ArrayLike:
    """
    Propulsion power at constant forward speed.

    P_J(v) = P_0 (1 + 3 v^2 / U_tip^2) + P_i v_0 / v + 1/2 d_0 rho s A v^3

    Args:
        model: Propulsion coefficients.
        v: Forward speed in m/s (> 0), scalar or array.

    Returns:
        Power in watts, same shape as v.

    Raises:
        DomainError: If any speed is not strictly positive.
    """
    speed = np.asarray(v, dtype=float)
    if np.any(~(speed > 0.0)):
        raise DomainError(f"trip velocity must be > 0, got {v}")

    blade_profile = model.p0 * (1.0 + 3.0 * speed**2 / model.u_tip**2)
    induced = model.p_i * model.v0 / speed
    parasite = model.parasite_coefficient * speed**3
    power = blade_profile + induced + parasite

    if np.ndim(power) == 0:
        return float(power)
    return power


def hover_power(model: PropulsionModel) -> float:
    """Hover power P_h = P_0 + P_i."""
    return model.hover_power


def trip_energy(model: PropulsionModel, r: float, h_l: float, v: float) -> float:
    """
    Energy of the round trip to a station at horizontal distance r.

    Both legs cover r + h_l at speed v, so E_J = 2 (r + h_l) / v * P_J(v).
    """
    if r < 0.0 or h_l < 0.0:
        raise DomainError(f"distances must be >= 0, got r={r}, h_l={h_l}")
    return 2.0 * (r + h_l) / v * trip_power(model, v)


def leg_energy(model: PropulsionModel, r: float, h_l: float, v: float) -> float:
    """Energy of a single leg: half of the round trip."""
    return 0.5 * trip_energy(model, r, h_l, v)


def _check_range(v_range: Tuple[float, float]) -> Tuple[float, float]:
    v_lo, v_hi = float(v_range[0]), float(v_range[1])
    if not (0.0 < v_lo < v_hi) or not np.isfinite(v_hi):
        raise DomainError(f"velocity range must satisfy 0 < v_lo < v_hi, got {v_range}")
    return v_lo, v_hi


def _argmin_on_interval(
    objective: Callable[[np.ndarray], np.ndarray], v_lo: float, v_hi: float, label: str
) -> float:
    grid = np.linspace(v_lo, v_hi, UNIMODALITY_GRID_POINTS)
    values = objective(grid)
    steps = np.sign(np.diff(values))
    steps = steps[steps != 0.0]

    if steps.size == 0 or np.all(steps > 0):
        return v_lo
    if np.all(steps < 0):
        return v_hi

    changes = np.count_nonzero(np.diff(steps) != 0)
    if changes != 1:
        best = float(grid[int(np.argmin(values))])
        logger.warning(
            "%s is not unimodal on [%g, %g] (%d slope changes); using grid minimum %.4f",
            label, v_lo, v_hi, changes, best,
        )
        return best

    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda x: float(objective(np.asarray(x))),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": VELOCITY_TOLERANCE},
    )
    return float(result.x)


def optimal_trip_velocity(
    model: PropulsionModel, v_range: Tuple[float, float] = DEFAULT_VELOCITY_RANGE
) -> float:
    """
    Speed minimising trip power on a velocity interval.

    The unimodality of P_J is checked on a 10^4 point grid; a single slope
    change is refined with a bounded scalar minimisation, monotone curves
    return the matching endpoint, and anything else falls back to the grid
    minimum.

    Args:
        model: Propulsion coefficients.
        v_range: (v_lo, v_hi) with 0 < v_lo < v_hi.

    Returns:
        Minimising speed in m/s.
    """
    v_lo, v_hi = _check_range(v_range)
    return _argmin_on_interval(
        lambda v: trip_power(model, v), v_lo, v_hi, "trip power"
    )


def max_range_velocity(
    model: PropulsionModel, v_range: Tuple[float, float] = DEFAULT_VELOCITY_RANGE
) -> float:
    """Speed minimising energy per metre, P_J(v) / v (the maximum-range speed)."""
    v_lo, v_hi = _check_range(v_range)
    return _argmin_on_interval(
        lambda v: trip_power(model, v) / v, v_lo, v_hi, "energy per metre"
    )
