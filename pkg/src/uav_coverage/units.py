"""
Unit conversions used at the configuration and report boundary.

Everything inside the package works in SI (W, J, s, m, Hz, linear gains).
"""

import math

SECONDS_PER_HOUR = 3600.0
SQUARE_KM_PER_SQUARE_METER = 1.0e-6


def dbm_to_watts(dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert watts to dBm. Zero power maps to -inf."""
    if watts <= 0.0:
        return -math.inf
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    """Convert a ratio in dB (or dBi) to a linear factor."""
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    """Convert a linear ratio to dB."""
    if linear <= 0.0:
        return -math.inf
    return 10.0 * math.log10(linear)


def wh_to_joules(wh: float) -> float:
    return wh * SECONDS_PER_HOUR


def joules_to_wh(joules: float) -> float:
    return joules / SECONDS_PER_HOUR


def per_km2_to_per_m2(density: float) -> float:
    return density * SQUARE_KM_PER_SQUARE_METER


def per_m2_to_per_km2(density: float) -> float:
    return density / SQUARE_KM_PER_SQUARE_METER
