"""
Scenario parameter types for the UAV coverage analysis.

Holds the immutable, validated parameter set (UAV, link, environment,
stations, rectenna and battery) together with the antenna and EIRP helpers
that the rest of the package builds on. All values are SI.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .units import db_to_linear, linear_to_db, watts_to_dbm

# Pencil-beam directivity constant: G_T ~ 30000 / theta_B^2 (degrees).
BEAMWIDTH_GAIN_CONSTANT = 30000.0

# FCC Part 15.247 caps for the ISM bands.
MAX_CONDUCTED_POWER_W = 1.0
MAX_EIRP_W = 4.0

GAIN_PAIR_TOLERANCE = 1e-3
RECTENNA_GRID_POINTS = 1000


class ModelError(Exception):
    """Base exception for scenario model errors."""

    pass


class InvariantViolation(ModelError):
    """A parameter set breaks one of the model invariants."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        message = f"invariant violated: {invariant}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class DomainError(ModelError):
    """An operation was called outside its input domain."""

    pass


class CoverageMode(Enum):
    """How the rectified power is compared against the activation threshold."""

    PAPER_CLOSED_FORM = ("paper", "Fixed rectifier efficiency in the closed form")
    NONLINEAR_RECTENNA = ("nonlinear", "Polynomial rectenna with sensitivity and saturation")

    def __init__(self, key: str, description: str):
        self.key = key
        self.description = description

    @classmethod
    def from_string(cls, value: str) -> Optional["CoverageMode"]:
        """Get a CoverageMode from its key (case-insensitive)."""
        value = value.strip().lower()
        for mode in cls:
            if mode.key == value:
                return mode
        return None

    @classmethod
    def all_keys(cls) -> List[str]:
        return [mode.key for mode in cls]


def gain_from_beamwidth(theta_b: float) -> float:
    """
    Maximum gain of a pencil-beam antenna from its half-power beamwidth.

    Args:
        theta_b: Half-power beamwidth in degrees, 0 < theta_b <= 180.

    Returns:
        Linear gain 30000 / theta_b^2.

    Raises:
        DomainError: If the beamwidth is out of range.
    """
    if not (0.0 < theta_b <= 180.0) or math.isnan(theta_b):
        raise DomainError(f"beamwidth must be in (0, 180] degrees, got {theta_b}")
    return BEAMWIDTH_GAIN_CONSTANT / (theta_b * theta_b)


def beamwidth_from_gain(g_t: float) -> float:
    """
    Inverse of gain_from_beamwidth.

    Args:
        g_t: Linear antenna gain (> 0).

    Returns:
        Half-power beamwidth in degrees.
    """
    if not g_t > 0.0:
        raise DomainError(f"gain must be positive, got {g_t}")
    theta_b = math.sqrt(BEAMWIDTH_GAIN_CONSTANT / g_t)
    if theta_b > 180.0:
        raise DomainError(f"gain {g_t} implies a beamwidth above 180 degrees")
    return theta_b


@dataclass(frozen=True)
class ComplianceReport:
    """FCC Part 15.247 check of a transmitter configuration."""

    p_t: float
    g_t: float
    eirp_watts: float
    conducted_power_ok: bool
    eirp_ok: bool

    @property
    def compliant(self) -> bool:
        return self.conducted_power_ok and self.eirp_ok

    @property
    def eirp_dbm(self) -> float:
        return watts_to_dbm(self.eirp_watts)

    def violations(self) -> List[str]:
        """Human-readable list of the violated caps."""
        problems = []
        if not self.conducted_power_ok:
            problems.append(
                f"conducted power {self.p_t:.4g} W exceeds {MAX_CONDUCTED_POWER_W:g} W"
            )
        if not self.eirp_ok:
            problems.append(
                f"EIRP {self.eirp_watts:.4g} W ({self.eirp_dbm:.2f} dBm) exceeds {MAX_EIRP_W:g} W"
            )
        return problems


def check_eirp_compliance(p_t: float, g_t: float) -> ComplianceReport:
    """
    Report whether a transmit power / antenna gain pair meets the FCC caps.

    Args:
        p_t: Conducted transmit power in watts.
        g_t: Linear transmit antenna gain.

    Returns:
        ComplianceReport with the EIRP and both flags.
    """
    eirp = p_t * g_t
    return ComplianceReport(
        p_t=p_t,
        g_t=g_t,
        eirp_watts=eirp,
        conducted_power_ok=p_t <= MAX_CONDUCTED_POWER_W,
        eirp_ok=eirp <= MAX_EIRP_W,
    )


@dataclass(frozen=True)
class PropulsionModel:
    """Rotary-wing power coefficients (aggregated blade profile and induced power)."""

    p0: float = 79.8563
    p_i: float = 88.6279
    u_tip: float = 120.0
    v0: float = 4.03
    d0: float = 0.6
    rho: float = 1.225
    s: float = 0.05
    a: float = 0.503

    def __post_init__(self):
        for name in ("p0", "p_i", "d0", "rho", "s", "a", "v0"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise InvariantViolation(f"propulsion.{name} >= 0", f"got {value}")
        if not self.u_tip > 0.0:
            raise InvariantViolation("propulsion.u_tip > 0", f"got {self.u_tip}")

    @property
    def hover_power(self) -> float:
        """P_h = P_0 + P_i."""
        return self.p0 + self.p_i

    @property
    def parasite_coefficient(self) -> float:
        """The 1/2 d0 rho s A factor of the V^3 term."""
        return 0.5 * self.d0 * self.rho * self.s * self.a


@dataclass(frozen=True)
class RectennaModel:
    """
    Nonlinear RF-to-DC conversion model.

    coeffs are p_1..p_w, highest power first, so the efficiency is
    numpy.polyval(coeffs, P_in). p_sat may be +inf for an unclamped model.
    """

    p_th: float
    p_sat: float
    coeffs: Tuple[float, ...]
    eta_fixed: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise InvariantViolation("rectenna.coeffs non-empty")
        if not (0.0 <= self.p_th < self.p_sat):
            raise InvariantViolation(
                "0 <= p_th < p_sat", f"p_th={self.p_th}, p_sat={self.p_sat}"
            )
        if not (0.0 <= self.eta_fixed < 1.0):
            raise InvariantViolation("0 <= eta_fixed < 1", f"got {self.eta_fixed}")

        grid = self.validation_grid()
        efficiency = np.polyval(self.coeffs, grid)
        bad = np.flatnonzero((efficiency < 0.0) | (efficiency >= 1.0))
        if bad.size:
            worst = int(bad[0])
            raise InvariantViolation(
                "efficiency in [0, 1) on [p_th, p_sat]",
                f"efficiency {efficiency[worst]:.6g} at {grid[worst]:.6g} W",
            )

        output = efficiency * grid
        steps = np.diff(output)
        scale = max(float(np.max(np.abs(output))), 1e-300)
        worst = int(np.argmin(steps))
        if steps[worst] < -1e-12 * scale:
            raise InvariantViolation(
                "rectified output non-decreasing on [p_th, p_sat]",
                f"drop of {-steps[worst]:.6g} W after {grid[worst]:.6g} W",
            )

    @property
    def degree(self) -> int:
        """Degree of the efficiency polynomial."""
        return len(self.coeffs) - 1

    @property
    def clamped(self) -> bool:
        return math.isfinite(self.p_sat)

    def validation_grid(self, points: int = RECTENNA_GRID_POINTS) -> np.ndarray:
        """Uniform grid over the operating range used for invariant checks."""
        upper = self.p_sat if self.clamped else max(10.0 * self.p_th, 1.0)
        return np.linspace(self.p_th, upper, points)


# Synthetic 868 MHz rectenna stand-in shipped in data/rectenna_868mhz.csv.
DEFAULT_RECTENNA_COEFFS = (300000.0, -12000.0, 150.0, 0.15)


def default_rectenna() -> RectennaModel:
    return RectennaModel(
        p_th=1e-5,
        p_sat=1e-2,
        coeffs=DEFAULT_RECTENNA_COEFFS,
        eta_fixed=0.5,
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Full scenario parameter set in SI units.

    Exactly one of g_t_dbi / theta_b_deg needs to be given; the other one is
    derived from the pencil-beam relation. When both are given they must
    agree within 0.1%.
    """

    p_t: float
    f_c: float
    gamma_th: float
    g_r_dbi: float
    eta_los_db: float
    eta_nlos_db: float
    env_gamma: float
    env_delta: float
    b_max: float
    xi_ch: float
    t_ch: float
    v: float
    h_ch: float
    h_l: float
    lambda_ch: float
    e_pt: float
    g_t_dbi: Optional[float] = None
    theta_b_deg: Optional[float] = None
    h_ut_override: Optional[float] = None
    event_radius: float = 0.0
    rectenna: RectennaModel = field(default_factory=default_rectenna)
    propulsion: PropulsionModel = field(default_factory=PropulsionModel)
    coverage_mode: CoverageMode = CoverageMode.PAPER_CLOSED_FORM
    strict_paper_mode: bool = False

    def __post_init__(self):
        self._resolve_gain_pair()

        non_negative = (
            "p_t", "gamma_th", "b_max", "xi_ch", "t_ch", "h_ch", "h_l", "e_pt",
            "event_radius", "env_gamma", "env_delta",
        )
        for name in non_negative:
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise InvariantViolation(f"{name} >= 0", f"got {value}")
        for name in ("f_c", "v", "lambda_ch"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise InvariantViolation(f"{name} > 0", f"got {value}")
        for name in ("g_r_dbi", "eta_los_db", "eta_nlos_db"):
            if not math.isfinite(getattr(self, name)):
                raise InvariantViolation(f"{name} finite")

        if self.h_l > self.h_ch:
            raise InvariantViolation("h_l <= h_ch", f"h_l={self.h_l}, h_ch={self.h_ch}")
        if not self.hover_altitude > 0.0:
            raise InvariantViolation("hover altitude h_ut > 0", f"got {self.hover_altitude}")
        if self.e_pt > self.b_max:
            raise InvariantViolation("e_pt <= b_max", f"e_pt={self.e_pt}, b_max={self.b_max}")
        if self.e_pt > 0.0 and self.p_t == 0.0:
            raise InvariantViolation("p_t > 0 when e_pt > 0")
        if not self.propulsion.hover_power > 0.0:
            raise InvariantViolation("hover power p0 + p_i > 0")

    def _resolve_gain_pair(self) -> None:
        if self.g_t_dbi is None and self.theta_b_deg is None:
            raise InvariantViolation("exactly one of g_t_dbi / theta_b_deg supplied", "neither given")
        if self.theta_b_deg is None:
            theta = beamwidth_from_gain(db_to_linear(self.g_t_dbi))
            object.__setattr__(self, "theta_b_deg", theta)
        elif self.g_t_dbi is None:
            gain = gain_from_beamwidth(self.theta_b_deg)
            object.__setattr__(self, "g_t_dbi", linear_to_db(gain))
        else:
            expected = gain_from_beamwidth(self.theta_b_deg)
            actual = db_to_linear(self.g_t_dbi)
            if abs(actual - expected) > GAIN_PAIR_TOLERANCE * expected:
                raise InvariantViolation(
                    "G_T = 30000 / theta_B^2 within 0.1%",
                    f"G_T={actual:.4f}, 30000/theta_B^2={expected:.4f}",
                )

    @property
    def g_t(self) -> float:
        """Linear transmit gain."""
        return db_to_linear(self.g_t_dbi)

    @property
    def g_r(self) -> float:
        """Linear sensor antenna gain."""
        return db_to_linear(self.g_r_dbi)

    @property
    def eirp(self) -> float:
        return self.p_t * self.g_t

    @property
    def hover_altitude(self) -> float:
        """h_UT: hover height above the sensors, h_ch - h_l unless overridden."""
        if self.h_ut_override is not None:
            return self.h_ut_override
        return self.h_ch - self.h_l

    @property
    def saturation_time(self) -> float:
        """Charging time after which the battery is full."""
        if self.xi_ch == 0.0:
            return math.inf
        return self.b_max / self.xi_ch

    def compliance(self) -> ComplianceReport:
        return check_eirp_compliance(self.p_t, self.g_t)
