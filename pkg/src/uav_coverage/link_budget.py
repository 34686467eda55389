"""
Air-to-ground link budget between the hovering UAV and the sensors.

Free-space path loss plus an average excess loss per link type, an
elevation-angle LoS probability, and the power intercepted by a sensor.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .model import DomainError, ScenarioConfig

ArrayLike = Union[float, np.ndarray]


class LinkType(Enum):
    """Propagation condition of the UAV-to-sensor link."""

    LOS = ("los", "Line of sight")
    NLOS = ("nlos", "Non line of sight")

    def __init__(self, key: str, description: str):
        self.key = key
        self.description = description

    @classmethod
    def from_string(cls, value: str) -> Optional["LinkType"]:
        """Get a LinkType from its key (case-insensitive)."""
        value = value.strip().lower()
        for link in cls:
            if link.key == value:
                return link
        return None

    @classmethod
    def all_keys(cls) -> List[str]:
        return [link.key for link in cls]


@dataclass(frozen=True)
class LinkGeometry:
    """Hover geometry; the directive beam makes the link distance equal the hover height."""

    h_ut: float

    def __post_init__(self):
        if not self.h_ut > 0.0:
            raise DomainError(f"hover altitude must be > 0, got {self.h_ut}")

    @property
    def d_3d(self) -> float:
        return self.h_ut

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "LinkGeometry":
        return cls(h_ut=cfg.hover_altitude)


def free_space_path_loss_db(f_c: float, d: ArrayLike) -> ArrayLike:
    """20 log10(4 pi f_c d / c) in dB."""
    if not f_c > 0.0:
        raise DomainError(f"carrier frequency must be > 0, got {f_c}")
    distance = np.asarray(d, dtype=float)
    if np.any(~(distance > 0.0)):
        raise DomainError(f"distance must be > 0, got {d}")
    loss = 20.0 * np.log10(4.0 * math.pi * f_c * distance / SPEED_OF_LIGHT)
    return float(loss) if np.ndim(loss) == 0 else loss


def path_loss_db(
    f_c: float,
    d: ArrayLike,
    link: LinkType,
    eta_los_db: float,
    eta_nlos_db: float,
) -> ArrayLike:
    """Free-space loss plus the excess loss of the given link type, in dB."""
    eta = eta_los_db if link is LinkType.LOS else eta_nlos_db
    return free_space_path_loss_db(f_c, d) + eta


def path_loss(
    f_c: float,
    d: ArrayLike,
    link: LinkType,
    eta_los_db: float,
    eta_nlos_db: float,
) -> ArrayLike:
    """
    Mean path loss as a linear factor.

    No lower bound of 1 is imposed; very short distances may give a factor
    below unity, returned as computed.

    Args:
        f_c: Carrier frequency in Hz.
        d: Link distance in metres.
        link: LOS or NLOS.
        eta_los_db: Excess LoS loss in dB.
        eta_nlos_db: Excess NLoS loss in dB.

    Returns:
        10^(PL_dB / 10).
    """
    loss_db = path_loss_db(f_c, d, link, eta_los_db, eta_nlos_db)
    linear = 10.0 ** (np.asarray(loss_db) / 10.0)
    return float(linear) if np.ndim(linear) == 0 else linear


def elevation_angle(theta_b: float) -> float:
    """Elevation angle seen at the edge of the beam footprint, 90 - theta_B / 2."""
    return 90.0 - theta_b / 2.0


def los_probability(theta_b: float, gamma: float, delta: float) -> float:
    """
    Probability that the link to a sensor in the footprint is LoS.

    P_LoS = 1 / (1 + gamma exp(-delta (90 - theta_B / 2 - gamma)))

    Args:
        theta_b: Half-power beamwidth in degrees, (0, 180].
        gamma: Environment constant (>= 0).
        delta: Environment constant (>= 0).
    """
    if not (0.0 < theta_b <= 180.0):
        raise DomainError(f"beamwidth must be in (0, 180] degrees, got {theta_b}")
    if gamma < 0.0 or delta < 0.0:
        raise DomainError(f"environment constants must be >= 0, got gamma={gamma}, delta={delta}")
    exponent = -delta * (elevation_angle(theta_b) - gamma)
    return 1.0 / (1.0 + gamma * math.exp(exponent))


def nlos_probability(theta_b: float, gamma: float, delta: float) -> float:
    return 1.0 - los_probability(theta_b, gamma, delta)


def intercepted_power(eirp: ArrayLike, g_r: float, g_h: ArrayLike, pl: ArrayLike) -> ArrayLike:
    """
    RF power intercepted by a sensor: EIRP * G_R * g_h / PL.

    Args:
        eirp: P_T * G_T in watts.
        g_r: Linear sensor antenna gain.
        g_h: Fading power coefficient draw(s).
        pl: Linear path loss (> 0).
    """
    if np.any(np.asarray(pl) <= 0.0):
        raise DomainError("path loss must be > 0")
    if np.any(np.asarray(g_h) < 0.0) or np.any(np.asarray(eirp) < 0.0) or g_r < 0.0:
        raise DomainError("power, gain and fading inputs must be >= 0")
    return eirp * g_r * g_h / pl


@dataclass(frozen=True)
class LinkBudget:
    """Evaluated link terms of a scenario at its hover altitude."""

    d_3d: float
    pl_los_db: float
    pl_nlos_db: float
    p_los: float
    eirp: float
    g_r: float

    @property
    def pl_los(self) -> float:
        return 10.0 ** (self.pl_los_db / 10.0)

    @property
    def pl_nlos(self) -> float:
        return 10.0 ** (self.pl_nlos_db / 10.0)

    def pl(self, link: LinkType) -> float:
        return self.pl_los if link is LinkType.LOS else self.pl_nlos

    def mean_intercepted_power(self, link: LinkType) -> float:
        """Intercepted power at unit fade."""
        return intercepted_power(self.eirp, self.g_r, 1.0, self.pl(link))


def link_budget(cfg: ScenarioConfig, d: Optional[float] = None) -> LinkBudget:
    """
    Evaluate the link terms for a scenario.

    Args:
        cfg: Scenario configuration.
        d: Link distance; defaults to the hover altitude.
    """
    distance = LinkGeometry.from_config(cfg).d_3d if d is None else d
    return LinkBudget(
        d_3d=distance,
        pl_los_db=path_loss_db(cfg.f_c, distance, LinkType.LOS, cfg.eta_los_db, cfg.eta_nlos_db),
        pl_nlos_db=path_loss_db(cfg.f_c, distance, LinkType.NLOS, cfg.eta_los_db, cfg.eta_nlos_db),
        p_los=los_probability(cfg.theta_b_deg, cfg.env_gamma, cfg.env_delta),
        eirp=cfg.eirp,
        g_r=cfg.g_r,
    )
