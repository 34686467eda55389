"""
Mission energy bookkeeping and the service probability of the UAV.

A mission flies to the nearest recharging station, charges for t_Ch, flies
back, transfers power for t_PT and then collects data for t_AP. The
service probability is the fraction of the cycle spent serving the event
area; with stations forming a Poisson process the nearest-station
distance is Rayleigh distributed, which gives the CDF of the conditional
service probability and its mean P_e.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

from .model import DomainError, ScenarioConfig
from .propulsion import trip_power

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-8
QUAD_LIMIT = 200
QUAD_RETRY_LIMIT = 2000
# exp(-60) is far below the quadrature tolerance.
RAYLEIGH_TAIL = 60.0
DOMAIN_SLACK = 1e-12


class QuadratureError(Exception):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, label: str, interval: Tuple[float, float], abserr: float, message: str):
        self.interval = interval
        self.abserr = abserr
        super().__init__(
            f"{label}: quadrature did not converge ({message.strip()}); "
            f"worst interval [{interval[0]:.6g}, {interval[1]:.6g}], error estimate {abserr:.3g}"
        )


def battery_level(xi_ch: float, t_ch: float, b_max: float) -> float:
    """
    Battery energy after charging for t_ch at rate xi_ch, saturating at b_max.

    Returns:
        min(xi_ch * t_ch, b_max) in joules.
    """
    if xi_ch < 0.0 or t_ch < 0.0 or b_max < 0.0:
        raise DomainError("charging inputs must be >= 0")
    return min(xi_ch * t_ch, b_max)


def saturation_time(xi_ch: float, b_max: float) -> float:
    """Charging time after which the battery is full."""
    return math.inf if xi_ch == 0.0 else b_max / xi_ch


@dataclass(frozen=True)
class MissionTiming:
    """Time and energy decomposition of one mission cycle."""

    t_j: float
    t_pt: float
    t_ap: float
    t_ch: float
    b_uav: float
    e_j: float
    feasible: bool
    energy_left_ok: bool

    @property
    def cycle_time(self) -> float:
        return self.t_pt + self.t_ap + self.t_ch + self.t_j

    @property
    def availability(self) -> float:
        """Fraction of the cycle spent serving the event area."""
        if not self.feasible or self.cycle_time <= 0.0:
            return 0.0
        return (self.t_pt + self.t_ap) / self.cycle_time


def _power_transfer_time(cfg: ScenarioConfig) -> float:
    return 0.0 if cfg.e_pt == 0.0 else cfg.e_pt / cfg.p_t


def mission_timing(cfg: ScenarioConfig, r_delta: float) -> MissionTiming:
    """
    Decompose a mission to a station at distance r_delta.

    The descent h_l is not flown when the station sits under the event
    area (r_delta = 0). A negative data-collection time means the battery
    cannot fund the mission; it is clamped to 0 and flagged.

    Args:
        cfg: Scenario configuration.
        r_delta: Horizontal distance to the nearest station in metres.

    Returns:
        MissionTiming for the cycle.
    """
    if r_delta < 0.0:
        raise DomainError(f"station distance must be >= 0, got {r_delta}")

    p_j = trip_power(cfg.propulsion, cfg.v)
    p_h = cfg.propulsion.hover_power
    h_l = 0.0 if r_delta == 0.0 else cfg.h_l

    b_uav = battery_level(cfg.xi_ch, cfg.t_ch, cfg.b_max)
    t_j = 2.0 * (r_delta + h_l) / cfg.v
    e_j = t_j * p_j
    t_pt = _power_transfer_time(cfg)
    t_ap = (b_uav - t_pt * (p_h + cfg.p_t) - e_j) / p_h

    feasible = t_ap >= 0.0
    t_ap = max(t_ap, 0.0)
    e_left = b_uav - t_pt * (p_h + cfg.p_t) - t_ap * p_h - e_j / 2.0
    return MissionTiming(
        t_j=t_j,
        t_pt=t_pt,
        t_ap=t_ap,
        t_ch=cfg.t_ch,
        b_uav=b_uav,
        e_j=e_j,
        feasible=feasible,
        energy_left_ok=e_left >= e_j / 2.0 - DOMAIN_SLACK * max(b_uav, 1.0),
    )


def energy_left_ok(cfg: ScenarioConfig, r_delta: float) -> bool:
    """Whether the energy left after serving still covers the return leg."""
    return mission_timing(cfg, r_delta).energy_left_ok


@dataclass(frozen=True)
class ServiceAnalytics:
    """
    Derived quantities of the service model for one configuration.

    zeta = V (B_UAV - t_PT P_T). r_max is the trip-energy feasibility radius,
    r_cutoff the radius beyond which the conditional service probability is
    zero in the active mode (the root of the numerator in strict mode, the
    last radius with t_AP >= 0 otherwise). x0 is the conditional service
    probability just off the origin and x_max its value at the origin.
    """

    zeta: float
    r_max: float
    x0: float
    x_max: float
    r_cutoff: float
    x_cut: float
    feasible: bool
    origin_feasible: bool
    v: float
    p_j: float
    p_h: float
    t_ch: float
    h_l: float
    lambda_ch: float
    strict: bool

    def _eq16(self, r: np.ndarray) -> np.ndarray:
        s = r + self.h_l
        numerator = self.zeta - 2.0 * s * self.p_j
        denominator = self.zeta - 2.0 * s * (self.p_j - self.p_h) + self.v * self.t_ch * self.p_h
        safe = np.where(numerator > 0.0, denominator, 1.0)
        return np.where(numerator > 0.0, numerator / safe, 0.0)

    def conditional(self, r_delta: ArrayLike) -> ArrayLike:
        """Conditional service probability P(e | R = r_delta), vectorised."""
        r = np.asarray(r_delta, dtype=float)
        if np.any(r < 0.0):
            raise DomainError("station distance must be >= 0")

        value = self._eq16(r)
        value = np.where((r > self.r_max) | (r > self.r_cutoff), 0.0, value)
        origin = self.x_max if self.origin_feasible else 0.0
        value = np.where(r == 0.0, origin, value)

        if np.ndim(value) == 0:
            return float(value)
        return value

    def kappa(self, x: float) -> float:
        return 2.0 * (self.p_j * (1.0 - x) + x * self.p_h)

    def q_raw(self, x: float) -> float:
        """Preimage radius of a service probability, unclamped."""
        kappa = self.kappa(x)
        return (
            self.zeta * (1.0 - x) - self.h_l * kappa - x * self.v * self.t_ch * self.p_h
        ) / kappa

    def _check_x(self, x: float) -> None:
        if not (-DOMAIN_SLACK <= x <= self.x_max + DOMAIN_SLACK):
            raise DomainError(f"x must lie in [0, {self.x_max:.6g}], got {x}")

    def q(self, x: float) -> float:
        """Preimage radius clamped below at 0."""
        self._check_x(x)
        return max(self.q_raw(x), 0.0)

    def cdf(self, x: float) -> float:
        """P(P(e|R) <= x) under the nearest-station law."""
        self._check_x(x)
        q_eff = min(max(self.q_raw(x), 0.0), self.r_cutoff)
        return math.exp(-self.lambda_ch * math.pi * q_eff * q_eff)


def service_analytics(cfg: ScenarioConfig) -> ServiceAnalytics:
    """
    Precompute the service-model constants of a configuration.

    Args:
        cfg: Scenario configuration.

    Returns:
        ServiceAnalytics instance.
    """
    v = cfg.v
    p_j = trip_power(cfg.propulsion, v)
    p_h = cfg.propulsion.hover_power
    b_uav = battery_level(cfg.xi_ch, cfg.t_ch, cfg.b_max)
    t_pt = _power_transfer_time(cfg)
    zeta = v * b_uav - v * t_pt * cfg.p_t

    r_max = max((v * b_uav - 2.0 * cfg.h_l * p_j) / (2.0 * p_j), 0.0)
    if cfg.strict_paper_mode:
        r_cutoff = zeta / (2.0 * p_j) - cfg.h_l
        origin_feasible = zeta > 0.0
    else:
        usable = b_uav - t_pt * (p_h + cfg.p_t)
        r_cutoff = v * usable / (2.0 * p_j) - cfg.h_l
        origin_feasible = zeta > 0.0 and usable >= 0.0
    r_cutoff = min(max(r_cutoff, 0.0), r_max)

    x_max = zeta / (zeta + v * cfg.t_ch * p_h) if zeta > 0.0 else 0.0
    feasible = zeta > 0.0 and r_cutoff > 0.0

    partial = ServiceAnalytics(
        zeta=zeta,
        r_max=r_max,
        x0=0.0,
        x_max=x_max,
        r_cutoff=r_cutoff,
        x_cut=0.0,
        feasible=feasible,
        origin_feasible=origin_feasible,
        v=v,
        p_j=p_j,
        p_h=p_h,
        t_ch=cfg.t_ch,
        h_l=cfg.h_l,
        lambda_ch=cfg.lambda_ch,
        strict=cfg.strict_paper_mode,
    )
    x0 = float(partial._eq16(np.asarray(0.0))) if feasible else 0.0
    x_cut = float(partial._eq16(np.asarray(r_cutoff))) if feasible else 0.0

    if not feasible:
        logger.warning(
            "No feasible mission: battery %.4g J cannot fund power transfer %.4g J "
            "and the %.4g m descent/ascent",
            b_uav, cfg.e_pt, cfg.h_l,
        )
    return ServiceAnalytics(
        zeta=zeta,
        r_max=r_max,
        x0=x0,
        x_max=x_max,
        r_cutoff=r_cutoff,
        x_cut=x_cut,
        feasible=feasible,
        origin_feasible=origin_feasible,
        v=v,
        p_j=p_j,
        p_h=p_h,
        t_ch=cfg.t_ch,
        h_l=cfg.h_l,
        lambda_ch=cfg.lambda_ch,
        strict=cfg.strict_paper_mode,
    )


def service_prob_conditional(cfg: ScenarioConfig, r_delta: float) -> float:
    """
    Service probability given the nearest-station distance.

    Args:
        cfg: Scenario configuration.
        r_delta: Distance to the nearest station in metres (>= 0).

    Returns:
        Probability in [0, 1].
    """
    return service_analytics(cfg).conditional(r_delta)


def q_of_x(analytics: ServiceAnalytics, x: float) -> float:
    """Radius at which the conditional service probability equals x, clamped at 0."""
    return analytics.q(x)


def service_cdf(analytics: ServiceAnalytics, x: float) -> float:
    """CDF of the conditional service probability at x."""
    return analytics.cdf(x)


def _integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Sequence[float],
    label: str,
) -> float:
    inner: Optional[List[float]] = sorted({p for p in points if a < p < b}) or None

    for limit in (QUAD_LIMIT, QUAD_RETRY_LIMIT):
        result = quad(
            func,
            a,
            b,
            points=inner,
            epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL,
            limit=limit,
            full_output=1,
        )
        if len(result) == 3:
            return float(result[0])

        value, abserr, info, message = result[:4]
        if limit == QUAD_LIMIT:
            logger.warning(
                "%s: quadrature retry with %d subintervals (%s)",
                label, QUAD_RETRY_LIMIT, message.strip().splitlines()[0],
            )
            continue

        last = int(info["last"])
        errors = np.asarray(info["elist"][:last])
        worst = int(np.argmax(errors)) if errors.size else 0
        interval = (float(info["alist"][worst]), float(info["blist"][worst]))
        raise QuadratureError(label, interval, float(abserr), message)

    raise AssertionError("unreachable")


def service_probability(
    cfg: ScenarioConfig, analytics: Optional[ServiceAnalytics] = None
) -> float:
    """
    Unconditional service probability P_e = integral of 1 - F(x) over [0, x0].

    The integrand vanishes above x0 and has a kink at x_cut; a breakpoint
    is also placed where the CDF becomes numerically zero.

    Args:
        cfg: Scenario configuration.
        analytics: Precomputed analytics for cfg.

    Returns:
        P_e in [0, 1].

    Raises:
        QuadratureError: If the quadrature does not converge.
    """
    an = analytics or service_analytics(cfg)
    if not an.feasible or an.x0 <= 0.0:
        return 0.0

    points = [an.x_cut]
    q_tail = math.sqrt(RAYLEIGH_TAIL / (an.lambda_ch * math.pi))
    if q_tail < an.r_cutoff:
        points.append(an.conditional(q_tail))

    value = _integrate(lambda x: 1.0 - an.cdf(x), 0.0, an.x0, points, "service probability")
    return min(max(value, 0.0), 1.0)


def service_probability_rayleigh(
    cfg: ScenarioConfig, analytics: Optional[ServiceAnalytics] = None
) -> float:
    """
    P_e as the expectation of P(e|R) under the Rayleigh nearest-station law.

    Evaluated in u = lambda pi r^2, where the density becomes exp(-u).
    """
    an = analytics or service_analytics(cfg)
    if not an.feasible:
        return 0.0

    scale = an.lambda_ch * math.pi
    upper = min(scale * an.r_cutoff**2, RAYLEIGH_TAIL)

    def integrand(u: float) -> float:
        r = math.sqrt(u / scale)
        return an.conditional(r) * math.exp(-u) if r > 0.0 else an.x0

    value = _integrate(integrand, 0.0, upper, [], "service probability (rayleigh)")
    return min(max(value, 0.0), 1.0)
