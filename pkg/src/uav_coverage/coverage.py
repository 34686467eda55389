"""
Sensor-side and end-to-end coverage probability.

A sensor is covered when the UAV is in service and the rectified power
under a unit-mean exponential fade reaches the activation threshold.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np

from .link_budget import LinkType, link_budget
from .model import CoverageMode, ScenarioConfig
from .rectenna import UnreachableTargetError, invert_rectify
from .service import ServiceAnalytics, service_analytics, service_probability

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkCoverage:
    """Coverage of one link type: fade threshold and P(G_h >= threshold)."""

    link: LinkType
    threshold_fade: float
    coverage: float


@dataclass(frozen=True)
class SensorCoverage:
    """Sensor-side coverage split over LoS and NLoS links."""

    mode: CoverageMode
    p_los: float
    los: LinkCoverage
    nlos: LinkCoverage
    diagnostics: List[str] = field(default_factory=list)

    @property
    def p_cov_s(self) -> float:
        return self.p_los * self.los.coverage + (1.0 - self.p_los) * self.nlos.coverage


@dataclass(frozen=True)
class CoverageResult:
    """Service probability, sensor coverage and their product."""

    p_e: float
    sensor: SensorCoverage

    @property
    def mode(self) -> CoverageMode:
        return self.sensor.mode

    @property
    def p_los(self) -> float:
        return self.sensor.p_los

    @property
    def p_cov_s(self) -> float:
        return self.sensor.p_cov_s

    @property
    def p_cov(self) -> float:
        return self.p_e * self.p_cov_s

    @property
    def diagnostics(self) -> List[str]:
        return self.sensor.diagnostics


def _required_intercepted_power(cfg: ScenarioConfig, diagnostics: List[str]) -> float:
    """Smallest intercepted RF power that activates the sensor; inf if none does."""
    if cfg.gamma_th == 0.0:
        return 0.0

    if cfg.coverage_mode is CoverageMode.PAPER_CLOSED_FORM:
        if cfg.rectenna.eta_fixed == 0.0:
            diagnostics.append("rectifier efficiency is 0; no input power reaches the threshold")
            return math.inf
        return cfg.gamma_th / cfg.rectenna.eta_fixed

    try:
        return invert_rectify(cfg.rectenna, cfg.gamma_th)
    except UnreachableTargetError as e:
        diagnostics.append(f"activation threshold unreachable: {e}")
        return math.inf


def _fade_for(required: float, pl: float, gain: float) -> float:
    if required == 0.0:
        return 0.0
    if math.isinf(required) or gain <= 0.0:
        return math.inf
    return required * pl / gain


def coverage_sensor(cfg: ScenarioConfig, d: Optional[float] = None) -> SensorCoverage:
    """
    Probability that a sensor in the footprint is activated, given service.

    Paper mode uses the fixed rectifier efficiency in the closed form;
    nonlinear mode inverts the rectenna curve for the threshold and takes
    the exponential tail of the fade.

    Args:
        cfg: Scenario configuration.
        d: Link distance; defaults to the hover altitude.

    Returns:
        SensorCoverage with per-link detail.
    """
    diagnostics: List[str] = []
    required = _required_intercepted_power(cfg, diagnostics)
    budget = link_budget(cfg, d)
    gain = budget.eirp * budget.g_r

    per_link = {}
    for link in (LinkType.LOS, LinkType.NLOS):
        fade = _fade_for(required, budget.pl(link), gain)
        per_link[link] = LinkCoverage(link=link, threshold_fade=fade, coverage=math.exp(-fade))

    for message in diagnostics:
        logger.warning(message)

    return SensorCoverage(
        mode=cfg.coverage_mode,
        p_los=budget.p_los,
        los=per_link[LinkType.LOS],
        nlos=per_link[LinkType.NLOS],
        diagnostics=diagnostics,
    )


def coverage_total(
    cfg: ScenarioConfig, analytics: Optional[ServiceAnalytics] = None
) -> CoverageResult:
    """
    End-to-end coverage probability P_cov = P_e * P_cov,s.

    Args:
        cfg: Scenario configuration.
        analytics: Precomputed service analytics for cfg.

    Returns:
        CoverageResult instance.
    """
    an = analytics or service_analytics(cfg)
    return CoverageResult(p_e=service_probability(cfg, an), sensor=coverage_sensor(cfg))


def sensor_coverage_curve(cfg: ScenarioConfig, distances: Iterable[float]) -> np.ndarray:
    """Sensor coverage P_cov,s for each UAV-to-sensor distance."""
    return np.array([coverage_sensor(cfg, d).p_cov_s for d in distances], dtype=float)
