"""
Monte Carlo estimation of the service and coverage probabilities.

Stations are drawn as a Poisson point process in a disc around the event
area; the nearest one sets the mission. Missions are evaluated from their
time and energy decomposition, the sensor link from an exponential fade
through the rectifier, independently of the closed forms.

Trials are cut into fixed blocks, each with its own SeedSequence child
stream, so results depend on the seed only and not on the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .link_budget import intercepted_power, link_budget
from .model import CoverageMode, DomainError, InvariantViolation, RectennaModel, ScenarioConfig
from .propulsion import trip_power
from .rectenna import rectify
from .service import battery_level, service_analytics

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 8192
WINDOW_RADIUS_SCALE = 6.0

ESTIMATORS = ("service", "sensor_coverage", "coverage")


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run settings."""

    trials: int
    seed: int
    window_radius: Optional[float] = None
    workers: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE
    fixed_fade: Optional[float] = None

    def __post_init__(self):
        if self.trials < 1:
            raise InvariantViolation("trials >= 1", f"got {self.trials}")
        if self.seed < 0:
            raise InvariantViolation("seed >= 0", f"got {self.seed}")
        if self.workers < 1 or self.block_size < 1:
            raise InvariantViolation("workers >= 1 and block_size >= 1")
        if self.window_radius is not None and not self.window_radius > 0.0:
            raise InvariantViolation("window_radius > 0", f"got {self.window_radius}")
        if self.fixed_fade is not None and self.fixed_fade < 0.0:
            raise InvariantViolation("fixed_fade >= 0", f"got {self.fixed_fade}")

    @property
    def blocks(self) -> int:
        return -(-self.trials // self.block_size)

    def block_trials(self, k: int) -> int:
        return min(self.block_size, self.trials - k * self.block_size)


@dataclass(frozen=True)
class SimEstimate:
    """Empirical mean with its standard error."""

    mean: float
    std_error: float
    trials: int

    def z_score(self, reference: float) -> float:
        """Distance of a reference value from the mean in standard errors."""
        diff = abs(self.mean - reference)
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / self.std_error

    def agrees_with(self, reference: float, sigmas: float = 3.0) -> bool:
        return self.z_score(reference) <= sigmas


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one block of trials."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def default_window_radius(lambda_ch: float, r_max: float) -> float:
    """Disc radius beyond which stations cannot matter: max(6 / sqrt(lambda pi), 2 r_max)."""
    return max(WINDOW_RADIUS_SCALE / math.sqrt(lambda_ch * math.pi), 2.0 * r_max)


def sample_nearest_station(
    lambda_ch: float, window_radius: float, rng: np.random.Generator
) -> float:
    """
    Distance from the centre to the nearest station of one PPP realisation.

    Places Poisson(lambda pi W^2) points uniformly in the disc of radius W.

    Returns:
        Nearest distance in metres, or +inf when the window is empty.
    """
    if not lambda_ch > 0.0:
        raise DomainError(f"station density must be > 0, got {lambda_ch}")
    count = rng.poisson(lambda_ch * math.pi * window_radius**2)
    if count == 0:
        return math.inf
    radius = window_radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    theta = rng.uniform(0.0, 2.0 * math.pi, count)
    x = radius * np.cos(theta)
    y = radius * np.sin(theta)
    return float(np.min(np.hypot(x, y)))


def sample_nearest_distances(
    lambda_ch: float, window_radius: float, size: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Vectorised nearest-station distances.

    The minimum squared radius fraction of N uniform points in a disc is
    Beta(1, N), so only the count and one Beta draw per trial are needed.
    """
    if not lambda_ch > 0.0:
        raise DomainError(f"station density must be > 0, got {lambda_ch}")
    counts = rng.poisson(lambda_ch * math.pi * window_radius**2, size)
    fraction = rng.beta(1.0, np.maximum(counts, 1))
    return np.where(counts > 0, window_radius * np.sqrt(fraction), np.inf)


def sample_rayleigh_distances(
    lambda_ch: float, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Nearest-station distances by inverting 1 - exp(-lambda pi r^2)."""
    if not lambda_ch > 0.0:
        raise DomainError(f"station density must be > 0, got {lambda_ch}")
    u = rng.uniform(0.0, 1.0, size)
    return np.sqrt(-np.log1p(-u) / (lambda_ch * math.pi))


def mission_availability(cfg: ScenarioConfig, r_delta: np.ndarray) -> np.ndarray:
    """
    Fraction of the cycle spent serving, per nearest-station distance.

    Evaluated from the time decomposition t_PT + t_AP over the full cycle,
    with 0 for missions the battery cannot fund and for empty windows.
    """
    r = np.asarray(r_delta, dtype=float)
    finite = np.isfinite(r)
    r = np.where(finite, r, 0.0)

    p_j = trip_power(cfg.propulsion, cfg.v)
    p_h = cfg.propulsion.hover_power
    b_uav = battery_level(cfg.xi_ch, cfg.t_ch, cfg.b_max)
    t_pt = 0.0 if cfg.e_pt == 0.0 else cfg.e_pt / cfg.p_t

    h_l = np.where(r == 0.0, 0.0, cfg.h_l)
    t_j = 2.0 * (r + h_l) / cfg.v
    e_j = t_j * p_j
    t_ap = (b_uav - t_pt * (p_h + cfg.p_t) - e_j) / p_h
    serving = t_pt + t_ap
    cycle = serving + cfg.t_ch + t_j

    if cfg.strict_paper_mode:
        ok = (e_j <= b_uav) & (serving > 0.0)
    else:
        ok = t_ap >= 0.0
    ok &= finite & (cycle > 0.0)

    fraction = np.divide(serving, cycle, out=np.zeros_like(r), where=ok)
    return np.clip(fraction, 0.0, 1.0)


def _rectified(cfg: ScenarioConfig, rectenna: RectennaModel, p_in: np.ndarray) -> np.ndarray:
    if cfg.coverage_mode is CoverageMode.NONLINEAR_RECTENNA:
        return np.asarray(rectify(rectenna, p_in))
    return rectenna.eta_fixed * p_in


@dataclass
class _Block:
    service: np.ndarray
    sensor: np.ndarray
    coverage: np.ndarray


def _simulate_block(cfg: ScenarioConfig, sim: SimConfig, window: float, k: int) -> _Block:
    rng = block_rng(sim.seed, k)
    n = sim.block_trials(k)

    distances = sample_nearest_distances(cfg.lambda_ch, window, n, rng)
    u_service = rng.uniform(0.0, 1.0, n)
    u_los = rng.uniform(0.0, 1.0, n)
    fades = rng.exponential(1.0, n)
    if sim.fixed_fade is not None:
        fades = np.full(n, sim.fixed_fade)

    availability = mission_availability(cfg, distances)
    served = u_service < availability

    budget = link_budget(cfg)
    pl = np.where(u_los < budget.p_los, budget.pl_los, budget.pl_nlos)
    p_in = intercepted_power(budget.eirp, budget.g_r, fades, pl)
    activated = _rectified(cfg, cfg.rectenna, p_in) >= cfg.gamma_th

    return _Block(
        service=availability,
        sensor=activated.astype(float),
        coverage=(served & activated).astype(float),
    )


def resolve_window(cfg: ScenarioConfig, sim: SimConfig) -> float:
    """Simulation disc radius for a configuration, checked against r_max."""
    r_max = service_analytics(cfg).r_max
    window = sim.window_radius
    if window is None:
        window = default_window_radius(cfg.lambda_ch, r_max)
    if not window > r_max:
        raise InvariantViolation("window_radius > r_max", f"window={window}, r_max={r_max}")
    return window


def _mean_and_error(values: np.ndarray, bernoulli: bool) -> SimEstimate:
    n = values.size
    mean = math.fsum(values) / n
    if bernoulli:
        std_error = math.sqrt(max(mean * (1.0 - mean), 0.0) / n)
    elif n > 1:
        std_error = math.sqrt(math.fsum((values - mean) ** 2) / (n - 1) / n)
    else:
        std_error = 0.0
    return SimEstimate(mean=min(max(mean, 0.0), 1.0), std_error=std_error, trials=n)


def simulate(cfg: ScenarioConfig, sim: SimConfig) -> Dict[str, SimEstimate]:
    """
    Run all estimators on one shared set of draws.

    Args:
        cfg: Scenario configuration.
        sim: Run settings.

    Returns:
        Mapping of estimator name (service, sensor_coverage, coverage) to
        its estimate.
    """
    window = resolve_window(cfg, sim)
    logger.debug(
        "Simulating %d trials in %d blocks (window %.4g m, %d workers)",
        sim.trials, sim.blocks, window, sim.workers,
    )

    with ThreadPoolExecutor(max_workers=sim.workers) as pool:
        blocks: List[_Block] = list(
            pool.map(lambda k: _simulate_block(cfg, sim, window, k), range(sim.blocks))
        )

    service = np.concatenate([b.service for b in blocks])
    sensor = np.concatenate([b.sensor for b in blocks])
    coverage = np.concatenate([b.coverage for b in blocks])
    return {
        "service": _mean_and_error(service, bernoulli=False),
        "sensor_coverage": _mean_and_error(sensor, bernoulli=True),
        "coverage": _mean_and_error(coverage, bernoulli=True),
    }


def simulate_service(cfg: ScenarioConfig, sim: SimConfig) -> SimEstimate:
    """Empirical P_e: mean availability fraction over PPP draws."""
    return simulate(cfg, sim)["service"]


def simulate_sensor_coverage(cfg: ScenarioConfig, sim: SimConfig) -> SimEstimate:
    """Empirical P_cov,s: activation frequency over LoS and fade draws."""
    return simulate(cfg, sim)["sensor_coverage"]


def simulate_coverage(cfg: ScenarioConfig, sim: SimConfig) -> SimEstimate:
    """Empirical P_cov: frequency of served and activated trials."""
    return simulate(cfg, sim)["coverage"]
