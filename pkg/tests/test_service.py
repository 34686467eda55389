"""
Tests for the service module: timing, analytics and P_e.
"""

import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uav_coverage.model import DomainError
from uav_coverage.propulsion import max_range_velocity
from uav_coverage.service import (
    battery_level,
    energy_left_ok,
    mission_timing,
    q_of_x,
    saturation_time,
    service_analytics,
    service_cdf,
    service_prob_conditional,
    service_probability,
    service_probability_rayleigh,
)

from .conftest import build_config

BASE = build_config()
BASE_ANALYTICS = service_analytics(BASE)


class TestBattery:
    """Tests for battery_level and saturation_time."""

    def test_linear_then_saturated(self):
        """Test min(xi t, B_max)."""
        b_max = 770.0 * 3600.0
        assert battery_level(770.0, 1800.0, b_max) == pytest.approx(b_max / 2)
        assert battery_level(770.0, 5000.0, b_max) == b_max

    def test_saturation_times(self):
        """Test the one-hour and 1440 s saturation points."""
        assert saturation_time(770.0, 770.0 * 3600.0) == 3600.0
        assert saturation_time(770.0, 308.0 * 3600.0) == 1440.0
        assert saturation_time(0.0, 1.0) == math.inf


class TestMissionTiming:
    """Tests for the mission time decomposition."""

    def test_station_under_event_area(self):
        """Test r = 0 flies no descent."""
        timing = mission_timing(BASE, 0.0)
        assert timing.t_j == 0.0
        assert timing.e_j == 0.0
        assert timing.t_pt == pytest.approx(7.55 / BASE.p_t)
        assert timing.feasible

    def test_availability_matches_conditional(self):
        """Test the time-fraction view equals the closed conditional probability."""
        for r in (1.0, 500.0, 5_000.0, 40_000.0):
            timing = mission_timing(BASE, r)
            assert timing.availability == pytest.approx(
                service_prob_conditional(BASE, r), rel=1e-10
            )

    def test_out_of_reach(self):
        """Test a station beyond the cutoff gives an infeasible, zero-availability cycle."""
        timing = mission_timing(BASE, BASE_ANALYTICS.r_cutoff * 1.01)
        assert not timing.feasible
        assert timing.t_ap == 0.0
        assert timing.availability == 0.0

    def test_energy_left_for_return(self):
        """Test the return leg is funded exactly when the mission is feasible."""
        assert energy_left_ok(BASE, 1_000.0)
        assert not energy_left_ok(BASE, BASE_ANALYTICS.r_cutoff * 1.01)


class TestServiceAnalytics:
    """Tests for the derived constants."""

    def test_table_scenario(self):
        """Test zeta, r_max, x_max and x0 of the table scenario."""
        an = BASE_ANALYTICS
        assert an.zeta == pytest.approx(10.36 * (1_386_000.0 - 7.55), rel=1e-9)
        assert an.r_max == pytest.approx(56_722.0, rel=1e-4)
        assert an.x_max == pytest.approx(0.82048, abs=1e-4)
        assert an.x0 == pytest.approx(0.81900, abs=1e-4)
        assert an.feasible
        assert 0.0 < an.r_cutoff <= an.r_max
        assert 0.0 < an.x_cut < an.x0

    def test_conditional_at_origin(self):
        """Test P(e | 0) = x_max and its limit from the right is x0."""
        assert BASE_ANALYTICS.conditional(0.0) == pytest.approx(BASE_ANALYTICS.x_max)
        assert BASE_ANALYTICS.conditional(1e-9) == pytest.approx(BASE_ANALYTICS.x0)

    def test_zero_beyond_cutoff(self):
        """Test P(e | r) = 0 past the cutoff and past r_max."""
        an = BASE_ANALYTICS
        assert an.conditional(an.r_cutoff * 1.001) == 0.0
        assert an.conditional(an.r_max * 2.0) == 0.0

    @given(
        st.floats(min_value=0.0, max_value=120_000.0),
        st.floats(min_value=0.0, max_value=120_000.0),
    )
    def test_conditional_non_increasing(self, a, b):
        """Test P(e | r) is non-increasing in r."""
        lo, hi = min(a, b), max(a, b)
        assert BASE_ANALYTICS.conditional(hi) <= BASE_ANALYTICS.conditional(lo) + 1e-15

    def test_vectorised_conditional(self):
        """Test arrays in, arrays out."""
        values = BASE_ANALYTICS.conditional(np.array([0.0, 100.0, 1e6]))
        assert values.shape == (3,)
        assert values[-1] == 0.0

    def test_strict_cutoff_without_power_transfer(self, make_config):
        """Test E_PT = 0 makes the strict cutoff equal r_max."""
        an = service_analytics(
            make_config({"uav.e_pt_j": 0, "coverage.strict_paper_mode": True})
        )
        assert an.r_cutoff == pytest.approx(an.r_max)

    def test_no_energy(self, make_config, caplog):
        """Test an empty battery yields an infeasible scenario."""
        cfg = make_config({"stations.t_ch_s": 0})
        with caplog.at_level(logging.WARNING):
            an = service_analytics(cfg)
        assert not an.feasible
        assert an.x_max == 0.0
        assert service_probability(cfg, an) == 0.0
        assert "No feasible mission" in caplog.text


class TestQuantileAndCdf:
    """Tests for q_of_x and the CDF."""

    def test_q_inverts_conditional(self):
        """Test Q(P(e | r)) = r inside the cutoff."""
        an = BASE_ANALYTICS
        for r in (10.0, 1_000.0, 20_000.0):
            assert q_of_x(an, an.conditional(r)) == pytest.approx(r, rel=1e-9)

    def test_q_at_x0_is_zero(self):
        """Test Q(x0) = 0."""
        assert q_of_x(BASE_ANALYTICS, BASE_ANALYTICS.x0) == pytest.approx(0.0, abs=1e-6)

    def test_cdf_endpoints(self):
        """Test F(x0) = 1 and F(0) is the probability of no station within the cutoff."""
        an = BASE_ANALYTICS
        assert service_cdf(an, an.x0) == pytest.approx(1.0)
        assert service_cdf(an, 0.0) == pytest.approx(
            math.exp(-an.lambda_ch * math.pi * an.r_cutoff**2)
        )

    def test_out_of_domain(self):
        """Test x outside [0, x_max] is rejected."""
        with pytest.raises(DomainError):
            q_of_x(BASE_ANALYTICS, 0.95)


class TestServiceProbability:
    """Tests for P_e."""

    def test_table_scenario(self):
        """Test P_e lies between the cutoff value and x0."""
        p_e = service_probability(BASE, BASE_ANALYTICS)
        assert BASE_ANALYTICS.x_cut < p_e < BASE_ANALYTICS.x0

    def test_modes_agree_without_power_transfer(self, make_config):
        """Test strict and default cutoffs coincide for E_PT = 0."""
        default = make_config({"uav.e_pt_j": 0})
        strict = make_config({"uav.e_pt_j": 0, "coverage.strict_paper_mode": True})
        assert service_probability(default) == pytest.approx(
            service_probability(strict), abs=1e-9
        )

    def test_increasing_in_density(self, make_config):
        """Test denser stations never lower P_e."""
        values = [
            service_probability(make_config({"stations.lambda_ch_per_km2": lam}))
            for lam in (0.001, 0.01, 0.1, 1.0, 10.0, 100.0)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_overflow_lowers_service(self, make_config):
        """Test dwelling past saturation lowers P_e."""
        full = service_probability(make_config({"stations.t_ch_s": 3600}))
        overflow = service_probability(make_config({"stations.t_ch_s": 4350}))
        assert overflow < full

    def test_quadrature_matches_rayleigh_integral(self, make_config):
        """Test the CDF route equals the distance-density route on random scenarios."""
        rng = np.random.default_rng(2024)
        for _ in range(20):
            b_max_wh = float(rng.uniform(100.0, 770.0))
            cfg = make_config(
                {
                    "stations.lambda_ch_per_km2": float(10 ** rng.uniform(-3.0, 2.0)),
                    "stations.t_ch_s": float(rng.uniform(100.0, 5000.0)),
                    "uav.b_max_wh": b_max_wh,
                    "uav.v_mps": float(rng.uniform(5.0, 25.0)),
                    "uav.e_pt_j": float(rng.uniform(0.0, 100.0)),
                    "coverage.strict_paper_mode": bool(rng.integers(0, 2)),
                }
            )
            an = service_analytics(cfg)
            assert service_probability(cfg, an) == pytest.approx(
                service_probability_rayleigh(cfg, an), abs=1e-6
            )

    def test_density_limits(self, make_config):
        """Test P_e vanishes for sparse stations and tends to x0 for dense ones."""
        sparse = make_config({"stations.lambda_ch_per_km2": 1e-9})
        assert service_probability(sparse) < 1e-3

        dense = make_config({"stations.lambda_ch_per_km2": 1e4})
        an = service_analytics(dense)
        assert service_probability(dense, an) == pytest.approx(an.x0, abs=1e-3)
        assert service_probability(dense, an) <= an.x0

    def test_non_decreasing_in_battery(self, make_config):
        """Test a larger battery never lowers P_e at a fixed charging time."""
        values = [
            service_probability(make_config({"uav.b_max_wh": b, "stations.t_ch_s": 3600}))
            for b in (100.0, 200.0, 385.0, 550.0, 770.0, 1000.0)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] > values[0]


class TestVelocityTradeOff:
    """Tests for the speed that maximises the conditional service probability."""

    VELOCITIES = np.arange(1.0, 30.0 + 0.25, 0.5)

    def best_velocity(self, make_config, r_delta: float) -> float:
        values = [
            service_prob_conditional(
                make_config(
                    {"uav.b_max_wh": 192.5, "stations.t_ch_s": 450, "uav.v_mps": float(v)}
                ),
                r_delta,
            )
            for v in self.VELOCITIES
        ]
        return float(self.VELOCITIES[int(np.argmax(values))])

    def test_nearer_station_favours_faster_trips(self, make_config):
        """Test the best speed falls as the station moves away."""
        near = self.best_velocity(make_config, 50.0)
        mid = self.best_velocity(make_config, 5_000.0)
        far = self.best_velocity(make_config, 15_000.0)
        assert near >= mid > far

    def test_best_speed_above_max_range_speed(self, make_config):
        """Test the best speed never drops below the max-range speed."""
        v_range = max_range_velocity(BASE.propulsion)
        assert self.best_velocity(make_config, 15_000.0) >= v_range - 0.5
