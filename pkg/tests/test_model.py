"""
Tests for the scenario model: gains, FCC caps and invariants.
"""

import math
from dataclasses import replace

import pytest

from uav_coverage.model import (
    CoverageMode,
    DomainError,
    InvariantViolation,
    PropulsionModel,
    RectennaModel,
    beamwidth_from_gain,
    check_eirp_compliance,
    default_rectenna,
    gain_from_beamwidth,
)
from uav_coverage.units import linear_to_db


class TestCoverageMode:
    """Tests for CoverageMode enum."""

    def test_from_string(self):
        """Test parsing mode keys."""
        assert CoverageMode.from_string("paper") is CoverageMode.PAPER_CLOSED_FORM
        assert CoverageMode.from_string(" NonLinear ") is CoverageMode.NONLINEAR_RECTENNA
        assert CoverageMode.from_string("exact") is None

    def test_all_keys(self):
        """Test listing mode keys."""
        assert CoverageMode.all_keys() == ["paper", "nonlinear"]


class TestBeamwidthGain:
    """Tests for the pencil-beam gain relation."""

    def test_table_beamwidth_gives_15_dbi(self):
        """Test 30.8 degrees gives 15.0 dBi."""
        gain = gain_from_beamwidth(30.8)
        assert gain == pytest.approx(31.6242, rel=1e-4)
        assert linear_to_db(gain) == pytest.approx(15.0, abs=0.05)

    def test_inverse(self):
        """Test beamwidth_from_gain inverts gain_from_beamwidth."""
        for theta in (5.0, 30.8, 90.0, 180.0):
            assert beamwidth_from_gain(gain_from_beamwidth(theta)) == pytest.approx(theta)

    @pytest.mark.parametrize("theta", [0.0, -10.0, 181.0, math.nan])
    def test_invalid_beamwidth(self, theta):
        """Test beamwidths outside (0, 180] are rejected."""
        with pytest.raises(DomainError):
            gain_from_beamwidth(theta)

    def test_gain_too_small_for_any_beamwidth(self):
        """Test gains implying more than 180 degrees are rejected."""
        with pytest.raises(DomainError):
            beamwidth_from_gain(0.5)


class TestCompliance:
    """Tests for the FCC conducted power and EIRP caps."""

    def test_table_configuration_is_compliant(self, base_config):
        """Test 21 dBm into 15 dBi gives 36 dBm EIRP within both caps."""
        report = base_config.compliance()
        assert report.eirp_dbm == pytest.approx(36.0, abs=0.05)
        assert report.eirp_watts == pytest.approx(3.981, abs=1e-3)
        assert report.conducted_power_ok
        assert report.eirp_ok
        assert report.compliant
        assert report.violations() == []

    def test_conducted_power_cap(self):
        """Test more than 1 W conducted is flagged."""
        report = check_eirp_compliance(2.0, 1.0)
        assert not report.conducted_power_ok
        assert report.eirp_ok
        assert len(report.violations()) == 1

    def test_eirp_cap(self):
        """Test 1 W into 10x gain breaks the 4 W EIRP cap."""
        report = check_eirp_compliance(1.0, 10.0)
        assert report.conducted_power_ok
        assert not report.eirp_ok
        assert "EIRP" in report.violations()[0]


class TestPropulsionModel:
    """Tests for PropulsionModel."""

    def test_hover_power(self):
        """Test default aggregates give the tabulated hover power."""
        assert PropulsionModel().hover_power == pytest.approx(168.48, abs=0.05)

    def test_negative_coefficient_rejected(self):
        """Test negative coefficients violate the invariant."""
        with pytest.raises(InvariantViolation) as exc_info:
            PropulsionModel(p0=-1.0)
        assert exc_info.value.invariant == "propulsion.p0 >= 0"

    def test_zero_tip_speed_rejected(self):
        """Test the tip speed must be positive."""
        with pytest.raises(InvariantViolation):
            PropulsionModel(u_tip=0.0)


class TestRectennaModel:
    """Tests for RectennaModel invariants."""

    def test_default_model(self):
        """Test the bundled stand-in curve."""
        model = default_rectenna()
        assert model.degree == 3
        assert model.clamped
        assert model.p_th == pytest.approx(1e-5)
        assert model.p_sat == pytest.approx(1e-2)

    def test_threshold_must_be_below_saturation(self):
        """Test p_th < p_sat."""
        with pytest.raises(InvariantViolation):
            RectennaModel(p_th=1e-2, p_sat=1e-3, coeffs=(0.5,))

    def test_efficiency_must_stay_below_one(self):
        """Test efficiencies >= 1 are rejected."""
        with pytest.raises(InvariantViolation) as exc_info:
            RectennaModel(p_th=0.0, p_sat=1e-2, coeffs=(1.5,))
        assert "efficiency" in exc_info.value.invariant

    def test_output_must_not_decrease(self):
        """Test a curve whose output falls before saturation is rejected."""
        with pytest.raises(InvariantViolation) as exc_info:
            RectennaModel(p_th=0.0, p_sat=1e-2, coeffs=(-60.0, 0.9))
        assert "non-decreasing" in exc_info.value.invariant

    def test_unclamped_model(self):
        """Test p_sat = inf is accepted with a finite validation grid."""
        model = RectennaModel(p_th=1e-6, p_sat=math.inf, coeffs=(0.4,))
        assert not model.clamped
        grid = model.validation_grid()
        assert grid[0] == pytest.approx(1e-6)
        assert grid[-1] == pytest.approx(1.0)


class TestScenarioConfig:
    """Tests for ScenarioConfig derived values and invariants."""

    def test_gain_derived_from_beamwidth(self, base_config):
        """Test the missing gain is derived."""
        assert base_config.g_t_dbi == pytest.approx(15.0, abs=0.05)
        assert base_config.g_t == pytest.approx(31.6242, rel=1e-4)

    def test_beamwidth_derived_from_gain(self, base_config):
        """Test the missing beamwidth is derived."""
        cfg = replace(base_config, g_t_dbi=15.0, theta_b_deg=None)
        assert cfg.theta_b_deg == pytest.approx(30.8, abs=0.01)

    def test_inconsistent_gain_pair(self, base_config):
        """Test a gain disagreeing with the beamwidth beyond 0.1% is rejected."""
        with pytest.raises(InvariantViolation):
            replace(base_config, g_t_dbi=16.0, theta_b_deg=30.8)

    def test_gain_pair_required(self, base_config):
        """Test one of the pair must be given."""
        with pytest.raises(InvariantViolation):
            replace(base_config, g_t_dbi=None, theta_b_deg=None)

    def test_hover_altitude(self, base_config):
        """Test h_ut = h_ch - h_l unless overridden."""
        assert base_config.hover_altitude == pytest.approx(20.0)
        assert replace(base_config, h_ut_override=35.0).hover_altitude == 35.0

    def test_descent_above_cruise_altitude(self, base_config):
        """Test h_l <= h_ch."""
        with pytest.raises(InvariantViolation) as exc_info:
            replace(base_config, h_l=120.0)
        assert exc_info.value.invariant == "h_l <= h_ch"

    def test_zero_hover_altitude(self, base_config):
        """Test hovering at the sensors' height is rejected."""
        with pytest.raises(InvariantViolation):
            replace(base_config, h_l=100.0)

    def test_power_transfer_energy_above_battery(self, base_config):
        """Test e_pt <= b_max."""
        with pytest.raises(InvariantViolation):
            replace(base_config, e_pt=base_config.b_max * 2.0)

    @pytest.mark.parametrize("name", ["v", "lambda_ch", "f_c"])
    def test_strictly_positive_fields(self, base_config, name):
        """Test velocity, density and frequency must be > 0."""
        with pytest.raises(InvariantViolation):
            replace(base_config, **{name: 0.0})

    def test_saturation_time(self, base_config):
        """Test 770 Wh at 770 W saturates after one hour."""
        assert base_config.saturation_time == pytest.approx(3600.0)
        assert replace(base_config, xi_ch=0.0).saturation_time == math.inf
