"""Tests for the Picard coordinator and its probes."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from twophase_flow.const import EXIT_DIVERGED, EXIT_OK, STATUS_CONVERGED, STATUS_DIVERGED
from twophase_flow.constitutive import PhasePair
from twophase_flow.coordinator import (
    ConvergenceReport,
    SolveConfig,
    basin_probe,
    check_compatibility,
    directional_derivative_probe,
    interface_residual_series,
    picard_solve,
    pushforward_solution,
    smallness_probe,
)
from twophase_flow.exceptions import ConfigurationError, IncompatibleDataError
from twophase_flow.geometry import HeightField
from twophase_flow.grid import StripGrid, TimeGrid, TwoPhaseField
from twophase_flow.models import DataF, StateZ
from twophase_flow.norms import NormConfig
from twophase_flow.stokes import LinearParams, solve_linear_evolution


@pytest.fixture
def rest(grid: StripGrid) -> TwoPhaseField:
    """Return the fluid at rest."""
    return TwoPhaseField.zeros(grid, (2,))


@pytest.fixture
def linear_state(grid: StripGrid, time_grid: TimeGrid, newtonian_phases: PhasePair, rest: TwoPhaseField) -> StateZ:
    """Return the linear evolution of a sine interface."""
    h0 = 0.05 * np.sin(grid.x_h)
    params = LinearParams.from_phases(newtonian_phases)
    return solve_linear_evolution(DataF.zeros(grid, time_grid), rest, h0, params)


class TestSolveConfig:
    """Test SolveConfig dataclass."""

    def test_defaults_valid(self):
        """Test default knobs."""
        config = SolveConfig()
        assert config.max_iter >= 1
        assert SolveConfig.from_dict(config.to_dict()) == config

    def test_invalid_collects_errors(self):
        """Test that every violated rule is reported."""
        with pytest.raises(ConfigurationError) as err:
            SolveConfig(max_iter=0, tol=-1.0, divergence_patience=0)
        assert len(err.value.errors) == 3


class TestConvergenceReport:
    """Test ConvergenceReport dataclass."""

    def test_exit_codes(self):
        """Test exit code per status."""
        assert ConvergenceReport(status=STATUS_CONVERGED).exit_code == EXIT_OK
        assert ConvergenceReport(status=STATUS_DIVERGED).exit_code == EXIT_DIVERGED
        assert ConvergenceReport().exit_code == EXIT_DIVERGED

    def test_ratios(self):
        """Test successive residual quotients."""
        report = ConvergenceReport(residuals=[1.0, 0.1, 0.01])
        assert report.ratios == pytest.approx([0.1, 0.1])
        assert report.iterations == 3

    def test_from_dict(self):
        """Test creating from a persisted dictionary."""
        report = ConvergenceReport(status=STATUS_CONVERGED, residuals=[1e-3, 1e-7], state_norms=[0.2, 0.2])
        restored = ConvergenceReport.from_dict(report.to_dict())
        assert restored.converged
        assert restored.residuals == [1e-3, 1e-7]


class TestCompatibility:
    """Test the compatibility conditions of the nonlinear problem."""

    def test_rest_is_compatible(self, grid: StripGrid, rest: TwoPhaseField, newtonian_phases: PhasePair):
        """Test that any interface at rest is compatible."""
        report = check_compatibility(rest, 0.05 * np.sin(grid.x_h), newtonian_phases)
        assert report.passed
        assert report.failing() == []
        assert report.pressure_jump.shape == grid.horizontal_shape

    def test_divergent_field_fails(
        self, grid: StripGrid, smooth_velocity: TwoPhaseField, newtonian_phases: PhasePair
    ):
        """Test that a continuous but divergent u₀ fails the divergence condition."""
        report = check_compatibility(smooth_velocity, np.zeros(grid.n_h), newtonian_phases)
        assert not report.passed
        assert "divergence" in report.failing()
        assert report.velocity_jump == 0.0
        assert report.to_dict()["passed"] is False

    @pytest.mark.parametrize("phases_fixture", ["newtonian_phases", "shear_thickening_phases"])
    @pytest.mark.parametrize("height_kind", ["flat", "sine", "double"])
    @pytest.mark.parametrize("velocity_kind", ["rest", "translation", "shear", "smooth"])
    def test_forms_agree(
        self,
        grid: StripGrid,
        velocity_kind: str,
        height_kind: str,
        phases_fixture: str,
        request: pytest.FixtureRequest,
    ):
        """Test that the G-form residual equals −√(1+|∇′h₀|²) times the tangential stress jump."""
        phases = request.getfixturevalue(phases_fixture)
        x = grid.x_h
        h0 = {"flat": np.zeros(grid.n_h), "sine": 0.05 * np.sin(x), "double": 0.1 * np.cos(2.0 * x)}[height_kind]
        velocities = {
            "rest": lambda c, p: np.stack([0.0 * c[1], 0.0 * c[1]]),
            "translation": lambda c, p: np.stack([1.0 + 0.0 * c[1], 0.0 * c[1]]),
            "shear": lambda c, p: np.stack([0.1 * (1.0 + p) * c[1] + 0.0 * c[0], 0.0 * c[1]]),
            "smooth": lambda c, p: np.stack(
                [0.1 * np.cos(c[0]) * np.exp(-c[1] ** 2), 0.05 * np.sin(c[0]) * np.exp(-c[1] ** 2)]
            ),
        }
        u0 = TwoPhaseField.from_function(grid, velocities[velocity_kind], (2,))
        report = check_compatibility(u0, h0, phases)
        metric = HeightField(h0, grid).jet.metric
        assert_allclose(report.g_form_residual, -metric * report.tangential_residual, atol=1e-11)
        assert report.g_form == pytest.approx(report.tangential_stress, rel=1e-9, abs=1e-12)
        assert report.passed == report.g_form_passed
        if velocity_kind == "shear":
            assert not report.passed
            assert "tangential_stress" in report.failing()

    def test_picard_refuses_incompatible(
        self, grid: StripGrid, time_grid: TimeGrid, smooth_velocity: TwoPhaseField, newtonian_phases: PhasePair
    ):
        """Test that the iteration never starts from incompatible data."""
        with pytest.raises(IncompatibleDataError) as err:
            picard_solve(smooth_velocity, np.zeros(grid.n_h), newtonian_phases, time_grid)
        assert err.value.report is not None
        assert err.value.exit_code == 3


class TestPicard:
    """Test the fixed-point iteration."""

    def test_zero_data(self, grid: StripGrid, time_grid: TimeGrid, rest: TwoPhaseField, newtonian_phases: PhasePair):
        """Test that zero data converge immediately to zero."""
        z, report = picard_solve(rest, np.zeros(grid.n_h), newtonian_phases, time_grid)
        assert report.converged
        assert report.exit_code == EXIT_OK
        assert z.max_abs() == 0.0

    def test_small_sine_converges(
        self, grid: StripGrid, time_grid: TimeGrid, rest: TwoPhaseField, newtonian_phases: PhasePair
    ):
        """Test convergence for a small interface perturbation."""
        h0 = 1e-4 * np.sin(grid.x_h)
        z, report = picard_solve(rest, h0, newtonian_phases, time_grid)
        assert report.status == STATUS_CONVERGED
        assert report.residuals[-1] <= 1e-8 * report.state_norms[-1]
        assert np.max(np.abs(z.velocity.jump())) < 1e-12
        series = interface_residual_series(z, newtonian_phases)
        assert series[0] == 0.0
        assert np.all(np.isfinite(series))

    def test_guard_stops_iteration(
        self, grid: StripGrid, time_grid: TimeGrid, rest: TwoPhaseField, newtonian_phases: PhasePair
    ):
        """Test that iterates outside the guard ball count as divergence."""
        config = SolveConfig(delta0_guard=1e-9)
        _, report = picard_solve(rest, 1e-2 * np.sin(grid.x_h), newtonian_phases, time_grid, config=config)
        assert report.status == STATUS_DIVERGED
        assert report.iterations == 1

    def test_basin_probe(self, grid: StripGrid, time_grid: TimeGrid, rest: TwoPhaseField, newtonian_phases: PhasePair):
        """Test a status per scaling factor."""
        statuses = basin_probe(rest, 1e-4 * np.sin(grid.x_h), newtonian_phases, time_grid, [0.0, 1.0])
        assert statuses == {0.0: STATUS_CONVERGED, 1.0: STATUS_CONVERGED}


class TestProbes:
    """Test the smallness and derivative probes."""

    def test_quadratic_smallness(self, linear_state: StateZ, newtonian_phases: PhasePair):
        """Test that ‖N(εz)‖ vanishes to second order."""
        report = smallness_probe(linear_state, newtonian_phases, [1e-1, 3e-2, 1e-2], NormConfig())
        assert not report.degenerate
        assert report.slope is not None and report.slope > 1.8
        assert report.to_dict()["epsilons"] == [1e-1, 3e-2, 1e-2]

    def test_zero_state_is_degenerate(self, grid: StripGrid, time_grid: TimeGrid, newtonian_phases: PhasePair):
        """Test that the probe reports a vanishing direction."""
        report = smallness_probe(StateZ.zeros(grid, time_grid), newtonian_phases, [1e-1, 1e-2], NormConfig())
        assert report.degenerate
        assert report.slope is None

    def test_directional_derivative_vanishes(self, linear_state: StateZ, newtonian_phases: PhasePair):
        """Test DN(0) = 0 through symmetric difference quotients."""
        values = directional_derivative_probe(linear_state, newtonian_phases, [1e-1, 1e-2], NormConfig())
        assert values[1] < 0.2 * values[0]


class TestPushforward:
    """Test the transformation back to physical coordinates."""

    def test_hydrostatic_pressure(self, grid: StripGrid, time_grid: TimeGrid, newtonian_phases: PhasePair):
        """Test π = −ρ_i γ_a x_N for a reduced pressure θ = 0."""
        trajectory = pushforward_solution(StateZ.zeros(grid, time_grid), newtonian_phases)
        field = trajectory.pressure[0]
        rho = np.where(field.phase, newtonian_phases.rho2, newtonian_phases.rho1)
        np.testing.assert_allclose(field.values, -rho * newtonian_phases.gamma_a * field.column_levels)
        assert trajectory.interface_points(0).shape == (2, grid.n_h)
        assert np.max(np.abs(trajectory.velocity[-1].values)) == 0.0

    def test_interface_points(
        self, grid: StripGrid, time_grid: TimeGrid, sine_height: HeightField, newtonian_phases: PhasePair
    ):
        """Test that Γ(t) is the graph of the height."""
        zero = StateZ.zeros(grid, time_grid)
        height = np.tile(sine_height.values, (time_grid.n_nodes, 1))
        z = StateZ(zero.velocity, zero.pressure, zero.pressure_jump, height, time_grid)
        points = pushforward_solution(z, newtonian_phases).interface_points(2)
        np.testing.assert_array_equal(points[1], sine_height.values)
