"""Tests for the discrete norm surrogates."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophase_flow.const import QUADRATURE_MIDPOINT, QUADRATURE_RULES, QUADRATURE_TRAPEZOID
from twophase_flow.exceptions import ConfigurationError, NormUndefinedError
from twophase_flow.geometry import HeightField
from twophase_flow.grid import StripGrid, TimeGrid, TwoPhaseField
from twophase_flow.models import DataF, StateZ
from twophase_flow.norms import (
    NormConfig,
    algebra_inequality_probe,
    classical_regularity_report,
    data_norm,
    lp_norm,
    midpoints,
    norm_E_spaces,
    norm_F3,
    norm_F_spaces,
    norm_initial,
    seminorm_F3,
    seminorm_F3_space,
    seminorm_F3_time,
    state_norm,
    time_samples,
    torus_seminorm,
)

SMALL_GRID = StripGrid(dim=2, n_h=8, n_v=8, length_h=1.0, length_v=2.0)
SMALL_TIME = TimeGrid(horizon=0.4, steps=4)


def _interface_series(grid: StripGrid, time: TimeGrid) -> np.ndarray:
    t = time.nodes[:, np.newaxis]
    return np.sin(grid.x_h)[np.newaxis] * (1.0 + t) + 0.3 * np.cos(2.0 * grid.x_h)[np.newaxis] * t**2


def _dense_time_seminorm(
    samples: np.ndarray, weights: np.ndarray, grid: StripGrid, time: TimeGrid, p: float, order: float
) -> float:
    """Time seminorm as an explicit sum over every ordered pair of distinct samples."""
    exponent = 1.0 + order * p
    total = 0.0
    for i in range(len(samples)):
        for j in range(len(samples)):
            if i == j:
                continue
            difference = grid.interface_weight * np.sum(np.abs(samples[i] - samples[j]) ** p)
            total += weights[i] * weights[j] * difference / (abs(i - j) * time.dt) ** exponent
    return total ** (1.0 / p)


def _dense_space_seminorm(samples: np.ndarray, weights: np.ndarray, grid: StripGrid, p: float, order: float) -> float:
    """Torus seminorm as an explicit sum over every ordered pair of distinct points and every sample."""
    exponent = grid.dim - 1 + order * p
    period = 2.0 * np.pi * grid.length_h
    indices = list(np.ndindex(*grid.horizontal_shape))
    total = 0.0
    for weight, sample in zip(weights, samples, strict=True):
        for a in indices:
            for b in indices:
                if a == b:
                    continue
                delta = np.abs(np.subtract(a, b)) * grid.dx
                delta = np.minimum(delta, period - delta)
                distance = np.sqrt(np.sum(delta**2))
                total += weight * grid.interface_weight**2 * abs(sample[a] - sample[b]) ** p / distance**exponent
    return total ** (1.0 / p)


class TestNormConfig:
    """Test NormConfig validation."""

    def test_defaults(self):
        """Test the default exponent is admissible in 2D."""
        config = NormConfig()
        assert config.p > config.dim + 2

    @pytest.mark.parametrize(("p", "dim"), [(4.0, 2), (5.0, 3), (2.0, 2)])
    def test_p_too_small(self, p: float, dim: int):
        """Test that p ≤ N + 2 is rejected."""
        with pytest.raises(ConfigurationError, match="N \\+ 2"):
            NormConfig(p=p, dim=dim)

    def test_excluded_value_collects_errors(self):
        """Test that p = 3 violates two rules at once."""
        with pytest.raises(ConfigurationError) as err:
            NormConfig(p=3.0, dim=2)
        assert len(err.value.errors) == 2

    def test_unknown_quadrature(self):
        """Test that an unknown quadrature rule is rejected."""
        with pytest.raises(ConfigurationError, match="quadrature"):
            NormConfig(quadrature="gauss")

    def test_from_dict(self):
        """Test creating from a configuration mapping."""
        config = NormConfig.from_dict({"p": 6}, dim=3)
        assert (config.p, config.dim) == (6.0, 3)
        assert config.to_dict()["p"] == 6.0
        assert config.quadrature == QUADRATURE_MIDPOINT

    def test_trapezoid_round_trip(self):
        """Test that the trapezoid rule is accepted and persisted."""
        config = NormConfig.from_dict({"p": 6, "quadrature": "trapezoid"})
        assert config.quadrature == QUADRATURE_TRAPEZOID
        assert NormConfig.from_dict(config.to_dict()) == config


class TestBuildingBlocks:
    """Test the elementary discrete integrals."""

    def test_midpoints_need_two_nodes(self):
        """Test that a single time node cannot be integrated."""
        with pytest.raises(NormUndefinedError):
            midpoints(np.zeros((1, 8)))

    def test_midpoints(self):
        """Test cell averaging along the time axis."""
        assert midpoints(np.array([[0.0], [2.0], [4.0]])).ravel().tolist() == [1.0, 3.0]

    def test_lp_norm_of_constant(self):
        """Test ‖c‖ = |c| (T |torus|)^{1/p}."""
        values = np.full((SMALL_TIME.n_nodes, SMALL_GRID.n_h), -2.0)
        expected = 2.0 * (SMALL_TIME.horizon * SMALL_GRID.torus_area) ** (1.0 / 5.0)
        assert lp_norm(values, SMALL_GRID, SMALL_TIME, 5.0) == pytest.approx(expected, rel=1e-12)

    def test_seminorm_vanishes_on_constants(self):
        """Test that constants carry no fractional regularity."""
        values = np.full((SMALL_TIME.n_nodes, SMALL_GRID.n_h), 0.7)
        assert seminorm_F3(values, SMALL_GRID, SMALL_TIME, 5.0) == 0.0
        assert torus_seminorm(values[0], SMALL_GRID, 5.0, 0.5) == 0.0

    def test_seminorm_positive_on_variation(self):
        """Test that a varying series has a positive seminorm."""
        assert seminorm_F3(_interface_series(SMALL_GRID, SMALL_TIME), SMALL_GRID, SMALL_TIME, 5.0) > 0.0

    @settings(max_examples=20, deadline=None)
    @given(scale=st.floats(min_value=-50.0, max_value=50.0).filter(lambda x: abs(x) > 1e-3))
    def test_f3_homogeneity(self, scale: float):
        """Test ‖λg‖_{𝔽₃} = |λ| ‖g‖_{𝔽₃}."""
        g = _interface_series(SMALL_GRID, SMALL_TIME)
        base = norm_F3(g, SMALL_GRID, SMALL_TIME, 5.0)
        assert norm_F3(scale * g, SMALL_GRID, SMALL_TIME, 5.0) == pytest.approx(abs(scale) * base, rel=1e-9)


class TestQuadrature:
    """Test the seminorm quadratures against pair sums written out in full."""

    def test_time_samples(self):
        """Test sample positions and weights of both rules."""
        series = np.array([[0.0], [2.0], [4.0]])
        cells, cell_weights = time_samples(series, SMALL_TIME, QUADRATURE_MIDPOINT)
        nodes, node_weights = time_samples(series, SMALL_TIME, QUADRATURE_TRAPEZOID)
        assert cells.ravel().tolist() == [1.0, 3.0]
        assert cell_weights.tolist() == pytest.approx([0.1, 0.1])
        assert nodes.ravel().tolist() == [0.0, 2.0, 4.0]
        assert node_weights.tolist() == pytest.approx([0.05, 0.1, 0.05])

    def test_time_samples_errors(self):
        """Test an unknown rule and a single node."""
        with pytest.raises(ConfigurationError):
            time_samples(np.zeros((3, 8)), SMALL_TIME, "gauss")
        with pytest.raises(NormUndefinedError):
            time_samples(np.zeros((1, 8)), SMALL_TIME, QUADRATURE_TRAPEZOID)

    @pytest.mark.parametrize("quadrature", QUADRATURE_RULES)
    def test_time_seminorm_matches_pair_sum(self, quadrature: str):
        """Test the lag-summed time seminorm against the explicit double sum."""
        g = _interface_series(SMALL_GRID, SMALL_TIME)
        samples, weights = time_samples(g, SMALL_TIME, quadrature)
        expected = _dense_time_seminorm(samples, weights, SMALL_GRID, SMALL_TIME, 5.0, 0.4)
        assert seminorm_F3_time(g, SMALL_GRID, SMALL_TIME, 5.0, quadrature) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("quadrature", QUADRATURE_RULES)
    def test_space_seminorm_matches_pair_sum(self, quadrature: str):
        """Test the kernel-based torus seminorm against the explicit double sum."""
        g = _interface_series(SMALL_GRID, SMALL_TIME)
        samples, weights = time_samples(g, SMALL_TIME, quadrature)
        expected = _dense_space_seminorm(samples, weights, SMALL_GRID, 5.0, 0.8)
        assert seminorm_F3_space(g, SMALL_GRID, SMALL_TIME, 5.0, quadrature) == pytest.approx(expected, rel=1e-12)

    def test_space_seminorm_matches_pair_sum_3d(self):
        """Test the minimal-image distance on a 2D torus against the explicit double sum."""
        grid = StripGrid(dim=3, n_h=8, n_v=8, length_h=1.0, length_v=2.0)
        time = TimeGrid(horizon=0.2, steps=2)
        x, y = grid.horizontal_mesh()
        t = time.nodes.reshape(-1, 1, 1)
        g = np.sin(x)[np.newaxis] * np.cos(2.0 * y)[np.newaxis] * (1.0 + t) + 0.2 * np.cos(x + y)[np.newaxis] * t
        samples, weights = time_samples(g, time)
        expected = _dense_space_seminorm(samples, weights, grid, 5.0, 0.8)
        assert seminorm_F3_space(g, grid, time, 5.0) == pytest.approx(expected, rel=1e-12)

    def test_linear_in_time(self):
        """Test g(t, x′) = t with p = 5 against the pair sum and under refinement."""
        values = {}
        for steps in (64, 128):
            time = TimeGrid(horizon=1.0, steps=steps)
            g = np.tile(time.nodes[:, np.newaxis], (1, SMALL_GRID.n_h))
            values[steps] = seminorm_F3_time(g, SMALL_GRID, time, 5.0)
            if steps == 64:
                samples, weights = time_samples(g, time)
                expected = _dense_time_seminorm(samples, weights, SMALL_GRID, time, 5.0, 0.4)
                assert values[steps] == pytest.approx(expected, rel=1e-12)
        assert values[128] == pytest.approx(values[64], rel=0.03)

    def test_rules_agree_under_refinement(self):
        """Test that both rules measure the same seminorm on a fine time grid but differ on a coarse one."""
        coarse = _interface_series(SMALL_GRID, SMALL_TIME)
        midpoint = seminorm_F3(coarse, SMALL_GRID, SMALL_TIME, 5.0, QUADRATURE_MIDPOINT)
        trapezoid = seminorm_F3(coarse, SMALL_GRID, SMALL_TIME, 5.0, QUADRATURE_TRAPEZOID)
        assert midpoint != pytest.approx(trapezoid, rel=1e-6)
        time = TimeGrid(horizon=1.0, steps=64)
        g = np.tile(time.nodes[:, np.newaxis], (1, SMALL_GRID.n_h))
        fine_midpoint = seminorm_F3_time(g, SMALL_GRID, time, 5.0, QUADRATURE_MIDPOINT)
        fine_trapezoid = seminorm_F3_time(g, SMALL_GRID, time, 5.0, QUADRATURE_TRAPEZOID)
        assert fine_trapezoid == pytest.approx(fine_midpoint, rel=0.05)

    def test_rule_reaches_state_norm(self, grid: StripGrid, time_grid: TimeGrid):
        """Test that the rule changes 𝔼₃ only."""
        zero = StateZ.zeros(grid, time_grid)
        z = StateZ(
            velocity=zero.velocity,
            pressure=zero.pressure,
            pressure_jump=0.1 * _interface_series(grid, time_grid),
            height=0.01 * _interface_series(grid, time_grid),
            time=time_grid,
        )
        midpoint = norm_E_spaces(z, NormConfig())
        trapezoid = norm_E_spaces(z, NormConfig(quadrature=QUADRATURE_TRAPEZOID))
        assert trapezoid["E3"] != pytest.approx(midpoint["E3"], rel=1e-6)
        assert trapezoid["E4"] == midpoint["E4"]


class TestStateAndDataNorms:
    """Test 𝔼 and 𝔽 surrogates."""

    def test_zero_state(self, grid: StripGrid, time_grid: TimeGrid):
        """Test that the zero trajectory has zero norm."""
        norms = norm_E_spaces(StateZ.zeros(grid, time_grid), NormConfig())
        assert set(norms) >= {"E1", "E2", "E3", "E4", "E4.time_regularity", "E4.mixed"}
        assert all(value == 0.0 for value in norms.values())
        assert state_norm(StateZ.zeros(grid, time_grid), NormConfig()) == 0.0

    def test_zero_data(self, grid: StripGrid, time_grid: TimeGrid):
        """Test that zero data has zero norm."""
        norms = norm_F_spaces(DataF.zeros(grid, time_grid), NormConfig())
        assert sorted(norms) == ["F1", "F2", "F3", "F4"]
        assert data_norm(DataF.zeros(grid, time_grid), NormConfig()) == 0.0

    def test_state_norm_homogeneous(self, grid: StripGrid, time_grid: TimeGrid):
        """Test ‖2z‖ = 2‖z‖ for a trajectory with a moving interface."""
        zero = StateZ.zeros(grid, time_grid)
        z = StateZ(
            velocity=zero.velocity,
            pressure=zero.pressure,
            pressure_jump=0.1 * _interface_series(grid, time_grid),
            height=0.01 * _interface_series(grid, time_grid),
            time=time_grid,
        )
        config = NormConfig()
        assert state_norm(z * 2.0, config) == pytest.approx(2.0 * state_norm(z, config), rel=1e-9)

    def test_initial_norm(self, grid: StripGrid, smooth_velocity: TwoPhaseField, sine_height: HeightField):
        """Test the initial-data norm is positive and vanishes at rest."""
        config = NormConfig()
        assert norm_initial(smooth_velocity, sine_height.values, config) > 0.0
        assert norm_initial(TwoPhaseField.zeros(grid, (2,)), np.zeros(grid.n_h), config) == 0.0


class TestDiagnostics:
    """Test the classical regularity report and the algebra probe."""

    def test_classical_report(self, grid: StripGrid, time_grid: TimeGrid):
        """Test sup norms of a stationary sine interface."""
        zero = StateZ.zeros(grid, time_grid)
        height = np.tile(0.2 * np.sin(grid.x_h), (time_grid.n_nodes, 1))
        z = StateZ(zero.velocity, zero.pressure, zero.pressure_jump, height, time_grid)
        report = classical_regularity_report(z)
        assert report["h"] == pytest.approx(0.2, rel=1e-3)
        assert report["grad_h"] == pytest.approx(0.2, rel=1e-3)
        assert report["dt_h"] == 0.0

    def test_algebra_probe(self):
        """Test that every constant is measured and finite."""
        rng = np.random.default_rng(3)
        base = _interface_series(SMALL_GRID, SMALL_TIME)
        pairs = [(base * rng.normal(), np.roll(base, k, axis=1)) for k in range(3)]
        result = algebra_inequality_probe(pairs, SMALL_GRID, SMALL_TIME, 5.0)
        assert sorted(result) == ["composition", "f3_algebra", "f3_times_ftilde3", "ftilde3_algebra"]
        assert all(np.isfinite(value) and value > 0.0 for value in result.values())
