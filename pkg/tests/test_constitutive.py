"""Tests for viscosity laws and the viscous tensor operators."""

from __future__ import annotations

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from twophase_flow.constitutive import (
    PhasePair,
    ViscosityModel,
    a_tensor,
    stress_divergence,
    viscosity_eval,
    viscous_flux,
)
from twophase_flow.exceptions import ConfigurationError, DomainError
from twophase_flow.grid import LOWER, UPPER, StripGrid


def _deformation(x: float, y: float) -> np.ndarray:
    """D(v) for the divergence-free v = (x²y, −xy²)."""
    off = 0.5 * (x**2 - y**2)
    return np.array([[2 * x * y, off], [off, -2 * x * y]])


def _hessian(x: float, y: float) -> np.ndarray:
    """hessian[j, k, l] = ∂_j∂_k v_l for v = (x²y, −xy²)."""
    h = np.zeros((2, 2, 2))
    h[0, 0, 0], h[0, 1, 0], h[1, 0, 0], h[1, 1, 0] = 2 * y, 2 * x, 2 * x, 0.0
    h[0, 0, 1], h[0, 1, 1], h[1, 0, 1], h[1, 1, 1] = 0.0, -2 * y, -2 * y, -2 * x
    return h


class TestViscosityModel:
    """Test ViscosityModel families."""

    def test_newtonian(self):
        """Test constant viscosity."""
        model = ViscosityModel(family="newtonian", nu=0.7)
        mu, mu_dot = model.evaluate(np.array([0.0, 1.0, 5.0]))
        assert_allclose(mu, 0.7)
        assert_allclose(mu_dot, 0.0)
        assert model.is_newtonian

    def test_power_sum_d2_is_twice_nu(self):
        """Test that power_sum with d = 2 collapses to μ ≡ 2ν."""
        model = ViscosityModel(family="power_sum", nu=1.5, d=2.0)
        assert model.is_newtonian
        assert model.mu0 == pytest.approx(3.0)
        assert_allclose(model.mu_dot(np.array([0.0, 2.0])), 0.0)

    def test_power_sum_d4(self):
        """Test μ = ν(1 + s) for d = 4."""
        model = ViscosityModel(family="power_sum", nu=2.0, d=4.0)
        assert_allclose(model.mu(np.array([0.0, 3.0])), [2.0, 8.0])
        assert_allclose(model.mu_dot(np.array([0.0, 3.0])), [2.0, 2.0])
        assert not model.is_newtonian

    def test_power_shift(self):
        """Test μ = ν(1 + s)^(1/2) for d = 3."""
        model = ViscosityModel(family="power_shift", nu=1.0, d=3.0)
        assert_allclose(model.mu(3.0), 2.0)
        assert_allclose(model.mu_dot(3.0), 0.25)
        assert model.mu0 == pytest.approx(1.0)

    def test_negative_argument(self):
        """Test that s < 0 is outside the domain."""
        with pytest.raises(DomainError):
            ViscosityModel().evaluate(-1.0)

    def test_viscosity_eval(self):
        """Test the functional form returns (μ, μ̇)."""
        mu, mu_dot = viscosity_eval(ViscosityModel(family="power_shift", d=4.0), 1.0)
        assert float(mu) == pytest.approx(2.0)
        assert float(mu_dot) == pytest.approx(1.0)

    @pytest.mark.parametrize("d", [3.0, 5.0, 7.5])
    def test_power_sum_inadmissible_exponents(self, d: float):
        """Test that power_sum rejects exponents without C³ regularity at zero."""
        with pytest.raises(ConfigurationError):
            ViscosityModel(family="power_sum", d=d)

    @pytest.mark.parametrize("d", [2.0, 4.0, 6.0, 8.0, 9.5])
    def test_power_sum_admissible_exponents(self, d: float):
        """Test the admitted power_sum exponents."""
        assert ViscosityModel(family="power_sum", d=d).admission_errors() == []

    def test_power_shift_exponent_bound(self):
        """Test that power_shift needs d ≥ 1."""
        with pytest.raises(ConfigurationError):
            ViscosityModel(family="power_shift", d=0.5)

    def test_unknown_family(self):
        """Test that unknown families are named in the error."""
        with pytest.raises(ConfigurationError, match="family"):
            ViscosityModel(family="bingham")

    def test_table_requires_samples(self):
        """Test that the table family needs both sample lists."""
        with pytest.raises(ConfigurationError):
            ViscosityModel(family="table")

    def test_table_must_start_at_zero(self):
        """Test the table abscissa rule."""
        with pytest.raises(ConfigurationError):
            ViscosityModel(family="table", table_s=(0.5, 1.0, 2.0, 3.0), table_mu=(1.0, 1.0, 1.0, 1.0))

    def test_table_spline(self, caplog: pytest.LogCaptureFixture):
        """Test that a tabulated linear law is reproduced and a warning is logged."""
        with caplog.at_level(logging.WARNING):
            model = ViscosityModel(
                family="table", table_s=(0.0, 1.0, 2.0, 3.0, 4.0), table_mu=(1.0, 2.0, 3.0, 4.0, 5.0)
            )
        assert "C³" in caplog.text
        assert_allclose(model.mu(0.5), 1.5)
        assert_allclose(model.mu_dot(2.5), 1.0)

    def test_dict_round_trip(self):
        """Test to_dict/from_dict for a tabulated model."""
        model = ViscosityModel(family="table", table_s=(0.0, 1.0, 2.0, 3.0), table_mu=(1.0, 1.5, 2.5, 4.0))
        assert ViscosityModel.from_dict(model.to_dict()) == model

    @settings(max_examples=40, deadline=None)
    @given(
        d=st.floats(min_value=1.0, max_value=10.0),
        s=st.floats(min_value=0.0, max_value=10.0),
    )
    def test_power_shift_derivative_consistency(self, d: float, s: float):
        """Test μ̇ against a central difference of μ."""
        model = ViscosityModel(family="power_shift", nu=1.0, d=d)
        step = 1e-6
        lo = max(s - step, 0.0)
        numeric = (float(model.mu(s + step)) - float(model.mu(lo))) / (s + step - lo)
        assert float(model.mu_dot(s)) == pytest.approx(numeric, rel=1e-4, abs=1e-6)


class TestPhasePair:
    """Test PhasePair dataclass."""

    def test_accessors(self, newtonian_phases: PhasePair):
        """Test per-phase material lookups."""
        assert newtonian_phases.density(LOWER) == 2.0
        assert newtonian_phases.density(UPPER) == 1.0
        assert newtonian_phases.jump_rho == -1.0
        assert newtonian_phases.mu0 == (1.5, 1.0)
        assert newtonian_phases.is_newtonian

    def test_invalid_constants(self):
        """Test that every material violation is reported."""
        with pytest.raises(ConfigurationError) as err:
            PhasePair(rho1=0.0, rho2=-1.0, sigma=0.0, gamma_a=-1.0)
        assert len(err.value.errors) == 4

    def test_piecewise(self, grid: StripGrid, newtonian_phases: PhasePair):
        """Test χ₁a₁ + χ₂a₂."""
        field = newtonian_phases.piecewise(grid, newtonian_phases.rho)
        assert_allclose(field.jump(), -1.0)

    def test_dict_round_trip(self, shear_thickening_phases: PhasePair):
        """Test to_dict/from_dict."""
        assert PhasePair.from_dict(shear_thickening_phases.to_dict()) == shear_thickening_phases


class TestViscousOperators:
    """Test the coefficient tensor and the stress divergence."""

    def test_zero_shear_operator(self):
        """Test A(0)v = −μ(0)(Δv + ∇div v)."""
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(2, 2, 2))
        hessian = 0.5 * (raw + np.swapaxes(raw, 0, 1))
        model = ViscosityModel(family="power_shift", nu=1.3, d=4.0)
        result = stress_divergence(model, np.zeros((2, 2)), hessian)
        laplacian = np.einsum("jji->i", hessian)
        grad_div = np.einsum("ijj->i", hessian)
        assert_allclose(result, -1.3 * (laplacian + grad_div))

    def test_matches_divergence_of_stress(self):
        """Test A(u)u = −div{2μ(|D|²)D} against central differences of the flux."""
        model = ViscosityModel(family="power_shift", nu=1.0, d=4.0)
        x, y, step = 0.3, 0.7, 1e-5
        result = stress_divergence(model, _deformation(x, y), _hessian(x, y))
        d_dx = (viscous_flux(model, _deformation(x + step, y)) - viscous_flux(model, _deformation(x - step, y))) / (
            2 * step
        )
        d_dy = (viscous_flux(model, _deformation(x, y + step)) - viscous_flux(model, _deformation(x, y - step))) / (
            2 * step
        )
        divergence = d_dx[:, 0] + d_dy[:, 1]
        assert_allclose(result, -divergence, atol=1e-7)

    def test_a_tensor_newtonian(self):
        """Test A = ½μδδ for a Newtonian law."""
        model = ViscosityModel(family="newtonian", nu=2.0)
        coefficients = a_tensor(model, np.ones((3, 3)))
        assert coefficients.shape == (3, 3, 3, 3)
        assert coefficients[0, 1, 0, 1] == pytest.approx(1.0)
        assert coefficients[0, 1, 1, 0] == pytest.approx(0.0)
