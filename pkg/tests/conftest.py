"""Fixtures for two-phase flow tests."""

from __future__ import annotations

import numpy as np
import pytest

from twophase_flow.constitutive import PhasePair, ViscosityModel
from twophase_flow.geometry import HeightField
from twophase_flow.grid import StripGrid, TimeGrid, TwoPhaseField


@pytest.fixture
def grid() -> StripGrid:
    """Return a small 2D strip."""
    return StripGrid(dim=2, n_h=16, n_v=16, length_h=1.0, length_v=4.0)


@pytest.fixture
def grid3() -> StripGrid:
    """Return a small 3D strip."""
    return StripGrid(dim=3, n_h=8, n_v=10, length_h=1.0, length_v=4.0)


@pytest.fixture
def time_grid() -> TimeGrid:
    """Return a short time grid."""
    return TimeGrid(horizon=0.5, steps=5)


@pytest.fixture
def newtonian_phases() -> PhasePair:
    """Return two Newtonian fluids of different density and viscosity."""
    return PhasePair(
        rho1=2.0,
        rho2=1.0,
        model1=ViscosityModel(family="newtonian", nu=1.5),
        model2=ViscosityModel(family="newtonian", nu=1.0),
        sigma=1.0,
        gamma_a=1.0,
    )


@pytest.fixture
def shear_thickening_phases() -> PhasePair:
    """Return power-shift fluids with the same zero-shear viscosity."""
    model = ViscosityModel(family="power_shift", nu=1.0, d=4.0)
    return PhasePair(rho1=1.0, rho2=1.0, model1=model, model2=model, sigma=1.0, gamma_a=0.0)


@pytest.fixture
def sine_height(grid: StripGrid) -> HeightField:
    """Return a small sinusoidal interface."""
    return HeightField.from_function(grid, lambda x: 0.05 * np.sin(x))


@pytest.fixture
def smooth_velocity(grid: StripGrid) -> TwoPhaseField:
    """Return a smooth, continuous vector field decaying away from the interface."""

    def velocity(coords: tuple[np.ndarray, ...], phase: int) -> np.ndarray:
        x, z = coords
        envelope = np.exp(-(z**2))
        return np.stack([0.1 * np.cos(x) * envelope, 0.05 * np.sin(x) * envelope])

    return TwoPhaseField.from_function(grid, velocity, (2,))
