"""Viscosity laws, phase material data and the quasilinear stress operator.

A generalized Newtonian phase has the Cauchy stress −πI + 2μ(|D|²)D with
|D|² = Σ_ij D_ij² (Frobenius, no Voigt weighting). Admitted families:

- power-sum:    μ(s) = ν(1 + s^((d−2)/2)) for d ∈ {2, 4, 6} or d ≥ 8 (C³ at s = 0)
- power-shift:  μ(s) = ν(1 + s)^((d−2)/2) for d ≥ 1
- newtonian:    μ(s) = ν
- table:        cubic spline through user samples (C³ not enforced)

The divergence of the viscous stress is written with the coefficient tensor

    A_i^{jkl}(D) = ½(2μ̇(|D|²) D_ij D_kl + μ(|D|²) δ_ik δ_jl)

as −div{2μ(|D(u)|²)D(u)} = −2 Σ A_i^{jkl}(D(u)) (∂_j∂_k u_l + ∂_j∂_l u_k).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.interpolate import CubicSpline

from .const import (
    CONF_EXPONENT,
    CONF_FAMILY,
    CONF_GAMMA_A,
    CONF_NU,
    CONF_PHASE1,
    CONF_PHASE2,
    CONF_RHO,
    CONF_SIGMA,
    CONF_TABLE_MU,
    CONF_TABLE_S,
    CONF_VISCOSITY,
    DEFAULT_EXPONENT,
    DEFAULT_FAMILY,
    DEFAULT_GAMMA_A,
    DEFAULT_NU,
    DEFAULT_RHO,
    DEFAULT_SIGMA,
    FAMILY_NEWTONIAN,
    FAMILY_POWER_SHIFT,
    FAMILY_POWER_SUM,
    FAMILY_TABLE,
    POWER_SUM_CONTINUOUS_FROM,
    POWER_SUM_DISCRETE_EXPONENTS,
    VISCOSITY_FAMILIES,
)
from .exceptions import ConfigurationError, DomainError
from .grid import LOWER, StripGrid, TwoPhaseField

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ViscosityModel:
    """Viscosity law μ(s) of one phase, s = |D|² ≥ 0."""

    family: str = DEFAULT_FAMILY
    nu: float = DEFAULT_NU
    d: float = DEFAULT_EXPONENT
    table_s: tuple[float, ...] | None = None
    table_mu: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        """Check the admission rules of the family."""
        errors = self.admission_errors()
        if errors:
            raise ConfigurationError(errors)
        if self.family == FAMILY_TABLE:
            _LOGGER.warning("Tabulated viscosity: C³ regularity of the spline is not enforced")

    def admission_errors(self, prefix: str = "viscosity") -> list[str]:
        """List every violated admission rule (empty when admissible)."""
        errors: list[str] = []
        if self.family not in VISCOSITY_FAMILIES:
            return [f"{prefix}.family must be one of {VISCOSITY_FAMILIES} (got {self.family!r})"]
        if self.family == FAMILY_TABLE:
            if self.table_s is None or self.table_mu is None:
                return [f"{prefix}: table family needs table_s and table_mu"]
            s = np.asarray(self.table_s, dtype=float)
            mu = np.asarray(self.table_mu, dtype=float)
            if s.size != mu.size or s.size < 4:
                errors.append(f"{prefix}: table needs at least 4 matching (s, mu) samples")
            elif s[0] != 0.0 or np.any(np.diff(s) <= 0):
                errors.append(f"{prefix}: table_s must start at 0 and increase strictly")
            elif mu[0] <= 0:
                errors.append(f"{prefix}: mu(0) must be positive")
            return errors
        if not self.nu > 0:
            errors.append(f"{prefix}.nu must be positive (got {self.nu})")
        if self.family == FAMILY_POWER_SUM:
            if self.d not in POWER_SUM_DISCRETE_EXPONENTS and self.d < POWER_SUM_CONTINUOUS_FROM:
                errors.append(f"{prefix}: power_sum admits d in {{2, 4, 6}} or d >= 8 (got {self.d})")
        elif self.family == FAMILY_POWER_SHIFT and self.d < 1:
            errors.append(f"{prefix}: power_shift admits d >= 1 (got {self.d})")
        return errors

    @property
    def exponent(self) -> float:
        """(d − 2)/2."""
        return 0.5 * (self.d - 2.0)

    @property
    def is_newtonian(self) -> bool:
        """True when μ is constant."""
        if self.family == FAMILY_NEWTONIAN:
            return True
        return self.family in (FAMILY_POWER_SUM, FAMILY_POWER_SHIFT) and self.d == 2.0

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(np.asarray(self.table_s, dtype=float), np.asarray(self.table_mu, dtype=float))

    def evaluate(self, s: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Return (μ(s), μ̇(s)).

        Raises:
            DomainError: if any s is negative.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise DomainError(f"viscosity argument must be >= 0 (min {np.min(s):.3g})")
        e = self.exponent
        if self.family == FAMILY_NEWTONIAN:
            return np.full_like(s, self.nu), np.zeros_like(s)
        if self.family == FAMILY_TABLE:
            return self._spline(s), self._spline(s, 1)
        if self.family == FAMILY_POWER_SUM:
            mu = self.nu * (1.0 + np.power(s, e))
            mu_dot = np.zeros_like(s) if e == 0 else self.nu * e * np.power(s, e - 1.0)
            return mu, mu_dot
        base = 1.0 + s
        return self.nu * np.power(base, e), self.nu * e * np.power(base, e - 1.0)

    def mu(self, s: ArrayLike) -> NDArray[np.float64]:
        """μ(s)."""
        return self.evaluate(s)[0]

    def mu_dot(self, s: ArrayLike) -> NDArray[np.float64]:
        """μ̇(s) = dμ/ds."""
        return self.evaluate(s)[1]

    @property
    def mu0(self) -> float:
        """μ(0) > 0."""
        return float(self.mu(0.0))

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        result: dict[str, Any] = {CONF_FAMILY: self.family, CONF_NU: self.nu, CONF_EXPONENT: self.d}
        if self.table_s is not None:
            result[CONF_TABLE_S] = list(self.table_s)
        if self.table_mu is not None:
            result[CONF_TABLE_MU] = list(self.table_mu)
        return result

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ViscosityModel:
        """Create from dictionary."""
        table_s = data.get(CONF_TABLE_S)
        table_mu = data.get(CONF_TABLE_MU)
        return cls(
            family=data.get(CONF_FAMILY, DEFAULT_FAMILY),
            nu=float(data.get(CONF_NU, DEFAULT_NU)),
            d=float(data.get(CONF_EXPONENT, DEFAULT_EXPONENT)),
            table_s=tuple(float(v) for v in table_s) if table_s is not None else None,
            table_mu=tuple(float(v) for v in table_mu) if table_mu is not None else None,
        )


def viscosity_eval(model: ViscosityModel, s: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(μ(s), μ̇(s)) for one model."""
    return model.evaluate(s)


@dataclass(frozen=True)
class PhasePair:
    """Material data of both fluids: phase 1 below the interface, phase 2 above."""

    rho1: float = DEFAULT_RHO
    rho2: float = DEFAULT_RHO
    model1: ViscosityModel = field(default_factory=ViscosityModel)
    model2: ViscosityModel = field(default_factory=ViscosityModel)
    sigma: float = DEFAULT_SIGMA
    gamma_a: float = DEFAULT_GAMMA_A

    def __post_init__(self) -> None:
        """Check positivity of the material constants."""
        errors = []
        if not self.rho1 > 0:
            errors.append(f"phases.phase1.rho must be positive (got {self.rho1})")
        if not self.rho2 > 0:
            errors.append(f"phases.phase2.rho must be positive (got {self.rho2})")
        if not self.sigma > 0:
            errors.append(f"phases.sigma must be positive (got {self.sigma})")
        if not self.gamma_a >= 0:
            errors.append(f"phases.gamma_a must be >= 0 (got {self.gamma_a})")
        if errors:
            raise ConfigurationError(errors)

    @property
    def rho(self) -> tuple[float, float]:
        """(ρ₁, ρ₂)."""
        return self.rho1, self.rho2

    @property
    def models(self) -> tuple[ViscosityModel, ViscosityModel]:
        """(model₁, model₂)."""
        return self.model1, self.model2

    @property
    def jump_rho(self) -> float:
        """⟦ρ⟧ = ρ₂ − ρ₁."""
        return self.rho2 - self.rho1

    @property
    def mu0(self) -> tuple[float, float]:
        """(μ₁(0), μ₂(0)), the viscosities frozen into the linear problem."""
        return self.model1.mu0, self.model2.mu0

    @property
    def is_newtonian(self) -> bool:
        """True when both phases have constant viscosity."""
        return self.model1.is_newtonian and self.model2.is_newtonian

    def model(self, phase: int) -> ViscosityModel:
        """Viscosity model of a phase index."""
        return self.model1 if phase == LOWER else self.model2

    def density(self, phase: int) -> float:
        """Density of a phase index."""
        return self.rho1 if phase == LOWER else self.rho2

    def piecewise(self, grid: StripGrid, values: tuple[float, float]) -> TwoPhaseField:
        """χ₁a₁ + χ₂a₂ as a scalar field."""
        return TwoPhaseField(np.full(grid.block_shape, values[0]), np.full(grid.block_shape, values[1]), grid)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            CONF_PHASE1: {CONF_RHO: self.rho1, CONF_VISCOSITY: self.model1.to_dict()},
            CONF_PHASE2: {CONF_RHO: self.rho2, CONF_VISCOSITY: self.model2.to_dict()},
            CONF_SIGMA: self.sigma,
            CONF_GAMMA_A: self.gamma_a,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PhasePair:
        """Create from dictionary."""
        phase1 = data.get(CONF_PHASE1, {})
        phase2 = data.get(CONF_PHASE2, {})
        return cls(
            rho1=float(phase1.get(CONF_RHO, DEFAULT_RHO)),
            rho2=float(phase2.get(CONF_RHO, DEFAULT_RHO)),
            model1=ViscosityModel.from_dict(phase1.get(CONF_VISCOSITY, {})),
            model2=ViscosityModel.from_dict(phase2.get(CONF_VISCOSITY, {})),
            sigma=float(data.get(CONF_SIGMA, DEFAULT_SIGMA)),
            gamma_a=float(data.get(CONF_GAMMA_A, DEFAULT_GAMMA_A)),
        )


def a_tensor(model: ViscosityModel, deformation: NDArray[np.float64]) -> NDArray[np.float64]:
    """Coefficients A_i^{jkl}(D) indexed ``[i, j, k, l, ...]`` for a symmetric ``D[i, j, ...]``."""
    n = deformation.shape[0]
    s = np.sum(deformation**2, axis=(0, 1))
    mu, mu_dot = model.evaluate(s)
    eye = np.eye(n)
    delta = np.einsum("ik,jl->ijkl", eye, eye).reshape((n,) * 4 + (1,) * s.ndim)
    outer = np.einsum("ij...,kl...->ijkl...", deformation, deformation)
    return 0.5 * (2.0 * mu_dot * outer + mu * delta)


def contract_second_derivatives(coefficients: NDArray[np.float64], hessian: NDArray[np.float64]) -> NDArray[np.float64]:
    """Σ_jkl A_i^{jkl} (H_jkl + H_jlk) for ``hessian[j, k, l] = ∂_j∂_k v_l``."""
    symmetrized = hessian + np.swapaxes(hessian, 1, 2)
    return np.einsum("ijkl...,jkl...->i...", coefficients, symmetrized)


def stress_divergence(
    model: ViscosityModel, deformation: NDArray[np.float64], hessian: NDArray[np.float64]
) -> NDArray[np.float64]:
    """A(u)v = −2 Σ A_i^{jkl}(D(u))(∂_j∂_k v_l + ∂_j∂_l v_k).

    Args:
        model: Viscosity law of the phase.
        deformation: D(u), the frozen coefficient, shape ``(N, N, ...)``.
        hessian: Second derivatives of v, ``hessian[j, k, l] = ∂_j∂_k v_l``.

    Returns:
        The vector ``(N, ...)``. With v = u this is −div{2μ(|D(u)|²)D(u)}, and with D = 0 it is
        −μ(0)(Δv + ∇div v).
    """
    return -2.0 * contract_second_derivatives(a_tensor(model, deformation), hessian)


def viscous_flux(model: ViscosityModel, deformation: NDArray[np.float64]) -> NDArray[np.float64]:
    """2μ(|D|²)D, the viscous part of the stress."""
    s = np.sum(deformation**2, axis=(0, 1))
    return 2.0 * model.mu(s) * deformation
