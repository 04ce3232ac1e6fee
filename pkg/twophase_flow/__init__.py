"""Two-phase free-boundary flow of generalized Newtonian fluids on a periodic strip.

The interface is flattened by a height function, the problem is split into a linear Stokes
part with frozen zero-shear viscosity and a nonlinear remainder, and the remainder is iterated
to a fixed point.
"""

from __future__ import annotations

from .config import RunConfig, build_initial_data, load_config, validate_config
from .const import DOMAIN, VERSION
from .constitutive import PhasePair, ViscosityModel, viscosity_eval
from .coordinator import (
    CompatibilityReport,
    ConvergenceReport,
    FixedPointCoordinator,
    SolveConfig,
    basin_probe,
    check_compatibility,
    picard_solve,
    pushforward_solution,
    smallness_probe,
)
from .exceptions import (
    ConfigurationError,
    DomainError,
    IncompatibleDataError,
    NormUndefinedError,
    SolverParameterError,
    TwoPhaseFlowError,
)
from .geometry import HeightField, pullback, pushforward
from .grid import StripGrid, TimeGrid, TwoPhaseField
from .models import DataF, StateZ
from .nonlinear import eval_N
from .norms import NormConfig, data_norm, norm_E_spaces, norm_F_spaces, state_norm
from .runner import RunManifest, export_series, read_series, run
from .stokes import LinearParams, LinearStokesSolver, solve_linear_evolution

__all__ = [
    "DOMAIN",
    "VERSION",
    "CompatibilityReport",
    "ConfigurationError",
    "ConvergenceReport",
    "DataF",
    "DomainError",
    "FixedPointCoordinator",
    "HeightField",
    "IncompatibleDataError",
    "LinearParams",
    "LinearStokesSolver",
    "NormConfig",
    "NormUndefinedError",
    "PhasePair",
    "RunConfig",
    "RunManifest",
    "SolveConfig",
    "SolverParameterError",
    "StateZ",
    "StripGrid",
    "TimeGrid",
    "TwoPhaseField",
    "TwoPhaseFlowError",
    "ViscosityModel",
    "basin_probe",
    "build_initial_data",
    "check_compatibility",
    "data_norm",
    "eval_N",
    "export_series",
    "load_config",
    "norm_E_spaces",
    "norm_F_spaces",
    "picard_solve",
    "pullback",
    "pushforward",
    "pushforward_solution",
    "read_series",
    "run",
    "smallness_probe",
    "solve_linear_evolution",
    "state_norm",
    "validate_config",
    "viscosity_eval",
]
