"""Run configuration: YAML loading, voluptuous schemas, cross-field rules and initial data."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import voluptuous as vol
import yaml

from .const import (
    CONF_AMPLITUDE,
    CONF_CADENCE,
    CONF_COMPAT_TOL,
    CONF_COS,
    CONF_DELTA0_GUARD,
    CONF_DIM,
    CONF_DIRECTORY,
    CONF_DIVERGENCE_PATIENCE,
    CONF_EXPONENT,
    CONF_FAMILY,
    CONF_FORMATS,
    CONF_GAMMA_A,
    CONF_GRID,
    CONF_HEIGHT,
    CONF_HORIZON,
    CONF_INITIAL,
    CONF_KIND,
    CONF_LENGTH_H,
    CONF_LENGTH_V,
    CONF_MAX_ITER,
    CONF_MODE,
    CONF_MODES,
    CONF_N_H,
    CONF_N_V,
    CONF_NORMS,
    CONF_NU,
    CONF_OUTPUT,
    CONF_P,
    CONF_PHASE1,
    CONF_PHASE2,
    CONF_PHASES,
    CONF_QUADRATURE,
    CONF_RHO,
    CONF_SIGMA,
    CONF_SIN,
    CONF_SOLVER,
    CONF_STEPS,
    CONF_TABLE_MU,
    CONF_TABLE_S,
    CONF_TIME,
    CONF_TOL,
    CONF_VELOCITY,
    CONF_VISCOSITY,
    CONF_WAVEVECTOR,
    CONF_WIDTH,
    DEFAULT_CADENCE,
    DEFAULT_COMPAT_TOL,
    DEFAULT_DELTA0_GUARD,
    DEFAULT_DIM,
    DEFAULT_DIRECTORY,
    DEFAULT_DIVERGENCE_PATIENCE,
    DEFAULT_EXPONENT,
    DEFAULT_FAMILY,
    DEFAULT_FORMATS,
    DEFAULT_GAMMA_A,
    DEFAULT_HORIZON,
    DEFAULT_LENGTH_H,
    DEFAULT_LENGTH_V,
    DEFAULT_MAX_ITER,
    DEFAULT_N_H,
    DEFAULT_N_V,
    DEFAULT_NU,
    DEFAULT_P,
    DEFAULT_QUADRATURE,
    DEFAULT_RHO,
    DEFAULT_SIGMA,
    DEFAULT_STEPS,
    DEFAULT_TOL,
    HEIGHT_KINDS,
    OUTPUT_FORMATS,
    QUADRATURE_RULES,
    VELOCITY_KINDS,
    VISCOSITY_FAMILIES,
)
from .constitutive import PhasePair, ViscosityModel
from .coordinator import SolveConfig
from .exceptions import ConfigurationError
from .geometry import HeightField, pullback_function
from .grid import StripGrid, TimeGrid, TwoPhaseField
from .norms import NormConfig

if TYPE_CHECKING:
    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)

_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
_NON_NEGATIVE = vol.All(vol.Coerce(float), vol.Range(min=0))


def _even(value: int) -> int:
    if value % 2:
        raise vol.Invalid("must be even")
    return value


GRID_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_DIM, default=DEFAULT_DIM): vol.All(vol.Coerce(int), vol.In([2, 3])),
        vol.Optional(CONF_N_H, default=DEFAULT_N_H): vol.All(vol.Coerce(int), vol.Range(min=8), _even),
        vol.Optional(CONF_N_V, default=DEFAULT_N_V): vol.All(vol.Coerce(int), vol.Range(min=8)),
        vol.Optional(CONF_LENGTH_H, default=DEFAULT_LENGTH_H): _POSITIVE,
        vol.Optional(CONF_LENGTH_V, default=DEFAULT_LENGTH_V): _POSITIVE,
    }
)

TIME_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_HORIZON, default=DEFAULT_HORIZON): _POSITIVE,
        vol.Optional(CONF_STEPS, default=DEFAULT_STEPS): vol.All(vol.Coerce(int), vol.Range(min=1)),
    }
)

VISCOSITY_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_FAMILY, default=DEFAULT_FAMILY): vol.In(VISCOSITY_FAMILIES),
        vol.Optional(CONF_NU, default=DEFAULT_NU): _POSITIVE,
        vol.Optional(CONF_EXPONENT, default=DEFAULT_EXPONENT): vol.Coerce(float),
        vol.Optional(CONF_TABLE_S): [vol.Coerce(float)],
        vol.Optional(CONF_TABLE_MU): [vol.Coerce(float)],
    }
)

PHASE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_RHO, default=DEFAULT_RHO): _POSITIVE,
        vol.Optional(CONF_VISCOSITY, default={}): VISCOSITY_SCHEMA,
    }
)

PHASES_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_PHASE1, default={}): PHASE_SCHEMA,
        vol.Optional(CONF_PHASE2, default={}): PHASE_SCHEMA,
        vol.Optional(CONF_SIGMA, default=DEFAULT_SIGMA): _POSITIVE,
        vol.Optional(CONF_GAMMA_A, default=DEFAULT_GAMMA_A): _NON_NEGATIVE,
    }
)

HEIGHT_MODE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_WAVEVECTOR): [vol.Coerce(int)],
        vol.Optional(CONF_COS, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_SIN, default=0.0): vol.Coerce(float),
    }
)

HEIGHT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_KIND, default="zero"): vol.In(HEIGHT_KINDS),
        vol.Optional(CONF_AMPLITUDE, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_MODE, default=1): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_MODES, default=[]): [HEIGHT_MODE_SCHEMA],
    }
)

STREAM_MODE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_WAVEVECTOR): [vol.Coerce(int)],
        vol.Optional(CONF_AMPLITUDE, default=0.0): vol.Coerce(float),
        vol.Optional(CONF_WIDTH, default=1.0): _POSITIVE,
    }
)

VELOCITY_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_KIND, default="zero"): vol.In(VELOCITY_KINDS),
        vol.Optional(CONF_MODES, default=[]): [STREAM_MODE_SCHEMA],
    }
)

INITIAL_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_HEIGHT, default={}): HEIGHT_SCHEMA,
        vol.Optional(CONF_VELOCITY, default={}): VELOCITY_SCHEMA,
    }
)

SOLVER_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_MAX_ITER, default=DEFAULT_MAX_ITER): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_TOL, default=DEFAULT_TOL): _POSITIVE,
        vol.Optional(CONF_DELTA0_GUARD, default=DEFAULT_DELTA0_GUARD): _POSITIVE,
        vol.Optional(CONF_COMPAT_TOL, default=DEFAULT_COMPAT_TOL): _POSITIVE,
        vol.Optional(CONF_DIVERGENCE_PATIENCE, default=DEFAULT_DIVERGENCE_PATIENCE): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
    }
)

NORMS_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_P, default=DEFAULT_P): vol.Coerce(float),
        vol.Optional(CONF_QUADRATURE, default=DEFAULT_QUADRATURE): vol.In(QUADRATURE_RULES),
    }
)

OUTPUT_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_DIRECTORY, default=DEFAULT_DIRECTORY): str,
        vol.Optional(CONF_CADENCE, default=DEFAULT_CADENCE): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_FORMATS, default=list(DEFAULT_FORMATS)): [vol.In(OUTPUT_FORMATS)],
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_GRID, default={}): GRID_SCHEMA,
        vol.Optional(CONF_TIME, default={}): TIME_SCHEMA,
        vol.Optional(CONF_PHASES, default={}): PHASES_SCHEMA,
        vol.Optional(CONF_INITIAL, default={}): INITIAL_SCHEMA,
        vol.Optional(CONF_SOLVER, default={}): SOLVER_SCHEMA,
        vol.Optional(CONF_NORMS, default={}): NORMS_SCHEMA,
        vol.Optional(CONF_OUTPUT, default={}): OUTPUT_SCHEMA,
    }
)


@dataclass(frozen=True)
class OutputConfig:
    """Where and what to write."""

    directory: str = DEFAULT_DIRECTORY
    cadence: int = DEFAULT_CADENCE
    formats: tuple[str, ...] = tuple(DEFAULT_FORMATS)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {CONF_DIRECTORY: self.directory, CONF_CADENCE: self.cadence, CONF_FORMATS: list(self.formats)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OutputConfig:
        """Create from dictionary."""
        return cls(
            directory=str(data.get(CONF_DIRECTORY, DEFAULT_DIRECTORY)),
            cadence=int(data.get(CONF_CADENCE, DEFAULT_CADENCE)),
            formats=tuple(data.get(CONF_FORMATS, DEFAULT_FORMATS)),
        )


@dataclass(frozen=True)
class RunConfig:
    """Validated run description."""

    grid: StripGrid
    time: TimeGrid
    phases: PhasePair
    initial: dict[str, Any] = field(hash=False)
    solver: SolveConfig
    norms: NormConfig
    output: OutputConfig

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            CONF_GRID: self.grid.to_dict(),
            CONF_TIME: self.time.to_dict(),
            CONF_PHASES: self.phases.to_dict(),
            CONF_INITIAL: copy.deepcopy(self.initial),
            CONF_SOLVER: self.solver.to_dict(),
            CONF_NORMS: self.norms.to_dict(),
            CONF_OUTPUT: self.output.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        """Validate and create from dictionary."""
        return validate_config(data)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def initial_data(self) -> tuple[TwoPhaseField, NDArray[np.float64]]:
        """Sample (u₀, h₀) on the grid."""
        return build_initial_data(self.grid, self.initial)


def _format_path(path: list[Any]) -> str:
    return ".".join(str(part) for part in path)


def _mode_phase(grid: StripGrid, wavevector: list[int], x_prime: tuple[NDArray[np.float64], ...]) -> NDArray[np.float64]:
    return sum(k * x / grid.length_h for k, x in zip(wavevector, x_prime, strict=True))


def height_values(grid: StripGrid, section: dict[str, Any]) -> NDArray[np.float64]:
    """Sample the configured h₀ on the torus (no strip check)."""
    mesh = grid.horizontal_mesh()
    kind = section.get(CONF_KIND, "zero")
    values = np.zeros(grid.horizontal_shape)
    if kind in ("sine", "cosine"):
        argument = section.get(CONF_MODE, 1) * mesh[0] / grid.length_h
        wave = np.sin(argument) if kind == "sine" else np.cos(argument)
        values = section.get(CONF_AMPLITUDE, 0.0) * wave
    elif kind == "modes":
        for mode in section.get(CONF_MODES, []):
            phase = _mode_phase(grid, mode[CONF_WAVEVECTOR], mesh)
            values = values + mode.get(CONF_COS, 0.0) * np.cos(phase) + mode.get(CONF_SIN, 0.0) * np.sin(phase)
    return np.asarray(values, dtype=float)


def stream_velocity(grid: StripGrid, modes: list[dict[str, Any]], h: HeightField) -> TwoPhaseField:
    """Pull back the divergence-free field of ψ = Σ A sin(k·x′) exp(−x_N²/w²), shared by both fluids.

    For each mode v′ = k̂ ∂_Nψ and v_N = −k̂·∇′ψ.
    """
    n = grid.dim

    def velocity(coords: tuple[NDArray[np.float64], ...], phase: int) -> NDArray[np.float64]:
        x_prime, x_n = coords[:-1], coords[-1]
        total = [np.zeros(np.broadcast(*coords).shape) for _ in range(n)]
        for mode in modes:
            k = np.asarray(mode[CONF_WAVEVECTOR], dtype=float) / grid.length_h
            magnitude = float(np.linalg.norm(k))
            if magnitude == 0.0:
                continue
            direction = k / magnitude
            amplitude, width = mode.get(CONF_AMPLITUDE, 0.0), mode.get(CONF_WIDTH, 1.0)
            phase_arg = sum(kj * xj for kj, xj in zip(k, x_prime, strict=True))
            envelope = np.exp(-(x_n**2) / width**2)
            d_envelope = -2.0 * x_n / width**2 * envelope
            for j in range(n - 1):
                total[j] = total[j] + amplitude * direction[j] * np.sin(phase_arg) * d_envelope
            total[n - 1] = total[n - 1] - amplitude * magnitude * np.cos(phase_arg) * envelope
        return np.stack(total)

    return pullback_function(velocity, h, (n,))


def build_initial_data(grid: StripGrid, initial: dict[str, Any]) -> tuple[TwoPhaseField, NDArray[np.float64]]:
    """(u₀, h₀) from the validated ``initial`` section."""
    h0 = HeightField(height_values(grid, initial.get(CONF_HEIGHT, {})), grid)
    velocity = initial.get(CONF_VELOCITY, {})
    if velocity.get(CONF_KIND, "zero") == "stream_modes":
        u0 = stream_velocity(grid, velocity.get(CONF_MODES, []), h0)
    else:
        u0 = TwoPhaseField.zeros(grid, (grid.dim,))
    return u0, h0.values


def _cross_field_errors(data: dict[str, Any]) -> list[str]:
    """Rules spanning several sections; assumes the schema passed."""
    errors: list[str] = []
    dim = data[CONF_GRID][CONF_DIM]
    try:
        NormConfig.from_dict(data[CONF_NORMS], dim=dim)
    except ConfigurationError as err:
        errors.extend(err.errors)
    for name in (CONF_PHASE1, CONF_PHASE2):
        viscosity = data[CONF_PHASES][name][CONF_VISCOSITY]
        try:
            ViscosityModel.from_dict(viscosity)
        except ConfigurationError as err:
            errors.extend(f"phases.{name}.{error}" for error in err.errors)
    initial = data[CONF_INITIAL]
    for section in (CONF_HEIGHT, CONF_VELOCITY):
        for index, mode in enumerate(initial[section][CONF_MODES]):
            if len(mode[CONF_WAVEVECTOR]) != dim - 1:
                errors.append(f"initial.{section}.modes.{index}.k: needs {dim - 1} integer components")
    if not errors:
        grid = StripGrid.from_dict(data[CONF_GRID])
        h0 = height_values(grid, initial[CONF_HEIGHT])
        if np.max(np.abs(h0)) >= grid.length_v:
            errors.append(f"initial.height: max|h0| = {np.max(np.abs(h0)):g} must stay below L_v = {grid.length_v:g}")
    return errors


def validate_config(raw: dict[str, Any] | None) -> RunConfig:
    """Apply the schema and every cross-field rule, reporting all violations at once.

    Raises:
        ConfigurationError: with one entry per violated rule.
    """
    try:
        data = CONFIG_SCHEMA(raw or {})
    except vol.MultipleInvalid as err:
        raise ConfigurationError(
            [f"{_format_path(error.path)}: {error.msg}" for error in err.errors]
        ) from err
    errors = _cross_field_errors(data)
    if errors:
        raise ConfigurationError(errors)
    grid = StripGrid.from_dict(data[CONF_GRID])
    return RunConfig(
        grid=grid,
        time=TimeGrid.from_dict(data[CONF_TIME]),
        phases=PhasePair.from_dict(data[CONF_PHASES]),
        initial=data[CONF_INITIAL],
        solver=SolveConfig.from_dict(data[CONF_SOLVER]),
        norms=NormConfig.from_dict(data[CONF_NORMS], dim=grid.dim),
        output=OutputConfig.from_dict(data[CONF_OUTPUT]),
    )


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a YAML run description.

    Raises:
        ConfigurationError: if the file is missing, does not parse, or violates a rule.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError as err:
        raise ConfigurationError(f"config file not found: {path}") from err
    except yaml.YAMLError as err:
        raise ConfigurationError(f"cannot parse {path}: {err}") from err
    if raw is not None and not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    config = validate_config(raw)
    _LOGGER.info("Loaded config %s (hash %s)", path, config.config_hash()[:12])
    return config


def dump_config(config: RunConfig, path: str | Path) -> None:
    """Write the normalized config as YAML."""
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
