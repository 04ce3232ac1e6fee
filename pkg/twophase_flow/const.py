"""Constants for the two-phase flow simulator."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Final

DOMAIN: Final[str] = "twophase_flow"


def get_version() -> str:
    """Get version from manifest.json (single source of truth)."""
    manifest_path = Path(__file__).parent / "manifest.json"
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
            return manifest.get("version", "unknown")
    except (FileNotFoundError, json.JSONDecodeError):
        return "unknown"


# Version from manifest.json
VERSION: Final[str] = get_version()

# Environment variable overriding the per-wavenumber worker count
ENV_THREADS: Final[str] = "TWOPHASE_FLOW_THREADS"

# Exit codes
EXIT_OK: Final[int] = 0
EXIT_DIVERGED: Final[int] = 2
EXIT_INCOMPATIBLE: Final[int] = 3
EXIT_CONFIG_ERROR: Final[int] = 4

# Picard statuses
STATUS_CONVERGED = "converged"
STATUS_DIVERGED = "diverged"
STATUS_MAX_ITER = "max_iter"

# Configuration sections
CONF_GRID = "grid"
CONF_TIME = "time"
CONF_PHASES = "phases"
CONF_INITIAL = "initial"
CONF_SOLVER = "solver"
CONF_NORMS = "norms"
CONF_OUTPUT = "output"

# Grid keys
CONF_DIM = "dim"  # N, spatial dimension
CONF_N_H = "n_h"  # horizontal points per direction
CONF_N_V = "n_v"  # vertical points per phase block
CONF_LENGTH_H = "length_h"  # L_h, horizontal period / 2π
CONF_LENGTH_V = "length_v"  # L_v, vertical truncation height

# Time keys
CONF_HORIZON = "horizon"  # a
CONF_STEPS = "steps"  # n_t

# Phase keys
CONF_PHASE1 = "phase1"  # lower fluid
CONF_PHASE2 = "phase2"  # upper fluid
CONF_RHO = "rho"
CONF_VISCOSITY = "viscosity"
CONF_FAMILY = "family"
CONF_NU = "nu"
CONF_EXPONENT = "d"
CONF_TABLE_S = "table_s"
CONF_TABLE_MU = "table_mu"
CONF_SIGMA = "sigma"
CONF_GAMMA_A = "gamma_a"

# Initial data keys
CONF_HEIGHT = "height"
CONF_VELOCITY = "velocity"
CONF_KIND = "kind"
CONF_AMPLITUDE = "amplitude"
CONF_MODE = "mode"
CONF_MODES = "modes"
CONF_WAVEVECTOR = "k"
CONF_COS = "cos"
CONF_SIN = "sin"
CONF_WIDTH = "width"

# Solver keys
CONF_MAX_ITER = "max_iter"
CONF_TOL = "tol"
CONF_DELTA0_GUARD = "delta0_guard"
CONF_COMPAT_TOL = "compat_tol"
CONF_DIVERGENCE_PATIENCE = "divergence_patience"

# Norm keys
CONF_P = "p"
CONF_QUADRATURE = "quadrature"

# Output keys
CONF_DIRECTORY = "directory"
CONF_CADENCE = "cadence"
CONF_FORMATS = "formats"

# Viscosity families
FAMILY_POWER_SUM = "power_sum"  # ν(1 + s^((d-2)/2))
FAMILY_POWER_SHIFT = "power_shift"  # ν(1 + s)^((d-2)/2)
FAMILY_NEWTONIAN = "newtonian"  # ν
FAMILY_TABLE = "table"  # cubic spline through (s, μ) samples

VISCOSITY_FAMILIES = [
    FAMILY_POWER_SUM,
    FAMILY_POWER_SHIFT,
    FAMILY_NEWTONIAN,
    FAMILY_TABLE,
]

# Power-sum exponents below this bound must be one of the listed even values (C³ at s = 0)
POWER_SUM_DISCRETE_EXPONENTS: Final[tuple[float, ...]] = (2.0, 4.0, 6.0)
POWER_SUM_CONTINUOUS_FROM: Final[float] = 8.0

# Initial data selectors
HEIGHT_KINDS = ["zero", "sine", "cosine", "modes"]
VELOCITY_KINDS = ["zero", "stream_modes"]

# Norm quadrature rules
QUADRATURE_MIDPOINT = "midpoint"  # cell averages, weight Δt each
QUADRATURE_TRAPEZOID = "trapezoid"  # node samples, weight Δt/2 at both ends
QUADRATURE_RULES = [QUADRATURE_MIDPOINT, QUADRATURE_TRAPEZOID]

# Output formats
FORMAT_CSV = "csv"
FORMAT_NPZ = "npz"
OUTPUT_FORMATS = [FORMAT_CSV, FORMAT_NPZ]

# Exportable series
SERIES_HEIGHT = "height"
SERIES_SPECTRUM = "spectrum"
SERIES_PRESSURE_JUMP = "pressure_jump"
SERIES_INTERFACE_RESIDUAL = "interface_residual"
EXPORTABLE_SERIES = [
    SERIES_HEIGHT,
    SERIES_SPECTRUM,
    SERIES_PRESSURE_JUMP,
    SERIES_INTERFACE_RESIDUAL,
]

# Artifact file names
TRAJECTORY_FILE = "trajectory.npz"
MANIFEST_FILE = "manifest.json"
CONVERGENCE_FILE = "convergence.json"
COMPATIBILITY_FILE = "compatibility.json"
NORMS_FILE = "norms.json"
CONFIG_ECHO_FILE = "config.yaml"

# Defaults
DEFAULT_DIM = 2
DEFAULT_N_H = 32
DEFAULT_N_V = 24
DEFAULT_LENGTH_H = 1.0
DEFAULT_LENGTH_V = 4.0
DEFAULT_HORIZON = 1.0
DEFAULT_STEPS = 20
DEFAULT_RHO = 1.0
DEFAULT_NU = 1.0
DEFAULT_EXPONENT = 2.0
DEFAULT_FAMILY = FAMILY_NEWTONIAN
DEFAULT_SIGMA = 1.0
DEFAULT_GAMMA_A = 0.0
DEFAULT_MAX_ITER = 30
DEFAULT_TOL = 1e-8
DEFAULT_DELTA0_GUARD = 1.0
DEFAULT_COMPAT_TOL = 1e-6
DEFAULT_DIVERGENCE_PATIENCE = 3
DEFAULT_P = 5.0
DEFAULT_QUADRATURE = QUADRATURE_MIDPOINT
DEFAULT_DIRECTORY = "runs/latest"
DEFAULT_CADENCE = 5
DEFAULT_FORMATS = [FORMAT_CSV]
DEFAULT_THREADS = 1

# p values excluded by the trace theory of the linear problem
EXCLUDED_P_VALUES: Final[tuple[float, ...]] = (1.5, 3.0)
