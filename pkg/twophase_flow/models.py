"""Space-time containers for trajectories and right-hand-side data.

A trajectory z = (u, θ, π, h) and a data tuple (F, f_d, G, g_h) are stored as whole time series
on a shared :class:`~twophase_flow.grid.TimeGrid`. Strip fields keep a leading time axis inside a
:class:`~twophase_flow.grid.TwoPhaseField`, so that ``u[n]`` is the velocity at node n and all
grid operators act on every node at once. Interface series are plain arrays ``(n_t + 1, ...)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from .exceptions import ConfigurationError
from .geometry import HeightField
from .grid import StripGrid, TimeGrid, TwoPhaseField

if TYPE_CHECKING:
    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)


def _check_series(name: str, array: NDArray[np.float64], expected: tuple[int, ...]) -> None:
    if array.shape != expected:
        raise ConfigurationError(f"{name} has shape {array.shape}, expected {expected}")


@dataclass(frozen=True, eq=False)
class StateZ:
    """Trajectory z = (u, θ, π, h) over the time grid.

    Attributes:
        velocity: u, components ``(n_t + 1, N)``.
        pressure: θ, the reduced pressure π + ρ γ_a x_N pulled back, components ``(n_t + 1,)``.
        pressure_jump: π = ⟦θ⟧ on the interface, shape ``(n_t + 1, *horizontal)``.
        height: h, shape ``(n_t + 1, *horizontal)``.
    """

    velocity: TwoPhaseField
    pressure: TwoPhaseField
    pressure_jump: NDArray[np.float64]
    height: NDArray[np.float64]
    time: TimeGrid

    def __post_init__(self) -> None:
        """Check that every series lives on the same grids."""
        grid = self.grid
        n = self.time.n_nodes
        if self.velocity.components != (n, grid.dim):
            raise ConfigurationError(f"velocity components {self.velocity.components} != {(n, grid.dim)}")
        if self.pressure.components != (n,):
            raise ConfigurationError(f"pressure components {self.pressure.components} != {(n,)}")
        _check_series("pressure_jump", self.pressure_jump, (n, *grid.horizontal_shape))
        _check_series("height", self.height, (n, *grid.horizontal_shape))

    @property
    def grid(self) -> StripGrid:
        """Spatial grid."""
        return self.velocity.grid

    @classmethod
    def zeros(cls, grid: StripGrid, time: TimeGrid) -> StateZ:
        """The zero trajectory."""
        n = time.n_nodes
        return cls(
            velocity=TwoPhaseField.zeros(grid, (n, grid.dim)),
            pressure=TwoPhaseField.zeros(grid, (n,)),
            pressure_jump=np.zeros((n, *grid.horizontal_shape)),
            height=np.zeros((n, *grid.horizontal_shape)),
            time=time,
        )

    def height_at(self, n: int) -> HeightField:
        """h at time node n."""
        return HeightField(self.height[n], self.grid)

    def __add__(self, other: StateZ) -> StateZ:
        return StateZ(
            velocity=self.velocity + other.velocity,
            pressure=self.pressure + other.pressure,
            pressure_jump=self.pressure_jump + other.pressure_jump,
            height=self.height + other.height,
            time=self.time,
        )

    def __mul__(self, factor: float) -> StateZ:
        return StateZ(
            velocity=self.velocity * factor,
            pressure=self.pressure * factor,
            pressure_jump=self.pressure_jump * factor,
            height=self.height * factor,
            time=self.time,
        )

    __rmul__ = __mul__

    def __sub__(self, other: StateZ) -> StateZ:
        return self + other * -1.0

    def max_abs(self) -> float:
        """Largest absolute entry over all components."""
        return float(
            max(
                self.velocity.max_abs(),
                self.pressure.max_abs(),
                np.max(np.abs(self.pressure_jump)),
                np.max(np.abs(self.height)),
            )
        )

    def coupling_defects(self) -> dict[str, float]:
        """max|⟦u⟧| and max|π − ⟦θ⟧| over all nodes."""
        return {
            "velocity_jump": float(np.max(np.abs(self.velocity.jump()))),
            "pressure_coupling": float(np.max(np.abs(self.pressure_jump - self.pressure.jump()))),
        }

    def to_arrays(self) -> dict[str, NDArray[np.float64]]:
        """Flat array dictionary for binary storage."""
        return {
            "time": self.time.nodes,
            "velocity_lower": self.velocity.lower,
            "velocity_upper": self.velocity.upper,
            "pressure_lower": self.pressure.lower,
            "pressure_upper": self.pressure.upper,
            "pressure_jump": self.pressure_jump,
            "height": self.height,
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, Any], grid: StripGrid, time: TimeGrid) -> StateZ:
        """Inverse of :meth:`to_arrays`."""
        return cls(
            velocity=TwoPhaseField(arrays["velocity_lower"], arrays["velocity_upper"], grid),
            pressure=TwoPhaseField(arrays["pressure_lower"], arrays["pressure_upper"], grid),
            pressure_jump=np.asarray(arrays["pressure_jump"], dtype=float),
            height=np.asarray(arrays["height"], dtype=float),
            time=time,
        )


@dataclass(frozen=True, eq=False)
class DataF:
    """Right-hand side (F, f_d, G, g_h) over the time grid.

    Attributes:
        force: F, components ``(n_t + 1, N)``.
        divergence: f_d, components ``(n_t + 1,)``.
        stress: G on the interface, shape ``(n_t + 1, N, *horizontal)``.
        kinematic: g_h on the interface, shape ``(n_t + 1, *horizontal)``.
        potential: optional φ with f_d = D_Nφ, components ``(n_t + 1,)``.
    """

    force: TwoPhaseField
    divergence: TwoPhaseField
    stress: NDArray[np.float64]
    kinematic: NDArray[np.float64]
    time: TimeGrid
    potential: TwoPhaseField | None = None

    def __post_init__(self) -> None:
        """Check that every series lives on the same grids."""
        grid = self.grid
        n = self.time.n_nodes
        if self.force.components != (n, grid.dim):
            raise ConfigurationError(f"force components {self.force.components} != {(n, grid.dim)}")
        if self.divergence.components != (n,):
            raise ConfigurationError(f"divergence components {self.divergence.components} != {(n,)}")
        if self.potential is not None and self.potential.components != (n,):
            raise ConfigurationError(f"potential components {self.potential.components} != {(n,)}")
        _check_series("stress", self.stress, (n, grid.dim, *grid.horizontal_shape))
        _check_series("kinematic", self.kinematic, (n, *grid.horizontal_shape))

    @property
    def grid(self) -> StripGrid:
        """Spatial grid."""
        return self.force.grid

    @classmethod
    def zeros(cls, grid: StripGrid, time: TimeGrid) -> DataF:
        """All-zero data, potential included."""
        n = time.n_nodes
        return cls(
            force=TwoPhaseField.zeros(grid, (n, grid.dim)),
            divergence=TwoPhaseField.zeros(grid, (n,)),
            stress=np.zeros((n, grid.dim, *grid.horizontal_shape)),
            kinematic=np.zeros((n, *grid.horizontal_shape)),
            time=time,
            potential=TwoPhaseField.zeros(grid, (n,)),
        )

    def __add__(self, other: DataF) -> DataF:
        potential = None
        if self.potential is not None and other.potential is not None:
            potential = self.potential + other.potential
        return DataF(
            force=self.force + other.force,
            divergence=self.divergence + other.divergence,
            stress=self.stress + other.stress,
            kinematic=self.kinematic + other.kinematic,
            time=self.time,
            potential=potential,
        )

    def __mul__(self, factor: float) -> DataF:
        return DataF(
            force=self.force * factor,
            divergence=self.divergence * factor,
            stress=self.stress * factor,
            kinematic=self.kinematic * factor,
            time=self.time,
            potential=None if self.potential is None else self.potential * factor,
        )

    __rmul__ = __mul__

    def max_abs(self) -> float:
        """Largest absolute entry over all components."""
        return float(
            max(
                self.force.max_abs(),
                self.divergence.max_abs(),
                np.max(np.abs(self.stress)),
                np.max(np.abs(self.kinematic)),
            )
        )
