"""Discrete flattened domain: periodic strip, time grid and two-phase fields.

The flattened domain is the horizontal torus of period 2πL_h times the interval [-L_v, L_v],
split at ξ_N = 0 into a lower block (phase 1) and an upper block (phase 2). Each block carries
n_v uniform vertical nodes including both of its ends, so the interface node is stored twice and
the one-sided traces of a field stay independent.

Array layout is ``(components..., n_v, *horizontal)``. The vertical axis always sits at
``-dim`` and the horizontal axes are the trailing ``dim - 1`` axes, which lets interface arrays
``(components..., *horizontal)`` share the horizontal operators.

Horizontal derivatives are spectral. Vertical derivatives are second-order finite differences,
centered inside a block and one-sided at its ends, never across the interface.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import (
    CONF_DIM,
    CONF_HORIZON,
    CONF_LENGTH_H,
    CONF_LENGTH_V,
    CONF_N_H,
    CONF_N_V,
    CONF_STEPS,
    DEFAULT_DIM,
    DEFAULT_HORIZON,
    DEFAULT_LENGTH_H,
    DEFAULT_LENGTH_V,
    DEFAULT_N_H,
    DEFAULT_N_V,
    DEFAULT_STEPS,
)
from .exceptions import ConfigurationError

if TYPE_CHECKING:
    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)

LOWER = 0
UPPER = 1
PHASES = (LOWER, UPPER)


@dataclass(frozen=True)
class StripGrid:
    """Horizontally periodic, vertically truncated strip around a flat interface.

    Attributes:
        dim: Spatial dimension N (2 or 3).
        n_h: Points per horizontal direction (even, at least 8).
        n_v: Vertical nodes per phase block, both ends included (at least 8).
        length_h: L_h, the horizontal period divided by 2π.
        length_v: L_v, the vertical truncation height of each block.
    """

    dim: int = DEFAULT_DIM
    n_h: int = DEFAULT_N_H
    n_v: int = DEFAULT_N_V
    length_h: float = DEFAULT_LENGTH_H
    length_v: float = DEFAULT_LENGTH_V

    def __post_init__(self) -> None:
        """Validate the grid invariants."""
        errors = []
        if self.dim not in (2, 3):
            errors.append(f"grid.dim must be 2 or 3 (got {self.dim})")
        if self.n_h < 8 or self.n_h % 2:
            errors.append(f"grid.n_h must be even and >= 8 (got {self.n_h})")
        if self.n_v < 8:
            errors.append(f"grid.n_v must be >= 8 (got {self.n_v})")
        if not self.length_h > 0:
            errors.append(f"grid.length_h must be positive (got {self.length_h})")
        if not self.length_v > 0:
            errors.append(f"grid.length_v must be positive (got {self.length_v})")
        if errors:
            raise ConfigurationError(errors)

    @property
    def vertical_axis(self) -> int:
        """Axis index of ξ_N in block arrays."""
        return -self.dim

    @property
    def horizontal_axes(self) -> tuple[int, ...]:
        """Axis indices of ξ′ in block and interface arrays."""
        return tuple(range(-(self.dim - 1), 0))

    @property
    def horizontal_shape(self) -> tuple[int, ...]:
        """Shape of an interface (torus) array."""
        return (self.n_h,) * (self.dim - 1)

    @property
    def block_shape(self) -> tuple[int, ...]:
        """Shape of one phase block of a scalar field."""
        return (self.n_v, *self.horizontal_shape)

    @property
    def dx(self) -> float:
        """Horizontal spacing."""
        return 2.0 * np.pi * self.length_h / self.n_h

    @property
    def dz(self) -> float:
        """Vertical spacing inside a block."""
        return self.length_v / (self.n_v - 1)

    @property
    def torus_area(self) -> float:
        """Measure of the horizontal torus."""
        return float((2.0 * np.pi * self.length_h) ** (self.dim - 1))

    @property
    def interface_weight(self) -> float:
        """Quadrature weight of one torus point."""
        return float(self.dx ** (self.dim - 1))

    @cached_property
    def x_h(self) -> NDArray[np.float64]:
        """Horizontal coordinates along one direction."""
        return np.arange(self.n_h) * self.dx

    @cached_property
    def z_lower(self) -> NDArray[np.float64]:
        """Vertical nodes of the lower block, ending at ξ_N = 0."""
        return np.linspace(-self.length_v, 0.0, self.n_v)

    @cached_property
    def z_upper(self) -> NDArray[np.float64]:
        """Vertical nodes of the upper block, starting at ξ_N = 0."""
        return np.linspace(0.0, self.length_v, self.n_v)

    def z_nodes(self, phase: int) -> NDArray[np.float64]:
        """Vertical nodes of the given phase block."""
        return self.z_lower if phase == LOWER else self.z_upper

    @cached_property
    def vertical_weights(self) -> NDArray[np.float64]:
        """Trapezoid weights along one block."""
        weights = np.full(self.n_v, self.dz)
        weights[0] = weights[-1] = 0.5 * self.dz
        return weights

    @cached_property
    def wavenumbers(self) -> NDArray[np.float64]:
        """Horizontal wavenumbers k_j = j / L_h in FFT order."""
        return np.fft.fftfreq(self.n_h, 1.0 / self.n_h) / self.length_h

    def horizontal_mesh(self) -> tuple[NDArray[np.float64], ...]:
        """Coordinate arrays of the torus, each of ``horizontal_shape``."""
        return tuple(np.meshgrid(*([self.x_h] * (self.dim - 1)), indexing="ij"))

    def block_coordinates(self, phase: int) -> tuple[NDArray[np.float64], ...]:
        """Broadcastable coordinates (ξ′..., ξ_N) of a phase block.

        Each horizontal array has shape ``(1, *horizontal)`` and the vertical one
        ``(n_v, 1, ...)``, so that any expression of them broadcasts to ``block_shape``.
        """
        horizontal = tuple(x[np.newaxis] for x in self.horizontal_mesh())
        z = self.z_nodes(phase).reshape((self.n_v,) + (1,) * (self.dim - 1))
        return (*horizontal, z)

    def axis_wavenumbers(self, j: int, real: bool = True) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
        """Wavenumbers along horizontal direction ``j`` in (r)FFT layout and their Nyquist mask."""
        n = self.n_h
        last = real and j == self.dim - 2
        modes = np.fft.rfftfreq(n, 1.0 / n) if last else np.fft.fftfreq(n, 1.0 / n)
        return modes / self.length_h, np.isclose(np.abs(modes), n // 2)

    def spectral_shape(self) -> tuple[int, ...]:
        """Shape of the real-FFT spectrum of an interface array."""
        return (*((self.n_h,) * (self.dim - 2)), self.n_h // 2 + 1)

    def spectral_wavevectors(self) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
        """Wavevectors ``(dim - 1, *spectral_shape)`` of the real FFT and the Nyquist mask."""
        components = []
        nyquist = np.zeros(self.spectral_shape(), dtype=bool)
        for j in range(self.dim - 1):
            k, nyq = self.axis_wavenumbers(j)
            shape = [1] * (self.dim - 1)
            shape[j] = k.size
            components.append(np.broadcast_to(k.reshape(shape), self.spectral_shape()))
            nyquist |= np.broadcast_to(nyq.reshape(shape), self.spectral_shape())
        return np.stack(components), nyquist

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            CONF_DIM: self.dim,
            CONF_N_H: self.n_h,
            CONF_N_V: self.n_v,
            CONF_LENGTH_H: self.length_h,
            CONF_LENGTH_V: self.length_v,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StripGrid:
        """Create from dictionary."""
        return cls(
            dim=int(data.get(CONF_DIM, DEFAULT_DIM)),
            n_h=int(data.get(CONF_N_H, DEFAULT_N_H)),
            n_v=int(data.get(CONF_N_V, DEFAULT_N_V)),
            length_h=float(data.get(CONF_LENGTH_H, DEFAULT_LENGTH_H)),
            length_v=float(data.get(CONF_LENGTH_V, DEFAULT_LENGTH_V)),
        )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on J = (0, a)."""

    horizon: float = DEFAULT_HORIZON
    steps: int = DEFAULT_STEPS

    def __post_init__(self) -> None:
        """Validate the horizon and step count."""
        errors = []
        if not self.horizon > 0:
            errors.append(f"time.horizon must be positive (got {self.horizon})")
        if self.steps < 1:
            errors.append(f"time.steps must be >= 1 (got {self.steps})")
        if errors:
            raise ConfigurationError(errors)

    @property
    def dt(self) -> float:
        """Time step Δt = a / n_t."""
        return self.horizon / self.steps

    @property
    def n_nodes(self) -> int:
        """Number of time nodes, initial one included."""
        return self.steps + 1

    @cached_property
    def nodes(self) -> NDArray[np.float64]:
        """Time nodes t_0 = 0, ..., t_{n_t} = a."""
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {CONF_HORIZON: self.horizon, CONF_STEPS: self.steps}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TimeGrid:
        """Create from dictionary."""
        return cls(
            horizon=float(data.get(CONF_HORIZON, DEFAULT_HORIZON)),
            steps=int(data.get(CONF_STEPS, DEFAULT_STEPS)),
        )


def spectral_derivative(values: NDArray[np.float64], grid: StripGrid, j: int, order: int = 1) -> NDArray[np.float64]:
    """Differentiate along horizontal direction ``j`` (0-based) by FFT.

    Works on any array whose trailing axes are the torus. The Nyquist mode is dropped for odd
    orders so that the derivative of a real field stays real.
    """
    if not 0 <= j < grid.dim - 1:
        raise ConfigurationError(f"horizontal direction must lie in [0, {grid.dim - 2}] (got {j})")
    k, nyquist = grid.axis_wavenumbers(j)
    factor = (1j * k) ** order
    if order % 2:
        factor = np.where(nyquist, 0.0, factor)
    shape = [1] * (grid.dim - 1)
    shape[j] = k.size
    axes = grid.horizontal_axes
    spectrum = np.fft.rfftn(values, axes=axes)
    return np.fft.irfftn(spectrum * factor.reshape(shape), s=grid.horizontal_shape, axes=axes)


def vertical_derivative(values: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    """First ξ_N derivative of one block: centered inside, one-sided second order at the ends."""
    return np.gradient(values, grid.dz, axis=grid.vertical_axis, edge_order=2)


def vertical_second_derivative(values: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    """Second ξ_N derivative of one block, second order including the ends."""
    v = np.moveaxis(values, grid.vertical_axis, 0)
    out = np.empty_like(v)
    inv = 1.0 / grid.dz**2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) * inv
    return np.moveaxis(out, 0, grid.vertical_axis)


def dealias(values: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    """Apply the 2/3 rule in every horizontal direction."""
    axes = grid.horizontal_axes
    spectrum = np.fft.rfftn(values, axes=axes)
    keep = np.ones(grid.spectral_shape(), dtype=bool)
    for j in range(grid.dim - 1):
        k, _ = grid.axis_wavenumbers(j)
        shape = [1] * (grid.dim - 1)
        shape[j] = k.size
        keep &= (np.abs(k * grid.length_h) <= grid.n_h / 3.0).reshape(shape)
    return np.fft.irfftn(np.where(keep, spectrum, 0.0), s=grid.horizontal_shape, axes=axes)


@dataclass(frozen=True, eq=False)
class TwoPhaseField:
    """Field sampled on both phase blocks of a strip.

    ``lower`` holds phase 1 (ξ_N ≤ 0) and ``upper`` phase 2 (ξ_N ≥ 0). Leading axes before the
    block axes are components: none for scalars, ``(N,)`` for vectors, ``(N, N)`` for tensors.
    """

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    grid: StripGrid

    def __post_init__(self) -> None:
        """Check that both blocks conform to the grid."""
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.shape != upper.shape:
            raise ConfigurationError(f"phase blocks differ in shape: {lower.shape} vs {upper.shape}")
        if lower.ndim < self.grid.dim or lower.shape[-self.grid.dim :] != self.grid.block_shape:
            raise ConfigurationError(
                f"field of shape {lower.shape} does not conform to grid block {self.grid.block_shape}"
            )

    @property
    def rank(self) -> int:
        """Number of component axes (0 scalar, 1 vector, 2 tensor)."""
        return self.lower.ndim - self.grid.dim

    @property
    def components(self) -> tuple[int, ...]:
        """Shape of the component axes."""
        return self.lower.shape[: self.rank]

    @property
    def blocks(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Both blocks, lower first."""
        return self.lower, self.upper

    def block(self, phase: int) -> NDArray[np.float64]:
        """Block of the given phase."""
        return self.lower if phase == LOWER else self.upper

    @classmethod
    def zeros(cls, grid: StripGrid, components: tuple[int, ...] = ()) -> TwoPhaseField:
        """Zero field with the given component shape."""
        shape = (*components, *grid.block_shape)
        return cls(np.zeros(shape), np.zeros(shape), grid)

    @classmethod
    def from_function(
        cls,
        grid: StripGrid,
        func: Callable[[tuple[NDArray[np.float64], ...], int], Any],
        components: tuple[int, ...] = (),
    ) -> TwoPhaseField:
        """Sample ``func(coordinates, phase)`` on both blocks.

        ``coordinates`` is the tuple returned by :meth:`StripGrid.block_coordinates`.
        """
        blocks = []
        for phase in PHASES:
            values = np.asarray(func(grid.block_coordinates(phase), phase), dtype=float)
            blocks.append(np.broadcast_to(values, (*components, *grid.block_shape)).copy())
        return cls(blocks[0], blocks[1], grid)

    @classmethod
    def stack(cls, fields: Sequence[TwoPhaseField]) -> TwoPhaseField:
        """Stack fields along a new leading component axis."""
        grid = fields[0].grid
        return cls(np.stack([f.lower for f in fields]), np.stack([f.upper for f in fields]), grid)

    def map(self, func: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> TwoPhaseField:
        """Apply a block-wise operation to both phases."""
        return TwoPhaseField(func(self.lower), func(self.upper), self.grid)

    def map_phases(self, func: Callable[[NDArray[np.float64], int], NDArray[np.float64]]) -> TwoPhaseField:
        """Apply a block-wise operation that also receives the phase index."""
        return TwoPhaseField(func(self.lower, LOWER), func(self.upper, UPPER), self.grid)

    def __getitem__(self, index: Any) -> TwoPhaseField:
        """Component access, e.g. ``u[0]`` or ``E[i, j]``."""
        return TwoPhaseField(self.lower[index], self.upper[index], self.grid)

    def __add__(self, other: TwoPhaseField | float) -> TwoPhaseField:
        if isinstance(other, TwoPhaseField):
            return TwoPhaseField(self.lower + other.lower, self.upper + other.upper, self.grid)
        return TwoPhaseField(self.lower + other, self.upper + other, self.grid)

    __radd__ = __add__

    def __sub__(self, other: TwoPhaseField | float) -> TwoPhaseField:
        return self + (-other)

    def __neg__(self) -> TwoPhaseField:
        return TwoPhaseField(-self.lower, -self.upper, self.grid)

    def __mul__(self, other: TwoPhaseField | float) -> TwoPhaseField:
        if isinstance(other, TwoPhaseField):
            return TwoPhaseField(self.lower * other.lower, self.upper * other.upper, self.grid)
        return TwoPhaseField(self.lower * other, self.upper * other, self.grid)

    __rmul__ = __mul__

    def trace_lower(self) -> NDArray[np.float64]:
        """One-sided trace at ξ_N = 0⁻."""
        return np.take(self.lower, -1, axis=self.grid.vertical_axis)

    def trace_upper(self) -> NDArray[np.float64]:
        """One-sided trace at ξ_N = 0⁺."""
        return np.take(self.upper, 0, axis=self.grid.vertical_axis)

    def jump(self) -> NDArray[np.float64]:
        """⟦f⟧ = trace_upper − trace_lower (phase 2 minus phase 1)."""
        return self.trace_upper() - self.trace_lower()

    def max_abs(self) -> float:
        """Maximum absolute value over both blocks."""
        return float(max(np.max(np.abs(self.lower)), np.max(np.abs(self.upper))))


@dataclass(frozen=True, eq=False)
class SpectralProfiles:
    """Per-wavenumber vertical profiles of a two-phase field (orthonormal FFT in ξ′)."""

    lower: NDArray[np.complex128]
    upper: NDArray[np.complex128]
    grid: StripGrid

    def energy(self) -> float:
        """Σ|f̂|² over both blocks, equal to Σ|f|² by Parseval."""
        return float(np.sum(np.abs(self.lower) ** 2) + np.sum(np.abs(self.upper) ** 2))


def horizontal_spectrum(field: TwoPhaseField) -> SpectralProfiles:
    """Orthonormal discrete Fourier transform in ξ′ of both blocks."""
    axes = field.grid.horizontal_axes
    return SpectralProfiles(
        np.fft.fftn(field.lower, axes=axes, norm="ortho"),
        np.fft.fftn(field.upper, axes=axes, norm="ortho"),
        field.grid,
    )


def inverse_horizontal_spectrum(profiles: SpectralProfiles) -> TwoPhaseField:
    """Inverse of :func:`horizontal_spectrum`, keeping the real part."""
    axes = profiles.grid.horizontal_axes
    return TwoPhaseField(
        np.fft.ifftn(profiles.lower, axes=axes, norm="ortho").real,
        np.fft.ifftn(profiles.upper, axes=axes, norm="ortho").real,
        profiles.grid,
    )


def d_horizontal(field: TwoPhaseField, j: int, order: int = 1) -> TwoPhaseField:
    """Spectral derivative D_j of both blocks (``j`` is 0-based, below ``dim - 1``)."""
    return field.map(lambda block: spectral_derivative(block, field.grid, j, order))


def d_vertical(field: TwoPhaseField) -> TwoPhaseField:
    """D_N of both blocks, one-sided at the interface."""
    return field.map(lambda block: vertical_derivative(block, field.grid))


def d2_vertical(field: TwoPhaseField) -> TwoPhaseField:
    """D_N² of both blocks, one-sided at the interface."""
    return field.map(lambda block: vertical_second_derivative(block, field.grid))


def d_direction(field: TwoPhaseField, j: int) -> TwoPhaseField:
    """D_j for any 0-based direction, the last one being ξ_N."""
    if j == field.grid.dim - 1:
        return d_vertical(field)
    return d_horizontal(field, j)


def d_second(field: TwoPhaseField, j: int, k: int) -> TwoPhaseField:
    """Mixed second derivative D_jD_k for any pair of 0-based directions."""
    vertical = field.grid.dim - 1
    if j == vertical and k == vertical:
        return d2_vertical(field)
    if j == vertical or k == vertical:
        other = k if j == vertical else j
        return d_vertical(d_horizontal(field, other))
    if j == k:
        return d_horizontal(field, j, order=2)
    return d_horizontal(d_horizontal(field, j), k)


def dealias_field(field: TwoPhaseField) -> TwoPhaseField:
    """2/3-rule filter of both blocks."""
    return field.map(lambda block: dealias(block, field.grid))
