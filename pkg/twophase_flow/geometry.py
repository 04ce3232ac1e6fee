"""Interface flattening and the geometric operators built on the height function.

The moving domain {x_N < h} ∪ {x_N > h} is mapped onto the fixed split strip by

    Θ(τ, ξ) = (τ, ξ′, ξ_N + h(τ, ξ′)),

whose Jacobian is unit lower-triangular. Derivatives of a physical field v transform as

    ∂_j v = D_j u − (D_j h) D_N u,        ∂_t v = ∂_τ u − (∂_τ h) D_N u,

with u = v ∘ Θ. Second derivatives pick up the correction 𝓕_jk(h), and the symmetric gradient
becomes E(u, h) = D_ξ(u) − ½(D_N u ⊗ g + g ⊗ D_N u) with g = (∇′h, 0).

Direction indices are 0-based; index ``dim - 1`` is the vertical one and D_N h = 0.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import ConfigurationError, DomainError
from .grid import (
    LOWER,
    PHASES,
    UPPER,
    StripGrid,
    TwoPhaseField,
    d_direction,
    d_second,
    d_vertical,
    dealias,
    spectral_derivative,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeometryJet:
    """Spectral derivatives of a height field up to second order."""

    gradient: NDArray[np.float64]  # (N-1, *horizontal)
    hessian: NDArray[np.float64]  # (N-1, N-1, *horizontal), symmetric

    @property
    def laplacian(self) -> NDArray[np.float64]:
        """Δ′h."""
        return np.einsum("jj...->...", self.hessian)

    @property
    def grad_sq(self) -> NDArray[np.float64]:
        """|∇′h|²."""
        return np.sum(self.gradient**2, axis=0)

    @property
    def metric(self) -> NDArray[np.float64]:
        """√(1 + |∇′h|²)."""
        return np.sqrt(1.0 + self.grad_sq)

    @cached_property
    def full_gradient(self) -> NDArray[np.float64]:
        """(∇′h, 0), shape (N, *horizontal)."""
        zero = np.zeros_like(self.gradient[:1])
        return np.concatenate([self.gradient, zero], axis=0)

    @cached_property
    def full_hessian(self) -> NDArray[np.float64]:
        """D_jD_k h padded with zeros in the vertical row and column, shape (N, N, *horizontal)."""
        n = self.gradient.shape[0] + 1
        out = np.zeros((n, n, *self.gradient.shape[1:]))
        out[:-1, :-1] = self.hessian
        return out


@dataclass(frozen=True, eq=False)
class HeightField:
    """Interface height h(x′) on the horizontal torus of a strip."""

    values: NDArray[np.float64]
    grid: StripGrid

    def __post_init__(self) -> None:
        """Check shape, finiteness and that the interface stays inside the strip."""
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.horizontal_shape:
            raise ConfigurationError(
                f"height of shape {values.shape} does not match torus {self.grid.horizontal_shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("height field must be finite")
        if np.max(np.abs(values)) >= self.grid.length_v:
            raise DomainError(
                f"interface leaves the strip: max|h| = {np.max(np.abs(values)):.6g} >= L_v = {self.grid.length_v:g}"
            )

    @classmethod
    def flat(cls, grid: StripGrid, level: float = 0.0) -> HeightField:
        """Constant height."""
        return cls(np.full(grid.horizontal_shape, float(level)), grid)

    @classmethod
    def from_function(cls, grid: StripGrid, func: Callable[..., Any]) -> HeightField:
        """Sample ``func(*x_prime)`` on the torus."""
        values = np.broadcast_to(np.asarray(func(*grid.horizontal_mesh()), dtype=float), grid.horizontal_shape)
        return cls(values.copy(), grid)

    @cached_property
    def jet(self) -> GeometryJet:
        """∇′h and the Hessian, computed spectrally."""
        n = self.grid.dim - 1
        gradient = np.stack([spectral_derivative(self.values, self.grid, j) for j in range(n)])
        hessian = np.empty((n, n, *self.grid.horizontal_shape))
        for j in range(n):
            hessian[j, j] = spectral_derivative(self.values, self.grid, j, order=2)
            for k in range(j + 1, n):
                hessian[j, k] = hessian[k, j] = spectral_derivative(gradient[j], self.grid, k)
        return GeometryJet(gradient=gradient, hessian=hessian)

    def at(self, x_prime: NDArray[np.float64]) -> NDArray[np.float64]:
        """Trigonometric interpolation of h at arbitrary points ``(N-1, m)``."""
        return trigonometric_interpolate(self.values, self.grid, x_prime)


def trigonometric_interpolate(values: NDArray[np.float64], grid: StripGrid, x_prime: NDArray[np.float64]) -> NDArray[np.float64]:
    """Evaluate the trigonometric interpolant of torus samples at points ``(N-1, m)``."""
    x_prime = np.atleast_2d(np.asarray(x_prime, dtype=float))
    coefficients = np.fft.fftn(values) / values.size
    k = np.meshgrid(*([grid.wavenumbers] * (grid.dim - 1)), indexing="ij")
    phase = sum(kj.reshape(-1, 1) * x_prime[j][np.newaxis] for j, kj in enumerate(k))
    return np.real(np.sum(coefficients.reshape(-1, 1) * np.exp(1j * phase), axis=0))


def _check_points(points: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    points = np.asarray(points, dtype=float)
    if points.shape[0] != grid.dim:
        raise ConfigurationError(f"points must have leading dimension {grid.dim} (got {points.shape[0]})")
    return points


def flatten_map(h: HeightField, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Θ: flattened points (ξ′, ξ_N) of shape (N, m) to physical points (ξ′, ξ_N + h(ξ′))."""
    points = _check_points(points, h.grid)
    if np.any(np.abs(points[-1]) > h.grid.length_v):
        raise DomainError("flattened point outside the strip")
    out = points.copy()
    out[-1] = points[-1] + h.at(points[:-1])
    return out


def inverse_map(h: HeightField, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Θ⁻¹: physical points (x′, x_N) to (x′, x_N − h(x′))."""
    points = _check_points(points, h.grid)
    out = points.copy()
    out[-1] = points[-1] - h.at(points[:-1])
    return out


def flatten_jacobian(h: HeightField, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Jacobian matrices ∂Θ/∂ξ at the given points, shape (m, N, N)."""
    points = _check_points(points, h.grid)
    n = h.grid.dim
    jac = np.broadcast_to(np.eye(n), (points.shape[1], n, n)).copy()
    for j in range(n - 1):
        jac[:, n - 1, j] = trigonometric_interpolate(h.jet.gradient[j], h.grid, points[:-1])
    return jac


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Field sampled in physical coordinates on vertical columns above the torus grid.

    Attributes:
        levels: Physical heights x_N, shape ``(n_levels, *horizontal)`` (or ``(n_levels,)`` shared
            by every column), ascending in each column.
        values: Samples, shape ``(*components, n_levels, *horizontal)``.
        phase: True where the sample lies in the upper fluid (x_N ≥ h).
    """

    levels: NDArray[np.float64]
    values: NDArray[np.float64]
    phase: NDArray[np.bool_]
    grid: StripGrid

    @property
    def column_levels(self) -> NDArray[np.float64]:
        """Levels broadcast to ``(n_levels, *horizontal)``."""
        levels = np.asarray(self.levels, dtype=float)
        if levels.ndim == 1:
            levels = levels.reshape((-1,) + (1,) * (self.grid.dim - 1))
        return np.broadcast_to(levels, self.phase.shape)

    @classmethod
    def from_function(
        cls,
        h: HeightField,
        levels: NDArray[np.float64],
        func: Callable[[tuple[NDArray[np.float64], ...], int], Any],
        components: tuple[int, ...] = (),
    ) -> PhysicalField:
        """Sample ``func(coordinates, phase)`` in physical coordinates, choosing the phase by x_N ≥ h."""
        grid = h.grid
        levels = np.asarray(levels, dtype=float)
        if levels.ndim == 1:
            levels = np.broadcast_to(levels.reshape((-1,) + (1,) * (grid.dim - 1)), (levels.size, *grid.horizontal_shape))
        phase = levels >= h.values[np.newaxis]
        coords = (*(x[np.newaxis] for x in grid.horizontal_mesh()), levels)
        shape = (*components, *levels.shape)
        lower = np.broadcast_to(np.asarray(func(coords, LOWER), dtype=float), shape)
        upper = np.broadcast_to(np.asarray(func(coords, UPPER), dtype=float), shape)
        return cls(levels=levels, values=np.where(phase, upper, lower), phase=phase, grid=grid)


def default_levels(h: HeightField, count: int | None = None) -> NDArray[np.float64]:
    """Physical levels that stay inside the strip above every column."""
    grid = h.grid
    count = count or 2 * grid.n_v - 1
    low = -grid.length_v + float(np.max(h.values))
    high = grid.length_v + float(np.min(h.values))
    return np.linspace(low, high, count)


def pushforward(u: TwoPhaseField, h: HeightField, levels: NDArray[np.float64] | None = None) -> PhysicalField:
    """Sample Θ_* u = u ∘ Θ⁻¹ at physical levels, one cubic spline per column and phase.

    Raises:
        DomainError: if some level maps outside [-L_v, L_v].
    """
    grid = u.grid
    levels = default_levels(h) if levels is None else np.asarray(levels, dtype=float)
    if levels.ndim == 1:
        levels = np.broadcast_to(levels.reshape((-1,) + (1,) * (grid.dim - 1)), (levels.size, *grid.horizontal_shape))
    xi = levels - h.values[np.newaxis]
    if np.any(np.abs(xi) > grid.length_v * (1.0 + 1e-12)):
        raise DomainError("push-forward level lies outside the strip")
    upper_side = xi >= 0.0
    rank = u.rank
    samples = []
    for phase in PHASES:
        z = grid.z_nodes(phase)
        y = np.moveaxis(u.block(phase), grid.vertical_axis, 0)  # (n_v, *comp, *horizontal)
        coefficients = CubicSpline(z, y, axis=0).c  # (4, n_v - 1, *comp, *horizontal)
        local = np.clip(xi, z[0], z[-1])
        index = np.clip(np.searchsorted(z, local, side="right") - 1, 0, z.size - 2)
        gather = index.reshape((1, index.shape[0]) + (1,) * rank + index.shape[1:])
        c = np.take_along_axis(coefficients, gather, axis=1)  # (4, n_levels, *comp, *horizontal)
        t = (local - z[index]).reshape((index.shape[0],) + (1,) * rank + index.shape[1:])
        values = ((c[0] * t + c[1]) * t + c[2]) * t + c[3]
        samples.append(np.moveaxis(values, 0, rank))
    mask = upper_side.reshape((1,) * rank + upper_side.shape)
    return PhysicalField(levels=levels, values=np.where(mask, samples[UPPER], samples[LOWER]), phase=upper_side, grid=grid)


def pullback(v: PhysicalField, h: HeightField) -> TwoPhaseField:
    """Θ* v = v ∘ Θ on both blocks, interpolating each column within its own phase only.

    Targets may lie less than one sample spacing beyond the phase's samples (the interface node
    always does); anything further raises.

    Raises:
        DomainError: if a target height is outside the sampled range of its phase.
    """
    grid = h.grid
    levels = v.column_levels
    n_levels = levels.shape[0]
    columns = int(np.prod(grid.horizontal_shape))
    components = v.values.shape[: v.values.ndim - grid.dim]
    rank = len(components)
    flat_levels = levels.reshape(n_levels, columns)
    flat_phase = v.phase.reshape(n_levels, columns)
    flat_values = v.values.reshape(*components, n_levels, columns)
    flat_h = h.values.reshape(columns)
    blocks = []
    for phase in PHASES:
        z = grid.z_nodes(phase)
        out = np.empty((*components, grid.n_v, columns))
        for col in range(columns):
            mask = flat_phase[:, col] if phase == UPPER else ~flat_phase[:, col]
            lev = flat_levels[mask, col]
            if lev.size < 2:
                raise DomainError(f"column {col} holds fewer than two samples of phase {phase + 1}")
            target = z + flat_h[col]
            reach = float(np.max(np.diff(lev))) * (1.0 + 1e-9)
            if target[0] < lev[0] - reach or target[-1] > lev[-1] + reach:
                raise DomainError(f"pull-back target outside sampled range in column {col}")
            spline = CubicSpline(lev, flat_values[..., mask, col], axis=rank)
            out[..., col] = spline(target)
        blocks.append(out.reshape(*components, *grid.block_shape))
    return TwoPhaseField(blocks[LOWER], blocks[UPPER], grid)


def pullback_function(func: Callable[[tuple[NDArray[np.float64], ...], int], Any], h: HeightField, components: tuple[int, ...] = ()) -> TwoPhaseField:
    """Exact pull-back of a callable ``func(physical_coordinates, phase)``."""
    grid = h.grid

    def flattened(coords: tuple[NDArray[np.float64], ...], phase: int) -> Any:
        lifted = coords[-1] + h.values[np.newaxis]
        return func((*coords[:-1], lifted), phase)

    return TwoPhaseField.from_function(grid, flattened, components)


def chain_rule_derivative(u: TwoPhaseField, h: HeightField, j: int) -> TwoPhaseField:
    """Pulled-back physical derivative ∂_j = D_j − (D_j h) D_N (0-based ``j``, vertical is ``dim - 1``)."""
    if not 0 <= j < u.grid.dim:
        raise ConfigurationError(f"direction must lie in [0, {u.grid.dim - 1}] (got {j})")
    if j == u.grid.dim - 1:
        return d_vertical(u)
    return d_direction(u, j) - d_vertical(u) * h.jet.gradient[j]


def time_chain_rule(du_dtau: TwoPhaseField, dh_dtau: NDArray[np.float64], u: TwoPhaseField) -> TwoPhaseField:
    """Pulled-back physical time derivative ∂_t = ∂_τ − (∂_τ h) D_N."""
    return du_dtau - d_vertical(u) * dh_dtau


def f_correction(h: HeightField, u: TwoPhaseField, j: int, k: int) -> TwoPhaseField:
    """𝓕_jk(h)u = (D_jD_kh)D_Nu + (D_jh)D_ND_ku + (D_kh)D_jD_Nu − (D_jh)(D_kh)D_N²u.

    With it, ∂_j∂_k v pulls back to D_jD_k u − 𝓕_jk(h)u.
    """
    grid = u.grid
    vertical = grid.dim - 1
    g = h.jet.full_gradient
    hess = h.jet.full_hessian
    result = d_vertical(u) * hess[j, k]
    if j != vertical:
        result = result + d_second(u, vertical, k) * g[j]
    if k != vertical:
        result = result + d_second(u, j, vertical) * g[k]
    if j != vertical and k != vertical:
        result = result - d_second(u, vertical, vertical) * (g[j] * g[k])
    return result


def velocity_gradient(u: TwoPhaseField) -> TwoPhaseField:
    """Flattened gradient tensor with entries [i, j] = D_j u_i."""
    derivatives = [d_direction(u, j) for j in range(u.grid.dim)]
    return TwoPhaseField(
        np.stack([d.lower for d in derivatives], axis=1),
        np.stack([d.upper for d in derivatives], axis=1),
        u.grid,
    )


def symmetric_part(gradient: TwoPhaseField) -> TwoPhaseField:
    """½(G + Gᵀ) of a rank-2 field."""
    return gradient.map(lambda block: 0.5 * (block + np.swapaxes(block, 0, 1)))


def transformed_deformation(u: TwoPhaseField, h: HeightField) -> TwoPhaseField:
    """E(u, h) = D_ξ(u) − ½(D_Nu ⊗ g + g ⊗ D_Nu), the pull-back of D_x(v)."""
    if u.rank != 1 or u.components[0] != u.grid.dim:
        raise ConfigurationError("transformed deformation needs a vector field")
    d_xi = symmetric_part(velocity_gradient(u))
    g = h.jet.full_gradient[:, np.newaxis]  # (N, 1, *horizontal) broadcasts over n_v
    dn_u = d_vertical(u)

    def correction(block: NDArray[np.float64]) -> NDArray[np.float64]:
        outer = block[:, np.newaxis] * g[np.newaxis]
        return 0.5 * (outer + np.swapaxes(outer, 0, 1))

    return d_xi - dn_u.map(correction)


def frobenius_sq(tensor: TwoPhaseField) -> TwoPhaseField:
    """|E|² = Σ_ij E_ij²."""
    return tensor.map(lambda block: np.sum(block**2, axis=(0, 1)))


@dataclass(frozen=True, eq=False)
class CurvatureSplit:
    """Δ′h, the nonlinear remainder 𝓗(h) and the mean curvature H_Γ = Δ′h − 𝓗(h)."""

    laplacian: NDArray[np.float64]
    correction: NDArray[np.float64]
    mean_curvature: NDArray[np.float64]


def curvature_split(h: HeightField) -> CurvatureSplit:
    """Split the mean curvature of the graph of h into its linear and nonlinear parts.

    Both products inside 𝓗(h) are filtered by the 2/3 rule before they are combined.
    """
    jet = h.jet
    lap = jet.laplacian
    grad_sq = jet.grad_sq
    metric = jet.metric
    hess_term = np.einsum("j...,k...,jk...->...", jet.gradient, jet.gradient, jet.hessian)
    correction = dealias(grad_sq * lap / ((1.0 + metric) * metric), h.grid) + dealias(hess_term / metric**3, h.grid)
    return CurvatureSplit(laplacian=lap, correction=correction, mean_curvature=lap - correction)


def divergence_form_curvature(h: HeightField) -> NDArray[np.float64]:
    """Σ_j D_j(D_jh / √(1 + |∇′h|²)) evaluated directly."""
    jet = h.jet
    metric = jet.metric
    return sum(spectral_derivative(jet.gradient[j] / metric, h.grid, j) for j in range(h.grid.dim - 1))


def normal_and_velocity(h: HeightField, dh_dt: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Unit normal (−∇′h, 1)/√(1+|∇′h|²) pointing into phase 2 and the normal speed ∂_th/√(…).

    Diagnostics only; the flattened equations never use them.
    """
    jet = h.jet
    metric = jet.metric
    normal = np.concatenate([-jet.gradient, np.ones_like(metric)[np.newaxis]], axis=0) / metric
    return normal, np.asarray(dh_dt) / metric
