"""Discrete surrogates of the solution and data norms.

By default node series are first replaced by their cell averages g_{n+½} = (g_n + g_{n+1})/2,
each carrying weight Δt. The ``trapezoid`` rule keeps the nodes instead, with weight Δt/2 at both
ends; it applies to the interface series of 𝔼₃, 𝔽₃ and 𝔽₄, while difference quotients such as
∂_t h stay cell-valued under either rule. Torus points carry weight Δx^{N−1} and strip points the
trapezoid weights in ξ_N as well. Singular double integrals drop the diagonal and keep every other
pair; distances on the torus use the minimal periodic image.

A Slobodeckij seminorm of order s ∈ (0, 1) divides by |t − s|^{1+sp} in time and by
|x′ − y′|^{N−1+sp} on the torus. The 𝔽₃ pair uses s = ½ − 1/(2p) in time and s = 1 − 1/p in space.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import (
    CONF_P,
    CONF_QUADRATURE,
    DEFAULT_P,
    DEFAULT_QUADRATURE,
    EXCLUDED_P_VALUES,
    QUADRATURE_MIDPOINT,
    QUADRATURE_RULES,
    QUADRATURE_TRAPEZOID,
)
from .exceptions import ConfigurationError, NormUndefinedError
from .grid import StripGrid, TimeGrid, TwoPhaseField, d_direction, d_second, spectral_derivative

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .models import DataF, StateZ

_LOGGER = logging.getLogger(__name__)

SURROGATES: dict[str, str] = {
    "E1": "‖u‖ + ‖∇u‖ + ‖∇²u‖ in L_p(J, L_p) plus ‖∂_t u‖ over time cells",
    "E2": "‖∇θ‖ in L_p(J, L_p), the Ḣ¹ seminorm only",
    "E3": "‖π‖ in L_p(J, L_p) plus the 𝔽₃ time and space seminorms",
    "E4.time_regularity": "‖h‖ + ‖∂_t h‖ + time seminorm of ∂_t h of order 1 − 1/(2p)",
    "E4.h1_time": "‖∂_t h‖ + ‖∇′∂_t h‖ + space seminorm of ∇′∂_t h of order 1 − 1/p",
    "E4.mixed": "‖∇′²h‖ + time seminorm of ∇′²h of order ½ − 1/(2p)",
    "E4.space_regularity": "‖h‖ + ‖∇′²h‖ + space seminorm of ∇′²h of order 1 − 1/p",
    "F1": "‖F‖ in L_p(J, L_p)",
    "F2": "‖f_d‖ + ‖∇f_d‖ plus ‖∂_t φ‖ for the potential φ, or ‖|k|⁻¹∂_t f̂_d‖ without k = 0",
    "F3": "‖G‖ in L_p(J, L_p) plus the 𝔽₃ time and space seminorms",
    "F4": "‖g_h‖ + time seminorm of order 1 − 1/(2p) + ‖∇′g_h‖ + space seminorm of ∇′g_h",
    "I": "‖u₀‖ + ‖∇u₀‖ + ‖h₀‖ + ‖∇′h₀‖ + ‖∇′²h₀‖ plus torus seminorms of order 1 − 2/p",
}


@dataclass(frozen=True)
class NormConfig:
    """Integrability exponent and quadrature of the diagnostic norms.

    Attributes:
        p: Exponent with p > N + 2 and p ∉ {3/2, 3}.
        dim: Spatial dimension N the bound refers to.
        quadrature: Time sampling of node series in the interface norms, ``midpoint`` or
            ``trapezoid``.
    """

    p: float = DEFAULT_P
    dim: int = 2
    quadrature: str = DEFAULT_QUADRATURE

    def __post_init__(self) -> None:
        """Validate p against the dimension."""
        errors = self.validation_errors()
        if errors:
            raise ConfigurationError(errors)

    def validation_errors(self) -> list[str]:
        """Every violated rule (empty when valid)."""
        errors = []
        if not self.p > self.dim + 2:
            errors.append(f"norms.p must satisfy p > N + 2 = {self.dim + 2} (got {self.p:g})")
        if any(np.isclose(self.p, excluded) for excluded in EXCLUDED_P_VALUES):
            errors.append(f"norms.p must avoid {EXCLUDED_P_VALUES} (got {self.p:g})")
        if self.quadrature not in QUADRATURE_RULES:
            errors.append(f"norms.quadrature must be one of {QUADRATURE_RULES} (got {self.quadrature!r})")
        return errors

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {CONF_P: self.p, CONF_QUADRATURE: self.quadrature}

    @classmethod
    def from_dict(cls, data: dict[str, Any], dim: int = 2) -> NormConfig:
        """Create from dictionary."""
        return cls(
            p=float(data.get(CONF_P, DEFAULT_P)),
            dim=dim,
            quadrature=data.get(CONF_QUADRATURE, DEFAULT_QUADRATURE),
        )


def midpoints(series: NDArray[np.float64]) -> NDArray[np.float64]:
    """Cell averages of a node series along its leading (time) axis.

    Raises:
        NormUndefinedError: if fewer than two nodes are given.
    """
    series = np.asarray(series, dtype=float)
    if series.shape[0] < 2:
        raise NormUndefinedError("space-time norms need at least two time nodes")
    return 0.5 * (series[1:] + series[:-1])


def time_samples(
    series: NDArray[np.float64], time: TimeGrid, quadrature: str = DEFAULT_QUADRATURE
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Samples of a node series along its leading axis and their time weights.

    Raises:
        ConfigurationError: for an unknown rule.
        NormUndefinedError: if fewer than two nodes are given.
    """
    if quadrature == QUADRATURE_MIDPOINT:
        cells = midpoints(series)
        return cells, np.full(cells.shape[0], time.dt)
    if quadrature == QUADRATURE_TRAPEZOID:
        series = np.asarray(series, dtype=float)
        if series.shape[0] < 2:
            raise NormUndefinedError("space-time norms need at least two time nodes")
        weights = np.full(series.shape[0], time.dt)
        weights[0] = weights[-1] = 0.5 * time.dt
        return series, weights
    raise ConfigurationError(f"quadrature must be one of {QUADRATURE_RULES} (got {quadrature!r})")


def _lp_pow_cells(
    cells: NDArray[np.float64], dt: float | NDArray[np.float64], weight: float | NDArray[np.float64], p: float
) -> float:
    """Σ_n w_n Σ_x w |c_n(x)|^p with w_n = Δt or one weight per sample; extra axes are summed."""
    time_weights = np.reshape(np.asarray(dt, dtype=float), (-1,) + (1,) * (np.ndim(cells) - 1))
    return float(np.sum(time_weights * weight * np.abs(cells) ** p))


def lp_norm(
    series: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """‖g‖ in L_p(J, L_p(torus)) of an interface node series ``(n_t + 1, ..., *horizontal)``."""
    samples, weights = time_samples(series, time, quadrature)
    return _lp_pow_cells(samples, weights, grid.interface_weight, p) ** (1.0 / p)


def _time_pow_cells(
    cells: NDArray[np.float64],
    dt: float,
    weight: float | NDArray[np.float64],
    p: float,
    exponent: float,
    time_weights: NDArray[np.float64] | None = None,
) -> float:
    """Σ_{i≠j} w_i w_j ‖c_i − c_j‖_p^p / |t_i − t_j|^exponent, summed by lag (w_i = Δt by default)."""
    m = cells.shape[0]
    w = np.full(m, dt) if time_weights is None else np.asarray(time_weights, dtype=float)
    axes = tuple(range(1, cells.ndim))
    total = 0.0
    for lag in range(1, m):
        diff = np.sum(weight * np.abs(cells[lag:] - cells[:-lag]) ** p, axis=axes)
        total += 2.0 * float(np.sum(w[lag:] * w[:-lag] * diff)) / (lag * dt) ** exponent
    return total


@lru_cache(maxsize=64)
def _inverse_distance_kernel(grid: StripGrid, exponent: float) -> NDArray[np.float64]:
    """1/|x′ − y′|^exponent between torus points (minimal image), zero on the diagonal."""
    period = 2.0 * np.pi * grid.length_h
    points = np.stack([x.ravel() for x in grid.horizontal_mesh()], axis=1)
    delta = np.abs(points[:, np.newaxis, :] - points[np.newaxis, :, :])
    delta = np.minimum(delta, period - delta)
    distance = np.sqrt(np.sum(delta**2, axis=-1))
    kernel = np.zeros_like(distance)
    off = distance > 0
    kernel[off] = distance[off] ** (-exponent)
    return kernel


def _space_pow(values: NDArray[np.float64], grid: StripGrid, p: float, exponent: float) -> float:
    """Σ_{x≠y} w² |g(x) − g(y)|^p / |x − y|^exponent for one time slice ``(..., *horizontal)``."""
    kernel = _inverse_distance_kernel(grid, float(exponent))
    flat = values.reshape(-1, kernel.shape[0])
    diff = np.zeros_like(kernel)
    for row in flat:
        diff += np.abs(row[:, np.newaxis] - row[np.newaxis, :]) ** p
    return grid.interface_weight**2 * float(np.sum(diff * kernel))


def time_seminorm(
    cells: NDArray[np.float64],
    grid: StripGrid,
    time: TimeGrid,
    p: float,
    order: float,
    weights: NDArray[np.float64] | None = None,
) -> float:
    """Slobodeckij seminorm of order ``order`` in time of a sample series on the torus.

    ``weights`` are the time weights of the samples; cells of weight Δt when omitted.
    """
    value = _time_pow_cells(cells, time.dt, grid.interface_weight, p, 1.0 + order * p, weights)
    return value ** (1.0 / p)


def space_seminorm(
    cells: NDArray[np.float64],
    grid: StripGrid,
    time: TimeGrid,
    p: float,
    order: float,
    weights: NDArray[np.float64] | None = None,
) -> float:
    """Slobodeckij seminorm of order ``order`` on the torus, integrated over the time samples."""
    exponent = grid.dim - 1 + order * p
    w = np.full(len(cells), time.dt) if weights is None else np.asarray(weights, dtype=float)
    value = sum(float(wn) * _space_pow(cell, grid, p, exponent) for wn, cell in zip(w, cells, strict=True))
    return value ** (1.0 / p)


def torus_seminorm(values: NDArray[np.float64], grid: StripGrid, p: float, order: float) -> float:
    """Slobodeckij seminorm of order ``order`` of a single torus field."""
    return _space_pow(values, grid, p, grid.dim - 1 + order * p) ** (1.0 / p)


def seminorm_F3_time(
    g: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """|g|_{𝔽₃,1}: (∫∫ ‖g(t) − g(s)‖_p^p / |t − s|^{½+p/2})^{1/p}."""
    samples, weights = time_samples(g, time, quadrature)
    return time_seminorm(samples, grid, time, p, 0.5 - 0.5 / p, weights)


def seminorm_F3_space(
    g: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """|g|_{𝔽₃,2}: (∫∫∫ |g(t,x′) − g(t,y′)|^p / |x′ − y′|^{N−2+p})^{1/p}."""
    samples, weights = time_samples(g, time, quadrature)
    return space_seminorm(samples, grid, time, p, 1.0 - 1.0 / p, weights)


def seminorm_F3(
    g: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """|g|_{𝔽₃} = |g|_{𝔽₃,1} + |g|_{𝔽₃,2}."""
    return seminorm_F3_time(g, grid, time, p, quadrature) + seminorm_F3_space(g, grid, time, p, quadrature)


def norm_F3(
    g: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """‖g‖_{𝔽₃} = ‖g‖_{L_p(J, L_p)} + |g|_{𝔽₃}."""
    return lp_norm(g, grid, time, p, quadrature) + seminorm_F3(g, grid, time, p, quadrature)


def norm_Ftilde3(
    g: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float, quadrature: str = DEFAULT_QUADRATURE
) -> float:
    """‖g‖_{𝔽̃₃} = sup|g| + |g|_{𝔽₃}."""
    return float(np.max(np.abs(g))) + seminorm_F3(g, grid, time, p, quadrature)


def _strip_weights(grid: StripGrid) -> NDArray[np.float64]:
    return grid.vertical_weights.reshape((grid.n_v,) + (1,) * (grid.dim - 1)) * grid.interface_weight


def _strip_pow_cells(cells: TwoPhaseField, dt: float, p: float) -> float:
    weights = _strip_weights(cells.grid)
    return sum(_lp_pow_cells(block, dt, weights, p) for block in cells.blocks)


def _strip_midpoints(series: TwoPhaseField) -> TwoPhaseField:
    if series.lower.shape[0] < 2:
        raise NormUndefinedError("space-time norms need at least two time nodes")
    return (series[1:] + series[:-1]) * 0.5


def strip_lp_norm(series: TwoPhaseField, time: TimeGrid, p: float) -> float:
    """‖f‖ in L_p(J, L_p(strip)) of a node series with a leading time axis."""
    return _strip_pow_cells(_strip_midpoints(series), time.dt, p) ** (1.0 / p)


def _strip_gradient_pow(cells: TwoPhaseField, dt: float, p: float) -> float:
    return sum(_strip_pow_cells(d_direction(cells, j), dt, p) for j in range(cells.grid.dim))


def _strip_hessian_pow(cells: TwoPhaseField, dt: float, p: float) -> float:
    n = cells.grid.dim
    return sum(_strip_pow_cells(d_second(cells, j, k), dt, p) for j in range(n) for k in range(n))


def _time_difference(series: NDArray[np.float64], dt: float) -> NDArray[np.float64]:
    return np.diff(series, axis=0) / dt


def _torus_gradient(values: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    """∇′ along the trailing torus axes, stacked first."""
    return np.stack([spectral_derivative(values, grid, j) for j in range(grid.dim - 1)])


def _torus_hessian(values: NDArray[np.float64], grid: StripGrid) -> NDArray[np.float64]:
    n = grid.dim - 1
    return np.stack([spectral_derivative(spectral_derivative(values, grid, j), grid, k) for j in range(n) for k in range(n)])


def _cells_lp(cells: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float) -> float:
    return _lp_pow_cells(cells, time.dt, grid.interface_weight, p) ** (1.0 / p)


def _component_first(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Move a leading derivative axis behind the time axis: (d, n, ...) → (n, d, ...)."""
    return np.moveaxis(values, 0, 1)


def height_norm_pieces(height: NDArray[np.float64], grid: StripGrid, time: TimeGrid, p: float) -> dict[str, float]:
    """The four 𝔼₄ surrogates of an interface height series."""
    h_cells = midpoints(height)
    dh = _time_difference(height, time.dt)
    grad_dh = _component_first(_torus_gradient(dh, grid))
    hess_cells = _component_first(_torus_hessian(h_cells, grid))
    lp_h = _cells_lp(h_cells, grid, time, p)
    lp_dh = _cells_lp(dh, grid, time, p)
    lp_hess = _cells_lp(hess_cells, grid, time, p)
    return {
        "time_regularity": lp_h + lp_dh + time_seminorm(dh, grid, time, p, 1.0 - 0.5 / p),
        "h1_time": lp_dh + _cells_lp(grad_dh, grid, time, p) + space_seminorm(grad_dh, grid, time, p, 1.0 - 1.0 / p),
        "mixed": lp_hess + time_seminorm(hess_cells, grid, time, p, 0.5 - 0.5 / p),
        "space_regularity": lp_h + lp_hess + space_seminorm(hess_cells, grid, time, p, 1.0 - 1.0 / p),
    }


def norm_E_spaces(z: StateZ, config: NormConfig) -> dict[str, float]:
    """𝔼₁…𝔼₄ surrogates of a trajectory; 𝔼₄ as four pieces plus their max under ``E4``."""
    grid, time, p = z.grid, z.time, config.p
    dt = time.dt
    u_cells = _strip_midpoints(z.velocity)
    du = (z.velocity[1:] - z.velocity[:-1]) * (1.0 / dt)
    e1 = (
        _strip_pow_cells(u_cells, dt, p) ** (1.0 / p)
        + _strip_gradient_pow(u_cells, dt, p) ** (1.0 / p)
        + _strip_hessian_pow(u_cells, dt, p) ** (1.0 / p)
        + _strip_pow_cells(du, dt, p) ** (1.0 / p)
    )
    e2 = _strip_gradient_pow(_strip_midpoints(z.pressure), dt, p) ** (1.0 / p)
    e3 = norm_F3(z.pressure_jump, grid, time, p, config.quadrature)
    pieces = height_norm_pieces(z.height, grid, time, p)
    result = {"E1": e1, "E2": e2, "E3": e3}
    result.update({f"E4.{name}": value for name, value in pieces.items()})
    result["E4"] = max(pieces.values())
    return result


def state_norm(z: StateZ, config: NormConfig) -> float:
    """‖z‖_𝔼 = 𝔼₁ + 𝔼₂ + 𝔼₃ + max 𝔼₄, the Picard stopping norm."""
    norms = norm_E_spaces(z, config)
    return norms["E1"] + norms["E2"] + norms["E3"] + norms["E4"]


def _negative_order_surrogate(cells: TwoPhaseField) -> TwoPhaseField:
    """Divide every horizontal mode k ≠ 0 by |k| and drop k = 0."""
    grid = cells.grid
    axes = grid.horizontal_axes
    kvec, nyquist = grid.spectral_wavevectors()
    magnitude = np.sqrt(np.sum(kvec**2, axis=0))
    factor = np.where((magnitude > 0) & ~nyquist, 1.0 / np.where(magnitude > 0, magnitude, 1.0), 0.0)
    return cells.map(
        lambda block: np.fft.irfftn(np.fft.rfftn(block, axes=axes) * factor, s=grid.horizontal_shape, axes=axes)
    )


def norm_F_spaces(data: DataF, config: NormConfig) -> dict[str, float]:
    """𝔽₁…𝔽₄ surrogates of right-hand-side data."""
    grid, time, p = data.grid, data.time, config.p
    dt = time.dt
    f1 = strip_lp_norm(data.force, time, p)
    fd_cells = _strip_midpoints(data.divergence)
    if data.potential is not None:
        negative = (data.potential[1:] - data.potential[:-1]) * (1.0 / dt)
    else:
        negative = _negative_order_surrogate((data.divergence[1:] - data.divergence[:-1]) * (1.0 / dt))
    f2 = (
        _strip_pow_cells(fd_cells, dt, p) ** (1.0 / p)
        + _strip_gradient_pow(fd_cells, dt, p) ** (1.0 / p)
        + _strip_pow_cells(negative, dt, p) ** (1.0 / p)
    )
    f3 = norm_F3(data.stress, grid, time, p, config.quadrature)
    gh_samples, gh_weights = time_samples(data.kinematic, time, config.quadrature)
    grad_gh = _component_first(_torus_gradient(gh_samples, grid))
    f4 = (
        _lp_pow_cells(gh_samples, gh_weights, grid.interface_weight, p) ** (1.0 / p)
        + time_seminorm(gh_samples, grid, time, p, 1.0 - 0.5 / p, gh_weights)
        + _lp_pow_cells(grad_gh, gh_weights, grid.interface_weight, p) ** (1.0 / p)
        + space_seminorm(grad_gh, grid, time, p, 1.0 - 1.0 / p, gh_weights)
    )
    return {"F1": f1, "F2": f2, "F3": f3, "F4": f4}


def data_norm(data: DataF, config: NormConfig) -> float:
    """‖d‖_𝔽 = 𝔽₁ + 𝔽₂ + 𝔽₃ + 𝔽₄."""
    return sum(norm_F_spaces(data, config).values())


def norm_initial(u0: TwoPhaseField, h0: NDArray[np.float64], config: NormConfig) -> float:
    """𝕀-norm surrogate of initial data (u₀, h₀)."""
    grid, p = u0.grid, config.p
    weights = _strip_weights(grid)
    order = 1.0 - 2.0 / p

    def strip_lp(field: TwoPhaseField) -> float:
        return sum(float(np.sum(weights * np.abs(b) ** p)) for b in field.blocks) ** (1.0 / p)

    gradients = [d_direction(u0, j) for j in range(grid.dim)]
    # horizontal seminorm of ∇u₀ level by level, integrated in ξ_N with the trapezoid weights
    exponent = grid.dim - 1 + order * p
    levels = grid.vertical_weights
    horizontal = sum(
        levels[m] * _space_pow(np.take(block, m, axis=grid.vertical_axis), grid, p, exponent)
        for g in gradients
        for block in g.blocks
        for m in range(grid.n_v)
    )
    velocity = strip_lp(u0) + sum(strip_lp(g) for g in gradients) + horizontal ** (1.0 / p)
    h0 = np.asarray(h0, dtype=float)
    w = grid.interface_weight

    def torus_lp(values: NDArray[np.float64]) -> float:
        return float(np.sum(w * np.abs(values) ** p)) ** (1.0 / p)

    hessian = _torus_hessian(h0, grid)
    height = torus_lp(h0) + torus_lp(_torus_gradient(h0, grid)) + torus_lp(hessian) + torus_seminorm(hessian, grid, p, order)
    return velocity + height


def classical_regularity_report(z: StateZ) -> dict[str, float]:
    """Sup norms behind the classical reading of the interface conditions."""
    grid, dt = z.grid, z.time.dt
    dh = _time_difference(z.height, dt)
    return {
        "h": float(np.max(np.abs(z.height))),
        "grad_h": float(np.max(np.abs(_torus_gradient(z.height, grid)))),
        "hess_h": float(np.max(np.abs(_torus_hessian(z.height, grid)))),
        "dt_h": float(np.max(np.abs(dh))),
        "grad_dt_h": float(np.max(np.abs(_torus_gradient(dh, grid)))),
    }


def algebra_inequality_probe(
    pairs: Iterable[tuple[NDArray[np.float64], NDArray[np.float64]]],
    grid: StripGrid,
    time: TimeGrid,
    p: float,
    phi: Callable[[NDArray[np.float64]], NDArray[np.float64]] = np.tanh,
    quadrature: str = DEFAULT_QUADRATURE,
) -> dict[str, float]:
    """Largest measured constants of the multiplication and composition estimates.

    ``phi`` must be bounded with a bounded derivative; the default tanh has both bounds equal to 1.

    Returns:
        ``f3_algebra``: max ‖fg‖_{𝔽₃}/(‖f‖_{𝔽₃}‖g‖_{𝔽₃});
        ``f3_times_ftilde3``: max ‖fg‖_{𝔽₃}/(‖f‖_{𝔽₃}‖g‖_{𝔽̃₃});
        ``ftilde3_algebra``: max ‖fg‖_{𝔽̃₃}/(‖f‖_{𝔽̃₃}‖g‖_{𝔽̃₃});
        ``composition``: max ‖φ(g)‖_{𝔽̃₃}/(1 + |g|_{𝔽₃}).
    """
    ratios: dict[str, list[float]] = {
        "f3_algebra": [],
        "f3_times_ftilde3": [],
        "ftilde3_algebra": [],
        "composition": [],
    }
    for f, g in pairs:
        fg = f * g
        f3_f, f3_g = norm_F3(f, grid, time, p, quadrature), norm_F3(g, grid, time, p, quadrature)
        ft_f, ft_g = norm_Ftilde3(f, grid, time, p, quadrature), norm_Ftilde3(g, grid, time, p, quadrature)
        if f3_f > 0 and f3_g > 0:
            ratios["f3_algebra"].append(norm_F3(fg, grid, time, p, quadrature) / (f3_f * f3_g))
        if f3_f > 0 and ft_g > 0:
            ratios["f3_times_ftilde3"].append(norm_F3(fg, grid, time, p, quadrature) / (f3_f * ft_g))
        if ft_f > 0 and ft_g > 0:
            ratios["ftilde3_algebra"].append(norm_Ftilde3(fg, grid, time, p, quadrature) / (ft_f * ft_g))
        composed = norm_Ftilde3(phi(g), grid, time, p, quadrature)
        ratios["composition"].append(composed / (1.0 + seminorm_F3(g, grid, time, p, quadrature)))
    result = {name: max(values) if values else float("nan") for name, values in ratios.items()}
    _LOGGER.debug("[norms] algebra probe constants: %s", result)
    return result
