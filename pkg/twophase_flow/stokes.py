"""Discrete inverse of the linearized two-phase Stokes problem with a flat interface.

Each backward-Euler step decouples into one small sparse system per horizontal wavenumber k.
A block holds, for both phases, the velocity profiles û_1..û_N on the vertical nodes, the
pressure θ̂ on the cell centres between them, and the interface amplitude ĥ. Rows are:

- momentum (ρ/Δt)û − ν(∂_N² − |k|²)û + (ik, ∂_N)θ̂ = f̂ + (ρ/Δt)û_prev at interior nodes,
- divergence ik·û′ + ∂_Nû_N = f̂_d at every cell centre,
- far field û(±L_v) = 0,
- continuity ⟦û⟧ = 0 in the lower interface slots,
- tangential and normal stress jumps in the upper interface slots,
- the kinematic row ĥ/Δt − û_N(0) = ĝ_h + ĥ_prev/Δt.

At k = 0 the pressure is only fixed up to a constant, so the upper far-field row for û_N is
replaced by the anchor θ̂(+L_v) = 0. Nyquist modes are discarded.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Any, TypeVar

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .const import DEFAULT_COMPAT_TOL, DEFAULT_THREADS, ENV_THREADS
from .constitutive import PhasePair
from .exceptions import ConfigurationError, IncompatibleDataError, SolverParameterError
from .geometry import HeightField
from .grid import LOWER, PHASES, UPPER, StripGrid, TimeGrid, TwoPhaseField, d_direction, d_vertical
from .models import DataF, StateZ

if TYPE_CHECKING:
    from numpy.typing import NDArray
    from scipy.sparse.linalg import SuperLU

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")

BLOCK_CACHE_SIZE = 8192


@dataclass(frozen=True)
class LinearParams:
    """Material data of the linear operator, with ν_i = μ_i(0)."""

    nu1: float
    nu2: float
    rho1: float
    rho2: float
    sigma: float
    gamma_a: float = 0.0

    def __post_init__(self) -> None:
        """All parameters positive except γ_a ≥ 0."""
        errors = [
            f"{name} must be positive (got {getattr(self, name)})"
            for name in ("nu1", "nu2", "rho1", "rho2", "sigma")
            if not getattr(self, name) > 0
        ]
        if self.gamma_a < 0:
            errors.append(f"gamma_a must be >= 0 (got {self.gamma_a})")
        if errors:
            raise ConfigurationError(errors)

    @classmethod
    def from_phases(cls, phases: PhasePair) -> LinearParams:
        """Freeze the viscosities of a phase pair at zero shear."""
        mu1, mu2 = phases.mu0
        return cls(
            nu1=mu1,
            nu2=mu2,
            rho1=phases.rho1,
            rho2=phases.rho2,
            sigma=phases.sigma,
            gamma_a=phases.gamma_a,
        )

    @property
    def jump_rho(self) -> float:
        """⟦ρ⟧ = ρ₂ − ρ₁."""
        return self.rho2 - self.rho1

    def nu(self, phase: int) -> float:
        """ν of the given phase."""
        return self.nu1 if phase == LOWER else self.nu2

    def rho(self, phase: int) -> float:
        """ρ of the given phase."""
        return self.rho1 if phase == LOWER else self.rho2


@dataclass(frozen=True)
class _Layout:
    """Unknown numbering: per phase û_1..û_N (n_v nodes each) then θ̂ cells; ĥ last."""

    dim: int
    n_v: int

    @property
    def per_phase(self) -> int:
        return self.dim * self.n_v + self.n_v - 1

    @property
    def size(self) -> int:
        return 2 * self.per_phase + 1

    def u(self, phase: int, i: int, m: int) -> int:
        return phase * self.per_phase + i * self.n_v + m

    def theta(self, phase: int, c: int) -> int:
        return phase * self.per_phase + self.dim * self.n_v + c

    @property
    def h(self) -> int:
        return self.size - 1


def _cells_to_nodes(cells: NDArray[Any], axis: int) -> NDArray[Any]:
    """Cell-centre values to nodes: neighbour averages inside, linear extrapolation at the ends."""
    c = np.moveaxis(cells, axis, 0)
    nodes = np.empty((c.shape[0] + 1, *c.shape[1:]), dtype=c.dtype)
    nodes[1:-1] = 0.5 * (c[:-1] + c[1:])
    nodes[0] = 1.5 * c[0] - 0.5 * c[1]
    nodes[-1] = 1.5 * c[-1] - 0.5 * c[-2]
    return np.moveaxis(nodes, 0, axis)


@dataclass(frozen=True, eq=False)
class WavenumberBlock:
    """Factorized implicit-step system for one horizontal wavevector."""

    k: tuple[float, ...]
    dt: float
    params: LinearParams
    grid: StripGrid
    matrix: sparse.csc_matrix
    lu: SuperLU

    @property
    def layout(self) -> _Layout:
        """Unknown numbering."""
        return _Layout(self.grid.dim, self.grid.n_v)

    @property
    def is_mean_mode(self) -> bool:
        """True for k = 0, where the pressure anchor is active."""
        return not any(self.k)

    def apply(self, x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Matrix-vector product, used to regenerate data from a given discrete solution."""
        return self.matrix @ x

    def solve(self, rhs: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Solve with the cached factorization."""
        return self.lu.solve(np.asarray(rhs, dtype=complex))

    def rhs(
        self,
        force: NDArray[np.complex128],
        divergence: NDArray[np.complex128],
        stress: NDArray[np.complex128],
        kinematic: complex,
        u_prev: NDArray[np.complex128],
        h_prev: complex,
    ) -> NDArray[np.complex128]:
        """Right-hand side from transformed data at the new node and the previous state.

        Args:
            force: f̂, shape ``(2, N, n_v)``.
            divergence: f̂_d, shape ``(2, n_v)``.
            stress: ĝ, shape ``(N,)``.
            kinematic: ĝ_h.
            u_prev: û at the previous node, shape ``(2, N, n_v)``.
            h_prev: ĥ at the previous node.
        """
        lay = self.layout
        n, nv, dt = self.grid.dim, self.grid.n_v, self.dt
        b = np.zeros(lay.size, dtype=complex)
        for phase in PHASES:
            rho = self.params.rho(phase)
            for i in range(n):
                for m in range(1, nv - 1):
                    b[lay.u(phase, i, m)] = force[phase, i, m] + rho / dt * u_prev[phase, i, m]
            for c in range(nv - 1):
                b[lay.theta(phase, c)] = 0.5 * (divergence[phase, c] + divergence[phase, c + 1])
        for i in range(n):
            b[lay.u(UPPER, i, 0)] = stress[i]
        b[lay.h] = kinematic + h_prev / dt
        return b

    def unpack(
        self, x: NDArray[np.complex128]
    ) -> tuple[NDArray[np.complex128], NDArray[np.complex128], complex]:
        """Split a solution vector into û ``(2, N, n_v)``, θ̂ cells ``(2, n_v − 1)`` and ĥ."""
        lay = self.layout
        n, nv = self.grid.dim, self.grid.n_v
        u = np.empty((2, n, nv), dtype=complex)
        theta = np.empty((2, nv - 1), dtype=complex)
        for phase in PHASES:
            start = phase * lay.per_phase
            u[phase] = x[start : start + n * nv].reshape(n, nv)
            theta[phase] = x[start + n * nv : start + lay.per_phase]
        return u, theta, complex(x[lay.h])

    def pack(
        self, u: NDArray[np.complex128], theta_cells: NDArray[np.complex128], h: complex
    ) -> NDArray[np.complex128]:
        """Inverse of :meth:`unpack`."""
        lay = self.layout
        x = np.empty(lay.size, dtype=complex)
        for phase in PHASES:
            x[phase * lay.per_phase : phase * lay.per_phase + u[phase].size] = u[phase].ravel()
            x[lay.theta(phase, 0) : lay.theta(phase, 0) + theta_cells[phase].size] = theta_cells[phase]
        x[lay.h] = h
        return x


def assemble_block(k: Iterable[float], dt: float, params: LinearParams, grid: StripGrid) -> WavenumberBlock:
    """Assemble and factorize the implicit-step system for wavevector ``k``.

    Raises:
        SolverParameterError: if the factorization is singular.
    """
    k = tuple(float(kj) for kj in k)
    n, nv, dz = grid.dim, grid.n_v, grid.dz
    lay = _Layout(n, nv)
    k2 = sum(kj * kj for kj in k)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[complex] = []

    def add(row: int, col: int, value: complex) -> None:
        rows.append(row)
        cols.append(col)
        vals.append(value)

    last = nv - 1
    for phase in PHASES:
        rho, nu = params.rho(phase), params.nu(phase)
        far = 0 if phase == LOWER else last
        for i in range(n):
            for m in range(1, last):
                r = lay.u(phase, i, m)
                add(r, r, rho / dt + nu * k2 + 2.0 * nu / dz**2)
                add(r, lay.u(phase, i, m - 1), -nu / dz**2)
                add(r, lay.u(phase, i, m + 1), -nu / dz**2)
                if i < n - 1:
                    add(r, lay.theta(phase, m - 1), 0.5j * k[i])
                    add(r, lay.theta(phase, m), 0.5j * k[i])
                else:
                    add(r, lay.theta(phase, m), 1.0 / dz)
                    add(r, lay.theta(phase, m - 1), -1.0 / dz)
            r = lay.u(phase, i, far)
            if k2 == 0.0 and phase == UPPER and i == n - 1:
                # pressure anchor θ̂(+L_v) = 0 replaces the far-field row of û_N
                add(r, lay.theta(UPPER, last - 1), 1.5)
                add(r, lay.theta(UPPER, last - 2), -0.5)
            else:
                add(r, r, 1.0)
        for c in range(last):
            r = lay.theta(phase, c)
            for j in range(n - 1):
                add(r, lay.u(phase, j, c), 0.5j * k[j])
                add(r, lay.u(phase, j, c + 1), 0.5j * k[j])
            add(r, lay.u(phase, n - 1, c + 1), 1.0 / dz)
            add(r, lay.u(phase, n - 1, c), -1.0 / dz)

    # one-sided ∂_N at ξ_N = 0 from below and from above
    below = ((last, 1.5 / dz), (last - 1, -2.0 / dz), (last - 2, 0.5 / dz))
    above = ((0, -1.5 / dz), (1, 2.0 / dz), (2, -0.5 / dz))
    nu1, nu2 = params.nu1, params.nu2
    for i in range(n):
        r = lay.u(LOWER, i, last)
        add(r, lay.u(LOWER, i, last), -1.0)
        add(r, lay.u(UPPER, i, 0), 1.0)
    for j in range(n - 1):
        r = lay.u(UPPER, j, 0)
        for m, w in above:
            add(r, lay.u(UPPER, j, m), -nu2 * w)
        for m, w in below:
            add(r, lay.u(LOWER, j, m), nu1 * w)
        add(r, lay.u(UPPER, n - 1, 0), -nu2 * 1j * k[j])
        add(r, lay.u(LOWER, n - 1, last), nu1 * 1j * k[j])
    r = lay.u(UPPER, n - 1, 0)
    add(r, lay.theta(UPPER, 0), 1.5)
    add(r, lay.theta(UPPER, 1), -0.5)
    add(r, lay.theta(LOWER, last - 1), -1.5)
    add(r, lay.theta(LOWER, last - 2), 0.5)
    for m, w in above:
        add(r, lay.u(UPPER, n - 1, m), -2.0 * nu2 * w)
    for m, w in below:
        add(r, lay.u(LOWER, n - 1, m), 2.0 * nu1 * w)
    add(r, lay.h, params.sigma * k2 - params.jump_rho * params.gamma_a)
    add(lay.h, lay.h, 1.0 / dt)
    add(lay.h, lay.u(LOWER, n - 1, last), -1.0)

    matrix = sparse.coo_matrix((vals, (rows, cols)), shape=(lay.size, lay.size), dtype=complex).tocsc()
    try:
        lu = splu(matrix)
    except RuntimeError as err:
        raise SolverParameterError(k, dt, str(err)) from err
    if not np.all(np.isfinite(lu.U.diagonal())) or np.min(np.abs(lu.U.diagonal())) == 0.0:
        raise SolverParameterError(k, dt, "zero pivot")
    return WavenumberBlock(k=k, dt=dt, params=params, grid=grid, matrix=matrix, lu=lu)


@lru_cache(maxsize=BLOCK_CACHE_SIZE)
def cached_block(k: tuple[float, ...], dt: float, params: LinearParams, grid: StripGrid) -> WavenumberBlock:
    """Factorized block shared by every solve with the same (k, Δt, parameters, grid)."""
    return assemble_block(k, dt, params, grid)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else the environment override, else the default."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS)
        if raw is None:
            return DEFAULT_THREADS
        try:
            threads = int(raw)
        except ValueError as err:
            raise ConfigurationError(f"{ENV_THREADS} must be an integer (got {raw!r})") from err
    if threads < 1:
        raise ConfigurationError(f"thread count must be >= 1 (got {threads})")
    return threads


def discrete_energy(u: TwoPhaseField, h: NDArray[np.float64], params: LinearParams) -> float:
    """Σ_i ρ_i‖u‖² + σ‖∇′h‖² − ⟦ρ⟧γ_a‖h‖² with trapezoid weights in ξ_N."""
    grid = u.grid
    area = grid.interface_weight
    weights = grid.vertical_weights.reshape((grid.n_v,) + (1,) * (grid.dim - 1))
    kinetic = sum(params.rho(p) * float(np.sum(weights * u.block(p) ** 2)) for p in PHASES) * area
    jet = HeightField(h, grid).jet
    surface = params.sigma * float(np.sum(jet.grad_sq)) * area
    potential = -params.jump_rho * params.gamma_a * float(np.sum(h**2)) * area
    return kinetic + surface + potential


class LinearStokesSolver:
    """Backward-Euler stepper over all wavenumbers of a grid."""

    def __init__(
        self,
        grid: StripGrid,
        time: TimeGrid,
        params: LinearParams,
        threads: int | None = None,
    ) -> None:
        """Initialize and factorize every non-Nyquist block."""
        self.grid = grid
        self.time = time
        self.params = params
        self.threads = resolve_threads(threads)
        self._axes = grid.horizontal_axes
        kvec, nyquist = grid.spectral_wavevectors()
        self._indices = [idx for idx in np.ndindex(*grid.spectral_shape()) if not nyquist[idx]]
        self._blocks = {
            idx: cached_block(tuple(float(kj) for kj in kvec[(slice(None), *idx)]), time.dt, params, grid)
            for idx in self._indices
        }
        _LOGGER.debug(
            "[stokes] %d blocks ready (dt=%g, threads=%d, cache=%s)",
            len(self._blocks),
            time.dt,
            self.threads,
            cached_block.cache_info(),
        )

    def block(self, idx: tuple[int, ...]) -> WavenumberBlock:
        """Block of the spectral index ``idx``."""
        return self._blocks[idx]

    def _forward(self, values: NDArray[np.float64]) -> NDArray[np.complex128]:
        return np.fft.rfftn(values, axes=self._axes)

    def _inverse(self, values: NDArray[np.complex128]) -> NDArray[np.float64]:
        return np.fft.irfftn(values, s=self.grid.horizontal_shape, axes=self._axes)

    def _map(self, func: Callable[[tuple[int, ...]], _T], executor: ThreadPoolExecutor | None) -> list[_T]:
        if executor is None:
            return [func(idx) for idx in self._indices]
        return list(executor.map(func, self._indices))

    def step(
        self,
        u_prev: TwoPhaseField,
        h_prev: NDArray[np.float64],
        force: TwoPhaseField,
        divergence: TwoPhaseField,
        stress: NDArray[np.float64],
        kinematic: NDArray[np.float64],
        executor: ThreadPoolExecutor | None = None,
    ) -> tuple[TwoPhaseField, TwoPhaseField, NDArray[np.float64]]:
        """Advance (u, h) by one step with data taken at the new node.

        Returns:
            Velocity, nodal pressure θ and height at the new node.
        """
        grid = self.grid
        u_hat = np.stack([self._forward(b) for b in u_prev.blocks])
        f_hat = np.stack([self._forward(b) for b in force.blocks])
        fd_hat = np.stack([self._forward(b) for b in divergence.blocks])
        g_hat = self._forward(stress)
        gh_hat = self._forward(kinematic)
        h_hat = self._forward(h_prev)

        def solve_one(idx: tuple[int, ...]) -> tuple[tuple[int, ...], Any]:
            at = (Ellipsis, *idx)
            block = self._blocks[idx]
            rhs = block.rhs(f_hat[at], fd_hat[at], g_hat[at], gh_hat[idx], u_hat[at], h_hat[idx])
            return idx, block.unpack(block.solve(rhs))

        out_u = np.zeros_like(u_hat)
        out_theta = np.zeros((2, grid.n_v - 1, *grid.spectral_shape()), dtype=complex)
        out_h = np.zeros_like(h_hat)
        for idx, (u, theta, h) in self._map(solve_one, executor):
            at = (Ellipsis, *idx)
            out_u[at] = u
            out_theta[at] = theta
            out_h[idx] = h
        theta_nodes = _cells_to_nodes(out_theta, axis=1)
        velocity = TwoPhaseField(self._inverse(out_u[LOWER]), self._inverse(out_u[UPPER]), grid)
        pressure = TwoPhaseField(self._inverse(theta_nodes[LOWER]), self._inverse(theta_nodes[UPPER]), grid)
        return velocity, pressure, self._inverse(out_h)

    def solve(
        self,
        data: DataF,
        u0: TwoPhaseField,
        h0: NDArray[np.float64],
        pi0: NDArray[np.float64] | None = None,
    ) -> StateZ:
        """March the whole trajectory from (u₀, h₀).

        The first node carries no pressure of its own; it takes θ from the second node, with the
        upper block shifted column-wise so that ⟦θ⟧ equals ``pi0`` when that is given.
        """
        velocities = [u0]
        pressures: list[TwoPhaseField] = []
        heights = [np.asarray(h0, dtype=float)]
        executor = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None
        try:
            for n in range(self.time.steps):
                u, theta, h = self.step(
                    velocities[-1],
                    heights[-1],
                    data.force[n + 1],
                    data.divergence[n + 1],
                    data.stress[n + 1],
                    data.kinematic[n + 1],
                    executor,
                )
                velocities.append(u)
                pressures.append(theta)
                heights.append(h)
        finally:
            if executor is not None:
                executor.shutdown()
        first = pressures[0]
        if pi0 is not None:
            shift = np.asarray(pi0, dtype=float) - first.jump()
            first = TwoPhaseField(first.lower, first.upper + shift[np.newaxis], self.grid)
        pressures.insert(0, first)
        pressure = TwoPhaseField.stack(pressures)
        return StateZ(
            velocity=TwoPhaseField.stack(velocities),
            pressure=pressure,
            pressure_jump=pressure.jump(),
            height=np.stack(heights),
            time=self.time,
        )


def linear_compatibility(
    data: DataF, u0: TwoPhaseField, h0: NDArray[np.float64], params: LinearParams
) -> dict[str, float]:
    """Pointwise residuals of the initial compatibility conditions of the linear problem.

    Returns max-norm residuals of ⟦u₀⟧ = 0, div u₀ = f_d(0) and the tangential stress rows
    −⟦ν(D_Nu_j + D_ju_N)⟧ = g_j(0).
    """
    grid = u0.grid
    n = grid.dim
    divergence = sum(d_direction(u0[j], j) for j in range(n)) - data.divergence[0]
    dn = d_vertical(u0)
    tangential = 0.0
    for j in range(n - 1):
        flux = (dn[j] + d_direction(u0[n - 1], j)).map_phases(lambda block, p: params.nu(p) * block)
        tangential = max(tangential, float(np.max(np.abs(-flux.jump() - data.stress[0, j]))))
    return {
        "velocity_jump": float(np.max(np.abs(u0.jump()))),
        "divergence": divergence.max_abs(),
        "tangential_stress": tangential,
    }


def solve_linear_evolution(
    data: DataF,
    u0: TwoPhaseField,
    h0: NDArray[np.float64],
    params: LinearParams,
    *,
    pi0: NDArray[np.float64] | None = None,
    check: bool = True,
    compat_tol: float = DEFAULT_COMPAT_TOL,
    threads: int | None = None,
) -> StateZ:
    """Discrete L⁻¹: the trajectory solving the linear problem for (data, u₀, h₀).

    Raises:
        IncompatibleDataError: if ``check`` is set and a compatibility residual exceeds
            ``compat_tol``.
    """
    if check:
        residuals = linear_compatibility(data, u0, h0, params)
        failing = {name: value for name, value in residuals.items() if value > compat_tol}
        if failing:
            raise IncompatibleDataError(
                "initial data incompatible with the linear problem: "
                + ", ".join(f"{name}={value:.3e}" for name, value in sorted(failing.items()))
            )
    solver = LinearStokesSolver(data.grid, data.time, params, threads=threads)
    return solver.solve(data, u0, h0, pi0=pi0)
