"""Fixed-point driver: compatibility of the initial data and the Picard iteration z ↦ L⁻¹(N(z), u₀, h₀)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .const import (
    CONF_COMPAT_TOL,
    CONF_DELTA0_GUARD,
    CONF_DIVERGENCE_PATIENCE,
    CONF_MAX_ITER,
    CONF_TOL,
    DEFAULT_COMPAT_TOL,
    DEFAULT_DELTA0_GUARD,
    DEFAULT_DIVERGENCE_PATIENCE,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    EXIT_DIVERGED,
    EXIT_OK,
    STATUS_CONVERGED,
    STATUS_DIVERGED,
    STATUS_MAX_ITER,
)
from .constitutive import PhasePair
from .exceptions import ConfigurationError, IncompatibleDataError
from .geometry import (
    HeightField,
    PhysicalField,
    curvature_split,
    default_levels,
    pushforward,
    transformed_deformation,
)
from .grid import PHASES, TimeGrid, TwoPhaseField, d_direction, d_vertical
from .models import DataF, StateZ
from .nonlinear import eval_Fd, eval_G, eval_N
from .norms import NormConfig, data_norm, norm_initial, state_norm
from .stokes import LinearParams, LinearStokesSolver

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    """Knobs of the Picard iteration.

    Attributes:
        max_iter: Maximum number of Picard steps (≥ 1).
        tol: Relative stopping tolerance on ‖z^{m+1} − z^m‖_𝔼.
        delta0_guard: Radius of the ball the iterates must stay in.
        compat_tol: Tolerance of the pointwise compatibility residuals.
        divergence_patience: Consecutive residual increases that count as divergence.
    """

    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    delta0_guard: float = DEFAULT_DELTA0_GUARD
    compat_tol: float = DEFAULT_COMPAT_TOL
    divergence_patience: int = DEFAULT_DIVERGENCE_PATIENCE

    def __post_init__(self) -> None:
        """Validate the iteration knobs."""
        errors = []
        if self.max_iter < 1:
            errors.append(f"solver.max_iter must be >= 1 (got {self.max_iter})")
        if not self.tol > 0:
            errors.append(f"solver.tol must be positive (got {self.tol})")
        if not self.delta0_guard > 0:
            errors.append(f"solver.delta0_guard must be positive (got {self.delta0_guard})")
        if not self.compat_tol > 0:
            errors.append(f"solver.compat_tol must be positive (got {self.compat_tol})")
        if self.divergence_patience < 1:
            errors.append(f"solver.divergence_patience must be >= 1 (got {self.divergence_patience})")
        if errors:
            raise ConfigurationError(errors)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            CONF_MAX_ITER: self.max_iter,
            CONF_TOL: self.tol,
            CONF_DELTA0_GUARD: self.delta0_guard,
            CONF_COMPAT_TOL: self.compat_tol,
            CONF_DIVERGENCE_PATIENCE: self.divergence_patience,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SolveConfig:
        """Create from dictionary."""
        return cls(
            max_iter=int(data.get(CONF_MAX_ITER, DEFAULT_MAX_ITER)),
            tol=float(data.get(CONF_TOL, DEFAULT_TOL)),
            delta0_guard=float(data.get(CONF_DELTA0_GUARD, DEFAULT_DELTA0_GUARD)),
            compat_tol=float(data.get(CONF_COMPAT_TOL, DEFAULT_COMPAT_TOL)),
            divergence_patience=int(data.get(CONF_DIVERGENCE_PATIENCE, DEFAULT_DIVERGENCE_PATIENCE)),
        )


@dataclass
class ConvergenceReport:
    """History of a Picard run."""

    status: str = STATUS_MAX_ITER
    residuals: list[float] = field(default_factory=list)
    state_norms: list[float] = field(default_factory=list)
    data_norms: list[float] = field(default_factory=list)
    inverse_norm_estimates: list[float] = field(default_factory=list)
    eps0_report: float | None = None

    @property
    def iterations(self) -> int:
        """Number of Picard steps taken."""
        return len(self.residuals)

    @property
    def ratios(self) -> list[float]:
        """Successive residual quotients r_{m+1}/r_m (nan where r_m = 0)."""
        return [
            b / a if a > 0 else float("nan") for a, b in zip(self.residuals[:-1], self.residuals[1:], strict=True)
        ]

    @property
    def converged(self) -> bool:
        """True when the stopping test was met."""
        return self.status == STATUS_CONVERGED

    @property
    def exit_code(self) -> int:
        """0 when converged, 2 otherwise."""
        return EXIT_OK if self.converged else EXIT_DIVERGED

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            "status": self.status,
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "ratios": self.ratios,
            "state_norms": list(self.state_norms),
            "data_norms": list(self.data_norms),
            "inverse_norm_estimates": list(self.inverse_norm_estimates),
            "eps0_report": self.eps0_report,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ConvergenceReport:
        """Create from dictionary."""
        return cls(
            status=data.get("status", STATUS_MAX_ITER),
            residuals=[float(v) for v in data.get("residuals", [])],
            state_norms=[float(v) for v in data.get("state_norms", [])],
            data_norms=[float(v) for v in data.get("data_norms", [])],
            inverse_norm_estimates=[float(v) for v in data.get("inverse_norm_estimates", [])],
            eps0_report=data.get("eps0_report"),
        )


@dataclass
class CompatibilityReport:
    """Pointwise compatibility residuals of (u₀, h₀) in max norm.

    ``tangential_stress`` is max|P_τ(⟦2μE⟧n)| and ``g_form`` is max|R|/√(1+|∇′h₀|²) for the
    residual R of the interface conditions written with G; they coincide when the induced pressure
    jump is used.
    """

    velocity_jump: float
    divergence: float
    tangential_stress: float
    g_form: float
    tolerance: float
    pressure_jump: NDArray[np.float64] = field(repr=False)
    tangential_residual: NDArray[np.float64] = field(repr=False)
    g_form_residual: NDArray[np.float64] = field(repr=False)

    @property
    def passed(self) -> bool:
        """All conditions in the stress-projection form hold within tolerance."""
        return max(self.velocity_jump, self.divergence, self.tangential_stress) <= self.tolerance

    @property
    def g_form_passed(self) -> bool:
        """All conditions in the G form hold within tolerance."""
        return max(self.velocity_jump, self.divergence, self.g_form) <= self.tolerance

    def failing(self) -> list[str]:
        """Names of the violated conditions."""
        values = {
            "velocity_jump": self.velocity_jump,
            "divergence": self.divergence,
            "tangential_stress": self.tangential_stress,
        }
        return [name for name, value in values.items() if value > self.tolerance]

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            "passed": self.passed,
            "g_form_passed": self.g_form_passed,
            "tolerance": self.tolerance,
            "velocity_jump": self.velocity_jump,
            "divergence": self.divergence,
            "tangential_stress": self.tangential_stress,
            "g_form": self.g_form,
            "pressure_jump_max": float(np.max(np.abs(self.pressure_jump))),
        }


def _linear_interface_rows(
    u: TwoPhaseField, pressure_jump: NDArray[np.float64], h: HeightField, phases: PhasePair
) -> NDArray[np.float64]:
    """Left-hand sides of the linear stress rows with ν = μ(0)."""
    grid = u.grid
    n = grid.dim
    dn = d_vertical(u)
    mu0 = phases.mu0
    rows = np.empty((n, *grid.horizontal_shape))

    def jump_scaled(f: TwoPhaseField) -> NDArray[np.float64]:
        return mu0[1] * f.trace_upper() - mu0[0] * f.trace_lower()

    for j in range(n - 1):
        rows[j] = -jump_scaled(dn[j] + d_direction(u[n - 1], j))
    split = curvature_split(h)
    restoring = phases.jump_rho * phases.gamma_a * h.values + phases.sigma * split.laplacian
    rows[n - 1] = pressure_jump - 2.0 * jump_scaled(dn[n - 1]) - restoring
    return rows


def interface_residual(
    u: TwoPhaseField, pressure_jump: NDArray[np.float64], h: HeightField, phases: PhasePair
) -> NDArray[np.float64]:
    """R = (linear stress rows) − G(u, π, h), the defect of the nonlinear interface conditions."""
    return _linear_interface_rows(u, pressure_jump, h, phases) - eval_G(u, pressure_jump, h, phases)


def check_compatibility(
    u0: TwoPhaseField,
    h0: NDArray[np.float64] | HeightField,
    phases: PhasePair,
    tol: float = DEFAULT_COMPAT_TOL,
) -> CompatibilityReport:
    """Evaluate the compatibility conditions of (u₀, h₀) in both equivalent forms.

    Also returns the induced interface pressure jump ⟦θ₀⟧ = n·⟦2μE⟧n + σH_Γ + ⟦ρ⟧γ_a h₀.
    """
    grid = u0.grid
    h = h0 if isinstance(h0, HeightField) else HeightField(h0, grid)
    n = grid.dim

    f_d, _ = eval_Fd(u0, h)
    divergence = sum(d_direction(u0[j], j) for j in range(n)) - f_d

    deformation = transformed_deformation(u0, h)
    traces = (deformation.trace_lower(), deformation.trace_upper())
    stresses = []
    for phase in PHASES:
        e = traces[phase]
        mu = phases.model(phase).mu(np.sum(e**2, axis=(0, 1)))
        stresses.append(2.0 * mu * e)
    jump = stresses[1] - stresses[0]

    jet = h.jet
    metric = jet.metric
    normal = np.concatenate([-jet.gradient, np.ones_like(metric)[np.newaxis]], axis=0) / metric
    traction = np.einsum("ij...,j...->i...", jump, normal)
    normal_traction = np.sum(normal * traction, axis=0)
    tangential = traction - normal_traction * normal

    split = curvature_split(h)
    restoring = phases.sigma * split.mean_curvature + phases.jump_rho * phases.gamma_a * h.values
    pressure_jump = normal_traction + restoring
    residual = interface_residual(u0, pressure_jump, h, phases)

    report = CompatibilityReport(
        velocity_jump=float(np.max(np.abs(u0.jump()))),
        divergence=divergence.max_abs(),
        tangential_stress=float(np.max(np.abs(tangential))),
        g_form=float(np.max(np.abs(residual / metric))),
        tolerance=tol,
        pressure_jump=pressure_jump,
        tangential_residual=tangential,
        g_form_residual=residual,
    )
    _LOGGER.debug("[compat] %s", report.to_dict())
    return report


def inverse_norm_estimate(
    data: DataF, u0: TwoPhaseField, h0: NDArray[np.float64], z: StateZ, norm_config: NormConfig
) -> float:
    """‖z‖_𝔼 / (‖data‖_𝔽 + ‖(u₀, h₀)‖_𝕀), the measured continuity constant of L⁻¹."""
    numerator = state_norm(z, norm_config)
    denominator = data_norm(data, norm_config) + norm_initial(u0, h0, norm_config)
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator


@dataclass
class SmallnessReport:
    """Log–log slope of ε ↦ ‖N(εz)‖_𝔽."""

    epsilons: list[float]
    norms: list[float]
    slope: float | None
    degenerate: bool

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {"epsilons": self.epsilons, "norms": self.norms, "slope": self.slope, "degenerate": self.degenerate}


def smallness_probe(
    z: StateZ, phases: PhasePair, epsilons: Sequence[float], norm_config: NormConfig
) -> SmallnessReport:
    """Measure how fast N(εz) vanishes as ε → 0 (slope 2 for a quadratic remainder)."""
    eps = [float(e) for e in epsilons]
    norms = [data_norm(eval_N(z * e, phases), norm_config) for e in eps]
    if len(eps) < 2 or min(norms) <= 0.0:
        _LOGGER.warning("[probe] smallness probe is degenerate (norms %s)", norms)
        return SmallnessReport(eps, norms, None, True)
    slope = float(np.polyfit(np.log(eps), np.log(norms), 1)[0])
    _LOGGER.info("[probe] ‖N(εz)‖ slope %.3f over ε=%s", slope, eps)
    return SmallnessReport(eps, norms, slope, False)


def directional_derivative_probe(
    z: StateZ, phases: PhasePair, epsilons: Sequence[float], norm_config: NormConfig
) -> list[float]:
    """‖(N(εz) − N(−εz))/(2ε)‖_𝔽 for each ε; tends to 0 when DN(0) = 0."""
    values = []
    for e in epsilons:
        difference = eval_N(z * e, phases) + eval_N(z * (-e), phases) * -1.0
        values.append(data_norm(difference * (0.5 / e), norm_config))
    return values


@dataclass
class PhysicalTrajectory:
    """Push-forward of a trajectory to physical coordinates."""

    time: TimeGrid
    velocity: list[PhysicalField]
    pressure: list[PhysicalField]
    interface: NDArray[np.float64]

    def interface_points(self, n: int) -> NDArray[np.float64]:
        """Points (x′, h(t_n, x′)) of Γ(t_n), shape ``(N, *horizontal)``."""
        grid = self.velocity[n].grid
        return np.stack([*grid.horizontal_mesh(), self.interface[n]])


def pushforward_solution(
    z: StateZ, phases: PhasePair, levels: NDArray[np.float64] | None = None
) -> PhysicalTrajectory:
    """(v, π_phys, Γ) with π_phys = θ − ρ_i γ_a x_N in each fluid.

    Raises:
        DomainError: if |h| ≥ L_v at some node or a level leaves the strip.
    """
    velocity, pressure = [], []
    for n in range(z.time.n_nodes):
        h = z.height_at(n)
        at = default_levels(h) if levels is None else levels
        velocity.append(pushforward(z.velocity[n], h, at))
        theta = pushforward(z.pressure[n], h, at)
        rho = np.where(theta.phase, phases.rho2, phases.rho1)
        values = theta.values - rho * phases.gamma_a * theta.column_levels
        pressure.append(PhysicalField(levels=theta.levels, values=values, phase=theta.phase, grid=theta.grid))
    return PhysicalTrajectory(time=z.time, velocity=velocity, pressure=pressure, interface=z.height.copy())


def interface_residual_series(z: StateZ, phases: PhasePair) -> NDArray[np.float64]:
    """max|R| of the interface conditions at every node after the first."""
    values = np.zeros(z.time.n_nodes)
    for n in range(1, z.time.n_nodes):
        values[n] = float(np.max(np.abs(interface_residual(z.velocity[n], z.pressure_jump[n], z.height_at(n), phases))))
    return values


class FixedPointCoordinator:
    """Drive Φ(z) = L⁻¹(N(z), u₀, h₀) to a fixed point on one grid."""

    def __init__(
        self,
        phases: PhasePair,
        time: TimeGrid,
        config: SolveConfig | None = None,
        norm_config: NormConfig | None = None,
        threads: int | None = None,
    ) -> None:
        """Initialize the coordinator."""
        self.phases = phases
        self.time = time
        self.config = config or SolveConfig()
        self.norm_config = norm_config
        self.threads = threads
        self.params = LinearParams.from_phases(phases)

    def _norms(self, grid_dim: int) -> NormConfig:
        return self.norm_config or NormConfig(dim=grid_dim)

    def check(self, u0: TwoPhaseField, h0: NDArray[np.float64]) -> CompatibilityReport:
        """Compatibility report with the configured tolerance."""
        return check_compatibility(u0, h0, self.phases, self.config.compat_tol)

    def solve(self, u0: TwoPhaseField, h0: NDArray[np.float64]) -> tuple[StateZ, ConvergenceReport]:
        """Iterate from z⁰ = L⁻¹(0, u₀, h₀).

        Raises:
            IncompatibleDataError: if (u₀, h₀) fail the compatibility check.
        """
        grid = u0.grid
        h0 = np.asarray(h0, dtype=float)
        norms = self._norms(grid.dim)
        compat = self.check(u0, h0)
        if not compat.passed:
            raise IncompatibleDataError(
                "initial data violate " + ", ".join(compat.failing()),
                report=compat,
            )
        pi0 = compat.pressure_jump
        report = ConvergenceReport(eps0_report=norm_initial(u0, h0, norms))
        if report.eps0_report is not None and report.eps0_report > self.config.delta0_guard:
            _LOGGER.warning(
                "[picard] initial data are large: ‖(u0, h0)‖_I = %.3e > delta0_guard = %.3e",
                report.eps0_report,
                self.config.delta0_guard,
            )

        solver = LinearStokesSolver(grid, self.time, self.params, threads=self.threads)
        z = solver.solve(DataF.zeros(grid, self.time), u0, h0, pi0=pi0)
        growth = 0
        for iteration in range(1, self.config.max_iter + 1):
            data = eval_N(z, self.phases)
            z_next = solver.solve(data, u0, h0, pi0=pi0)
            residual = state_norm(z_next - z, norms)
            size = state_norm(z_next, norms)
            report.residuals.append(residual)
            report.state_norms.append(size)
            report.data_norms.append(data_norm(data, norms))
            report.inverse_norm_estimates.append(inverse_norm_estimate(data, u0, h0, z_next, norms))
            _LOGGER.debug("[picard] iteration %d: residual=%.3e norm=%.3e", iteration, residual, size)
            z = z_next
            if residual <= self.config.tol * size:
                report.status = STATUS_CONVERGED
                break
            if not np.isfinite(size) or size > self.config.delta0_guard:
                report.status = STATUS_DIVERGED
                _LOGGER.warning("[picard] iterate left the ball: ‖z‖ = %.3e", size)
                break
            if len(report.residuals) > 1 and residual > report.residuals[-2]:
                growth += 1
                if growth >= self.config.divergence_patience:
                    report.status = STATUS_DIVERGED
                    _LOGGER.warning("[picard] residual grew for %d consecutive iterations", growth)
                    break
            else:
                growth = 0
        _LOGGER.info("[picard] %s after %d iterations", report.status, report.iterations)
        return z, report


def picard_solve(
    u0: TwoPhaseField,
    h0: NDArray[np.float64],
    phases: PhasePair,
    time: TimeGrid,
    config: SolveConfig | None = None,
    norm_config: NormConfig | None = None,
    threads: int | None = None,
) -> tuple[StateZ, ConvergenceReport]:
    """Solve the nonlinear two-phase problem by Picard iteration."""
    return FixedPointCoordinator(phases, time, config, norm_config, threads).solve(u0, h0)


def basin_probe(
    u0: TwoPhaseField,
    h0: NDArray[np.float64],
    phases: PhasePair,
    time: TimeGrid,
    factors: Iterable[float],
    config: SolveConfig | None = None,
    norm_config: NormConfig | None = None,
) -> dict[float, str]:
    """Picard status for each scaling λ of the data (λu₀, λh₀)."""
    coordinator = FixedPointCoordinator(phases, time, config, norm_config)
    statuses = {}
    for factor in factors:
        _, report = coordinator.solve(u0 * factor, np.asarray(h0) * factor)
        statuses[float(factor)] = report.status
    return statuses
