"""Right-hand sides of the flattened two-phase system.

With ν = μ(0) frozen into the linear operator, everything else is collected in

    N(u, θ, π, h) = (F(u, θ, h), F_d(u, h), G(u, π, h), G_h(u, h)).

Each phase is evaluated on its own block with its own material data; interface terms are built
from one-sided traces and jumps are upper minus lower. Every operator vanishes at z = 0 and is at
least quadratic there.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from .constitutive import PhasePair, a_tensor, contract_second_derivatives
from .geometry import HeightField, curvature_split, f_correction, transformed_deformation, velocity_gradient
from .grid import LOWER, PHASES, UPPER, TwoPhaseField, d_second, d_vertical, dealias, dealias_field
from .models import DataF, StateZ

if TYPE_CHECKING:
    from numpy.typing import NDArray

_LOGGER = logging.getLogger(__name__)


def _stack_pairs(fields: list[list[TwoPhaseField]]) -> TwoPhaseField:
    """Stack a nested [j][k] list of equally shaped fields into leading axes (j, k)."""
    grid = fields[0][0].grid
    lower = np.stack([np.stack([f.lower for f in row]) for row in fields])
    upper = np.stack([np.stack([f.upper for f in row]) for row in fields])
    return TwoPhaseField(lower, upper, grid)


def second_derivative_tensor(u: TwoPhaseField) -> TwoPhaseField:
    """Flattened second derivatives indexed [j, k, l] = D_jD_k u_l."""
    n = u.grid.dim
    return _stack_pairs([[d_second(u, j, k) for k in range(n)] for j in range(n)])


def correction_tensor(u: TwoPhaseField, h: HeightField) -> TwoPhaseField:
    """Chain-rule corrections indexed [j, k, l] = 𝓕_jk(h) u_l."""
    n = u.grid.dim
    return _stack_pairs([[f_correction(h, u, j, k) for k in range(n)] for j in range(n)])


def eval_A(u: TwoPhaseField, h: HeightField, phases: PhasePair) -> TwoPhaseField:
    """𝓐(u, h): the viscosity nonlinearity left over after freezing μ at zero shear.

    𝓐_i = 2 Σ_jkl (A_i^{jkl}(E) − A_i^{jkl}(0)) (∂_j∂_k u_l + ∂_j∂_l u_k) with the pulled-back
    second derivatives ∂_j∂_k u_l = D_jD_k u_l − 𝓕_jk(h)u_l. Newtonian phases give exactly zero.
    """
    grid = u.grid
    if phases.is_newtonian:
        return TwoPhaseField.zeros(grid, (grid.dim,))
    deformation = transformed_deformation(u, h)
    physical_hessian = second_derivative_tensor(u) - correction_tensor(u, h)
    zero = np.zeros_like(deformation.lower)
    blocks = []
    for phase in PHASES:
        model = phases.model(phase)
        if model.is_newtonian:
            blocks.append(np.zeros_like(u.lower))
            continue
        difference = a_tensor(model, deformation.block(phase)) - a_tensor(model, zero)
        blocks.append(2.0 * contract_second_derivatives(difference, physical_hessian.block(phase)))
    return TwoPhaseField(blocks[LOWER], blocks[UPPER], grid)


def _interface_traces(u: TwoPhaseField, h: HeightField) -> list[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """Per phase: (gradient trace [i, j] = D_j u_i, |E|² trace) at ξ_N = 0."""
    gradient = velocity_gradient(u)
    deformation = transformed_deformation(u, h)
    grad_traces = (gradient.trace_lower(), gradient.trace_upper())
    e_traces = (deformation.trace_lower(), deformation.trace_upper())
    return [(grad_traces[p], np.sum(e_traces[p] ** 2, axis=(0, 1))) for p in PHASES]


def eval_B(u: TwoPhaseField, h: HeightField, phases: PhasePair) -> NDArray[np.float64]:
    """𝓑(u, h) = (𝓑_1, …, 𝓑_N) on the interface, from one-sided traces.

    Tangential rows (j < N−1, sums over horizontal k):

        𝓑_j = −⟦μ D_Nu_N⟧D_jh + ⟦(μ−μ(0))(D_Nu_j + D_ju_N)⟧
              − Σ_k ⟦μ(D_ju_k + D_ku_j)⟧D_kh + Σ_k ⟦μ(D_Nu_j D_kh + D_Nu_k D_jh)⟧D_kh

    Normal row:

        𝓑_N = 2⟦(μ−μ(0))D_Nu_N⟧ + ⟦μ D_Nu_N⟧|∇′h|² − Σ_k ⟦μ(D_Nu_k + D_ku_N)⟧D_kh

    with μ = μ_d(|γE(u, h)|²) evaluated on the trace of E.
    """
    grid = u.grid
    n = grid.dim
    vertical = n - 1
    g = h.jet.gradient
    grad_sq = h.jet.grad_sq
    per_phase = []
    for phase, (grad, s) in zip(PHASES, _interface_traces(u, h), strict=True):
        model = phases.model(phase)
        mu = model.mu(s)
        mu0 = model.mu0
        # grad[i, j] = D_j u_i
        dn = grad[:, vertical]  # D_N u_i
        rows = np.empty((n, *grid.horizontal_shape))
        for j in range(n - 1):
            value = -mu * dn[vertical] * g[j] + (mu - mu0) * (dn[j] + grad[vertical, j])
            for k in range(n - 1):
                value = value - mu * (grad[k, j] + grad[j, k]) * g[k]
                value = value + mu * (dn[j] * g[k] + dn[k] * g[j]) * g[k]
            rows[j] = value
        normal = 2.0 * (mu - mu0) * dn[vertical] + mu * dn[vertical] * grad_sq
        for k in range(n - 1):
            normal = normal - mu * (dn[k] + grad[vertical, k]) * g[k]
        rows[vertical] = normal
        per_phase.append(rows)
    return per_phase[UPPER] - per_phase[LOWER]


def eval_F(
    u: TwoPhaseField,
    theta: TwoPhaseField,
    h: HeightField,
    dh_dtau: NDArray[np.float64],
    phases: PhasePair,
) -> TwoPhaseField:
    """F(u, θ, h) = ρ{(∂_τh)D_Nu − (u·∇)u + (u′·∇′h)D_Nu} − μ(0)Σ_j𝓕_jj(h)u + (∇h)D_Nθ + 𝓐(u, h).

    The convective term uses flattened derivatives D_j. The pressure term vanishes for i = N since
    D_N h = 0.
    """
    grid = u.grid
    n = grid.dim
    g = h.jet.full_gradient
    dn_u = d_vertical(u)
    gradient = velocity_gradient(u)
    dn_theta = d_vertical(theta)
    slope_flux = sum(u[j] * g[j] for j in range(n - 1))  # u′·∇′h
    correction = sum(f_correction(h, u, j, j) for j in range(n - 1))
    viscous = eval_A(u, h, phases)

    def assemble(phase: int) -> NDArray[np.float64]:
        rho = phases.density(phase)
        mu0 = phases.model(phase).mu0
        vel = u.block(phase)
        grad = gradient.block(phase)
        dn = dn_u.block(phase)
        convective = np.einsum("j...,ij...->i...", vel, grad)  # Σ_j u_j D_j u_i
        inertia = rho * (dh_dtau * dn - convective + slope_flux.block(phase) * dn)
        pressure = g[:, np.newaxis] * dn_theta.block(phase)[np.newaxis]
        return inertia - mu0 * correction.block(phase) + pressure + viscous.block(phase)

    return TwoPhaseField(assemble(LOWER), assemble(UPPER), grid)


def eval_Fd(u: TwoPhaseField, h: HeightField) -> tuple[TwoPhaseField, TwoPhaseField]:
    """F_d(u, h) = (D_N u′)·∇′h together with its potential φ = u′·∇′h, F_d = D_Nφ."""
    g = h.jet.gradient
    n = u.grid.dim
    divergence = sum(d_vertical(u[j]) * g[j] for j in range(n - 1))
    potential = sum(u[j] * g[j] for j in range(n - 1))
    return divergence, potential


def eval_G(u: TwoPhaseField, pressure_jump: NDArray[np.float64], h: HeightField, phases: PhasePair) -> NDArray[np.float64]:
    """G(u, π, h) on the interface.

    G_j = σ𝓗(h)D_jh − {(⟦ρ⟧γ_a + σΔ′)h}D_jh + πD_jh + 𝓑_j and G_N = −σ𝓗(h) + 𝓑_N.
    """
    grid = u.grid
    n = grid.dim
    split = curvature_split(h)
    g = h.jet.gradient
    restoring = phases.jump_rho * phases.gamma_a * h.values + phases.sigma * split.laplacian
    out = eval_B(u, h, phases)
    for j in range(n - 1):
        out[j] += (phases.sigma * split.correction - restoring + pressure_jump) * g[j]
    out[n - 1] += -phases.sigma * split.correction
    return out


def eval_Gh(u: TwoPhaseField, h: HeightField) -> NDArray[np.float64]:
    """G_h(u, h) = −u′·∇′h with u′ traced from below (⟦u⟧ = 0)."""
    g = h.jet.gradient
    trace = u.trace_lower()
    return -np.sum(trace[: u.grid.dim - 1] * g, axis=0)


def height_rate(z: StateZ, n: int) -> NDArray[np.float64]:
    """∂_τh at node n: backward difference, forward at the first node."""
    dt = z.time.dt
    if n == 0:
        return (z.height[1] - z.height[0]) / dt
    return (z.height[n] - z.height[n - 1]) / dt


def eval_N(z: StateZ, phases: PhasePair) -> DataF:
    """N(z) at every time node, with the 2/3 rule applied to each component."""
    grid = z.grid
    force, divergence, potential, stress, kinematic = [], [], [], [], []
    for n in range(z.time.n_nodes):
        h = z.height_at(n)
        u = z.velocity[n]
        theta = z.pressure[n]
        dh = height_rate(z, n)
        force.append(dealias_field(eval_F(u, theta, h, dh, phases)))
        f_d, phi = eval_Fd(u, h)
        divergence.append(dealias_field(f_d))
        potential.append(dealias_field(phi))
        stress.append(dealias(eval_G(u, z.pressure_jump[n], h, phases), grid))
        kinematic.append(dealias(eval_Gh(u, h), grid))
    _LOGGER.debug("[N] evaluated %d time nodes", z.time.n_nodes)
    return DataF(
        force=TwoPhaseField.stack(force),
        divergence=TwoPhaseField.stack(divergence),
        stress=np.stack(stress),
        kinematic=np.stack(kinematic),
        time=z.time,
        potential=TwoPhaseField.stack(potential),
    )
