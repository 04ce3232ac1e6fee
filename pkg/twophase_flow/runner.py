"""Run orchestration and artifacts: check, Picard solve, diagnostics and plot-ready series."""

from __future__ import annotations

import json
import logging
import zipfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .config import RunConfig, dump_config, load_config
from .const import (
    COMPATIBILITY_FILE,
    CONFIG_ECHO_FILE,
    CONVERGENCE_FILE,
    EXIT_INCOMPATIBLE,
    EXPORTABLE_SERIES,
    FORMAT_CSV,
    FORMAT_NPZ,
    MANIFEST_FILE,
    NORMS_FILE,
    OUTPUT_FORMATS,
    SERIES_HEIGHT,
    SERIES_INTERFACE_RESIDUAL,
    SERIES_PRESSURE_JUMP,
    SERIES_SPECTRUM,
    TRAJECTORY_FILE,
    VERSION,
)
from .coordinator import (
    CompatibilityReport,
    ConvergenceReport,
    FixedPointCoordinator,
    SmallnessReport,
    interface_residual_series,
    smallness_probe,
)
from .exceptions import ConfigurationError, IncompatibleDataError
from .models import DataF, StateZ
from .nonlinear import eval_N
from .norms import (
    algebra_inequality_probe,
    classical_regularity_report,
    norm_E_spaces,
    norm_F_spaces,
    norm_initial,
)
from .stokes import LinearParams, solve_linear_evolution

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from .grid import StripGrid, TimeGrid

_LOGGER = logging.getLogger(__name__)

SNAPSHOT_DIR = "snapshots"
NPZ_DATE_TIME = (1980, 1, 1, 0, 0, 0)  # earliest zip timestamp; members carry no wall-clock time
STATUS_INCOMPATIBLE = "incompatible"


@dataclass
class RunManifest:
    """Summary written once at the end of every run."""

    config_hash: str
    version: str = VERSION
    started_at: str = ""
    finished_at: str = ""
    status: str = ""
    exit_code: int = 0
    final_norms: dict[str, float] = field(default_factory=dict)
    convergence: dict[str, Any] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for persistence."""
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "status": self.status,
            "exit_code": self.exit_code,
            "final_norms": dict(self.final_norms),
            "convergence": dict(self.convergence),
            "artifacts": list(self.artifacts),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        """Create from dictionary."""
        return cls(
            config_hash=data["config_hash"],
            version=data.get("version", VERSION),
            started_at=data.get("started_at", ""),
            finished_at=data.get("finished_at", ""),
            status=data.get("status", ""),
            exit_code=int(data.get("exit_code", 0)),
            final_norms={k: float(v) for k, v in data.get("final_norms", {}).items()},
            convergence=dict(data.get("convergence", {})),
            artifacts=list(data.get("artifacts", [])),
        )


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _read_json(path: Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _write_npz(path: Path, arrays: dict[str, Any]) -> None:
    """Uncompressed npz archive readable by ``np.load``, byte-identical for identical arrays."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        for name, value in arrays.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=NPZ_DATE_TIME)
            with archive.open(info, "w", force_zip64=True) as member:
                np.lib.format.write_array(member, np.asanyarray(value), allow_pickle=False)


def _convergence_summary(report: ConvergenceReport) -> dict[str, Any]:
    return {
        "status": report.status,
        "iterations": report.iterations,
        "final_residual": report.residuals[-1] if report.residuals else None,
        "eps0_report": report.eps0_report,
    }


def _diagnostics(z: StateZ, config: RunConfig, u0: Any, h0: NDArray[np.float64]) -> dict[str, Any]:
    """Norm report of the final iterate and of its nonlinear data."""
    state = norm_E_spaces(z, config.norms)
    data = norm_F_spaces(eval_N(z, config.phases), config.norms)
    return {
        "state": state,
        "data": data,
        "initial": norm_initial(u0, h0, config.norms),
        "classical": classical_regularity_report(z),
        "coupling": z.coupling_defects(),
    }


def _write_snapshots(run_dir: Path, z: StateZ, cadence: int) -> list[str]:
    """Velocity blocks every ``cadence`` nodes, last node always included."""
    target = run_dir / SNAPSHOT_DIR
    target.mkdir(parents=True, exist_ok=True)
    nodes = sorted({*range(0, z.time.n_nodes, cadence), z.time.n_nodes - 1})
    written = []
    for n in nodes:
        name = f"velocity_{n:05d}.npz"
        _write_npz(
            target / name,
            {"t": np.asarray(z.time.nodes[n]), "lower": z.velocity.lower[n], "upper": z.velocity.upper[n]},
        )
        written.append(f"{SNAPSHOT_DIR}/{name}")
    _LOGGER.debug("[run] wrote %d velocity snapshots", len(written))
    return written


def run(config: RunConfig, run_dir: str | Path | None = None, threads: int | None = None) -> tuple[int, RunManifest]:
    """Check, solve and write every artifact of one run.

    Returns:
        The exit code (0 converged, 2 diverged or max_iter, 3 incompatible) and the manifest.
    """
    target = Path(run_dir or config.output.directory)
    target.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_hash=config.config_hash(), started_at=_utcnow())
    _LOGGER.info("[run] starting %s (hash %s)", target, manifest.config_hash[:12])

    dump_config(config, target / CONFIG_ECHO_FILE)
    manifest.artifacts.append(CONFIG_ECHO_FILE)

    u0, h0 = config.initial_data()
    coordinator = FixedPointCoordinator(config.phases, config.time, config.solver, config.norms, threads)
    compat = coordinator.check(u0, h0)
    _write_json(target / COMPATIBILITY_FILE, compat.to_dict())
    manifest.artifacts.append(COMPATIBILITY_FILE)

    try:
        z, report = coordinator.solve(u0, h0)
    except IncompatibleDataError as err:
        _LOGGER.error("[run] %s", err)
        manifest.status = STATUS_INCOMPATIBLE
        manifest.exit_code = EXIT_INCOMPATIBLE
        manifest.finished_at = _utcnow()
        _write_json(target / MANIFEST_FILE, manifest.to_dict())
        return manifest.exit_code, manifest

    _write_npz(target / TRAJECTORY_FILE, z.to_arrays())
    _write_json(target / CONVERGENCE_FILE, report.to_dict())
    diagnostics = _diagnostics(z, config, u0, h0)
    _write_json(target / NORMS_FILE, diagnostics)
    manifest.artifacts.extend([TRAJECTORY_FILE, CONVERGENCE_FILE, NORMS_FILE])
    manifest.artifacts.extend(_write_snapshots(target, z, config.output.cadence))

    for quantity in EXPORTABLE_SERIES:
        for fmt in config.output.formats:
            path = export_series(target, quantity, fmt, state=z, config=config)
            manifest.artifacts.append(path.name)

    manifest.status = report.status
    manifest.exit_code = report.exit_code
    manifest.final_norms = dict(diagnostics["state"])
    manifest.convergence = _convergence_summary(report)
    manifest.finished_at = _utcnow()
    _write_json(target / MANIFEST_FILE, manifest.to_dict())
    _LOGGER.info("[run] %s, %d artifacts in %s", manifest.status, len(manifest.artifacts), target)
    return manifest.exit_code, manifest


def check(config: RunConfig) -> CompatibilityReport:
    """Compatibility of the configured initial data, without solving."""
    u0, h0 = config.initial_data()
    return FixedPointCoordinator(config.phases, config.time, config.solver, config.norms).check(u0, h0)


def load_state(run_dir: str | Path) -> tuple[StateZ, RunConfig]:
    """Re-read the trajectory and the echoed config of a finished run."""
    run_dir = Path(run_dir)
    config = load_config(run_dir / CONFIG_ECHO_FILE)
    trajectory = run_dir / TRAJECTORY_FILE
    if not trajectory.exists():
        raise ConfigurationError(f"no trajectory in {run_dir}")
    with np.load(trajectory) as arrays:
        z = StateZ.from_arrays(dict(arrays), config.grid, config.time)
    return z, config


def _horizontal_columns(grid: StripGrid) -> list[str]:
    return [f"x{j + 1}" for j in range(grid.dim - 1)]


def _long_table(z: StateZ, values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rows (t, x′..., value) for a torus series of shape ``(n_t + 1, *horizontal)``."""
    grid = z.grid
    mesh = [np.broadcast_to(x, values.shape).ravel() for x in grid.horizontal_mesh()]
    t = np.broadcast_to(z.time.nodes.reshape((-1,) + (1,) * (grid.dim - 1)), values.shape).ravel()
    return np.column_stack([t, *mesh, values.ravel()])


def height_spectrum(z: StateZ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(k, |ĥ(t, k)|) along the last horizontal direction, normalized Fourier coefficients."""
    grid = z.grid
    axes = tuple(range(1, grid.dim))
    spectrum = np.abs(np.fft.rfftn(z.height, axes=axes)) / grid.n_h ** (grid.dim - 1)
    if grid.dim == 3:
        spectrum = spectrum[:, 0, :]
    k, _ = grid.axis_wavenumbers(grid.dim - 2)
    return k, spectrum


def series_table(z: StateZ, config: RunConfig, quantity: str) -> tuple[list[str], NDArray[np.float64]]:
    """Column names and rows of one exportable quantity.

    Raises:
        ConfigurationError: for an unknown quantity name.
    """
    columns = ["t"]
    if quantity == SERIES_HEIGHT:
        return [*columns, *_horizontal_columns(z.grid), "h"], _long_table(z, z.height)
    if quantity == SERIES_PRESSURE_JUMP:
        return [*columns, *_horizontal_columns(z.grid), "pressure_jump"], _long_table(z, z.pressure_jump)
    if quantity == SERIES_SPECTRUM:
        k, spectrum = height_spectrum(z)
        t = np.repeat(z.time.nodes, k.size)
        return [*columns, "k", "abs_h_hat"], np.column_stack([t, np.tile(k, z.time.n_nodes), spectrum.ravel()])
    if quantity == SERIES_INTERFACE_RESIDUAL:
        residual = interface_residual_series(z, config.phases)
        return [*columns, "max_abs_residual"], np.column_stack([z.time.nodes, residual])
    raise ConfigurationError(f"unknown series {quantity!r}; expected one of {EXPORTABLE_SERIES}")


def export_series(
    run_dir: str | Path,
    quantity: str,
    fmt: str = FORMAT_CSV,
    *,
    state: StateZ | None = None,
    config: RunConfig | None = None,
) -> Path:
    """Write ``<quantity>.<fmt>`` into the run directory and return its path.

    CSV files carry a header naming the columns; all quantities are nondimensional.
    """
    run_dir = Path(run_dir)
    if fmt not in OUTPUT_FORMATS:
        raise ConfigurationError(f"unknown format {fmt!r}; expected one of {OUTPUT_FORMATS}")
    if state is None or config is None:
        state, config = load_state(run_dir)
    columns, rows = series_table(state, config, quantity)
    path = run_dir / f"{quantity}.{fmt}"
    if fmt == FORMAT_NPZ:
        _write_npz(path, {name: rows[:, i] for i, name in enumerate(columns)})
    else:
        np.savetxt(path, rows, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    _LOGGER.debug("[export] %s -> %s (%d rows)", quantity, path, rows.shape[0])
    return path


def read_series(path: str | Path) -> dict[str, NDArray[np.float64]]:
    """Columns of an exported series, keyed by header name."""
    path = Path(path)
    if path.suffix == f".{FORMAT_NPZ}":
        with np.load(path) as arrays:
            return {name: np.asarray(arrays[name]) for name in arrays.files}
    with open(path, encoding="utf-8") as f:
        columns = f.readline().strip().split(",")
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: rows[:, i] for i, name in enumerate(columns)}


def read_manifest(run_dir: str | Path) -> RunManifest:
    """Manifest of a finished run."""
    return RunManifest.from_dict(_read_json(Path(run_dir) / MANIFEST_FILE))


def probe_smallness(config: RunConfig, epsilons: list[float]) -> SmallnessReport:
    """Scaling of ‖N(εz)‖ along the linear trajectory z = L⁻¹(0, u₀, h₀) of the configured data."""
    u0, h0 = config.initial_data()
    compat = check(config)
    direction = solve_linear_evolution(
        DataF.zeros(config.grid, config.time),
        u0,
        h0,
        LinearParams.from_phases(config.phases),
        pi0=compat.pressure_jump,
        check=False,
    )
    return smallness_probe(direction, config.phases, epsilons, config.norms)


def random_interface_series(
    grid: StripGrid, time: TimeGrid, rng: np.random.Generator, modes: int = 3
) -> NDArray[np.float64]:
    """Smooth random torus series ``(n_t + 1, *horizontal)``: a few Fourier modes with polynomial time factors."""
    mesh = grid.horizontal_mesh()
    t = time.nodes.reshape((-1,) + (1,) * (grid.dim - 1))
    values = np.zeros((time.n_nodes, *grid.horizontal_shape))
    for _ in range(modes):
        k = rng.integers(-3, 4, size=grid.dim - 1)
        phase = sum(kj * x / grid.length_h for kj, x in zip(k, mesh, strict=True))
        a, b, c = rng.normal(size=3)
        values = values + (a + b * t + c * t**2) * np.cos(phase + rng.uniform(0.0, 2.0 * np.pi))
    return values


def probe_norms(config: RunConfig, pairs: int = 20, seed: int = 0) -> dict[str, float]:
    """Measured multiplication and composition constants over random smooth pairs."""
    rng = np.random.default_rng(seed)
    samples = [
        (random_interface_series(config.grid, config.time, rng), random_interface_series(config.grid, config.time, rng))
        for _ in range(pairs)
    ]
    return algebra_inequality_probe(
        samples, config.grid, config.time, config.norms.p, quadrature=config.norms.quadrature
    )
