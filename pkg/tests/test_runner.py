"""Tests for run orchestration, artifacts and the command line."""

from __future__ import annotations

import zipfile
from pathlib import Path
from typing import Any

import numpy as np
import pytest
import yaml

from twophase_flow.__main__ import main
from twophase_flow.config import load_config, validate_config
from twophase_flow.const import (
    COMPATIBILITY_FILE,
    EXIT_CONFIG_ERROR,
    EXIT_INCOMPATIBLE,
    EXIT_OK,
    MANIFEST_FILE,
    STATUS_CONVERGED,
    TRAJECTORY_FILE,
)
from twophase_flow.exceptions import ConfigurationError
from twophase_flow.runner import (
    NPZ_DATE_TIME,
    STATUS_INCOMPATIBLE,
    export_series,
    load_state,
    probe_norms,
    probe_smallness,
    read_manifest,
    read_series,
    run,
)

EXAMPLES = Path(__file__).parent.parent / "examples_configs"

INCOMPATIBLE: dict[str, Any] = {
    "grid": {"n_h": 16, "n_v": 12},
    "time": {"horizon": 0.2, "steps": 2},
    "phases": {
        "phase1": {"viscosity": {"family": "newtonian", "nu": 1.5}},
        "phase2": {"viscosity": {"family": "newtonian", "nu": 1.0}},
    },
    "initial": {"velocity": {"kind": "stream_modes", "modes": [{"k": [1], "amplitude": 0.01}]}},
}


@pytest.fixture
def zero_run(tmp_path: Path) -> Path:
    """Run the trivial configuration into a temporary directory."""
    code, _ = run(load_config(EXAMPLES / "zero.yaml"), run_dir=tmp_path / "zero")
    assert code == EXIT_OK
    return tmp_path / "zero"


def _write_config(path: Path, raw: dict[str, Any]) -> Path:
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


class TestRun:
    """Test a full run and its artifacts."""

    def test_zero_data(self, zero_run: Path):
        """Test the zero trajectory and its manifest."""
        manifest = read_manifest(zero_run)
        assert manifest.status == STATUS_CONVERGED
        assert manifest.exit_code == EXIT_OK
        assert all(value == 0.0 for value in manifest.final_norms.values())
        for name in ("height.csv", "height.npz", "spectrum.csv", TRAJECTORY_FILE, COMPATIBILITY_FILE):
            assert name in manifest.artifacts
            assert (zero_run / name).exists()
        assert "snapshots/velocity_00005.npz" in manifest.artifacts

    def test_height_series(self, zero_run: Path):
        """Test the exported height table."""
        series = read_series(zero_run / "height.csv")
        assert sorted(series) == ["h", "t", "x1"]
        assert series["t"].size == 6 * 16
        assert np.all(series["h"] == 0.0)

    def test_npz_matches_csv(self, zero_run: Path):
        """Test that both formats carry the same columns."""
        csv = read_series(zero_run / "spectrum.csv")
        npz = read_series(zero_run / "spectrum.npz")
        assert sorted(csv) == sorted(npz) == ["abs_h_hat", "k", "t"]
        np.testing.assert_array_equal(csv["k"], npz["k"])

    def test_reproducible(self, tmp_path: Path):
        """Test that two runs of one configuration write identical artifacts."""
        config = load_config(EXAMPLES / "zero.yaml")
        run(config, run_dir=tmp_path / "a")
        run(config, run_dir=tmp_path / "b")
        for name in ("height.csv", "spectrum.csv", "norms.json", "convergence.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        archives = sorted(path.relative_to(tmp_path / "a") for path in (tmp_path / "a").rglob("*.npz"))
        assert Path(TRAJECTORY_FILE) in archives
        assert Path("snapshots/velocity_00005.npz") in archives
        for relative in archives:
            assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes()
            with zipfile.ZipFile(tmp_path / "a" / relative) as archive:
                assert all(info.date_time == NPZ_DATE_TIME for info in archive.infolist())
        assert read_manifest(tmp_path / "a").config_hash == read_manifest(tmp_path / "b").config_hash

    def test_incompatible(self, tmp_path: Path):
        """Test that incompatible data stop before solving."""
        code, manifest = run(validate_config(INCOMPATIBLE), run_dir=tmp_path / "bad")
        assert code == EXIT_INCOMPATIBLE
        assert manifest.status == STATUS_INCOMPATIBLE
        assert (tmp_path / "bad" / COMPATIBILITY_FILE).exists()
        assert (tmp_path / "bad" / MANIFEST_FILE).exists()
        assert not (tmp_path / "bad" / TRAJECTORY_FILE).exists()

    def test_capillary_relaxation(self, tmp_path: Path):
        """Test that the first interface mode decays monotonically."""
        code, _ = run(load_config(EXAMPLES / "small_sine.yaml"), run_dir=tmp_path / "sine")
        assert code == EXIT_OK
        series = read_series(tmp_path / "sine" / "spectrum.csv")
        first = series["abs_h_hat"][np.isclose(series["k"], 1.0)]
        assert first[0] == pytest.approx(5e-4, rel=1e-9)
        assert np.all(np.diff(first) < 0.0)


class TestExport:
    """Test series export from a finished run."""

    def test_from_disk(self, zero_run: Path):
        """Test exporting after re-reading the trajectory."""
        path = export_series(zero_run, "pressure_jump", "npz")
        assert path.name == "pressure_jump.npz"
        assert sorted(read_series(path)) == ["pressure_jump", "t", "x1"]

    def test_load_state(self, zero_run: Path):
        """Test that the stored trajectory is the zero trajectory."""
        z, config = load_state(zero_run)
        assert z.max_abs() == 0.0
        assert config.time.steps == 5

    def test_unknown_quantity(self, zero_run: Path):
        """Test that an unknown series is a configuration error."""
        with pytest.raises(ConfigurationError, match="unknown series"):
            export_series(zero_run, "vorticity")

    def test_unknown_format(self, zero_run: Path):
        """Test that an unknown format is a configuration error."""
        with pytest.raises(ConfigurationError, match="unknown format"):
            export_series(zero_run, "height", "parquet")

    def test_missing_trajectory(self, tmp_path: Path):
        """Test exporting from an incompatible run."""
        run(validate_config(INCOMPATIBLE), run_dir=tmp_path / "bad")
        with pytest.raises(ConfigurationError, match="no trajectory"):
            export_series(tmp_path / "bad", "height")


class TestProbes:
    """Test the probe helpers on configured data."""

    def test_smallness_of_rest(self):
        """Test that rest gives a degenerate smallness probe."""
        report = probe_smallness(load_config(EXAMPLES / "zero.yaml"), [1e-1, 1e-2])
        assert report.degenerate

    def test_norm_constants(self):
        """Test that the algebra constants are measured."""
        result = probe_norms(load_config(EXAMPLES / "zero.yaml"), pairs=2, seed=1)
        assert all(np.isfinite(value) for value in result.values())


class TestMain:
    """Test the command line."""

    def test_check(self):
        """Test check on compatible data."""
        assert main(["-q", "check", str(EXAMPLES / "zero.yaml")]) == EXIT_OK

    def test_check_incompatible(self, tmp_path: Path):
        """Test check on incompatible data."""
        path = _write_config(tmp_path / "bad.yaml", INCOMPATIBLE)
        assert main(["-q", "check", str(path)]) == EXIT_INCOMPATIBLE

    def test_bad_config(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        """Test that a configuration error exits with code 4."""
        path = _write_config(tmp_path / "bad.yaml", {"norms": {"p": 4}})
        assert main(["-q", "check", str(path)]) == EXIT_CONFIG_ERROR
        assert capsys.readouterr().out == ""

    def test_run_and_export(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        """Test run followed by export."""
        out = tmp_path / "cli"
        assert main(["-q", "run", str(EXAMPLES / "zero.yaml"), "--output", str(out)]) == EXIT_OK
        assert '"status": "converged"' in capsys.readouterr().out
        assert main(["-q", "export", str(out), "spectrum", "--format", "npz"]) == EXIT_OK
        assert (out / "spectrum.npz").exists()

    def test_version(self, capsys: pytest.CaptureFixture[str]):
        """Test --version."""
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
        assert "0.3.0" in capsys.readouterr().out
