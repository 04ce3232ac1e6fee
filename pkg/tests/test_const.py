"""Tests for two-phase flow constants."""

from __future__ import annotations

import json
from unittest.mock import mock_open, patch

from twophase_flow.const import (
    DEFAULT_DIM,
    DEFAULT_FAMILY,
    DEFAULT_FORMATS,
    DEFAULT_N_H,
    DEFAULT_N_V,
    DEFAULT_P,
    DEFAULT_QUADRATURE,
    DOMAIN,
    EXCLUDED_P_VALUES,
    EXIT_CONFIG_ERROR,
    EXIT_DIVERGED,
    EXIT_INCOMPATIBLE,
    EXIT_OK,
    EXPORTABLE_SERIES,
    HEIGHT_KINDS,
    OUTPUT_FORMATS,
    QUADRATURE_RULES,
    VELOCITY_KINDS,
    VERSION,
    VISCOSITY_FAMILIES,
    get_version,
)


class TestDomainConstant:
    """Test domain constant."""

    def test_domain_is_string(self):
        """Test that DOMAIN is a non-empty string."""
        assert isinstance(DOMAIN, str)
        assert DOMAIN == "twophase_flow"


class TestExitCodes:
    """Test exit code constants."""

    def test_exit_codes_distinct(self):
        """Test that every outcome has its own exit code."""
        codes = [EXIT_OK, EXIT_DIVERGED, EXIT_INCOMPATIBLE, EXIT_CONFIG_ERROR]
        assert len(set(codes)) == 4

    def test_exit_code_values(self):
        """Test the documented exit code values."""
        assert (EXIT_OK, EXIT_DIVERGED, EXIT_INCOMPATIBLE, EXIT_CONFIG_ERROR) == (0, 2, 3, 4)


class TestDefaults:
    """Test default values."""

    def test_default_p_admissible(self):
        """Test that the default exponent satisfies p > N + 2 for the default dimension."""
        assert DEFAULT_P > DEFAULT_DIM + 2
        assert DEFAULT_P not in EXCLUDED_P_VALUES

    def test_default_grid_sizes(self):
        """Test that default grid sizes meet the grid rules."""
        assert DEFAULT_N_H % 2 == 0
        assert DEFAULT_N_H >= 8
        assert DEFAULT_N_V >= 8

    def test_default_choices_are_listed(self):
        """Test that defaults belong to their option lists."""
        assert DEFAULT_FAMILY in VISCOSITY_FAMILIES
        assert DEFAULT_QUADRATURE in QUADRATURE_RULES
        assert all(fmt in OUTPUT_FORMATS for fmt in DEFAULT_FORMATS)

    def test_initial_data_kinds(self):
        """Test that the zero selector exists for both initial fields."""
        assert "zero" in HEIGHT_KINDS
        assert "zero" in VELOCITY_KINDS

    def test_exportable_series(self):
        """Test the names of exportable series."""
        assert set(EXPORTABLE_SERIES) == {"height", "spectrum", "pressure_jump", "interface_residual"}


class TestGetVersion:
    """Test get_version function."""

    def test_version_is_string(self):
        """Test that VERSION is a string."""
        assert isinstance(VERSION, str)

    def test_version_from_manifest(self):
        """Test that VERSION is read from manifest.json."""
        assert VERSION != "unknown"

    def test_get_version_file_not_found(self):
        """Test get_version returns 'unknown' when manifest.json not found."""
        with patch("builtins.open", side_effect=FileNotFoundError()):
            assert get_version() == "unknown"

    def test_get_version_invalid_json(self):
        """Test get_version returns 'unknown' when manifest.json is invalid."""
        with patch("builtins.open", mock_open(read_data="invalid json {")):
            assert get_version() == "unknown"

    def test_get_version_missing_version_key(self):
        """Test get_version returns 'unknown' when version key is missing."""
        with patch("builtins.open", mock_open(read_data=json.dumps({"domain": "test"}))):
            assert get_version() == "unknown"

    def test_get_version_valid_manifest(self):
        """Test get_version returns version from valid manifest."""
        with patch("builtins.open", mock_open(read_data=json.dumps({"version": "1.2.3"}))):
            assert get_version() == "1.2.3"
