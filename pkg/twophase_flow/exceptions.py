"""Exceptions raised by the two-phase flow simulator."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from .const import EXIT_CONFIG_ERROR, EXIT_INCOMPATIBLE

if TYPE_CHECKING:
    from .coordinator import CompatibilityReport


class TwoPhaseFlowError(Exception):
    """Base class for every error raised by this package."""

    exit_code: int = 1


class ConfigurationError(TwoPhaseFlowError, ValueError):
    """Invalid configuration, carrying every violated rule."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, errors: list[str] | str) -> None:
        """Initialize with one or several rule violations."""
        self.errors: list[str] = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


class DomainError(TwoPhaseFlowError, ValueError):
    """Evaluation outside the admissible domain (strip, s < 0, interface out of strip)."""


class SolverParameterError(TwoPhaseFlowError):
    """A wavenumber block could not be factorized."""

    def __init__(self, wavevector: Any, dt: float, reason: str) -> None:
        """Initialize with the offending block parameters."""
        self.wavevector = wavevector
        self.dt = dt
        super().__init__(f"Singular block at k={wavevector}, dt={dt:g}: {reason}")


class IncompatibleDataError(TwoPhaseFlowError):
    """Initial data violate the compatibility conditions."""

    exit_code = EXIT_INCOMPATIBLE

    def __init__(self, message: str, report: CompatibilityReport | None = None) -> None:
        """Initialize with a diagnostic and the optional full report."""
        self.report = report
        super().__init__(message)


class NormUndefinedError(TwoPhaseFlowError):
    """A discrete norm cannot be evaluated on the given samples."""
