"""Exception types shared across the package.

The CLI maps these onto process exit codes; library users can catch them
individually.
"""

from __future__ import annotations


class RobustShadowsError(Exception):
    """Base class for all package errors."""


class ConfigError(RobustShadowsError):
    """Invalid or incomplete experiment configuration (CLI exit code 2)."""


class BackendError(RobustShadowsError):
    """Simulation or I/O failure while running an experiment (CLI exit code 3)."""


class NonInvertibleCalibrationError(RobustShadowsError):
    """A calibrated coefficient is <= 0, so the measurement channel cannot be
    inverted on that qubit (CLI exit code 4)."""


class EstimationError(RobustShadowsError):
    """An estimator was asked for something the records cannot support
    (empty record set, qubit outside the register, no admissible pairs)."""
