"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: usage errors exit 1, data
violations (including unreadable checkpoints) exit 2, numerical failures
exit 3.
"""


class HFEError(Exception):
    """Base class for all package-specific errors."""


class UsageError(HFEError):
    """Invalid command-line usage or configuration."""


class DataViolationError(HFEError):
    """Input data breaks a dataset contract (shapes, label consistency)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else []


class CheckpointError(DataViolationError):
    """Checkpoint file is corrupt, truncated, or incompatible."""


class NumericalError(HFEError):
    """Non-finite values encountered where finite arithmetic is required."""
