"""Exception hierarchy for the lab.

Each error class carries the process exit code the CLI returns when it
escapes a subcommand: 2 config, 3 numeric, 4 format, 5 mismatch.
"""


class LabError(Exception):
    """Base class for every error the lab raises on purpose."""

    exit_code: int = 1


class ConfigError(LabError):
    """Raised when a configuration value is missing, unknown, or out of range."""

    exit_code = 2


class NumericalError(LabError):
    """Raised on non-finite values or a numerical routine that fails to converge."""

    exit_code = 3


class CheckpointFormatError(LabError):
    """Raised when a checkpoint file is corrupt, truncated, or of the wrong version."""

    exit_code = 4


class ArchitectureMismatchError(LabError):
    """Raised when two checkpoints or networks do not share an architecture."""

    exit_code = 5


class DimensionError(LabError, ValueError):
    """Raised when operand shapes are incompatible."""


class ContractError(LabError, ValueError):
    """Raised when a caller violates an operation's precondition."""


class UnsupportedKindError(LabError, TypeError):
    """Raised when an operation is not defined for an adapter kind."""
