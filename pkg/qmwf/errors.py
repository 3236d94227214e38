"""Exception hierarchy and CLI exit codes."""

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFICATION = 3


class QmwfError(Exception):
    """Base error for the package."""

    exit_code = EXIT_RUNTIME


class DimensionError(QmwfError, ValueError):
    """Shapes or lengths of inputs do not agree."""


class CapacityError(QmwfError):
    """A dense tensor would exceed the configured element cap."""


class DegenerateInputError(QmwfError, ValueError):
    """Input carries no usable signal (zero vector, empty token list)."""


class DataLoadError(QmwfError):
    """A data or embedding file cannot be used."""


class CheckpointError(QmwfError):
    """A checkpoint file is malformed, from an unknown version, or corrupt."""


class GradientError(QmwfError):
    """A non-finite gradient was produced."""

    def __init__(self, block: str, message: str = "") -> None:
        self.block = block
        super().__init__(message or f"non-finite gradient in parameter block '{block}'")


class ConfigValidationError(QmwfError, ValueError):
    """Flags or configuration values are invalid or inconsistent."""

    exit_code = EXIT_VALIDATION


class VerificationError(QmwfError):
    """A property check of the verification suite failed."""

    exit_code = EXIT_VERIFICATION
