"""Exception and warning types shared across the package.

The CLI maps these onto process exit codes: InvalidInputError and its
subclasses exit 2, DivergedTrainingError exits 3, InsufficientDataError
exits 4.
"""


class MoeDenoiseError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MoeDenoiseError):
    """An argument violates an operation's preconditions."""


class DegenerateInputError(InvalidInputError):
    """Input is structurally valid but numerically degenerate (zero rms,
    zero variance, ...)."""


class OutOfRangeError(InvalidInputError):
    """A value falls outside its documented domain."""


class FormatError(InvalidInputError):
    """A file does not parse as the expected format. Carries the offending
    row index when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class ShapeError(InvalidInputError):
    """Adjacent layers or inputs are not shape-compatible."""


class DivergedTrainingError(MoeDenoiseError):
    """Training produced a non-finite loss. Carries the epoch at which it
    happened."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")


class InsufficientDataError(MoeDenoiseError):
    """A partition has no training data. Carries the partition key."""

    def __init__(self, partition: str):
        self.partition = partition
        super().__init__(f"no training samples for partition {partition!r}")


class InvalidStateError(MoeDenoiseError):
    """An operation was called on an object in the wrong state (e.g. an
    untouched expert asked to denoise)."""


class DegenerateRescaleWarning(UserWarning):
    """Raised when affine rescaling falls back to the reference prediction
    because the correlation model's output was near-constant."""
