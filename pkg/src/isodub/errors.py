"""Exception types shared across the package."""


class IsodubError(Exception):
    """Base class for all package errors."""


class ShapeError(IsodubError):
    """Tensor dimension mismatch; message names both shapes."""


class VocabularyError(IsodubError):
    """Token or id outside the vocabulary."""


class ParseError(IsodubError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(IsodubError):
    """Input violates a documented precondition."""


class ConsistencyError(IsodubError):
    """Internal invariant broken (e.g. counter underflow on clean data)."""


class TrainingStateError(IsodubError):
    """Optimizer or training loop in an unusable state."""


class DivergenceError(TrainingStateError):
    """Loss became non-finite during training."""


class ConfigError(IsodubError):
    """Invalid configuration value or combination."""


class CapacityError(IsodubError):
    """Sequence exceeds the model's maximum positions."""


class PauseOverflowError(IsodubError):
    """A [pause] was requested with no pending segments left."""


class MissingArtifactError(IsodubError):
    """A pipeline input is absent; message names the producing command."""
