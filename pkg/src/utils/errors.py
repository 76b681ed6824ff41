"""Error types raised across the triage pipeline."""

from typing import Any, Dict, Optional


class TriageError(Exception):
    """
    Base class for all pipeline errors.
    
    Carries optional structured context so the CLI can print a single
    machine-parsable line instead of a traceback.
    """
    
    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = {k: v for k, v in context.items() if v is not None}
    
    def to_line(self) -> str:
        """Render the error as `error=<Class> message="..." key=value ...`."""
        escaped = self.message.replace('"', "'")
        parts = [f'error={self.__class__.__name__}', f'message="{escaped}"']
        parts.extend(f'{key}={value}' for key, value in sorted(self.context.items()))
        return ' '.join(parts)


class DimensionMismatchError(TriageError, ValueError):
    """Input dimension does not match what the model or operation expects."""
    
    def __init__(self, what: str, expected: int, actual: int):
        super().__init__(f"{what}: expected dimension {expected}, got {actual}",
                         expected=expected, actual=actual)
        self.expected = expected
        self.actual = actual


class EmptyInputError(TriageError, ValueError):
    """An operation received an empty batch, score set or list."""


class DataValidationError(TriageError, ValueError):
    """Input data violates the CSV schema or a value range."""
    
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message, row=row, column=column)
        self.row = row
        self.column = column


class DegenerateVarianceError(TriageError, ValueError):
    """Both samples of a t-test have zero variance."""


class SingleClassError(TriageError, ValueError):
    """An operation needs safe and unsafe plans but only one class is present."""


class DivergedTrainingError(TriageError, RuntimeError):
    """Training produced a non-finite loss."""
    
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})", epoch=epoch)
        self.epoch = epoch


class GeneratorError(TriageError, RuntimeError):
    """The synthetic generator could not reach its target configuration."""


class IncompatibleArtifactsError(TriageError, ValueError):
    """Run artifacts cannot be merged into one report."""


class PreconditionError(TriageError, ValueError):
    """A command was invoked with arguments outside its supported range."""


class ExportError(TriageError, RuntimeError):
    """A requested output file could not be written."""

    def __init__(self, message: str, path: str):
        super().__init__(message, path=path)
        self.path = path
