"""Utility modules."""

from .logger import setup_logger, get_logger, log_file_path
from .errors import (
    TriageError, DimensionMismatchError, EmptyInputError, DataValidationError,
    DegenerateVarianceError, SingleClassError, DivergedTrainingError,
    GeneratorError, IncompatibleArtifactsError, PreconditionError, ExportError
)

__all__ = [
    'setup_logger', 'get_logger', 'log_file_path', 'TriageError', 'DimensionMismatchError',
    'EmptyInputError', 'DataValidationError', 'DegenerateVarianceError',
    'SingleClassError', 'DivergedTrainingError', 'GeneratorError',
    'IncompatibleArtifactsError', 'PreconditionError', 'ExportError'
]
