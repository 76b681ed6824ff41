"""Experiment orchestration: comparison runs, tuning, guarantee checks and reports."""

from .runner import ExperimentRunner, RunArtifact, RepeatOutcome, prepare_splits
from .tuner import HyperparameterTuner, TuningResult, DEFAULT_GRID
from .guarantees import GuaranteeSummary, check_guarantees
from .report import build_report, load_artifact, merge_tables

__all__ = [
    'ExperimentRunner', 'RunArtifact', 'RepeatOutcome', 'prepare_splits',
    'HyperparameterTuner', 'TuningResult', 'DEFAULT_GRID', 'GuaranteeSummary',
    'check_guarantees', 'build_report', 'load_artifact', 'merge_tables'
]
