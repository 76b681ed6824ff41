"""Core components: regressor, conformal calibration, training loops, evaluation and export."""

from .mlp import Objective, TrainConfig, MLPParams, init_params, forward, predict, train
from .conformal import PredictionInterval, IntervalSet, RiskSpec, CrcCalibration
from .training_aware import LoopConfig, TrainedIntervalModel, conformal_train, crc_aware_train
from .evaluation import MetricsReport, AggregateReport, TriageDecision, compute_metrics, aggregate
from .exporter import ReportExporter, comparison_table, render_table

__all__ = [
    'Objective', 'TrainConfig', 'MLPParams', 'init_params', 'forward', 'predict', 'train',
    'PredictionInterval', 'IntervalSet', 'RiskSpec', 'CrcCalibration', 'LoopConfig',
    'TrainedIntervalModel', 'conformal_train', 'crc_aware_train', 'MetricsReport',
    'AggregateReport', 'TriageDecision', 'compute_metrics', 'aggregate',
    'ReportExporter', 'comparison_table', 'render_table'
]
