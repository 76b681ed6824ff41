"""Triage decisions and the clinical metrics computed from test intervals."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from .conformal import IntervalSet, PredictionInterval, RiskSpec
from ..utils.errors import DimensionMismatchError, EmptyInputError, SingleClassError
from ..utils.logger import get_logger


logger = get_logger('evaluation')

METRIC_NAMES = ('sensitivity', 'specificity', 'reduction_in_measurement', 'coverage', 'mean_interval_width')


class TriageDecision(Enum):
    SAFE_SKIP_MEASUREMENT = 'safe_skip_measurement'
    NEEDS_MEASUREMENT = 'needs_measurement'


@dataclass(frozen=True)
class MetricsReport:
    """
    Metrics for one method on one test set.

    `coverage` and `mean_interval_width` are None for methods without
    intervals (the base model). The `*_undefined` flags mark an empty
    denominator class, in which case the rate is reported as 1.0.
    """
    sensitivity: float
    specificity: float
    reduction_in_measurement: float
    coverage: Optional[float]
    mean_interval_width: Optional[float]
    n_test: int
    threshold_used: float
    n_unsafe: int = 0
    n_safe: int = 0
    sensitivity_undefined: bool = False
    specificity_undefined: bool = False

    def without_intervals(self) -> 'MetricsReport':
        values = asdict(self)
        values.update(coverage=None, mean_interval_width=None)
        return MetricsReport(**values)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class AggregateReport:
    """Per-metric mean and sample standard deviation over repeated runs."""
    means: Dict[str, Optional[float]]
    stds: Dict[str, Optional[float]]
    runs: int
    std_undefined: bool = False
    thresholds: List[float] = field(default_factory=list)

    def cell(self, metric: str, digits: int = 2) -> str:
        """Format one metric as `mean ± std` (NA when the metric is absent)."""
        mean = self.means.get(metric)
        if mean is None:
            return 'NA'
        std = self.stds.get(metric)
        if std is None:
            return f'{mean:.{digits}f}'
        return f'{mean:.{digits}f} ± {std:.{digits}f}'


def triage(interval: PredictionInterval, threshold: float) -> TriageDecision:
    """Skip measurement only when the whole interval lies strictly above the threshold."""
    if interval.low > threshold:
        return TriageDecision.SAFE_SKIP_MEASUREMENT
    return TriageDecision.NEEDS_MEASUREMENT


def predicted_safe(intervals, threshold: float) -> np.ndarray:
    """Boolean mask of plans triaged safe at `threshold`."""
    return IntervalSet.coerce(intervals).lows > threshold


def _rates(safe_mask: np.ndarray, unsafe_actual: np.ndarray):
    n_unsafe = int(unsafe_actual.sum())
    n_safe = int((~unsafe_actual).sum())
    sensitivity = (np.sum(~safe_mask & unsafe_actual) / n_unsafe) if n_unsafe else 1.0
    specificity = (np.sum(safe_mask & ~unsafe_actual) / n_safe) if n_safe else 1.0
    return float(sensitivity), float(specificity), n_unsafe, n_safe


def compute_metrics(intervals, labels, threshold: float, spec: RiskSpec) -> MetricsReport:
    """
    Sensitivity, specificity, reduction in measurement, coverage and width.

    Args:
        intervals: One interval per test plan
        labels: True pass rates
        threshold: Decision threshold applied to interval lower bounds
        spec: Risk contract; its safety threshold defines the true classes

    Returns:
        MetricsReport for this test set
    """
    intervals = IntervalSet.coerce(intervals)
    labels = np.asarray(labels, dtype=float).ravel()
    if len(intervals) != labels.size:
        raise DimensionMismatchError('metrics inputs', len(intervals), labels.size)
    if labels.size == 0:
        raise EmptyInputError("Metrics need at least one test plan")

    safe_mask = predicted_safe(intervals, threshold)
    unsafe_actual = labels < spec.safety_threshold
    sensitivity, specificity, n_unsafe, n_safe = _rates(safe_mask, unsafe_actual)
    covered = (intervals.lows <= labels) & (labels <= intervals.highs)

    if not n_unsafe:
        logger.warning("Test set has no unsafe plans; sensitivity reported as 1.0")
    if not n_safe:
        logger.warning("Test set has no safe plans; specificity reported as 1.0")

    return MetricsReport(
        sensitivity=sensitivity,
        specificity=specificity,
        reduction_in_measurement=float(safe_mask.mean()),
        coverage=float(covered.mean()),
        mean_interval_width=float(intervals.widths.mean()),
        n_test=int(labels.size),
        threshold_used=float(threshold),
        n_unsafe=n_unsafe,
        n_safe=n_safe,
        sensitivity_undefined=not n_unsafe,
        specificity_undefined=not n_safe,
    )


def retrospective_threshold(intervals, labels, spec: RiskSpec) -> float:
    """
    Threshold with the highest specificity among those reaching maximal sensitivity.

    Metrics only change at interval lower bounds, so the candidates are the
    observed lower bounds plus the prospective threshold. Ties go to the
    smallest candidate. Without safe plans every candidate has specificity
    1.0 and the smallest one is returned.
    """
    intervals = IntervalSet.coerce(intervals)
    labels = np.asarray(labels, dtype=float).ravel()
    if len(intervals) != labels.size:
        raise DimensionMismatchError('threshold inputs', len(intervals), labels.size)
    unsafe_actual = labels < spec.safety_threshold
    if not unsafe_actual.any():
        raise SingleClassError("Retrospective threshold needs at least one unsafe plan")

    candidates = np.unique(np.append(intervals.lows, spec.safety_threshold))
    best = None
    for threshold in candidates:
        sensitivity, specificity, _, _ = _rates(predicted_safe(intervals, threshold), unsafe_actual)
        key = (sensitivity, specificity)
        # candidates ascend, so strict improvement keeps the smallest on ties
        if best is None or key > best[0]:
            best = (key, float(threshold))
    return best[1]


def aggregate(reports: Sequence[MetricsReport]) -> AggregateReport:
    """Mean and (n-1) standard deviation of every metric over runs."""
    reports = list(reports)
    if not reports:
        raise EmptyInputError("Aggregation needs at least one report")

    means: Dict[str, Optional[float]] = {}
    stds: Dict[str, Optional[float]] = {}
    single = len(reports) == 1
    for name in METRIC_NAMES:
        values = [getattr(r, name) for r in reports]
        if any(v is None for v in values):
            means[name] = None
            stds[name] = None
            continue
        values = np.asarray(values, dtype=float)
        if np.ptp(values) == 0:
            # summation rounding would leave a spread of order 1e-16
            means[name] = float(values[0])
            stds[name] = None if single else 0.0
            continue
        means[name] = float(values.mean())
        stds[name] = None if single else float(values.std(ddof=1))

    if single:
        logger.debug("Single run aggregated; standard deviation undefined")
    return AggregateReport(
        means=means,
        stds=stds,
        runs=len(reports),
        std_undefined=single,
        thresholds=[r.threshold_used for r in reports],
    )
