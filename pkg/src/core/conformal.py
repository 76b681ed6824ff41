"""
Post-hoc conformal calibration.

Split conformal intervals, conformalized quantile regression, the clinical
risk loss used for conformal risk control, λ selection on a grid, and the
conservative hull used to combine ensemble members.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np

from ..utils.errors import DimensionMismatchError, EmptyInputError
from ..utils.logger import get_logger


logger = get_logger('conformal')

# Slack for the (n+1)(1-alpha) product so that e.g. 10 * 0.9 maps to rank 9.
_RANK_EPS = 1e-9


@dataclass(frozen=True)
class PredictionInterval:
    """A [low, high] band on the pass-rate scale."""
    low: float
    high: float
    crossed: bool = False

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"Interval low {self.low} exceeds high {self.high}")

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, y: float) -> bool:
        return self.low <= y <= self.high


@dataclass(frozen=True)
class IntervalSet:
    """
    Vectorized collection of intervals, one per test plan.

    `crossed` marks CQR intervals that collapsed after quantile crossing.
    """
    lows: np.ndarray
    highs: np.ndarray
    crossed: Optional[np.ndarray] = None

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=float).ravel()
        highs = np.asarray(self.highs, dtype=float).ravel()
        if lows.shape != highs.shape:
            raise DimensionMismatchError('interval bounds', lows.size, highs.size)
        if np.any(lows > highs):
            raise ValueError("Every interval needs low <= high")
        crossed = (np.zeros(lows.size, dtype=bool) if self.crossed is None
                   else np.asarray(self.crossed, dtype=bool).ravel())
        object.__setattr__(self, 'lows', lows)
        object.__setattr__(self, 'highs', highs)
        object.__setattr__(self, 'crossed', crossed)

    def __len__(self) -> int:
        return self.lows.size

    def __iter__(self) -> Iterator[PredictionInterval]:
        for low, high, crossed in zip(self.lows, self.highs, self.crossed):
            yield PredictionInterval(float(low), float(high), bool(crossed))

    @property
    def widths(self) -> np.ndarray:
        return self.highs - self.lows

    @classmethod
    def from_intervals(cls, intervals: Sequence[PredictionInterval]) -> 'IntervalSet':
        return cls(
            lows=np.array([iv.low for iv in intervals], dtype=float),
            highs=np.array([iv.high for iv in intervals], dtype=float),
            crossed=np.array([iv.crossed for iv in intervals], dtype=bool),
        )

    @classmethod
    def coerce(cls, intervals: Union['IntervalSet', Sequence[PredictionInterval]]) -> 'IntervalSet':
        if isinstance(intervals, IntervalSet):
            return intervals
        return cls.from_intervals(list(intervals))

    @classmethod
    def symmetric(cls, predictions, half_width) -> 'IntervalSet':
        """Intervals [p - w, p + w]; `half_width` is a scalar or per-point array."""
        predictions = np.asarray(predictions, dtype=float).ravel()
        return cls(lows=predictions - half_width, highs=predictions + half_width)


@dataclass(frozen=True)
class RiskSpec:
    """
    Clinical decision contract.

    Args:
        safety_threshold: Pass rate below which a plan is unsafe (95 under 3%/3mm)
        alpha: Miscoverage level or risk budget
        loss_bound_B: Upper bound of the risk loss (1 for the binary loss)
    """
    safety_threshold: float = 95.0
    alpha: float = 0.1
    loss_bound_B: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.loss_bound_B < 1.0:
            raise ValueError(f"loss_bound_B must bound the binary loss (>= 1), got {self.loss_bound_B}")


@dataclass(frozen=True)
class CrcCalibration:
    """Result of λ selection: the chosen λ, the max validation error and the risk curve."""
    lambda_: float
    err: float
    grid: np.ndarray
    risks: np.ndarray
    fallback: bool = False

    @property
    def half_width(self) -> float:
        return self.lambda_ * self.err


def default_lambda_grid(start: float = 0.0, stop: float = 2.0, num: int = 201) -> np.ndarray:
    """Evenly spaced λ candidates; 201 points on [0, 2] unless told otherwise."""
    return np.linspace(start, stop, num)


def _paired(predictions, labels, what: str):
    predictions = np.asarray(predictions, dtype=float).ravel()
    labels = np.asarray(labels, dtype=float).ravel()
    if predictions.size != labels.size:
        raise DimensionMismatchError(what, predictions.size, labels.size)
    if predictions.size == 0:
        raise EmptyInputError(f"{what} requires at least one pair")
    return predictions, labels


def nonconformity(predictions, labels) -> np.ndarray:
    """Absolute residuals |ŷ - y|."""
    predictions, labels = _paired(predictions, labels, 'nonconformity inputs')
    return np.abs(predictions - labels)


def conformal_rank(n: int, alpha: float) -> int:
    """1-based rank ceil((n+1)(1-alpha)), clamped to [1, n]."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n < 1:
        raise EmptyInputError("Quantile needs at least one score")
    k = math.ceil((n + 1) * (1.0 - alpha) - _RANK_EPS)
    return min(max(k, 1), n)


def conformal_quantile(scores, alpha: float) -> float:
    """
    Finite-sample corrected quantile of nonconformity scores.

    Returns the k-th smallest score with k = ceil((n+1)(1-alpha)), clamped to
    n. The corrected rank is what makes split conformal coverage exact.
    """
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise EmptyInputError("Quantile needs at least one score")
    if np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise ValueError("Nonconformity scores must be finite and non-negative")
    k = conformal_rank(scores.size, alpha)
    return float(np.sort(scores, kind='stable')[k - 1])


def split_cp_interval(prediction: float, I: float) -> PredictionInterval:
    """Symmetric split conformal interval [ŷ - I, ŷ + I]."""
    if I < 0:
        raise ValueError(f"Interval half-width must be >= 0, got {I}")
    return PredictionInterval(prediction - I, prediction + I)


def cqr_interval(pred_low: float, pred_high: float, I_low: float, I_high: float) -> PredictionInterval:
    """
    Conformalized quantile regression interval [q_low - I_low, q_high + I_high].

    If the quantile heads cross so badly that low > high, the interval collapses
    to its midpoint and is flagged as crossed.
    """
    if I_low < 0 or I_high < 0:
        raise ValueError(f"CQR half-widths must be >= 0, got ({I_low}, {I_high})")
    low = pred_low - I_low
    high = pred_high + I_high
    if low > high:
        mid = 0.5 * (low + high)
        return PredictionInterval(mid, mid, crossed=True)
    return PredictionInterval(low, high)


def cqr_intervals(preds_low, preds_high, I_low: float, I_high: float) -> IntervalSet:
    """Vectorized `cqr_interval`."""
    if I_low < 0 or I_high < 0:
        raise ValueError(f"CQR half-widths must be >= 0, got ({I_low}, {I_high})")
    lows = np.asarray(preds_low, dtype=float) - I_low
    highs = np.asarray(preds_high, dtype=float) + I_high
    crossed = lows > highs
    if np.any(crossed):
        logger.warning(f"{int(crossed.sum())} CQR intervals crossed and were collapsed to their midpoint")
        mids = 0.5 * (lows + highs)
        lows = np.where(crossed, mids, lows)
        highs = np.where(crossed, mids, highs)
    return IntervalSet(lows, highs, crossed)


def cqr_calibrate(val_low, val_high, val_labels, alpha: float):
    """Per-head half-widths (I_low, I_high) from each head's own validation scores."""
    I_low = conformal_quantile(nonconformity(val_low, val_labels), alpha)
    I_high = conformal_quantile(nonconformity(val_high, val_labels), alpha)
    return I_low, I_high


def risk_loss(interval: PredictionInterval, y: float, spec: RiskSpec) -> int:
    """1 when the whole interval sits above the threshold but the plan actually fails."""
    return int(interval.low > spec.safety_threshold and y < spec.safety_threshold)


def _risk_losses(lows: np.ndarray, labels: np.ndarray, spec: RiskSpec) -> np.ndarray:
    return ((lows > spec.safety_threshold) & (labels < spec.safety_threshold)).astype(float)


def empirical_risk(intervals, labels, spec: RiskSpec) -> float:
    """Mean risk loss over (interval, label) pairs."""
    intervals = IntervalSet.coerce(intervals)
    labels = np.asarray(labels, dtype=float).ravel()
    if len(intervals) != labels.size:
        raise DimensionMismatchError('risk inputs', len(intervals), labels.size)
    if labels.size == 0:
        raise EmptyInputError("Empirical risk needs at least one pair")
    return float(_risk_losses(intervals.lows, labels, spec).mean())


def _validate_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("λ grid must be non-empty")
    if np.any(grid < 0):
        raise ValueError("λ grid must be non-negative")
    if np.any(np.diff(grid) < 0):
        raise ValueError("λ grid must be sorted ascending")
    return grid


def risk_curve(val_predictions, val_labels, spec: RiskSpec, grid, err: Optional[float] = None) -> np.ndarray:
    """r̂(λ) for every grid λ with intervals [ŷ - λ·err, ŷ + λ·err]."""
    predictions, labels = _paired(val_predictions, val_labels, 'validation set')
    grid = _validate_grid(grid)
    if err is None:
        err = float(nonconformity(predictions, labels).max())
    lows = predictions[None, :] - grid[:, None] * err
    return _risk_losses(lows, labels[None, :], spec).mean(axis=1)


def crc_select_lambda(val_predictions, val_labels, spec: RiskSpec, grid=None) -> CrcCalibration:
    """
    Choose the smallest λ with (n/(n+1))·r̂(λ) + B/(n+1) <= alpha.

    Falls back to the largest grid value when no λ qualifies.

    Args:
        val_predictions: Point predictions on the validation set
        val_labels: Validation labels
        spec: Risk contract (threshold, alpha, B)
        grid: Ascending non-negative λ candidates (default 201 points on [0, 2])

    Returns:
        CrcCalibration with λ, err and the full risk curve
    """
    predictions, labels = _paired(val_predictions, val_labels, 'validation set')
    grid = _validate_grid(default_lambda_grid() if grid is None else grid)
    n = labels.size
    err = float(nonconformity(predictions, labels).max())
    risks = risk_curve(predictions, labels, spec, grid, err)

    bound = (n / (n + 1.0)) * risks + spec.loss_bound_B / (n + 1.0)
    passing = np.flatnonzero(bound <= spec.alpha)
    if passing.size:
        return CrcCalibration(float(grid[passing[0]]), err, grid, risks)
    logger.debug(f"No λ satisfies the risk bound (n={n}, alpha={spec.alpha}); using λ_max={grid[-1]}")
    return CrcCalibration(float(grid[-1]), err, grid, risks, fallback=True)


def crc_interval(prediction: float, calib: CrcCalibration) -> PredictionInterval:
    """Symmetric interval of half-width λ·err."""
    return split_cp_interval(prediction, calib.half_width)


def ensemble_aggregate(member_intervals: Sequence[PredictionInterval]) -> PredictionInterval:
    """Conservative hull: min of member lows, max of member highs."""
    members = list(member_intervals)
    if not members:
        raise EmptyInputError("Ensemble aggregation needs at least one member")
    return PredictionInterval(
        low=min(iv.low for iv in members),
        high=max(iv.high for iv in members),
        crossed=any(iv.crossed for iv in members),
    )


def ensemble_hull(member_sets: List[IntervalSet]) -> IntervalSet:
    """Elementwise `ensemble_aggregate` over aligned member interval sets."""
    if not member_sets:
        raise EmptyInputError("Ensemble aggregation needs at least one member")
    sizes = {len(s) for s in member_sets}
    if len(sizes) != 1:
        raise ValueError(f"Member interval sets have different lengths: {sorted(sizes)}")
    return IntervalSet(
        lows=np.min([s.lows for s in member_sets], axis=0),
        highs=np.max([s.highs for s in member_sets], axis=0),
        crossed=np.any([s.crossed for s in member_sets], axis=0),
    )
