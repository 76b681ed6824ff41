"""
Training loops that calibrate on validation data at every optimizer step.

Conformal training (ct) penalizes lower bounds built from the split conformal
quantile; training-aware conformal risk control (ta_crc) builds them from the
λ selected by risk control on the current validation predictions. Both
return a model plus the fixed one-sided width I used at test time.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import conformal
from .conformal import IntervalSet, RiskSpec
from .mlp import MLPParams, Objective, TrainConfig, fit, predict
from ..utils.errors import DimensionMismatchError, EmptyInputError
from ..utils.logger import get_logger


logger = get_logger('training_aware')

METHODS = ('ct', 'ta_crc')


@dataclass(frozen=True)
class LoopConfig:
    """
    Configuration shared by both calibrated training loops.

    Args:
        base: Base training configuration (the objective is replaced by the loop)
        spec: Risk contract (alpha doubles as the miscoverage level for ct)
        lambda_grid: λ candidates for ta_crc
        warmup_epochs: Epochs excluded from the width average (None = 10% of epochs)
        penalty: 'lower' or 'two_sided' (ct only)
        recalibrate: Recompute I on validation data after training
    """
    base: TrainConfig = field(default_factory=TrainConfig)
    spec: RiskSpec = field(default_factory=RiskSpec)
    lambda_grid: Tuple[float, ...] = tuple(conformal.default_lambda_grid())
    warmup_epochs: Optional[int] = None
    penalty: str = 'lower'
    recalibrate: bool = False

    def __post_init__(self):
        if self.warmup_epochs is None:
            object.__setattr__(self, 'warmup_epochs', self.base.epochs // 10)
        if not 0 <= self.warmup_epochs < self.base.epochs:
            raise ValueError(
                f"warmup_epochs must be in [0, {self.base.epochs}), got {self.warmup_epochs}"
            )
        if self.penalty not in ('lower', 'two_sided'):
            raise ValueError(f"penalty must be 'lower' or 'two_sided', got '{self.penalty}'")
        object.__setattr__(self, 'lambda_grid', tuple(float(v) for v in self.lambda_grid))


@dataclass(frozen=True)
class TrainedIntervalModel:
    """Trained regressor with a fixed one-sided interval width I."""
    params: MLPParams
    one_sided_width_I: float
    method: str
    width_history: np.ndarray
    warmup_steps: int = 0
    recalibrated: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got '{self.method}'")
        if self.one_sided_width_I < 0:
            raise ValueError(f"I must be >= 0, got {self.one_sided_width_I}")
        history = np.array(self.width_history, dtype=float)
        history.setflags(write=False)
        object.__setattr__(self, 'width_history', history)


def average_width(history, warmup_steps: int) -> float:
    """Mean of the recorded widths after the warmup cutoff."""
    history = np.asarray(history, dtype=float)
    tail = history[warmup_steps:]
    if tail.size == 0:
        raise EmptyInputError("No optimizer steps after warmup to average")
    return float(tail.mean())


def _check_inputs(train_X, train_y, val_X, val_y):
    train_X = np.asarray(train_X, dtype=float)
    val_X = np.asarray(val_X, dtype=float)
    train_y = np.asarray(train_y, dtype=float).ravel()
    val_y = np.asarray(val_y, dtype=float).ravel()
    if train_y.size == 0 or val_y.size == 0:
        raise EmptyInputError("Training and validation data must both be non-empty")
    if train_X.shape[1] != val_X.shape[1]:
        raise DimensionMismatchError('validation features', train_X.shape[1], val_X.shape[1])
    return train_X, train_y, val_X, val_y


def _run_loop(method: str, train_X, train_y, val_X, val_y, cfg: LoopConfig, width_of) -> TrainedIntervalModel:
    train_X, train_y, val_X, val_y = _check_inputs(train_X, train_y, val_X, val_y)

    def width_fn(params: MLPParams) -> float:
        # validation predictions are refreshed before every minibatch step
        return width_of(predict(params, val_X), val_y)

    objective = Objective.two_sided_penalty() if method == 'ct' and cfg.penalty == 'two_sided' \
        else Objective.lower_penalty()
    result = fit(train_X, train_y, replace(cfg.base, objective=objective), width_fn=width_fn)

    warmup_steps = cfg.warmup_epochs * result.steps_per_epoch
    width = average_width(result.widths, warmup_steps)
    recalibrated = False
    if cfg.recalibrate:
        width = width_of(predict(result.params, val_X), val_y)
        recalibrated = True

    logger.info(
        f"{method}: {len(result.widths)} steps, warmup {warmup_steps}, "
        f"I={width:.4f}{' (recalibrated)' if recalibrated else ''}"
    )
    return TrainedIntervalModel(
        params=result.params,
        one_sided_width_I=width,
        method=method,
        width_history=np.asarray(result.widths),
        warmup_steps=warmup_steps,
        recalibrated=recalibrated,
    )


def conformal_train(train_X, train_y, val_X, val_y, cfg: LoopConfig) -> TrainedIntervalModel:
    """
    Conformal training with a lower-bound penalty.

    Each step uses I_step, the split conformal quantile of the current
    validation residuals, as a constant inside MSE + mean max(0, ŷ - I - y).
    """
    alpha = cfg.spec.alpha

    def width_of(val_pred: np.ndarray, labels: np.ndarray) -> float:
        return conformal.conformal_quantile(conformal.nonconformity(val_pred, labels), alpha)

    return _run_loop('ct', train_X, train_y, val_X, val_y, cfg, width_of)


def crc_aware_train(train_X, train_y, val_X, val_y, cfg: LoopConfig) -> TrainedIntervalModel:
    """
    Training-aware conformal risk control.

    Each step selects λ by risk control on the current validation predictions
    and penalizes lower bounds ŷ - λ·err that overshoot the label.
    """
    grid = np.asarray(cfg.lambda_grid)

    def width_of(val_pred: np.ndarray, labels: np.ndarray) -> float:
        return conformal.crc_select_lambda(val_pred, labels, cfg.spec, grid).half_width

    return _run_loop('ta_crc', train_X, train_y, val_X, val_y, cfg, width_of)


def predict_with_fixed_interval(model: TrainedIntervalModel, X) -> List[conformal.PredictionInterval]:
    """Intervals [ŷ - I, ŷ + I] for every row of X."""
    return list(fixed_interval_set(model, X))


def fixed_interval_set(model: TrainedIntervalModel, X) -> IntervalSet:
    """Vectorized `predict_with_fixed_interval`."""
    return IntervalSet.symmetric(predict(model.params, X), model.one_sided_width_I)

