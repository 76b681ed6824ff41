"""Two-layer MLP regressor with exact gradients for the triage objectives."""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..utils.errors import DimensionMismatchError, DivergedTrainingError, EmptyInputError
from ..utils.logger import get_logger


logger = get_logger('mlp')

ACTIVATIONS = ('sigmoid', 'relu')
OBJECTIVES = ('mse', 'pinball', 'lower_penalty', 'two_sided_penalty')

# Called once per optimizer step with the current parameters; returns the
# one-sided interval width used by the penalty objectives for that step.
WidthFn = Callable[['MLPParams'], float]


@dataclass(frozen=True)
class Objective:
    """
    Training objective.

    Args:
        kind: One of 'mse', 'pinball', 'lower_penalty', 'two_sided_penalty'
        tau: Quantile level, required for 'pinball'
    """
    kind: str = 'mse'
    tau: Optional[float] = None

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise ValueError(f"Unknown objective '{self.kind}', expected one of {OBJECTIVES}")
        if self.kind == 'pinball':
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError(f"pinball objective needs tau in (0, 1), got {self.tau}")
        elif self.tau is not None:
            raise ValueError(f"tau is only meaningful for pinball, got tau={self.tau} for {self.kind}")

    @classmethod
    def mse(cls) -> 'Objective':
        return cls('mse')

    @classmethod
    def pinball(cls, tau: float) -> 'Objective':
        return cls('pinball', tau)

    @classmethod
    def lower_penalty(cls) -> 'Objective':
        return cls('lower_penalty')

    @classmethod
    def two_sided_penalty(cls) -> 'Objective':
        return cls('two_sided_penalty')

    @property
    def uses_width(self) -> bool:
        return self.kind in ('lower_penalty', 'two_sided_penalty')

    def describe(self) -> str:
        return f'pinball(tau={self.tau})' if self.kind == 'pinball' else self.kind


@dataclass(frozen=True)
class TrainConfig:
    """
    Hyperparameters of one training run.

    Defaults follow the tuned base model (hidden 100, sigmoid, 1500 epochs,
    learning rate 0.01). `init_scale=None` means 1/sqrt(fan_in) per layer.
    """
    hidden: int = 100
    epochs: int = 1500
    learning_rate: float = 0.01
    minibatch_size: int = 32
    seed: int = 0
    objective: Objective = field(default_factory=Objective.mse)
    activation: str = 'sigmoid'
    init_scale: Optional[float] = None

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.minibatch_size < 1:
            raise ValueError(f"minibatch_size must be >= 1, got {self.minibatch_size}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got '{self.activation}'")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")


@dataclass(frozen=True)
class MLPParams:
    """
    Weights of the regressor: w1 (hidden x input_dim), b1 (hidden),
    w2 (1 x hidden), b2 scalar.
    """
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    activation: str = 'sigmoid'

    def __post_init__(self):
        hidden = self.w1.shape[0]
        if self.w1.ndim != 2 or self.b1.shape != (hidden,) or self.w2.shape != (1, hidden):
            raise ValueError(
                f"Inconsistent parameter shapes: w1={self.w1.shape}, b1={self.b1.shape}, w2={self.w2.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got '{self.activation}'")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.w1)) and np.all(np.isfinite(self.b1))
                    and np.all(np.isfinite(self.w2)) and math.isfinite(self.b2))

    def flatten(self) -> np.ndarray:
        """Concatenate all parameters into one vector (w1, b1, w2, b2 order)."""
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), [self.b2]])

    def with_flat(self, flat: np.ndarray) -> 'MLPParams':
        """Build parameters of the same shapes from a flat vector."""
        h, d = self.w1.shape
        i = h * d
        return MLPParams(
            w1=flat[:i].reshape(h, d).copy(),
            b1=flat[i:i + h].copy(),
            w2=flat[i + h:i + 2 * h].reshape(1, h).copy(),
            b2=float(flat[i + 2 * h]),
            activation=self.activation,
        )


@dataclass(frozen=True)
class Gradient:
    """Gradient of a loss with the same shapes as MLPParams."""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), [self.b2]])


@dataclass(frozen=True)
class FitResult:
    """Parameters after training plus the per-step widths fed to the penalty."""
    params: MLPParams
    widths: Tuple[float, ...]
    steps_per_epoch: int


def init_params(input_dim: int, config: TrainConfig) -> MLPParams:
    """
    Draw initial weights uniformly in [-scale, scale], biases at zero.

    Args:
        input_dim: Number of input features
        config: Training configuration (hidden size, seed, init scale)

    Returns:
        Freshly initialized parameters
    """
    rng = np.random.default_rng(config.seed)
    scale1 = config.init_scale or 1.0 / math.sqrt(input_dim)
    scale2 = config.init_scale or 1.0 / math.sqrt(config.hidden)
    return MLPParams(
        w1=rng.uniform(-scale1, scale1, size=(config.hidden, input_dim)),
        b1=np.zeros(config.hidden),
        w2=rng.uniform(-scale2, scale2, size=(1, config.hidden)),
        b2=0.0,
        activation=config.activation,
    )


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'sigmoid':
        return expit(z)
    return np.maximum(z, 0.0)


def _activation_derivative(z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'sigmoid':
        return a * (1.0 - a)
    return (z > 0).astype(float)


def _as_matrix(params: MLPParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != params.input_dim:
        raise DimensionMismatchError('feature vector', params.input_dim, X.shape[1])
    return X


def predict(params: MLPParams, X) -> np.ndarray:
    """Predict for every row of X."""
    X = _as_matrix(params, X)
    hidden = _activate(X @ params.w1.T + params.b1, params.activation)
    return hidden @ params.w2[0] + params.b2


def forward(params: MLPParams, x) -> float:
    """Predict for a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"forward expects one feature vector, got shape {x.shape}")
    return float(predict(params, x)[0])


def _check_batch(params: MLPParams, X, y) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise EmptyInputError("Loss requires a non-empty batch")
    X = _as_matrix(params, X)
    if X.shape[0] != y.size:
        raise DimensionMismatchError('batch rows', y.size, X.shape[0])
    return X, y


def _loss_terms(pred: np.ndarray, y: np.ndarray, objective: Objective,
                width: float) -> Tuple[float, np.ndarray]:
    """Loss value and its derivative with respect to each prediction."""
    n = y.size
    residual = pred - y
    if objective.kind == 'pinball':
        tau = objective.tau
        loss = np.maximum(tau * -residual, (tau - 1.0) * -residual)
        # kink (residual == 0) has subgradient 0
        dpred = np.where(residual > 0, 1.0 - tau, np.where(residual < 0, -tau, 0.0))
        return float(loss.mean()), dpred / n

    loss = residual ** 2
    dpred = 2.0 * residual
    if objective.uses_width:
        overshoot = residual - width
        loss = loss + np.maximum(overshoot, 0.0)
        dpred = dpred + (overshoot > 0)
        if objective.kind == 'two_sided_penalty':
            undershoot = -residual - width
            loss = loss + np.maximum(undershoot, 0.0)
            dpred = dpred - (undershoot > 0)
    return float(loss.mean()), dpred / n


def loss_value(params: MLPParams, X, y, objective: Objective, width: float = 0.0) -> float:
    """
    Evaluate an objective on a batch.

    Args:
        params: Model parameters
        X: Batch features (rows)
        y: Batch labels
        objective: Objective to evaluate
        width: One-sided interval width I for the penalty objectives

    Returns:
        Mean loss over the batch
    """
    X, y = _check_batch(params, X, y)
    return _loss_terms(predict(params, X), y, objective, width)[0]


def loss_and_grad(params: MLPParams, X, y, objective: Objective,
                  width: float = 0.0) -> Tuple[float, Gradient]:
    """Loss and its exact gradient by backpropagation."""
    X, y = _check_batch(params, X, y)
    z = X @ params.w1.T + params.b1
    a = _activate(z, params.activation)
    pred = a @ params.w2[0] + params.b2

    loss, dpred = _loss_terms(pred, y, objective, width)

    dw2 = (dpred @ a).reshape(1, -1)
    db2 = float(dpred.sum())
    dz = np.outer(dpred, params.w2[0]) * _activation_derivative(z, a, params.activation)
    dw1 = dz.T @ X
    db1 = dz.sum(axis=0)
    return loss, Gradient(w1=dw1, b1=db1, w2=dw2, b2=db2)


def grad(params: MLPParams, X, y, objective: Objective, width: float = 0.0) -> Gradient:
    """Exact gradient of `loss_value` with respect to every parameter."""
    return loss_and_grad(params, X, y, objective, width)[1]


def _sgd_step(params: MLPParams, gradient: Gradient, learning_rate: float) -> MLPParams:
    return MLPParams(
        w1=params.w1 - learning_rate * gradient.w1,
        b1=params.b1 - learning_rate * gradient.b1,
        w2=params.w2 - learning_rate * gradient.w2,
        b2=params.b2 - learning_rate * gradient.b2,
        activation=params.activation,
    )


def fit(X, y, config: TrainConfig, width_fn: Optional[WidthFn] = None,
        init: Optional[MLPParams] = None) -> FitResult:
    """
    Minibatch gradient descent for a fixed number of epochs.

    Initialization and per-epoch shuffling both derive from `config.seed`,
    so identical inputs give bitwise-identical parameters.

    Args:
        X: Training features (already standardized)
        y: Training labels
        config: Training configuration
        width_fn: Per-step width provider for the penalty objectives
        init: Optional starting parameters instead of a fresh draw

    Returns:
        FitResult with the trained parameters and the recorded widths

    Raises:
        DivergedTrainingError: If a minibatch loss becomes NaN or infinite
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise EmptyInputError("Training data must be non-empty")
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatchError('training rows', y.size, X.shape[0] if X.ndim == 2 else 0)
    if config.objective.uses_width and width_fn is None:
        raise ValueError(f"Objective {config.objective.kind} needs a width provider")

    params = init if init is not None else init_params(X.shape[1], config)
    # Shuffling stream is separate from the initialization stream
    rng = np.random.default_rng([config.seed, 1])
    n = y.size
    batch = min(config.minibatch_size, n)
    steps_per_epoch = math.ceil(n / batch)
    widths: List[float] = []

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            width = 0.0
            if width_fn is not None:
                width = float(width_fn(params))
                widths.append(width)
            loss, gradient = loss_and_grad(params, X[idx], y[idx], config.objective, width)
            if not math.isfinite(loss):
                raise DivergedTrainingError(epoch, loss)
            params = _sgd_step(params, gradient, config.learning_rate)
            epoch_loss += loss * idx.size

        if not params.is_finite():
            raise DivergedTrainingError(epoch, float('nan'))
        if epoch == 1 or epoch % 100 == 0 or epoch == config.epochs:
            logger.debug(f"epoch {epoch}/{config.epochs} {config.objective.describe()} loss={epoch_loss / n:.6f}")

    return FitResult(params=params, widths=tuple(widths), steps_per_epoch=steps_per_epoch)


def train(X, y, config: TrainConfig) -> MLPParams:
    """Train a model on (X, y) for `config.objective`."""
    if config.objective.uses_width:
        raise ValueError("Penalty objectives are trained through the training_aware loops")
    return fit(X, y, config).params


def train_quantile_pair(X, y, config: TrainConfig, alpha: float) -> Tuple[MLPParams, MLPParams]:
    """
    Train the low (alpha/2) and high (1 - alpha/2) quantile heads.

    Both heads share the seed in `config`, so they start from the same weights.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    low_tau, high_tau = quantile_levels(alpha)
    q_low = train(X, y, replace(config, objective=Objective.pinball(low_tau)))
    q_high = train(X, y, replace(config, objective=Objective.pinball(high_tau)))
    return q_low, q_high


def quantile_levels(alpha: float) -> Tuple[float, float]:
    """Quantile levels (alpha/2, 1 - alpha/2) of the CQR heads."""
    return alpha / 2.0, 1.0 - alpha / 2.0
