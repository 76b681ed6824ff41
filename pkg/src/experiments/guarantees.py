"""
Monte-Carlo checks of the coverage and risk guarantees.

A fixed linear predictor is fitted once on its own generator draw. Every
trial then draws a fresh exchangeable sample from the same mechanism, splits
it into calibration and test points, calibrates on the former and measures
coverage (cp) or risk (crc) on the latter.
"""

import time
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from ..core import conformal
from ..core.conformal import RiskSpec
from ..data.synthetic import SynthConfig, synth_generate
from ..utils.errors import PreconditionError
from ..utils.logger import get_logger


logger = get_logger('guarantees')

GUARANTEE_METHODS = ('cp', 'crc')
MIN_TRIALS = 100
SLACK_SE = 3.0
PREDICTOR_TRAIN_SIZE = 1000


@dataclass(frozen=True)
class GuaranteeSummary:
    """Outcome of a Monte-Carlo guarantee check."""
    method: str
    trials: int
    n_cal: int
    n_test: int
    alpha: float
    mean: float
    standard_error: float
    lower: float
    upper: float
    passed: bool
    monotone_violations: int = 0
    fallbacks: int = 0
    seconds: float = 0.0

    def to_text(self) -> str:
        quantity = 'coverage' if self.method == 'cp' else 'risk'
        lines = [
            f"method={self.method}",
            f"trials={self.trials}",
            f"n_cal={self.n_cal}",
            f"n_test={self.n_test}",
            f"alpha={self.alpha:g}",
            f"mean_{quantity}={self.mean:.6f}",
            f"standard_error={self.standard_error:.6f}",
            f"accepted_range=[{self.lower:.6f}, {self.upper:.6f}]",
        ]
        if self.method == 'crc':
            lines.append(f"monotone_violations={self.monotone_violations}")
            lines.append(f"lambda_fallbacks={self.fallbacks}")
        lines.append(f"seconds={self.seconds:.2f}")
        lines.append(f"result={'PASS' if self.passed else 'FAIL'}")
        return '\n'.join(lines) + '\n'


class LinearPredictor:
    """Least-squares linear regressor with intercept."""

    def __init__(self, coef: np.ndarray):
        self.coef = coef

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> 'LinearPredictor':
        design = np.column_stack([X, np.ones(len(X))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return cls(coef)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef[:-1] + self.coef[-1]


def _mean_and_se(values: List[float]):
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def check_guarantees(method: str, trials: int, generator: Optional[SynthConfig] = None,
                     n_cal: int = 100, n_test: int = 500, alpha: float = 0.1,
                     safety_threshold: float = 95.0, grid=None) -> GuaranteeSummary:
    """
    Run the Monte-Carlo guarantee check.

    Args:
        method: 'cp' (coverage) or 'crc' (risk)
        trials: Number of independent calibration/test draws (at least 100)
        generator: Generator settings; `n` and `seed` are overridden per draw
        n_cal: Calibration points per trial
        n_test: Test points per trial
        alpha: Miscoverage level or risk budget
        safety_threshold: Threshold of the risk loss
        grid: λ candidates for crc

    Returns:
        GuaranteeSummary with pass/fail at three standard errors of slack

    Raises:
        PreconditionError: If the method is unknown or trials < 100
        GeneratorError: If the generator cannot reach its target unsafe rate
    """
    if method not in GUARANTEE_METHODS:
        raise PreconditionError(f"method must be one of {GUARANTEE_METHODS}, got '{method}'", method=method)
    if trials < MIN_TRIALS:
        raise PreconditionError(f"trials must be >= {MIN_TRIALS}, got {trials}", trials=trials)
    if n_cal < 1 or n_test < 1:
        raise PreconditionError(f"n_cal and n_test must be >= 1, got {n_cal} and {n_test}")

    generator = generator or SynthConfig()
    spec = RiskSpec(safety_threshold=safety_threshold, alpha=alpha)
    grid = conformal.default_lambda_grid() if grid is None else np.asarray(grid, dtype=float)
    mechanism = generator.seed if generator.weights_seed is None else generator.weights_seed
    start = time.perf_counter()

    train = synth_generate(replace(generator, n=PREDICTOR_TRAIN_SIZE, weights_seed=mechanism))
    predictor = LinearPredictor.fit(train.X, train.y)

    values: List[float] = []
    monotone_violations = 0
    fallbacks = 0
    for trial in range(trials):
        draw = synth_generate(replace(generator, n=n_cal + n_test,
                                      seed=generator.seed + 1 + trial, weights_seed=mechanism))
        preds = predictor.predict(draw.X)
        cal_pred, test_pred = preds[:n_cal], preds[n_cal:]
        cal_y, test_y = draw.y[:n_cal], draw.y[n_cal:]

        if method == 'cp':
            half_width = conformal.conformal_quantile(conformal.nonconformity(cal_pred, cal_y), alpha)
            values.append(float(np.mean(np.abs(test_y - test_pred) <= half_width)))
        else:
            calib = conformal.crc_select_lambda(cal_pred, cal_y, spec, grid)
            if np.any(np.diff(calib.risks) > 0):
                monotone_violations += 1
            fallbacks += int(calib.fallback)
            intervals = conformal.IntervalSet.symmetric(test_pred, calib.half_width)
            values.append(conformal.empirical_risk(intervals, test_y, spec))

    mean, se = _mean_and_se(values)
    if method == 'cp':
        lower = (1.0 - alpha) - SLACK_SE * se
        upper = (1.0 - alpha) + 2.0 / (n_cal + 1.0) + SLACK_SE * se
        passed = lower <= mean <= upper
    else:
        lower = 0.0
        upper = alpha + SLACK_SE * se
        passed = mean <= upper and monotone_violations == 0

    summary = GuaranteeSummary(method, trials, n_cal, n_test, alpha, mean, se, lower, upper,
                               passed, monotone_violations, fallbacks, time.perf_counter() - start)
    logger.info(f"{method} guarantee check: mean={mean:.4f} se={se:.4f} -> {'PASS' if passed else 'FAIL'}")
    return summary
