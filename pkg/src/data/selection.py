"""Welch t-test and class-difference feature selection."""

import math
from typing import List, Tuple

import numpy as np
from scipy.special import betainc

from .dataset import Dataset
from ..utils.errors import DegenerateVarianceError, SingleClassError
from ..utils.logger import get_logger


logger = get_logger('selection')


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value of Student's t via the regularized incomplete beta function."""
    if not df > 0:
        raise ValueError(f"Degrees of freedom must be > 0, got {df}")
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def welch_statistics(a, b) -> Tuple[float, float]:
    """Welch t statistic and Welch–Satterthwaite degrees of freedom."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError(f"Welch test needs at least 2 values per sample, got {a.size} and {b.size}")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va == 0 and vb == 0:
        raise DegenerateVarianceError("Both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    return float(t), float(df)


def welch_t_test(a, b) -> Tuple[float, float]:
    """
    Two-sided Welch two-sample t-test.

    Args:
        a: First sample (at least 2 values)
        b: Second sample (at least 2 values)

    Returns:
        Tuple of (t statistic, two-sided p-value)

    Raises:
        DegenerateVarianceError: If both samples are constant
    """
    t, df = welch_statistics(a, b)
    return t, t_two_sided_p(t, df)


def select_features(dataset: Dataset, threshold: float = 0.05,
                    safety_threshold: float = 95.0) -> List[str]:
    """
    Keep features whose distribution differs between safe and unsafe plans.

    Each feature is split by class and tested with `welch_t_test`; features
    with p < threshold are retained in dataset column order. A feature that is
    constant within both classes separates them perfectly when the two
    constants differ (t = ±inf, p = 0) and is kept; a globally constant
    feature is excluded.
    """
    unsafe = dataset.unsafe_mask(safety_threshold)
    n_unsafe = int(unsafe.sum())
    if n_unsafe == 0 or n_unsafe == len(dataset):
        raise SingleClassError("Feature selection needs both safe and unsafe plans")
    if min(n_unsafe, len(dataset) - n_unsafe) < 2:
        raise SingleClassError(
            f"Feature selection needs at least two plans per class (unsafe={n_unsafe}, safe={len(dataset) - n_unsafe})"
        )

    selected = []
    for col, name in enumerate(dataset.feature_names):
        values = dataset.X[:, col]
        try:
            t, p = welch_t_test(values[~unsafe], values[unsafe])
        except DegenerateVarianceError:
            if values[~unsafe][0] == values[unsafe][0]:
                logger.debug(f"{name}: constant across both classes, excluded")
                continue
            t, p = math.copysign(math.inf, values[~unsafe][0] - values[unsafe][0]), 0.0
        logger.debug(f"{name}: t={t:.4f} p={p:.4g}")
        if p < threshold:
            selected.append(name)

    logger.info(f"Selected {len(selected)}/{len(dataset.feature_names)} features (p < {threshold}): {selected}")
    return selected
