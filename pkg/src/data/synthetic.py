"""
Synthetic plan generator.

Features are i.i.d. standard normal; the pass rate is
clamp(100 - softplus(w·x + b) + noise, 0, 100), skewed toward 100 like the
clinical data, with b tuned so the fraction of plans below 95 matches a
target unsafe rate.
"""

import os
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .dataset import CANONICAL_FEATURES, Dataset, load_csv, save_csv
from ..utils.errors import GeneratorError
from ..utils.logger import get_logger


logger = get_logger('synthetic')

SAFETY_THRESHOLD = 95.0
MAX_BISECTION_STEPS = 100
# accepted relative deviation of the realised unsafe rate from the target
RATE_TOLERANCE = 0.2


@dataclass(frozen=True)
class SynthConfig:
    """
    Generator settings.

    Args:
        n: Number of plans
        unsafe_rate: Target fraction of plans with gpr < 95
        noise_sd: Label noise standard deviation (0 gives a deterministic label)
        seed: Seed for features and noise
        dim: Number of features
        weights_seed: Seed of the weight vector (defaults to `seed`); populations
            sharing it share the same mechanism
        covariate_shift: Offset added to every feature mean
        signal_scale: Norm of the weight vector
    """
    n: int = 1000
    unsafe_rate: float = 0.05
    noise_sd: float = 1.0
    seed: int = 0
    dim: int = 12
    weights_seed: Optional[int] = None
    covariate_shift: float = 0.0
    signal_scale: float = 3.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.unsafe_rate < 1.0:
            raise ValueError(f"unsafe_rate must be in (0, 1), got {self.unsafe_rate}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.signal_scale <= 0:
            raise ValueError(f"signal_scale must be > 0, got {self.signal_scale}")


def feature_names(dim: int) -> Tuple[str, ...]:
    """Canonical feature names, extended with F13, F14, ... beyond twelve."""
    names = list(CANONICAL_FEATURES[:dim])
    names.extend(f'F{i + 1}' for i in range(len(CANONICAL_FEATURES), dim))
    return tuple(names)


def generator_weights(cfg: SynthConfig) -> np.ndarray:
    seed = cfg.seed if cfg.weights_seed is None else cfg.weights_seed
    w = np.random.default_rng([seed, 7]).normal(size=cfg.dim)
    return w * (cfg.signal_scale / np.linalg.norm(w))


def _labels(z: np.ndarray, noise: np.ndarray, bias: float) -> np.ndarray:
    return np.clip(100.0 - np.logaddexp(0.0, z + bias) + noise, 0.0, 100.0)


def _tune_bias(z: np.ndarray, noise: np.ndarray, target: float) -> Tuple[float, float]:
    """Bisection on b; the unsafe fraction is non-decreasing in b."""
    def rate(b: float) -> float:
        return float(np.mean(_labels(z, noise, b) < SAFETY_THRESHOLD))

    lo, hi = -60.0, 60.0
    best_b, best_rate = lo, rate(lo)
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        if abs(r - target) < abs(best_rate - target):
            best_b, best_rate = mid, r
        if abs(r - target) <= 0.01 * target or hi - lo < 1e-12:
            break
        if r < target:
            lo = mid
        else:
            hi = mid

    if abs(best_rate - target) > RATE_TOLERANCE * target:
        raise GeneratorError(
            f"Could not reach unsafe rate {target} (closest {best_rate}) after {MAX_BISECTION_STEPS} steps"
        )
    return best_b, best_rate


def synth_generate(cfg: SynthConfig) -> Dataset:
    """
    Draw a synthetic dataset.

    Args:
        cfg: Generator settings

    Returns:
        Dataset with provenance 'synthetic' and generator metadata

    Raises:
        GeneratorError: If the bias search cannot reach the target unsafe rate
    """
    w = generator_weights(cfg)
    rng = np.random.default_rng(cfg.seed)
    X = rng.normal(size=(cfg.n, cfg.dim)) + cfg.covariate_shift
    noise = rng.normal(scale=cfg.noise_sd, size=cfg.n) if cfg.noise_sd > 0 else np.zeros(cfg.n)
    z = X @ w

    bias, realised = _tune_bias(z, noise, cfg.unsafe_rate)
    y = _labels(z, noise, bias)
    logger.debug(f"Generated {cfg.n} synthetic plans (seed {cfg.seed}), unsafe rate {realised:.4f} "
                f"(target {cfg.unsafe_rate}), bias {bias:.4f}")

    metadata: Dict[str, Any] = {
        'n': cfg.n,
        'dim': cfg.dim,
        'seed': cfg.seed,
        'weights_seed': cfg.seed if cfg.weights_seed is None else cfg.weights_seed,
        'noise_sd': cfg.noise_sd,
        'unsafe_rate_target': cfg.unsafe_rate,
        'unsafe_rate_actual': realised,
        'covariate_shift': cfg.covariate_shift,
        'signal_scale': cfg.signal_scale,
        'bias': bias,
        'weights': [float(v) for v in w],
    }
    return Dataset(X, y, feature_names(cfg.dim), 'synthetic', metadata=metadata)


def noiseless_gpr(dataset: Dataset) -> np.ndarray:
    """Label mean function of a synthetic dataset, from its generator metadata."""
    meta = dataset.metadata
    z = dataset.X @ np.asarray(meta['weights'], dtype=float)
    return _labels(z, np.zeros(len(dataset)), float(meta['bias']))


def metadata_path(csv_path: str) -> str:
    return f'{csv_path}.meta'


def write_synthetic(dataset: Dataset, csv_path: str) -> Tuple[str, str]:
    """Write the CSV and its `key=value` metadata sidecar."""
    save_csv(dataset, csv_path)
    meta_file = metadata_path(csv_path)
    lines = []
    for key in sorted(dataset.metadata):
        value = dataset.metadata[key]
        if isinstance(value, (list, tuple)):
            value = ','.join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            value = repr(float(value))
        lines.append(f'{key}={value}')
    with open(meta_file, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')
    logger.info(f"Wrote {len(dataset)} plans to {csv_path} (metadata: {meta_file})")
    return csv_path, meta_file


def read_metadata(csv_path: str) -> Dict[str, str]:
    """Parse a metadata sidecar into raw string values."""
    meta_file = metadata_path(csv_path)
    if not os.path.exists(meta_file):
        raise FileNotFoundError(f"Metadata sidecar not found: {meta_file}")
    values: Dict[str, str] = {}
    with open(meta_file, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line and '=' in line:
                key, value = line.split('=', 1)
                values[key] = value
    return values


def load_synthetic(csv_path: str) -> Dataset:
    """Load a generated CSV together with its generator metadata."""
    dataset = load_csv(csv_path)
    raw = read_metadata(csv_path)
    metadata: Dict[str, Any] = {}
    for key, value in raw.items():
        if key == 'weights':
            metadata[key] = [float(v) for v in value.split(',')]
        else:
            try:
                metadata[key] = int(value)
            except ValueError:
                metadata[key] = float(value)
    return Dataset(dataset.X, dataset.y, dataset.feature_names, 'synthetic', metadata=metadata)
