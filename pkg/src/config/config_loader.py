"""Configuration loading and management."""

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core.conformal import RiskSpec, default_lambda_grid
from ..core.mlp import TrainConfig, quantile_levels
from ..data.dataset import Dataset, SplitSpec, load_csv
from ..data.synthetic import SynthConfig, synth_generate
from ..utils.logger import get_logger


METHOD_NAMES = ('base', 'cp', 'cqr', 'crc', 'ct', 'ta_crc')
SELECTION_SCOPES = ('train', 'all')


@dataclass(frozen=True)
class DataSource:
    """
    Where plans come from: a CSV file or the synthetic generator.

    Exactly one of `csv` and `synthetic` is set.
    """
    csv: Optional[str] = None
    synthetic: Optional[SynthConfig] = None

    def __post_init__(self):
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("data source needs exactly one of 'csv' or 'synthetic'")

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], key: str = 'data') -> 'DataSource':
        if not isinstance(raw, dict):
            raise ValueError(f"'{key}' must be an object with 'csv' or 'synthetic'")
        unknown = set(raw) - {'csv', 'synthetic'}
        if unknown:
            raise ValueError(f"Unknown keys in '{key}': {sorted(unknown)}")
        synthetic = raw.get('synthetic')
        if synthetic is not None:
            allowed = {f.name for f in fields(SynthConfig)}
            bad = set(synthetic) - allowed
            if bad:
                raise ValueError(f"Unknown keys in '{key}.synthetic': {sorted(bad)}")
            synthetic = SynthConfig(**synthetic)
        return cls(csv=raw.get('csv'), synthetic=synthetic)

    def to_dict(self) -> Dict[str, Any]:
        if self.csv is not None:
            return {'csv': self.csv}
        return {'synthetic': asdict(self.synthetic)}

    def load(self) -> Dataset:
        if self.csv is not None:
            return load_csv(self.csv)
        return synth_generate(self.synthetic)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One comparison experiment.

    Defaults reproduce the tuned hyperparameters of the base model: 100
    hidden nodes, sigmoid activation, 1500 epochs, learning rate 0.01, with
    alpha 0.1 and the 95% safety threshold.
    """
    name: str = 'experiment'
    data: DataSource = field(default_factory=lambda: DataSource(synthetic=SynthConfig()))
    test_data: Optional[DataSource] = None
    methods: Tuple[str, ...] = METHOD_NAMES
    alpha: float = 0.1
    safety_threshold: float = 95.0
    ensemble_size: int = 5
    repeats: int = 3
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    hidden: int = 100
    activation: str = 'sigmoid'
    epochs: int = 1500
    learning_rate: float = 0.01
    minibatch_size: int = 32
    lambda_grid: Dict[str, float] = field(default_factory=lambda: {'start': 0.0, 'stop': 2.0, 'num': 201})
    feature_selection: bool = True
    p_threshold: float = 0.05
    feature_selection_scope: str = 'train'
    warmup_fraction: float = 0.1
    recalibrate: bool = False
    ct_penalty: str = 'lower'
    tune_hyperparameters: bool = False
    tuning_grid: Optional[Dict[str, List[Any]]] = None
    master_seed: int = 0
    max_workers: int = 1
    output_dir: str = 'output'

    def __post_init__(self):
        object.__setattr__(self, 'methods', tuple(self.methods))
        unknown = [m for m in self.methods if m not in METHOD_NAMES]
        if unknown or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHOD_NAMES}, got {list(self.methods)}")
        # report order
        object.__setattr__(self, 'methods', tuple(m for m in METHOD_NAMES if m in self.methods))
        if self.ensemble_size < 1:
            raise ValueError(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {self.master_seed}")
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {self.max_workers}")
        if self.feature_selection_scope not in SELECTION_SCOPES:
            raise ValueError(f"feature_selection_scope must be one of {SELECTION_SCOPES}")
        if not 0.0 < self.p_threshold <= 1.0:
            raise ValueError(f"p_threshold must be in (0, 1], got {self.p_threshold}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        if self.ct_penalty not in ('lower', 'two_sided'):
            raise ValueError(f"ct_penalty must be 'lower' or 'two_sided', got '{self.ct_penalty}'")
        if set(self.lambda_grid) != {'start', 'stop', 'num'}:
            raise ValueError("lambda_grid needs exactly the keys 'start', 'stop' and 'num'")
        # these raise on invalid values
        self.risk_spec()
        self.train_config()
        self.split_spec()
        self.lambda_values()

    @property
    def cqr_percentiles(self) -> Tuple[float, float]:
        low, high = quantile_levels(self.alpha)
        return (round(100 * low, 10), round(100 * high, 10))

    @property
    def distribution_shift(self) -> bool:
        return self.test_data is not None

    @property
    def warmup_epochs(self) -> int:
        return int(self.epochs * self.warmup_fraction)

    def risk_spec(self) -> RiskSpec:
        return RiskSpec(safety_threshold=self.safety_threshold, alpha=self.alpha)

    def train_config(self, seed: int = 0) -> TrainConfig:
        return TrainConfig(
            hidden=self.hidden,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            minibatch_size=self.minibatch_size,
            seed=seed,
            activation=self.activation,
        )

    def split_spec(self, seed: int = 0) -> SplitSpec:
        return SplitSpec(self.train_frac, self.val_frac, self.test_frac, seed)

    def lambda_values(self) -> np.ndarray:
        grid = default_lambda_grid(float(self.lambda_grid['start']), float(self.lambda_grid['stop']),
                                   int(self.lambda_grid['num']))
        if grid.size == 0 or grid[0] < 0:
            raise ValueError(f"lambda_grid must be non-empty and non-negative, got {self.lambda_grid}")
        return grid

    def member_seeds(self) -> List[int]:
        return [self.master_seed + m for m in range(self.ensemble_size)]

    def repeat_seed(self, repeat: int) -> int:
        return self.master_seed * 1000 + repeat

    def with_overrides(self, **overrides: Any) -> 'ExperimentConfig':
        """Copy with the given fields replaced; None values are ignored."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'ExperimentConfig':
        allowed = {f.name for f in fields(cls)}
        unknown = set(raw) - allowed - {'cqr_percentiles'}
        if unknown:
            raise ValueError(f"Unknown config keys: {sorted(unknown)}")
        values = {k: v for k, v in raw.items() if k in allowed}
        if 'data' in values:
            values['data'] = DataSource.from_dict(values['data'], 'data')
        if values.get('test_data') is not None:
            values['test_data'] = DataSource.from_dict(values['test_data'], 'test_data')
        if 'methods' in values:
            values['methods'] = tuple(values['methods'])
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, DataSource):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, dict):
                value = dict(value)
            out[f.name] = value
        out['cqr_percentiles'] = list(self.cqr_percentiles)
        return out


class ConfigLoader:
    """
    Loads and manages experiment configurations from JSON files.

    Experiments live in `<config_dir>/experiments/<name>.json`; a path to any
    JSON file is accepted as well.
    """

    def __init__(self, config_dir: str = 'configs'):
        """
        Initialize config loader.

        Args:
            config_dir: Directory containing configuration files
        """
        self.config_dir = config_dir
        self.experiments_dir = os.path.join(config_dir, 'experiments')
        self.logger = get_logger(self.__class__.__name__)

    def resolve(self, name_or_path: str) -> str:
        """Map an experiment name or a file path to a config file path."""
        if name_or_path.endswith('.json') or os.sep in name_or_path:
            return name_or_path
        return os.path.join(self.experiments_dir, f'{name_or_path}.json')

    def load_experiment_config(self, name_or_path: str) -> ExperimentConfig:
        """
        Load an experiment configuration.

        Args:
            name_or_path: Experiment name (e.g., 'pooled') or JSON file path

        Returns:
            Validated ExperimentConfig

        Raises:
            FileNotFoundError: If the config file doesn't exist
            ValueError: If the config has unknown keys or invalid values
        """
        filepath = self.resolve(name_or_path)
        if not os.path.exists(filepath):
            raise FileNotFoundError(f"Config file not found: {filepath}")

        self.logger.info(f"Loading experiment config from {filepath}")
        with open(filepath, 'r', encoding='utf-8') as f:
            raw = json.load(f)

        if not isinstance(raw, dict):
            raise ValueError(f"Config {filepath} must contain a JSON object")
        raw.setdefault('name', os.path.splitext(os.path.basename(filepath))[0])
        config = ExperimentConfig.from_dict(raw)
        self.logger.info(f"Experiment config loaded: {config.name} (methods: {', '.join(config.methods)})")
        return config

    def save_experiment_config(self, config: ExperimentConfig, path: Optional[str] = None) -> str:
        """
        Save an experiment configuration.

        Args:
            config: Configuration to save
            path: Target file (defaults to `<experiments_dir>/<name>.json`)

        Returns:
            Path of the written file
        """
        filepath = path or os.path.join(self.experiments_dir, f'{config.name}.json')
        directory = os.path.dirname(filepath)
        if directory:
            os.makedirs(directory, exist_ok=True)

        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(config.to_dict(), f, indent=2, ensure_ascii=False)
            f.write('\n')

        self.logger.info(f"Saved experiment config to {filepath}")
        return filepath

    def list_experiments(self) -> List[str]:
        """
        List all available experiment configurations.

        Returns:
            List of experiment names (without .json extension)
        """
        if not os.path.exists(self.experiments_dir):
            return []

        return sorted(
            filename[:-5] for filename in os.listdir(self.experiments_dir)
            if filename.endswith('.json')
        )
