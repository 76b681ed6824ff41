"""Plan data: ingestion, splitting, balancing, feature selection and synthesis."""

from .dataset import (
    CANONICAL_FEATURES, LABEL_COLUMN, PlanRecord, Dataset, SplitSpec, Standardizer,
    load_csv, save_csv, split, split_train_val, balance_training, fit_standardizer, apply_standardizer
)
from .selection import welch_t_test, select_features
from .synthetic import SynthConfig, synth_generate, write_synthetic, load_synthetic, noiseless_gpr

__all__ = [
    'CANONICAL_FEATURES', 'LABEL_COLUMN', 'PlanRecord', 'Dataset', 'SplitSpec',
    'Standardizer', 'load_csv', 'save_csv', 'split', 'split_train_val', 'balance_training',
    'fit_standardizer', 'apply_standardizer', 'welch_t_test', 'select_features',
    'SynthConfig', 'synth_generate', 'write_synthetic', 'load_synthetic', 'noiseless_gpr'
]
