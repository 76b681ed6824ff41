"""Plan datasets: CSV ingestion, splitting, class balancing and standardization."""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..utils.errors import DataValidationError, EmptyInputError, SingleClassError
from ..utils.logger import get_logger


logger = get_logger('dataset')

LABEL_COLUMN = 'gpr'

# Features found to differ between safe and failing plans on the clinical data
CANONICAL_FEATURES = (
    'PAAJA', 'PEM', 'Pgantryvel', 'PI', 'PmaxAP_v', 'PMAXJ',
    'PmaxnRegs', 'PMCS', 'PminAP_va', 'PMSAS2', 'PMUCP', 'PuniaccMLC',
)


@dataclass(frozen=True)
class PlanRecord:
    """One treatment plan: named features and its gamma passing rate."""
    features: Dict[str, float]
    gpr: float

    def __post_init__(self):
        if not 0.0 <= self.gpr <= 100.0:
            raise DataValidationError(f"gpr must be in [0, 100], got {self.gpr}", column=LABEL_COLUMN)


@dataclass(frozen=True)
class Dataset:
    """
    Column-oriented collection of plans.

    `row_ids` identify the original rows, so oversampled copies and split
    membership can be traced back to their source plan.
    """
    X: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...]
    provenance: str = 'csv'
    row_ids: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            X = X.reshape(y.size, -1)
        if X.shape[0] != y.size:
            raise DataValidationError(f"{X.shape[0]} feature rows but {y.size} labels")
        if X.shape[1] != len(self.feature_names):
            raise DataValidationError(
                f"{X.shape[1]} feature columns but {len(self.feature_names)} feature names"
            )
        if self.provenance not in ('csv', 'synthetic'):
            raise ValueError(f"provenance must be 'csv' or 'synthetic', got '{self.provenance}'")
        row_ids = np.arange(y.size) if self.row_ids is None else np.asarray(self.row_ids, dtype=int)
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        object.__setattr__(self, 'row_ids', row_ids)

    def __len__(self) -> int:
        return self.y.size

    @property
    def records(self) -> List[PlanRecord]:
        return list(self.iter_records())

    def iter_records(self) -> Iterator[PlanRecord]:
        for row, label in zip(self.X, self.y):
            yield PlanRecord(dict(zip(self.feature_names, map(float, row))), float(label))

    @classmethod
    def from_records(cls, records: Sequence[PlanRecord], provenance: str = 'csv') -> 'Dataset':
        if not records:
            raise EmptyInputError("Dataset needs at least one record")
        names = tuple(records[0].features)
        for i, record in enumerate(records):
            if tuple(record.features) != names:
                raise DataValidationError("Records do not share feature names", row=i + 1)
        X = np.array([[r.features[n] for n in names] for r in records], dtype=float)
        y = np.array([r.gpr for r in records], dtype=float)
        return cls(X, y, names, provenance)

    def subset(self, indices) -> 'Dataset':
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices], self.feature_names,
                       self.provenance, self.row_ids[indices], self.metadata)

    def select_columns(self, names: Sequence[str]) -> 'Dataset':
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise DataValidationError(f"Unknown feature columns: {missing}")
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(self.X[:, cols], self.y, tuple(names), self.provenance,
                       self.row_ids, self.metadata)

    def unsafe_mask(self, safety_threshold: float = 95.0) -> np.ndarray:
        return self.y < safety_threshold

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=list(self.feature_names))
        frame[LABEL_COLUMN] = self.y
        return frame


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions and the shuffle seed."""
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fractions):
            raise ValueError(f"Split fractions must be > 0, got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"Split fractions must sum to 1, got {sum(fractions)}")


@dataclass(frozen=True)
class Standardizer:
    """Training-split feature means and standard deviations."""
    feature_names: Tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    dropped: Tuple[str, ...] = ()

    def apply(self, dataset: Dataset) -> Dataset:
        selected = dataset.select_columns(self.feature_names)
        X = (selected.X - self.means) / self.stds
        return Dataset(X, selected.y, self.feature_names, selected.provenance,
                       selected.row_ids, selected.metadata)

    def inverse(self, dataset: Dataset) -> Dataset:
        X = dataset.X * self.stds + self.means
        return Dataset(X, dataset.y, dataset.feature_names, dataset.provenance,
                       dataset.row_ids, dataset.metadata)


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def load_csv(path: str, required_features: Optional[Sequence[str]] = None) -> Dataset:
    """
    Load plans from a CSV file with a `gpr` column and numeric feature columns.

    Args:
        path: CSV file path
        required_features: Feature columns that must be present

    Returns:
        Dataset with feature columns in file order

    Raises:
        FileNotFoundError: If the file does not exist
        DataValidationError: On a missing column, non-numeric cell or gpr outside [0, 100]
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Data file not found: {path}")

    logger.info(f"Loading plans from {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    frame.columns = [str(c).strip() for c in frame.columns]

    if LABEL_COLUMN not in frame.columns:
        raise DataValidationError(f"Missing '{LABEL_COLUMN}' column in {path}", column=LABEL_COLUMN)
    missing = [c for c in (required_features or ()) if c not in frame.columns]
    if missing:
        raise DataValidationError(f"Missing feature columns {missing} in {path}", column=missing[0])
    if frame.empty:
        raise EmptyInputError(f"No data rows in {path}")

    feature_names = [c for c in frame.columns if c != LABEL_COLUMN]
    # float() is correctly rounded, so %.17g output reads back bit for bit
    numeric = frame.apply(lambda col: col.str.strip().map(_parse_float))
    bad = ~np.isfinite(numeric.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row_pos, col_pos = np.argwhere(bad)[0]
        column = frame.columns[col_pos]
        raise DataValidationError(
            f"Non-numeric value '{frame.iat[row_pos, col_pos]}' in column '{column}' at row {row_pos + 1}",
            row=int(row_pos + 1), column=column,
        )

    y = numeric[LABEL_COLUMN].to_numpy(dtype=float)
    out_of_range = np.flatnonzero((y < 0) | (y > 100))
    if out_of_range.size:
        row = int(out_of_range[0] + 1)
        raise DataValidationError(
            f"gpr {y[out_of_range[0]]} outside [0, 100] at row {row}", row=row, column=LABEL_COLUMN
        )

    unknown = [n for n in feature_names if n not in CANONICAL_FEATURES]
    if unknown:
        logger.debug(f"Columns outside the canonical feature schema: {unknown}")

    dataset = Dataset(numeric[feature_names].to_numpy(dtype=float), y, tuple(feature_names), 'csv')
    logger.info(f"Loaded {len(dataset)} plans with {len(feature_names)} features "
                f"({int(dataset.unsafe_mask().sum())} below 95)")
    return dataset


def save_csv(dataset: Dataset, path: str) -> str:
    """Write a dataset in the CSV schema accepted by `load_csv`."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    dataset.to_frame().to_csv(path, index=False, float_format='%.17g', encoding='utf-8')
    return path


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle, then partition into train/validation/test by fraction."""
    n = len(dataset)
    n_train = int(np.floor(n * spec.train_frac + 1e-9))
    n_val = int(np.floor(n * spec.val_frac + 1e-9))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise EmptyInputError(
            f"Split of {n} plans gives an empty part (train={n_train}, val={n_val}, test={n_test})"
        )
    order = np.random.default_rng(spec.seed).permutation(n)
    train = dataset.subset(order[:n_train])
    val = dataset.subset(order[n_train:n_train + n_val])
    test = dataset.subset(order[n_train + n_val:])
    logger.info(f"Split {n} plans into train={n_train}, val={n_val}, test={n_test} (seed {spec.seed})")
    return train, val, test


def split_train_val(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    """
    Two-way split used when the test plans come from another population.

    The train and validation fractions are renormalized to cover every plan.
    """
    n = len(dataset)
    share = spec.train_frac / (spec.train_frac + spec.val_frac)
    n_train = int(np.floor(n * share + 1e-9))
    if n_train < 1 or n - n_train < 1:
        raise EmptyInputError(f"Split of {n} plans gives an empty part (train={n_train}, val={n - n_train})")
    order = np.random.default_rng(spec.seed).permutation(n)
    logger.info(f"Split {n} plans into train={n_train}, val={n - n_train} (seed {spec.seed})")
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def balance_training(train: Dataset, safety_threshold: float = 95.0, seed: int = 0) -> Dataset:
    """
    Oversample the minority class with replacement until both classes have equal counts.

    Only the training split is ever balanced; calibration and test data keep
    their natural class ratio.
    """
    unsafe = train.unsafe_mask(safety_threshold)
    n_unsafe = int(unsafe.sum())
    n_safe = len(train) - n_unsafe
    if n_unsafe == 0 or n_safe == 0:
        raise SingleClassError(
            f"Balancing needs both classes (safe={n_safe}, unsafe={n_unsafe})"
        )
    if n_unsafe == n_safe:
        return train

    minority = np.flatnonzero(unsafe if n_unsafe < n_safe else ~unsafe)
    deficit = abs(n_safe - n_unsafe)
    extra = np.random.default_rng(seed).choice(minority, size=deficit, replace=True)
    balanced = train.subset(np.concatenate([np.arange(len(train)), extra]))
    logger.info(f"Balanced training data: safe={n_safe}, unsafe={n_unsafe} -> {max(n_safe, n_unsafe)} each")
    return balanced


def fit_standardizer(train: Dataset, min_std: float = 1e-12) -> Standardizer:
    """Fit per-feature mean/std on the training split, dropping constant features."""
    means = train.X.mean(axis=0)
    stds = train.X.std(axis=0)
    keep = stds > min_std
    dropped = tuple(n for n, k in zip(train.feature_names, keep) if not k)
    if dropped:
        logger.warning(f"Dropping zero-variance features: {list(dropped)}")
    if not keep.any():
        raise DataValidationError("Every feature has zero variance on the training split")
    names = tuple(n for n, k in zip(train.feature_names, keep) if k)
    return Standardizer(names, means[keep], stds[keep], dropped)


def apply_standardizer(standardizer: Standardizer, dataset: Dataset) -> Dataset:
    """Standardize `dataset` with training statistics."""
    return standardizer.apply(dataset)
