"""Repeated-split comparison of the interval methods."""

import json
import os
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np

from ..config.config_loader import ExperimentConfig
from ..core.evaluation import (
    AggregateReport, MetricsReport, aggregate, compute_metrics, retrospective_threshold
)
from ..core.exporter import THRESHOLD_MODES, ReportExporter, comparison_table
from ..data.dataset import (
    Dataset, balance_training, fit_standardizer, split, split_train_val
)
from ..data.selection import select_features
from ..methods import METHOD_LABELS, METHOD_REGISTRY, MethodContext
from ..utils.errors import TriageError
from ..utils.logger import get_logger


ARTIFACT_FILE = 'run_artifact.json'


@dataclass
class PreparedSplits:
    """Model-ready splits of one repeat."""
    train: Dataset
    val: Dataset
    test: Dataset
    features: List[str]
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass
class RepeatOutcome:
    """Metrics and calibration details of one successful repeat."""
    repeat: int
    seed: int
    features: List[str]
    metrics: Dict[str, Dict[str, MetricsReport]]
    details: Dict[str, Dict[str, List[float]]]
    intervals: Dict[str, Dict[str, List[float]]]
    timings: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'repeat': self.repeat,
            'seed': self.seed,
            'features': self.features,
            'metrics': {m: {mode: r.to_dict() for mode, r in by_mode.items()}
                        for m, by_mode in self.metrics.items()},
            'details': self.details,
            'intervals': self.intervals,
        }


@dataclass
class RunArtifact:
    """Everything a run produced; `to_dict` is what `report` reads back."""
    config: ExperimentConfig
    run_dir: str
    outcomes: List[RepeatOutcome]
    failures: List[Dict[str, Any]]
    aggregates: Dict[str, Dict[str, AggregateReport]]
    hyperparameters: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'seeds': {
                'master_seed': self.config.master_seed,
                'repeat_seeds': [self.config.repeat_seed(r) for r in range(self.config.repeats)],
                'member_seeds': self.config.member_seeds(),
            },
            'hyperparameters': self.hyperparameters,
            'repeats': [o.to_dict() for o in self.outcomes],
            'failures': self.failures,
            'aggregates': {m: {mode: asdict(r) for mode, r in by_mode.items()}
                           for m, by_mode in self.aggregates.items()},
        }


@contextmanager
def _timed(timings: Dict[str, float], stage: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = time.perf_counter() - start


def prepare_splits(config: ExperimentConfig, dataset: Dataset, seed: int,
                   test_dataset: Optional[Dataset] = None,
                   features: Optional[List[str]] = None) -> PreparedSplits:
    """
    Split, select features, standardize and balance for one repeat.

    Args:
        config: Experiment configuration
        dataset: Plans used for training and calibration (and testing unless
            `test_dataset` is given)
        seed: Repeat seed for the split and the oversampling
        test_dataset: Plans of another population used as the test set
        features: Pre-selected feature names (skips per-repeat selection)

    Returns:
        PreparedSplits with standardized train/val/test data
    """
    logger = get_logger('runner')
    timings: Dict[str, float] = {}
    spec = config.split_spec(seed)

    with _timed(timings, 'split'):
        if test_dataset is None:
            train, val, test = split(dataset, spec)
        else:
            train, val = split_train_val(dataset, spec)
            test = test_dataset

    with _timed(timings, 'feature_selection'):
        if features is None and config.feature_selection:
            features = select_features(train, config.p_threshold, config.safety_threshold)
            if not features:
                logger.warning("No feature passed the t-test; keeping all features")
                features = list(train.feature_names)
        elif features is None:
            features = list(train.feature_names)
        train, val, test = (d.select_columns(features) for d in (train, val, test))

    with _timed(timings, 'standardize'):
        standardizer = fit_standardizer(train)
        train, val, test = (standardizer.apply(d) for d in (train, val, test))

    with _timed(timings, 'balance'):
        train = balance_training(train, config.safety_threshold, seed)

    return PreparedSplits(train, val, test, list(standardizer.feature_names), timings)


class ExperimentRunner:
    """
    Runs the configured methods over repeated random splits.

    Each repeat splits the data, prepares features, trains the ensemble and
    evaluates every method at the prospective and retrospective thresholds.
    A failing repeat is recorded and the remaining repeats continue.
    """

    def __init__(self, config: ExperimentConfig, run_dir: Optional[str] = None):
        """
        Initialize the runner.

        Args:
            config: Experiment configuration
            run_dir: Output directory (defaults to `<output_dir>/<name>`)
        """
        self.config = config
        self.run_dir = run_dir or os.path.join(config.output_dir, config.name)
        self.logger = get_logger(self.__class__.__name__)
        self.hyperparameters: Optional[Dict[str, Any]] = None
        self.tuning_scores: List[Dict[str, Any]] = []

    def run(self) -> RunArtifact:
        """
        Main experiment workflow orchestrator.

        Returns:
            RunArtifact with per-repeat metrics and aggregates

        Raises:
            TriageError: If the data cannot be loaded or every repeat failed
        """
        config = self.config
        self.logger.info(f"Starting experiment {config.name}: methods={list(config.methods)}, "
                         f"repeats={config.repeats}, ensemble={config.ensemble_size}, alpha={config.alpha}")

        dataset = config.data.load()
        test_dataset = config.test_data.load() if config.test_data is not None else None
        if test_dataset is not None:
            self.logger.info(f"Distribution-shift mode: testing on {len(test_dataset)} plans of a second population")

        pooled_features = None
        if config.feature_selection and config.feature_selection_scope == 'all':
            pooled_features = select_features(dataset, config.p_threshold, config.safety_threshold) \
                or list(dataset.feature_names)

        if config.tune_hyperparameters:
            config = self._tune(dataset, test_dataset, pooled_features)

        outcomes: List[RepeatOutcome] = []
        failures: List[Dict[str, Any]] = []
        for repeat in range(config.repeats):
            seed = config.repeat_seed(repeat)
            self.logger.info(f"Repeat {repeat + 1}/{config.repeats} (seed {seed})")
            try:
                outcomes.append(self._run_repeat(config, repeat, dataset, test_dataset, pooled_features))
            except Exception as e:
                line = e.to_line() if isinstance(e, TriageError) else \
                    f'error={e.__class__.__name__} message="{e}"'
                self.logger.error(f"Repeat {repeat} failed: {line}", exc_info=True)
                failures.append({'repeat': repeat, 'seed': seed, 'error': line})

        if not outcomes:
            raise TriageError(f"All {config.repeats} repeats failed", experiment=config.name)

        aggregates = {
            method: {mode: aggregate([o.metrics[method][mode] for o in outcomes]) for mode in THRESHOLD_MODES}
            for method in config.methods
        }
        artifact = RunArtifact(config, self.run_dir, outcomes, failures, aggregates, self.hyperparameters)
        self.export(artifact)
        return artifact

    def _tune(self, dataset: Dataset, test_dataset: Optional[Dataset],
              features: Optional[List[str]]) -> ExperimentConfig:
        from .tuner import HyperparameterTuner

        prepared = prepare_splits(self.config, dataset, self.config.repeat_seed(0), test_dataset, features)
        result = HyperparameterTuner(self.config.tuning_grid).tune(
            prepared.train, prepared.val, self.config.train_config(self.config.master_seed)
        )
        self.hyperparameters = result.best
        self.tuning_scores = result.scores
        return self.config.with_overrides(**result.best)

    def _run_repeat(self, config: ExperimentConfig, repeat: int, dataset: Dataset,
                    test_dataset: Optional[Dataset], features: Optional[List[str]]) -> RepeatOutcome:
        seed = config.repeat_seed(repeat)
        prepared = prepare_splits(config, dataset, seed, test_dataset, features)
        timings = dict(prepared.timings)
        spec = config.risk_spec()

        ctx = MethodContext(
            train=prepared.train,
            val=prepared.val,
            test=prepared.test,
            train_config=config.train_config(),
            spec=spec,
            lambda_grid=config.lambda_values(),
            member_seeds=config.member_seeds(),
            warmup_epochs=config.warmup_epochs,
            ct_penalty=config.ct_penalty,
            recalibrate=config.recalibrate,
            max_workers=config.max_workers,
        )

        labels = prepared.test.y
        has_unsafe = bool(prepared.test.unsafe_mask(spec.safety_threshold).any())
        if not has_unsafe:
            self.logger.warning("Test split has no unsafe plans; retrospective threshold falls back to "
                                f"{spec.safety_threshold}")

        metrics: Dict[str, Dict[str, MetricsReport]] = {}
        details: Dict[str, Dict[str, List[float]]] = {}
        intervals: Dict[str, Dict[str, List[float]]] = {}
        for method in config.methods:
            strategy = METHOD_REGISTRY[method]()
            with _timed(timings, f'method:{method}'):
                output = strategy.run(ctx)

            threshold = retrospective_threshold(output.intervals, labels, spec) if has_unsafe \
                else spec.safety_threshold
            by_mode = {
                'prospective': compute_metrics(output.intervals, labels, spec.safety_threshold, spec),
                'retrospective': compute_metrics(output.intervals, labels, threshold, spec),
            }
            if not strategy.has_intervals:
                by_mode = {mode: report.without_intervals() for mode, report in by_mode.items()}
            metrics[method] = by_mode
            details[method] = output.details
            intervals[method] = {
                'low': [float(v) for v in output.intervals.lows],
                'high': [float(v) for v in output.intervals.highs],
            }
            p = by_mode['prospective']
            self.logger.info(f"{METHOD_LABELS[method]}: sensitivity={p.sensitivity:.3f} "
                             f"specificity={p.specificity:.3f} reduction={p.reduction_in_measurement:.3f}")

        return RepeatOutcome(repeat, seed, prepared.features, metrics, details, intervals, timings)

    def export(self, artifact: RunArtifact) -> List[str]:
        """Write the metric CSVs, tables, timings and the JSON artifact."""
        exporter = ReportExporter(self.run_dir)
        config = artifact.config
        paths = []

        for method in config.methods:
            rows = []
            for outcome in artifact.outcomes:
                for mode in THRESHOLD_MODES:
                    report = outcome.metrics[method][mode]
                    rows.append({'repeat': outcome.repeat, 'seed': outcome.seed, 'mode': mode,
                                 'threshold': report.threshold_used, **report.to_dict()})
            paths.append(exporter.export_method_metrics(method, rows))

        paths.append(exporter.export_aggregates(artifact.aggregates))
        artifact_path = os.path.join(self.run_dir, ARTIFACT_FILE)
        with open(artifact_path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(artifact.to_dict(), f, indent=2, ensure_ascii=False)
            f.write('\n')
        paths.append(artifact_path)
        self.logger.info(f"Wrote run artifact to {artifact_path}")

        paths.append(exporter.export_timings([
            {'repeat': o.repeat, 'stage': stage, 'seconds': seconds}
            for o in artifact.outcomes for stage, seconds in o.timings.items()
        ]))
        if self.tuning_scores:
            paths.append(exporter.export_tuning(self.tuning_scores))

        # last: a failing workbook leaves the artifact usable by `report`
        tables = {
            mode: comparison_table([(METHOD_LABELS[m], artifact.aggregates[m][mode]) for m in config.methods])
            for mode in THRESHOLD_MODES
        }
        paths.extend(exporter.export_tables(tables, table_header(config.alpha, config.safety_threshold)))
        return paths


def table_header(alpha: float, safety_threshold: float) -> str:
    return f"alpha={alpha:g} safety_threshold={safety_threshold:g}"


def summarize_failures(artifact: RunArtifact) -> str:
    if not artifact.failures:
        return 'none'
    return '; '.join(f"repeat {f['repeat']}: {f['error']}" for f in artifact.failures)


def mean_detail(artifact: RunArtifact, method: str, key: str) -> Optional[float]:
    """Mean of a calibration detail (e.g. 'I') over members and repeats."""
    values = [v for o in artifact.outcomes for v in o.details.get(method, {}).get(key, [])]
    return float(np.mean(values)) if values else None
