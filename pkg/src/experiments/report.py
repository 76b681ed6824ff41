"""Merge run artifacts into one comparison report."""

import json
import os
from typing import Any, Dict, List, Sequence, Tuple

import pandas as pd

from .runner import table_header
from ..config.config_loader import METHOD_NAMES
from ..core.evaluation import AggregateReport
from ..core.exporter import THRESHOLD_MODES, ReportExporter, comparison_table
from ..methods import METHOD_LABELS
from ..utils.errors import EmptyInputError, IncompatibleArtifactsError
from ..utils.logger import get_logger


logger = get_logger('report')


def load_artifact(path: str) -> Dict[str, Any]:
    """Read a `run_artifact.json` file (or the run directory holding it)."""
    if os.path.isdir(path):
        path = os.path.join(path, 'run_artifact.json')
    if not os.path.exists(path):
        raise FileNotFoundError(f"Run artifact not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        artifact = json.load(f)
    for key in ('config', 'aggregates'):
        if key not in artifact:
            raise IncompatibleArtifactsError(f"{path} is not a run artifact (missing '{key}')", path=path)
    return artifact


def merge_tables(artifacts: Sequence[Dict[str, Any]]) -> Tuple[Dict[str, pd.DataFrame], str]:
    """
    Build one comparison table per threshold mode from several artifacts.

    Rows are grouped by method; with more than one artifact every label
    carries the experiment name.

    Returns:
        (tables by mode, header line)

    Raises:
        EmptyInputError: If no artifact is given
        IncompatibleArtifactsError: If alpha or the safety threshold differ
    """
    if not artifacts:
        raise EmptyInputError("report needs at least one run artifact")

    contracts = {(a['config']['alpha'], a['config']['safety_threshold']) for a in artifacts}
    if len(contracts) > 1:
        raise IncompatibleArtifactsError(
            f"Artifacts disagree on alpha/safety_threshold: {sorted(contracts)}"
        )
    alpha, safety_threshold = contracts.pop()

    tagged = len(artifacts) > 1
    rows: Dict[str, List[Tuple[str, AggregateReport]]] = {mode: [] for mode in THRESHOLD_MODES}
    for method in METHOD_NAMES:
        for artifact in artifacts:
            by_mode = artifact['aggregates'].get(method)
            if by_mode is None:
                continue
            label = METHOD_LABELS[method]
            if tagged:
                label = f"{label} [{artifact['config']['name']}]"
            for mode in THRESHOLD_MODES:
                rows[mode].append((label, AggregateReport(**by_mode[mode])))

    tables = {mode: comparison_table(rows[mode]) for mode in THRESHOLD_MODES}
    return tables, table_header(alpha, safety_threshold)


def build_report(paths: Sequence[str], output_dir: str) -> List[str]:
    """Load artifacts, merge them and write the tables to `output_dir`."""
    artifacts = [load_artifact(p) for p in paths]
    tables, header = merge_tables(artifacts)
    logger.info(f"Merged {len(artifacts)} artifacts into {output_dir}")
    return ReportExporter(output_dir).export_tables(tables, header)
