"""Report export utilities for saving experiment results."""

import os
from typing import Any, Dict, List, Sequence, Tuple

import pandas as pd

from .evaluation import AggregateReport, METRIC_NAMES
from ..utils.errors import ExportError
from ..utils.logger import get_logger


THRESHOLD_MODES = ('prospective', 'retrospective')

# Column order of the comparison tables
TABLE_COLUMNS = [
    'Method',
    'Sensitivity',
    'Specificity',
    'Reduction in Measurement',
    'Coverage',
    'Interval Width',
]

METRIC_COLUMNS = dict(zip(METRIC_NAMES, TABLE_COLUMNS[1:]))

METRICS_CSV_COLUMNS = [
    'repeat', 'seed', 'mode', 'threshold', 'sensitivity', 'specificity',
    'reduction_in_measurement', 'coverage', 'mean_interval_width', 'n_test',
    'n_unsafe', 'n_safe', 'sensitivity_undefined', 'specificity_undefined',
]

FLOAT_FORMAT = '%.17g'


def comparison_table(rows: Sequence[Tuple[str, AggregateReport]], digits: int = 3) -> pd.DataFrame:
    """
    Build the comparison table for one threshold mode.

    Args:
        rows: (method label, aggregate) pairs in display order
        digits: Decimals of the `mean ± std` cells

    Returns:
        DataFrame with the fixed column order; methods without intervals show NA
    """
    records = []
    for label, report in rows:
        record = {'Method': label}
        for metric, column in METRIC_COLUMNS.items():
            record[column] = report.cell(metric, digits)
        records.append(record)
    return pd.DataFrame(records, columns=TABLE_COLUMNS)


def render_table(table: pd.DataFrame, title: str) -> str:
    """Fixed-width text rendering of a comparison table."""
    body = table.to_string(index=False, justify='left') if not table.empty else '(no methods)'
    return f"{title}\n{'=' * len(title)}\n{body}\n"


class ReportExporter:
    """
    Writes the files of one experiment run directory.

    Per-repeat metric CSVs carry no timing so that identical configs produce
    byte-identical files; timings go to their own CSV.
    """

    def __init__(self, output_dir: str = 'output'):
        """
        Initialize exporter with output directory.

        Args:
            output_dir: Directory to save report files
        """
        self.output_dir = output_dir
        self.logger = get_logger(self.__class__.__name__)

        # Create output directory if it doesn't exist
        os.makedirs(output_dir, exist_ok=True)

    def _path(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def export_method_metrics(self, method: str, rows: List[Dict[str, Any]]) -> str:
        """
        Export per-repeat metrics of one method.

        Args:
            method: Method name (for filename)
            rows: One dict per repeat and threshold mode

        Returns:
            Path to the created CSV file
        """
        df = pd.DataFrame(rows, columns=METRICS_CSV_COLUMNS)
        filepath = self._path(f'metrics_{method}.csv')
        df.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, encoding='utf-8', lineterminator='\n')
        self.logger.info(f"Exported {len(rows)} metric rows to {filepath}")
        return filepath

    def export_aggregates(self, aggregates: Dict[str, Dict[str, AggregateReport]]) -> str:
        """Long-format mean/std per method, threshold mode and metric."""
        records = []
        for method, by_mode in aggregates.items():
            for mode, report in by_mode.items():
                for metric in METRIC_NAMES:
                    records.append({
                        'method': method,
                        'mode': mode,
                        'metric': metric,
                        'mean': report.means.get(metric),
                        'std': report.stds.get(metric),
                        'runs': report.runs,
                    })
        df = pd.DataFrame(records, columns=['method', 'mode', 'metric', 'mean', 'std', 'runs'])
        filepath = self._path('aggregate.csv')
        df.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, encoding='utf-8',
                  lineterminator='\n', na_rep='NA')
        self.logger.info(f"Exported aggregates to {filepath}")
        return filepath

    def export_tables(self, tables: Dict[str, pd.DataFrame], header: str = '') -> List[str]:
        """
        Export one text table per threshold mode plus an Excel workbook.

        Args:
            tables: Comparison table per threshold mode
            header: Optional first line (e.g. experiment name and alpha)

        Returns:
            Paths of the written files
        """
        paths = []
        for mode, table in tables.items():
            filepath = self._path(f'table_{mode}.txt')
            title = f"{mode.capitalize()} threshold"
            with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
                if header:
                    f.write(header + '\n\n')
                f.write(render_table(table, title))
            paths.append(filepath)
            self.logger.info(f"Wrote {mode} table to {filepath}")

        paths.append(self.export_to_excel(tables))
        return paths

    def export_to_excel(self, tables: Dict[str, pd.DataFrame], filename: str = 'comparison.xlsx') -> str:
        """
        Export comparison tables to an Excel workbook, one sheet per mode.

        Returns:
            Path to the created Excel file

        Raises:
            ExportError: If the workbook cannot be written
        """
        filepath = self._path(filename)
        try:
            with pd.ExcelWriter(filepath, engine='openpyxl') as writer:
                for mode, table in tables.items():
                    table.to_excel(writer, sheet_name=mode, index=False)
            self.logger.info(f"Exported comparison workbook to {filepath}")
            return filepath
        except Exception as e:
            self.logger.error(f"Failed to export to Excel: {e}", exc_info=True)
            raise ExportError(f"Could not write workbook: {e}", path=filepath) from e

    def export_timings(self, rows: List[Dict[str, Any]]) -> str:
        """Per-stage wall-clock seconds (repeat, stage, seconds)."""
        df = pd.DataFrame(rows, columns=['repeat', 'stage', 'seconds'])
        filepath = self._path('timings.csv')
        df.to_csv(filepath, index=False, encoding='utf-8', lineterminator='\n')
        self.logger.info(f"Exported {len(rows)} timings to {filepath}")
        return filepath

    def export_tuning(self, scores: List[Dict[str, Any]]) -> str:
        """Validation MSE of every tuning candidate, best first."""
        df = pd.DataFrame(scores).sort_values('val_mse', kind='stable')
        filepath = self._path('tuning.csv')
        df.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, encoding='utf-8', lineterminator='\n')
        self.logger.info(f"Exported {len(scores)} tuning scores to {filepath}")
        return filepath

    def export_text(self, filename: str, text: str) -> str:
        filepath = self._path(filename)
        with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text if text.endswith('\n') else text + '\n')
        self.logger.info(f"Wrote {filepath}")
        return filepath
