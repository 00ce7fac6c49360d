"""
Report writer for experiment suites.
Writes one CSV table and one JSON summary per suite.
"""

import csv
import json
import math
import os
from typing import Any, Dict, IO, List, Sequence

from constants import FileConstants
from models.experiment import SuiteReport
from utils.logging import log_error, log_info


def _columns(rows: Sequence[Dict[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_csv(rows: Sequence[Dict[str, Any]], stream: IO[str]) -> None:
    """Write rows as CSV with the union of their keys as header."""
    writer = csv.DictWriter(stream, fieldnames=_columns(rows), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


class ReportWriter:
    """Persists SuiteReports under an output directory."""

    def __init__(self, out_dir: str = FileConstants.DEFAULT_OUTPUT_DIR):
        """
        Initialize ReportWriter.

        Args:
            out_dir: Directory receiving <suite>.csv and <suite>_summary.json
        """
        self.out_dir = out_dir

    def table_path(self, suite: str) -> str:
        return os.path.join(self.out_dir, f"{suite}{FileConstants.TABLE_SUFFIX}")

    def summary_path(self, suite: str) -> str:
        return os.path.join(self.out_dir, f"{suite}{FileConstants.SUMMARY_SUFFIX}")

    def write(self, report: SuiteReport) -> bool:
        """
        Write the table and the summary of a report.

        Returns:
            True if both files were written, False otherwise
        """
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            with open(self.table_path(report.suite), "w", newline="") as f:
                write_csv(report.rows, f)
            with open(self.summary_path(report.suite), "w") as f:
                json.dump(_json_safe(report.to_summary()), f, indent=2)
            log_info(f"Wrote {len(report.rows)} rows for suite {report.suite} to {self.out_dir}")
            return True
        except OSError as e:
            log_error(f"Failed to write report for suite {report.suite}: {e}")
            return False
