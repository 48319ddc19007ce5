import logging
from pathlib import Path

import pandas as pd

from src.schemas import Report


logger = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"


def report_json(report: Report) -> str:
    """
    Deterministic JSON text of a report.

    Field order follows the schema, histogram keys are already sorted by
    layer and nothing time-dependent is included, so equal reports give
    byte-identical text.
    """
    return report.model_dump_json(indent=2) + "\n"


def save_report(report: Report, path: Path) -> Path:
    """
    Write a report as JSON.

    :param report: Evaluated report.
    :type report: Report
    :param path: Destination file; parent directories are created.
    :type path: Path
    :raises OSError: On I/O failure.
    :return: The written path.
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(report), encoding="utf-8")
    logger.info(f"Report written to {path}")
    return path


def load_report(path: Path) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))


def report_frame(report: Report) -> pd.DataFrame:
    """
    Flat per-scenario table, one row per scenario.

    ``l2_at`` entries become ``l2_<label>`` columns (``l2_1s``, ``l2_avg`` …).
    """
    rows = []
    for row in report.per_scenario:
        flat = row.model_dump(exclude={"l2_at"})
        flat.update({f"l2_{label}": value for label, value in row.l2_at.items()})
        rows.append(flat)
    return pd.DataFrame.from_records(rows)


def save_table(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Table written to {path}")
    return path


def save_report_csv(report: Report, path: Path) -> Path:
    """Write the flat per-scenario table of a report as CSV."""
    return save_table(report_frame(report), path)
