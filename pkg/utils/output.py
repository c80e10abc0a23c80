"""
Output helpers: fixed column sets per command, CSV/JSON rendering.
"""
import logging
import math
import os
from typing import Dict, Iterable, List, Optional

import click
import pandas as pd

logger = logging.getLogger(__name__)

# Column sets are part of the command contract and never depend on the data
COLUMNS: Dict[str, List[str]] = {
    "analyze": ["pe", "n", "q", "analytic", "markov", "difference"],
    "table": ["q", "pe_star", "m_star", "improvement_pct"],
    "optimize": ["q", "pe_star", "m_star", "improvement_pct", "greedy_gap_pct"],
    "sweep": ["pe", "n", "q", "analytic", "simulated", "ci95", "bound_upper", "lower_eq2", "lower_eq3"],
    "simulate": ["n", "q", "pe", "mean", "stderr", "ci95", "trials", "seed"],
    "trace": ["slot_index", "interval_start", "interval_width", "sigma", "feedback", "selected_count"],
    "throughput": ["q", "pe", "m", "throughput"],
}

FORMATS = ("csv", "json")


def significant(value, digits: int = 6):
    """Round floats to `digits` significant digits; other values pass through."""
    if value is None or isinstance(value, (bool, int, str)):
        return value
    value = float(value)
    if math.isnan(value):
        return None
    return float(f"{value:.{digits}g}")


def render(command: str, records: Iterable[dict], fmt: str = "csv") -> str:
    """
    Render records with the column set of a command.

    Args:
        command: Key into COLUMNS
        records: One dict per row; missing columns are left empty
        fmt: "csv" or "json"

    Returns:
        The rendered text (CSV with a header line, or a JSON array of objects)
    """
    if fmt not in FORMATS:
        raise click.BadParameter(f"unknown format '{fmt}'", param_hint="'--format'")
    columns = COLUMNS[command]
    rows = [{column: significant(record.get(column)) for column in columns} for record in records]
    # object dtype keeps integer columns integral next to missing values
    frame = pd.DataFrame(rows, columns=columns, dtype=object)
    if fmt == "csv":
        return frame.to_csv(index=False, lineterminator="\n")
    return frame.to_json(orient="records", indent=2) + "\n"


def emit(text: str, out: Optional[str] = None):
    """Write rendered output to a file, or to stdout when no file is given."""
    if not out:
        click.echo(text, nl=False)
        return
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info(f"Wrote {out}")
