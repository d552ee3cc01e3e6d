from __future__ import annotations

import csv
import logging
import math
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table
from rich.text import Text

from .runner import ResultRow, RowStatus

logger = logging.getLogger(__name__)

RESULT_COLUMNS = (
    "task",
    "model",
    "n",
    "p",
    "q",
    "method",
    "value",
    "margin",
    "gap",
    "seed",
    "tolerance",
    "status",
)


def write_results(rows: Sequence[ResultRow], output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "results.csv"
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(_csv_fields(row) for row in rows)

    for row in rows:
        if row.certificate is not None:
            write_certificate(row, output_dir)
    logger.info("Wrote %d result rows to %s", len(rows), path)
    return path


def write_certificate(row: ResultRow, output_dir: Path) -> Path:
    """One coordinate list per line: curve nodes or the minimizing parameter."""
    if row.certificate is None:
        raise ValueError(f"Row {row.task}/{row.method} has no certificate")
    path = output_dir / f"{_safe_name(row.task)}-{_safe_name(row.method)}.certificate.csv"
    nodes = np.atleast_2d(row.certificate)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows([_number(float(x)) for x in node] for node in nodes)
    logger.debug("Wrote certificate %s (%d rows)", path, nodes.shape[0])
    return path


def render_summary(rows: Sequence[ResultRow], console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title="lorentz-distance results")
    for column in ("task", "model", "method", "value", "margin", "gap", "tol", "status"):
        if column in {"value", "margin", "gap"}:
            table.add_column(column, justify="right")
        else:
            table.add_column(column)

    for row in rows:
        table.add_row(
            row.task,
            f"{row.model} n={row.n}",
            row.method,
            _number(row.value),
            _number(row.margin),
            _number(row.gap),
            f"{row.tolerance:g}",
            _status_cell(row.status),
        )
    console.print(table)

    for row in rows:
        if row.notes and row.status is not RowStatus.OK:
            console.print(f"[bold]{row.task}[/bold] {row.method}: {'; '.join(row.notes)}")


def any_failed(rows: Iterable[ResultRow]) -> bool:
    return any(row.status.failed for row in rows)


def _csv_fields(row: ResultRow) -> list[str]:
    return [
        row.task,
        row.model,
        str(row.n),
        row.p,
        row.q,
        row.method,
        _number(row.value),
        _number(row.margin),
        _number(row.gap),
        "" if row.seed is None else str(row.seed),
        f"{row.tolerance:g}",
        row.status.value,
    ]


def _number(value: float | None) -> str:
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    return f"{value:.12g}"


def _status_cell(status: RowStatus) -> Text:
    match status:
        case RowStatus.OK:
            style = "green"
        case RowStatus.FAIL:
            style = "red"
        case _:
            style = "yellow"
    return Text(status.value, style=style)


def _safe_name(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", value)
