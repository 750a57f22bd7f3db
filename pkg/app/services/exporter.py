"""
Artifact Exporter for the Faraday-Mirror Lab

Bit-stable serialization of everything a run writes to its output directory.

FORMATS:
- Real matrices (PTMs, Pauli expectations): plain text, one row per line,
  entries separated by single spaces, 17 significant digits, -0 written as 0.
- Tables (mapping tables, count tables, per-step records, shots scans): CSV
  via pandas with a fixed column order and "%.17g" floats.
- Summaries and states: JSON with 2-space indentation and key order fixed by
  the pydantic models; complex matrices appear as {rows, cols, data} records.

No timestamps, hostnames or absolute paths are written, so identical
(config, seed) pairs give byte-identical files. I/O errors propagate as
OSError for the CLI to map to exit status 1.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.models.analysis import CountRecord, MeasurementRecord
from app.models.quantum import PauliTransferMatrix

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def format_real(x: float) -> str:
    """17 significant digits; adding 0.0 turns -0.0 into 0.0."""
    return format(float(x) + 0.0, ".17g")


def matrix_to_text(m: Any) -> str:
    """
    Whitespace-separated rows of a real matrix, newline-terminated.

    Raises:
        ValueError: if the matrix has a non-zero imaginary part
    """
    if isinstance(m, PauliTransferMatrix):
        m = m.m
    arr = np.asarray(m)
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise ValueError("Plain-text matrices must be real; export complex ones as JSON")
        arr = arr.real
    if arr.ndim != 2:
        raise ValueError(f"Expected a 2-D matrix, got {arr.ndim} dimensions")
    return "".join(" ".join(format_real(x) for x in row) + "\n" for row in arr)


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.debug(f"Wrote {path}")
    return path


def export_matrix(m: Any, path: Path) -> Path:
    return _write_text(path, matrix_to_text(m))


def export_table(df: pd.DataFrame, path: Path) -> Path:
    """CSV with the DataFrame's column order, no index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path} ({len(df)} rows)")
    return path


def export_json(payload: Union[BaseModel, dict, list], path: Path) -> Path:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return _write_text(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def records_frame(
    records: Sequence[MeasurementRecord],
    tag: str | None = None,
    tag_column: str = "input",
) -> pd.DataFrame:
    """
    One row per outcome: [tag,] setting, outcome, value.

    `value` holds counts for CountRecords and probabilities for exact records.
    """
    rows = []
    for record in records:
        values = record.counts if isinstance(record, CountRecord) else record.probabilities
        for outcome in record.setting.outcomes:
            row = {"setting": record.setting.label, "outcome": outcome, "value": values[outcome]}
            if tag is not None:
                row = {tag_column: tag, **row}
            rows.append(row)
    columns = ([tag_column] if tag is not None else []) + ["setting", "outcome", "value"]
    return pd.DataFrame(rows, columns=columns)


def export_records(
    groups: Iterable[tuple[str, Sequence[MeasurementRecord]]],
    path: Path,
    tag_column: str = "input",
) -> Path:
    """Concatenate tagged record groups into one count table."""
    frames = [records_frame(records, tag, tag_column) for tag, records in groups]
    if not frames:
        frames = [pd.DataFrame(columns=[tag_column, "setting", "outcome", "value"])]
    return export_table(pd.concat(frames, ignore_index=True), path)


def export(obj: Any, path: Path) -> Path:
    """
    Dispatch on the artifact type.

    matrix / PTM → text rows, DataFrame → CSV, model / dict / list → JSON
    """
    if isinstance(obj, (np.ndarray, PauliTransferMatrix)):
        return export_matrix(obj, path)
    if isinstance(obj, pd.DataFrame):
        return export_table(obj, path)
    if isinstance(obj, (BaseModel, dict, list)):
        return export_json(obj, path)
    raise TypeError(f"Don't know how to export {type(obj).__name__}")


__all__ = [
    "format_real",
    "matrix_to_text",
    "export_matrix",
    "export_table",
    "export_json",
    "records_frame",
    "export_records",
    "export",
]
