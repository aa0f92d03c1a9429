"""File formats: dense CSV, coordinate CSV, index/partition JSON, reports.

Dense CSV is row-major, comma-separated, with an optional header row.
Numbers are written with shortest round-trip formatting so a matrix that
is written and re-read is bit-identical.  Coordinate CSV carries a
``row,col,value`` header and zero-based indices.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "read_dense_csv",
    "write_dense_csv",
    "read_coordinate_csv",
    "write_coordinate_csv",
    "read_index_json",
    "read_partition_json",
    "write_report_json",
    "validate_report",
    "REPORT_REQUIRED_KEYS",
]


class MatrixFileError(ValueError):
    """A matrix file could not be parsed."""


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_dense_csv(path, missing_sentinel: str | None = None):
    """Read a dense CSV matrix, tolerating one header row.

    When ``missing_sentinel`` is given (empty string allowed), cells equal
    to it are treated as unobserved and the function returns
    ``(matrix, mask)`` with zeros at unobserved positions; otherwise every
    cell must parse as a float and only the matrix is returned.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line in reader:
            if line:
                rows.append(line)
    if not rows:
        raise MatrixFileError(f"{path}: empty matrix file")
    start = 0
    if not all(_is_float(tok) or (missing_sentinel is not None
                                  and tok.strip() == missing_sentinel)
               for tok in rows[0]):
        start = 1
    body = rows[start:]
    if not body:
        raise MatrixFileError(f"{path}: no data rows")
    width = len(body[0])
    if any(len(r) != width for r in body):
        raise MatrixFileError(f"{path}: ragged rows; dense CSV must be rectangular")

    if missing_sentinel is None:
        try:
            return np.array([[float(tok) for tok in r] for r in body])
        except ValueError as exc:
            raise MatrixFileError(f"{path}: non-numeric cell ({exc})") from exc

    matrix = np.zeros((len(body), width))
    mask = np.zeros((len(body), width), dtype=bool)
    for i, r in enumerate(body):
        for j, tok in enumerate(r):
            if tok.strip() == missing_sentinel:
                continue
            try:
                matrix[i, j] = float(tok)
            except ValueError as exc:
                raise MatrixFileError(f"{path}: non-numeric cell at "
                                      f"({i},{j})") from exc
            mask[i, j] = True
    return matrix, mask


def write_dense_csv(path, matrix) -> None:
    """Write a matrix as dense CSV with shortest round-trip decimals."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValueError("matrix must be 2-D")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in m:
            writer.writerow([repr(float(x)) for x in row])


def read_coordinate_csv(path):
    """Read ``row,col,value`` triples (zero-based, header required)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        lines = [l for l in reader if l]
    if not lines:
        raise MatrixFileError(f"{path}: empty coordinate file")
    header = [tok.strip().lower() for tok in lines[0]]
    if header != ["row", "col", "value"]:
        raise MatrixFileError(f"{path}: coordinate CSV must start with a "
                              "'row,col,value' header")
    rows, cols, values = [], [], []
    for i, line in enumerate(lines[1:], start=2):
        if len(line) != 3:
            raise MatrixFileError(f"{path}: line {i} does not have 3 fields")
        try:
            rows.append(int(line[0]))
            cols.append(int(line[1]))
            values.append(float(line[2]))
        except ValueError as exc:
            raise MatrixFileError(f"{path}: line {i}: {exc}") from exc
    return (np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp),
            np.array(values))


def write_coordinate_csv(path, rows, cols, values) -> None:
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    values = np.asarray(values, dtype=float)
    if not (rows.shape == cols.shape == values.shape):
        raise DimensionMismatchError("rows, cols, values must have equal length")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for r, c, v in zip(rows, cols, values):
            writer.writerow([int(r), int(c), repr(float(v))])


def read_index_json(path) -> np.ndarray:
    """Read a flat JSON array of zero-based indices."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not all(isinstance(i, int) for i in data):
        raise MatrixFileError(f"{path}: expected a JSON array of integers")
    return np.asarray(data, dtype=np.intp)


def read_partition_json(path) -> list:
    """Read a JSON array of arrays of zero-based indices."""
    with open(path) as fh:
        data = json.load(fh)
    if (not isinstance(data, list)
            or not all(isinstance(b, list) for b in data)
            or not all(isinstance(i, int) for b in data for i in b)):
        raise MatrixFileError(f"{path}: expected a JSON array of index arrays")
    return data


#: Keys every CLI report must carry.
REPORT_REQUIRED_KEYS = ("schema", "version", "command", "config", "rank",
                        "gamma", "amse_estimate", "clipped_components")

REPORT_SCHEMA_VERSION = 1


def build_report(command: str, config: dict, result=None, extra: dict | None = None) -> dict:
    """Assemble the JSON report for one CLI invocation."""
    from . import __version__

    report = {
        "schema": REPORT_SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "config": config,
        "rank": 0,
        "gamma": None,
        "amse_estimate": 0.0,
        "clipped_components": [],
    }
    if result is not None:
        spikes = result.spikes
        report.update({
            "rank": int(spikes.rank),
            "gamma": float(spikes.gamma),
            "amse_estimate": float(result.amse_estimate),
            "clipped_components": [int(i) for i in result.clipped_components],
            "spike": {
                "observed": spikes.observed.tolist(),
                "t": spikes.t.tolist(),
                "c": spikes.c.tolist(),
                "c_tilde": spikes.c_tilde.tolist(),
            },
        })
        geom = getattr(result, "geometry", None)
        if geom is not None:
            report["geometry"] = {
                "mu": float(geom.mu),
                "nu": float(geom.nu),
                "alpha": geom.alpha.tolist(),
                "beta": geom.beta.tolist(),
            }
    if extra:
        report.update(extra)
    return report


def validate_report(report: dict) -> None:
    """Raise ``ValueError`` if a report is missing required keys."""
    missing = [k for k in REPORT_REQUIRED_KEYS if k not in report]
    if missing:
        raise ValueError(f"report is missing keys: {missing}")
    if report["schema"] != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {report['schema']!r}")


def write_report_json(path, report: dict) -> None:
    validate_report(report)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
