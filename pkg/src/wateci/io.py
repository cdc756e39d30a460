"""CSV ingestion and output formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .propensity import Dataset

TREATMENT = "treatment"
OUTCOME = "outcome"
PROPENSITY = "e"


class CsvFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LoadedData:
    data: Dataset
    propensity: np.ndarray | None
    covariate_names: tuple


def read_csv(path) -> LoadedData:
    """Read a header-first CSV with ``treatment``, ``outcome``, optional ``e``.

    Every other column is a covariate, in file order; an intercept column is
    prepended.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise CsvFormatError("empty file")
    header = [h.strip() for h in rows[0]]
    for required in (TREATMENT, OUTCOME):
        if required not in header:
            raise CsvFormatError(f"missing required column {required!r}")
    if len(set(header)) != len(header):
        raise CsvFormatError("duplicate column names")
    covariates = [h for h in header if h not in (TREATMENT, OUTCOME, PROPENSITY)]
    if not covariates:
        raise CsvFormatError("need at least one covariate column")
    body = rows[1:]
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"line {i}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise CsvFormatError(f"line {i}: missing value in column {header[j]!r}")
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise CsvFormatError(f"line {i}: non-numeric value {cell!r} in {header[j]!r}") from None
    col = {h: values[:, j] for j, h in enumerate(header)}
    X = np.column_stack([col[h] for h in covariates])
    try:
        data = Dataset.from_arrays(X, col[TREATMENT], col[OUTCOME])
    except ValueError as exc:
        raise CsvFormatError(str(exc)) from exc
    e = col.get(PROPENSITY)
    if e is not None and not np.all((e > 0.0) & (e < 1.0)):
        raise CsvFormatError("column 'e' must lie strictly inside (0, 1)")
    return LoadedData(data, e, tuple(covariates))


def to_json(obj) -> str:
    # repr-based float formatting round-trips bit-exactly
    return json.dumps(obj, indent=2, allow_nan=True)


def flatten(obj, prefix="") -> list[tuple[str, object]]:
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            out.extend(flatten(v, f"{prefix}[{i}]"))
    else:
        out.append((prefix, obj))
    return out


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
    return buf.getvalue()


def fmt(x, digits=4) -> str:
    if x is None:
        return "--"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.{digits}f}"
