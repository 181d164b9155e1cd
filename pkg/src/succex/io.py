"""CSV ingestion and output helpers."""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .errors import DataError, EmptySeriesError, ParseError
from .series import TimeSeries

log = logging.getLogger(__name__)


def ingest_csv(path) -> TimeSeries:
    """Read a ``t,value`` CSV into a :class:`TimeSeries`.

    Rows are stably sorted by ``t`` (with a logged notice when the file was
    unsorted). Zero values are kept; see :func:`succex.series.drop_zeros`.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise EmptySeriesError(f"{path} is empty")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["t", "value"]:
        raise ParseError(path, 1, f"expected header 't,value', got {','.join(rows[0])!r}")
    t, x = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(path, lineno, f"expected 2 fields, got {len(row)}")
        try:
            tv, xv = float(row[0]), float(row[1])
        except ValueError:
            raise ParseError(path, lineno, f"cannot parse {','.join(row)!r} as two numbers") from None
        if not (np.isfinite(tv) and np.isfinite(xv)):
            raise ParseError(path, lineno, "values must be finite")
        t.append(tv)
        x.append(xv)
    if not t:
        raise EmptySeriesError(f"{path} has no data rows")
    t = np.array(t)
    x = np.array(x)
    if np.any(np.diff(t) < 0):
        log.warning("%s: rows were not sorted by t; sorting (stable)", path)
        order = np.argsort(t, kind="stable")
        t, x = t[order], x[order]
    return TimeSeries(t, x)


def fmt(v, digits=10):
    """Deterministic text for a table cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0:
            return "0"
        return format(v, f".{digits}g")
    return str(v)


def write_csv(path, header, rows, digits=10):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v, digits) for v in r])
    return path


def write_series_csv(path, series: TimeSeries):
    return write_csv(path, ["t", "value"], zip(series.covariates, series.values), digits=17)
