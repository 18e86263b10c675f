"""Curve files and lagged time-series datasets.

Curve files are comma-separated UTF-8 text, one sample per row::

    id,0.0,0.5,1.0,y,z1,z2
    s1,0.1,0.4,0.9,2.5,1.0,0.0

The header is optional and recognized by a first cell equal to ``id``. In the
header, numeric names are grid abscissae, ``y`` is the response and ``z1``,
``z2``, ... are linear covariates; other names are ignored. Without a header
every column after the id is a curve value on the grid ``1, 2, ..., m``.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Sequence

import numpy as np

from .curves import FunctionalDataset, Grid
from .errors import InsufficientData, InvalidArgument, MissingColumn, ParseError

__all__ = ["load_curves", "write_curves", "read_series", "series_to_curves"]

_Z_COLUMN = re.compile(r"^z(\d+)$")


def _to_float(cell: str, line: int, column: int) -> float:
    try:
        val = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", line, column) from None
    if not np.isfinite(val):
        raise ParseError(f"non-finite cell {cell!r}", line, column)
    return val


def _layout(header: list[str], line: int):
    grid, y_col, z_cols = [], None, {}
    curve_cols = []
    for j, name in enumerate(header[1:], start=1):
        name = name.strip()
        try:
            grid.append(float(name))
            curve_cols.append(j)
            continue
        except ValueError:
            pass
        if name == "y":
            y_col = j
        elif _Z_COLUMN.match(name):
            z_cols[int(_Z_COLUMN.match(name).group(1))] = j
    if not curve_cols:
        raise ParseError("header names no grid columns", line)
    return grid, curve_cols, y_col, [z_cols[k] for k in sorted(z_cols)]


def load_curves(path, require_response: bool = False) -> FunctionalDataset:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path} holds no data")
    first_line, first = rows[0]
    if first[0].strip().lower() == "id":
        grid, curve_cols, y_col, z_cols = _layout(first, first_line)
        width = len(first)
        rows = rows[1:]
    else:
        width = len(first)
        curve_cols = list(range(1, width))
        grid = [float(k) for k in range(1, width)]
        y_col, z_cols = None, []
    if not rows:
        raise ParseError(f"{path} has a header but no samples")
    ids, values, ys, zs = [], [], [], []
    for line, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} cells, found {len(row)}", line)
        ids.append(row[0].strip())
        values.append([_to_float(row[j], line, j + 1) for j in curve_cols])
        if y_col is not None:
            ys.append(_to_float(row[y_col], line, y_col + 1))
        if z_cols:
            zs.append([_to_float(row[j], line, j + 1) for j in z_cols])
    if require_response and y_col is None:
        raise MissingColumn(f"{path} has no 'y' column")
    try:
        g = Grid(np.array(grid))
    except (InvalidArgument, ValueError) as exc:
        raise ParseError(f"bad grid in {path}: {exc}", first_line) from None
    return FunctionalDataset(
        g,
        np.array(values),
        np.array(ys) if y_col is not None else None,
        np.array(zs) if z_cols else None,
        tuple(ids),
    )


def write_curves(ds: FunctionalDataset, path) -> None:
    """Write ``ds`` with a header; floats use ``repr`` so they round-trip."""
    header = ["id"] + [repr(float(t)) for t in ds.grid.points]
    if ds.responses is not None:
        header.append("y")
    header += [f"z{k + 1}" for k in range(ds.n_linear)]
    ids = ds.ids or tuple(f"s{i + 1}" for i in range(len(ds)))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for i in range(len(ds)):
            row = [ids[i]] + [repr(float(v)) for v in ds.values[i]]
            if ds.responses is not None:
                row.append(repr(float(ds.responses[i])))
            if ds.n_linear:
                row += [repr(float(v)) for v in ds.linear_covariates[i]]
            out.writerow(row)


def read_series(path) -> np.ndarray:
    """Numbers separated by commas, whitespace or newlines.

    A first line that does not parse is taken as a header and skipped.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    out = []
    for i, ln in enumerate(lines, start=1):
        cells = [c for c in re.split(r"[,\s]+", ln.strip()) if c]
        try:
            out.extend(float(c) for c in cells)
        except ValueError:
            if i == 1:
                continue
            raise ParseError(f"non-numeric value in {ln!r}", i) from None
    return np.array(out)


def series_to_curves(series: Sequence[float], window: int, horizon: int,
                     stride: int = 1) -> FunctionalDataset:
    """Lagged regression dataset from a scalar series.

    Sample ``s`` has covariate ``series[s : s + window]`` on the grid
    ``1..window`` and response ``series[s + window - 1 + horizon]``; starts
    advance by ``stride``.
    """
    x = np.asarray(series, dtype=np.float64)
    if window < 3:
        raise InvalidArgument("window must be >= 3 so the curves carry a usable grid")
    if horizon < 1 or stride < 1:
        raise InvalidArgument("horizon and stride must be >= 1")
    if x.size < window + horizon:
        raise InsufficientData(
            f"series of length {x.size} is shorter than window + horizon = {window + horizon}"
        )
    starts = np.arange(0, x.size - window - horizon + 1, stride)
    values = np.stack([x[s:s + window] for s in starts])
    responses = x[starts + window - 1 + horizon]
    return FunctionalDataset(Grid(np.arange(1.0, window + 1.0)), values, responses,
                             ids=tuple(f"t{s}" for s in starts))
