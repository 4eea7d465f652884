"""Reader for the curve CSV schema emitted by the fmark CLI.

Schema: header ``r,observed[,lower,upper,theoretical]``; undefined values
are the literal ``NA`` and become NaN, which the renderer draws as line
breaks.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["CurveFile", "read_curve"]

_REQUIRED = ("r", "observed")
_OPTIONAL = ("lower", "upper", "theoretical")


class CurveFile:
    """Columns of one curve CSV, with NaN for NA entries."""

    def __init__(self, path: Path, columns: dict[str, np.ndarray]):
        self.path = path
        self.r = columns["r"]
        self.observed = columns["observed"]
        self.lower = columns.get("lower")
        self.upper = columns.get("upper")
        self.theoretical = columns.get("theoretical")

    @property
    def has_band(self) -> bool:
        return self.lower is not None and self.upper is not None


def read_curve(path) -> CurveFile:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"{path}: curve file does not exist")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if tuple(header[:2]) != _REQUIRED:
        raise ValueError(f"{path}: header must start with r,observed, got {header}")
    for name in header[2:]:
        if name not in _OPTIONAL:
            raise ValueError(f"{path}: unknown column {name!r}")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            cell = cell.strip()
            if cell == "NA":
                columns[name].append(math.nan)
                continue
            try:
                columns[name].append(float(cell))
            except ValueError as exc:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} in column {name!r} (row {k})"
                ) from exc
    return CurveFile(path, {name: np.array(vals) for name, vals in columns.items()})
