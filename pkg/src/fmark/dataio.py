"""CSV schemas, the run manifest, and the analysis configuration.

File formats:

* pattern CSV: header ``id,x,y[,type]``, one row per point.
* marks CSV, one per channel: header ``id,t_<t0>,t_<t1>,...``; the time
  values in the header define the time grid and must agree across all
  channel files.  Rows are joined to the pattern on ``id`` with no
  imputation: a missing id or empty cell is a hard error.
* curve CSV: header ``r,observed[,lower,upper,theoretical]``; undefined
  entries are the literal ``NA``.

Numbers are serialised with 17 significant digits, which round-trips
float64 exactly and keeps repeated runs byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .envelopes import EnvelopeBand
from .errors import DomainError, SchemaError
from .patterns import FunctionalMarkSet, PointPattern, TimeGrid, Window

__all__ = [
    "AnalysisConfig",
    "load_pattern",
    "write_pattern_csv",
    "write_marks_csv",
    "write_results",
    "read_curve_csv",
    "parse_config_file",
]


def _fmt(x) -> str:
    if x is None:
        return "NA"
    x = float(x)
    if math.isnan(x):
        return "NA"
    return f"{x:.17g}"


def _parse_cell(cell: str, path, row: int, col: str) -> float:
    s = cell.strip()
    if s == "" :
        raise SchemaError(f"{path}: empty cell at row {row}, column {col!r} (no imputation)")
    if s == "NA":
        return math.nan
    try:
        return float(s)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value {cell!r} at row {row}, column {col!r}") from exc


# ---------------------------------------------------------------------------
# pattern and marks files


def write_pattern_csv(path, pattern: PointPattern, ids=None) -> None:
    path = Path(path)
    ids = list(range(pattern.n)) if ids is None else list(ids)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        header = ["id", "x", "y"] + (["type"] if pattern.labels is not None else [])
        out.writerow(header)
        for k in range(pattern.n):
            row = [ids[k], _fmt(pattern.points[k, 0]), _fmt(pattern.points[k, 1])]
            if pattern.labels is not None:
                row.append(int(pattern.labels[k]))
            out.writerow(row)


def write_marks_csv(path, marks: FunctionalMarkSet, channel: int, ids=None) -> None:
    path = Path(path)
    ids = list(range(marks.n_points)) if ids is None else list(ids)
    curves = marks.channel(channel)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["id"] + [f"t_{_fmt(t)}" for t in marks.grid.samples])
        for k in range(marks.n_points):
            out.writerow([ids[k]] + [_fmt(v) for v in curves[k]])


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    return rows[0], rows[1:]


def _read_pattern_csv(path, window: Window) -> tuple[PointPattern, list[str]]:
    header, rows = _read_rows(path)
    header = [c.strip() for c in header]
    if header[:3] != ["id", "x", "y"] or (len(header) == 4 and header[3] != "type") or len(header) > 4:
        raise SchemaError(f"{path}: pattern header must be id,x,y[,type], got {header}")
    has_type = len(header) == 4
    ids, pts, labels = [], [], []
    for k, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
        ids.append(row[0].strip())
        pts.append((_parse_cell(row[1], path, k, "x"), _parse_cell(row[2], path, k, "y")))
        if has_type:
            labels.append(int(_parse_cell(row[3], path, k, "type")))
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: duplicate point ids")
    pattern = PointPattern(window, np.array(pts).reshape(-1, 2),
                           np.array(labels) if has_type else None)
    return pattern, ids


def _read_marks_csv(path) -> tuple[dict[str, list[float]], np.ndarray]:
    header, rows = _read_rows(path)
    header = [c.strip() for c in header]
    if not header or header[0] != "id" or len(header) < 2:
        raise SchemaError(f"{path}: marks header must be id,t_<t0>,...")
    times = []
    for name in header[1:]:
        if not name.startswith("t_"):
            raise SchemaError(f"{path}: mark column {name!r} does not look like t_<time>")
        try:
            times.append(float(name[2:]))
        except ValueError as exc:
            raise SchemaError(f"{path}: cannot parse time from column {name!r}") from exc
    times = np.array(times)
    if times.size > 1 and not (np.diff(times) > 0).all():
        raise SchemaError(f"{path}: time header is not strictly increasing")
    curves: dict[str, list[float]] = {}
    for k, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
        pid = row[0].strip()
        if pid in curves:
            raise SchemaError(f"{path}: duplicate id {pid!r}")
        curves[pid] = [_parse_cell(c, path, k, header[1 + i]) for i, c in enumerate(row[1:])]
    return curves, times


def load_pattern(pattern_csv, marks_csvs, window: Window | None = None
                 ) -> tuple[PointPattern, FunctionalMarkSet]:
    """Load a pattern file plus one marks file per channel.

    The pattern schema carries no window metadata, so the window should be
    passed explicitly (the CLI always does); without one, the tight
    bounding box on the plane is used.
    """
    if isinstance(marks_csvs, (str, Path)):
        marks_csvs = [marks_csvs]
    if not marks_csvs:
        raise SchemaError("at least one marks file is required")
    header, rows = _read_rows(pattern_csv)
    if window is None:
        if not rows:
            raise SchemaError(f"{pattern_csv}: cannot infer a window from an empty pattern")
        xs = [_parse_cell(r[1], pattern_csv, k, "x") for k, r in enumerate(rows, 2)]
        ys = [_parse_cell(r[2], pattern_csv, k, "y") for k, r in enumerate(rows, 2)]
        pad_x = max((max(xs) - min(xs)) * 0.01, 1e-9)
        pad_y = max((max(ys) - min(ys)) * 0.01, 1e-9)
        window = Window(min(xs) - pad_x, max(xs) + pad_x,
                        min(ys) - pad_y, max(ys) + pad_y)
    pattern, ids = _read_pattern_csv(pattern_csv, window)
    grid_times = None
    channels = []
    for path in marks_csvs:
        curves, times = _read_marks_csv(path)
        if grid_times is None:
            grid_times = times
        elif len(times) != len(grid_times) or not (times == grid_times).all():
            raise SchemaError(f"{path}: time header does not match the other channel files")
        missing = [pid for pid in ids if pid not in curves]
        if missing:
            raise SchemaError(f"{path}: marks file is missing point id {missing[0]!r}")
        extra = set(curves) - set(ids)
        if extra:
            raise SchemaError(f"{path}: marks file has unknown point id {sorted(extra)[0]!r}")
        channels.append(np.array([curves[pid] for pid in ids]))
    values = np.stack(channels, axis=1)
    if not np.isfinite(values).all():
        raise SchemaError("mark files contain NA values; curves must be complete")
    marks = FunctionalMarkSet(TimeGrid(grid_times), values)
    return pattern, marks


# ---------------------------------------------------------------------------
# curve and envelope files


def _curve_rows(item):
    if isinstance(item, EnvelopeBand):
        theo = item.theoretical
        cols = ["r", "observed", "lower", "upper"] + (["theoretical"] if theo is not None else [])
        for k, r in enumerate(item.r_values):
            row = [r, item.observed[k], item.lower[k], item.upper[k]]
            if theo is not None:
                row.append(theo[k])
            yield k == 0, cols, row
    else:
        cols = ["r", "observed"]
        for k, r in enumerate(item.r_values):
            yield k == 0, cols, [r, item.values[k]]


def write_curve_csv(path, item) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh)
        for first, cols, row in _curve_rows(item):
            if first:
                out.writerow(cols)
            out.writerow([_fmt(v) for v in row])


def read_curve_csv(path) -> dict[str, np.ndarray]:
    header, rows = _read_rows(path)
    header = [c.strip() for c in header]
    if header[:2] != ["r", "observed"]:
        raise SchemaError(f"{path}: curve header must start with r,observed")
    data = {name: [] for name in header}
    for k, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            data[name].append(_parse_cell(cell, path, k, name))
    return {name: np.array(vals) for name, vals in data.items()}


def result_filename(item) -> str:
    kind = item.kind
    chans = getattr(item, "channels", None)
    name = kind
    if chans is not None:
        name += f"_{chans[0]}_{chans[1]}"
    if isinstance(item, EnvelopeBand):
        name += "_envelope"
    return name + ".csv"


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def write_results(items, out_dir, config: dict | None = None,
                  seed: int | None = None, inputs=None) -> list[Path]:
    """Write one curve file per statistic plus a reproducibility manifest.

    The manifest records the package version, the full effective
    configuration, the master seed, input digests, and the output file
    names; together with the seed it suffices to reproduce every output
    byte for byte.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for item in items:
        path = out_dir / result_filename(item)
        write_curve_csv(path, item)
        written.append(path)
    manifest = {
        "tool": "fmark",
        "version": __version__,
        "seed": seed,
        "config": config or {},
        "inputs": {str(p): _sha256(p) for p in (inputs or [])},
        "outputs": sorted(p.name for p in written),
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(manifest_path)
    return written


# ---------------------------------------------------------------------------
# analysis configuration


def parse_config_file(path) -> dict[str, str]:
    """Flat key = value file; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"config file not found: {path}")
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_FLOAT_KEYS = (
    "intensity", "parent_intensity", "offspring_mean", "offspring_sigma",
    "target_n", "beta", "q", "interaction_radius", "growth_c", "capacity_h",
    "capacity_l", "rate_h", "rate_l", "interaction_distance", "dt",
    "init_value", "bandwidth", "r_max",
)
_INT_KEYS = ("mcmc_steps", "steps", "r_count", "time_lag", "nsim", "rank", "seed")
_STR_KEYS = (
    "pattern", "marks", "window", "topology", "process", "growth_mode",
    "init_rule", "kernel", "edge_rule", "statistics", "null", "out",
)

CONFIG_KEYS = tuple(_STR_KEYS) + tuple(_FLOAT_KEYS) + tuple(_INT_KEYS)


@dataclass
class AnalysisConfig:
    """Everything one CLI run needs, resolved from file plus flag overrides."""

    pattern: str | None = None
    marks: str | None = None
    window: str = "0,1,0,1"
    topology: str = "torus"
    process: str | None = None
    intensity: float | None = None
    parent_intensity: float | None = None
    offspring_mean: float | None = None
    offspring_sigma: float | None = None
    target_n: float | None = None
    beta: float | None = None
    q: float | None = None
    interaction_radius: float | None = None
    mcmc_steps: int = 100_000
    growth_mode: str = "independent"
    growth_c: float = 0.0
    capacity_h: float = 5.0
    capacity_l: float = 5.0
    rate_h: float = 0.05
    rate_l: float = 0.2
    interaction_distance: float = 0.05
    dt: float = 0.5
    steps: int = 20
    init_value: float = 0.1
    init_rule: str = "constant"
    kernel: str = "epanechnikov"
    bandwidth: float | None = None
    edge_rule: str | None = None
    r_max: float | None = None
    r_count: int = 100
    time_lag: int = 0
    statistics: str = ""
    null: str = "random_labeling"
    nsim: int = 199
    rank: int = 5
    out: str = "fmark-out"
    seed: int = 0

    @classmethod
    def from_sources(cls, file_values: dict | None = None,
                     overrides: dict | None = None) -> "AnalysisConfig":
        merged: dict = {}
        for source in (file_values or {}), (overrides or {}):
            for key, value in source.items():
                if value is None:
                    continue
                if key not in CONFIG_KEYS:
                    raise DomainError(f"unknown configuration key {key!r}")
                merged[key] = value
        kwargs = {}
        for key, value in merged.items():
            try:
                if key in _FLOAT_KEYS:
                    kwargs[key] = float(value)
                elif key in _INT_KEYS:
                    kwargs[key] = int(value)
                else:
                    kwargs[key] = str(value)
            except ValueError as exc:
                raise DomainError(f"configuration key {key!r} has invalid value {value!r}") from exc
        return cls(**kwargs)

    def resolved_window(self) -> Window:
        parts = [p.strip() for p in self.window.split(",")]
        if len(parts) != 4:
            raise DomainError("window must be x_min,x_max,y_min,y_max")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise DomainError(f"window has non-numeric extent in {self.window!r}") from exc
        return Window(*vals, topology=self.topology)

    def statistic_tokens(self) -> list[str]:
        # split on commas outside parentheses: tokens look like name(h,l)
        tokens, depth, cur = [], 0, []
        for ch in self.statistics:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            if ch == "," and depth == 0:
                tokens.append("".join(cur).strip())
                cur = []
            else:
                cur.append(ch)
        tokens.append("".join(cur).strip())
        return [t for t in tokens if t]

    def validate_source(self):
        has_files = self.pattern is not None
        has_sim = self.process is not None
        if has_files == has_sim:
            raise DomainError("exactly one of input files (pattern/marks) or a "
                              "simulation spec (process) must be configured")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
