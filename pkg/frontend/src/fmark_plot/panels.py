"""Multi-panel envelope figures: statistics as rows, scenarios as columns.

The layout file is JSON:

    {
      "rows": 2, "cols": 3,
      "panels": [
        {"csv": "gamma_poisson.csv", "title": "Poisson", "ylabel": "variogram"},
        ...
      ],
      "style": {"observed": "red", "theoretical": "black", "band": "0.82"},
      "title": "optional figure title"
    }

Panels fill the grid row by row and their count must match rows*cols.
Each panel draws the shaded band between the lower and upper envelope
(when present), the theoretical reference, and the observed curve on top;
NA entries break the lines.  A panel may set ``"center": true`` to
subtract the theoretical column from every curve (the K minus pi r^2
display).  Output format follows the file suffix; vector SVG is the
default and embeds no timestamps, so renders are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .curves import CurveFile, read_curve  # noqa: E402

__all__ = ["PanelSpec", "load_layout", "render_panels"]

_DEFAULT_STYLE = {"observed": "red", "theoretical": "black", "band": "0.82"}


@dataclass
class PanelSpec:
    """Validated layout: grid shape, per-panel inputs, and line styles."""

    rows: int
    cols: int
    panels: list[dict]
    style: dict = field(default_factory=dict)
    title: str | None = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("layout needs at least one row and one column")
        if len(self.panels) != self.rows * self.cols:
            raise ValueError(
                f"layout is {self.rows}x{self.cols} but {len(self.panels)} panels were given")
        for k, panel in enumerate(self.panels):
            if "csv" not in panel:
                raise ValueError(f"panel {k} has no 'csv' entry")
        self.style = {**_DEFAULT_STYLE, **self.style}


def load_layout(path) -> PanelSpec:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"layout file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("rows", "cols", "panels"):
        if key not in raw:
            raise ValueError(f"{path}: layout needs a {key!r} entry")
    spec = PanelSpec(rows=int(raw["rows"]), cols=int(raw["cols"]),
                     panels=list(raw["panels"]), style=dict(raw.get("style", {})),
                     title=raw.get("title"))
    # resolve panel csv paths relative to the layout file
    for panel in spec.panels:
        panel["csv"] = str((path.parent / panel["csv"]).resolve())
    return spec


def _draw_panel(ax, curve: CurveFile, panel: dict, style: dict):
    r = curve.r
    offset = 0.0
    if panel.get("center") and curve.theoretical is not None:
        offset = curve.theoretical
    if curve.has_band:
        ax.fill_between(r, curve.lower - offset, curve.upper - offset,
                        color=style["band"], linewidth=0, label="envelope")
    if curve.theoretical is not None:
        ax.plot(r, curve.theoretical - offset, color=style["theoretical"],
                linestyle="--", linewidth=1.0, label="theoretical")
    ax.plot(r, curve.observed - offset, color=style["observed"], linewidth=1.4,
            label="observed")
    ax.set_xlabel("r")
    if panel.get("ylabel"):
        ax.set_ylabel(panel["ylabel"])
    if panel.get("title"):
        ax.set_title(panel["title"], fontsize=10)


def render_panels(spec: PanelSpec, out_path) -> Path:
    """Render the panel grid to ``out_path`` and return the path."""
    out_path = Path(out_path)
    curves = [read_curve(panel["csv"]) for panel in spec.panels]
    plt.rcParams["svg.hashsalt"] = "fmark-plot"
    fig, axes = plt.subplots(spec.rows, spec.cols,
                             figsize=(3.2 * spec.cols, 2.6 * spec.rows),
                             squeeze=False)
    for k, (panel, curve) in enumerate(zip(spec.panels, curves)):
        ax = axes[k // spec.cols][k % spec.cols]
        _draw_panel(ax, curve, panel, spec.style)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, metadata={"Date": None} if out_path.suffix == ".svg" else None)
    plt.close(fig)
    return out_path
