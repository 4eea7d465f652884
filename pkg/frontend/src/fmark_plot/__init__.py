"""Static multi-panel figures from fmark curve and envelope CSVs."""

from .curves import CurveFile, read_curve
from .panels import PanelSpec, load_layout, render_panels

__version__ = "0.1.0"
