"""Smoothing kernels, bandwidth rule, and the estimation configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .patterns import DistanceGrid, PointPattern, Window, default_distance_grid

__all__ = [
    "KERNELS",
    "kernel_value",
    "stoyan_bandwidth",
    "EstimationConfig",
    "ResolvedConfig",
    "resolve_config",
]

# Mass of a standard normal on [-3, 3]; used to renormalise the truncated
# Gaussian so every kernel has unit integral over its support [-b, b].
_GAUSS_MASS = math.erf(3.0 / math.sqrt(2.0))


def _epanechnikov(u: np.ndarray, b: float) -> np.ndarray:
    z = u / b
    return np.where(np.abs(z) <= 1.0, 0.75 / b * (1.0 - z * z), 0.0)


def _box(u: np.ndarray, b: float) -> np.ndarray:
    return np.where(np.abs(u) <= b, 0.5 / b, 0.0)


def _gaussian_truncated(u: np.ndarray, b: float) -> np.ndarray:
    s = b / 3.0
    z = u / s
    dens = np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi) * _GAUSS_MASS)
    return np.where(np.abs(u) <= b, dens, 0.0)


KERNELS = {
    "epanechnikov": _epanechnikov,
    "box": _box,
    "gaussian_truncated": _gaussian_truncated,
}


def kernel_value(kernel: str, u: np.ndarray, bandwidth: float) -> np.ndarray:
    """Kernel density at offsets ``u`` for the given bandwidth."""
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}")
    if bandwidth <= 0:
        raise DomainError("bandwidth must be positive")
    return KERNELS[kernel](np.asarray(u, dtype=np.float64), float(bandwidth))


def stoyan_bandwidth(pattern: PointPattern) -> float:
    """Stoyan's rule of thumb, 0.15 / sqrt(intensity)."""
    if pattern.n < 1:
        raise DomainError("bandwidth rule needs a nonempty pattern")
    return 0.15 / math.sqrt(pattern.intensity)


@dataclass(frozen=True)
class EstimationConfig:
    """Settings shared by the kernel-based estimators.

    Unset fields are resolved against the pattern at estimation time:
    bandwidth falls back to Stoyan's rule, the edge rule follows the window
    topology (torus needs no correction, plane rectangles use the
    translation correction), and the distance grid defaults to 100 values
    up to a quarter of the short window side.  ``time_lag`` shifts the
    second mark curve backwards by whole grid steps.
    """

    kernel: str = "epanechnikov"
    bandwidth: float | None = None
    edge_rule: str | None = None
    grid: DistanceGrid | None = None
    time_lag: int = 0
    chat_excludes_self: bool = False

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise DomainError(f"unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise DomainError("bandwidth must be positive")
        if self.edge_rule not in (None, "none_torus", "translation"):
            raise DomainError("edge rule must be 'none_torus' or 'translation'")
        if self.time_lag < 0:
            raise DomainError("time lag must be a nonnegative grid shift")


@dataclass(frozen=True)
class ResolvedConfig:
    kernel: str
    bandwidth: float
    edge_rule: str
    grid: DistanceGrid
    time_lag: int
    chat_excludes_self: bool


def resolve_config(cfg: EstimationConfig | None, pattern: PointPattern) -> ResolvedConfig:
    """Fill configuration defaults and validate them against the pattern."""
    cfg = cfg or EstimationConfig()
    window: Window = pattern.window
    edge = cfg.edge_rule
    if edge is None:
        edge = "none_torus" if window.topology == "torus" else "translation"
    if edge == "none_torus" and window.topology != "torus":
        raise DomainError("edge rule 'none_torus' is only valid on torus windows")
    if edge == "translation" and window.topology != "plane":
        raise DomainError("translation edge correction is only valid on plane rectangles")
    bandwidth = cfg.bandwidth if cfg.bandwidth is not None else stoyan_bandwidth(pattern)
    grid = cfg.grid if cfg.grid is not None else default_distance_grid(window)
    if grid.r_values.max() > window.min_side / 2.0 + 1e-12:
        raise DomainError("distance grid exceeds half the shortest window side")
    return ResolvedConfig(cfg.kernel, float(bandwidth), edge, grid, cfg.time_lag,
                          cfg.chat_excludes_self)
