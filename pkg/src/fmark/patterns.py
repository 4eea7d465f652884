"""Windows, point patterns, time grids, and function-valued mark arrays.

All containers are frozen dataclasses wrapping read-only numpy arrays, so
they can be shared freely between worker threads.  Distances respect the
window topology: plain Euclidean metric on plane rectangles, wrap-around
metric on the torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "Window",
    "PointPattern",
    "TimeGrid",
    "FunctionalMarkSet",
    "DistanceGrid",
    "unit_torus",
    "pairwise_distance",
    "distance_matrix",
    "integrate_over_time",
    "functional_mean",
    "default_distance_grid",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Window:
    """Rectangular observation window, optionally with periodic boundary.

    ``topology`` is either ``"plane"`` or ``"torus"``; the torus is only
    defined for rectangles, which is all this class supports.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    topology: str = "plane"

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError("window extents must satisfy x_min < x_max and y_min < y_max")
        if self.topology not in ("plane", "torus"):
            raise DomainError(f"unknown window topology {self.topology!r}")

    @property
    def sides(self) -> tuple[float, float]:
        return (self.x_max - self.x_min, self.y_max - self.y_min)

    @property
    def min_side(self) -> float:
        return min(self.sides)

    @property
    def area(self) -> float:
        sx, sy = self.sides
        return sx * sy

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points lying inside the (closed) window."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (
            (pts[:, 0] >= self.x_min)
            & (pts[:, 0] <= self.x_max)
            & (pts[:, 1] >= self.y_min)
            & (pts[:, 1] <= self.y_max)
        )

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. uniform locations in the window."""
        xy = rng.random((n, 2))
        xy[:, 0] = self.x_min + xy[:, 0] * (self.x_max - self.x_min)
        xy[:, 1] = self.y_min + xy[:, 1] * (self.y_max - self.y_min)
        return xy


def unit_torus() -> Window:
    return Window(0.0, 1.0, 0.0, 1.0, topology="torus")


@dataclass(frozen=True)
class PointPattern:
    """Point locations in a window, with optional integer type labels.

    Labels, when present, are 1-based component memberships of a multitype
    pattern and must match the number of points.
    """

    window: Window
    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", _readonly(pts))
        if pts.size and not self.window.contains(pts).all():
            raise DomainError("every point must lie inside the window")
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (len(pts),):
                raise DomainError("labels must have the same length as points")
            if lab.size and lab.min() < 1:
                raise DomainError("type labels are 1-based positive integers")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def intensity(self) -> float:
        """Empirical intensity: point count over window area."""
        return self.n / self.window.area

    def type_counts(self) -> dict[int, int]:
        if self.labels is None:
            raise DomainError("pattern carries no type labels")
        vals, counts = np.unique(self.labels, return_counts=True)
        return dict(zip(vals.tolist(), counts.tolist()))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample times for the mark curves.

    A single sample (T = 1) degenerates to scalar marks: integration then
    returns the sample itself and the grid span counts as one.
    """

    samples: np.ndarray
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if t.size < 1:
            raise DomainError("time grid needs at least one sample")
        if t.size > 1 and not (np.diff(t) > 0).all():
            raise DomainError("time grid samples must be strictly increasing")
        object.__setattr__(self, "samples", _readonly(t))
        if t.size == 1:
            w = np.array([1.0])
        else:
            w = np.empty_like(t)
            w[0] = 0.5 * (t[1] - t[0])
            w[-1] = 0.5 * (t[-1] - t[-2])
            w[1:-1] = 0.5 * (t[2:] - t[:-2])
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def span(self) -> float:
        """Integral of the constant 1 over the grid (1.0 for T = 1)."""
        return float(self.weights.sum())

    def shifted(self, lag: int) -> "TimeGrid":
        """Sub-grid dropping the first ``lag`` samples (for lagged pairings)."""
        if not 0 <= lag < self.size:
            raise DomainError(f"time lag must lie in [0, {self.size - 1}]")
        return self if lag == 0 else TimeGrid(self.samples[lag:])


def integrate_over_time(samples: np.ndarray, grid: TimeGrid) -> float | np.ndarray:
    """Trapezoidal quadrature over the time grid (last axis of ``samples``).

    Exact for integrands that are linear between grid samples; a length-1
    grid returns the sample unchanged.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.shape[-1] != grid.size:
        raise DomainError(
            f"sample length {s.shape[-1]} does not match time grid size {grid.size}"
        )
    out = s @ grid.weights
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FunctionalMarkSet:
    """Curves attached to the points: array indexed (point, channel, time).

    Channel indices are 1-based in the public API, matching the file
    formats.  All values must be finite.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise DomainError("mark values must be a (points, channels, times) array")
        if v.shape[2] != self.grid.size:
            raise DomainError("mark curves and time grid have different lengths")
        if v.size and not np.isfinite(v).all():
            raise DomainError("mark values must all be finite")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def channel(self, h: int) -> np.ndarray:
        """(points, times) view of 1-based channel ``h``."""
        if not 1 <= h <= self.n_channels:
            raise DomainError(f"channel {h} out of range 1..{self.n_channels}")
        return self.values[:, h - 1, :]

    def permuted(self, perm: np.ndarray) -> "FunctionalMarkSet":
        """Reassign whole mark tuples to points by index permutation."""
        return FunctionalMarkSet(self.grid, self.values[np.asarray(perm)])


def functional_mean(marks: FunctionalMarkSet, h: int) -> np.ndarray:
    """Pointwise empirical mean curve of channel ``h`` over all points."""
    if marks.n_points < 1:
        raise DomainError("functional mean of an empty mark set is undefined")
    return marks.channel(h).mean(axis=0)


@dataclass(frozen=True)
class DistanceGrid:
    """Strictly increasing positive distances at which curves are evaluated."""

    r_values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=np.float64).reshape(-1)
        if r.size < 1:
            raise DomainError("distance grid must be nonempty")
        if r.min() <= 0:
            raise DomainError("summary characteristics are defined for r > 0 only")
        if r.size > 1 and not (np.diff(r) > 0).all():
            raise DomainError("distance grid must be strictly increasing")
        object.__setattr__(self, "r_values", _readonly(r))

    @property
    def size(self) -> int:
        return len(self.r_values)


def default_distance_grid(window: Window, count: int = 100) -> DistanceGrid:
    """Equally spaced grid from r_max/count up to a quarter of the short side."""
    r_max = window.min_side / 4.0
    return DistanceGrid(np.linspace(r_max / count, r_max, count))


def pairwise_distance(window: Window, a, b) -> float:
    """Distance between two points under the window metric.

    Plane windows use the Euclidean metric; torus windows take the per-axis
    minimum of the direct and the wrapped difference.
    """
    a = np.asarray(a, dtype=np.float64).reshape(2)
    b = np.asarray(b, dtype=np.float64).reshape(2)
    for p in (a, b):
        if not window.contains(p[None, :])[0]:
            raise DomainError(f"point {tuple(p)} lies outside the window")
    d = np.abs(a - b)
    if window.topology == "torus":
        sides = np.array(window.sides)
        d = np.minimum(d, sides - d)
    return float(np.hypot(d[0], d[1]))


def distance_matrix(window: Window, points: np.ndarray) -> np.ndarray:
    """All-pairs distance matrix under the window metric."""
    pts = np.asarray(points, dtype=np.float64)
    dx = np.abs(pts[:, None, 0] - pts[None, :, 0])
    dy = np.abs(pts[:, None, 1] - pts[None, :, 1])
    if window.topology == "torus":
        sx, sy = window.sides
        dx = np.minimum(dx, sx - dx)
        dy = np.minimum(dy, sy - dy)
    return np.hypot(dx, dy)
