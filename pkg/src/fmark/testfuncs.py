"""Test functions on pairs (and triples) of function-valued marks.

A test function maps the marks of an ordered point pair to a nonnegative
real; its time integral is the per-pair weight that all second-order mark
characteristics are built from.  ``pairwise_integral_matrix`` evaluates the
time-integrated test function for every ordered pair of points at once,
which is the workhorse used by the estimators and the envelope machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .patterns import FunctionalMarkSet, TimeGrid, integrate_over_time

__all__ = [
    "TestFunction",
    "MultiTestFunctionSpec",
    "eval_testfn",
    "eval_testfn_integrated",
    "eval_multifunction_testfn",
    "pairwise_integral_matrix",
]

_POSITIVITY_MSG = "ratio test requires strictly positive marks"


class TestFunction(str, Enum):
    """Pointwise maps of two mark values to a nonnegative real.

    UNIT is the unweighted switch: its per-pair weight is the constant 1
    with no time integration, so unit-weighted sums reduce exactly to the
    classical unmarked statistics.
    """

    HALF_SQUARED_DIFF = "half_squared_diff"  # half the squared difference
    MIN_MAX_RATIO = "min_max_ratio"          # min over max, needs positive marks
    PRODUCT = "product"                      # plain product
    LEFT = "left"                            # first argument only
    RIGHT = "right"                          # second argument only
    UNIT = "unit"                            # constant pair weight one


def eval_testfn(kind: TestFunction, a: float, b: float) -> float:
    """Evaluate a test function on a single pair of mark values."""
    kind = TestFunction(kind)
    if kind is TestFunction.HALF_SQUARED_DIFF:
        return 0.5 * (a - b) ** 2
    if kind is TestFunction.MIN_MAX_RATIO:
        if a * b <= 0:
            raise DomainError(_POSITIVITY_MSG)
        return min(a, b) / max(a, b)
    if kind is TestFunction.PRODUCT:
        return a * b
    if kind is TestFunction.LEFT:
        return a
    if kind is TestFunction.RIGHT:
        return b
    return 1.0


def _lagged(fa: np.ndarray, fb: np.ndarray, grid: TimeGrid, lag: int):
    """Apply an integer grid shift: pair fa(t_k) with fb(t_{k-lag})."""
    if lag == 0:
        return fa, fb, grid
    sub = grid.shifted(lag)
    return fa[..., lag:], fb[..., : grid.size - lag], sub


def eval_testfn_integrated(
    kind: TestFunction,
    fa: np.ndarray,
    fb: np.ndarray,
    grid: TimeGrid,
    lag: int = 0,
) -> float:
    """Time integral of the pointwise test function along two curves.

    ``lag`` shifts the second curve backwards by that many grid steps, so a
    positive lag compares the first mark at t with the second at an earlier
    time; integration then runs over the overlapping sub-grid.
    """
    kind = TestFunction(kind)
    if kind is TestFunction.UNIT:
        return 1.0
    fa = np.asarray(fa, dtype=np.float64).reshape(-1)
    fb = np.asarray(fb, dtype=np.float64).reshape(-1)
    if fa.shape[-1] != grid.size or fb.shape[-1] != grid.size:
        raise DomainError("curves must be sampled on the given time grid")
    fa, fb, sub = _lagged(fa, fb, grid, lag)
    if kind is TestFunction.MIN_MAX_RATIO:
        if (fa <= 0).any() or (fb <= 0).any():
            raise DomainError(_POSITIVITY_MSG)
        vals = np.minimum(fa, fb) / np.maximum(fa, fb)
    elif kind is TestFunction.HALF_SQUARED_DIFF:
        vals = 0.5 * (fa - fb) ** 2
    elif kind is TestFunction.PRODUCT:
        vals = fa * fb
    elif kind is TestFunction.LEFT:
        vals = fa
    elif kind is TestFunction.RIGHT:
        vals = fb
    else:
        vals = np.ones_like(fa)
    return float(integrate_over_time(vals, sub))


def pairwise_integral_matrix(
    marks: FunctionalMarkSet,
    h: int,
    l: int,
    kind: TestFunction,
    lag: int = 0,
    chunk: int = 128,
) -> np.ndarray:
    """(n, n) matrix of time-integrated test function values.

    Entry (i, j) is the integrated test function of channel ``h`` at point i
    against channel ``l`` at point j, covering both orders of every pair.
    The matrix is computed once per (h, l, kind) and reused across distance
    bins and label permutations.
    """
    kind = TestFunction(kind)
    n = marks.n_points
    if kind is TestFunction.UNIT:
        return np.ones((n, n))
    fh, fl, sub = _lagged(marks.channel(h), marks.channel(l), marks.grid, lag)
    w = sub.weights
    if kind is TestFunction.PRODUCT:
        return (fh * w) @ fl.T
    if kind is TestFunction.LEFT:
        return np.broadcast_to((fh @ w)[:, None], (n, n)).copy()
    if kind is TestFunction.RIGHT:
        return np.broadcast_to((fl @ w)[None, :], (n, n)).copy()
    if kind is TestFunction.MIN_MAX_RATIO and ((fh <= 0).any() or (fl <= 0).any()):
        raise DomainError(_POSITIVITY_MSG)
    out = np.empty((n, n))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        a = fh[lo:hi, None, :]
        if kind is TestFunction.HALF_SQUARED_DIFF:
            block = 0.5 * (a - fl[None, :, :]) ** 2
        else:
            block = np.minimum(a, fl[None, :, :]) / np.maximum(a, fl[None, :, :])
        out[lo:hi] = block @ w
    return out


@dataclass(frozen=True)
class MultiTestFunctionSpec:
    """Generalised test function relating one channel to a set of others.

    ``combine`` is either ``"mean_of_others"`` (base test function against
    the mean curve of the named channels at the displaced point) or
    ``"pairwise_sum"`` (sum of the base test function over each channel in
    the set).  Only the difference and product bases are defined.
    """

    base: TestFunction
    combine: str
    left_channel: int
    right_channels: tuple[int, ...]

    def __post_init__(self):
        base = TestFunction(self.base)
        if base not in (TestFunction.HALF_SQUARED_DIFF, TestFunction.PRODUCT):
            raise DomainError("multi-function form is defined for the difference and product bases")
        if self.combine not in ("mean_of_others", "pairwise_sum"):
            raise DomainError(f"unknown combine rule {self.combine!r}")
        if len(self.right_channels) == 0:
            raise DomainError("right channel set must be nonempty")
        chans = (self.left_channel, *self.right_channels)
        if len(set(chans)) != len(chans):
            raise DomainError("channels of a multi-function test must be distinct")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "right_channels", tuple(self.right_channels))


def eval_multifunction_testfn(
    spec: MultiTestFunctionSpec,
    origin_curves: np.ndarray,
    displaced_curves: np.ndarray,
    grid: TimeGrid,
) -> float:
    """Time-integrated multi-function test value for one ordered pair.

    ``origin_curves``/``displaced_curves`` are (channels, times) arrays for
    the two points; at least three channels are required.
    """
    fo = np.asarray(origin_curves, dtype=np.float64)
    fd = np.asarray(displaced_curves, dtype=np.float64)
    if fo.ndim != 2 or fd.ndim != 2 or fo.shape != fd.shape:
        raise DomainError("expected matching (channels, times) curve arrays")
    p = fo.shape[0]
    if p < 3:
        raise DomainError("multi-function test functions need at least three channels")
    for c in (spec.left_channel, *spec.right_channels):
        if not 1 <= c <= p:
            raise DomainError(f"channel {c} out of range 1..{p}")
    left = fo[spec.left_channel - 1]
    others = fd[[c - 1 for c in spec.right_channels]]
    if spec.combine == "mean_of_others":
        return eval_testfn_integrated(spec.base, left, others.mean(axis=0), grid)
    return sum(eval_testfn_integrated(spec.base, left, row, grid) for row in others)
