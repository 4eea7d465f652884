"""Nearest-neighbour and k-nearest-neighbour mark indices.

These are scalar (or per-k) summaries built from each point and its
nearest neighbours under the window metric.  Ties are broken by the
lowest point index, which keeps results reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .patterns import FunctionalMarkSet, PointPattern, distance_matrix, functional_mean
from .testfuncs import TestFunction, pairwise_integral_matrix

__all__ = ["IndexReport", "nn_indices", "knn_indices"]


@dataclass(frozen=True)
class IndexReport:
    """Scalar nearest-neighbour indices and optional per-k sequences."""

    gamma_nn: float | None = None
    kappa_nn: float | None = None
    c_nn: float | None = None
    tau_nn: float | None = None
    k_max: int | None = None
    k_correlation: np.ndarray | None = None    # cumulative product index per k
    k_variogram: np.ndarray | None = None      # cumulative variogram index per k
    k_dominance: np.ndarray | None = None      # Hui's dominance index per k


def _neighbour_order(pattern: PointPattern) -> np.ndarray:
    d = distance_matrix(pattern.window, pattern.points).copy()
    np.fill_diagonal(d, np.inf)
    # stable sort: equal distances resolve to the lower point index
    return np.argsort(d, axis=1, kind="stable")


def nn_indices(pattern: PointPattern, marks: FunctionalMarkSet,
               h: int = 1, l: int = 2, lag: int = 0,
               chat_excludes_self: bool = False) -> IndexReport:
    """Nearest-neighbour variogram, product, correlation, and
    differentiation indices.

    The variogram index is normalised by the non-spatial test function
    mean, the correlation index by the integrated product of mean curves.
    """
    n = pattern.n
    if n < 2:
        raise DomainError("nearest-neighbour indices need at least two points")
    if marks.n_points != n:
        raise DomainError("marks and pattern disagree on the number of points")
    z = _neighbour_order(pattern)[:, 0]
    idx = np.arange(n)
    span = marks.grid.shifted(lag).span

    ell1 = pairwise_integral_matrix(marks, h, l, TestFunction.HALF_SQUARED_DIFF, lag)
    ell2 = pairwise_integral_matrix(marks, h, l, TestFunction.MIN_MAX_RATIO, lag)
    ell3 = pairwise_integral_matrix(marks, h, l, TestFunction.PRODUCT, lag)

    if chat_excludes_self:
        chat1 = (ell1.sum() - np.trace(ell1)) / (n * (n - 1))
    else:
        chat1 = ell1.mean()
    num1 = ell1[idx, z].mean()
    gamma = 0.0 if chat1 == 0.0 and num1 == 0.0 else num1 / chat1

    mu_int = float(
        (functional_mean(marks, h) * functional_mean(marks, l)) @ marks.grid.weights
    )
    c_nn = float(ell3[idx, z].mean())
    kappa = c_nn / mu_int if mu_int != 0 else np.nan
    tau = span - float(ell2[idx, z].mean())
    return IndexReport(gamma_nn=float(gamma), kappa_nn=float(kappa),
                       c_nn=c_nn, tau_nn=float(tau))


def knn_indices(pattern: PointPattern, marks: FunctionalMarkSet,
                h: int = 1, l: int = 2, k_max: int = 3, lag: int = 0) -> IndexReport:
    """Cumulative k-nearest-neighbour correlation, variogram, and dominance
    indices for k = 1..k_max.

    The correlation index is normalised per time point by the product of
    the mean curves and then integrated; the dominance index averages a
    strict-inequality indicator over time, so it always lies in [0, 1].
    """
    n = pattern.n
    if k_max < 1:
        raise DomainError("k_max must be at least 1")
    if n < k_max + 1:
        raise DomainError(f"k-nearest-neighbour indices with k_max={k_max} need at least {k_max + 1} points")
    if marks.n_points != n:
        raise DomainError("marks and pattern disagree on the number of points")
    order = _neighbour_order(pattern)[:, :k_max]

    fh, fl = marks.channel(h), marks.channel(l)
    grid = marks.grid
    if lag:
        sub = grid.shifted(lag)
        fh, fl = fh[:, lag:], fl[:, : grid.size - lag]
        grid = sub
    w = grid.weights
    mu_prod = fh.mean(axis=0) * fl.mean(axis=0)
    if (mu_prod == 0).any():
        raise DomainError("k-NN correlation index needs nonzero mean-curve products")

    prod_sum = np.zeros(grid.size)
    diff_sum = np.zeros(grid.size)
    dom_sum = np.zeros(grid.size)
    k_corr = np.empty(k_max)
    k_vario = np.empty(k_max)
    k_dom = np.empty(k_max)
    for v in range(k_max):
        flv = fl[order[:, v]]
        prod_sum += (fh * flv).sum(axis=0)
        diff_sum += (0.5 * (fh - flv) ** 2).sum(axis=0)
        dom_sum += (fh > flv).sum(axis=0)
        scale = 1.0 / ((v + 1) * n)
        k_corr[v] = (prod_sum * scale / mu_prod) @ w
        k_vario[v] = (diff_sum * scale) @ w
        k_dom[v] = (dom_sum * scale) @ w / grid.span
    return IndexReport(k_max=k_max, k_correlation=k_corr,
                       k_variogram=k_vario, k_dominance=k_dom)
