"""Shared pair-summation machinery behind the second-order estimators.

Ordered point pairs are sorted by interpoint distance once per pattern;
every grid distance then sees a contiguous slice of pairs inside its
kernel support, and the cumulative statistics reduce to prefix sums.
Per-pair weight vectors are gathered at evaluation time, which turns a
mark relabeling into a cheap index remap: the geometry is never rebuilt
across envelope simulations.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .kernels import EstimationConfig, ResolvedConfig, kernel_value, resolve_config
from .patterns import PointPattern, distance_matrix

__all__ = ["PairEngine"]


def _segment_sums(flat: np.ndarray, starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Sums of consecutive segments of ``flat`` (empty segments give 0)."""
    out = np.zeros(len(starts))
    if flat.size == 0:
        return out
    # reduceat returns the element itself for empty segments and cannot
    # start at len(flat); pad and fix up afterwards.
    padded = np.append(flat, 0.0)
    sums = np.add.reduceat(padded, np.minimum(starts, flat.size))
    out[:] = sums[: len(starts)]
    out[lengths == 0] = 0.0
    return out


class PairEngine:
    """Kernel and cumulative sums over the ordered pairs of one pattern."""

    def __init__(
        self,
        pattern: PointPattern,
        cfg: EstimationConfig | ResolvedConfig | None = None,
        pair_mask: np.ndarray | None = None,
    ):
        if pattern.n < 2:
            raise DomainError("second-order estimators need at least two points")
        rcfg = cfg if isinstance(cfg, ResolvedConfig) else resolve_config(cfg, pattern)
        self.cfg = rcfg
        self.pattern = pattern
        self.n = pattern.n
        self.area = pattern.window.area
        self.r = rcfg.grid.r_values
        self.bandwidth = rcfg.bandwidth

        dmat = distance_matrix(pattern.window, pattern.points)
        off = ~np.eye(self.n, dtype=bool)
        i_idx, j_idx = np.nonzero(off)
        if pair_mask is not None:
            keep = pair_mask[i_idx, j_idx]
            i_idx, j_idx = i_idx[keep], j_idx[keep]
        d = dmat[i_idx, j_idx]
        order = np.argsort(d, kind="stable")
        self.i_sorted = i_idx[order]
        self.j_sorted = j_idx[order]
        self.d_sorted = d[order]
        self.e_sorted = self._edge_factors()
        self._build_kernel_rows()
        self._rho_ground: np.ndarray | None = None

    # -- construction helpers -------------------------------------------------

    def _edge_factors(self) -> np.ndarray:
        if self.cfg.edge_rule == "none_torus":
            return np.ones_like(self.d_sorted)
        pts = self.pattern.points
        sx, sy = self.pattern.window.sides
        dx = np.abs(pts[self.i_sorted, 0] - pts[self.j_sorted, 0])
        dy = np.abs(pts[self.i_sorted, 1] - pts[self.j_sorted, 1])
        return self.area / ((sx - dx) * (sy - dy))

    def _build_kernel_rows(self):
        b = self.bandwidth
        lo = np.searchsorted(self.d_sorted, self.r - b, side="left")
        hi = np.searchsorted(self.d_sorted, self.r + b, side="right")
        self._row_lengths = hi - lo
        self._row_starts = np.concatenate([[0], np.cumsum(self._row_lengths)])[:-1]
        pos = np.concatenate(
            [np.arange(a, z) for a, z in zip(lo, hi)]
        ) if self._row_lengths.sum() else np.empty(0, dtype=np.int64)
        self._pos_flat = pos.astype(np.int64)
        u = self.d_sorted[self._pos_flat] - np.repeat(self.r, self._row_lengths)
        self._w_flat = kernel_value(self.cfg.kernel, u, b) * self.e_sorted[self._pos_flat]
        self._lo, self._hi = lo, hi
        self._norm = 2.0 * np.pi * self.r * self.area

    # -- weight gathering ------------------------------------------------------

    def _gather(self, ell: np.ndarray, perm: np.ndarray | None) -> np.ndarray:
        if perm is None:
            return ell[self.i_sorted, self.j_sorted]
        return ell[perm[self.i_sorted], perm[self.j_sorted]]

    # -- kernel statistics -----------------------------------------------------

    def rho_ground(self) -> np.ndarray:
        """Kernel estimate of the second-order product density of the points."""
        if self._rho_ground is None:
            sums = _segment_sums(self._w_flat, self._row_starts, self._row_lengths)
            self._rho_ground = sums / self._norm
        return self._rho_ground

    def rho_weighted(self, ell: np.ndarray, perm: np.ndarray | None = None) -> np.ndarray:
        """Kernel product density with per-pair weights ``ell[i, j]``."""
        ellvec = self._gather(ell, perm)
        flat = self._w_flat * ellvec[self._pos_flat]
        return _segment_sums(flat, self._row_starts, self._row_lengths) / self._norm

    # -- cumulative statistics (K family) ---------------------------------------

    def cumulative_weighted(self, ell: np.ndarray | None = None,
                            perm: np.ndarray | None = None) -> np.ndarray:
        """Sum of edge-weighted pair weights with distance <= r, over area."""
        contrib = self.e_sorted if ell is None else self.e_sorted * self._gather(ell, perm)
        cum = np.concatenate([[0.0], np.cumsum(contrib)])
        idx = np.searchsorted(self.d_sorted, self.r, side="right")
        return cum[idx] / self.area

    def cumulative_per_origin(self, ell: np.ndarray, origin: int,
                              perm: np.ndarray | None = None) -> np.ndarray:
        """Cumulative weighted count restricted to pairs starting at one point."""
        sel = self.i_sorted == origin
        ellvec = self._gather(ell, perm)[sel]
        contrib = self.e_sorted[sel] * ellvec
        cum = np.concatenate([[0.0], np.cumsum(contrib)])
        idx = np.searchsorted(self.d_sorted[sel], self.r, side="right")
        return cum[idx]

    # -- pointwise (r, t) conditional expectations ------------------------------

    def pointwise_means(self, specs: list, perm: np.ndarray | None = None) -> list:
        """Kernel-weighted means of per-pair time curves, one (R, T) per spec.

        Each spec is ``("left", arr)``, ``("right", arr)`` or
        ``("product", arr_l, arr_r)`` with (n, T) curve arrays: the mean of
        the first point's curve, the second point's curve, or their product
        over the pairs near each grid distance, against the same kernel
        weights as the ground density.  Rows with no kernel mass are NaN.
        """
        if perm is None:
            pi, pj = self.i_sorted, self.j_sorted
        else:
            pi, pj = perm[self.i_sorted], perm[self.j_sorted]
        ground = _segment_sums(self._w_flat, self._row_starts, self._row_lengths)
        n_times = specs[0][1].shape[1]
        results = [np.full((len(self.r), n_times), np.nan) for _ in specs]
        for k in range(len(self.r)):
            lo, hi = self._lo[k], self._hi[k]
            if hi <= lo or ground[k] <= 0:
                continue
            start = self._row_starts[k]
            w = self._w_flat[start: start + self._row_lengths[k]]
            ii, jj = pi[lo:hi], pj[lo:hi]
            for out, spec in zip(results, specs):
                if spec[0] == "left":
                    vals = spec[1][ii]
                elif spec[0] == "right":
                    vals = spec[1][jj]
                else:
                    vals = spec[1][ii] * spec[2][jj]
                out[k] = (w @ vals) / ground[k]
        return results

    # -- restricted views --------------------------------------------------------

    def for_types(self, i_type: int, j_type: int) -> "PairEngine":
        """Engine over ordered pairs from component ``i_type`` to ``j_type``."""
        labels = self.pattern.labels
        if labels is None:
            raise DomainError("cross-type estimators need a labelled pattern")
        mask = (labels[:, None] == i_type) & (labels[None, :] == j_type)
        return PairEngine(self.pattern, self.cfg, pair_mask=mask)

    def for_origin_type(self, i_type: int) -> "PairEngine":
        """Engine over ordered pairs whose first point has type ``i_type``."""
        labels = self.pattern.labels
        if labels is None:
            raise DomainError("dot-type estimators need a labelled pattern")
        mask = np.broadcast_to((labels == i_type)[:, None], (self.n, self.n))
        return PairEngine(self.pattern, self.cfg, pair_mask=np.array(mask))
