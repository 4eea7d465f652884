"""Second-order summary characteristics for function-valued marks.

Every mark characteristic here is a normalised ratio of two kernel
estimates: a test-function-weighted product density over the ground
product density of the point locations, optionally divided by a
non-spatial normaliser.  The cumulative (K/L) family replaces the kernel
by a distance indicator.  Evaluators are built once per pattern and mark
set and can be re-evaluated under label permutations, which is what makes
the 199-simulation envelopes cheap.

Pointwise variance ratios (the Isham-type correlation) treat empirical
variances below 1e-10 times the squared mark scale as zero and flag the
affected distances as undefined rather than dividing by noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernels import EstimationConfig
from .pairsums import PairEngine
from .patterns import (
    FunctionalMarkSet,
    PointPattern,
    functional_mean,
    integrate_over_time,
)
from .testfuncs import TestFunction, pairwise_integral_matrix

__all__ = [
    "SummaryCurve",
    "ground_product_density",
    "mark_product_density",
    "mark_characteristic",
    "estimate_kappa_generic",
    "u_function",
    "mark_weighted_k",
    "mark_weighted_l",
    "mark_weighted_pcf",
    "chat",
    "MARK_CHARACTERISTICS",
    "U_BASES",
    "GROUND_STATISTICS",
]


@dataclass(frozen=True)
class SummaryCurve:
    """A summary characteristic evaluated on a distance grid.

    Undefined entries (no kernel mass, zero normaliser) are NaN.  The
    optional ``pointwise`` matrix holds the (distance, time) values before
    time integration for characteristics that have one.
    """

    kind: str
    r_values: np.ndarray
    values: np.ndarray
    channels: tuple[int, int] | None = None
    types: tuple | None = None
    pointwise: np.ndarray | None = None


# ---------------------------------------------------------------------------
# normalisers


def chat(marks: FunctionalMarkSet, h: int, l: int, kind: TestFunction,
         lag: int = 0, exclude_self: bool = False) -> float:
    """Empirical non-spatial mean of the integrated test function.

    Averages over all ordered point index pairs including the self pairs
    (a self pair evaluates the point's own two channels), matching the
    n-squared denominator of the printed estimator; ``exclude_self``
    switches to the n(n-1) convention.
    """
    ell = pairwise_integral_matrix(marks, h, l, kind, lag)
    n = marks.n_points
    if exclude_self:
        if n < 2:
            raise DomainError("self-excluding normaliser needs at least two points")
        return float((ell.sum() - np.trace(ell)) / (n * (n - 1)))
    return float(ell.mean())


def _mean_curve_integral(marks: FunctionalMarkSet, channels: tuple[int, ...]) -> float:
    """Integral over time of the product of empirical mean curves."""
    prod = np.ones(marks.grid.size)
    for c in channels:
        prod = prod * functional_mean(marks, c)
    return float(integrate_over_time(prod, marks.grid))


# ---------------------------------------------------------------------------
# evaluators: one closure per characteristic, reusable under permutations


class CurveEvaluator:
    """Callable returning curve values, optionally under a label permutation."""

    def __init__(self, kind, fn, theoretical=None, pointwise_fn=None, channels=None):
        self.kind = kind
        self._fn = fn
        self.theoretical = theoretical
        self._pointwise_fn = pointwise_fn
        self.channels = channels

    def __call__(self, perm: np.ndarray | None = None) -> np.ndarray:
        return self._fn(perm)

    def pointwise(self, perm: np.ndarray | None = None) -> np.ndarray | None:
        return None if self._pointwise_fn is None else self._pointwise_fn(perm)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    out[~np.isfinite(out)] = np.nan
    return out


def _ratio_builder(tf_kind: TestFunction, normaliser: str, post: str = "none"):
    """Factory for the integrated-test-function ratio characteristics."""

    def build(engine: PairEngine, marks: FunctionalMarkSet, h: int, l: int) -> CurveEvaluator:
        lag = engine.cfg.time_lag
        ell = pairwise_integral_matrix(marks, h, l, tf_kind, lag)
        rho_g = engine.rho_ground()
        span = marks.grid.shifted(lag).span
        if normaliser == "chat":
            denom = chat(marks, h, l, tf_kind, lag, engine.cfg.chat_excludes_self)
        elif normaliser == "mu_hl":
            denom = _mean_curve_integral(marks, (h, l))
        elif normaliser == "mu_h":
            denom = _mean_curve_integral(marks, (h,))
        elif normaliser == "mu_l":
            denom = _mean_curve_integral(marks, (l,))
        else:
            denom = 1.0
        mu_int = _mean_curve_integral(marks, (h, l))

        def fn(perm=None):
            num = engine.rho_weighted(ell, perm)
            if normaliser == "chat" and denom == 0.0:
                # identical marks: the numerator is exactly zero wherever the
                # ground density is positive, so report zero there.
                vals = np.where(rho_g > 0, 0.0, np.nan)
                return vals
            vals = _safe_ratio(num, rho_g * denom)
            if post == "span_minus":
                vals = span - vals
            elif post == "minus_mu":
                vals = vals - mu_int
            return vals

        theo = {
            "chat": np.ones(len(engine.r)),
            "mu_hl": np.ones(len(engine.r)),
            "mu_h": np.ones(len(engine.r)),
            "mu_l": np.ones(len(engine.r)),
            "unit": None,
        }[normaliser]
        if post == "span_minus":
            base = chat(marks, h, l, tf_kind, lag, engine.cfg.chat_excludes_self)
            theo = np.full(len(engine.r), span - base)
        elif post == "minus_mu":
            theo = np.zeros(len(engine.r))
        elif normaliser == "unit":
            theo = np.full(len(engine.r), chat(marks, h, l, tf_kind, lag,
                                               engine.cfg.chat_excludes_self))
        return CurveEvaluator(None, fn, theoretical=theo, channels=(h, l))

    return build


def _beisbart_builder(engine: PairEngine, marks: FunctionalMarkSet, h: int, l: int):
    if engine.cfg.time_lag:
        raise DomainError("time lag is not supported for pointwise-normalised kinds")
    mu_sum = functional_mean(marks, h) + functional_mean(marks, l)
    if (mu_sum == 0).any():
        raise DomainError("Beisbart correlation needs nonzero mean mark sums")
    w = marks.grid.weights
    scale = w / mu_sum
    a = marks.channel(h) @ scale
    b = marks.channel(l) @ scale
    ell = a[:, None] + b[None, :]
    rho_g = engine.rho_ground()
    span = marks.grid.span

    def fn(perm=None):
        return _safe_ratio(engine.rho_weighted(ell, perm), rho_g)

    return CurveEvaluator(None, fn, theoretical=np.full(len(engine.r), span),
                          channels=(h, l))


def _constant_rows(a: np.ndarray) -> bool:
    return bool((a == a[0]).all())


def _pointwise_builder(flavour: str):
    """Cressie covariance, Isham correlation, and per-time-normalised kinds."""

    def build(engine: PairEngine, marks: FunctionalMarkSet, h: int, l: int) -> CurveEvaluator:
        if engine.cfg.time_lag:
            raise DomainError("time lag is not supported for pointwise-normalised kinds")
        fh, fl = marks.channel(h), marks.channel(l)
        w = marks.grid.weights
        if flavour == "isham" and (_constant_rows(fh) or _constant_rows(fl)):
            raise DomainError("Isham correlation is undefined for constant marks (zero variance)")
        var_floor = 1e-10 * max(1.0, float(max(np.abs(fh).max(), np.abs(fl).max())) ** 2)
        mu_prod = functional_mean(marks, h) * functional_mean(marks, l)

        def integrand(perm):
            if flavour == "kappa_timewise":
                (c3,) = engine.pointwise_means([("product", fh, fl)], perm)
                with np.errstate(invalid="ignore", divide="ignore"):
                    vals = c3 / mu_prod
                vals[:, mu_prod == 0] = np.nan
                return vals
            if flavour == "cressie":
                c3, c4, c5 = engine.pointwise_means(
                    [("product", fh, fl), ("left", fh), ("right", fl)], perm)
                return c3 - c4 * c5
            c3, c4h, c5l, phh, c5h, pll, c4l = engine.pointwise_means(
                [("product", fh, fl), ("left", fh), ("right", fl),
                 ("product", fh, fh), ("right", fh),
                 ("product", fl, fl), ("left", fl)], perm)
            cov = c3 - c4h * c5l
            vhh = phh - c4h * c5h
            vll = pll - c4l * c5l
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = cov / np.sqrt(vhh * vll)
            vals[(vhh <= var_floor) | (vll <= var_floor)] = np.nan
            return vals

        def fn(perm=None):
            return integrand(perm) @ w

        theo = {
            "kappa_timewise": np.ones(len(engine.r)),
            "cressie": np.zeros(len(engine.r)),
            "isham": np.zeros(len(engine.r)),
        }[flavour]
        return CurveEvaluator(None, fn, theoretical=theo, pointwise_fn=integrand,
                              channels=(h, l))

    return build


MARK_CHARACTERISTICS: dict = {
    "mark_variogram": _ratio_builder(TestFunction.HALF_SQUARED_DIFF, "chat"),
    "mark_variogram_raw": _ratio_builder(TestFunction.HALF_SQUARED_DIFF, "unit"),
    "mark_correlation": _ratio_builder(TestFunction.PRODUCT, "mu_hl"),
    "mark_correlation_timewise": _pointwise_builder("kappa_timewise"),
    "mark_differentiation": _ratio_builder(TestFunction.MIN_MAX_RATIO, "unit", post="span_minus"),
    "mean_product": _ratio_builder(TestFunction.PRODUCT, "unit"),
    "mark_cov_stoyan": _ratio_builder(TestFunction.PRODUCT, "unit", post="minus_mu"),
    "mark_cov_cressie": _pointwise_builder("cressie"),
    "mark_corr_isham": _pointwise_builder("isham"),
    "mark_corr_beisbart": _beisbart_builder,
    "rmark_left": _ratio_builder(TestFunction.LEFT, "mu_h"),
    "rmark_right": _ratio_builder(TestFunction.RIGHT, "mu_l"),
}

U_BASES = (
    "mark_correlation",
    "rmark_left",
    "rmark_right",
    "mark_variogram",
    "mark_differentiation",
)


def build_mark_statistic(engine: PairEngine, marks: FunctionalMarkSet,
                         kind: str, h: int, l: int) -> CurveEvaluator:
    """Resolve a characteristic name to a reusable evaluator."""
    if kind.startswith("u_"):
        base_kind = kind[2:]
        if base_kind not in U_BASES:
            raise DomainError(f"unsupported base {base_kind!r} for the U function")
        base = build_mark_statistic(engine, marks, base_kind, h, l)
        rho_g = engine.rho_ground()
        lam2 = engine.pattern.intensity ** 2

        def fn(perm=None):
            return rho_g * base(perm)

        theo = None
        if base.theoretical is not None and np.allclose(base.theoretical, 1.0):
            theo = np.full(len(engine.r), lam2)
        ev = CurveEvaluator(kind, fn, theoretical=theo, channels=(h, l))
        return ev
    if kind not in MARK_CHARACTERISTICS:
        raise DomainError(f"unknown mark characteristic {kind!r}")
    ev = MARK_CHARACTERISTICS[kind](engine, marks, h, l)
    ev.kind = kind
    return ev


# ---------------------------------------------------------------------------
# public estimator surface


def ground_product_density(pattern: PointPattern,
                           cfg: EstimationConfig | None = None) -> SummaryCurve:
    """Kernel estimate of the second-order product density of the points."""
    engine = PairEngine(pattern, cfg)
    return SummaryCurve("product_density", engine.r, engine.rho_ground())


def mark_product_density(pattern: PointPattern, marks: FunctionalMarkSet,
                         h: int, l: int, kind: TestFunction,
                         cfg: EstimationConfig | None = None) -> SummaryCurve:
    """Product density with every ordered pair weighted by the integrated
    test function of its marks."""
    engine = PairEngine(pattern, cfg)
    ell = pairwise_integral_matrix(marks, h, l, TestFunction(kind), engine.cfg.time_lag)
    return SummaryCurve("product_density_weighted", engine.r,
                        engine.rho_weighted(ell), channels=(h, l))


def estimate_kappa_generic(pattern: PointPattern, marks: FunctionalMarkSet,
                           h: int, l: int, kind: TestFunction, normalization: str,
                           cfg: EstimationConfig | None = None) -> SummaryCurve:
    """Generic normalised ratio of weighted over ground product density.

    ``normalization`` is one of ``chat`` (non-spatial test function mean),
    ``mu_hl``/``mu_h``/``mu_l`` (integrals of mean-curve products), or
    ``unit``.
    """
    if normalization not in ("chat", "mu_hl", "mu_h", "mu_l", "unit"):
        raise DomainError(f"unknown normalization {normalization!r}")
    engine = PairEngine(pattern, cfg)
    ev = _ratio_builder(TestFunction(kind), normalization)(engine, marks, h, l)
    return SummaryCurve("kappa_generic", engine.r, ev(), channels=(h, l))


def mark_characteristic(pattern: PointPattern, marks: FunctionalMarkSet, kind: str,
                        h: int = 1, l: int = 2,
                        cfg: EstimationConfig | None = None,
                        per_time_normalization: bool = False,
                        keep_pointwise: bool = False) -> SummaryCurve:
    """Estimate one named cross-function mark characteristic.

    Kinds: mark_variogram (and _raw), mark_correlation, mark_differentiation,
    mean_product, mark_cov_stoyan, mark_cov_cressie, mark_corr_isham,
    mark_corr_beisbart, rmark_left, rmark_right, and u_<base> products with
    the pair correlation function.  ``per_time_normalization`` switches the
    mark correlation to the per-time-normalised variant.
    """
    if kind == "mark_correlation" and per_time_normalization:
        kind = "mark_correlation_timewise"
    engine = PairEngine(pattern, cfg)
    ev = build_mark_statistic(engine, marks, kind, h, l)
    pw = ev.pointwise() if keep_pointwise else None
    return SummaryCurve(kind, engine.r, ev(), channels=(h, l), pointwise=pw)


def u_function(pattern: PointPattern, marks: FunctionalMarkSet, base: str,
               h: int = 1, l: int = 2,
               cfg: EstimationConfig | None = None) -> SummaryCurve:
    """Mean mark product per unit area pair: intensity-squared times pair
    correlation times the chosen base characteristic."""
    return mark_characteristic(pattern, marks, f"u_{base}", h, l, cfg)


# ---------------------------------------------------------------------------
# cumulative (K / L) and pair correlation families


_KIND_TO_TF = {
    "product": TestFunction.PRODUCT,
    "left": TestFunction.LEFT,
    "right": TestFunction.RIGHT,
    "unit": TestFunction.UNIT,
}


def _weight_normaliser(marks, h, l, weight: str) -> float:
    if weight == "product":
        return _mean_curve_integral(marks, (h, l))
    if weight == "left":
        return _mean_curve_integral(marks, (h,))
    if weight == "right":
        return _mean_curve_integral(marks, (l,))
    return 1.0


def _resolve_pair_scope(engine: PairEngine, types):
    """Sub-engine and intensity product for an optional type restriction."""
    lam = engine.pattern.intensity
    if types is None:
        return engine, lam * lam
    i_type, j_type = types
    labels = engine.pattern.labels
    if labels is None:
        raise DomainError("cross-type estimators need a labelled pattern")
    counts = engine.pattern.type_counts()
    n_i = counts.get(i_type, 0)
    if n_i == 0:
        raise DomainError(f"component {i_type} has no points")
    lam_i = n_i / engine.area
    if j_type == "dot":
        return engine.for_origin_type(i_type), lam_i * lam
    n_j = counts.get(j_type, 0)
    if n_j == 0:
        raise DomainError(f"component {j_type} has no points")
    return engine.for_types(i_type, j_type), lam_i * (n_j / engine.area)


def build_weighted_k(engine: PairEngine, marks: FunctionalMarkSet | None,
                     weight: str = "unit", h: int = 1, l: int = 2,
                     types=None, origin: int | None = None) -> CurveEvaluator:
    if weight not in _KIND_TO_TF:
        raise DomainError(f"unknown weight kind {weight!r}")
    if weight != "unit" and marks is None:
        raise DomainError("mark-weighted K needs a mark set")
    if origin is not None and types is not None:
        raise DomainError("local K does not combine with type restrictions")
    tf = _KIND_TO_TF[weight]
    if marks is not None:
        ell = pairwise_integral_matrix(marks, h, l, tf, engine.cfg.time_lag)
        denom_c = _weight_normaliser(marks, h, l, weight)
    else:
        ell, denom_c = None, 1.0
    if origin is not None:
        if not 0 <= origin < engine.n:
            raise DomainError(f"origin index {origin} out of range")
        area, n = engine.area, engine.n
        local_ell = np.ones((n, n)) if ell is None else ell

        def fn(perm=None):
            raw = engine.cumulative_per_origin(local_ell, origin, perm)
            return raw * area / (n * denom_c)

        return CurveEvaluator("weighted_k_local", fn, channels=(h, l))
    scope, lam_prod = _resolve_pair_scope(engine, types)

    def fn(perm=None):
        # unit weights are permutation invariant, so the relabeling is a no-op
        raw = scope.cumulative_weighted() if ell is None else scope.cumulative_weighted(ell, perm)
        return raw / (lam_prod * denom_c)

    theo = np.pi * engine.r ** 2
    return CurveEvaluator("weighted_k", fn, theoretical=theo, channels=(h, l))


def mark_weighted_k(pattern: PointPattern, marks: FunctionalMarkSet | None = None,
                    h: int = 1, l: int = 2, weight: str = "unit",
                    cfg: EstimationConfig | None = None,
                    types=None, origin: int | None = None
                    ) -> tuple[SummaryCurve, SummaryCurve]:
    """Mark-weighted K function and its L transform.

    ``weight`` selects the pair weight: the product of the two mark curves,
    the left or right curve alone, or unit weights, which reduce to
    Ripley's K.  ``types=(i, j)`` restricts ordered pairs to components i
    and j (j may be the string "dot" for any second point); ``origin``
    gives the localised version for a single point index.
    """
    engine = PairEngine(pattern, cfg)
    ev = build_weighted_k(engine, marks, weight, h, l, types, origin)
    k_vals = ev()
    if weight == "unit" and types is None and origin is None:
        kind = "ripley_k"
    elif origin is not None:
        kind = f"weighted_k_local_{weight}"
    else:
        kind = f"weighted_k_{weight}"
    with np.errstate(invalid="ignore"):
        l_vals = np.sqrt(k_vals / np.pi)
    chans = (h, l) if marks is not None else None
    k_curve = SummaryCurve(kind, engine.r, k_vals, channels=chans, types=types)
    l_curve = SummaryCurve(kind.replace("k", "l", 1) if kind.startswith("weighted") else "ripley_l",
                           engine.r, l_vals, channels=chans, types=types)
    return k_curve, l_curve


def mark_weighted_l(pattern: PointPattern, marks: FunctionalMarkSet | None = None,
                    **kwargs) -> SummaryCurve:
    return mark_weighted_k(pattern, marks, **kwargs)[1]


def build_weighted_pcf(engine: PairEngine, marks: FunctionalMarkSet | None,
                       weight: str = "unit", h: int = 1, l: int = 2,
                       types=None) -> CurveEvaluator:
    if weight not in _KIND_TO_TF:
        raise DomainError(f"unknown weight kind {weight!r}")
    if weight != "unit" and marks is None:
        raise DomainError("mark-weighted pair correlation needs a mark set")
    tf = _KIND_TO_TF[weight]
    if marks is not None:
        ell = pairwise_integral_matrix(marks, h, l, tf, engine.cfg.time_lag)
        denom_c = _weight_normaliser(marks, h, l, weight)
    else:
        ell, denom_c = None, 1.0
    scope, lam_prod = _resolve_pair_scope(engine, types)

    def fn(perm=None):
        if ell is None:
            num = scope.rho_ground()
        else:
            num = scope.rho_weighted(ell, perm)
        return num / (lam_prod * denom_c)

    return CurveEvaluator("weighted_pcf", fn, theoretical=np.ones(len(engine.r)),
                          channels=(h, l))


def mark_weighted_pcf(pattern: PointPattern, marks: FunctionalMarkSet | None = None,
                      h: int = 1, l: int = 2, weight: str = "unit",
                      cfg: EstimationConfig | None = None, types=None) -> SummaryCurve:
    """Mark-weighted pair correlation function (unit weights give the plain
    pair correlation of the locations)."""
    engine = PairEngine(pattern, cfg)
    ev = build_weighted_pcf(engine, marks, weight, h, l, types)
    kind = "pcf" if weight == "unit" and types is None else f"weighted_pcf_{weight}"
    chans = (h, l) if marks is not None else None
    return SummaryCurve(kind, engine.r, ev(), channels=chans, types=types)


GROUND_STATISTICS = ("pcf", "ripley_k")


def build_ground_statistic(engine: PairEngine, kind: str) -> CurveEvaluator:
    """Points-only statistics used under the CSR null."""
    if kind == "pcf":
        return build_weighted_pcf(engine, None, "unit")
    if kind == "ripley_k":
        return build_weighted_k(engine, None, "unit")
    raise DomainError(f"unknown ground statistic {kind!r}")
