"""Monte-Carlo rank envelopes for the random-labeling and CSR nulls.

Random labeling holds the point locations fixed and permutes the whole
mark tuples across points; the kernel geometry is therefore built once
and every simulation is an index remap.  The CSR null redraws a Poisson
pattern with the observed intensity for every simulation, keeping the
bandwidth and distance grid fixed from the observed pattern so curves
stay comparable.  Envelope bounds are the k-th smallest and largest
simulated values at each grid distance, with no interpolation.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .estimators import (
    GROUND_STATISTICS,
    MARK_CHARACTERISTICS,
    U_BASES,
    build_ground_statistic,
    build_mark_statistic,
    build_weighted_k,
    build_weighted_pcf,
)
from .kernels import EstimationConfig, resolve_config
from .pairsums import PairEngine
from .patterns import FunctionalMarkSet, PointPattern
from .simulate import SimulationSpec, sim_poisson

__all__ = [
    "EnvelopeBand",
    "StatisticRequest",
    "parse_statistic",
    "random_label_envelope",
    "csr_envelope",
    "pool_size",
]


@dataclass(frozen=True)
class EnvelopeBand:
    """Pointwise rank envelope around an observed summary curve.

    ``lower``/``upper`` are the k_env-th smallest and largest simulated
    values per grid distance; undefined entries are NaN gaps excluded from
    any band comparison.
    """

    kind: str
    r_values: np.ndarray
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    theoretical: np.ndarray | None
    nsim: int
    k_env: int
    null: str
    channels: tuple[int, int] | None = None
    samples: np.ndarray | None = None


@dataclass(frozen=True)
class StatisticRequest:
    """A named summary statistic plus the mark channels it reads."""

    kind: str
    h: int = 1
    l: int = 2


_TOKEN = re.compile(r"^([a-z0-9_]+?)(?:\((\d+),(\d+)\))?$")


def parse_statistic(token: str) -> StatisticRequest:
    """Parse a statistic token like ``mark_variogram(1,2)``."""
    m = _TOKEN.match(token.strip())
    if not m:
        raise DomainError(f"cannot parse statistic token {token!r}")
    kind, h, l = m.group(1), m.group(2), m.group(3)
    if h is None:
        return StatisticRequest(kind)
    return StatisticRequest(kind, int(h), int(l))


def _as_request(statistic) -> StatisticRequest:
    if isinstance(statistic, StatisticRequest):
        return statistic
    if isinstance(statistic, str):
        return parse_statistic(statistic)
    raise DomainError(f"unsupported statistic specification {statistic!r}")


def build_statistic(engine: PairEngine, marks: FunctionalMarkSet | None,
                    request: StatisticRequest):
    """Resolve a request against an engine, reusing pairwise weights."""
    kind, h, l = request.kind, request.h, request.l
    if kind in GROUND_STATISTICS:
        return build_ground_statistic(engine, kind)
    if marks is None:
        raise DomainError(f"statistic {kind!r} needs a mark set")
    if kind.startswith("weighted_k_"):
        return build_weighted_k(engine, marks, kind.removeprefix("weighted_k_"), h, l)
    if kind.startswith("weighted_pcf_"):
        return build_weighted_pcf(engine, marks, kind.removeprefix("weighted_pcf_"), h, l)
    if kind in MARK_CHARACTERISTICS or (kind.startswith("u_") and kind[2:] in U_BASES):
        return build_mark_statistic(engine, marks, kind, h, l)
    raise DomainError(f"unknown statistic {kind!r}")


def pool_size(threads: int | None = None) -> int:
    """Worker count for envelope simulations; FMARK_THREADS caps it."""
    if threads is None:
        env = os.environ.get("FMARK_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError as exc:
                raise DomainError(f"FMARK_THREADS must be an integer, got {env!r}") from exc
        else:
            threads = min(4, os.cpu_count() or 1)
    return max(1, threads)


def _run_jobs(nsim: int, threads: int, job):
    results = [None] * nsim
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for s, res in enumerate(pool.map(job, range(nsim))):
                results[s] = res
    else:
        for s in range(nsim):
            results[s] = job(s)
    return results


def _assemble(kind, engine_r, observed, sims, theoretical, nsim, k_env, null,
              channels, keep_samples):
    sims = np.asarray(sims)
    bad = np.isnan(sims).any(axis=0)
    ordered = np.sort(sims, axis=0)
    lower = ordered[k_env - 1].copy()
    upper = ordered[nsim - k_env].copy()
    lower[bad] = np.nan
    upper[bad] = np.nan
    return EnvelopeBand(kind, engine_r, observed, lower, upper, theoretical,
                        nsim, k_env, null, channels,
                        sims if keep_samples else None)


def _validate_rank(nsim: int, k_env: int):
    if k_env < 1:
        raise DomainError("envelope rank must be at least 1")
    if nsim < 2 * k_env:
        raise DomainError(f"rank-{k_env} envelopes need at least {2 * k_env} simulations")


def random_label_envelope(pattern: PointPattern, marks: FunctionalMarkSet,
                          statistic, nsim: int = 199, k_env: int = 5,
                          seed: int = 0, cfg: EstimationConfig | None = None,
                          keep_samples: bool = False,
                          threads: int | None = None):
    """Rank envelopes under random labeling of mark tuples over fixed points.

    ``statistic`` may be a single request (token string or
    StatisticRequest) or a list of them; all statistics in one call share
    the same label permutations.  Returns one band, or a list matching the
    input.
    """
    _validate_rank(nsim, k_env)
    if marks.n_points != pattern.n:
        raise DomainError("marks and pattern disagree on the number of points")
    single = not isinstance(statistic, (list, tuple))
    requests = [_as_request(s) for s in ([statistic] if single else statistic)]
    engine = PairEngine(pattern, cfg)
    evaluators = [build_statistic(engine, marks, req) for req in requests]
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(pattern.n) for _ in range(nsim)]

    def job(s):
        return [np.asarray(ev(perms[s])) for ev in evaluators]

    sims_all = _run_jobs(nsim, pool_size(threads), job)
    bands = []
    for q, (req, ev) in enumerate(zip(requests, evaluators)):
        sims = [row[q] for row in sims_all]
        bands.append(_assemble(req.kind, engine.r, ev(), sims, ev.theoretical,
                               nsim, k_env, "random_labeling", (req.h, req.l),
                               keep_samples))
    return bands[0] if single else bands


def csr_envelope(pattern: PointPattern, statistic, nsim: int = 199,
                 k_env: int = 5, seed: int = 0,
                 cfg: EstimationConfig | None = None,
                 keep_samples: bool = False,
                 threads: int | None = None) -> EnvelopeBand:
    """Rank envelopes under complete spatial randomness.

    Every simulation draws a Poisson pattern with the observed empirical
    intensity in the same window; only points-only statistics (pair
    correlation, Ripley K) are meaningful here.
    """
    _validate_rank(nsim, k_env)
    req = _as_request(statistic)
    if req.kind not in GROUND_STATISTICS:
        raise DomainError("CSR envelopes support points-only statistics "
                          f"{GROUND_STATISTICS}, got {req.kind!r}")
    rcfg = resolve_config(cfg, pattern)
    engine = PairEngine(pattern, rcfg)
    observed_ev = build_ground_statistic(engine, req.kind)
    lam = pattern.intensity
    window = pattern.window

    def job(s):
        sim_pat = sim_poisson(SimulationSpec("poisson", window,
                                             seed=(seed, s), intensity=lam))
        if sim_pat.n < 2:
            return np.full(len(engine.r), np.nan)
        sim_engine = PairEngine(sim_pat, rcfg)
        return np.asarray(build_ground_statistic(sim_engine, req.kind)())

    sims = _run_jobs(nsim, pool_size(threads), job)
    return _assemble(req.kind, engine.r, observed_ev(), sims,
                     observed_ev.theoretical, nsim, k_env, "csr", None,
                     keep_samples)
