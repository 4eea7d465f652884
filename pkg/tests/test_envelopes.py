"""Monte-Carlo rank envelopes under random labeling and CSR."""

import numpy as np
import pytest

from fmark import (
    DomainError,
    EstimationConfig,
    DistanceGrid,
    FunctionalMarkSet,
    PointPattern,
    SimulationSpec,
    TimeGrid,
    csr_envelope,
    random_label_envelope,
    sim_poisson,
    sim_thomas,
    unit_torus,
)
from fmark.envelopes import build_statistic, parse_statistic
from fmark.pairsums import PairEngine

W = unit_torus()


def poisson_case(seed, n_int=120, T=6):
    rng = np.random.default_rng(seed)
    pat = sim_poisson(SimulationSpec("poisson", W, seed=seed, intensity=n_int))
    grid = TimeGrid(np.linspace(0, 1, T))
    base = np.sin(np.linspace(0, 3, T)) + 2.0
    vals = np.empty((pat.n, 2, T))
    for c in range(2):
        scale = rng.uniform(0.5, 1.5, pat.n)
        shift = rng.uniform(0.0, 1.0, pat.n)
        vals[:, c, :] = scale[:, None] * base[None, :] + shift[:, None]
    return pat, FunctionalMarkSet(grid, vals)


def test_constant_marks_collapse_band():
    pat, _ = poisson_case(0)
    vals = np.full((pat.n, 2, 4), 3.0)
    marks = FunctionalMarkSet(TimeGrid(np.linspace(0, 1, 4)), vals)
    band = random_label_envelope(pat, marks, "mark_correlation(1,2)", nsim=39,
                                 k_env=5, seed=1)
    ok = np.isfinite(band.observed)
    np.testing.assert_array_equal(band.lower[ok], band.observed[ok])
    np.testing.assert_array_equal(band.upper[ok], band.observed[ok])


def test_permutation_preserves_tuple_multiset():
    _, marks = poisson_case(2)
    perm = np.random.default_rng(3).permutation(marks.n_points)
    permuted = marks.permuted(perm)
    a = np.sort(marks.values.reshape(marks.n_points, -1), axis=0)
    b = np.sort(permuted.values.reshape(marks.n_points, -1), axis=0)
    np.testing.assert_array_equal(a, b)


def test_envelope_bit_reproducible():
    pat, marks = poisson_case(4)
    kw = dict(nsim=49, k_env=5, seed=77)
    a = random_label_envelope(pat, marks, "mark_variogram(1,2)", **kw)
    b = random_label_envelope(pat, marks, "mark_variogram(1,2)", **kw)
    np.testing.assert_array_equal(a.observed, b.observed)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)


def test_thread_count_does_not_change_results():
    pat, marks = poisson_case(5)
    kw = dict(nsim=39, k_env=5, seed=13)
    a = random_label_envelope(pat, marks, "mark_correlation(1,2)", threads=1, **kw)
    b = random_label_envelope(pat, marks, "mark_correlation(1,2)", threads=4, **kw)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)
    c = csr_envelope(pat, "pcf", threads=1, **kw)
    d = csr_envelope(pat, "pcf", threads=4, **kw)
    np.testing.assert_array_equal(c.lower, d.lower)


def test_rank_validation():
    pat, marks = poisson_case(6)
    with pytest.raises(DomainError):
        random_label_envelope(pat, marks, "mark_variogram(1,2)", nsim=9, k_env=5)
    with pytest.raises(DomainError):
        csr_envelope(pat, "pcf", nsim=3, k_env=2)


def test_envelope_bounds_are_order_statistics_of_samples():
    pat, marks = poisson_case(7)
    band = random_label_envelope(pat, marks, "mark_correlation(1,2)", nsim=19,
                                 k_env=3, seed=5, keep_samples=True)
    assert band.samples.shape == (19, len(band.r_values))
    ok = np.isfinite(band.observed) & np.isfinite(band.lower)
    srt = np.sort(band.samples, axis=0)
    np.testing.assert_array_equal(band.lower[ok], srt[2][ok])
    np.testing.assert_array_equal(band.upper[ok], srt[16][ok])


def test_exchangeable_marks_exit_rate_near_nominal():
    # under the null the observed curve exits a rank-5/199 band at 5% of
    # grid points on average; a small replicate average must sit nearby
    rates = []
    for seed in range(8):
        pat, marks = poisson_case(100 + seed)
        band = random_label_envelope(pat, marks, "mark_variogram(1,2)",
                                     nsim=199, k_env=5, seed=seed)
        ok = np.isfinite(band.observed) & np.isfinite(band.lower)
        outside = ((band.observed < band.lower) | (band.observed > band.upper)) & ok
        rates.append(outside.sum() / ok.sum())
    assert 0.0 <= np.mean(rates) < 0.15


def test_joint_tuple_permutation_matches_single_channel_for_auto_statistics():
    pat, marks = poisson_case(8)
    engine = PairEngine(pat, None)
    ev = build_statistic(engine, marks, parse_statistic("mark_correlation(1,1)"))
    perm = np.random.default_rng(9).permutation(pat.n)
    joint = ev(perm)
    # permuting only channel 1 with the same indices gives the same values
    single = marks.values.copy()
    single[:, 0, :] = marks.values[perm, 0, :]
    ev2 = build_statistic(PairEngine(pat, None),
                          FunctionalMarkSet(marks.grid, single),
                          parse_statistic("mark_correlation(1,1)"))
    np.testing.assert_allclose(joint, ev2(), rtol=1e-12)


def test_statistics_share_permutations_in_one_call():
    pat, marks = poisson_case(10)
    both = random_label_envelope(pat, marks,
                                 ["mark_variogram(1,2)", "mark_correlation(1,2)"],
                                 nsim=29, k_env=3, seed=21)
    alone = random_label_envelope(pat, marks, "mark_variogram(1,2)",
                                  nsim=29, k_env=3, seed=21)
    np.testing.assert_array_equal(both[0].lower, alone.lower)
    np.testing.assert_array_equal(both[0].upper, alone.upper)


def test_csr_envelope_poisson_mostly_inside():
    pat = sim_poisson(SimulationSpec("poisson", W, seed=30, intensity=150))
    band = csr_envelope(pat, "pcf", nsim=99, k_env=5, seed=31)
    ok = np.isfinite(band.observed) & np.isfinite(band.lower)
    inside = ((band.observed >= band.lower) & (band.observed <= band.upper) & ok)
    assert inside.sum() / ok.sum() >= 0.85
    np.testing.assert_allclose(band.theoretical, 1.0)


def test_csr_envelope_detects_thomas_clustering():
    pat = sim_thomas(SimulationSpec("thomas", W, seed=32, parent_intensity=40,
                                    offspring_mean=5, offspring_sigma=0.04))
    band = csr_envelope(pat, "pcf", nsim=99, k_env=5, seed=33)
    small = band.r_values < 0.1
    assert ((band.observed > band.upper) & small).any()
    kband = csr_envelope(pat, "ripley_k", nsim=99, k_env=5, seed=34)
    np.testing.assert_allclose(kband.theoretical, np.pi * kband.r_values ** 2)
    assert ((kband.observed > kband.upper) & (kband.r_values < 0.15)).any()


def test_csr_envelope_rejects_mark_statistics():
    pat, _ = poisson_case(11)
    with pytest.raises(DomainError):
        csr_envelope(pat, "mark_variogram(1,2)")


def test_weighted_statistics_usable_in_envelopes():
    pat, marks = poisson_case(12, n_int=80)
    cfg = EstimationConfig(grid=DistanceGrid(np.linspace(0.02, 0.2, 10)))
    bands = random_label_envelope(pat, marks,
                                  ["weighted_k_product(1,2)", "weighted_pcf_product(1,2)",
                                   "u_mark_correlation(1,2)"],
                                  nsim=19, k_env=2, seed=40, cfg=cfg)
    for band in bands:
        assert np.isfinite(band.observed).any()
        ok = np.isfinite(band.lower) & np.isfinite(band.upper)
        assert (band.lower[ok] <= band.upper[ok]).all()
