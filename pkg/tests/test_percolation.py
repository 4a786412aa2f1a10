import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbmdim.errors import InvalidArguments, ResourceLimitError
from fbmdim.percolation import (PercolationSample, box_slope, extinction_probability, generation_sizes,
                                simulate, surviving_sample, survivor_counts, tail_check, window_event)
from fbmdim.rng import ensemble_seeds


def test_forced_keep_and_extinct():
    full = simulate(0.5, 8, 1, keep_prob=1.0)
    assert survivor_counts(full) == [2**k for k in range(1, 9)]
    dead = simulate(0.5, 8, 1, keep_prob=0.0)
    assert survivor_counts(dead) == [0] * 8
    assert window_event(dead, 0.2).passed
    with pytest.raises(ResourceLimitError):
        simulate(0.5, 25, 1)
    with pytest.raises(InvalidArguments):
        simulate(1.0, 4, 1)


def test_forced_keep_fails_window_event_at_depth():
    # 2^(n-m) > n^2 2^((n-m)/2) once (n-m)/2 > 2 log2 n
    full = simulate(0.5, 24, 1, keep_prob=1.0)
    rep = window_event(full, 0.2, 20, 24)
    assert not rep.passed and rep.rows[-1].count == 2**24


@given(st.sampled_from([0.2, 0.5, 0.8]), st.integers(0, 2**64 - 1))
def test_tree_is_parent_closed_and_deterministic(gamma, seed):
    s = simulate(gamma, 12, seed)
    assert s.parent_closed()
    assert all(z <= 2**k for k, z in enumerate(survivor_counts(s), start=1))
    t = simulate(gamma, 12, seed)
    assert all(np.array_equal(a, b) for a, b in zip(s.levels, t.levels))


def test_first_generation_keep_rate():
    gamma = 0.5
    kept = np.array([survivor_counts(simulate(gamma, 1, s))[0] for s in ensemble_seeds(5, 10_000)])
    p = 2**-gamma
    rate = kept.mean() / 2
    se = math.sqrt(p * (1 - p) / (2 * kept.size))
    assert abs(rate - p) < 5 * se


def test_mean_generation_size():
    z = np.array([survivor_counts(simulate(0.5, 8, s)) for s in ensemble_seeds(8, 4000)], dtype=float)
    for k in (2, 5, 8):
        mean, se = z[:, k - 1].mean(), z[:, k - 1].std() / math.sqrt(len(z))
        assert abs(mean - 2 ** (0.5 * k)) < 5 * se


def test_extinction_probability():
    p = 2**-0.5
    assert extinction_probability(0.5) == pytest.approx(((1 - p) / p) ** 2, abs=1e-11)
    assert extinction_probability(0.5) == pytest.approx(0.171572875, abs=1e-9)
    assert extinction_probability(0.5, keep_prob=1.0) == 0.0
    for g in np.linspace(0.05, 0.95, 10):
        assert extinction_probability(g) < 1


def test_extinction_matches_simulation():
    z = generation_sizes(0.5, 20, 20_000, seed=3)
    freq = np.mean(z == 0)
    se = math.sqrt(freq * (1 - freq) / z.size)
    assert abs(freq - extinction_probability(0.5)) < 5 * se


def test_tail_check_examples():
    t = tail_check(0.5, 12, [1, 2, 3, 4], 10_000, seed=1)
    assert t.strictly_decreasing and t.decay_rate > 0
    big = tail_check(0.5, 6, [9.0], 1000, seed=1)     # 9 * 2^3 > 2^6
    assert big.rows[0].freq == 0
    small = tail_check(0.5, 12, [1e-9], 20_000, seed=2)
    surv = 1 - extinction_probability(0.5)
    assert abs(small.rows[0].freq - surv) < 5 * small.rows[0].stderr + 0.01
    assert small.to_csv().splitlines()[0] == "k,threshold,freq,stderr"
    with pytest.raises(InvalidArguments):
        tail_check(0.5, 5, [1], 10)


def test_hex_round_trip():
    s = simulate(0.4, 9, 77)
    rows = s.to_hex()
    assert len(rows) == 9 and len(rows[0]) == 2
    back = PercolationSample.from_hex(0.4, rows, 77)
    assert all(np.array_equal(a, b) for a, b in zip(s.levels, back.levels))


def test_surviving_sample_reports_redraws():
    seen = [surviving_sample(0.9, 10, s) for s in range(30)]
    assert all(x.survived for x in seen)
    assert any(x.attempt > 0 for x in seen)
    assert box_slope(seen[0], 3, 10) == pytest.approx(
        np.polyfit(np.arange(3, 11), np.log2(survivor_counts(seen[0])[2:10]), 1)[0])


def test_window_event_rows_match_brute_force():
    s = surviving_sample(0.5, 10, 4)
    rep = window_event(s, 0.3)
    for row in rep.rows:
        n = row.n
        worst = 0.0
        for m in range(0, math.floor(0.7 * n + 1e-9) + 1):
            for I in set((s.levels[n] >> (n - m)).tolist()):
                c = int(np.sum((s.levels[n] >> (n - m)) == I))
                worst = max(worst, c / (n * n * 2 ** (0.5 * (n - m))))
        assert row.count / row.threshold == pytest.approx(worst)
    assert rep.to_csv().splitlines()[0] == "n,m,count,threshold,pass"
