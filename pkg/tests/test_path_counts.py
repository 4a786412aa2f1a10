import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbmdim.digits import periodic, superexp_blocks, cover
from fbmdim.dyadic import IntervalFamily, ValueInterval, value_width
from fbmdim.errors import InvalidArguments
from fbmdim.fbm import sample_path
from fbmdim.path_counts import (g_count, g_profile, gamma_event, image_count, level_set, p_count,
                                p_profile, pi_event, preimage_cover, record_set, witness_search)

from conftest import stub_path

FULL3 = IntervalFamily.full(3)


def test_g_count_examples(zero_path, linear_path):
    assert g_count(zero_path, FULL3, 3, 0) == 8
    assert g_count(zero_path, FULL3, 3, -1) == 8
    assert g_count(linear_path, IntervalFamily.full(2), 2, 0) == 3
    with pytest.raises(InvalidArguments):
        g_count(zero_path, FULL3, 9, 0)


def test_p_count_examples(zero_path, linear_path):
    assert p_count(zero_path, FULL3, 3, 0) == 8
    assert p_count(zero_path, FULL3, 3, -1) == 0
    assert p_count(linear_path, IntervalFamily.full(4), 4, 0) == 4
    assert p_count(linear_path, IntervalFamily(), 4, 0) == 0


def test_event_examples(zero_path):
    assert not gamma_event(zero_path, FULL3, 0.5, 3, 3).passed
    assert gamma_event(zero_path, IntervalFamily(), 0.5, 1, 5).passed
    assert not pi_event(zero_path, IntervalFamily.full(6), 0.5, 6, 6).passed
    assert pi_event(zero_path, IntervalFamily(), 0.5, 1, 5).passed


def test_event_csv(zero_path):
    rep = gamma_event(zero_path, FULL3, 0.5, 2, 3)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,max_q,count,threshold,pass"
    assert lines[1].startswith("2,,0,") and lines[2].startswith("3,-1,8,")


def test_level_set_examples(zero_path):
    lin = stub_path(lambda t: t)
    assert list(level_set(lin, 0.5, 4).at_order(4)) == [7, 8]
    assert len(level_set(lin, 1.5, 4)) == 0
    assert len(level_set(zero_path, 0.0, 5)) == 32


def test_record_set_examples():
    assert len(record_set(stub_path(lambda t: t), 5)) == 32
    assert list(record_set(stub_path(lambda t: -t), 5).at_order(5)) == [0]


def test_preimage_cover_examples(linear_path):
    D = IntervalFamily.full(2)
    assert preimage_cover(linear_path, [ValueInterval(2, 0, 0.5)], D, 2) == \
        IntervalFamily([(2, 0), (2, 1), (2, 2)])
    assert len(preimage_cover(linear_path, [], D, 2)) == 0
    everything = [ValueInterval(0, q, 0.5) for q in (-1, 0, 1)]
    assert preimage_cover(linear_path, everything, D, 2) == D


paths = st.builds(lambda a, s: sample_path(a, 8, s), st.sampled_from([0.3, 0.5, 0.7]),
                  st.integers(0, 2**64 - 1))
families = st.integers(1, 8).flatmap(
    lambda n: st.lists(st.integers(0, (1 << n) - 1), max_size=60).map(
        lambda idx: (n, IntervalFamily.at_single_order(n, idx))))


def g_brute(path, U, n, q):
    J = ValueInterval(n, q, path.hurst)
    lo, hi = path.ranges(n)
    return sum(1 for p in U.at_order(n) if lo[p] <= J.hi and hi[p] >= J.lo)


@given(paths, families)
def test_profiles_match_pointwise_counts(path, nf):
    n, U = nf
    q0, counts = g_profile(path, U, n)
    for i, c in enumerate(counts):
        assert c == g_count(path, U, n, q0 + i) == g_brute(path, U, n, q0 + i)
    q0p, pc = p_profile(path, U, n)
    assert pc.sum() == len(U.at_order(n))
    for i, c in enumerate(pc):
        assert c == p_count(path, U, n, q0p + i)


@given(paths, families)
def test_p_interior_implies_g(path, nf):
    n, U = nf
    w = value_width(path.hurst, n)
    v = path.values[U.at_order(n) << (path.order - n)]
    for x in v:
        q = int(np.floor(x / w))
        assert g_count(path, U, n, q) >= p_count(path, U, n, q) > 0


@given(paths, families)
def test_preimage_cover_size_is_g_count(path, nf):
    n, U = nf
    q0, counts = g_profile(path, U, n)
    for i, c in enumerate(counts):
        assert len(preimage_cover(path, [ValueInterval(n, q0 + i, path.hurst)], U, n)) == c


@given(paths, families, st.sampled_from([0.2, 0.5, 0.9]))
def test_gamma_pass_bounds_every_preimage(path, nf, eps):
    n, U = nf
    ev = gamma_event(path, U, eps, n, n)
    if ev.passed:
        q0, counts = g_profile(path, U, n)
        for i in range(counts.size):
            J = ValueInterval(n, q0 + i, path.hurst)
            assert len(preimage_cover(path, [J], U, n)) <= 2 ** (eps * n)


@given(paths, st.integers(0, 8))
def test_record_set_matches_scan(path, n):
    v = path.values
    run = -np.inf
    expect = set()
    step = 1 << (path.order - n)
    for k, x in enumerate(v):
        if x >= run:
            expect.add(min(k // step, (1 << n) - 1))
            if k % step == 0 and k > 0:
                expect.add(k // step - 1)
        run = max(run, x)
    assert set(record_set(path, n).at_order(n).tolist()) == expect


def test_conservative_widening_only_adds(linear_path):
    p = sample_path(0.5, 10, 4)
    U = cover(periodic("10"), 6)
    plain = gamma_event(p, U, 0.5, 6, 6).rows[0].count
    wide = gamma_event(p, U, 0.5, 6, 6, conservative=True).rows[0].count
    assert wide >= plain


def test_witness_absent_for_low_density_set():
    res = witness_search(sample_path(0.6, 12, 1), periodic("10"), 0.6, 0.3, 12)
    assert not res.found and "no dense window" in res.reason


def test_witness_absent_below_first_block():
    res = witness_search(sample_path(0.5, 12, 1), superexp_blocks(), 0.5, 0.2, 3)
    assert not res.found


def test_witness_superexp_levels():
    res = witness_search(sample_path(0.5, 18, 11), superexp_blocks(), 0.5, 0.2, 18)
    assert res.found and len(res.levels) >= 2
    assert [(lv.m, lv.n) for lv in res.levels] == [(9, 12), (12, 17)]
    for lv in res.levels:
        assert lv.min_kept >= lv.threshold
        assert lv.population == 2 ** (superexp_blocks().count(lv.n) - superexp_blocks().count(lv.m))
    # the kept family lies in the cover of the digit set
    final = res.family
    n = res.levels[-1].n
    assert set(final.at_order(n)) <= set(cover(superexp_blocks(), n).at_order(n))
    assert res.gap == pytest.approx(res.witness_slope / 0.5 - res.image_slope)
    assert res.to_csv().splitlines()[0].startswith("level,m,n,parents")


def test_image_count_full_interval(linear_path):
    # closed intervals of width 1/4 meeting [0, 1]: q = -1..4, both ends touching
    assert image_count(linear_path, IntervalFamily.full(4), 4) == 6
