import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fbmdim.errors import InvalidArguments
from fbmdim.selfsimilar import (Ifs, attractor_cover, box_slope, check_disjoint_images, cylinders,
                                similarity_dimension, similarity_dimension_full)

CANTOR = Ifs(((1 / 3, 0.0), (1 / 3, 2 / 3)))


def moran_oracle(ratios, tol=1e-13):
    # root of sum r^s = 1 by secant iterations on log-space, independent of the bisection
    f = lambda s: sum(r**s for r in ratios) - 1
    a, b = 0.0, 1.0
    for _ in range(200):
        fa, fb = f(a), f(b)
        if fb == fa:
            break
        a, b = b, b - fb * (b - a) / (fb - fa)
        if abs(b - a) < tol:
            break
    return b


def test_similarity_dimension_examples():
    assert similarity_dimension(CANTOR) == pytest.approx(math.log(2) / math.log(3), abs=1e-10)
    assert similarity_dimension(CANTOR) == pytest.approx(0.630930, abs=1e-6)
    assert similarity_dimension(Ifs(((0.5, 0.0),))) == 0.0
    assert similarity_dimension(Ifs(((0.5, 0.0), (0.5, 0.5)))) == pytest.approx(1.0, abs=1e-10)


def test_overlapping_system_raw_exceeds_one():
    sd = similarity_dimension_full(Ifs(((0.5, 0.0), (0.5, 0.25), (0.5, 0.5))))
    assert sd.raw == pytest.approx(math.log(3) / math.log(2), abs=1e-10)
    assert sd.capped == 1.0 and sd.exceeds_line


@given(st.lists(st.floats(0.05, 0.6), min_size=2, max_size=4))
def test_similarity_dimension_matches_secant(ratios):
    ifs = Ifs(tuple((r, 0.0) for r in ratios))
    assert similarity_dimension(ifs) == pytest.approx(moran_oracle(ratios), abs=1e-9)


def test_invalid_maps():
    with pytest.raises(InvalidArguments):
        Ifs(((1.0, 0.0),))
    with pytest.raises(InvalidArguments):
        Ifs(((0.5, 0.6),))
    with pytest.raises(InvalidArguments):
        Ifs(())


def test_attractor_cover_examples():
    assert len(attractor_cover(Ifs(((0.5, 0.0), (0.5, 0.5))), 5)) == 32
    assert list(attractor_cover(Ifs(((0.5, 0.0),)), 4).at_order(4)) == [0]


def test_cantor_cover_against_orbit_sampling():
    pts = [sum(d * 2 * 3.0 ** -(i + 1) for i, d in enumerate(bits))
           for bits in itertools.product((0, 1), repeat=12)]
    sampled = {int(math.floor(x * 64)) for x in pts}
    fam = set(attractor_cover(CANTOR, 6).at_order(6).tolist())
    assert sampled <= fam
    n_cyl = len(cylinders(CANTOR, 6)[0])
    assert len(fam) - len(sampled) <= 2 * n_cyl
    assert len(fam) == 28


def test_negative_ratio_maps():
    flip = Ifs(((-1 / 3, 1 / 3), (1 / 3, 2 / 3)))    # same attractor as the Cantor set
    assert attractor_cover(flip, 8) == attractor_cover(CANTOR, 8)


def test_disjoint_images_examples():
    assert check_disjoint_images(CANTOR)
    assert not check_disjoint_images(Ifs(((0.5, 0.0), (0.5, 0.25))))
    assert check_disjoint_images(Ifs(((0.5, 0.0), (0.5, 0.5))))


disjoint_ratios = st.lists(st.floats(0.15, 0.45), min_size=2, max_size=3)


def layout(rs):
    # place the images left to right with the spare room split evenly
    gap = (1 - sum(rs)) / (len(rs) - 1)
    ts, t = [], 0.0
    for r in rs:
        ts.append(t)
        t += r + gap
    return Ifs(tuple(zip(rs, ts)))


@given(disjoint_ratios)
def test_box_slope_tracks_similarity_dimension(rs):
    assume(sum(rs) < 1)
    ifs = layout(rs)
    assert check_disjoint_images(ifs)
    assert abs(box_slope(ifs, 8, 16) - min(similarity_dimension(ifs), 1)) < 0.05


@given(st.lists(st.tuples(st.floats(-0.6, 0.6).filter(lambda r: abs(r) > 0.1), st.floats(0, 1)),
                min_size=1, max_size=3), st.integers(1, 10))
def test_cover_refines(maps, n):
    maps = [(r, min(max(t, max(0.0, -r)), min(1.0, 1 - r))) for r, t in maps]
    ifs = Ifs(tuple(maps))
    coarse = attractor_cover(ifs, n).at_order(n)
    fine = attractor_cover(ifs, n + 1).at_order(n + 1)
    assert np.all(np.isin(fine >> 1, coarse))
