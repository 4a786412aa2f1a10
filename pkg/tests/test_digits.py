import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbmdim.digits import (DensityProfile, DigitSetSpec, GeometricBlocks, Periodic, blocks, cover,
                           cover_inside, density, exact_dim_values, exact_dims, find_dense_window,
                           long_window_max, periodic, superexp_blocks)
from fbmdim.dyadic import DyadicInterval, max_window_start
from fbmdim.errors import InvalidArguments, ResourceLimitError, UnsupportedSpec


def members_oracle(spec, n):
    """Membership of 1..n by the defining rules, written out longhand."""
    out = set()
    for i in range(1, min(n, spec.n0) + 1):
        if spec.prefix[i - 1] == "1":
            out.add(i)
    tail = spec.tail
    if isinstance(tail, Periodic):
        out |= {i for i in range(spec.n0 + 1, n + 1) if tail.pattern[(i - 1) % len(tail.pattern)] == "1"}
    else:
        a = tail.start
        while a < n:
            b = math.ceil(tail.theta * a)
            out |= {i for i in range(a + 1, b + 1) if spec.n0 < i <= n}
            a = math.ceil(b * b / tail.theta) if tail.mode == "superexp" else math.ceil(tail.rho * b)
    return out


specs = st.one_of(
    st.builds(periodic, st.text("01", min_size=1, max_size=7), st.text("01", max_size=5)),
    st.builds(lambda a, th, rh, pre: blocks(a, Fraction(th, 2), Fraction(rh, 2), prefix=pre),
              st.integers(1, 9), st.integers(3, 8), st.integers(2, 8), st.text("01", max_size=4)),
    st.builds(lambda a, pre: blocks(a, 2, mode="superexp", prefix=pre), st.integers(2, 5),
              st.text("01", max_size=4)),
)


def test_density_examples():
    assert density(periodic("01"), 0, 10) == Fraction(1, 2)
    assert density(periodic("1"), 3, 17) == 1
    spec = blocks(4, 2, 8)     # blocks (4,8], (64,128], ...
    assert spec.tail.blocks_upto(100)[:2] == [(4, 8), (64, 128)]
    assert density(spec, 4, 8) == 1
    with pytest.raises(InvalidArguments):
        density(spec, 5, 5)


@given(specs, st.integers(0, 3000), st.integers(1, 400))
def test_density_matches_enumeration(spec, m, length):
    n = m + length
    S = members_oracle(spec, n)
    d = density(spec, m, n)
    assert d * length == len([i for i in S if m < i <= n])
    assert all((i in spec) == (i in S) for i in range(1, min(n, 300) + 1))


def test_superexp_blocks_layout():
    spec = superexp_blocks()
    assert spec.tail.blocks_upto(300) == [(2, 4), (8, 16), (128, 256)]
    assert spec.positions(20) == [3, 4] + list(range(9, 17))


def bit_oracle(spec, n):
    S = members_oracle(spec, n)
    out = []
    for p in range(1 << n):
        bits = format(p, f"0{n}b") if n else ""
        if all(b == "0" or (i + 1) in S for i, b in enumerate(bits)):
            out.append(p)
    return out


def test_cover_examples():
    assert list(cover(periodic("0"), 3).at_order(3)) == [0]
    s1 = DigitSetSpec("1", Periodic("0"))
    assert list(cover(s1, 2).at_order(2)) == [0, 2]
    assert list(cover(s1, 2, boundary_neighbors=True).at_order(2)) == [0, 1, 2]
    assert list(cover(DigitSetSpec("11", Periodic("0")), 2).at_order(2)) == [0, 1, 2, 3]


@given(specs, st.integers(0, 10))
def test_cover_matches_bit_enumeration(spec, n):
    fam = cover(spec, n)
    assert list(fam.at_order(n)) == bit_oracle(spec, n)
    assert len(fam) == 2 ** len(members_oracle(spec, n))


def test_cover_resource_bound():
    with pytest.raises(ResourceLimitError, match="2\\^24"):
        cover(periodic("1"), 25)


def test_cover_inside_restricts_to_subinterval():
    spec = periodic("10")
    sub = cover_inside(spec, DyadicInterval(3, 4), 7)
    full = cover(spec, 7).at_order(7)
    assert set(sub.at_order(7)) == {p for p in full if p >> 4 == 4}


def test_exact_dims_examples():
    assert exact_dim_values(periodic("10")) == (Fraction(1, 2),) * 4
    assert exact_dim_values(periodic("1")) == (1, 1, 1, 1)
    assert exact_dim_values(superexp_blocks()) == (0, Fraction(1, 2), 1, 1)
    rep = exact_dims(periodic("10"))
    assert {e.method for e in rep.entries().values()} == {"exact"}
    with pytest.raises(UnsupportedSpec):
        exact_dim_values(DigitSetSpec("", tail=object()))


def test_geometric_blocks_closed_forms_against_truncation():
    spec = blocks(4, 2, 4)                 # (4,8], (32,64], ..., (16384,32768]
    h, p, ma, a = exact_dim_values(spec)
    assert (h, p) == (Fraction(1, 7), Fraction(4, 7))
    assert abs(float(density(spec, 0, 32768)) - 4 / 7) < 1e-3
    assert abs(float(density(spec, 0, 16384)) - 1 / 7) < 1e-3
    # a full-density window of length n/2 sits below every block end
    assert density(spec, 16384, 32768) == 1 and ma == a == 1


def test_superexp_closed_forms_against_truncation():
    spec = superexp_blocks()               # ..., (2^15, 2^16]
    assert float(density(spec, 0, 1 << 16)) == pytest.approx(0.5, abs=0.01)
    assert float(density(spec, 0, 1 << 15)) < 0.005
    assert density(spec, 1 << 15, 1 << 16) == 1


@given(specs)
def test_exact_dims_chain(spec):
    vals = exact_dim_values(spec)
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert all(0 <= v <= 1 for v in vals)


@pytest.mark.parametrize("pattern", ["10", "01", "110", "1000", "10110"])
def test_periodic_profile_close_to_exact(pattern):
    spec = periodic(pattern)
    prof = DensityProfile.build(spec, 10_000)
    rho = float(Fraction(pattern.count("1"), len(pattern)))
    P, n = len(pattern), 10_000
    assert abs(prof.d[-1] - rho) < 1e-2
    for j, eps in enumerate(prof.eps_grid):
        shortest = n - max_window_start(n, eps)
        # a window of length L over a period-P pattern is off by at most P/L
        assert abs(prof.maxwin[j, -1] - rho) <= P / shortest
        if eps * n >= 100 * P:
            assert abs(prof.maxwin[j, -1] - rho) < 1e-2
    assert np.all((prof.maxwin >= 0) & (prof.maxwin <= 1))


def test_profile_csv_and_integrality():
    prof = DensityProfile.build(periodic("110"), 30)
    assert np.allclose(prof.d * np.arange(1, 31), np.round(prof.d * np.arange(1, 31)))
    header, first = prof.to_csv().splitlines()[:2]
    assert header.startswith("n,d_n,maxwin_0.5,maxwin_0.25")
    assert first.split(",")[:2] == ["1", "1.0"]


def test_long_window_max_periodic():
    # windows of length >= 8 over "10": best is 5/9
    assert long_window_max(periodic("10"), 8, 200) == pytest.approx(5 / 9)


def test_config_round_trip():
    for spec in (periodic("101", "11"), blocks(3, Fraction(5, 2), 3), superexp_blocks()):
        assert DigitSetSpec.from_config(spec.to_config()) == spec
    with pytest.raises(UnsupportedSpec):
        DigitSetSpec.from_config({"tail": {"kind": "random"}})


def test_find_dense_window_examples():
    w = find_dense_window(blocks(4, 2, 8), 0.5, 0.4, 20)
    assert w is not None and 4 <= w.m < w.n <= 8
    assert density(blocks(4, 2, 8), w.m, w.n) == 1
    assert find_dense_window(periodic("0"), 0.3, 0.2, 40) is None
    assert find_dense_window(periodic("10"), 0.6, 0.3, 60) is None
    assert find_dense_window(superexp_blocks(), 0.5, 0.2, 3) is None


def window_scan(spec, alpha, eps, n_max, min_population=8):
    hits = []
    for n in range(1, n_max + 1):
        for m in range(0, min(max_window_start(n, eps), n - 1) + 1):
            c = len([i for i in members_oracle(spec, n) if i > m])
            if 2**c >= min_population and c >= (alpha + eps) * (n - m) - 1e-12:
                hits.append((m, n))
    return hits


@given(specs, st.sampled_from([0.3, 0.5, 0.6]), st.sampled_from([0.1, 0.2, 0.3]),
       st.sampled_from(["largest", "earliest"]), st.booleans())
def test_find_dense_window_agrees_with_scan(spec, alpha, eps, prefer, refine):
    n_max = 30
    hits = window_scan(spec, alpha, eps, n_max)
    w = find_dense_window(spec, alpha, eps, n_max, prefer=prefer, refine=refine)
    assert (w is None) == (not hits)
    if w is None:
        return
    c = spec.count(w.n) - spec.count(w.m)
    assert c >= (alpha + eps) * (w.n - w.m) - 1e-12 and w.population == 2**c >= 8
    if not refine:
        assert (w.m, w.n) in hits
        best = max(n for _, n in hits) if prefer == "largest" else min(n for _, n in hits)
        assert w.n == best
    else:
        # refinement only narrows a window found by the scan
        assert any(m <= w.m and w.n <= n for m, n in hits)
