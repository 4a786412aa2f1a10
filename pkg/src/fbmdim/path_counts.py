"""Collision counts of a sampled path against value intervals.

``B(U)`` for a dyadic ``U`` is approximated by the grid envelope
``[min, max]`` of sampled values in ``U`` (both endpoints included).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .digits import DigitSetSpec, cover_inside, find_dense_window
from .dyadic import DyadicInterval, IntervalFamily, ValueInterval, value_width
from .errors import InvalidArguments
from .estimators import fit_slope
from .fbm import FbmPath


def _check_order(path: FbmPath, n: int) -> None:
    if not 0 <= n <= path.order:
        raise InvalidArguments(f"order {n} exceeds path order {path.order}")


def member_ranges(path: FbmPath, U: IntervalFamily, n: int,
                  conservative: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(index, lo, hi)`` for the order-``n`` members of ``U``.

    ``conservative`` widens each envelope by the modulus at grid scale.
    """
    _check_order(path, n)
    idx = U.at_order(n)
    lo_all, hi_all = path.ranges(n)
    lo, hi = lo_all[idx], hi_all[idx]
    if conservative:
        s = path.discretization_slack()
        lo, hi = lo - s, hi + s
    return idx, lo, hi


def _q_spans(lo: np.ndarray, hi: np.ndarray, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices ``q`` with closed ``J_q`` meeting ``[lo, hi]``: ``ceil(lo/w)-1 .. floor(hi/w)``."""
    return np.ceil(lo / w).astype(np.int64) - 1, np.floor(hi / w).astype(np.int64)


def g_count(path: FbmPath, U: IntervalFamily, n: int, q: int, conservative: bool = False) -> int:
    """Order-``n`` members whose range meets the closed ``J_{n,q}``."""
    _, lo, hi = member_ranges(path, U, n, conservative)
    w = value_width(path.hurst, n)
    a, b = _q_spans(lo, hi, w)
    return int(np.count_nonzero((a <= q) & (q <= b)))


def p_count(path: FbmPath, U: IntervalFamily, n: int, q: int) -> int:
    """Order-``n`` members whose left-endpoint value lies in ``[q w, (q+1) w)``."""
    _check_order(path, n)
    idx = U.at_order(n)
    v = path.values[idx << (path.order - n)]
    w = value_width(path.hurst, n)
    return int(np.count_nonzero(np.floor(v / w).astype(np.int64) == q))


def g_profile(path: FbmPath, U: IntervalFamily, n: int,
              conservative: bool = False) -> tuple[int, np.ndarray]:
    """``(q0, counts)`` with ``counts[i] = g_count(..., q0 + i)`` over all realized ``q``."""
    _, lo, hi = member_ranges(path, U, n, conservative)
    if lo.size == 0:
        return 0, np.zeros(0, dtype=np.int64)
    a, b = _q_spans(lo, hi, value_width(path.hurst, n))
    q0 = int(a.min())
    diff = np.zeros(int(b.max()) - q0 + 2, dtype=np.int64)
    np.add.at(diff, a - q0, 1)
    np.add.at(diff, b - q0 + 1, -1)
    return q0, np.cumsum(diff)[:-1]


def p_profile(path: FbmPath, U: IntervalFamily, n: int) -> tuple[int, np.ndarray]:
    _check_order(path, n)
    idx = U.at_order(n)
    if idx.size == 0:
        return 0, np.zeros(0, dtype=np.int64)
    v = path.values[idx << (path.order - n)]
    q = np.floor(v / value_width(path.hurst, n)).astype(np.int64)
    q0 = int(q.min())
    return q0, np.bincount(q - q0)


# ---------------------------------------------------------------- events

@dataclass(frozen=True)
class EventRow:
    n: int
    max_q: int | None
    count: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.count <= self.threshold


@dataclass(frozen=True)
class EventReport:
    event: str
    eps: float
    rows: tuple[EventRow, ...]
    location: str = "max_q"     # CSV name of the worst-location column

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def worst_ratio(self) -> float:
        return max((r.count / r.threshold for r in self.rows), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", self.location, "count", "threshold", "pass"])
        for r in self.rows:
            w.writerow([r.n, "" if r.max_q is None else r.max_q, r.count, repr(r.threshold), int(r.passed)])
        return buf.getvalue()


def _argmax_row(n: int, q0: int, counts: np.ndarray, threshold: float) -> EventRow:
    if counts.size == 0 or counts.max() == 0:
        return EventRow(n, None, 0, threshold)
    i = int(np.argmax(counts))          # first maximizer = smallest q
    return EventRow(n, q0 + i, int(counts[i]), threshold)


def gamma_event(path: FbmPath, U: IntervalFamily, eps: float, n_lo: int, n_hi: int,
                conservative: bool = False) -> EventReport:
    """``max_q G_{n,q}(U) <= 2^{eps n}`` for each ``n`` in ``[n_lo, n_hi]``."""
    if eps <= 0:
        raise InvalidArguments("eps must be positive")
    _check_order(path, n_hi)
    rows = []
    for n in range(n_lo, n_hi + 1):
        q0, counts = g_profile(path, U, n, conservative)
        rows.append(_argmax_row(n, q0, counts, 2.0 ** (eps * n)))
    return EventReport("gamma", eps, tuple(rows))


def pi_event(path: FbmPath, U: IntervalFamily, eps: float, n_lo: int, n_hi: int) -> EventReport:
    """``P_{n,q}(U) <= 2^{eps n}`` for each ``n`` in range and ``|q| <= n 2^{alpha n}``."""
    if eps <= 0:
        raise InvalidArguments("eps must be positive")
    _check_order(path, n_hi)
    rows = []
    for n in range(n_lo, n_hi + 1):
        q0, counts = p_profile(path, U, n)
        qs = q0 + np.arange(counts.size)
        counts = np.where(np.abs(qs) <= n * 2.0 ** (path.hurst * n), counts, 0)
        rows.append(_argmax_row(n, q0, counts, 2.0 ** (eps * n)))
    return EventReport("pi", eps, tuple(rows))


# ---------------------------------------------------------------- sets

def level_set(path: FbmPath, y: float, n: int) -> IntervalFamily:
    """Order-``n`` intervals whose grid envelope contains ``y``."""
    _check_order(path, n)
    lo, hi = path.ranges(n)
    return IntervalFamily.at_single_order(n, np.flatnonzero((lo <= y) & (y <= hi)))


def record_set(path: FbmPath, n: int) -> IntervalFamily:
    """Order-``n`` intervals containing a grid time where ``B`` equals its running max."""
    _check_order(path, n)
    v = path.values
    rec = np.flatnonzero(v >= np.maximum.accumulate(v))
    shift = path.order - n
    left = rec >> shift
    # a record on a shared endpoint belongs to both neighbours
    on_edge = (rec & ((1 << shift) - 1)) == 0
    idx = np.concatenate([left, left[on_edge & (left > 0)] - 1])
    idx = idx[idx < (1 << n)]
    return IntervalFamily.at_single_order(n, idx)


def preimage_cover(path: FbmPath, E, D_cover: IntervalFamily, n: int,
                   conservative: bool = False) -> IntervalFamily:
    """Members of ``D_cover`` at order ``n`` whose range meets some ``J`` in ``E``."""
    idx, lo, hi = member_ranges(path, D_cover, n, conservative)
    hit = np.zeros(idx.size, dtype=bool)
    for J in E:
        if not isinstance(J, ValueInterval):
            raise InvalidArguments("E must contain ValueInterval objects")
        hit |= (lo <= J.hi) & (hi >= J.lo)
    return IntervalFamily.at_single_order(n, idx[hit])


def image_count(path: FbmPath, U: IntervalFamily, n: int) -> int:
    """Number of order-``n`` value intervals meeting the range of some order-``n`` member."""
    q0, counts = g_profile(path, U, n)
    return int(np.count_nonzero(counts))


# ---------------------------------------------------------------- witness

@dataclass(frozen=True)
class WitnessLevel:
    level: int
    m: int
    n: int
    parents: int
    population: int     # intervals in each parent's window
    kept: int
    min_kept: int
    threshold: float    # 2^{eps(n-m)} / (3n)

    @property
    def passed(self) -> bool:
        return self.min_kept >= self.threshold


@dataclass
class WitnessResult:
    family: IntervalFamily | None
    levels: list[WitnessLevel] = field(default_factory=list)
    reason: str = ""
    witness_slope: float = math.nan
    image_slope: float = math.nan
    hurst: float = math.nan

    @property
    def found(self) -> bool:
        return self.family is not None and len(self.levels) > 0

    @property
    def gap(self) -> float:
        """``witness_slope / alpha - image_slope``; positive when the image is too small."""
        return self.witness_slope / self.hurst - self.image_slope

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "m", "n", "parents", "population", "kept", "min_kept", "threshold", "pass"])
        for lv in self.levels:
            w.writerow([lv.level, lv.m, lv.n, lv.parents, lv.population, lv.kept, lv.min_kept,
                        repr(lv.threshold), int(lv.passed)])
        return buf.getvalue()


def ancestors_at(U: IntervalFamily, k: int) -> IntervalFamily:
    """Order-``k`` ancestors of the members of ``U`` (all orders must be ``>= k``)."""
    orders, idx = U.orders, U.indices
    if orders.size and orders.min() < k:
        raise InvalidArguments("family has members coarser than the requested order")
    return IntervalFamily.at_single_order(k, idx >> (orders - k))


def witness_search(path: FbmPath, spec: DigitSetSpec, alpha: float, eps: float, depth: int, *,
                   refine: bool = True, min_population: int = 8) -> WitnessResult:
    """Greedy multi-level search for a compact ``C`` in ``D_S`` whose image is small.

    Each level finds a dense window ``(m, n]`` past the previous level, and
    inside every kept interval keeps the order-``n`` cover members whose
    ranges meet the single most popular ``J`` in the order-``n`` value grid.
    """
    depth = min(depth, path.order)
    current = IntervalFamily.at_single_order(0, [0])
    start = 0
    levels: list[WitnessLevel] = []
    while True:
        win = find_dense_window(spec, alpha, eps, depth, m_min=start, refine=refine,
                                min_population=min_population)
        if win is None:
            break
        m, n = win.m, win.n
        cur_order = int(current.orders[0])
        kept_idx, per_parent = [], []
        population = 0
        for p in current.at_order(cur_order):
            anchor = DyadicInterval(m, int(p) << (m - cur_order))
            members = cover_inside(spec, anchor, n)
            population = len(members)
            q0, counts = g_profile(path, members, n)
            q = q0 + int(np.argmax(counts))
            sel = preimage_cover(path, [ValueInterval(n, q, path.hurst)], members, n)
            kept_idx.append(sel.at_order(n))
            per_parent.append(len(sel))
        current = IntervalFamily.at_single_order(n, np.concatenate(kept_idx))
        levels.append(WitnessLevel(len(levels) + 1, m, n, len(per_parent), population,
                                   len(current), min(per_parent),
                                   2.0 ** (eps * (n - m)) / (3 * n)))
        start = n
    if not levels:
        return WitnessResult(None, [], reason=(
            f"no dense window with alpha+eps={alpha + eps:g} up to order {depth}; "
            "consistent with modified Assouad dimension <= alpha"))
    res = WitnessResult(current, levels, hurst=path.hurst)
    lo, hi = levels[0].m, levels[-1].n
    ks = np.arange(lo, hi + 1)
    sizes = np.array([len(ancestors_at(current, int(k))) for k in ks], dtype=float)
    images = np.array([image_count(path, ancestors_at(current, int(k)), int(k)) for k in ks],
                      dtype=float)
    res.witness_slope = (math.log2(sizes[-1]) - math.log2(sizes[0])) / (hi - lo)
    res.image_slope = (math.log2(images[-1]) - math.log2(images[0])) / (path.hurst * (hi - lo))
    return res
