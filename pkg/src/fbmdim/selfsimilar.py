"""Self-similar subsets of [0, 1] generated by finitely many similarities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dyadic import IntervalFamily
from .errors import InvalidArguments, ResourceLimitError

MAX_CYLINDERS = 1 << 24
_RANGE_TOL = 1e-12


@dataclass(frozen=True)
class Ifs:
    """Maps ``x -> r_i x + t_i``; each must send [0, 1] into [0, 1]."""

    maps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        maps = tuple((float(r), float(t)) for r, t in self.maps)
        if not maps:
            raise InvalidArguments("an IFS needs at least one map")
        for r, t in maps:
            if not 0 < abs(r) < 1:
                raise InvalidArguments(f"ratio {r} is not contracting")
            lo, hi = sorted((t, r + t))
            if lo < -_RANGE_TOL or hi > 1 + _RANGE_TOL:
                raise InvalidArguments(f"map ({r}, {t}) does not send [0,1] into [0,1]")
        object.__setattr__(self, "maps", maps)

    @classmethod
    def from_config(cls, maps: Iterable[Sequence[float]]) -> Ifs:
        return cls(tuple((r, t) for r, t in maps))

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r for r, _ in self.maps])

    @property
    def translations(self) -> np.ndarray:
        return np.array([t for _, t in self.maps])


@dataclass(frozen=True)
class SimilarityDimension:
    raw: float       # root of sum |r_i|^s = 1, may exceed 1 when images overlap
    capped: float    # min(raw, 1)

    @property
    def exceeds_line(self) -> bool:
        return self.raw > 1


def similarity_dimension_full(ifs: Ifs, tol: float = 1e-12) -> SimilarityDimension:
    r = np.abs(ifs.ratios)
    if len(r) == 1:
        return SimilarityDimension(0.0, 0.0)

    def f(s):
        return float(np.sum(r**s)) - 1.0

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        hi *= 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    return SimilarityDimension(s, min(s, 1.0))


def similarity_dimension(ifs: Ifs) -> float:
    """Root ``s`` of ``sum |r_i|^s = 1`` (raw, uncapped)."""
    return similarity_dimension_full(ifs).raw


def cylinders(ifs: Ifs, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper ends of cylinder images with diameter below ``2^-n``.

    Each cylinder ``F_{i1} o ... o F_{ij}`` is kept as ``(r, t)``; expansion stops
    per cylinder once ``|r| < 2^-n``.
    """
    rs, ts = ifs.ratios, ifs.translations
    r = np.ones(1)
    t = np.zeros(1)
    done_r, done_t = [], []
    target = 2.0**-n
    while r.size:
        small = np.abs(r) < target
        done_r.append(r[small])
        done_t.append(t[small])
        r, t = r[~small], t[~small]
        if not r.size:
            break
        if r.size * len(rs) + sum(map(len, done_r)) > MAX_CYLINDERS:
            raise ResourceLimitError(f"cylinder expansion exceeds {MAX_CYLINDERS} pieces")
        # compose: (F o G_i)(x) = r (r_i x + t_i) + t
        r, t = (np.outer(r, rs).ravel(), (r[:, None] * ts[None, :] + t[:, None]).ravel())
    r = np.concatenate(done_r)
    t = np.concatenate(done_t)
    ends = np.stack([t, t + r])
    return ends.min(axis=0), ends.max(axis=0)


def attractor_cover(ifs: Ifs, n: int) -> IntervalFamily:
    """Order-``n`` dyadic intervals meeting some level-``n`` cylinder image."""
    if n < 0:
        raise InvalidArguments("order must be >= 0")
    lo, hi = cylinders(ifs, n)
    scale = float(1 << n)
    first = np.floor(lo * scale).astype(np.int64)
    last = np.maximum(first, np.ceil(hi * scale).astype(np.int64) - 1)
    first = np.clip(first, 0, (1 << n) - 1)
    last = np.clip(last, 0, (1 << n) - 1)
    span = last - first + 1
    # cylinders are shorter than one cell, so each spans at most two cells
    idx = np.concatenate([first, (first + 1)[span > 1]])
    if idx.size > MAX_CYLINDERS:
        raise ResourceLimitError(f"cover exceeds {MAX_CYLINDERS} intervals")
    return IntervalFamily.at_single_order(n, idx)


def check_disjoint_images(ifs: Ifs) -> bool:
    """True iff the open images ``F_i((0, 1))`` are pairwise disjoint."""
    spans = sorted(tuple(sorted((t, r + t))) for r, t in ifs.maps)
    return all(b[0] >= a[1] for a, b in zip(spans, spans[1:]))


def box_slope(ifs: Ifs, lo: int = 8, hi: int = 16) -> float:
    """Least-squares slope of ``log2 |cover_n|`` against ``n`` on ``[lo, hi]``."""
    ns = np.arange(lo, hi + 1)
    sizes = np.array([len(attractor_cover(ifs, int(k))) for k in ns], dtype=float)
    return float(np.polyfit(ns, np.log2(sizes), 1)[0])


