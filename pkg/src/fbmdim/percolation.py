"""Fractal percolation on the dyadic tree.

Starting from [0, 1], every child of a kept interval is kept independently
with probability ``p = 2^-gamma``, so generation sizes form a Galton-Watson
process with Binomial(2, p) offspring.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dyadic import IntervalFamily, max_window_start
from .errors import InvalidArguments, ResourceLimitError, SamplingError
from .path_counts import EventReport, EventRow
from .rng import check_seed, retry_stream, uniforms

MAX_DEPTH = 24


def _keep_prob(gamma: float, keep_prob: float | None) -> float:
    if keep_prob is not None:
        if not 0 <= keep_prob <= 1:
            raise InvalidArguments("keep_prob must lie in [0, 1]")
        return float(keep_prob)
    if not 0 < gamma < 1:
        raise InvalidArguments(f"gamma must lie in (0, 1), got {gamma}")
    return 2.0**-gamma


@dataclass(frozen=True, eq=False)
class PercolationSample:
    gamma: float
    depth: int
    levels: tuple[np.ndarray, ...]    # levels[k] = sorted kept indices at order k; levels[0] = [0]
    seed: int
    attempt: int = 0

    def kept(self, k: int) -> np.ndarray:
        return self.levels[k]

    @property
    def survived(self) -> bool:
        return self.levels[-1].size > 0

    def family(self, k: int) -> IntervalFamily:
        return IntervalFamily.at_single_order(k, self.levels[k])

    def parent_closed(self) -> bool:
        return all(np.all(np.isin(self.levels[k + 1] >> 1, self.levels[k]))
                   for k in range(self.depth))

    def to_hex(self) -> list[str]:
        """Per-level bitmaps, bit ``p`` of level ``k`` set iff ``I_{k,p}`` is kept."""
        out = []
        for k in range(1, self.depth + 1):
            bits = np.zeros(max(8, 1 << k), dtype=np.uint8)
            bits[self.levels[k]] = 1
            out.append(np.packbits(bits, bitorder="little").tobytes().hex())
        return out

    @classmethod
    def from_hex(cls, gamma: float, rows: list[str], seed: int = 0, attempt: int = 0) -> PercolationSample:
        levels = [np.zeros(1, dtype=np.int64)]
        for k, row in enumerate(rows, start=1):
            bits = np.unpackbits(np.frombuffer(bytes.fromhex(row), dtype=np.uint8), bitorder="little")
            levels.append(np.flatnonzero(bits[: 1 << k]).astype(np.int64))
        return cls(gamma, len(rows), tuple(levels), seed, attempt)


def simulate(gamma: float, depth: int, seed: int, keep_prob: float | None = None,
             attempt: int = 0) -> PercolationSample:
    """Sample the kept tree to ``depth``; ``keep_prob`` overrides ``2^-gamma`` (test hook)."""
    p = _keep_prob(gamma, keep_prob)
    if not 0 <= depth <= MAX_DEPTH:
        raise ResourceLimitError(f"depth {depth} exceeds the bound {MAX_DEPTH}")
    gen = retry_stream(check_seed(seed), attempt)
    levels = [np.zeros(1, dtype=np.int64)]
    for _ in range(depth):
        children = (levels[-1][:, None] * 2 + np.arange(2)).ravel()
        keep = uniforms(gen, children.size) < p
        levels.append(children[keep])
    return PercolationSample(gamma, depth, tuple(levels), seed, attempt)


def surviving_sample(gamma: float, depth: int, seed: int, max_attempts: int = 1000,
                     keep_prob: float | None = None) -> PercolationSample:
    """First non-extinct redraw for ``seed``; ``sample.attempt`` counts the redraws."""
    for attempt in range(max_attempts):
        s = simulate(gamma, depth, seed, keep_prob, attempt)
        if s.survived:
            return s
    raise SamplingError(f"no surviving sample in {max_attempts} attempts")


def survivor_counts(sample: PercolationSample) -> list[int]:
    """``[Z_1, ..., Z_depth]``."""
    return [int(lv.size) for lv in sample.levels[1:]]


def box_slope(sample: PercolationSample, n_lo: int, n_hi: int) -> float:
    """Least-squares slope of ``log2 Z_n`` on ``[n_lo, n_hi]``; needs survival to ``n_hi``."""
    z = np.array(survivor_counts(sample)[n_lo - 1:n_hi], dtype=float)
    if z.size < 2 or np.any(z == 0):
        raise InvalidArguments("box slope needs survival through the window")
    return float(np.polyfit(np.arange(n_lo, n_hi + 1), np.log2(z), 1)[0])


def window_event(sample: PercolationSample, eps: float, n_lo: int = 1,
                 n_hi: int | None = None) -> EventReport:
    """``N_n(I) <= n^2 2^{(1-gamma)(n-m)}`` for kept ``I`` of order ``m <= (1-eps) n``.

    Each row records the worst ratio over ``m`` and ``I``; its location column
    holds that ``m``.
    """
    if not 0 < eps < 1:
        raise InvalidArguments("eps must lie in (0, 1)")
    n_hi = sample.depth if n_hi is None else n_hi
    rows = []
    for n in range(max(n_lo, 1), n_hi + 1):
        kept = sample.levels[n]
        best = EventRow(n, None, 0, float(n * n))
        best_ratio = -1.0
        if kept.size:
            for m in range(0, max_window_start(n, eps) + 1):
                c = int(np.bincount(kept >> (n - m)).max())
                thr = n * n * 2.0 ** ((1 - sample.gamma) * (n - m))
                if c / thr > best_ratio:
                    best_ratio = c / thr
                    best = EventRow(n, m, c, thr)
        rows.append(best)
    return EventReport("window", eps, tuple(rows), location="m")


def extinction_probability(gamma: float, keep_prob: float | None = None, tol: float = 1e-12) -> float:
    """Smallest root of ``e = (1 - p + p e)^2`` in [0, 1]."""
    p = _keep_prob(gamma, keep_prob)

    def f(e):
        return (1 - p + p * e) ** 2 - e

    if f(0.0) <= 0:
        return 0.0
    if 2 * p <= 1:          # not supercritical
        return 1.0
    hi = (1 / (2 * p) - 1 + p) / p    # minimiser of f, where f < 0
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TailRow:
    k: float
    threshold: float
    freq: float
    stderr: float


@dataclass(frozen=True)
class TailTable:
    gamma: float
    n: int
    trials: int
    rows: tuple[TailRow, ...]
    decay_rate: float          # c2 in freq ~ c1 exp(-c2 k), fitted on positive frequencies

    @property
    def strictly_decreasing(self) -> bool:
        f = [r.freq for r in self.rows]
        return all(a > b for a, b in zip(f, f[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "threshold", "freq", "stderr"])
        for r in self.rows:
            w.writerow([repr(r.k), repr(r.threshold), repr(r.freq), repr(r.stderr)])
        return buf.getvalue()


def generation_sizes(gamma: float, n: int, trials: int, seed: int,
                     keep_prob: float | None = None) -> np.ndarray:
    """``Z_n`` for ``trials`` independent processes, via binomial thinning per generation."""
    p = _keep_prob(gamma, keep_prob)
    gen = retry_stream(check_seed(seed), 0)
    z = np.ones(trials, dtype=np.int64)
    for _ in range(n):
        z = gen.binomial(2 * z, p)
    return z


def tail_check(gamma: float, n: int, k_values, trials: int, seed: int = 0) -> TailTable:
    """Frequencies of ``Z_n >= k m^n`` with ``m = 2^{1-gamma}``."""
    if trials < 1000:
        raise InvalidArguments("tail_check needs at least 1000 trials")
    z = generation_sizes(gamma, n, trials, seed)
    mean = 2.0 ** ((1 - gamma) * n)
    rows = []
    for k in k_values:
        thr = k * mean
        f = float(np.mean(z >= thr))
        rows.append(TailRow(float(k), thr, f, math.sqrt(f * (1 - f) / trials)))
    pos = [(r.k, math.log(r.freq)) for r in rows if r.freq > 0]
    if len(pos) >= 2:
        ks, lf = zip(*pos)
        rate = -float(np.polyfit(ks, lf, 1)[0])
    else:
        rate = math.nan
    return TailTable(gamma, n, trials, tuple(rows), rate)
