"""Sets defined by binary digit restrictions.

For ``S`` a set of positive integers, ``D_S`` is the set of reals in [0, 1]
whose binary digit ``x_n`` may be 1 only when ``n`` is in ``S``. ``S`` is
described finitely by an explicit prefix followed by a periodic pattern or a
rule producing blocks of consecutive integers.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .dyadic import DyadicInterval, IntervalFamily, max_window_start
from .errors import InvalidArguments, ResourceLimitError, UnsupportedSpec
from .estimators import DimensionReport, report

MAX_COVER_BITS = 24
DEFAULT_EPS_GRID = tuple(2.0**-j for j in range(1, 11))


@dataclass(frozen=True)
class Periodic:
    """Membership of ``n`` is ``pattern[(n - 1) % len(pattern)]`` (absolute alignment)."""

    pattern: str

    def __post_init__(self):
        if not self.pattern or set(self.pattern) - {"0", "1"}:
            raise InvalidArguments(f"pattern must be a non-empty bitstring, got {self.pattern!r}")

    @property
    def density(self) -> Fraction:
        return Fraction(self.pattern.count("1"), len(self.pattern))


@dataclass(frozen=True)
class GeometricBlocks:
    """Blocks ``(a_k, b_k]`` with ``a_1 = start`` and ``b_k = ceil(theta a_k)``.

    ``mode="geometric"``: ``a_{k+1} = ceil(rho b_k)``.
    ``mode="superexp"``:  ``a_{k+1} = ceil(b_k^2 / theta)``, so consecutive block
    ends satisfy ``b_{k+1} ~ b_k^2``; ``rho`` is ignored.
    """

    start: int
    theta: Fraction
    rho: Fraction = Fraction(1)
    mode: str = "geometric"
    _blocks: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        object.__setattr__(self, "rho", Fraction(self.rho))
        if self.start < 1:
            raise InvalidArguments("block start must be >= 1")
        if self.theta <= 1:
            raise InvalidArguments("theta must exceed 1")
        if self.rho < 1:
            raise InvalidArguments("rho must be >= 1")
        if self.mode not in ("geometric", "superexp"):
            raise InvalidArguments(f"unknown block mode {self.mode!r}")

    def _next_start(self, b: int) -> int:
        if self.mode == "superexp":
            return max(b, math.ceil(Fraction(b * b) / self.theta))
        return math.ceil(self.rho * b)

    def blocks_upto(self, n: int) -> list[tuple[int, int]]:
        """All blocks ``(a, b]`` with ``a < n`` (cached, grows on demand)."""
        blocks = self._blocks
        if not blocks:
            a = self.start
            blocks.append((a, math.ceil(self.theta * a)))
        while blocks[-1][1] < n:
            a = self._next_start(blocks[-1][1])
            blocks.append((a, math.ceil(self.theta * a)))
        return [blk for blk in blocks if blk[0] < n]


Tail = Union[Periodic, GeometricBlocks]


@dataclass(frozen=True)
class DigitSetSpec:
    """``S`` = explicit prefix on ``1..len(prefix)``, tail rule beyond it."""

    prefix: str = ""
    tail: Tail = Periodic("0")

    def __post_init__(self):
        if set(self.prefix) - {"0", "1"}:
            raise InvalidArguments("prefix must be a bitstring")

    @property
    def n0(self) -> int:
        return len(self.prefix)

    # -- membership and counting

    def __contains__(self, n: int) -> bool:
        if n < 1:
            return False
        if n <= self.n0:
            return self.prefix[n - 1] == "1"
        if isinstance(self.tail, Periodic):
            pat = self.tail.pattern
            return pat[(n - 1) % len(pat)] == "1"
        blocks = self.tail.blocks_upto(n)
        k = bisect.bisect_left(blocks, (n, -1)) - 1
        return k >= 0 and blocks[k][0] < n <= blocks[k][1]

    def _tail_count(self, n: int) -> int:
        """``|S_tail & {1..n}|`` ignoring the prefix."""
        if n <= 0:
            return 0
        if isinstance(self.tail, Periodic):
            pat = self.tail.pattern
            q, r = divmod(n, len(pat))
            return q * pat.count("1") + pat[:r].count("1")
        return sum(max(0, min(b, n) - a) for a, b in self.tail.blocks_upto(n))

    def count(self, n: int) -> int:
        """``|S & {1..n}|``."""
        if n <= 0:
            return 0
        k = min(n, self.n0)
        head = self.prefix[:k].count("1")
        return head + self._tail_count(n) - self._tail_count(k)

    def positions(self, n: int) -> list[int]:
        """Sorted members of ``S & {1..n}``."""
        if isinstance(self.tail, GeometricBlocks):
            tail = [i for a, b in self.tail.blocks_upto(n) for i in range(a + 1, min(b, n) + 1)
                    if i > self.n0]
        else:
            pat = self.tail.pattern
            tail = [i for i in range(self.n0 + 1, n + 1) if pat[(i - 1) % len(pat)] == "1"]
        head = [i for i in range(1, min(n, self.n0) + 1) if self.prefix[i - 1] == "1"]
        return head + tail

    def indicator(self, n: int) -> np.ndarray:
        """Boolean array ``ind[i] = (i in S)`` for ``i = 0..n``."""
        ind = np.zeros(n + 1, dtype=bool)
        ind[self.positions(n)] = True
        return ind

    def full_after(self, n: int) -> bool:
        """True iff every integer beyond ``n`` lies in ``S``."""
        if isinstance(self.tail, Periodic):
            return n >= self.n0 and set(self.tail.pattern) == {"1"}
        if self.tail.mode == "geometric" and self.tail.rho == 1:
            return n >= max(self.n0, self.tail.start)
        return False

    # -- config round trip

    @classmethod
    def from_config(cls, cfg: dict) -> DigitSetSpec:
        tail_cfg = dict(cfg.get("tail", {"kind": "periodic", "pattern": "0"}))
        kind = tail_cfg.pop("kind", "periodic")
        if kind == "periodic":
            tail = Periodic(str(tail_cfg["pattern"]))
        elif kind in ("blocks", "geometric_blocks"):
            tail = GeometricBlocks(start=int(tail_cfg.get("start", 1)),
                                   theta=Fraction(str(tail_cfg["theta"])),
                                   rho=Fraction(str(tail_cfg.get("rho", 1))),
                                   mode=str(tail_cfg.get("mode", "geometric")))
        else:
            raise UnsupportedSpec(f"unknown tail kind {kind!r}")
        return cls(prefix=str(cfg.get("prefix", "")), tail=tail)

    def to_config(self) -> dict:
        if isinstance(self.tail, Periodic):
            tail = {"kind": "periodic", "pattern": self.tail.pattern}
        else:
            tail = {"kind": "blocks", "start": self.tail.start, "theta": str(self.tail.theta),
                    "rho": str(self.tail.rho), "mode": self.tail.mode}
        return {"prefix": self.prefix, "tail": tail}


def periodic(pattern: str, prefix: str = "") -> DigitSetSpec:
    return DigitSetSpec(prefix=prefix, tail=Periodic(pattern))


def blocks(start: int, theta, rho=1, mode: str = "geometric", prefix: str = "") -> DigitSetSpec:
    return DigitSetSpec(prefix=prefix, tail=GeometricBlocks(start, Fraction(theta), Fraction(rho), mode))


def superexp_blocks(start: int = 2, theta=2) -> DigitSetSpec:
    """``S = U_k (n_k / theta, n_k]`` with ``n_{k+1} = n_k^2``; default blocks (2,4], (8,16], (128,256], ..."""
    return blocks(start, theta, mode="superexp")


# ---------------------------------------------------------------- densities

def density(spec: DigitSetSpec, m: int, n: int) -> Fraction:
    """``|S & {m+1..n}| / (n - m)`` as an exact rational."""
    if not 0 <= m < n:
        raise InvalidArguments(f"density needs 0 <= m < n, got m={m}, n={n}")
    return Fraction(spec.count(n) - spec.count(m), n - m)


@dataclass(frozen=True)
class DensityProfile:
    """Truncated densities ``d_n`` and windowed maxima for ``n <= n_max``."""

    n_max: int
    eps_grid: tuple[float, ...]
    d: np.ndarray         # d[n-1] = d_n
    maxwin: np.ndarray    # maxwin[j, n-1] = max_{m <= (1-eps_j) n} d_{m,n}

    @classmethod
    def build(cls, spec: DigitSetSpec, n_max: int,
              eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID) -> DensityProfile:
        csum = np.cumsum(spec.indicator(n_max)).astype(np.float64)
        ns = np.arange(1, n_max + 1)
        d = csum[1:] / ns
        maxwin = np.empty((len(eps_grid), n_max))
        for n in range(1, n_max + 1):
            m = np.arange(n)
            run = np.maximum.accumulate((csum[n] - csum[:n]) / (n - m))
            for j, eps in enumerate(eps_grid):
                maxwin[j, n - 1] = run[min(max_window_start(n, eps), n - 1)]
        return cls(n_max, tuple(eps_grid), d, maxwin)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "d_n"] + [f"maxwin_{eps:g}" for eps in self.eps_grid])
        for i in range(self.n_max):
            w.writerow([i + 1, repr(float(self.d[i]))] +
                       [repr(float(v)) for v in self.maxwin[:, i]])
        return buf.getvalue()


def long_window_max(spec: DigitSetSpec, min_len: int, n_max: int) -> float:
    """``max d_{m,n}`` over ``n <= n_max`` and windows of length ``>= min_len``."""
    csum = np.cumsum(spec.indicator(n_max)).astype(np.float64)
    best = 0.0
    for n in range(min_len, n_max + 1):
        m = np.arange(n - min_len + 1)
        best = max(best, float(np.max((csum[n] - csum[m]) / (n - m))))
    return best


# ---------------------------------------------------------------- covers

def cover(spec: DigitSetSpec, n: int, boundary_neighbors: bool = False) -> IntervalFamily:
    """Order-``n`` dyadic intervals meeting ``D_S``.

    Without boundary neighbours these are the intervals whose left endpoint has
    its 1-bits inside ``S & {1..n}``; with them, intervals touching ``D_S`` only
    at a shared endpoint are added too.
    """
    pos = spec.positions(n)
    if len(pos) > MAX_COVER_BITS:
        raise ResourceLimitError(
            f"cover of order {n} has 2^{len(pos)} intervals; bound is 2^{MAX_COVER_BITS}")
    idx = np.zeros(1, dtype=np.int64)
    for i in pos:
        idx = np.concatenate([idx, idx + (1 << (n - i))])
    if boundary_neighbors:
        extra = [idx[idx > 0] - 1]
        if spec.full_after(n):
            extra.append(idx[idx < (1 << n) - 1] + 1)
        idx = np.concatenate([idx, *extra])
    return IntervalFamily.at_single_order(n, idx)


def cover_inside(spec: DigitSetSpec, I: DyadicInterval, n: int) -> IntervalFamily:
    """Order-``n`` members of the cover inside ``I``, assuming ``min I`` lies in ``D_S``."""
    if n < I.order:
        raise InvalidArguments("n must be >= order of I")
    pos = [i for i in spec.positions(n) if i > I.order]
    if len(pos) > MAX_COVER_BITS:
        raise ResourceLimitError(f"window holds 2^{len(pos)} intervals; bound is 2^{MAX_COVER_BITS}")
    idx = np.array([I.index << (n - I.order)], dtype=np.int64)
    for i in pos:
        idx = np.concatenate([idx, idx + (1 << (n - i))])
    return IntervalFamily.at_single_order(n, idx)


# ---------------------------------------------------------------- exact dimensions

def exact_dim_values(spec: DigitSetSpec) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """``(Hausdorff, packing, modified Assouad, Assouad)`` as exact rationals.

    Assouad is the long-window limit ``lim_L sup_{n-m>=L} d_{m,n}``; the
    literal ``limsup max_{m<=n}`` is 1 for any infinite ``S`` because of
    length-one windows.
    """
    tail = spec.tail
    if isinstance(tail, Periodic):
        rho = tail.density
        return rho, rho, rho, rho
    if isinstance(tail, GeometricBlocks):
        theta = tail.theta
        if tail.mode == "superexp":
            return Fraction(0), (theta - 1) / theta, Fraction(1), Fraction(1)
        lam = tail.rho * theta
        if lam == theta:
            return Fraction(1), Fraction(1), Fraction(1), Fraction(1)
        lo = (theta - 1) / (lam - 1)
        hi = (theta - 1) / theta * lam / (lam - 1)
        return lo, hi, Fraction(1), Fraction(1)
    raise UnsupportedSpec(f"no closed form for tail {tail!r}")


def exact_dims(spec: DigitSetSpec) -> DimensionReport:
    vals = exact_dim_values(spec)
    if not all(a <= b for a, b in zip(vals, vals[1:])):
        raise AssertionError(f"chain inequality fails for exact values {vals}")
    names = ("hausdorff", "packing", "modified_assouad", "assouad")
    return report(exact=dict(zip(names, vals)),
                  notes=(f"digit set {spec.to_config()}",))


# ---------------------------------------------------------------- dense windows

@dataclass(frozen=True)
class DenseWindow:
    m: int
    n: int
    interval: DyadicInterval
    population: int     # N_n(D, I) = 2^{|S & (m, n]|}

    @property
    def eps_achieved(self) -> float:
        return 1.0 - self.m / self.n


def find_dense_window(spec: DigitSetSpec, alpha: float, eps: float, n_max: int, *,
                      m_min: int = 0, anchor: DyadicInterval | None = None,
                      prefer: str = "largest", refine: bool = True,
                      min_population: int = 8) -> DenseWindow | None:
    """Find ``m <= (1-eps) n <= n_max`` and ``I`` of order ``m`` with
    ``N_n(D, I) >= 2^{(alpha+eps)(n-m)}``.

    ``prefer="largest"`` takes the largest ``n`` (then smallest ``m``);
    ``prefer="earliest"`` takes the smallest ``n`` (then smallest ``m``).
    Windows holding fewer than ``min_population`` intervals are ignored.
    With ``refine`` the window is bisected, keeping a half that is still
    dense, until ``m >= (1-eps) n`` or no half qualifies.

    ``I`` is the order-``m`` interval sharing its left endpoint with
    ``anchor`` (default ``[0, 1]``); that endpoint lies in ``D_S`` whenever
    ``anchor`` belongs to a cover of ``D_S``.
    """
    if not 0 < alpha < 1 or not 0 < eps < 1:
        raise InvalidArguments("alpha and eps must lie in (0, 1)")
    if prefer not in ("largest", "earliest"):
        raise InvalidArguments(f"unknown preference {prefer!r}")
    anchor = anchor or DyadicInterval(0, 0)
    m_min = max(m_min, anchor.order)
    rate = alpha + eps
    counts = np.array([spec.count(i) for i in range(n_max + 1)], dtype=np.int64)

    def ok(m: int, n: int) -> bool:
        c = int(counts[n] - counts[m])
        return (1 << c) >= min_population and c >= rate * (n - m) - 1e-12

    ns = range(m_min + 1, n_max + 1)
    ns = reversed(ns) if prefer == "largest" else ns
    found = None
    for n in ns:
        for m in range(m_min, min(max_window_start(n, eps), n - 1) + 1):
            if ok(m, n):
                found = (m, n)
                break
        if found:
            break
    if found is None:
        return None
    m, n = found
    if refine:
        while m < (1.0 - eps) * n - 1e-9:
            mid = (m + n) // 2
            if mid in (m, n):
                break
            halves = [(a, b) for a, b in ((m, mid), (mid, n)) if ok(a, b)]
            if not halves:
                break
            m, n = max(halves, key=lambda w: ((counts[w[1]] - counts[w[0]]) / (w[1] - w[0]), -w[0]))
    I = DyadicInterval(m, anchor.index << (m - anchor.order))
    return DenseWindow(m, n, I, 1 << int(counts[n] - counts[m]))
