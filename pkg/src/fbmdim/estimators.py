"""Box-counting and windowed Assouad-type estimators over cover hierarchies,
plus the :class:`DimensionReport` container shared by exact calculators.

Countable decompositions cannot be realised on finite data, so estimated
packing and modified-Assouad values are upper-Minkowski and quasi-Assouad
estimates respectively.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .dyadic import IntervalFamily, max_window_start
from .errors import InvalidArguments, ValidationError

DIMENSIONS = ("hausdorff", "packing", "modified_assouad", "assouad")


@dataclass(frozen=True)
class CoverHierarchy:
    """Covers of one target set at a contiguous range of orders."""

    covers: Mapping[int, IntervalFamily]
    refined: bool = False

    def __post_init__(self):
        orders = sorted(self.covers)
        if not orders:
            raise InvalidArguments("empty cover hierarchy")
        if orders != list(range(orders[0], orders[-1] + 1)):
            raise InvalidArguments("cover orders must be contiguous")
        for n, fam in self.covers.items():
            if len(fam) and fam.orders_present() != [n]:
                raise InvalidArguments(f"cover at order {n} holds intervals of other orders")
        if self.refined:
            for n in orders[1:]:
                parents = self.covers[n].at_order(n) >> 1
                if not np.all(np.isin(parents, self.covers[n - 1].at_order(n - 1))):
                    raise InvalidArguments(f"cover at order {n} is not a refinement of order {n - 1}")

    @property
    def orders(self) -> list[int]:
        return sorted(self.covers)

    def sizes(self) -> dict[int, int]:
        return {n: len(self.covers[n]) for n in self.orders}

    @classmethod
    def from_finest(cls, finest: IntervalFamily, lo: int = 0) -> CoverHierarchy:
        """Coarsen a single-order cover down to order ``lo``."""
        top = finest.max_order
        idx = finest.at_order(top)
        covers = {}
        for n in range(top, lo - 1, -1):
            covers[n] = IntervalFamily.at_single_order(n, np.unique(idx >> (top - n)))
        return cls(covers, refined=True)


@dataclass(frozen=True)
class MinkowskiEstimate:
    lower: float
    upper: float
    slope: float
    stderr: float


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise InvalidArguments("need at least two points for a slope")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    if x.size < 3:
        return slope, 0.0
    resid = y - y.mean() - slope * xc
    return slope, math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)


def minkowski_slopes(h: CoverHierarchy, window: tuple[int, int]) -> MinkowskiEstimate:
    """Lower/upper box-counting ratios and the least-squares slope over ``window``."""
    lo, hi = window
    if lo < h.orders[0] or hi > h.orders[-1]:
        raise InvalidArguments(f"window {window} outside hierarchy range")
    if hi - lo < 4:
        raise InvalidArguments("window must span at least 4 orders")
    ns = np.arange(lo, hi + 1)
    sizes = np.array([len(h.covers[n]) for n in ns], dtype=float)
    if np.any(sizes == 0):
        raise InvalidArguments("empty cover inside the estimation window")
    logs = np.log2(sizes)
    ratios = logs[ns > 0] / ns[ns > 0]
    slope, se = fit_slope(ns, logs)
    return MinkowskiEstimate(float(ratios.min()), float(ratios.max()), slope, se)


def window_assouad(h: CoverHierarchy, eps: float, min_len: int = 8) -> float:
    """Largest window growth exponent ``log2 N_n(I) / (n - m)``.

    Runs over ``m < n`` in the hierarchy with ``m <= (1 - eps) n`` and
    ``n - m >= min_len``; ``N_n(I)`` counts order-``n`` cover members inside
    the order-``m`` interval ``I``. Returns ``-inf`` when no window qualifies.
    """
    if not h.refined:
        raise InvalidArguments("window_assouad needs a refinement-flagged hierarchy")
    if not 0.0 < eps < 1.0:
        raise InvalidArguments("eps must lie in (0, 1)")
    best = -math.inf
    orders = h.orders
    for n in orders:
        idx = h.covers[n].at_order(n)
        if idx.size == 0:
            continue
        for m in range(orders[0], min(max_window_start(n, eps), n - min_len) + 1):
            _, counts = np.unique(idx >> (n - m), return_counts=True)
            best = max(best, math.log2(int(counts.max())) / (n - m))
    return best


@dataclass(frozen=True)
class DimEntry:
    value: float
    method: str
    uncertainty: float = 0.0


@dataclass(frozen=True)
class DimensionReport:
    hausdorff: DimEntry | None = None
    packing: DimEntry | None = None
    modified_assouad: DimEntry | None = None
    assouad: DimEntry | None = None
    notes: tuple[str, ...] = field(default=())

    def entries(self) -> dict[str, DimEntry | None]:
        return {name: getattr(self, name) for name in DIMENSIONS}

    def values(self) -> tuple[float | None, ...]:
        return tuple(None if e is None else e.value for e in self.entries().values())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def csv_rows(self) -> list[dict]:
        return [{"dimension": name, "value": e.value, "method": e.method,
                 "uncertainty": e.uncertainty}
                for name, e in self.entries().items() if e is not None]


def chain_violations(rep: DimensionReport) -> list[tuple[str, str]]:
    """Adjacent pairs breaking ``H <= P <= MA <= A`` by more than the uncertainties."""
    bad = []
    present = [(n, e) for n, e in rep.entries().items() if e is not None]
    for (na, a), (nb, b) in zip(present, present[1:]):
        if a.value - b.value > a.uncertainty + b.uncertainty + 1e-12:
            bad.append((na, nb))
    return bad


def report(exact: Mapping[str, float] | None = None,
           estimates: Mapping[str, tuple[float, float]] | None = None,
           notes: tuple[str, ...] = ()) -> DimensionReport:
    """Merge exact values with ``(value, uncertainty)`` estimates.

    Exact values take precedence; an estimate that disagrees with an exact
    value beyond its uncertainty, or any chain-inequality violation beyond
    the reported uncertainties, raises :class:`ValidationError`.
    """
    exact = dict(exact or {})
    estimates = dict(estimates or {})
    unknown = (set(exact) | set(estimates)) - set(DIMENSIONS)
    if unknown:
        raise ValidationError(f"unknown dimension names: {sorted(unknown)}")
    entries = {}
    for name in DIMENSIONS:
        if name in exact:
            value = float(exact[name])
            if name in estimates:
                est, unc = estimates[name]
                if abs(est - value) > unc:
                    raise ValidationError(
                        f"{name}: estimate {est:g} +/- {unc:g} contradicts exact value {value:g}")
            entries[name] = DimEntry(value, "exact", 0.0)
        elif name in estimates:
            est, unc = estimates[name]
            entries[name] = DimEntry(float(est), "estimated", float(unc))
    rep = DimensionReport(**entries, notes=tuple(notes))
    bad = chain_violations(rep)
    if bad:
        raise ValidationError(f"chain inequality violated for {bad}")
    return rep
