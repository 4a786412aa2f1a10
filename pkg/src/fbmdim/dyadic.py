"""Dyadic time intervals, value intervals and finite interval families.

A dyadic interval of order ``n`` and index ``p`` is ``[p 2^-n, (p+1) 2^-n]``.
Families are immutable and kept in canonical ``(order, index)`` order; all
counting quantities work on the integer indices, never on floating endpoints.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidArguments

MAX_ORDER = 60
_EPS_SLACK = 1e-9


@dataclass(frozen=True, order=True)
class DyadicInterval:
    order: int
    index: int

    def __post_init__(self):
        if not 0 <= self.order <= MAX_ORDER:
            raise InvalidArguments(f"order {self.order} outside [0, {MAX_ORDER}]")
        if not 0 <= self.index < (1 << self.order):
            raise InvalidArguments(f"index {self.index} outside [0, 2^{self.order})")

    @property
    def left(self) -> float:
        return self.index / 2.0**self.order

    @property
    def right(self) -> float:
        return (self.index + 1) / 2.0**self.order

    @property
    def diameter(self) -> float:
        return 2.0**-self.order

    def contains(self, other: DyadicInterval) -> bool:
        """True iff ``other`` is a subset of this interval."""
        if other.order < self.order:
            return False
        return other.index >> (other.order - self.order) == self.index

    def ancestor(self, order: int) -> DyadicInterval:
        if order > self.order:
            raise InvalidArguments("ancestor order exceeds interval order")
        return DyadicInterval(order, self.index >> (self.order - order))

    def parent(self) -> DyadicInterval:
        return self.ancestor(self.order - 1)

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return (DyadicInterval(self.order + 1, 2 * self.index),
                DyadicInterval(self.order + 1, 2 * self.index + 1))


@dataclass(frozen=True)
class ValueInterval:
    """Closed value interval ``[q w, (q+1) w]`` with ``w = 2^(-hurst*order)``."""

    order: int
    index: int
    hurst: float

    def __post_init__(self):
        if self.order < 0:
            raise InvalidArguments("value-interval order must be >= 0")
        if not 0.0 < self.hurst < 1.0:
            raise InvalidArguments("hurst index must lie in (0, 1)")

    @property
    def width(self) -> float:
        return value_width(self.hurst, self.order)

    @property
    def lo(self) -> float:
        return self.index * self.width

    @property
    def hi(self) -> float:
        return (self.index + 1) * self.width


def value_width(hurst: float, order: int) -> float:
    return 2.0 ** (-hurst * order)


def _as_pair(item) -> tuple[int, int]:
    if isinstance(item, DyadicInterval):
        return item.order, item.index
    n, p = item
    DyadicInterval(int(n), int(p))
    return int(n), int(p)


class IntervalFamily:
    """Finite set of dyadic intervals, possibly of mixed orders."""

    __slots__ = ("_orders", "_indices", "_by_order")

    def __init__(self, intervals: Iterable = ()):
        pairs = sorted({_as_pair(it) for it in intervals})
        self._orders = np.array([n for n, _ in pairs], dtype=np.int64)
        self._indices = np.array([p for _, p in pairs], dtype=np.int64)
        self._by_order = None

    @classmethod
    def from_arrays(cls, orders, indices) -> IntervalFamily:
        orders = np.asarray(orders, dtype=np.int64).ravel()
        indices = np.asarray(indices, dtype=np.int64).ravel()
        if orders.shape != indices.shape:
            raise InvalidArguments("orders and indices differ in length")
        if orders.size:
            if orders.min() < 0 or orders.max() > MAX_ORDER:
                raise InvalidArguments(f"orders must lie in [0, {MAX_ORDER}]")
            if indices.min() < 0 or np.any(indices >= np.left_shift(1, orders)):
                raise InvalidArguments("index outside [0, 2^order)")
        key = np.lexsort((indices, orders))
        orders, indices = orders[key], indices[key]
        if orders.size > 1:
            keep = np.ones(orders.size, dtype=bool)
            keep[1:] = (np.diff(orders) != 0) | (np.diff(indices) != 0)
            orders, indices = orders[keep], indices[keep]
        fam = cls.__new__(cls)
        fam._orders, fam._indices, fam._by_order = orders, indices, None
        return fam

    @classmethod
    def at_single_order(cls, order: int, indices) -> IntervalFamily:
        indices = np.asarray(indices, dtype=np.int64).ravel()
        return cls.from_arrays(np.full(indices.size, order, dtype=np.int64), indices)

    @classmethod
    def full(cls, order: int) -> IntervalFamily:
        return cls.at_single_order(order, np.arange(1 << order, dtype=np.int64))

    def _groups(self) -> dict[int, np.ndarray]:
        if self._by_order is None:
            groups = {}
            if self._orders.size:
                cuts = np.flatnonzero(np.diff(self._orders)) + 1
                for chunk_o, chunk_i in zip(np.split(self._orders, cuts),
                                            np.split(self._indices, cuts)):
                    groups[int(chunk_o[0])] = chunk_i
            self._by_order = groups
        return self._by_order

    def at_order(self, n: int) -> np.ndarray:
        """Sorted indices of the order-``n`` members."""
        return self._groups().get(int(n), np.empty(0, dtype=np.int64))

    def orders_present(self) -> list[int]:
        return sorted(self._groups())

    @property
    def max_order(self) -> int:
        return int(self._orders[-1]) if self._orders.size else -1

    @property
    def orders(self) -> np.ndarray:
        return self._orders

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    def __len__(self) -> int:
        return int(self._orders.size)

    def __iter__(self) -> Iterator[DyadicInterval]:
        for n, p in zip(self._orders.tolist(), self._indices.tolist()):
            yield DyadicInterval(n, p)

    def __contains__(self, item) -> bool:
        n, p = _as_pair(item)
        idx = self.at_order(n)
        k = np.searchsorted(idx, p)
        return bool(k < idx.size and idx[k] == p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalFamily):
            return NotImplemented
        return (np.array_equal(self._orders, other._orders)
                and np.array_equal(self._indices, other._indices))

    def __hash__(self) -> int:
        return hash((self._orders.tobytes(), self._indices.tobytes()))

    def __repr__(self) -> str:
        head = ", ".join(f"I({n},{p})" for n, p in
                         zip(self._orders[:6].tolist(), self._indices[:6].tolist()))
        tail = ", ..." if len(self) > 6 else ""
        return f"IntervalFamily([{head}{tail}], size={len(self)})"

    def union(self, other: IntervalFamily) -> IntervalFamily:
        return IntervalFamily.from_arrays(np.concatenate([self._orders, other._orders]),
                                          np.concatenate([self._indices, other._indices]))

    def restrict(self, mask: np.ndarray) -> IntervalFamily:
        return IntervalFamily.from_arrays(self._orders[mask], self._indices[mask])

    def covers(self, other: IntervalFamily) -> bool:
        """True iff the union of ``other`` lies inside the union of ``self``.

        Works at the finest order present in either family, where every member
        is a union of grid cells.
        """
        if not len(other):
            return True
        if not len(self):
            return False
        top = max(self.max_order, other.max_order)
        own = _cells(self, top)
        return bool(np.all(np.isin(_cells(other, top), own)))

    def to_text(self) -> str:
        return "".join(f"{n} {p}\n" for n, p in
                       zip(self._orders.tolist(), self._indices.tolist()))

    @classmethod
    def from_text(cls, text: str) -> IntervalFamily:
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidArguments(f"line {lineno}: expected 'n p', got {line!r}")
            pairs.append((int(parts[0]), int(parts[1])))
        return cls(pairs)


def _cells(fam: IntervalFamily, top: int) -> np.ndarray:
    out = []
    for n in fam.orders_present():
        idx = fam.at_order(n)
        span = 1 << (top - n)
        out.append((idx[:, None] * span + np.arange(span, dtype=np.int64)).ravel())
    return np.unique(np.concatenate(out))


# ---------------------------------------------------------------- counting

def count_in(U: IntervalFamily, I: DyadicInterval, n: int) -> int:
    """Number of order-``n`` members of ``U`` contained in ``I``."""
    if n < I.order:
        raise InvalidArguments(f"n={n} is smaller than the order of I ({I.order})")
    idx = U.at_order(n)
    return int(np.count_nonzero((idx >> (n - I.order)) == I.index))


def window_counts(U: IntervalFamily, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Ancestor indices at order ``m`` and their order-``n`` member counts."""
    idx = U.at_order(n)
    return np.unique(idx >> (n - m), return_counts=True)


def max_count(U: IntervalFamily, m: int, n: int) -> int:
    """``max`` over order-``m`` intervals of :func:`count_in` at order ``n``."""
    if m >= n:
        raise InvalidArguments(f"max_count needs m < n, got m={m}, n={n}")
    _, counts = window_counts(U, m, n)
    return int(counts.max()) if counts.size else 0


def exceeds_power(count: int, beta: float, length: int) -> bool:
    """``count > 2^(beta*length)``, exact when the exponent is an integer."""
    x = beta * length
    if float(x).is_integer():
        return count > (1 << int(x))
    return count > 2.0**x


def max_window_start(n: int, eps: float) -> int:
    """Largest ``m`` with ``m <= (1 - eps) n`` (tolerant to binary rounding of eps)."""
    return math.floor((1.0 - eps) * n + _EPS_SLACK)


def is_balanced(U: IntervalFamily, beta: float, eps: float = 0.0) -> bool:
    if beta <= 0:
        raise InvalidArguments("beta must be positive")
    if not 0.0 <= eps < 1.0:
        raise InvalidArguments("eps must lie in [0, 1)")
    for n in U.orders_present():
        for m in range(0, min(n - 1, max_window_start(n, eps)) + 1):
            if exceeds_power(max_count(U, m, n), beta, n - m):
                return False
    return True


def content(U: IntervalFamily, beta: float) -> float:
    """Sum of ``diam(U)^beta`` over the family."""
    if not len(U):
        return 0.0
    return float(np.sum(np.exp2(-beta * U.orders.astype(np.float64))))


def split_by_order(U: IntervalFamily, ell: int) -> tuple[IntervalFamily, IntervalFamily]:
    """``(members of order >= ell, members of order < ell)``."""
    deep = U.orders >= ell
    return U.restrict(deep), U.restrict(~deep)


def choose_tail_order(U: IntervalFamily, k: int) -> int:
    """Smallest ``ell >= 0`` whose tail has ``1/k``-content below ``2^-k``."""
    if k < 1:
        raise InvalidArguments("k must be >= 1")
    bound = 2.0**-k
    for ell in range(0, U.max_order + 2):
        if content(split_by_order(U, ell)[0], 1.0 / k) < bound:
            return ell
    raise AssertionError("unreachable: the empty tail has zero content")


# ---------------------------------------------------------------- balancing

class _Members:
    """Mutable per-order index sets used while rebalancing."""

    def __init__(self, U: IntervalFamily):
        self.sets = {n: set(U.at_order(n).tolist()) for n in U.orders_present()}

    def orders(self) -> list[int]:
        return sorted(n for n, s in self.sets.items() if s)

    def counts(self, m: int, n: int) -> Counter:
        shift = n - m
        return Counter(p >> shift for p in self.sets.get(n, ()))

    def count_inside(self, m: int, anc: int, n: int) -> int:
        shift = n - m
        return sum(1 for p in self.sets.get(n, ()) if p >> shift == anc)

    def replace(self, m: int, anc: int, n: int) -> None:
        shift = n - m
        self.sets[n] = {p for p in self.sets[n] if p >> shift != anc}
        self.sets.setdefault(m, set()).add(anc)

    def family(self) -> IntervalFamily:
        pairs = [(n, p) for n, s in self.sets.items() for p in s]
        if not pairs:
            return IntervalFamily()
        arr = np.array(pairs, dtype=np.int64)
        return IntervalFamily.from_arrays(arr[:, 0], arr[:, 1])


def _worst_window(members: _Members, m: int, n: int, beta: float):
    counts = members.counts(m, n)
    if not counts:
        return None
    top = max(counts.values())
    if not exceeds_power(top, beta, n - m):
        return None
    return min(p for p, c in counts.items() if c == top)


def _scan_from(members: _Members, beta: float, m0: int, n0: int):
    orders = members.orders()
    if not orders:
        return None
    top = orders[-1]
    for m in range(m0, top):
        for n in orders:
            if n <= m or (m == m0 and n < n0):
                continue
            anc = _worst_window(members, m, n, beta)
            if anc is not None:
                return m, n, anc
    return None


def balance(U: IntervalFamily, beta: float) -> IntervalFamily:
    """Rebalance ``U`` into a ``beta``-balanced family with no larger content.

    While some order-``m`` interval ``I`` holds more than ``2^(beta(n-m))``
    order-``n`` members, those members are replaced by ``I`` itself. The
    violation chosen is the one with smallest ``m``, then smallest ``n``; at
    that pair the interval holding the most members is used, smallest index
    first. Each step strictly shrinks the family, so the loop terminates.

    The scan resumes where the previous replacement happened: a replacement
    at ``(m, n, I)`` only lowers counts, except at pairs ``(m', m)`` for the
    ancestors of ``I``, which are checked first.
    """
    if beta <= 0:
        raise InvalidArguments("beta must be positive")
    members = _Members(U)
    hit = _scan_from(members, beta, 0, 0)
    while hit is not None:
        m, n, anc = hit
        members.replace(m, anc, n)
        hit = None
        for m2 in range(m):
            up = anc >> (m - m2)
            if exceeds_power(members.count_inside(m2, up, m), beta, m - m2):
                hit = (m2, m, up)
                break
        if hit is None:
            hit = _scan_from(members, beta, m, n)
    return members.family()
