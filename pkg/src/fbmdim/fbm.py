"""Fractional Brownian motion on the dyadic grid ``{k 2^-n}``."""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArguments, SamplingError
from .rng import check_seed, normals, stream

MAX_ORDER = 22
DENSE_MAX_ORDER = 10
SPECTRUM_TOL = 1e-8
_HEADER = struct.Struct("<dIQ")


def _check_hurst(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise InvalidArguments(f"Hurst index must lie in (0, 1), got {alpha}")


def covariance(alpha: float, s: float, t: float) -> float:
    """``E B(s) B(t) = (s^{2a} + t^{2a} - |t - s|^{2a}) / 2``."""
    _check_hurst(alpha)
    if s < 0 or t < 0:
        raise InvalidArguments("times must be non-negative")
    h = 2 * alpha
    return 0.5 * (abs(t) ** h + abs(s) ** h - abs(t - s) ** h)


def fgn_autocov(alpha: float, lags: np.ndarray, step: float = 1.0) -> np.ndarray:
    """Autocovariance of increments over cells of width ``step``."""
    k = np.abs(np.asarray(lags, dtype=float))
    h = 2 * alpha
    return 0.5 * ((k + 1) ** h - 2 * k**h + np.abs(k - 1) ** h) * step**h


@dataclass(frozen=True, eq=False)
class FbmPath:
    hurst: float
    order: int
    values: np.ndarray
    seed: int
    _ranges: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _check_hurst(self.hurst)
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != ((1 << self.order) + 1,):
            raise InvalidArguments(f"expected {(1 << self.order) + 1} values, got {v.shape}")
        if v[0] != 0 or not np.all(np.isfinite(v)):
            raise InvalidArguments("path must start at 0 and be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / float(1 << self.order)

    def ranges(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Grid min and max of ``B`` over each order-``n`` interval, endpoints included."""
        if not 0 <= n <= self.order:
            raise InvalidArguments(f"range order {n} outside [0, {self.order}]")
        if n not in self._ranges:
            step = 1 << (self.order - n)
            body = self.values[:-1].reshape(1 << n, step)
            right = self.values[step::step]
            lo = np.minimum(body.min(axis=1), right)
            hi = np.maximum(body.max(axis=1), right)
            self._ranges[n] = (lo, hi)
        return self._ranges[n]

    def discretization_slack(self) -> float:
        """Modulus-scale bound on how far grid extrema may miss true extrema."""
        h = 2.0**-self.order
        return math.sqrt(2 * h ** (2 * self.hurst) * math.log(1 / h))

    # -- export

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "t", "B"])
        for k, (t, b) in enumerate(zip(self.times, self.values)):
            w.writerow([k, repr(float(t)), repr(float(b))])
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        return _HEADER.pack(self.hurst, self.order, self.seed) + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> FbmPath:
        alpha, order, seed = _HEADER.unpack_from(data)
        values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
        return cls(alpha, order, values, seed)


def _circulant_sqrt_spectrum(alpha: float, n: int) -> np.ndarray:
    N = 1 << n
    k = np.arange(N + 1)
    c = fgn_autocov(alpha, k)
    row = np.concatenate([c, c[-2:0:-1]])          # length 2N
    lam = np.fft.fft(row).real
    if lam.min() < -SPECTRUM_TOL * lam.max():
        raise SamplingError(f"circulant embedding spectrum negative ({lam.min():.3g})")
    return np.sqrt(np.clip(lam, 0, None) / row.size)


def _fgn_circulant(alpha: float, n: int, gens) -> np.ndarray:
    N = 1 << n
    root = _circulant_sqrt_spectrum(alpha, n)
    out = np.empty((len(gens), N))
    for i, g in enumerate(gens):
        z = normals(g, 2 * root.size)
        y = np.fft.fft(root * (z[: root.size] + 1j * z[root.size:]))
        out[i] = y.real[:N]
    return out


def _fgn_dense(alpha: float, n: int, gens) -> np.ndarray:
    N = 1 << n
    k = np.arange(N)
    cov = fgn_autocov(alpha, k[:, None] - k[None, :])
    chol = np.linalg.cholesky(cov)
    return np.stack([chol @ normals(g, N) for g in gens])


def sample_paths(alpha: float, order: int, seeds, method: str = "auto") -> list[FbmPath]:
    """One path per seed; seed ``s`` always produces the same path."""
    _check_hurst(alpha)
    if not 0 <= order <= MAX_ORDER:
        raise InvalidArguments(f"order must lie in [0, {MAX_ORDER}]")
    seeds = [check_seed(s) for s in seeds]
    gens = [stream(s) for s in seeds]
    if method == "dense":
        if order > DENSE_MAX_ORDER:
            raise InvalidArguments(f"dense sampling limited to order {DENSE_MAX_ORDER}")
        fgn = _fgn_dense(alpha, order, gens)
    elif method in ("auto", "circulant"):
        try:
            fgn = _fgn_circulant(alpha, order, gens)
        except SamplingError:
            if method == "circulant" or order > DENSE_MAX_ORDER:
                raise
            gens = [stream(s) for s in seeds]
            fgn = _fgn_dense(alpha, order, gens)
    else:
        raise InvalidArguments(f"unknown sampling method {method!r}")
    # unit-step fGn scaled to cell width 2^-order, so Var B(1) = 1
    fgn *= 2.0 ** (-alpha * order)
    paths = []
    for s, inc in zip(seeds, fgn):
        vals = np.concatenate([[0.0], np.cumsum(inc)])
        paths.append(FbmPath(alpha, order, vals, s))
    return paths


def sample_path(alpha: float, order: int, seed: int, method: str = "auto") -> FbmPath:
    return sample_paths(alpha, order, [seed], method)[0]


def holder_stat(path: FbmPath) -> float:
    """``max |B(t+h) - B(t)| / sqrt(2 h^{2a} log(1/h))`` over ``h = 2^-j``, ``2 <= j <= order``."""
    if path.order < 4:
        raise InvalidArguments("holder_stat needs order >= 4")
    best = 0.0
    v = path.values
    for j in range(2, path.order + 1):
        step = 1 << (path.order - j)
        h = 2.0**-j
        scale = math.sqrt(2 * h ** (2 * path.hurst) * math.log(1 / h))
        best = max(best, float(np.max(np.abs(v[step:] - v[:-step]))) / scale)
    return best
