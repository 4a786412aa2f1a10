"""Seeded counter-based random streams.

Every stochastic object in the package draws from a Philox-4x64 stream keyed
by a 64-bit seed. Ensemble member ``k`` of a run with master seed ``s`` uses
the key ``s ^ k``. Normal variates are produced by inversion of the standard
normal CDF applied to 53-bit uniforms, so another implementation that
reproduces the Philox raw output can reproduce the normals as well.
"""

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .errors import InvalidArguments

MASK64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise InvalidArguments(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, k: int = 0) -> Generator:
    """Generator for stream ``k`` of master ``seed`` (key ``seed ^ k``)."""
    key = check_seed(seed) ^ (int(k) & MASK64)
    return Generator(Philox(key=key))


def retry_stream(seed: int, attempt: int) -> Generator:
    """Generator for redraw ``attempt`` of ``seed``.

    Attempt 0 is ``stream(seed)``; later attempts put the attempt number in the
    upper key word, so they never collide with any ensemble stream.
    """
    if attempt == 0:
        return stream(seed)
    return Generator(Philox(key=(int(attempt) << 64) | check_seed(seed)))


def ensemble_seeds(seed: int, count: int) -> list[int]:
    seed = check_seed(seed)
    return [seed ^ k for k in range(count)]


def uniforms(gen: Generator, size: int) -> np.ndarray:
    # (top 53 bits + 1/2) / 2**53 lies strictly inside (0, 1)
    raw = gen.bit_generator.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(gen: Generator, size: int) -> np.ndarray:
    return ndtri(uniforms(gen, size))
