"""
Deterministic Monte Carlo substrate.

Random numbers come from numpy's counter-based Philox generator keyed by the
run seed. Sample i of a run is always drawn from stream block
i // block_size, so the draws do not depend on how a run is chunked or in
which order chunks finish. Sums are accumulated exactly, which makes means
and variances bit-identical under any chunking or merge order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Iterable, TypeVar

import numpy as np

from app.core.config import settings
from app.core.exceptions import ConfigError
from app.schemas.mc import MCEstimate, MCParams
from app.services.gaussian_analytics import norm_quantile

logger = logging.getLogger(__name__)

T = TypeVar("T")

_MANTISSA_BITS = 53
_HALF_BITS = 26
_VELTKAMP = 134217729.0  # 2**27 + 1
_BINCOUNT_SLICE = 1 << 22  # keeps per-exponent float sums below 2**53


# ---------------- Streams ----------------


def uniform_stream(seed: int, stream_index: int, size: int) -> np.ndarray:
    """
    `size` uniforms in the open interval (0, 1) from stream `stream_index`.
    Each value is (k + 1/2) 2^-53 with k the top 53 bits of one raw Philox word.
    """
    bitgen = np.random.Philox(key=seed, counter=stream_index << 128)
    raw = bitgen.random_raw(size)
    return ((raw >> np.uint64(64 - _MANTISSA_BITS)).astype(np.float64) + 0.5) * 2.0**-_MANTISSA_BITS


def gaussian_stream(seed: int, stream_index: int, size: int) -> np.ndarray:
    """Standard normals by inverse CDF, one uniform per draw."""
    return norm_quantile(uniform_stream(seed, stream_index, size))


def draw_normals(
    seed: int,
    start: int,
    stop: int,
    dim: int,
    block_size: int | None = None,
) -> np.ndarray:
    """
    Rows start..stop-1 of the run's (n_samples, dim) matrix of standard normals.
    """
    block = block_size or settings.MC_STREAM_BLOCK
    if stop <= start:
        return np.empty((0, dim))
    first, last = start // block, (stop - 1) // block
    pieces = []
    for b in range(first, last + 1):
        rows = gaussian_stream(seed, b, block * dim).reshape(block, dim)
        lo = max(start - b * block, 0)
        hi = min(stop - b * block, block)
        pieces.append(rows[lo:hi])
    return np.concatenate(pieces, axis=0)


# ---------------- Exact accumulation ----------------


def _add_exact(bins: dict[int, int], values: np.ndarray) -> None:
    # x = m * 2**(e - 53) with integer m, |m| < 2**53
    for offset in range(0, values.size, _BINCOUNT_SLICE):
        part = values[offset : offset + _BINCOUNT_SLICE]
        mant, expo = np.frexp(part)
        ints = (mant * 2.0**_MANTISSA_BITS).astype(np.int64)
        hi = ints >> _HALF_BITS
        lo = ints & ((1 << _HALF_BITS) - 1)
        keys, inverse = np.unique(expo, return_inverse=True)
        hi_sums = np.bincount(inverse, weights=hi.astype(np.float64))
        lo_sums = np.bincount(inverse, weights=lo.astype(np.float64))
        for key, h, l in zip(keys.tolist(), hi_sums.tolist(), lo_sums.tolist()):
            bins[key] = bins.get(key, 0) + (int(h) << _HALF_BITS) + int(l)


def _two_square(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x*x == hi + lo exactly (Dekker's product, no overflow assumed)."""
    hi_sq = x * x
    scaled = x * _VELTKAMP
    x_hi = scaled - (scaled - x)
    x_lo = x - x_hi
    lo_sq = ((x_hi * x_hi - hi_sq) + 2.0 * x_hi * x_lo) + x_lo * x_lo
    return hi_sq, lo_sq


def _bins_value(bins: dict[int, int]) -> Fraction:
    if not bins:
        return Fraction(0)
    low = min(bins)
    numerator = sum(count << (key - low) for key, count in bins.items())
    shift = low - _MANTISSA_BITS
    if shift >= 0:
        return Fraction(numerator << shift)
    return Fraction(numerator, 1 << -shift)


class ExactAccumulator:
    """
    Running count, sum and sum of squares held exactly. `merge` is exact,
    associative and commutative.
    """

    __slots__ = ("count", "_sum", "_sum_sq")

    def __init__(self) -> None:
        self.count = 0
        self._sum: dict[int, int] = {}
        self._sum_sq: dict[int, int] = {}

    def push(self, values: np.ndarray) -> "ExactAccumulator":
        values = np.ascontiguousarray(values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError("cannot accumulate non-finite values")
        self.count += values.size
        _add_exact(self._sum, values)
        hi_sq, lo_sq = _two_square(values)
        _add_exact(self._sum_sq, hi_sq)
        _add_exact(self._sum_sq, lo_sq)
        return self

    def merge(self, other: "ExactAccumulator") -> "ExactAccumulator":
        merged = ExactAccumulator()
        merged.count = self.count + other.count
        for target, left, right in (
            (merged._sum, self._sum, other._sum),
            (merged._sum_sq, self._sum_sq, other._sum_sq),
        ):
            target.update(left)
            for key, value in right.items():
                target[key] = target.get(key, 0) + value
        return merged

    def total(self) -> Fraction:
        return _bins_value(self._sum)

    def mean(self) -> float:
        if self.count == 0:
            raise ConfigError("empty stream")
        return float(self.total() / self.count)

    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return 0.0
        s1 = self.total()
        s2 = _bins_value(self._sum_sq)
        var = (s2 - s1 * s1 / self.count) / (self.count - 1)
        return float(max(var, Fraction(0)))

    def estimate(self, seed: int) -> MCEstimate:
        mean = self.mean()
        stderr = math.sqrt(self.variance() / self.count)
        return MCEstimate(mean=mean, stderr=stderr, n_effective=self.count, seed_used=seed)


# ---------------- Chunked execution ----------------


def chunk_bounds(n_samples: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(start, min(start + chunk_size, n_samples)) for start in range(0, n_samples, chunk_size)]


def map_chunks(params: MCParams, work: Callable[[int, int], T]) -> list[T]:
    """
    Runs work(start, stop) over every chunk of the run; results come back in
    chunk order whatever order the workers finish in.
    """
    bounds = chunk_bounds(params.n_samples, params.chunk_size)
    logger.debug("running %d chunks on %d workers", len(bounds), params.max_workers)
    if params.max_workers == 1 or len(bounds) == 1:
        return [work(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=params.max_workers) as pool:
        return list(pool.map(lambda b: work(*b), bounds))


def estimate(chunks: Iterable[np.ndarray], params: MCParams) -> MCEstimate:
    """Mean and standard error of a payout stream delivered in chunks."""
    acc = ExactAccumulator()
    for chunk in chunks:
        acc = acc.merge(ExactAccumulator().push(chunk))
    if acc.count == 0:
        raise ConfigError("empty stream")
    return acc.estimate(params.seed)


# ---------------- Order statistics ----------------


def order_rank(alpha: float, n: int) -> int:
    """
    1-based rank k of the smallest order statistic whose empirical CDF k/n
    reaches alpha; 0 when alpha == 0.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return 0
    # alpha*n can land a hair above an integer in floating point
    return min(max(math.ceil(alpha * n - 1e-9), 1), n)


def empirical_quantile(sorted_sample: np.ndarray, alpha: float) -> float:
    """q(alpha) = inf{x : F_N(x) >= alpha} on an ascending sample."""
    if len(sorted_sample) == 0:
        raise ConfigError("empty sample")
    k = order_rank(alpha, len(sorted_sample))
    if k == 0:
        return float("-inf")
    return float(sorted_sample[k - 1])
