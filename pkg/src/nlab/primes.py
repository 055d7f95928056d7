"""Prime tables: segmented sieve, pi(x) rank queries, p_m, gaps g_m.

The sieve result is kept as a packed bitset (bit i set iff i is prime, LSB
first within each byte) together with a rank directory holding one running
count per 4096-bit block, so pi(x) is a directory lookup plus a popcount over
at most 512 bytes.
"""

from __future__ import annotations

import hashlib
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutOfRangeError, UsageError

RANK_BLOCK_BITS = 4096
RANK_BLOCK_BYTES = RANK_BLOCK_BITS // 8
DEFAULT_SEGMENT = 1 << 20

# Below these x the inequalities x/(ln x - 1) <= pi(x) and pi(x) <= x/(ln x - 1.1)
# fail at x = 5392 and x = 60183 respectively; both thresholds are sharp.
X_LOW = 5393
X_HIGH = 60184

CACHE_MAGIC = b"NLAB1"
CACHE_CHECK_PREFIX = 10_000

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def sieve_reference(limit: int) -> np.ndarray:
    """Single-pass Eratosthenes; boolean mask of length limit + 1."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[: min(2, limit + 1)] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return mask


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    seg = np.ones(hi - lo, dtype=bool)
    for p in base.tolist():
        pp = p * p
        if pp >= hi:
            break
        start = max(pp, -(-lo // p) * p)
        seg[start - lo :: p] = False
    if lo < 2:
        seg[: 2 - lo] = False
    return seg


@dataclass(frozen=True, eq=False)
class PrimeTables:
    limit: int
    bits: np.ndarray = field(repr=False)
    primes: np.ndarray = field(repr=False)
    rank: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.primes)

    @property
    def largest_prime(self) -> int:
        return int(self.primes[-1])

    def is_prime(self, n: int) -> bool:
        if not 0 <= n <= self.limit:
            raise OutOfRangeError(f"{n} outside sieved range [0, {self.limit}]")
        return bool((self.bits[n >> 3] >> (n & 7)) & 1)

    def mask(self, lo: int, hi: int) -> np.ndarray:
        """Boolean primality mask for lo <= n < hi."""
        if lo < 0 or hi > self.limit + 1 or lo > hi:
            raise OutOfRangeError(f"[{lo}, {hi}) outside sieved range [0, {self.limit}]")
        b0, b1 = lo >> 3, (hi + 7) >> 3
        unpacked = np.unpackbits(self.bits[b0:b1], bitorder="little")
        off = lo - (b0 << 3)
        return unpacked[off : off + hi - lo].astype(bool)

    def pi(self, x: int) -> int:
        if x < 0 or x > self.limit:
            raise OutOfRangeError(f"pi({x}) needs sieve limit >= {x}, have {self.limit}")
        block = x >> 12
        b0 = block * RANK_BLOCK_BYTES
        b1 = x >> 3
        total = int(self.rank[block]) + int(_POPCOUNT[self.bits[b0:b1]].sum(dtype=np.int64))
        low_bits = int(self.bits[b1]) & ((2 << (x & 7)) - 1)
        return total + _POPCOUNT[low_bits].item()

    def pi_range(self, lo: int, hi: int) -> np.ndarray:
        """pi(n) for lo <= n < hi as an int64 array."""
        if lo >= hi:
            return np.zeros(0, dtype=np.int64)
        before = self.pi(lo - 1) if lo > 0 else 0
        out = np.cumsum(self.mask(lo, hi), dtype=np.int64)
        out += before
        return out

    def nth_prime(self, m: int) -> int:
        if m < 1 or m > len(self.primes):
            raise OutOfRangeError(
                f"p_{m} not available: {len(self.primes)} primes sieved up to {self.limit}"
            )
        return int(self.primes[m - 1])

    def gap(self, m: int) -> int:
        if m < 1 or m + 1 > len(self.primes):
            raise OutOfRangeError(f"g_{m} needs p_{m + 1}, sieve limit {self.limit}")
        return int(self.primes[m] - self.primes[m - 1])

    def gaps(self) -> np.ndarray:
        """g_m for m = 1 .. count-1 (index m-1)."""
        return np.diff(self.primes)


def _rank_directory(bits: np.ndarray) -> np.ndarray:
    nblocks = -(-len(bits) // RANK_BLOCK_BYTES)
    padded = np.zeros(nblocks * RANK_BLOCK_BYTES, dtype=np.uint8)
    padded[: len(bits)] = bits
    per_block = _POPCOUNT[padded].reshape(nblocks, RANK_BLOCK_BYTES).sum(axis=1, dtype=np.int64)
    rank = np.zeros(nblocks + 1, dtype=np.int64)
    np.cumsum(per_block, out=rank[1:])
    return rank


def _primes_from_bits(bits: np.ndarray, limit: int, chunk_bytes: int = 1 << 20) -> np.ndarray:
    parts = []
    for b0 in range(0, len(bits), chunk_bytes):
        unpacked = np.unpackbits(bits[b0 : b0 + chunk_bytes], bitorder="little")
        parts.append(np.flatnonzero(unpacked).astype(np.int64) + (b0 << 3))
    primes = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return primes[primes <= limit]


def build_tables(
    limit: int, segment_size: int = DEFAULT_SEGMENT, workers: int = 1
) -> PrimeTables:
    """Sieve [0, limit] in segments of ``segment_size`` numbers.

    Segments are independent given the base primes up to sqrt(limit), so with
    ``workers > 1`` they are sieved on a thread pool; output is identical.
    """
    if limit < 2:
        raise UsageError(f"sieve limit must be >= 2, got {limit}")
    if segment_size <= 0 or segment_size % 8:
        raise UsageError("segment_size must be a positive multiple of 8")
    base_mask = sieve_reference(math.isqrt(limit))
    base = np.flatnonzero(base_mask).astype(np.int64)
    bounds = [(lo, min(lo + segment_size, limit + 1)) for lo in range(0, limit + 1, segment_size)]

    def work(span):
        lo, hi = span
        seg = _sieve_segment(lo, hi, base)
        return np.packbits(seg, bitorder="little"), np.flatnonzero(seg).astype(np.int64) + lo

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, bounds))
    else:
        results = [work(span) for span in bounds]
    bits = np.concatenate([r[0] for r in results])
    primes = np.concatenate([r[1] for r in results])
    return PrimeTables(limit=limit, bits=bits, primes=primes, rank=_rank_directory(bits))


def tables_from_mask(mask: np.ndarray) -> PrimeTables:
    """Wrap a plain boolean primality mask (index = integer)."""
    limit = len(mask) - 1
    bits = np.packbits(mask.astype(bool), bitorder="little")
    primes = np.flatnonzero(mask).astype(np.int64)
    return PrimeTables(limit=limit, bits=bits, primes=primes, rank=_rank_directory(bits))


def build_covering(x: int, headroom: int = 1024, **kw) -> PrimeTables:
    """Tables reaching past x to the next prime, so p_{pi(x)+1} is known."""
    limit = max(2, x) + headroom
    while True:
        tables = build_tables(limit, **kw)
        if tables.largest_prime > x:
            return tables
        limit *= 2


def pi_of(tables: PrimeTables, x: int) -> int:
    return tables.pi(x)


def nth_prime(tables: PrimeTables, m: int) -> int:
    return tables.nth_prime(m)


def gap(tables: PrimeTables, m: int) -> int:
    return tables.gap(m)


# --- gap statistics -------------------------------------------------------


@dataclass
class GapStats:
    max_ratio: float
    argmax_m: int
    ratio_series: list[tuple[int, float]] | None = None

    @property
    def m_emp(self) -> float:
        return self.max_ratio


def cramer_stats(tables: PrimeTables, m_min: int = 1, series: bool = False) -> GapStats:
    """Maximum of g_m / ln^2 p_m over every sieved gap with m >= m_min."""
    if tables.limit < 3:
        raise UsageError("cramer_stats needs limit >= 3")
    p = tables.primes[:-1].astype(np.float64)
    g = tables.gaps().astype(np.float64)
    ratios = g / np.log(p) ** 2
    ratios = ratios[m_min - 1 :]
    if len(ratios) == 0:
        raise OutOfRangeError(f"no sieved gaps with m >= {m_min}")
    i = int(np.argmax(ratios))
    out = GapStats(max_ratio=float(ratios[i]), argmax_m=i + m_min)
    if series:
        out.ratio_series = [(m_min + j, float(r)) for j, r in enumerate(ratios)]
    return out


def default_big_m(stats: GapStats) -> float:
    """Instantiate the Cramer constant M as max(2.2, 1.05 * empirical max)."""
    return max(2.2, 1.05 * stats.max_ratio)


@dataclass(frozen=True)
class DusartViolation:
    x: int
    which: str  # "lower" or "upper"
    pi: int
    bound: float


def dusart_check(
    tables: PrimeTables, x_lo: int, x_hi: int, chunk: int = 1 << 20
) -> list[DusartViolation]:
    """Check x/(ln x - 1) <= pi(x) (x >= X_LOW) and pi(x) <= x/(ln x - 1.1) (x >= X_HIGH)."""
    if x_lo < 2:
        raise UsageError("dusart_check needs x_lo >= 2")
    if x_hi > tables.limit:
        raise OutOfRangeError(f"x_hi={x_hi} beyond sieve limit {tables.limit}")
    out: list[DusartViolation] = []
    start = max(x_lo, X_LOW)
    for lo in range(start, x_hi + 1, chunk):
        hi = min(lo + chunk, x_hi + 1)
        x = np.arange(lo, hi, dtype=np.int64)
        pis = tables.pi_range(lo, hi)
        lx = np.log(x.astype(np.float64))
        lower = x / (lx - 1.0)
        for j in np.flatnonzero(pis < lower).tolist():
            out.append(DusartViolation(int(x[j]), "lower", int(pis[j]), float(lower[j])))
        sel = x >= X_HIGH
        upper = x / (lx - 1.1)
        for j in np.flatnonzero(sel & (pis > upper)).tolist():
            out.append(DusartViolation(int(x[j]), "upper", int(pis[j]), float(upper[j])))
    out.sort(key=lambda v: (v.x, v.which))
    return out


# --- cache file -----------------------------------------------------------


def _prefix_digest(mask: np.ndarray) -> str:
    return hashlib.sha256(np.packbits(mask, bitorder="little").tobytes()).hexdigest()


def save_cache(tables: PrimeTables, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<Q", tables.limit))
        fh.write(tables.bits.tobytes())


def load_cache(path: str | Path) -> PrimeTables:
    raw = Path(path).read_bytes()
    if raw[:5] != CACHE_MAGIC:
        raise UsageError(f"{path}: bad magic {raw[:5]!r}")
    if len(raw) < 13:
        raise UsageError(f"{path}: truncated header")
    (limit,) = struct.unpack("<Q", raw[5:13])
    nbytes = (limit + 1 + 7) // 8
    if len(raw) != 13 + nbytes:
        raise UsageError(f"{path}: expected {nbytes} payload bytes, found {len(raw) - 13}")
    bits = np.frombuffer(raw, dtype=np.uint8, offset=13).copy()
    # bits past `limit` in the final byte are padding
    tail = (limit + 1) & 7
    if tail:
        bits[-1] &= (1 << tail) - 1
    p = min(limit, CACHE_CHECK_PREFIX)
    loaded = np.unpackbits(bits[: (p + 8) // 8], bitorder="little")[: p + 1].astype(bool)
    if _prefix_digest(loaded) != _prefix_digest(sieve_reference(p)):
        raise UsageError(f"{path}: prefix checksum mismatch against a fresh sieve")
    return PrimeTables(
        limit=limit, bits=bits, primes=_primes_from_bits(bits, limit), rank=_rank_directory(bits)
    )
