"""Base-g digit expansion and streaming concatenation constants 0.a(1)a(2)...

Entries are expanded in vectorized chunks: a chunk of values a(lo..hi) becomes
one uint8 array holding their concatenated base-g digits, most significant
digit first.  Nothing larger than one chunk is ever materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterator, Sequence

import numpy as np

from .errors import OutOfRangeError, UsageError
from .primes import PrimeTables

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_BASE = len(ALPHABET)
DEFAULT_CHUNK = 1 << 18
# n*n stays inside int64 below this
_SQUARE_INT64_MAX_N = 3_037_000_499


class Kind(str, Enum):
    NATURAL = "natural"
    SQUARE = "square"
    FLOOR_SQRT = "floor-sqrt"
    PRIMES = "primes"
    PRIME_COUNT = "prime-count"


def _check_base(base: int) -> None:
    if not 2 <= base <= MAX_BASE:
        raise UsageError(f"base must be in [2, {MAX_BASE}], got {base}")


@dataclass(frozen=True)
class Block:
    """A nonempty string of base-g digits, most significant first."""

    base: int
    digits: tuple[int, ...]

    def __post_init__(self):
        _check_base(self.base)
        if not self.digits:
            raise UsageError("a block has length >= 1")
        if any(not 0 <= d < self.base for d in self.digits):
            raise UsageError(f"digit out of range for base {self.base}: {self.digits}")

    @classmethod
    def from_string(cls, text: str, base: int = 10) -> "Block":
        try:
            digits = tuple(ALPHABET.index(c) for c in text.lower())
        except ValueError:
            raise UsageError(f"not a base-{base} digit string: {text!r}") from None
        return cls(base, digits)

    def __len__(self) -> int:
        return len(self.digits)

    def __str__(self) -> str:
        return "".join(ALPHABET[d] for d in self.digits)


def digits_of(n: int, base: int = 10) -> Block:
    _check_base(base)
    if n < 0:
        raise UsageError(f"digits_of needs n >= 0, got {n}")
    if n == 0:
        return Block(base, (0,))
    out = []
    while n:
        n, r = divmod(n, base)
        out.append(r)
    return Block(base, tuple(reversed(out)))


def from_digits(digits: Sequence[int], base: int) -> int:
    n = 0
    for d in digits:
        n = n * base + d
    return n


@dataclass(frozen=True)
class StreamSpec:
    kind: Kind
    base: int = 10
    start_index: int = 1
    entry_count: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        _check_base(self.base)
        if self.start_index not in (0, 1):
            raise UsageError("start_index must be 0 or 1")
        if self.kind is Kind.PRIMES and self.start_index == 0:
            raise UsageError("the primes sequence starts at p_1")
        if self.entry_count is not None and self.entry_count < 0:
            raise UsageError("entry_count must be >= 0")

    @property
    def stop_index(self) -> int | None:
        if self.entry_count is None:
            return None
        return self.start_index + self.entry_count


def available_stop(kind: Kind, tables: PrimeTables | None) -> int | None:
    """First index n whose entry a(n) the tables cannot supply (None = unbounded)."""
    kind = Kind(kind)
    if kind is Kind.PRIME_COUNT:
        return 0 if tables is None else tables.limit + 1
    if kind is Kind.PRIMES:
        return 1 if tables is None else tables.count + 1
    return None


def entry_values(kind: Kind, lo: int, hi: int, tables: PrimeTables | None = None) -> np.ndarray:
    """a(n) for lo <= n < hi."""
    kind = Kind(kind)
    stop = available_stop(kind, tables)
    if stop is not None and hi > stop:
        raise OutOfRangeError(f"a({max(lo, stop)}) of {kind.value} is beyond the sieved range")
    if kind is Kind.PRIME_COUNT:
        return tables.pi_range(lo, hi)
    if kind is Kind.PRIMES:
        return tables.primes[lo - 1 : hi - 1].copy()
    n = np.arange(lo, hi, dtype=np.int64)
    if kind is Kind.NATURAL:
        return n
    if kind is Kind.SQUARE:
        if hi - 1 > _SQUARE_INT64_MAX_N:
            return np.array([k * k for k in range(lo, hi)], dtype=object)
        return n * n
    r = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    r -= (r * r > n).astype(np.int64)
    r += ((r + 1) * (r + 1) <= n).astype(np.int64)
    return r


def digit_lengths(values: np.ndarray, base: int) -> np.ndarray:
    lengths = np.ones(len(values), dtype=np.int64)
    if len(values) == 0:
        return lengths
    top = int(values.max())
    pw = base
    while pw <= top:
        lengths += values >= pw
        pw *= base
    return lengths


def expand(values: np.ndarray, base: int) -> np.ndarray:
    """Concatenated base-g digits of every value, as one uint8 array."""
    lengths = digit_lengths(values, base)
    ends = np.cumsum(lengths)
    total = int(ends[-1]) if len(ends) else 0
    out = np.empty(total, dtype=np.uint8)
    v = values.copy()
    pos = ends - 1
    for j in range(int(lengths.max()) if len(lengths) else 0):
        sel = lengths > j
        out[pos[sel] - j] = (v[sel] % base).astype(np.uint8)
        v //= base
    return out


def digits_for_entries(
    spec: StreamSpec, lo: int, hi: int, tables: PrimeTables | None = None
) -> np.ndarray:
    return expand(entry_values(spec.kind, lo, hi, tables), spec.base)


def iter_digit_chunks(
    spec: StreamSpec, tables: PrimeTables | None = None, chunk_entries: int = DEFAULT_CHUNK
) -> Iterator[np.ndarray]:
    """Pull-based digit stream, one uint8 array per chunk of entries.

    Raises OutOfRangeError, naming the first unavailable n, once the stream
    runs past what the tables cover; everything before it is yielded first.
    """
    avail = available_stop(spec.kind, tables)
    stop = spec.stop_index
    n = spec.start_index
    while stop is None or n < stop:
        hi = n + chunk_entries if stop is None else min(n + chunk_entries, stop)
        if avail is not None and hi > avail:
            if n < avail:
                yield digits_for_entries(spec, n, avail, tables)
            raise OutOfRangeError(
                f"a({max(n, avail)}) of {spec.kind.value} is beyond the sieved range"
            )
        yield digits_for_entries(spec, n, hi, tables)
        n = hi


def stream_digits(spec: StreamSpec, tables: PrimeTables | None = None) -> Iterator[int]:
    for chunk in iter_digit_chunks(spec, tables):
        yield from chunk.tolist()


def prefix(spec: StreamSpec, n_digits: int, tables: PrimeTables | None = None) -> Block:
    if n_digits < 1:
        raise UsageError("n_digits must be >= 1")
    # small first chunk so short prefixes don't expand a full chunk
    parts, have = [], 0
    chunk = max(8, min(DEFAULT_CHUNK, n_digits))
    for part in iter_digit_chunks(spec, tables, chunk_entries=chunk):
        parts.append(part)
        have += len(part)
        if have >= n_digits:
            break
    if have < n_digits:
        raise UsageError(f"stream holds only {have} digits, {n_digits} requested")
    digits = np.concatenate(parts)[:n_digits]
    return Block(spec.base, tuple(digits.tolist()))


def count_digits(spec: StreamSpec, tables: PrimeTables | None = None) -> int:
    """Total digit count of a finite stream (sum of per-entry lengths)."""
    if spec.entry_count is None:
        raise UsageError("unbounded stream has no digit count")
    total = 0
    stop = spec.stop_index
    for lo in range(spec.start_index, stop, DEFAULT_CHUNK):
        hi = min(lo + DEFAULT_CHUNK, stop)
        total += int(digit_lengths(entry_values(spec.kind, lo, hi, tables), spec.base).sum())
    return total


def write_dump(
    fh: IO[str], spec: StreamSpec, tables: PrimeTables | None = None, header: bool = True
) -> None:
    if spec.entry_count is None:
        raise UsageError("digit dumps need a finite entry_count")
    if header:
        fh.write(f"# {spec.kind.value} {spec.base} {spec.start_index} {spec.entry_count}\n")
    table = np.frombuffer(ALPHABET.encode("ascii"), dtype=np.uint8)
    for chunk in iter_digit_chunks(spec, tables):
        fh.write(table[chunk].tobytes().decode("ascii"))
    fh.write("\n")


def read_dump(fh: IO[str]) -> tuple[StreamSpec | None, Block]:
    lines = fh.read().splitlines()
    spec = None
    if lines and lines[0].startswith("#"):
        kind, base, start, entries = lines[0][1:].split()
        spec = StreamSpec(Kind(kind), int(base), int(start), int(entries))
        lines = lines[1:]
    base = spec.base if spec else MAX_BASE
    return spec, Block.from_string(lines[0].strip(), base)


def required_limit(spec: StreamSpec) -> int:
    """Smallest sieve limit covering every entry of a finite stream."""
    if spec.entry_count is None:
        raise UsageError("unbounded stream")
    last = spec.start_index + spec.entry_count - 1
    if spec.kind is Kind.PRIME_COUNT:
        return max(2, last)
    if spec.kind is Kind.PRIMES:
        if last < 1:
            return 2
        # p_n < n(ln n + ln ln n) for n >= 6
        return 13 if last < 6 else int(last * (math.log(last) + math.log(math.log(last)))) + 1
    return 2
