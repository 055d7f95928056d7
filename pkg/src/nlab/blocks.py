"""Block census A_E(alpha, n) with overlaps allowed, plus frequency reports.

Every length-k window of the digit prefix is one occurrence, so a census of
n digits always holds n - k + 1 windows.  Windows crossing the boundary
between consecutive entries a(n), a(n+1) count like any other.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .digits import (
    ALPHABET,
    DEFAULT_CHUNK,
    Block,
    StreamSpec,
    available_stop,
    digit_lengths,
    digits_for_entries,
    entry_values,
    iter_digit_chunks,
)
from .errors import OutOfRangeError, UsageError
from .primes import PrimeTables

DENSE_MAX = 10**7
_CODE_MAX = 1 << 62


def count_overlapping(haystack: Block, needle: Block) -> int:
    """Occurrences of needle in haystack, one per start position (KMP)."""
    if haystack.base != needle.base:
        raise UsageError(f"base mismatch: {haystack.base} vs {needle.base}")
    pat, text = needle.digits, haystack.digits
    fail = [0] * len(pat)
    k = 0
    for i in range(1, len(pat)):
        while k and pat[i] != pat[k]:
            k = fail[k - 1]
        if pat[i] == pat[k]:
            k += 1
        fail[i] = k
    hits = k = 0
    for d in text:
        while k and d != pat[k]:
            k = fail[k - 1]
        if d == pat[k]:
            k += 1
        if k == len(pat):
            hits += 1
            k = fail[k - 1]
    return hits


@dataclass
class BlockCensus:
    base: int
    order: int
    n_digits: int
    counts: np.ndarray | dict

    @property
    def dense(self) -> bool:
        return isinstance(self.counts, np.ndarray)

    @property
    def windows(self) -> int:
        return max(0, self.n_digits - self.order + 1)

    def code(self, block: Block) -> int | tuple:
        if block.base != self.base or len(block) != self.order:
            raise UsageError(f"expected a base-{self.base} block of length {self.order}")
        if self.dense or self.base**self.order <= _CODE_MAX:
            c = 0
            for d in block.digits:
                c = c * self.base + d
            return c
        return block.digits

    def __getitem__(self, block: Block) -> int:
        key = self.code(block)
        if self.dense:
            return int(self.counts[key])
        return int(self.counts.get(key, 0))

    def items(self) -> list[tuple[Block, int]]:
        """(block, count) pairs in lexicographic block order; dense censuses include zeros."""
        if self.dense:
            return [(self._decode(c), int(n)) for c, n in enumerate(self.counts.tolist())]
        return [(self._decode(c), int(self.counts[c])) for c in sorted(self.counts)]

    def total(self) -> int:
        if self.dense:
            return int(self.counts.sum())
        return sum(self.counts.values())

    def _decode(self, code) -> Block:
        if isinstance(code, tuple):
            return Block(self.base, code)
        out = []
        for _ in range(self.order):
            code, r = divmod(code, self.base)
            out.append(r)
        return Block(self.base, tuple(reversed(out)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockCensus):
            return NotImplemented
        if (self.base, self.order, self.n_digits) != (other.base, other.order, other.n_digits):
            return False
        if self.dense and other.dense:
            return np.array_equal(self.counts, other.counts)
        return dict(self.items()) == dict(other.items())


class _Accumulator:
    def __init__(self, base: int, order: int):
        if order < 1:
            raise UsageError("order must be >= 1")
        self.base, self.order = base, order
        self.space = base**order
        if self.space <= DENSE_MAX:
            self.counts = np.zeros(self.space, dtype=np.int64)
        else:
            self.counts = Counter()
        # int64 window codes overflow past this; fall back to tuple keys
        self._tuples = self.space > _CODE_MAX

    def add(self, digits: np.ndarray, n_windows: int | None = None) -> None:
        """Count windows of ``digits`` starting at positions < n_windows."""
        k = self.order
        full = len(digits) - k + 1
        n = full if n_windows is None else min(n_windows, full)
        if n <= 0:
            return
        if self._tuples:
            seq = digits[: n + k - 1].tolist()
            self.counts.update(tuple(seq[i : i + k]) for i in range(n))
            return
        arr = digits.astype(np.int64)
        codes = np.zeros(n, dtype=np.int64)
        for j in range(k):
            codes *= self.base
            codes += arr[j : j + n]
        if isinstance(self.counts, np.ndarray):
            self.counts += np.bincount(codes, minlength=self.space)
        else:
            vals, cnts = np.unique(codes, return_counts=True)
            for v, c in zip(vals.tolist(), cnts.tolist()):
                self.counts[v] += c

    def merge(self, other: "_Accumulator") -> None:
        if isinstance(self.counts, np.ndarray):
            self.counts += other.counts
        else:
            self.counts.update(other.counts)

    def finish(self, n_digits: int) -> BlockCensus:
        counts = self.counts if isinstance(self.counts, np.ndarray) else dict(self.counts)
        return BlockCensus(self.base, self.order, n_digits, counts)


def census_digits(digits, base: int, order: int) -> BlockCensus:
    """Census of an in-memory digit string (Block, sequence, or uint8 array)."""
    if isinstance(digits, Block):
        base, digits = digits.base, digits.digits
    arr = np.asarray(digits, dtype=np.uint8)
    acc = _Accumulator(base, order)
    acc.add(arr)
    return acc.finish(len(arr))


def _resolve_scope(spec: StreamSpec, n_digits, n_entries) -> tuple[StreamSpec, int | None]:
    if (n_digits is None) == (n_entries is None):
        raise UsageError("give exactly one of n_digits / n_entries")
    if n_entries is not None:
        if n_entries < 1:
            raise UsageError("n_entries must be positive")
        return replace(spec, entry_count=n_entries), None
    if n_digits < 1:
        raise UsageError("n_digits must be positive")
    return spec, n_digits


def census(
    spec: StreamSpec,
    order: int,
    tables: PrimeTables | None = None,
    *,
    n_digits: int | None = None,
    n_entries: int | None = None,
    chunk_entries: int = DEFAULT_CHUNK,
) -> BlockCensus:
    """Sequential streaming census; the last order-1 digits carry into the next chunk."""
    spec, cap = _resolve_scope(spec, n_digits, n_entries)
    acc = _Accumulator(spec.base, order)
    carry = np.zeros(0, dtype=np.uint8)
    seen = 0
    for chunk in iter_digit_chunks(spec, tables, chunk_entries):
        if cap is not None:
            chunk = chunk[: cap - seen]
        seen += len(chunk)
        buf = np.concatenate([carry, chunk])
        acc.add(buf)
        if order > 1:
            carry = buf[len(buf) - min(len(buf), order - 1) :]
        if cap is not None and seen >= cap:
            break
    if cap is not None and seen < cap:
        raise UsageError(f"stream holds only {seen} digits, {cap} requested")
    return acc.finish(seen)


def _entries_for_digits(spec: StreamSpec, cap: int, tables) -> int:
    """Number of entries whose concatenation first reaches ``cap`` digits."""
    n = spec.start_index
    have = 0
    stop = spec.stop_index
    avail = available_stop(spec.kind, tables)
    if avail is not None:
        stop = avail if stop is None else min(stop, avail)
    while have < cap:
        hi = n + DEFAULT_CHUNK if stop is None else min(n + DEFAULT_CHUNK, stop)
        if hi <= n:
            if avail is not None and n >= avail:
                raise OutOfRangeError(f"a({n}) of {spec.kind.value} is beyond the sieved range")
            raise UsageError(f"stream holds only {have} digits, {cap} requested")
        lengths = digit_lengths(entry_values(spec.kind, n, hi, tables), spec.base)
        cum = np.cumsum(lengths) + have
        if cum[-1] >= cap:
            return int(np.searchsorted(cum, cap)) + 1 + n - spec.start_index
        have = int(cum[-1])
        n = hi
    return n - spec.start_index


def census_parallel(
    spec: StreamSpec,
    order: int,
    tables: PrimeTables | None = None,
    *,
    n_digits: int | None = None,
    n_entries: int | None = None,
    workers: int = 4,
    shards: int | None = None,
) -> BlockCensus:
    """Census sharded by entry ranges.

    Each shard owns the windows that start inside its own digits and reads up
    to order-1 following entries as lookahead, so no window is counted twice.
    """
    spec, cap = _resolve_scope(spec, n_digits, n_entries)
    if cap is not None:
        n_entries = _entries_for_digits(spec, cap, tables)
    lo0 = spec.start_index
    end = lo0 + n_entries
    shards = shards or max(1, workers * 4)
    edges = np.linspace(lo0, end, shards + 1).astype(np.int64).tolist()
    spans = [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    lengths = [
        int(digit_lengths(entry_values(spec.kind, a, b, tables), spec.base).sum()) for a, b in spans
    ]
    total = sum(lengths) if cap is None else cap
    offsets = np.concatenate([[0], np.cumsum(lengths)]).tolist()
    last_start = total - order + 1

    def work(i):
        a, b = spans[i]
        off = offsets[i]
        acc = _Accumulator(spec.base, order)
        if off >= total:
            return acc
        digits = digits_for_entries(spec, a, min(b + order - 1, end), tables)
        digits = digits[: total - off]
        acc.add(digits, n_windows=min(offsets[i + 1], last_start) - off)
        return acc

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(work, range(len(spans))))
    acc = _Accumulator(spec.base, order)
    for part in parts:
        acc.merge(part)
    return acc.finish(total)


# --- reports --------------------------------------------------------------


@dataclass
class FrequencyRow:
    block: Block
    count: int
    frequency: float
    expected: float


@dataclass
class FrequencyReport:
    base: int
    order: int
    denominator: int
    rows: list[FrequencyRow]
    max_deviation: float
    label: str = "Frequency"

    def frequency(self, block: Block | str) -> float:
        key = str(block)
        for row in self.rows:
            if str(row.block) == key:
                return row.frequency
        return 0.0

    def display_order(self) -> list[FrequencyRow]:
        """Single digits listed 1, 2, ..., g-1, 0 as in the published tables."""
        if self.order != 1:
            return list(self.rows)
        return sorted(self.rows, key=lambda r: (r.block.digits[0] == 0, r.block.digits))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["block", "count", "frequency"])
        for row in self.rows:
            w.writerow([str(row.block), row.count, repr(row.frequency)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "base": self.base,
            "order": self.order,
            "denominator": self.denominator,
            "rows": [
                {"block": str(r.block), "count": r.count, "frequency": r.frequency}
                for r in self.rows
            ],
            "max_deviation": self.max_deviation,
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_markdown(self) -> str:
        head = "Digit" if self.order == 1 else "Block"
        lines = [f"| {head} | {self.label} |", "|---|---|"]
        for row in self.display_order():
            lines.append(f"| {row.block} | {row.frequency:.6g} |")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return {"csv": self.to_csv, "json": self.to_json, "md": self.to_markdown}[fmt]()


def frequency_report(c: BlockCensus) -> FrequencyReport:
    """Frequencies count / (n - k + 1) and max |frequency - g^-k|."""
    denom = c.windows
    if denom <= 0:
        raise UsageError(f"census of {c.n_digits} digits has no windows of order {c.order}")
    expected = float(c.base) ** -c.order
    rows = [FrequencyRow(b, n, n / denom, expected) for b, n in c.items()]
    dev = max((abs(r.frequency - expected) for r in rows), default=0.0)
    if len(rows) < c.base**c.order:
        # unobserved blocks sit at frequency 0
        dev = max(dev, expected)
    return FrequencyReport(c.base, c.order, denom, rows, dev)


def benford_leading(
    spec: StreamSpec, entries: int, tables: PrimeTables | None = None
) -> FrequencyReport:
    """Leading-digit distribution of a(n) over ``entries`` entries; a(n) = 0 is skipped.

    ``expected`` holds Benford's log_g(1 + 1/d) and max_deviation is measured
    against it.
    """
    if entries < 1:
        raise UsageError("entries must be >= 1")
    g = spec.base
    counts = np.zeros(g, dtype=np.int64)
    lo, stop = spec.start_index, spec.start_index + entries
    for a in range(lo, stop, DEFAULT_CHUNK):
        b = min(a + DEFAULT_CHUNK, stop)
        vals = entry_values(spec.kind, a, b, tables)
        vals = vals[vals != 0]
        if len(vals) == 0:
            continue
        lengths = digit_lengths(vals, g)
        if vals.dtype == object:
            lead = np.array([v // g ** (n - 1) for v, n in zip(vals, lengths.tolist())])
        else:
            lead = vals // np.power(np.int64(g), lengths - 1)
        counts += np.bincount(lead.astype(np.int64), minlength=g)
    denom = int(counts[1:].sum())
    if denom == 0:
        raise UsageError("no nonzero entries in range")
    rows = [
        FrequencyRow(Block(g, (d,)), int(counts[d]), counts[d] / denom, math.log(1 + 1 / d, g))
        for d in range(1, g)
    ]
    dev = max(abs(r.frequency - r.expected) for r in rows)
    return FrequencyReport(g, 1, denom, rows, dev, label="Leading-digit frequency")


__all__ = [
    "ALPHABET",
    "BlockCensus",
    "FrequencyReport",
    "FrequencyRow",
    "benford_leading",
    "census",
    "census_digits",
    "census_parallel",
    "count_overlapping",
    "frequency_report",
]
