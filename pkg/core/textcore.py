"""
Texts, suffix arrays, BWT and LCP construction, and the brute-force oracle.

Symbols are small integers held in numpy arrays.  Payload bytes keep their
value (2..255); sentinels take the codes below 2.  In a collection of K
strings the sentinel of string g (0-based) is ``g + 2 - K``, so for a pair
the sentinels are exactly 0 and 1 and every sentinel sorts before every
payload byte.

Suffix arrays are built by prefix doubling over numpy rank arrays and LCP
arrays with Kasai's scan.  Both are meant for reference construction and
tests; merging never needs a suffix array.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, NamedTuple, Sequence

import numpy as np
from numba import njit

from core.errors import LengthMismatch, MalformedBwt, ReservedByte

logger = logging.getLogger(__name__)

SYMBOL_DTYPE = np.int32
LCP_DTYPE = np.int32
FIRST_PAYLOAD = 2


def sentinel_code(rank: int, total: int = 2) -> int:
    """Code of the sentinel of string ``rank`` in a collection of ``total`` strings."""
    if not 0 <= rank < total:
        raise ValueError(f"sentinel rank {rank} outside collection of {total}")
    return rank + FIRST_PAYLOAD - total


def symbol_label(code: int, total: int = 2) -> str:
    """Readable label for a symbol code: ``#i`` for sentinels, the character otherwise."""
    if code < FIRST_PAYLOAD:
        return f"#{code - FIRST_PAYLOAD + total}"
    return chr(code)


@dataclass(frozen=True)
class Text:
    """A payload followed by one sentinel."""

    payload: bytes
    sentinel_rank: int = 0
    string_total: int = 2

    @property
    def n(self) -> int:
        return len(self.payload) + 1

    @property
    def sentinel(self) -> int:
        return sentinel_code(self.sentinel_rank, self.string_total)

    @cached_property
    def symbols(self) -> np.ndarray:
        out = np.empty(self.n, dtype=SYMBOL_DTYPE)
        out[:-1] = np.frombuffer(self.payload, dtype=np.uint8)
        out[-1] = self.sentinel
        return out


@dataclass(frozen=True, eq=False)
class SuffixArray:
    """Suffix array with 1-based start positions, lexicographic order."""

    sa: np.ndarray

    def __len__(self) -> int:
        return int(self.sa.shape[0])

    @property
    def zero_based(self) -> np.ndarray:
        return self.sa - 1


@dataclass(frozen=True, eq=False)
class LcpArray:
    """
    LCP array with ``-1`` bookends.

    ``values`` has length n+1; ``values[p]`` holds the 1-based entry p+1, so
    ``values[0]`` and ``values[n]`` are the bookends and ``values[p]`` for
    0 < p < n is the common prefix of rows p-1 and p (0-based rows).
    """

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0]) - 1

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def max(self) -> int:
        return int(self.interior.max()) if self.n > 1 else 0

    def mean(self) -> float:
        return float(self.interior.mean()) if self.n > 1 else 0.0

    def to_external(self) -> np.ndarray:
        """The n stored values of the .lcp format (slot 1 written as 0)."""
        out = self.values[: self.n].astype(np.uint32)
        if self.n:
            out[0] = 0
        return out

    @classmethod
    def from_external(cls, stored: np.ndarray) -> "LcpArray":
        n = int(stored.shape[0])
        values = np.empty(n + 1, dtype=LCP_DTYPE)
        values[:n] = stored
        values[0] = -1
        values[n] = -1
        return cls(values)


@dataclass(frozen=True, eq=False)
class BwtString:
    """A (multi-string) BWT: symbol codes plus the number of strings it covers."""

    symbols: np.ndarray
    string_count: int = 1
    string_total: int = field(default=2, compare=False)

    def __len__(self) -> int:
        return int(self.symbols.shape[0])

    def sentinel_positions(self) -> np.ndarray:
        return np.flatnonzero(self.symbols < FIRST_PAYLOAD)

    def to_bytes(self) -> bytes:
        """External form: every sentinel written as 0x00."""
        out = self.symbols.astype(np.uint8)
        out[self.symbols < FIRST_PAYLOAD] = 0
        return out.tobytes()

    def labels(self) -> List[str]:
        return [symbol_label(int(c), self.string_total) for c in self.symbols]


class OracleMerge(NamedTuple):
    """Brute-force merge: multi-string BWT, LCP and per-row string ids."""

    bwt: BwtString
    lcp: LcpArray
    ids: np.ndarray


def remap_alphabet(raw: bytes, sentinel_rank: int = 0, string_total: int = 2) -> Text:
    """Validate a raw byte string and attach its sentinel."""
    arr = np.frombuffer(raw, dtype=np.uint8)
    bad = np.flatnonzero(arr < FIRST_PAYLOAD)
    if bad.size:
        pos = int(bad[0])
        raise ReservedByte(pos, int(arr[pos]))
    return Text(bytes(raw), sentinel_rank, string_total)


def _dense_ranks(codes: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(codes, return_inverse=True)
    return inverse.astype(np.int64).reshape(-1)


def suffix_array_of_codes(codes: np.ndarray) -> np.ndarray:
    """0-based suffix array of a code sequence whose last symbol is a unique minimum."""
    n = int(codes.shape[0])
    if n == 0:
        return np.empty(0, dtype=np.int64)
    rank = _dense_ranks(codes)
    k = 1
    while int(rank.max()) < n - 1:
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[: n - k] = rank[k:]
        order = np.lexsort((second, rank))
        r_sorted = rank[order]
        s_sorted = second[order]
        step = (r_sorted[1:] != r_sorted[:-1]) | (s_sorted[1:] != s_sorted[:-1])
        fresh = np.empty(n, dtype=np.int64)
        fresh[order[0]] = 0
        fresh[order[1:]] = np.cumsum(step)
        rank = fresh
        k *= 2
    sa = np.empty(n, dtype=np.int64)
    sa[rank] = np.arange(n, dtype=np.int64)
    return sa


def build_suffix_array(t: Text) -> SuffixArray:
    return SuffixArray(suffix_array_of_codes(t.symbols) + 1)


def bwt_from_sa(t: Text, sa: SuffixArray) -> BwtString:
    if len(sa) != t.n:
        raise LengthMismatch(f"suffix array has {len(sa)} entries, text has {t.n}")
    # position 0 wraps to index -1, the sentinel
    symbols = t.symbols[sa.zero_based - 1]
    return BwtString(symbols.astype(SYMBOL_DTYPE), 1, t.string_total)


@njit(cache=True, nogil=True)
def _kasai(codes, sa, out):
    n = codes.shape[0]
    rank = np.empty(n, dtype=np.int64)
    for i in range(n):
        rank[sa[i]] = i
    h = 0
    for i in range(n):
        r = rank[i]
        if r == 0:
            h = 0
            continue
        j = sa[r - 1]
        while i + h < n and j + h < n and codes[i + h] == codes[j + h]:
            h += 1
        out[r] = h
        if h > 0:
            h -= 1


def lcp_of_codes(codes: np.ndarray, sa0: np.ndarray) -> LcpArray:
    n = int(codes.shape[0])
    values = np.full(n + 1, -1, dtype=LCP_DTYPE)
    if n > 1:
        _kasai(codes.astype(np.int64), sa0.astype(np.int64), values)
    return LcpArray(values)


def lcp_from_sa(t: Text, sa: SuffixArray) -> LcpArray:
    if len(sa) != t.n:
        raise LengthMismatch(f"suffix array has {len(sa)} entries, text has {t.n}")
    return lcp_of_codes(t.symbols, sa.zero_based)


def build_text_index(t: Text) -> tuple[BwtString, LcpArray]:
    """BWT and LCP of a single text."""
    sa = build_suffix_array(t)
    return bwt_from_sa(t, sa), lcp_from_sa(t, sa)


def oracle_merge_many(texts: Sequence[Text]) -> OracleMerge:
    """
    Multi-string BWT and LCP of a collection, via the suffix array of the
    concatenation.  Sentinels are distinct, so no common prefix crosses one
    and the concatenation orders suffixes exactly as their contexts.
    """
    if not texts:
        raise ValueError("oracle needs at least one text")
    sentinels = [t.sentinel for t in texts]
    if len(set(sentinels)) != len(sentinels):
        raise ValueError("texts must carry distinct sentinels")
    lengths = np.array([t.n for t in texts], dtype=np.int64)
    codes = np.concatenate([t.symbols for t in texts]).astype(np.int64)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    owner = np.repeat(np.arange(len(texts), dtype=np.int64), lengths)

    sa = suffix_array_of_codes(codes)
    g = owner[sa]
    prev = sa - 1
    wrap = sa == starts[g]
    prev[wrap] = starts[g[wrap]] + lengths[g[wrap]] - 1
    bwt = BwtString(codes[prev].astype(SYMBOL_DTYPE), len(texts), texts[0].string_total)
    return OracleMerge(bwt, lcp_of_codes(codes, sa), g.astype(np.int64))


def oracle_merge(t0: Text, t1: Text) -> OracleMerge:
    """Reference merge of two texts; ``ids`` is the true merge bit vector Z."""
    if t0.sentinel >= t1.sentinel:
        raise ValueError("first text must carry the smaller sentinel")
    merged = oracle_merge_many([t0, t1])
    return OracleMerge(merged.bwt, merged.lcp, merged.ids.astype(np.uint8))


def lf_mapping(symbols: np.ndarray) -> np.ndarray:
    """LF(i) for every row: stable rank of the row's symbol among all symbols."""
    order = np.argsort(symbols, kind="stable")
    lf = np.empty_like(order)
    lf[order] = np.arange(order.shape[0], dtype=order.dtype)
    return lf


def invert_bwt(b: BwtString) -> Text:
    """Recover the single text whose BWT is ``b``."""
    if b.string_count != 1:
        raise MalformedBwt(f"expected a single-string BWT, got {b.string_count} strings")
    symbols = b.symbols
    n = len(b)
    sentinels = np.flatnonzero(symbols < FIRST_PAYLOAD)
    if n == 0 or sentinels.size != 1:
        raise MalformedBwt("a single-string BWT holds exactly one sentinel")
    lf = lf_mapping(symbols)
    out = np.empty(n - 1, dtype=np.uint8)
    row = 0
    # row 0 is the sentinel context; walking LF reads the text backwards
    for step in range(n - 1, 0, -1):
        c = int(symbols[row])
        if c < FIRST_PAYLOAD:
            raise MalformedBwt(f"LF cycle closes after {n - 1 - step} symbols, expected {n - 1}")
        out[step - 1] = c
        row = int(lf[row])
    if int(symbols[row]) >= FIRST_PAYLOAD:
        raise MalformedBwt("LF cycle does not end at the sentinel")
    sentinel = int(symbols[int(sentinels[0])])
    total = b.string_total
    return Text(out.tobytes(), sentinel - FIRST_PAYLOAD + total, total)


def assign_sentinel_ranks(symbols: np.ndarray, string_count: int) -> np.ndarray:
    """
    Map each sentinel occurrence of a multi-string BWT to its string index.

    ``symbols`` may store every sentinel with the same code.  Rows 0..k-1
    hold the contexts ``#0 .. #k-1``; walking LF from row g over payload
    symbols reaches the occurrence of string g's sentinel.  Returns the
    sentinel positions ordered by string index.
    """
    is_sentinel = symbols < FIRST_PAYLOAD
    found = np.flatnonzero(is_sentinel)
    if found.size != string_count:
        raise MalformedBwt(f"{found.size} sentinels stored for {string_count} strings")
    n = int(symbols.shape[0])
    lf = lf_mapping(np.where(is_sentinel, 0, symbols))
    positions = np.empty(string_count, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for g in range(string_count):
        row = g
        steps = 0
        while not is_sentinel[row]:
            row = int(lf[row])
            steps += 1
            if steps > n:
                raise MalformedBwt(f"no sentinel reachable from row {g}")
        if seen[row]:
            raise MalformedBwt(f"sentinel at row {row} claimed twice")
        seen[row] = True
        positions[g] = row
    return positions


def with_sentinel_codes(symbols: np.ndarray, string_count: int, first_rank: int, string_total: int) -> BwtString:
    """Give the sentinels of an externally stored BWT their collection codes."""
    out = symbols.astype(SYMBOL_DTYPE)
    positions = assign_sentinel_ranks(out, string_count)
    out[positions] = np.arange(string_count, dtype=SYMBOL_DTYPE) + first_rank + FIRST_PAYLOAD - string_total
    return BwtString(out, string_count, string_total)
