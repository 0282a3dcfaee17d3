"""
Balanced wavelet tree with constant-time binary rank.

The tree is pointerless: level ``l`` stores one bit per position, the
sequence at that level being the input stably sorted by the top ``l`` bits
of each dense symbol code.  Node boundaries come from cumulative symbol
counts, so a node with prefix ``p`` at level ``l`` starts at
``starts[p << (depth - l)]``.

Bits are packed big-endian (``np.packbits``) and every 64-bit block keeps
the number of ones before it; the remainder of a rank query is a byte
popcount table lookup.  ``wt_rank`` is a numba kernel so the Gap merge loop
can call it directly.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from numba import njit

from core.textcore import BwtString

logger = logging.getLogger(__name__)

POPCOUNT = np.array([bin(b).count("1") for b in range(256)], dtype=np.int64)


@njit(cache=True, nogil=True)
def rank1(bits, ranks, level, i):
    """Number of ones among the first ``i`` bits of ``level``."""
    w = i >> 6
    r = np.int64(ranks[level, w])
    b = w << 3
    end_byte = i >> 3
    while b < end_byte:
        r += POPCOUNT[bits[level, b]]
        b += 1
    rem = i & 7
    if rem:
        r += POPCOUNT[np.int64(bits[level, end_byte]) >> (8 - rem)]
    return r


@njit(cache=True, nogil=True)
def wt_rank(bits, ranks, starts, depth, sigma, c, i):
    """Occurrences of dense code ``c`` among the first ``i`` symbols."""
    if c < 0 or c >= sigma or i <= 0:
        return 0
    pos = np.int64(i)
    prefix = np.int64(0)
    for level in range(depth):
        shift = depth - 1 - level
        bit = (c >> shift) & 1
        node = prefix << (shift + 1)
        if node > sigma:
            node = sigma
        node_start = starts[node]
        ones = rank1(bits, ranks, level, node_start + pos) - rank1(bits, ranks, level, node_start)
        if bit == 1:
            pos = ones
        else:
            pos = pos - ones
        if pos == 0:
            return 0
        prefix = (prefix << 1) | bit
    return pos


@njit(cache=True, nogil=True)
def wt_access(bits, ranks, starts, depth, sigma, i):
    """Dense code stored at position ``i``."""
    pos = np.int64(i)
    prefix = np.int64(0)
    for level in range(depth):
        shift = depth - 1 - level
        node = prefix << (shift + 1)
        if node > sigma:
            node = sigma
        node_start = starts[node]
        at = node_start + pos
        bit = (np.int64(bits[level, at >> 3]) >> (7 - (at & 7))) & 1
        ones = rank1(bits, ranks, level, at) - rank1(bits, ranks, level, node_start)
        if bit == 1:
            pos = ones
        else:
            pos = pos - ones
        prefix = (prefix << 1) | bit
    return prefix


def depth_for(sigma: int) -> int:
    """ceil(log2 sigma), 0 for a one-symbol alphabet."""
    return max(0, int(sigma - 1).bit_length())


class WaveletTree:
    """
    Wavelet tree over a symbol sequence.

    ``alphabet`` is the sorted array of symbols the dense codes refer to.  It
    defaults to the symbols of the sequence; passing a shared alphabet lets
    two trees answer queries in the same code space.
    """

    def __init__(
        self,
        bits: np.ndarray,
        ranks: np.ndarray,
        starts: np.ndarray,
        alphabet: np.ndarray,
        n: int,
    ) -> None:
        self.bits = bits
        self.ranks = ranks
        self.starts = starts
        self.alphabet = alphabet
        self.n = n
        self.sigma = int(alphabet.shape[0])
        self.depth = depth_for(self.sigma)

    @classmethod
    def build(cls, seq: BwtString | np.ndarray, alphabet: Optional[np.ndarray] = None) -> "WaveletTree":
        symbols = seq.symbols if isinstance(seq, BwtString) else np.asarray(seq)
        n = int(symbols.shape[0])
        if n == 0:
            raise ValueError("cannot build a wavelet tree over an empty sequence")
        if alphabet is None:
            alphabet = np.unique(symbols)
        codes = np.searchsorted(alphabet, symbols)
        if np.any(codes >= alphabet.shape[0]) or np.any(alphabet[np.minimum(codes, alphabet.shape[0] - 1)] != symbols):
            raise ValueError("sequence holds symbols outside the alphabet")
        return cls.from_codes(codes, np.asarray(alphabet))

    @classmethod
    def from_codes(cls, codes: np.ndarray, alphabet: np.ndarray) -> "WaveletTree":
        """Build from dense codes in ``[0, len(alphabet))``."""
        n = int(codes.shape[0])
        sigma = int(alphabet.shape[0])
        depth = depth_for(sigma)
        nwords = n // 64 + 1
        rows = max(depth, 1)
        bits = np.zeros((rows, nwords * 8), dtype=np.uint8)
        ranks = np.zeros((rows, nwords + 1), dtype=np.uint32)
        starts = np.zeros(sigma + 1, dtype=np.int64)
        starts[1:] = np.cumsum(np.bincount(codes, minlength=sigma))

        dtype = np.uint8 if sigma <= 256 else np.uint32
        cur = codes.astype(dtype)
        for level in range(depth):
            shift = depth - 1 - level
            packed = np.packbits(((cur >> shift) & 1).astype(np.uint8))
            bits[level, : packed.shape[0]] = packed
            ranks[level, 1:] = np.cumsum(POPCOUNT[bits[level]].reshape(nwords, 8).sum(axis=1))
            if level + 1 < depth:
                cur = cur[np.argsort(cur >> shift, kind="stable")]
        logger.debug(f"wavelet tree built: n={n} sigma={sigma} depth={depth}")
        return cls(bits, ranks, starts, alphabet, n)

    def code_of(self, c: int) -> int:
        """Dense code of symbol ``c``, -1 when the symbol is not in the alphabet."""
        k = int(np.searchsorted(self.alphabet, c))
        if k < self.sigma and int(self.alphabet[k]) == c:
            return k
        return -1

    def rank(self, c: int, i: int) -> int:
        """Occurrences of symbol ``c`` in positions ``[0, i)``; 0 for unknown symbols."""
        if not 0 <= i <= self.n:
            raise ValueError(f"rank position {i} outside [0, {self.n}]")
        code = self.code_of(c)
        if code < 0:
            return 0
        return int(wt_rank(self.bits, self.ranks, self.starts, self.depth, self.sigma, code, i))

    def access(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"position {i} outside [0, {self.n})")
        code = wt_access(self.bits, self.ranks, self.starts, self.depth, self.sigma, i)
        return int(self.alphabet[code])
