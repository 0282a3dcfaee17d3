"""
Holt & McMillan BWT merging.

Each phase re-sorts the interleaving vector Z by one more context symbol:
entries are read in Z order, each entry's symbol is counted into the F
table and the entry's bit is written at the symbol's next free slot.  The
loop stops at the first phase that leaves Z unchanged.

This module also holds the pieces every merge shares: the dense union
alphabet, the F table, the bit vector, the per-merge stats record and the
phase event passed to ``on_phase`` callbacks.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np
from numba import njit

from core.errors import CountMismatch, NonConvergence
from core.merge_metrics import record_merge
from core.textcore import SYMBOL_DTYPE, BwtString, symbol_label

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class MergeBitVector:
    """Interleaving vector: bit i tells which input supplies merged row i."""

    bits: np.ndarray

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    @property
    def n0(self) -> int:
        return len(self) - self.n1

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.bits))

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, s: str) -> "MergeBitVector":
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))


@dataclass(eq=False)
class MergeAlphabet:
    """
    Union alphabet of two BWTs.

    Dense code of symbol s is ``lut[s - offset]`` (-1 for symbols absent from
    both inputs); kernels read the input symbols through the table instead of
    keeping dense copies.
    """

    symbols: np.ndarray
    lut: np.ndarray
    offset: int
    counts: np.ndarray

    @property
    def sigma(self) -> int:
        return int(self.symbols.shape[0])

    def dense(self, seq: np.ndarray) -> np.ndarray:
        return self.lut[seq - self.offset]

    def ftable(self) -> "FTable":
        return FTable.from_counts(self.counts)


@dataclass(eq=False)
class FTable:
    """
    Next free destination per dense symbol (0-based rows).

    ``base`` is the phase-start value: the number of symbols smaller than c.
    ``f`` is the working copy a pass advances.
    """

    base: np.ndarray
    f: np.ndarray

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "FTable":
        base = np.zeros(counts.shape[0], dtype=np.int64)
        if counts.shape[0] > 1:
            base[1:] = np.cumsum(counts)[:-1]
        return cls(base, base.copy())

    def reset(self) -> None:
        self.f[:] = self.base

    def as_dict(self, alphabet: MergeAlphabet, total: int = 2) -> Dict[str, int]:
        """1-based starting row per symbol label."""
        return {symbol_label(int(s), total): int(b) + 1 for s, b in zip(alphabet.symbols, self.base)}


@dataclass
class MergeStats:
    """Per-merge counters; ``active_work`` holds the scanned positions of every phase."""

    algorithm: str
    n0: int = 0
    n1: int = 0
    phases: int = 0
    active_work: List[int] = field(default_factory=list)
    overwrites: int = 0
    skips: int = 0
    skipped_positions: int = 0
    occ_touches: int = 0
    syncs: int = 0
    rank_queries: int = 0
    seconds: float = 0.0

    @property
    def total_work(self) -> int:
        return int(sum(self.active_work))

    def summary(self) -> str:
        return (
            f"algo={self.algorithm} n={self.n0 + self.n1} phases={self.phases} "
            f"work={self.total_work} skips={self.skips} syncs={self.syncs}"
        )


@dataclass
class PhaseEvent:
    """Snapshot handed to ``on_phase`` after each completed phase."""

    algorithm: str
    phase: int
    active_work: int
    z: np.ndarray
    b: Optional[np.ndarray] = None
    unset: int = 0
    irrelevant_positions: int = 0


PhaseCallback = Callable[[PhaseEvent], None]


class HMResult(NamedTuple):
    z: MergeBitVector
    bwt: BwtString
    stats: MergeStats


def check_inputs(bwt0: BwtString, bwt1: BwtString) -> None:
    """Both inputs must be nonempty, carry one sentinel per string and share no sentinel."""
    for name, b in (("bwt0", bwt0), ("bwt1", bwt1)):
        if len(b) == 0:
            raise ValueError(f"{name} is empty")
        found = b.sentinel_positions().shape[0]
        if found != b.string_count:
            raise CountMismatch(f"{name} holds {found} sentinels for {b.string_count} strings")
    s0 = set(bwt0.symbols[bwt0.sentinel_positions()].tolist())
    s1 = set(bwt1.symbols[bwt1.sentinel_positions()].tolist())
    if s0 & s1:
        raise CountMismatch(f"inputs share sentinel codes {sorted(s0 & s1)}")


def prepare_alphabet(bwt0: BwtString, bwt1: BwtString) -> MergeAlphabet:
    lo = int(min(bwt0.symbols.min(), bwt1.symbols.min()))
    hi = int(max(bwt0.symbols.max(), bwt1.symbols.max()))
    width = hi - lo + 1
    counts = np.bincount(bwt0.symbols - lo, minlength=width) + np.bincount(bwt1.symbols - lo, minlength=width)
    present = np.flatnonzero(counts)
    lut = np.full(width, -1, dtype=np.int64)
    lut[present] = np.arange(present.shape[0], dtype=np.int64)
    return MergeAlphabet((present + lo).astype(SYMBOL_DTYPE), lut, lo, counts[present].astype(np.int64))


def init_z(n0: int, n1: int) -> MergeBitVector:
    """Z before the first phase: all rows of bwt0, then all rows of bwt1."""
    if n0 < 1 or n1 < 1:
        raise ValueError(f"both inputs need at least one row, got n0={n0} n1={n1}")
    bits = np.zeros(n0 + n1, dtype=np.uint8)
    bits[n0:] = 1
    return MergeBitVector(bits)


@njit(cache=True, nogil=True)
def _hm_pass(zprev, znext, sym0, sym1, lut, offset, f):
    k0 = 0
    k1 = 0
    for k in range(zprev.shape[0]):
        b = zprev[k]
        if b == 0:
            c = lut[sym0[k0] - offset]
            k0 += 1
        else:
            c = lut[sym1[k1] - offset]
            k1 += 1
        j = f[c]
        f[c] = j + 1
        znext[j] = b


def hm_phase(
    zprev: MergeBitVector,
    bwt0: BwtString,
    bwt1: BwtString,
    alphabet: Optional[MergeAlphabet] = None,
    out: Optional[np.ndarray] = None,
) -> MergeBitVector:
    """One stable counting pass over Z."""
    if alphabet is None:
        alphabet = prepare_alphabet(bwt0, bwt1)
    if len(zprev) != len(bwt0) + len(bwt1) or zprev.n1 != len(bwt1):
        raise CountMismatch("Z does not match the input lengths")
    ft = alphabet.ftable()
    znext = np.empty_like(zprev.bits) if out is None else out
    _hm_pass(zprev.bits, znext, bwt0.symbols, bwt1.symbols, alphabet.lut, alphabet.offset, ft.f)
    return MergeBitVector(znext)


def apply_merge(z: MergeBitVector, bwt0: BwtString, bwt1: BwtString) -> BwtString:
    """Stable un-interleave: the rows flagged 0 take bwt0 in order, the rows flagged 1 take bwt1."""
    if z.n0 != len(bwt0) or z.n1 != len(bwt1):
        raise CountMismatch("Z does not match the input lengths")
    out = np.empty(len(z), dtype=SYMBOL_DTYPE)
    ones = z.bits.astype(bool)
    out[~ones] = bwt0.symbols
    out[ones] = bwt1.symbols
    return BwtString(out, bwt0.string_count + bwt1.string_count, max(bwt0.string_total, bwt1.string_total))


def phase_limit(n: int, max_phases: Optional[int]) -> int:
    return n + 2 if max_phases is None else max_phases


def hm_merge(
    bwt0: BwtString,
    bwt1: BwtString,
    *,
    max_phases: Optional[int] = None,
    on_phase: Optional[PhaseCallback] = None,
) -> HMResult:
    """Merge two BWTs, iterating phases until Z reaches a fixed point."""
    started = time.perf_counter()
    check_inputs(bwt0, bwt1)
    alphabet = prepare_alphabet(bwt0, bwt1)
    z = init_z(len(bwt0), len(bwt1)).bits
    spare = np.empty_like(z)
    n = z.shape[0]
    limit = phase_limit(n, max_phases)
    stats = MergeStats("hm", len(bwt0), len(bwt1))
    ft = alphabet.ftable()

    while True:
        if stats.phases >= limit:
            raise NonConvergence(f"hm merge exceeded {limit} phases")
        ft.reset()
        _hm_pass(z, spare, bwt0.symbols, bwt1.symbols, alphabet.lut, alphabet.offset, ft.f)
        stats.phases += 1
        stats.active_work.append(n)
        logger.debug(f"hm phase {stats.phases} done")
        if on_phase is not None:
            on_phase(PhaseEvent("hm", stats.phases, n, spare.copy()))
        settled = np.array_equal(z, spare)
        z, spare = spare, z
        if settled:
            break

    zvec = MergeBitVector(z)
    stats.seconds = time.perf_counter() - started
    logger.info(f"hm merge: n={n} phases={stats.phases}")
    record_merge(stats)
    return HMResult(zvec, apply_merge(zvec, bwt0, bwt1), stats)

