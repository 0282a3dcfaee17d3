"""
Gap merging: BWT and LCP merging that skips resolved regions.

The phase loop is the one of ``hm_lcp`` restricted to active blocks.  A block
scanned in a phase and found monochrome (all its bits equal) can never change
again, nor can the destinations it feeds; it is marked irrelevant and every
later phase jumps over it, advancing the read counters by the number of 0s
and 1s recorded for the range.  Adjacent irrelevant ranges are coalesced as
soon as they touch, so two active blocks are separated by at most one range.

Skipping leaves the F table behind.  Two ways to catch up are supported:

- ``counts``: each range keeps per-symbol occurrence counts, added to F on
  every skip (O(sigma) per skip);
- ``wavelet``: F is synchronized lazily with rank queries on wavelet trees of
  the two inputs at the first occurrence of a symbol in an active block.

Z is double buffered.  Marking a range copies its bits into the write buffer
once, so both buffers hold the final bits of every irrelevant range.

Layout of the range bookkeeping (0-based rows): ``irr_end[s]`` is the
exclusive end of the range starting at s (0 when no range starts there),
``irr_r0[s]`` its number of 0s; in counts mode ``irr_slot[s]`` is the row of
the occurrence pool holding its symbol counts.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Tuple

import numpy as np
from numba import njit

from core.errors import NonConvergence, NotConverged
from core.hm_lcp import B_DTYPE, BlockArray
from core.hm_merge import (
    FTable,
    MergeAlphabet,
    MergeBitVector,
    MergeStats,
    PhaseCallback,
    PhaseEvent,
    apply_merge,
    check_inputs,
    init_z,
    phase_limit,
    prepare_alphabet,
)
from core.merge_metrics import record_merge
from core.textcore import LCP_DTYPE, BwtString, LcpArray
from core.wavelet import WaveletTree, wt_rank

logger = logging.getLogger(__name__)

SKIP_MODES = ("counts", "wavelet")

# counter slots
C_SKIPS = 0
C_SKIPPED = 1
C_OCC = 2
C_SYNCS = 3
C_RANKQ = 4
C_WORK = 5
C_WRITTEN = 6
C_ACTIVE_LEFT = 7
N_COUNTERS = 8

# occurrence pool slots
P_FREE_TOP = 0
P_NEXT = 1
P_LIVE = 2


@dataclass
class IrrelevantRecord:
    """Bookkeeping of one irrelevant range."""

    r0: int
    r1: int
    occ: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return self.r0 + self.r1

    def merge(self, other: "IrrelevantRecord") -> "IrrelevantRecord":
        occ = None
        if self.occ is not None and other.occ is not None:
            occ = self.occ + other.occ
        return IrrelevantRecord(self.r0 + other.r0, self.r1 + other.r1, occ)


@dataclass(eq=False)
class BlockMap:
    """Block boundaries plus the irrelevant ranges laid over them."""

    boundaries: BlockArray
    irr_end: np.ndarray
    irr_r0: np.ndarray
    irr_slot: np.ndarray
    occ: np.ndarray
    free_slots: np.ndarray
    pool: np.ndarray

    @classmethod
    def empty(cls, n: int, sigma: int, counts_mode: bool) -> "BlockMap":
        irr_slot = np.zeros(n + 1 if counts_mode else 1, dtype=np.uint32)
        return cls(
            boundaries=BlockArray.initial(n),
            irr_end=np.zeros(n + 1, dtype=np.uint32),
            irr_r0=np.zeros(n + 1, dtype=np.uint32),
            irr_slot=irr_slot,
            occ=np.zeros((1, sigma), dtype=np.int64),
            free_slots=np.zeros(1, dtype=np.int64),
            pool=np.zeros(3, dtype=np.int64),
        )

    @property
    def counts_mode(self) -> bool:
        return self.irr_slot.shape[0] > 1

    def ensure_capacity(self, records: int) -> None:
        """Grow the occurrence pool so that ``records`` more ranges fit."""
        need = int(self.pool[P_LIVE]) + records + 1
        if not self.counts_mode or need <= self.occ.shape[0]:
            return
        grown = max(need, 2 * self.occ.shape[0])
        occ = np.zeros((grown, self.occ.shape[1]), dtype=self.occ.dtype)
        occ[: self.occ.shape[0]] = self.occ
        free = np.zeros(grown, dtype=np.int64)
        free[: self.free_slots.shape[0]] = self.free_slots
        self.occ, self.free_slots = occ, free

    def ranges(self) -> Iterator[Tuple[int, int, IrrelevantRecord]]:
        for start in np.flatnonzero(self.irr_end):
            s = int(start)
            end = int(self.irr_end[s])
            r0 = int(self.irr_r0[s])
            occ = self.occ[int(self.irr_slot[s])].copy() if self.counts_mode else None
            yield s, end, IrrelevantRecord(r0, end - s - r0, occ)

    def irrelevant_mask(self) -> np.ndarray:
        n = self.boundaries.n
        delta = np.zeros(n + 1, dtype=np.int64)
        starts = np.flatnonzero(self.irr_end[:n])
        np.add.at(delta, starts, 1)
        np.add.at(delta, self.irr_end[starts].astype(np.int64), -1)
        return np.cumsum(delta[:n]) > 0


@dataclass(eq=False)
class LazyFState:
    """F table plus, per symbol, the read positions it was last brought up to date with."""

    ft: FTable
    l0: np.ndarray
    l1: np.ndarray

    @classmethod
    def for_alphabet(cls, alphabet: MergeAlphabet) -> "LazyFState":
        return cls(alphabet.ftable(), np.zeros(alphabet.sigma, dtype=np.int64), np.zeros(alphabet.sigma, dtype=np.int64))

    def reset(self) -> None:
        self.ft.reset()
        self.l0[:] = 0
        self.l1[:] = 0


@dataclass(eq=False)
class GapState:
    """Everything a Gap phase reads and writes."""

    bwt0: BwtString
    bwt1: BwtString
    alphabet: MergeAlphabet
    skip_mode: str
    z_read: np.ndarray
    z_write: np.ndarray
    blocks: BlockMap
    lazy: LazyFState
    bid_of: np.ndarray
    wt0: Optional[WaveletTree] = None
    wt1: Optional[WaveletTree] = None
    cursor: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    counters: np.ndarray = field(default_factory=lambda: np.zeros(N_COUNTERS, dtype=np.int64))
    # destination of each row in its last scan; only filled once record_destinations() ran
    dest: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    phase: int = 0

    @classmethod
    def start(
        cls,
        bwt0: BwtString,
        bwt1: BwtString,
        skip_mode: str = "wavelet",
        alphabet: Optional[MergeAlphabet] = None,
        wt0: Optional[WaveletTree] = None,
        wt1: Optional[WaveletTree] = None,
    ) -> "GapState":
        if skip_mode not in SKIP_MODES:
            raise ValueError(f"unknown skip mode {skip_mode!r}, expected one of {SKIP_MODES}")
        if alphabet is None:
            alphabet = prepare_alphabet(bwt0, bwt1)
        if skip_mode == "wavelet":
            # trees first: their construction temporaries are gone before Z and B exist
            wt0 = wt0 or WaveletTree.from_codes(alphabet.dense(bwt0.symbols), alphabet.symbols)
            wt1 = wt1 or WaveletTree.from_codes(alphabet.dense(bwt1.symbols), alphabet.symbols)
        z = init_z(len(bwt0), len(bwt1)).bits
        n = z.shape[0]
        state = cls(
            bwt0=bwt0,
            bwt1=bwt1,
            alphabet=alphabet,
            skip_mode=skip_mode,
            z_read=z,
            z_write=np.zeros_like(z),
            blocks=BlockMap.empty(n, alphabet.sigma, skip_mode == "counts"),
            lazy=LazyFState.for_alphabet(alphabet),
            bid_of=np.full(alphabet.sigma, -1, dtype=np.int64),
            wt0=wt0,
            wt1=wt1,
        )
        state.counters[C_ACTIVE_LEFT] = n
        return state

    @property
    def n(self) -> int:
        return int(self.z_read.shape[0])

    @property
    def active_left(self) -> int:
        return int(self.counters[C_ACTIVE_LEFT])

    @property
    def use_wavelet(self) -> bool:
        return self.skip_mode == "wavelet"

    def z(self) -> MergeBitVector:
        return MergeBitVector(self.z_read)

    def record_destinations(self) -> None:
        self.dest = np.full(self.n, -1, dtype=np.int64)

    def release_scratch(self) -> None:
        """Drop the second Z buffer, range tables and trees; finalization reads only Z and B."""
        if self.active_left:
            raise NotConverged(f"{self.active_left} positions still active")
        bm = self.blocks
        self.z_write = np.zeros(0, dtype=self.z_read.dtype)
        bm.irr_end = np.zeros(1, dtype=np.uint32)
        bm.irr_r0 = np.zeros(1, dtype=np.uint32)
        bm.irr_slot = np.zeros(1, dtype=np.uint32)
        bm.occ = np.zeros((1, self.alphabet.sigma), dtype=np.int64)
        self.dest = np.zeros(1, dtype=np.int64)
        self.wt0 = self.wt1 = None

    def tree_arrays(self) -> tuple:
        if self.wt0 is None or self.wt1 is None:
            bits = np.zeros((1, 8), dtype=np.uint8)
            ranks = np.zeros((1, 2), dtype=np.uint32)
            starts = np.zeros(self.alphabet.sigma + 1, dtype=np.int64)
            return bits, ranks, starts, bits, ranks, starts, 0
        return (
            self.wt0.bits,
            self.wt0.ranks,
            self.wt0.starts,
            self.wt1.bits,
            self.wt1.ranks,
            self.wt1.starts,
            self.wt0.depth,
        )


class GapResult(NamedTuple):
    bwt: BwtString
    lcp: LcpArray
    z: MergeBitVector
    stats: MergeStats


@njit(cache=True, nogil=True)
def _apply_skip(cursor, f, occ_row, r0, r1, use_wavelet, counters):
    cursor[0] += r0
    cursor[1] += r1
    if not use_wavelet:
        for c in range(f.shape[0]):
            f[c] += occ_row[c]
        counters[C_OCC] += f.shape[0]
    counters[C_SKIPS] += 1
    counters[C_SKIPPED] += r0 + r1


@njit(cache=True, nogil=True)
def _lazy_sync(c, k0, k1, f, l0, l1, bits0, ranks0, starts0, bits1, ranks1, starts1, depth, sigma, counters):
    if l0[c] != k0:
        f[c] += wt_rank(bits0, ranks0, starts0, depth, sigma, c, k0) - wt_rank(bits0, ranks0, starts0, depth, sigma, c, l0[c])
        counters[C_RANKQ] += 2
    if l1[c] != k1:
        f[c] += wt_rank(bits1, ranks1, starts1, depth, sigma, c, k1) - wt_rank(bits1, ranks1, starts1, depth, sigma, c, l1[c])
        counters[C_RANKQ] += 2
    l0[c] = k0
    l1[c] = k1
    counters[C_SYNCS] += 1


@njit(cache=True, nogil=True)
def _coalesce(left, right, irr_end, irr_r0, irr_slot, occ, free_slots, pool, use_wavelet):
    irr_end[left] = irr_end[right]
    irr_r0[left] += irr_r0[right]
    irr_end[right] = 0
    irr_r0[right] = 0
    if not use_wavelet:
        a = irr_slot[left]
        b = irr_slot[right]
        for c in range(occ.shape[1]):
            occ[a, c] += occ[b, c]
        free_slots[pool[P_FREE_TOP]] = b
        pool[P_FREE_TOP] += 1
    pool[P_LIVE] -= 1


@njit(cache=True, nogil=True)
def _gap_pass(
    h, z_read, z_write, block,
    irr_end, irr_r0, irr_slot, occ, free_slots, pool,
    sym0, sym1, lut, offset, f, bid_of, l0, l1,
    bits0, ranks0, starts0, bits1, ranks1, starts1, depth, sigma,
    use_wavelet, cursor, counters, dest, record,
):
    n = z_read.shape[0]
    cursor[0] = 0
    cursor[1] = 0
    k = 0
    last = -1
    work = 0
    written = 0
    while k < n:
        e = np.int64(irr_end[k])
        if e != 0:
            r0 = np.int64(irr_r0[k])
            slot = 0
            if not use_wavelet:
                slot = irr_slot[k]
            _apply_skip(cursor, f, occ[slot], r0, e - k - r0, use_wavelet, counters)
            if last >= 0 and np.int64(irr_end[last]) == k:
                _coalesce(last, k, irr_end, irr_r0, irr_slot, occ, free_slots, pool, use_wavelet)
            else:
                last = k
            k = e
            continue

        start = k
        k0s = cursor[0]
        k1s = cursor[1]
        first_bit = z_read[k]
        mono = True
        while True:
            b = z_read[k]
            if b != first_bit:
                mono = False
            if b == 0:
                c = lut[sym0[cursor[0]] - offset]
            else:
                c = lut[sym1[cursor[1]] - offset]
            fresh = bid_of[c] != start
            if fresh:
                bid_of[c] = start
                if use_wavelet:
                    _lazy_sync(c, cursor[0], cursor[1], f, l0, l1,
                               bits0, ranks0, starts0, bits1, ranks1, starts1, depth, sigma, counters)
            j = f[c]
            f[c] = j + 1
            if record:
                dest[k] = j
            if b == 0:
                cursor[0] += 1
            else:
                cursor[1] += 1
            if use_wavelet:
                l0[c] = cursor[0]
                l1[c] = cursor[1]
            z_write[j] = b
            if fresh and block[j] == 0:
                block[j] = h
                written += 1
            k += 1
            if k >= n:
                break
            v = block[k]
            if v != 0 and v != h:
                break

        length = k - start
        work += length
        if mono:
            irr_end[start] = k
            irr_r0[start] = length if first_bit == 0 else 0
            if not use_wavelet:
                if pool[P_FREE_TOP] > 0:
                    pool[P_FREE_TOP] -= 1
                    slot = free_slots[pool[P_FREE_TOP]]
                else:
                    slot = pool[P_NEXT]
                    pool[P_NEXT] += 1
                irr_slot[start] = slot
                for c in range(occ.shape[1]):
                    occ[slot, c] = 0
                if first_bit == 0:
                    for q in range(k0s, k0s + length):
                        occ[slot, lut[sym0[q] - offset]] += 1
                else:
                    for q in range(k1s, k1s + length):
                        occ[slot, lut[sym1[q] - offset]] += 1
            for q in range(start, k):
                z_write[q] = z_read[q]
            pool[P_LIVE] += 1
            counters[C_ACTIVE_LEFT] -= length
            if last >= 0 and np.int64(irr_end[last]) == start:
                _coalesce(last, start, irr_end, irr_r0, irr_slot, occ, free_slots, pool, use_wavelet)
            else:
                last = start

    counters[C_WORK] = work
    counters[C_WRITTEN] = written
    return work


def _kernel_args(state: GapState) -> tuple:
    bm = state.blocks
    lz = state.lazy
    bits0, ranks0, starts0, bits1, ranks1, starts1, depth = state.tree_arrays()
    return (
        bm.irr_end, bm.irr_r0, bm.irr_slot, bm.occ, bm.free_slots, bm.pool,
        state.bwt0.symbols, state.bwt1.symbols, state.alphabet.lut, state.alphabet.offset,
        lz.ft.f, state.bid_of, lz.l0, lz.l1,
        bits0, ranks0, starts0, bits1, ranks1, starts1, depth, state.alphabet.sigma,
        state.use_wavelet, state.cursor, state.counters, state.dest, state.dest.shape[0] == state.n,
    )


def gap_phase(h: int, state: GapState) -> int:
    """
    Run phase ``h`` over the active blocks of ``state``; returns the number of
    positions scanned.  Afterwards ``state.z_read`` holds Z after phase h.
    """
    if h != state.phase + 1:
        raise ValueError(f"phase {h} requested after phase {state.phase}")
    bm = state.blocks
    if state.active_left == 0:
        state.phase = h
        state.counters[C_WORK] = 0
        return 0
    bm.ensure_capacity(min(state.active_left, state.n - bm.boundaries.unset))
    state.lazy.reset()
    state.bid_of[:] = -1
    work = _gap_pass(np.uint32(h), state.z_read, state.z_write, bm.boundaries.b, *_kernel_args(state))
    bm.boundaries.unset -= int(state.counters[C_WRITTEN])
    state.z_read, state.z_write = state.z_write, state.z_read
    state.phase = h
    return int(work)


def skip_irrelevant(rec: IrrelevantRecord, state: GapState) -> GapState:
    """Advance the read cursor over one irrelevant range (and F, in counts mode)."""
    if rec.length <= 0:
        raise ValueError("irrelevant ranges are never empty")
    occ_row = rec.occ if rec.occ is not None else np.zeros(state.alphabet.sigma, dtype=np.int64)
    _apply_skip(state.cursor, state.lazy.ft.f, occ_row, rec.r0, rec.r1, state.use_wavelet, state.counters)
    return state


def lazy_f_lookup(c: int, state: GapState, wt0: WaveletTree, wt1: WaveletTree) -> int:
    """
    Bring F[c] up to the current read positions and return the next
    destination of symbol ``c`` (a dense code).
    """
    if not state.use_wavelet:
        raise ValueError("lazy F lookup needs wavelet skip mode")
    lz = state.lazy
    _lazy_sync(
        c, int(state.cursor[0]), int(state.cursor[1]), lz.ft.f, lz.l0, lz.l1,
        wt0.bits, wt0.ranks, wt0.starts, wt1.bits, wt1.ranks, wt1.starts, wt0.depth, wt0.sigma,
        state.counters,
    )
    return int(lz.ft.f[c])


@njit(cache=True, nogil=True)
def _finalize_lcp(z, block, lcp0, lcp1, out):
    n = z.shape[0]
    seen0 = 0
    seen1 = 0
    for i in range(n):
        if z[i] == 0:
            seen0 += 1
        else:
            seen1 += 1
        if i == 0:
            continue
        v = block[i]
        if v != 0:
            out[i] = np.int64(v) - 1
        elif z[i] == 0:
            out[i] = lcp0[seen0 - 1]
        else:
            out[i] = lcp1[seen1 - 1]


def finalize(
    state: GapState, bwt0: BwtString, lcp0: LcpArray, bwt1: BwtString, lcp1: LcpArray
) -> Tuple[BwtString, LcpArray, MergeBitVector]:
    """
    Merged BWT by un-interleaving, merged LCP from B where a boundary exists
    and from the input LCP otherwise: an unset entry lies inside a monochrome
    range, so its two rows are consecutive rows of the same input.
    """
    if state.active_left:
        raise NotConverged(f"{state.active_left} positions still active")
    z = state.z()
    n = state.n
    values = np.full(n + 1, -1, dtype=LCP_DTYPE)
    _finalize_lcp(z.bits, state.blocks.boundaries.b, lcp0.values, lcp1.values, values)
    return apply_merge(z, bwt0, bwt1), LcpArray(values), z


def _check_stable_ranges(state: GapState, shadow: np.ndarray, mask: np.ndarray) -> None:
    if not np.array_equal(state.z_read[mask], shadow[mask]):
        bad = int(np.flatnonzero(mask & (state.z_read != shadow))[0])
        raise NonConvergence(f"irrelevant position {bad} changed in phase {state.phase}")


def _check_destination_runs(
    state: GapState, boundaries: np.ndarray, shadow: np.ndarray, mask_before: np.ndarray
) -> None:
    """
    Every block marked in the last phase must have sent each of its symbols
    to one contiguous run of Z, holding the block's bit.

    ``boundaries``, ``shadow`` and ``mask_before`` are B, Z and the
    irrelevant mask as they were when the phase started.
    """
    rows = np.flatnonzero(state.blocks.irrelevant_mask() & ~mask_before)
    if rows.size == 0:
        return
    first = np.ones(rows.size, dtype=bool)
    first[1:] = (np.diff(rows) != 1) | (boundaries[rows[1:]] != 0)
    block_id = np.cumsum(first) - 1

    bits = shadow[rows]
    ones_before = np.cumsum(shadow, dtype=np.int64) - shadow
    index = np.where(bits == 0, rows - ones_before[rows], ones_before[rows])
    raw = np.where(bits == 0, state.bwt0.symbols[np.where(bits == 0, index, 0)], state.bwt1.symbols[np.where(bits == 1, index, 0)])
    codes = state.alphabet.lut[raw - state.alphabet.offset].astype(np.int64)

    dest = state.dest[rows]
    if (dest < 0).any():
        raise NonConvergence(f"phase {state.phase} marked rows it never scanned")
    key = block_id * state.alphabet.sigma + codes
    order = np.argsort(key, kind="stable")
    same = key[order][1:] == key[order][:-1]
    broken = same & (dest[order][1:] != dest[order][:-1] + 1)
    if broken.any():
        row = int(rows[order][1:][broken][0])
        raise NonConvergence(f"row {row} left its symbol's run in phase {state.phase}")
    if not np.array_equal(state.z_read[dest], bits):
        raise NonConvergence(f"a monochrome block wrote a foreign bit in phase {state.phase}")


def gap_merge(
    bwt0: BwtString,
    lcp0: LcpArray,
    bwt1: BwtString,
    lcp1: LcpArray,
    skip_mode: str = "wavelet",
    *,
    max_phases: Optional[int] = None,
    instrument: bool = False,
    on_phase: Optional[PhaseCallback] = None,
) -> GapResult:
    """Merge two BWT/LCP pairs, scanning only the blocks not yet resolved."""
    started = time.perf_counter()
    check_inputs(bwt0, bwt1)
    if lcp0.n != len(bwt0) or lcp1.n != len(bwt1):
        raise ValueError("LCP arrays do not match their BWTs")
    state = GapState.start(bwt0, bwt1, skip_mode)
    if instrument:
        state.record_destinations()
    n = state.n
    limit = phase_limit(n, max_phases)
    stats = MergeStats("gap", len(bwt0), len(bwt1))

    while state.active_left > 0:
        if stats.phases >= limit:
            raise NonConvergence(f"gap merge exceeded {limit} phases with {state.active_left} positions active")
        h = state.phase + 1
        before = state.blocks.boundaries.b.copy() if instrument else None
        shadow = state.z_read.copy() if instrument else None
        mask = state.blocks.irrelevant_mask() if instrument else None
        work = gap_phase(h, state)
        if before is not None:
            stats.overwrites += int(np.count_nonzero((before != 0) & (state.blocks.boundaries.b != before)))
            _check_stable_ranges(state, shadow, mask)
            _check_destination_runs(state, before, shadow, mask)
        stats.phases = h
        stats.active_work.append(work)
        logger.debug(f"gap phase {h}: scanned {work}, {state.active_left} active left")
        if on_phase is not None:
            on_phase(
                PhaseEvent(
                    "gap", h, work, state.z_read.copy(), state.blocks.boundaries.b.copy(),
                    state.blocks.boundaries.unset, n - state.active_left,
                )
            )

    state.release_scratch()
    bwt, lcp, z = finalize(state, bwt0, lcp0, bwt1, lcp1)
    c = state.counters
    stats.skips = int(c[C_SKIPS])
    stats.skipped_positions = int(c[C_SKIPPED])
    stats.occ_touches = int(c[C_OCC])
    stats.syncs = int(c[C_SYNCS])
    stats.rank_queries = int(c[C_RANKQ])
    stats.seconds = time.perf_counter() - started
    logger.info(f"gap merge ({skip_mode}): n={n} phases={stats.phases} work={stats.total_work}")
    record_merge(stats)
    return GapResult(bwt, lcp, z, stats)


__all__ = [
    "B_DTYPE",
    "BlockMap",
    "GapResult",
    "GapState",
    "IrrelevantRecord",
    "LazyFState",
    "SKIP_MODES",
    "finalize",
    "gap_merge",
    "gap_phase",
    "lazy_f_lookup",
    "skip_irrelevant",
]
