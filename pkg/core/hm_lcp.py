"""
Holt & McMillan merging extended with LCP computation.

Alongside Z the merge keeps the block array B (n+1 entries, 0-based here:
entry i stands for merged row i).  ``B[i] != 0`` marks the start of a block
of rows sharing their context prefix of the current phase length; the value
is the phase that first split the block there, so at the end
``lcp[i] = B[i] - 1``.  Entries are set once and the run stops when none is
left unset.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from core.errors import NonConvergence
from core.hm_merge import (
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

logger = logging.getLogger(__name__)

B_DTYPE = np.uint32


@dataclass(eq=False)
class BlockArray:
    """Block boundaries; 0 means unset, h > 0 means first split in phase h."""

    b: np.ndarray
    unset: int

    @classmethod
    def initial(cls, n: int) -> "BlockArray":
        b = np.zeros(n + 1, dtype=B_DTYPE)
        b[0] = 1
        b[n] = 1
        return cls(b, n - 1)

    @property
    def n(self) -> int:
        return int(self.b.shape[0]) - 1

    def to_lcp(self) -> LcpArray:
        values = self.b.astype(LCP_DTYPE) - 1
        values[0] = -1
        values[self.n] = -1
        return LcpArray(values)


def init_b(n0: int, n1: int) -> BlockArray:
    if n0 + n1 < 2:
        raise ValueError(f"a merge covers at least two rows, got {n0 + n1}")
    return BlockArray.initial(n0 + n1)


class LcpMergeResult(NamedTuple):
    bwt: BwtString
    lcp: LcpArray
    z: MergeBitVector
    stats: MergeStats


@njit(cache=True, nogil=True)
def _hmlcp_pass(h, zprev, znext, block, sym0, sym1, lut, offset, f, bid_of):
    k0 = 0
    k1 = 0
    # row 0 always opens a block, even in phase 1 where its tag equals h
    bid = 0
    written = 0
    for k in range(zprev.shape[0]):
        v = block[k]
        if v != 0 and v != h:
            bid = k
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
        if bid_of[c] != bid:
            bid_of[c] = bid
            if block[j] == 0:
                block[j] = h
                written += 1
    return written


def hmlcp_phase(
    h: int,
    zprev: MergeBitVector,
    b: BlockArray,
    bwt0: BwtString,
    bwt1: BwtString,
    alphabet: Optional[MergeAlphabet] = None,
    out: Optional[np.ndarray] = None,
) -> MergeBitVector:
    """
    Phase ``h``: one counting pass over Z that also records new boundaries.

    A boundary written during phase h carries the value h and is not taken
    for a block start until the next phase.
    """
    if h < 1:
        raise ValueError(f"phases are numbered from 1, got {h}")
    if alphabet is None:
        alphabet = prepare_alphabet(bwt0, bwt1)
    if b.n != len(zprev):
        raise ValueError("block array does not match Z")
    ft = alphabet.ftable()
    bid_of = np.full(alphabet.sigma, -1, dtype=np.int64)
    znext = np.empty_like(zprev.bits) if out is None else out
    written = _hmlcp_pass(
        np.uint32(h), zprev.bits, znext, b.b, bwt0.symbols, bwt1.symbols, alphabet.lut, alphabet.offset, ft.f, bid_of
    )
    b.unset -= int(written)
    return MergeBitVector(znext)


def hmlcp_merge(
    bwt0: BwtString,
    bwt1: BwtString,
    *,
    max_phases: Optional[int] = None,
    instrument: bool = False,
    on_phase: Optional[PhaseCallback] = None,
) -> LcpMergeResult:
    """Merge two BWTs and compute the merged LCP array."""
    started = time.perf_counter()
    check_inputs(bwt0, bwt1)
    alphabet = prepare_alphabet(bwt0, bwt1)
    z = init_z(len(bwt0), len(bwt1))
    spare = np.empty_like(z.bits)
    n = len(z)
    block = init_b(len(bwt0), len(bwt1))
    limit = phase_limit(n, max_phases)
    stats = MergeStats("hm-lcp", len(bwt0), len(bwt1))

    while block.unset > 0:
        if stats.phases >= limit:
            raise NonConvergence(f"hm-lcp merge exceeded {limit} phases with {block.unset} boundaries unset")
        h = stats.phases + 1
        before = block.b.copy() if instrument else None
        znext = hmlcp_phase(h, z, block, bwt0, bwt1, alphabet, out=spare)
        if before is not None:
            stats.overwrites += int(np.count_nonzero((before != 0) & (block.b != before)))
        spare = z.bits
        z = znext
        stats.phases = h
        stats.active_work.append(n)
        logger.debug(f"hm-lcp phase {h}: {block.unset} boundaries unset")
        if on_phase is not None:
            on_phase(PhaseEvent("hm-lcp", h, n, z.bits.copy(), block.b.copy(), block.unset))

    stats.seconds = time.perf_counter() - started
    logger.info(f"hm-lcp merge: n={n} phases={stats.phases}")
    record_merge(stats)
    return LcpMergeResult(apply_merge(z, bwt0, bwt1), block.to_lcp(), z, stats)
