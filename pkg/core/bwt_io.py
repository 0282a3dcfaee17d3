"""
Reading and writing .bwt and .lcp files.

.bwt: magic ``GAPBWT1\\n``, u64le n, u64le k (string count), n bytes with
every sentinel stored as 0x00.
.lcp: magic ``GAPLCP1\\n``, u64le n, n u32le values, slot 1 stored as 0.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from core.errors import FormatError, MalformedBwt
from core.textcore import BwtString, LcpArray, with_sentinel_codes

logger = logging.getLogger(__name__)

BWT_MAGIC = b"GAPBWT1\n"
LCP_MAGIC = b"GAPLCP1\n"
_HEADER = struct.Struct("<Q")


def bwt_path(prefix: str | Path) -> Path:
    return Path(f"{prefix}.bwt")


def lcp_path(prefix: str | Path) -> Path:
    return Path(f"{prefix}.lcp")


def write_bwt(path: str | Path, bwt: BwtString) -> None:
    with open(path, "wb") as f:
        f.write(BWT_MAGIC)
        f.write(_HEADER.pack(len(bwt)))
        f.write(_HEADER.pack(bwt.string_count))
        f.write(bwt.to_bytes())
    logger.debug(f"wrote {path}: n={len(bwt)} k={bwt.string_count}")


def read_bwt_raw(path: str | Path) -> tuple[np.ndarray, int]:
    """Stored bytes and string count, sentinels still 0x00."""
    data = Path(path).read_bytes()
    head = len(BWT_MAGIC) + 2 * _HEADER.size
    if len(data) < head or data[: len(BWT_MAGIC)] != BWT_MAGIC:
        raise FormatError(f"{path}: not a .bwt file")
    (n,) = _HEADER.unpack_from(data, len(BWT_MAGIC))
    (k,) = _HEADER.unpack_from(data, len(BWT_MAGIC) + _HEADER.size)
    if len(data) != head + n:
        raise FormatError(f"{path}: header says {n} symbols, file holds {len(data) - head}")
    symbols = np.frombuffer(data, dtype=np.uint8, offset=head)
    if k < 1 or int(np.count_nonzero(symbols == 0)) != k:
        raise FormatError(f"{path}: header says {k} strings, file holds {int(np.count_nonzero(symbols == 0))} sentinels")
    if np.any(symbols == 1):
        raise FormatError(f"{path}: byte 0x01 is not a valid BWT symbol")
    return symbols, int(k)


def read_bwt(path: str | Path, first_rank: int = 0, string_total: Optional[int] = None) -> BwtString:
    """
    Load a .bwt file, giving its strings the sentinel ranks
    ``first_rank .. first_rank + k - 1`` inside a collection of
    ``string_total`` strings (default: the file's own k).
    """
    symbols, k = read_bwt_raw(path)
    total = k if string_total is None else string_total
    if first_rank + k > total:
        raise FormatError(f"{path}: {k} strings do not fit ranks {first_rank}.. of {total}")
    try:
        return with_sentinel_codes(symbols, k, first_rank, total)
    except MalformedBwt as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_lcp(path: str | Path, lcp: LcpArray) -> None:
    with open(path, "wb") as f:
        f.write(LCP_MAGIC)
        f.write(_HEADER.pack(lcp.n))
        f.write(lcp.to_external().astype("<u4").tobytes())
    logger.debug(f"wrote {path}: n={lcp.n}")


def read_lcp(path: str | Path) -> LcpArray:
    data = Path(path).read_bytes()
    head = len(LCP_MAGIC) + _HEADER.size
    if len(data) < head or data[: len(LCP_MAGIC)] != LCP_MAGIC:
        raise FormatError(f"{path}: not a .lcp file")
    (n,) = _HEADER.unpack_from(data, len(LCP_MAGIC))
    if len(data) != head + 4 * n:
        raise FormatError(f"{path}: header says {n} values, file holds {(len(data) - head) // 4}")
    return LcpArray.from_external(np.frombuffer(data, dtype="<u4", offset=head))
