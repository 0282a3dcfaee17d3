import struct
import unittest
from pathlib import Path
import tempfile

import numpy as np
from numpy.testing import assert_array_equal

from core.bwt_io import BWT_MAGIC, LCP_MAGIC, read_bwt, read_bwt_raw, read_lcp, write_bwt, write_lcp
from core.errors import FormatError
from core.textcore import LcpArray, build_text_index, oracle_merge_many, remap_alphabet
from tests.helpers import PAIR_T0, PAIR_T1, oracle_for


class TestBwtFiles(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_single_string_round_trip(self):
        bwt, lcp = build_text_index(remap_alphabet(PAIR_T0, 0))
        write_bwt(self.dir / "a.bwt", bwt)
        write_lcp(self.dir / "a.lcp", lcp)
        back = read_bwt(self.dir / "a.bwt", 0, 2)
        assert_array_equal(back.symbols, bwt.symbols)
        self.assertEqual(back.string_count, 1)
        assert_array_equal(read_lcp(self.dir / "a.lcp").values, lcp.values)

    def test_second_rank_gets_its_sentinel(self):
        bwt, _ = build_text_index(remap_alphabet(PAIR_T1, 1))
        write_bwt(self.dir / "b.bwt", bwt)
        assert_array_equal(read_bwt(self.dir / "b.bwt", 1, 2).symbols, bwt.symbols)
        # read on its own the file is a one-string collection
        self.assertEqual(int(read_bwt(self.dir / "b.bwt").symbols.min()), 1)

    def test_merged_pair_round_trip(self):
        merged = oracle_for(PAIR_T0, PAIR_T1)
        write_bwt(self.dir / "m.bwt", merged.bwt)
        raw, k = read_bwt_raw(self.dir / "m.bwt")
        self.assertEqual(k, 2)
        self.assertEqual(raw.tobytes(), b"bc\x00cc\x00aaaaabbb")
        assert_array_equal(read_bwt(self.dir / "m.bwt").symbols, merged.bwt.symbols)

    def test_collection_ranks_inside_larger_total(self):
        rng = np.random.default_rng(4)
        texts = [remap_alphabet(bytes(rng.integers(97, 100, size=12).astype(np.uint8)), g, 6) for g in range(2, 5)]
        merged = oracle_merge_many(texts)
        write_bwt(self.dir / "g.bwt", merged.bwt)
        assert_array_equal(read_bwt(self.dir / "g.bwt", 2, 6).symbols, merged.bwt.symbols)
        with self.assertRaises(FormatError):
            read_bwt(self.dir / "g.bwt", 4, 6)

    def test_bad_magic(self):
        (self.dir / "x.bwt").write_bytes(b"NOTABWT\n" + bytes(16))
        with self.assertRaises(FormatError):
            read_bwt_raw(self.dir / "x.bwt")
        (self.dir / "x.lcp").write_bytes(BWT_MAGIC + bytes(8))
        with self.assertRaises(FormatError):
            read_lcp(self.dir / "x.lcp")

    def test_truncated(self):
        (self.dir / "t.bwt").write_bytes(BWT_MAGIC + struct.pack("<QQ", 5, 1) + b"ab\x00")
        with self.assertRaises(FormatError):
            read_bwt_raw(self.dir / "t.bwt")
        (self.dir / "t.lcp").write_bytes(LCP_MAGIC + struct.pack("<Q", 3) + bytes(8))
        with self.assertRaises(FormatError):
            read_lcp(self.dir / "t.lcp")

    def test_sentinel_count_checked(self):
        (self.dir / "s.bwt").write_bytes(BWT_MAGIC + struct.pack("<QQ", 3, 2) + b"a\x00b")
        with self.assertRaises(FormatError):
            read_bwt_raw(self.dir / "s.bwt")
        (self.dir / "o.bwt").write_bytes(BWT_MAGIC + struct.pack("<QQ", 3, 1) + b"\x01\x00b")
        with self.assertRaises(FormatError):
            read_bwt_raw(self.dir / "o.bwt")


def test_external_lcp_convention():
    lcp = LcpArray(np.array([-1, 0, 2, 0, 1, 0, -1], dtype=np.int32))
    stored = lcp.to_external()
    assert stored.dtype == np.uint32
    assert stored.tolist() == [0, 0, 2, 0, 1, 0]
    assert LcpArray.from_external(stored).values.tolist() == lcp.values.tolist()
