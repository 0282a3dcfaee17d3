import unittest

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import CountMismatch, NonConvergence
from core.hm_merge import (
    MergeBitVector,
    apply_merge,
    hm_merge,
    hm_phase,
    init_z,
    prepare_alphabet,
)
from core.textcore import BwtString, suffix_array_of_codes
from tests.helpers import PAIR_MERGED, PAIR_T0, PAIR_T1, PAIR_Z, PAIR_Z1, oracle_for, pair_inputs, random_pairs, texts


def expected_z(t0: bytes, t1: bytes, h: int) -> list:
    """Z after h phases: rows of both inputs stably sorted by their first h context symbols."""
    rows = []
    for bit, t in enumerate(texts(t0, t1)):
        codes = t.symbols.tolist()
        rows += [(tuple(codes[s : s + h]), bit) for s in suffix_array_of_codes(t.symbols).tolist()]
    return [bit for _, bit in sorted(rows, key=lambda r: r[0])]


class TestWorkedExample(unittest.TestCase):
    def setUp(self):
        self.bwt0, _, self.bwt1, _ = pair_inputs(PAIR_T0, PAIR_T1)

    def test_initial_z(self):
        self.assertEqual(init_z(6, 8).to_string(), "00000011111111")
        self.assertEqual(init_z(1, 1).to_string(), "01")
        with self.assertRaises(ValueError):
            init_z(3, 0)

    def test_f_table(self):
        alphabet = prepare_alphabet(self.bwt0, self.bwt1)
        self.assertEqual(alphabet.ftable().as_dict(alphabet), {"#0": 1, "#1": 2, "a": 3, "b": 8, "c": 12})

    def test_first_phase(self):
        z1 = hm_phase(init_z(6, 8), self.bwt0, self.bwt1)
        self.assertEqual(z1.to_string(), PAIR_Z1)

    def test_final_z_is_fixed_point(self):
        z = MergeBitVector.from_string(PAIR_Z)
        self.assertEqual(hm_phase(z, self.bwt0, self.bwt1).to_string(), PAIR_Z)

    def test_merge(self):
        result = hm_merge(self.bwt0, self.bwt1)
        self.assertEqual(result.z.to_string(), PAIR_Z)
        self.assertEqual(result.bwt.labels(), PAIR_MERGED)
        self.assertEqual(result.bwt.string_count, 2)
        self.assertEqual(result.stats.phases, len(result.stats.active_work))

    def test_apply_merge(self):
        merged = apply_merge(MergeBitVector.from_string(PAIR_Z), self.bwt0, self.bwt1)
        self.assertEqual(merged.labels(), PAIR_MERGED)
        concat = apply_merge(init_z(6, 8), self.bwt0, self.bwt1)
        assert_array_equal(concat.symbols, np.concatenate([self.bwt0.symbols, self.bwt1.symbols]))
        with self.assertRaises(CountMismatch) as ctx:
            apply_merge(init_z(5, 9), self.bwt0, self.bwt1)
        self.assertEqual(ctx.exception.exit_code, 2)
        with self.assertRaises(CountMismatch):
            hm_phase(init_z(7, 7), self.bwt0, self.bwt1)

    def test_phase_limit(self):
        with self.assertRaises(NonConvergence) as ctx:
            hm_merge(self.bwt0, self.bwt1, max_phases=2)
        self.assertEqual(ctx.exception.exit_code, 3)


def test_sentinel_only_pair():
    bwt0, _, bwt1, _ = pair_inputs(b"", b"")
    assert hm_phase(init_z(1, 1), bwt0, bwt1).to_string() == "01"
    result = hm_merge(bwt0, bwt1)
    assert result.z.to_string() == "01"
    assert result.bwt.labels() == ["#0", "#1"]


def test_inputs_must_carry_distinct_sentinels():
    bwt0, _, _, _ = pair_inputs(b"ab", b"")
    with pytest.raises(CountMismatch):
        hm_merge(bwt0, bwt0)
    no_sentinel = BwtString(np.array([ord("a")], dtype=np.int32))
    with pytest.raises(CountMismatch):
        hm_merge(bwt0, no_sentinel)


def test_every_phase_orders_by_context_prefix():
    for t0, t1 in random_pairs(100, seed=21, max_len=64):
        bwt0, _, bwt1, _ = pair_inputs(t0, t1)
        snapshots = []
        hm_merge(bwt0, bwt1, on_phase=lambda e: snapshots.append(e.z))
        for h, z in enumerate(snapshots, 1):
            assert z.tolist() == expected_z(t0, t1, h), (t0, t1, h)
            assert int(np.count_nonzero(z)) == len(bwt1)


def test_matches_oracle_within_phase_bound():
    for t0, t1 in random_pairs(500, seed=4):
        bwt0, _, bwt1, _ = pair_inputs(t0, t1)
        oracle = oracle_for(t0, t1)
        result = hm_merge(bwt0, bwt1)
        assert_array_equal(result.z.bits, oracle.ids)
        assert_array_equal(result.bwt.symbols, oracle.bwt.symbols)
        assert result.stats.phases <= oracle.lcp.max() + 2


def test_merge_preserves_symbol_multiset():
    rng = np.random.default_rng(8)
    bwt0, _, bwt1, _ = pair_inputs(b"mississippi", b"banana")
    for _ in range(20):
        bits = np.zeros(len(bwt0) + len(bwt1), dtype=np.uint8)
        bits[rng.choice(bits.shape[0], size=len(bwt1), replace=False)] = 1
        merged = apply_merge(MergeBitVector(bits), bwt0, bwt1)
        assert sorted(merged.symbols.tolist()) == sorted(bwt0.symbols.tolist() + bwt1.symbols.tolist())
