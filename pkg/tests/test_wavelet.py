import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.textcore import build_text_index, remap_alphabet
from core.wavelet import WaveletTree, depth_for
from tests.helpers import PAIR_T0, PAIR_T1


def test_worked_example_ranks():
    bwt, _ = build_text_index(remap_alphabet(PAIR_T0, 0))
    wt = WaveletTree.build(bwt)
    assert wt.rank(ord("a"), 6) == 2
    assert [wt.rank(0, i) for i in range(7)] == [0, 0, 0, 1, 1, 1, 1]
    assert all(wt.rank(c, 0) == 0 for c in (0, ord("a"), ord("b"), ord("c")))
    assert [wt.access(i) for i in range(6)] == bwt.symbols.tolist()


def test_second_input_full_counts():
    bwt, _ = build_text_index(remap_alphabet(PAIR_T1, 1))
    wt = WaveletTree.build(bwt)
    for c in (1, ord("a"), ord("b"), ord("c")):
        assert wt.rank(c, len(bwt)) == int(np.count_nonzero(bwt.symbols == c))


def test_unknown_symbol_counts_zero():
    wt = WaveletTree.build(np.array([5, 7, 5], dtype=np.int32))
    assert wt.rank(6, 3) == 0
    assert wt.rank(99, 2) == 0
    with pytest.raises(ValueError):
        wt.rank(5, 4)


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        WaveletTree.build(np.array([], dtype=np.int32))


def test_shared_alphabet():
    alphabet = np.array([0, 1, 97, 98, 99], dtype=np.int32)
    wt = WaveletTree.build(np.array([97, 97, 99], dtype=np.int32), alphabet)
    assert wt.sigma == 5
    assert wt.rank(98, 3) == 0
    assert wt.rank(99, 3) == 1
    with pytest.raises(ValueError):
        WaveletTree.build(np.array([97, 100], dtype=np.int32), alphabet)


def test_depth():
    assert [depth_for(s) for s in (1, 2, 3, 4, 5, 6, 256, 257)] == [0, 1, 2, 2, 3, 3, 8, 9]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=40), min_size=1, max_size=300))
def test_rank_and_access_match_naive_scan(values):
    seq = np.array(values, dtype=np.int32)
    wt = WaveletTree.build(seq)
    for c in np.unique(seq).tolist() + [41]:
        counts = np.concatenate(([0], np.cumsum(seq == c)))
        assert [wt.rank(c, i) for i in range(len(seq) + 1)] == counts.tolist()
    assert [wt.access(i) for i in range(len(seq))] == values


def test_prefix_counts_partition_positions():
    rng = np.random.default_rng(2)
    seq = rng.integers(0, 300, size=2000).astype(np.int32)
    wt = WaveletTree.build(seq)
    symbols = np.unique(seq).tolist()
    for i in (0, 1, 63, 64, 65, 511, 1000, 1999, 2000):
        ranks = [wt.rank(c, i) for c in symbols]
        assert sum(ranks) == i
    c = symbols[0]
    steps = np.diff([wt.rank(c, i) for i in range(len(seq) + 1)])
    assert set(steps.tolist()) <= {0, 1}
