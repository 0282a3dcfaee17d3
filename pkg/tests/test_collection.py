import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pydantic import ValidationError

from core.collection import CollectionJob, build_leaf, merge_collection, merge_schedule, run_job, run_merge
from core.textcore import oracle_merge_many, remap_alphabet


def random_collection(k: int, seed: int, max_len: int = 80) -> list:
    rng = np.random.default_rng(seed)
    return [bytes(rng.integers(97, 101, size=int(rng.integers(0, max_len))).astype(np.uint8)) for _ in range(k)]


def oracle_of(payloads):
    return oracle_merge_many([remap_alphabet(p, g, len(payloads)) for g, p in enumerate(payloads)])


def test_schedule_shapes():
    assert merge_schedule(1) == []
    assert merge_schedule(2) == [[((0, 1), (1, 2))]]
    assert merge_schedule(3) == [[((0, 1), (1, 2))], [((0, 2), (2, 3))]]
    assert merge_schedule(4) == [[((0, 1), (1, 2)), ((2, 3), (3, 4))], [((0, 2), (2, 4))]]
    assert len(merge_schedule(8)) == 3
    with pytest.raises(ValueError):
        merge_schedule(0)


def test_schedule_covers_every_leaf_once():
    for k in range(2, 20):
        rounds = merge_schedule(k)
        assert rounds[-1][-1][0][0] == 0 and rounds[-1][-1][1][1] == k
        live = k
        for pairs in rounds:
            live -= len(pairs)
        assert live == 1


@pytest.mark.parametrize("k", [2, 3, 4, 8])
@pytest.mark.parametrize("algorithm,skip_mode", [("gap", "wavelet"), ("gap", "counts"), ("hm-lcp", "wavelet")])
def test_collection_matches_oracle(k, algorithm, skip_mode):
    payloads = random_collection(k, seed=k)
    merged = merge_collection(payloads, algorithm, skip_mode, max_workers=3)
    oracle = oracle_of(payloads)
    assert merged.count == k
    assert_array_equal(merged.bwt.symbols, oracle.bwt.symbols)
    assert_array_equal(merged.lcp.values, oracle.lcp.values)
    assert len(merged.stats) == k - 1


def test_collection_with_plain_hm_has_no_lcp():
    payloads = random_collection(4, seed=1)
    merged = merge_collection(payloads, "hm")
    assert merged.lcp is None
    assert_array_equal(merged.bwt.symbols, oracle_of(payloads).bwt.symbols)


def test_gap_after_hm_round_needs_lcp():
    payloads = random_collection(3, seed=2)
    with pytest.raises(ValueError):
        left = run_merge(build_leaf(payloads[0], 0, 3), build_leaf(payloads[1], 1, 3), "hm")
        run_merge(left, build_leaf(payloads[2], 2, 3), "gap")


def test_groups_must_be_adjacent():
    a = build_leaf(b"ab", 0, 3)
    c = build_leaf(b"ba", 2, 3)
    with pytest.raises(ValueError):
        run_merge(a, c)


def test_two_inputs_equal_a_single_merge():
    payloads = [b"abcab", b"aabcabc"]
    merged = merge_collection(payloads)
    single = run_merge(build_leaf(payloads[0], 0, 2), build_leaf(payloads[1], 1, 2))
    assert_array_equal(merged.bwt.symbols, single.bwt.symbols)
    assert_array_equal(merged.lcp.values, single.lcp.values)


def test_collection_errors_propagate():
    with pytest.raises(ValueError):
        merge_collection([b"abc"])
    with pytest.raises(Exception) as ctx:
        merge_collection([b"abc", b"a\x00b"])
    assert ctx.value.exit_code == 2


def test_job_model(tmp_path):
    paths = []
    for g, p in enumerate(random_collection(4, seed=5)):
        path = tmp_path / f"s{g}.txt"
        path.write_bytes(p)
        paths.append(path)
    job = CollectionJob(inputs=paths, algorithm="gap", skip_mode="counts", max_workers=2)
    assert len(job.rounds) == 2
    merged = run_job(job)
    assert_array_equal(merged.bwt.symbols, oracle_of([p.read_bytes() for p in paths]).bwt.symbols)
    with pytest.raises(ValidationError):
        CollectionJob(inputs=paths[:1])
    with pytest.raises(ValidationError):
        CollectionJob(inputs=paths, algorithm="bcr")
    with pytest.raises(ValidationError):
        CollectionJob(inputs=paths, max_workers=0)


def test_collection_logs_executor_metrics(caplog):
    with caplog.at_level("INFO", logger="core.collection"):
        merge_collection(random_collection(3, seed=9))
    assert "2 rounds, 5 tasks" in caplog.text
