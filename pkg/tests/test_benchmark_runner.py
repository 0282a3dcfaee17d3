import numpy as np
import pytest

from core.benchmark_runner import BenchmarkRunner, random_payload, splitmix64


def test_splitmix64_reference_values():
    # first outputs of the generator seeded with 0
    assert splitmix64(0, 2).tolist() == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]


def test_streams_are_reproducible():
    assert np.array_equal(splitmix64(7, 100), splitmix64(7, 100))
    assert not np.array_equal(splitmix64(7, 100), splitmix64(8, 100))


def test_random_payload_alphabets():
    values = splitmix64(3, 5000)
    small = random_payload(values, 4)
    assert set(small) == set(b"abcd")
    wide = random_payload(values, 200)
    assert min(wide) >= 2 and max(wide) <= 201
    with pytest.raises(ValueError):
        random_payload(values, 255)


def test_cases_use_one_stream_per_instance():
    runner = BenchmarkRunner()
    cases = runner.load_cases(50, 4, 3, seed=10)
    assert [c.id for c in cases] == [0, 1, 2]
    again = runner.load_cases(50, 4, 1, seed=11)
    assert again[0].t0 == cases[1].t0 and again[0].t1 == cases[1].t1
    assert all(len(c.t0) == 50 and len(c.t1) == 50 for c in cases)
    with pytest.raises(ValueError):
        runner.load_cases(0, 4, 1, seed=1)


def test_gap_scans_less_than_hm_lcp():
    runner = BenchmarkRunner(("hm", "hm-lcp", "gap"))
    results = runner.run_suite(1000, 4, 3, seed=7)
    for r in results:
        assert r.n == 2002
        assert r.work["gap"] < r.work["hm-lcp"]
        assert r.phases["hm-lcp"] == r.maxlcp + 1
        assert r.work["hm-lcp"] == r.phases["hm-lcp"] * r.n


def test_table_layout():
    runner = BenchmarkRunner(("gap",), "counts")
    results = runner.run_suite(30, 2, 2, seed=1)
    plain = runner.format_table(results).splitlines()
    assert plain[0] == "instance\tn\tmaxlcp\tavelcp\tgap_phases\tgap_work"
    assert len(plain) == 3
    timed = runner.format_table(results, timings=True).splitlines()
    assert timed[0].endswith("gap_sec")
    # maxlcp comes from the oracle when the set has no LCP-producing algorithm
    hm_only = BenchmarkRunner(("hm",)).run_suite(30, 2, 2, seed=1)
    assert [r.maxlcp for r in hm_only] == [r.maxlcp for r in results]


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        BenchmarkRunner(("bcr",))
