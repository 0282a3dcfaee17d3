"""Shared inputs for the merge tests: the worked example and seeded random pairs."""

from typing import List, Tuple

import numpy as np

from core.textcore import BwtString, LcpArray, Text, build_text_index, oracle_merge, remap_alphabet

PAIR_T0 = b"abcab"
PAIR_T1 = b"aabcabc"
PAIR_Z = "01101010101101"
PAIR_Z1 = "01001110011011"
PAIR_MERGED = "b c #1 c c #0 a a a a a b b b".split()
PAIR_LCP = [-1, 0, 0, 1, 2, 3, 5, 0, 1, 2, 4, 0, 1, 3, -1]


def texts(t0: bytes, t1: bytes) -> Tuple[Text, Text]:
    return remap_alphabet(t0, 0), remap_alphabet(t1, 1)


def pair_inputs(t0: bytes, t1: bytes) -> Tuple[BwtString, LcpArray, BwtString, LcpArray]:
    a, b = texts(t0, t1)
    bwt0, lcp0 = build_text_index(a)
    bwt1, lcp1 = build_text_index(b)
    return bwt0, lcp0, bwt1, lcp1


def oracle_for(t0: bytes, t1: bytes):
    return oracle_merge(*texts(t0, t1))


def random_payload(rng: np.random.Generator, length: int, sigma: int) -> bytes:
    return (rng.integers(0, sigma, size=length) + ord("a")).astype(np.uint8).tobytes()


def adversarial_pairs() -> List[Tuple[bytes, bytes]]:
    return [
        (b"aaaa", b"aaa"),
        (b"a" * 40, b"a" * 40),
        (b"ab" * 30, b"ab" * 29 + b"b"),
        (b"abcabcabc", b"abcabcabc"),
        (b"", b""),
        (b"", b"ba"),
        (b"b", b""),
        (b"acgtacgtacgt" * 5, b"acgtacgtacgt" * 5 + b"a"),
    ]


def random_pairs(count: int, seed: int, max_len: int = 256) -> List[Tuple[bytes, bytes]]:
    """Seeded pairs over alphabets of size 2, 4 and 26, a fifth of them sharing long prefixes."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        sigma = (2, 4, 26)[i % 3]
        t0 = random_payload(rng, int(rng.integers(0, max_len + 1)), sigma)
        if i % 5 == 4 and t0:
            cut = int(rng.integers(0, len(t0) + 1))
            t1 = t0[:cut] + random_payload(rng, int(rng.integers(0, max_len - cut + 1)), sigma)
        else:
            t1 = random_payload(rng, int(rng.integers(0, max_len + 1)), sigma)
        pairs.append((t0, t1))
    return pairs
