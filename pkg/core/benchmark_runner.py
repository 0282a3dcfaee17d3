"""
Benchmark runner comparing the merge algorithms on random pairs.

Inputs come from a splitmix64 stream so that a seed fixes every instance.
Each row reports the merged LCP statistics that govern the cost of the
algorithms (maximum for the phase count, average for the Gap work) next to
the phases and scanned positions each algorithm needed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.collection import MergedIndex, build_leaf, run_merge
from core.textcore import LcpArray, oracle_merge, remap_alphabet

logger = logging.getLogger(__name__)

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """The first ``count`` outputs of the splitmix64 generator started at ``seed``."""
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed % (1 << 64)) + steps * GAMMA
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        return z ^ (z >> np.uint64(31))


def random_payload(values: np.ndarray, sigma: int) -> bytes:
    if not 1 <= sigma <= 254:
        raise ValueError(f"sigma must be in [1, 254], got {sigma}")
    first = ord("a") if sigma <= 26 else 2
    return ((values >> np.uint64(33)) % np.uint64(sigma) + np.uint64(first)).astype(np.uint8).tobytes()


@dataclass
class BenchmarkCase:
    """A single random pair."""
    id: int
    t0: bytes
    t1: bytes


@dataclass
class BenchmarkResult:
    """Result of merging one pair with every algorithm of the set."""
    case_id: int
    n: int
    maxlcp: int
    avelcp: float
    phases: Dict[str, int] = field(default_factory=dict)
    work: Dict[str, int] = field(default_factory=dict)
    seconds: Dict[str, float] = field(default_factory=dict)


class BenchmarkRunner:
    """Runs every algorithm of ``algo_set`` on a suite of seeded random pairs."""

    def __init__(self, algo_set: Sequence[str] = ("hm", "hm-lcp", "gap"), skip_mode: str = "wavelet"):
        unknown = [a for a in algo_set if a not in ("hm", "hm-lcp", "gap")]
        if unknown:
            raise ValueError(f"unknown algorithms: {unknown}")
        self.algo_set = list(algo_set)
        self.skip_mode = skip_mode

    def load_cases(self, length: int, sigma: int, pairs: int, seed: int) -> List[BenchmarkCase]:
        """Instance i draws both strings from the stream seeded with ``seed + i``."""
        if length < 1 or sigma < 1 or pairs < 0:
            raise ValueError("length and sigma must be positive, pairs non-negative")
        cases = []
        for i in range(pairs):
            values = splitmix64(seed + i, 2 * length)
            cases.append(BenchmarkCase(i, random_payload(values[:length], sigma), random_payload(values[length:], sigma)))
        return cases

    def run_case(self, case: BenchmarkCase) -> BenchmarkResult:
        left = build_leaf(case.t0, 0, 2)
        right = build_leaf(case.t1, 1, 2)
        lcp: Optional[LcpArray] = None
        result = BenchmarkResult(case.id, len(left.bwt) + len(right.bwt), 0, 0.0)
        for algo in self.algo_set:
            merged: MergedIndex = run_merge(left, right, algo, self.skip_mode)
            stats = merged.stats[-1]
            result.phases[algo] = stats.phases
            result.work[algo] = stats.total_work
            result.seconds[algo] = stats.seconds
            if lcp is None and merged.lcp is not None:
                lcp = merged.lcp
        if lcp is None:
            lcp = oracle_merge(remap_alphabet(case.t0, 0), remap_alphabet(case.t1, 1)).lcp
        result.maxlcp = lcp.max()
        result.avelcp = lcp.mean()
        return result

    def run_suite(self, length: int, sigma: int, pairs: int, seed: int) -> List[BenchmarkResult]:
        results = [self.run_case(case) for case in self.load_cases(length, sigma, pairs, seed)]
        logger.info(f"bench: {len(results)} instances, {self._aggregate_results(results)}")
        return results

    def format_table(self, results: List[BenchmarkResult], timings: bool = False) -> str:
        header = ["instance", "n", "maxlcp", "avelcp"]
        for algo in self.algo_set:
            header += [f"{algo}_phases", f"{algo}_work"]
            if timings:
                header.append(f"{algo}_sec")
        lines = ["\t".join(header)]
        for r in results:
            row = [str(r.case_id), str(r.n), str(r.maxlcp), f"{r.avelcp:.3f}"]
            for algo in self.algo_set:
                row += [str(r.phases[algo]), str(r.work[algo])]
                if timings:
                    row.append(f"{r.seconds[algo]:.4f}")
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    def _aggregate_results(self, results: List[BenchmarkResult]) -> Dict[str, Any]:
        """Calculate aggregate metrics."""
        total = len(results)
        if total == 0:
            return {}
        summary: Dict[str, Any] = {
            "total": total,
            "avg_maxlcp": sum(r.maxlcp for r in results) / total,
            "avg_avelcp": sum(r.avelcp for r in results) / total,
        }
        for algo in self.algo_set:
            summary[f"{algo}_work"] = sum(r.work[algo] for r in results)
        return summary
