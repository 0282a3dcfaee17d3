"""
Merging whole collections in mergesort-style rounds.

Every input becomes a leaf (its own BWT and LCP, sentinel rank = its index
in the collection); each round merges neighbouring pairs and an odd last
item passes through untouched.  The merge tree runs on the
``ParallelExecutor``: one batch per round, independent merges concurrent.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, field_validator

from core.gap_merge import gap_merge
from core.hm_lcp import hmlcp_merge
from core.hm_merge import MergeStats, PhaseCallback, hm_merge
from core.parallel_executor import ParallelExecutor, Task
from core.textcore import BwtString, LcpArray, build_text_index, remap_alphabet

logger = logging.getLogger(__name__)

Algorithm = Literal["hm", "hm-lcp", "gap"]
SkipMode = Literal["counts", "wavelet"]

Group = Tuple[int, int]


def merge_schedule(k: int) -> List[List[Tuple[Group, Group]]]:
    """
    Balanced pairwise schedule over ``k`` leaves.  Groups are half-open
    ranges of string indices; each round lists the pairs it merges.
    """
    if k < 1:
        raise ValueError("a collection needs at least one string")
    live: List[Group] = [(g, g + 1) for g in range(k)]
    rounds: List[List[Tuple[Group, Group]]] = []
    while len(live) > 1:
        pairs = [(live[i], live[i + 1]) for i in range(0, len(live) - 1, 2)]
        nxt = [(a[0], b[1]) for a, b in pairs]
        if len(live) % 2:
            nxt.append(live[-1])
        rounds.append(pairs)
        live = nxt
    return rounds


class CollectionJob(BaseModel):
    """A collection merge request: ordered inputs, algorithm and skip mode."""

    inputs: List[Path] = Field(min_length=2)
    algorithm: Algorithm = "gap"
    skip_mode: SkipMode = "wavelet"
    max_workers: int = Field(2, ge=1)
    instrument: bool = False

    @field_validator("inputs")
    @classmethod
    def _non_empty_paths(cls, v: List[Path]) -> List[Path]:
        for p in v:
            if not str(p).strip():
                raise ValueError("empty input path")
        return v

    @property
    def rounds(self) -> List[List[Tuple[Group, Group]]]:
        return merge_schedule(len(self.inputs))


@dataclass
class MergedIndex:
    """BWT (and LCP unless merged by plain hm) of the strings ``first .. first+count-1``."""

    bwt: BwtString
    lcp: Optional[LcpArray]
    first: int
    count: int
    stats: List[MergeStats] = field(default_factory=list)


def build_leaf(payload: bytes, rank: int, total: int) -> MergedIndex:
    text = remap_alphabet(payload, rank, total)
    bwt, lcp = build_text_index(text)
    return MergedIndex(bwt, lcp, rank, 1)


def run_merge(
    left: MergedIndex,
    right: MergedIndex,
    algorithm: str = "gap",
    skip_mode: str = "wavelet",
    *,
    instrument: bool = False,
    max_phases: Optional[int] = None,
    on_phase: Optional[PhaseCallback] = None,
) -> MergedIndex:
    """Merge two neighbouring groups with the chosen algorithm."""
    if left.first + left.count != right.first:
        raise ValueError(f"groups starting at {left.first} and {right.first} are not adjacent")
    if algorithm == "hm":
        res = hm_merge(left.bwt, right.bwt, max_phases=max_phases, on_phase=on_phase)
        bwt, lcp, stats = res.bwt, None, res.stats
    elif algorithm == "hm-lcp":
        res2 = hmlcp_merge(left.bwt, right.bwt, max_phases=max_phases, instrument=instrument, on_phase=on_phase)
        bwt, lcp, stats = res2.bwt, res2.lcp, res2.stats
    elif algorithm == "gap":
        if left.lcp is None or right.lcp is None:
            raise ValueError("gap merging needs LCP arrays for both inputs")
        res3 = gap_merge(
            left.bwt, left.lcp, right.bwt, right.lcp, skip_mode,
            max_phases=max_phases, instrument=instrument, on_phase=on_phase,
        )
        bwt, lcp, stats = res3.bwt, res3.lcp, res3.stats
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return MergedIndex(bwt, lcp, left.first, left.count + right.count, left.stats + right.stats + [stats])


def _leaf_task(payload: bytes, rank: int, total: int) -> MergedIndex:
    return build_leaf(payload, rank, total)


def _merge_task(algorithm: str, skip_mode: str, instrument: bool, dependency_results: List[MergedIndex]) -> MergedIndex:
    left, right = dependency_results
    return run_merge(left, right, algorithm, skip_mode, instrument=instrument)


def collection_tasks(
    payloads: Sequence[bytes],
    algorithm: str,
    skip_mode: str,
    instrument: bool = False,
    timeout: int = 600,
) -> Tuple[List[Task], str]:
    """Tasks of the whole merge tree and the id of its root."""
    total = len(payloads)
    tasks = [
        Task(
            id=f"leaf-{g}",
            name=f"build string {g}",
            executor=_leaf_task,
            kwargs={"payload": payloads[g], "rank": g, "total": total},
            timeout=timeout,
        )
        for g in range(total)
    ]
    node_of = {(g, g + 1): f"leaf-{g}" for g in range(total)}
    for r, pairs in enumerate(merge_schedule(total), 1):
        for left, right in pairs:
            task_id = f"merge-{left[0]}-{right[1]}"
            tasks.append(
                Task(
                    id=task_id,
                    name=f"round {r}: strings {left[0]}..{right[1] - 1}",
                    executor=_merge_task,
                    kwargs={"algorithm": algorithm, "skip_mode": skip_mode, "instrument": instrument},
                    dependencies=[node_of[left], node_of[right]],
                    timeout=timeout,
                )
            )
            node_of[(left[0], right[1])] = task_id
    return tasks, node_of[(0, total)]


def merge_collection(
    payloads: Sequence[bytes],
    algorithm: str = "gap",
    skip_mode: str = "wavelet",
    *,
    max_workers: int = 2,
    instrument: bool = False,
    timeout: int = 600,
) -> MergedIndex:
    """Multi-string BWT (and LCP) of a whole collection of byte strings."""
    if len(payloads) < 2:
        raise ValueError("a collection merge needs at least two inputs")
    tasks, root = collection_tasks(payloads, algorithm, skip_mode, instrument, timeout)
    executor = ParallelExecutor(max_concurrent=max_workers)
    result = asyncio.run(executor.execute(tasks))
    failure = result.first_failure()
    if failure is not None:
        if failure.exception is not None:
            raise failure.exception
        raise RuntimeError(failure.error)
    merged = result.task_results[root].output
    metrics = executor.get_metrics(result)
    logger.info(
        f"collection of {len(payloads)} strings merged in {len(merge_schedule(len(payloads)))} rounds, "
        f"{metrics['total_tasks']} tasks, speedup {metrics['speedup_factor']:.2f}x"
    )
    return merged


def run_job(job: CollectionJob, timeout: int = 600) -> MergedIndex:
    payloads = [Path(p).read_bytes() for p in job.inputs]
    return merge_collection(
        payloads,
        job.algorithm,
        job.skip_mode,
        max_workers=job.max_workers,
        instrument=job.instrument,
        timeout=timeout,
    )
