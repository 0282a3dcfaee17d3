"""Prometheus metrics for merge runs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING

from prometheus_client import REGISTRY, Counter, Histogram, generate_latest

if TYPE_CHECKING:
    from core.hm_merge import MergeStats

logger = logging.getLogger(__name__)

MERGES = Counter("gapbwt_merges_total", "Completed merges", ["algorithm"])
PHASES = Counter("gapbwt_phases_total", "Merge phases executed", ["algorithm"])
ACTIVE = Counter("gapbwt_active_positions_total", "Positions scanned across all phases", ["algorithm"])
SKIPPED = Counter("gapbwt_skipped_positions_total", "Positions skipped as irrelevant", ["algorithm"])
LAT = Histogram("gapbwt_merge_seconds", "Merge wall-clock seconds", ["algorithm"])


def record_merge(stats: MergeStats) -> None:
    algo = stats.algorithm
    MERGES.labels(algo).inc()
    PHASES.labels(algo).inc(stats.phases)
    ACTIVE.labels(algo).inc(stats.total_work)
    SKIPPED.labels(algo).inc(stats.skipped_positions)
    LAT.labels(algo).observe(stats.seconds)


def write_metrics(path: str | Path) -> None:
    """Dump the exposition text of the default registry."""
    Path(path).write_bytes(generate_latest(REGISTRY))
    logger.info(f"metrics written to {path}")
