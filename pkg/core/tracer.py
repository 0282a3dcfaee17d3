"""
JSONL traces of merge runs.

One line per event: ``{"timestamp", "event_type", "data"}``.  The CLI logs
``merge_start``/``merge_complete`` around a merge and hands the kernels
``phase_callback()``, which appends a ``phase_complete`` line after every
phase.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict

from core.hm_merge import PhaseCallback, PhaseEvent

logger = logging.getLogger(__name__)


class TracingService:
    def __init__(self, enabled: bool = True, trace_file: str | Path = "gapbwt_trace.jsonl") -> None:
        self.enabled = enabled
        self.trace_file = Path(trace_file)

    def log_event(self, event_type: str, data: Dict[str, Any]) -> None:
        """Append one event; a no-op when disabled, a warning when the file cannot be written."""
        if not self.enabled:
            return
        line = json.dumps(
            {"timestamp": datetime.now(timezone.utc).isoformat(), "event_type": event_type, "data": data}
        )
        try:
            self.trace_file.parent.mkdir(parents=True, exist_ok=True)
            with self.trace_file.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
        except OSError as exc:
            logger.warning(f"trace not written to {self.trace_file}: {exc}")

    def phase_callback(self) -> PhaseCallback:
        def on_phase(event: PhaseEvent) -> None:
            self.log_event(
                "phase_complete",
                {
                    "algorithm": event.algorithm,
                    "phase": event.phase,
                    "active_work": event.active_work,
                    "unset": event.unset,
                    "irrelevant_positions": event.irrelevant_positions,
                },
            )

        return on_phase
