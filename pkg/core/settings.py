from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from core.errors import ConfigError
from core.validator import ConfigValidator

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "config" / "merge.yaml"


@dataclass(frozen=True)
class MergeSettings:
    algorithm: str = "gap"
    skip_mode: str = "wavelet"
    instrument: bool = False
    max_phases: Optional[int] = None


@dataclass(frozen=True)
class CollectionSettings:
    max_workers: int = 2
    task_timeout: int = 600


@dataclass(frozen=True)
class BenchSettings:
    len: int = 1000
    sigma: int = 4
    pairs: int = 10
    seed: int = 7
    algo_set: Tuple[str, ...] = ("hm", "hm-lcp", "gap")


@dataclass(frozen=True)
class TracingSettings:
    enabled: bool = False
    trace_file: str = "outputs/gapbwt_trace.jsonl"


@dataclass(frozen=True)
class Settings:
    merge: MergeSettings = field(default_factory=MergeSettings)
    collection: CollectionSettings = field(default_factory=CollectionSettings)
    bench: BenchSettings = field(default_factory=BenchSettings)
    tracing: TracingSettings = field(default_factory=TracingSettings)
    log_level: str = "INFO"


def _flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return bool(default)
    return raw.strip().lower() in ("1", "true", "yes", "on")


def read_config(path: Path) -> Dict[str, Any]:
    """Parse and schema-check a settings file; a missing file means defaults."""
    if not path.exists():
        logger.debug(f"no settings file at {path}, using defaults")
        return {}
    cfg = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    result = ConfigValidator().validate(cfg, "merge_settings")
    if not result["valid"]:
        raise ConfigError(f"{path}: " + "; ".join(result["errors"]))
    return cfg


def load_settings(path: str | Path | None = None) -> Settings:
    # .env first so that GAPBWT_* variables in it count as environment
    load_dotenv()
    p = Path(path or os.getenv("GAPBWT_CONFIG", DEFAULT_CONFIG))
    cfg = read_config(p)
    merge = cfg.get("merge", {})
    coll = cfg.get("collection", {})
    bench = cfg.get("bench", {})
    tracing = cfg.get("tracing", {})
    log = cfg.get("logging", {})

    max_phases = os.getenv("GAPBWT_MAX_PHASES", merge.get("max_phases"))
    settings = Settings(
        merge=MergeSettings(
            algorithm=os.getenv("GAPBWT_ALGORITHM", merge.get("algorithm", "gap")),
            skip_mode=os.getenv("GAPBWT_SKIP_MODE", merge.get("skip_mode", "wavelet")),
            instrument=_flag("GAPBWT_INSTRUMENT", merge.get("instrument", False)),
            max_phases=int(max_phases) if max_phases not in (None, "") else None,
        ),
        collection=CollectionSettings(
            max_workers=int(os.getenv("GAPBWT_MAX_WORKERS", coll.get("max_workers", 2))),
            task_timeout=int(coll.get("task_timeout", 600)),
        ),
        bench=BenchSettings(
            len=int(bench.get("len", 1000)),
            sigma=int(bench.get("sigma", 4)),
            pairs=int(bench.get("pairs", 10)),
            seed=int(bench.get("seed", 7)),
            algo_set=tuple(bench.get("algo_set", ("hm", "hm-lcp", "gap"))),
        ),
        tracing=TracingSettings(
            enabled=_flag("GAPBWT_TRACE", tracing.get("enabled", False)),
            trace_file=os.getenv("GAPBWT_TRACE_FILE", tracing.get("trace_file", "outputs/gapbwt_trace.jsonl")),
        ),
        log_level=os.getenv("GAPBWT_LOG_LEVEL", log.get("level", "INFO")).upper(),
    )
    if settings.merge.algorithm not in ("hm", "hm-lcp", "gap"):
        raise ConfigError(f"unknown algorithm {settings.merge.algorithm!r}")
    if settings.merge.skip_mode not in ("counts", "wavelet"):
        raise ConfigError(f"unknown skip mode {settings.merge.skip_mode!r}")
    if settings.collection.max_workers < 1:
        raise ConfigError("max_workers must be at least 1")
    return settings
