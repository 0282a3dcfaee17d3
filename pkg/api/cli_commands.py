import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from core.benchmark_runner import BenchmarkRunner
from core.bwt_io import bwt_path, lcp_path, read_bwt, read_bwt_raw, read_lcp, write_bwt, write_lcp
from core.collection import CollectionJob, MergedIndex, run_job, run_merge
from core.errors import FormatError, GapBwtError, VerificationFailed
from core.merge_metrics import write_metrics
from core.settings import Settings, load_settings
from core.textcore import build_text_index, oracle_merge_many, remap_alphabet
from core.tracer import TracingService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FORMAT = 2


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {raw}")
    return value


def non_negative_int(raw: str) -> int:
    value = int(raw)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {raw}")
    return value


def algo_list(raw: str) -> List[str]:
    algos = [a.strip() for a in raw.split(",") if a.strip()]
    bad = [a for a in algos if a not in ("hm", "hm-lcp", "gap")]
    if not algos or bad:
        raise argparse.ArgumentTypeError(f"algorithm set must be drawn from hm,hm-lcp,gap, got {raw}")
    return algos


def cmd_build(text_path: str, out_prefix: str) -> int:
    """Write BWT and LCP of one text file."""
    text = remap_alphabet(Path(text_path).read_bytes(), 0, 1)
    bwt, lcp = build_text_index(text)
    write_bwt(bwt_path(out_prefix), bwt)
    write_lcp(lcp_path(out_prefix), lcp)
    logger.info(f"built {out_prefix}: n={len(bwt)}")
    return EXIT_OK


def load_pair(a_prefix: str, b_prefix: str, need_lcp: bool) -> tuple:
    """Both inputs as adjacent groups of one collection of k_a + k_b strings."""
    _, k_a = read_bwt_raw(bwt_path(a_prefix))
    _, k_b = read_bwt_raw(bwt_path(b_prefix))
    total = k_a + k_b
    bwt_a = read_bwt(bwt_path(a_prefix), 0, total)
    bwt_b = read_bwt(bwt_path(b_prefix), k_a, total)
    lcp_a = lcp_b = None
    if need_lcp:
        lcp_a = read_lcp(lcp_path(a_prefix))
        lcp_b = read_lcp(lcp_path(b_prefix))
        if lcp_a.n != len(bwt_a) or lcp_b.n != len(bwt_b):
            raise FormatError("LCP file length does not match its BWT file")
    return MergedIndex(bwt_a, lcp_a, 0, k_a), MergedIndex(bwt_b, lcp_b, k_a, k_b)


def write_outputs(out_prefix: str, merged: MergedIndex) -> None:
    """Write .bwt, and .lcp when the algorithm produced one; a stale .lcp is removed."""
    write_bwt(bwt_path(out_prefix), merged.bwt)
    if merged.lcp is not None:
        write_lcp(lcp_path(out_prefix), merged.lcp)
    else:
        lcp_path(out_prefix).unlink(missing_ok=True)


def cmd_merge(
    a_prefix: str,
    b_prefix: str,
    out_prefix: str,
    algo: str,
    skip: str,
    settings: Settings,
    instrument: bool = False,
) -> int:
    """Merge two prefixes; prints one stats line."""
    left, right = load_pair(a_prefix, b_prefix, need_lcp=algo != "hm")
    tracer = TracingService(settings.tracing.enabled, settings.tracing.trace_file)
    tracer.log_event("merge_start", {"algorithm": algo, "skip_mode": skip, "a": a_prefix, "b": b_prefix})
    merged = run_merge(
        left, right, algo, skip,
        instrument=instrument,
        max_phases=settings.merge.max_phases,
        on_phase=tracer.phase_callback() if tracer.enabled else None,
    )
    stats = merged.stats[-1]
    tracer.log_event("merge_complete", {"algorithm": algo, "phases": stats.phases, "work": stats.total_work})
    write_outputs(out_prefix, merged)
    print(stats.summary())
    return EXIT_OK


def cmd_merge_collection(list_file: str, out_prefix: str, algo: str, skip: str, workers: int, settings: Settings) -> int:
    """Merge every text listed (one path per line) in ``list_file``."""
    lines = Path(list_file).read_text(encoding="utf-8").splitlines()
    job = CollectionJob(
        inputs=[Path(line.strip()) for line in lines if line.strip()],
        algorithm=algo,
        skip_mode=skip,
        max_workers=workers,
        instrument=settings.merge.instrument,
    )
    merged = run_job(job, timeout=settings.collection.task_timeout)
    write_outputs(out_prefix, merged)
    phases = sum(s.phases for s in merged.stats)
    work = sum(s.total_work for s in merged.stats)
    print(f"algo={algo} strings={merged.count} rounds={len(job.rounds)} n={len(merged.bwt)} phases={phases} work={work}")
    return EXIT_OK


def _first_difference(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape[0] != b.shape[0]:
        common = min(a.shape[0], b.shape[0])
        diff = np.flatnonzero(a[:common] != b[:common])
        return int(diff[0]) if diff.size else common
    diff = np.flatnonzero(a != b)
    return int(diff[0]) if diff.size else -1


def cmd_verify(texts: Sequence[str], merged_prefix: str) -> int:
    """Compare merged files against the oracle built from the original texts."""
    total = len(texts)
    oracle = oracle_merge_many([remap_alphabet(Path(p).read_bytes(), g, total) for g, p in enumerate(texts)])
    stored, k = read_bwt_raw(bwt_path(merged_prefix))
    if k != total:
        raise VerificationFailed("string count", 0)
    expected = np.frombuffer(oracle.bwt.to_bytes(), dtype=np.uint8)
    at = _first_difference(expected, stored)
    if at >= 0:
        raise VerificationFailed("bwt", at)
    if lcp_path(merged_prefix).exists():
        at = _first_difference(oracle.lcp.to_external(), read_lcp(lcp_path(merged_prefix)).to_external())
        if at >= 0:
            raise VerificationFailed("lcp", at)
    print(f"OK: {merged_prefix} matches the oracle ({len(expected)} rows)")
    return EXIT_OK


def cmd_bench(length: int, sigma: int, pairs: int, seed: int, algo_set: List[str], skip: str, timings: bool) -> int:
    runner = BenchmarkRunner(algo_set, skip)
    results = runner.run_suite(length, sigma, pairs, seed)
    sys.stdout.write(runner.format_table(results, timings))
    return EXIT_OK


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = UsageParser(prog="gapbwt", description="BWT/LCP construction and merging")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    build_parser_ = subparsers.add_parser("build", help="Build .bwt/.lcp of a text file")
    build_parser_.add_argument("text", help="Raw text file")
    build_parser_.add_argument("out", help="Output prefix")

    merge_parser = subparsers.add_parser("merge", help="Merge two BWT/LCP prefixes")
    merge_parser.add_argument("a", help="First input prefix")
    merge_parser.add_argument("b", help="Second input prefix")
    merge_parser.add_argument("out", help="Output prefix")
    merge_parser.add_argument("--algo", choices=["hm", "hm-lcp", "gap"], default=settings.merge.algorithm)
    merge_parser.add_argument("--skip", choices=["counts", "wavelet"], default=settings.merge.skip_mode)
    merge_parser.add_argument("--instrument", action="store_true", default=settings.merge.instrument,
                              help="Check set-once boundaries and stable skipped ranges")
    merge_parser.add_argument("--metrics-file", help="Write Prometheus metrics here")

    coll_parser = subparsers.add_parser("merge-collection", help="Merge every text listed in a file")
    coll_parser.add_argument("list_file", help="File with one text path per line")
    coll_parser.add_argument("out", help="Output prefix")
    coll_parser.add_argument("--algo", choices=["hm", "hm-lcp", "gap"], default=settings.merge.algorithm)
    coll_parser.add_argument("--skip", choices=["counts", "wavelet"], default=settings.merge.skip_mode)
    coll_parser.add_argument("--workers", type=positive_int, default=settings.collection.max_workers)
    coll_parser.add_argument("--metrics-file", help="Write Prometheus metrics here")

    verify_parser = subparsers.add_parser("verify", help="Check merged files against the oracle")
    verify_parser.add_argument("texts", nargs="+", help="Original texts in collection order, then the merged prefix")

    bench_parser = subparsers.add_parser("bench", help="Compare algorithms on random pairs")
    bench_parser.add_argument("--len", dest="length", type=positive_int, default=settings.bench.len)
    bench_parser.add_argument("--sigma", type=positive_int, default=settings.bench.sigma)
    bench_parser.add_argument("--pairs", type=non_negative_int, default=settings.bench.pairs)
    bench_parser.add_argument("--seed", type=non_negative_int, default=settings.bench.seed)
    bench_parser.add_argument("--algo-set", type=algo_list, default=list(settings.bench.algo_set))
    bench_parser.add_argument("--skip", choices=["counts", "wavelet"], default=settings.merge.skip_mode)
    bench_parser.add_argument("--timings", action="store_true", help="Add wall-clock columns")
    bench_parser.add_argument("--metrics-file", help="Write Prometheus metrics here")
    return parser


def dispatch(parser: argparse.ArgumentParser, args: argparse.Namespace, settings: Settings) -> int:
    if args.command == "build":
        return cmd_build(args.text, args.out)
    if args.command == "merge":
        return cmd_merge(args.a, args.b, args.out, args.algo, args.skip, settings, args.instrument)
    if args.command == "merge-collection":
        return cmd_merge_collection(args.list_file, args.out, args.algo, args.skip, args.workers, settings)
    if args.command == "verify":
        if len(args.texts) < 3:
            parser.error("verify needs at least two texts and a merged prefix")
        return cmd_verify(args.texts[:-1], args.texts[-1])
    if args.command == "bench":
        if args.sigma > 254:
            parser.error("--sigma must be at most 254")
        return cmd_bench(args.length, args.sigma, args.pairs, args.seed, args.algo_set, args.skip, args.timings)
    parser.print_help(sys.stderr)
    return EXIT_USAGE


def report(command: str, exc: BaseException) -> None:
    logger.debug(f"{command} failed", exc_info=exc)
    print(f"gapbwt {command}: error: {exc}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = load_settings()
    except GapBwtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO), stream=sys.stderr)
    parser = build_parser(settings)
    args = parser.parse_args(argv)
    try:
        code = dispatch(parser, args, settings)
    except GapBwtError as exc:
        report(args.command, exc)
        return exc.exit_code
    except ValidationError as exc:
        report(args.command, exc)
        return EXIT_USAGE
    except OSError as exc:
        report(args.command, exc)
        return EXIT_FORMAT
    metrics_file = getattr(args, "metrics_file", None)
    if metrics_file:
        write_metrics(metrics_file)
    return code


if __name__ == "__main__":
    sys.exit(main())
