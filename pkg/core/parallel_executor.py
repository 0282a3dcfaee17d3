"""
Parallel execution engine for merge trees.

A merge tree is a set of tasks, each naming the tasks whose outputs it
consumes.  The executor layers the tree into batches of mutually
independent tasks (for a collection merge: the leaves, then one batch per
mergesort round) and runs each batch concurrently on worker threads.  The
compiled merge kernels release the GIL, so a batch really runs in parallel.

Features:
- Dependency layering, cycles rejected up front
- Outputs of dependencies passed as ``dependency_results``
- Bounded concurrency and per-task timeout (reporting only, see Task)
- Fail-fast: later batches are skipped after a failure, partial results kept
"""

from __future__ import annotations

import asyncio
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class Task:
    """
    One node of a merge tree.

    Attributes
    ----------
    id : str
        Key other tasks use to depend on this one.
    name : str
        Label for logs.
    executor : callable
        Blocking function run on a worker thread with ``kwargs``.  A task with
        dependencies also gets their outputs, in the order listed, as
        ``dependency_results``.
    dependencies : list
        Ids whose outputs this task consumes.
    priority : int
        Order inside a batch, higher first.
    timeout : float
        Seconds before the task is reported as failed.  The worker thread
        cannot be interrupted: a timed-out merge keeps running to the end of
        its kernel and the event loop waits for it when it shuts down, so
        the timeout bounds when the failure is reported, not the wall time.
    """
    id: str
    name: str
    executor: Callable[..., Any]
    kwargs: Dict[str, Any] = field(default_factory=dict)
    dependencies: List[str] = field(default_factory=list)
    priority: int = 0
    timeout: float = 600


@dataclass
class TaskResult:
    task_id: str
    task_name: str
    status: TaskStatus
    output: Any
    error: Optional[str]
    start_time: float
    end_time: float
    duration: float
    exception: Optional[BaseException] = None

    @classmethod
    def skipped(cls, task: Task) -> "TaskResult":
        now = time.perf_counter()
        return cls(task.id, task.name, TaskStatus.SKIPPED, None, "skipped after an earlier failure", now, now, 0.0)


@dataclass
class ExecutionPlan:
    """Tasks layered so that every batch depends only on earlier batches."""
    batches: List[List[Task]]
    total_tasks: int
    max_parallelism: int


@dataclass
class ExecutionResult:
    task_results: Dict[str, TaskResult]
    total_duration: float
    successful_tasks: int
    failed_tasks: int
    speedup_factor: float  # summed task time over wall time

    def first_failure(self) -> Optional[TaskResult]:
        """The first failed task in submission order, if any."""
        return next((r for r in self.task_results.values() if r.status == TaskStatus.FAILED), None)


class ParallelExecutor:
    """Run a merge tree batch by batch with at most ``max_concurrent`` tasks in flight."""

    def __init__(self, max_concurrent: int = 2):
        if max_concurrent < 1:
            raise ValueError("max_concurrent must be at least 1")
        self.max_concurrent = max_concurrent

    async def execute(self, tasks: List[Task], fail_fast: bool = True) -> ExecutionResult:
        """
        Run every task of the tree.

        Parameters
        ----------
        tasks : list
            The tree's tasks, in submission order.
        fail_fast : bool
            Stop after the first batch containing a failure; tasks not yet
            run are reported as SKIPPED.

        Returns
        -------
        ExecutionResult
            One TaskResult per task, keyed by id.
        """
        plan = self._build_execution_plan(tasks)
        logger.info(f"running {plan.total_tasks} tasks in {len(plan.batches)} batches (widest {plan.max_parallelism})")
        started = time.perf_counter()
        limit = asyncio.Semaphore(self.max_concurrent)
        results: Dict[str, TaskResult] = {}

        for index, batch in enumerate(plan.batches, 1):
            logger.debug(f"batch {index}/{len(plan.batches)}: {[t.id for t in batch]}")
            outcome = await asyncio.gather(*(self._execute_task(t, results, limit) for t in batch))
            results.update((r.task_id, r) for r in outcome)
            if fail_fast and any(r.status == TaskStatus.FAILED for r in outcome):
                logger.error(f"batch {index} failed, skipping the remaining batches")
                results.update((t.id, TaskResult.skipped(t)) for t in tasks if t.id not in results)
                break

        elapsed = time.perf_counter() - started
        ordered = {t.id: results[t.id] for t in tasks if t.id in results}
        successful = sum(r.status == TaskStatus.COMPLETED for r in ordered.values())
        failed = sum(r.status == TaskStatus.FAILED for r in ordered.values())
        busy = sum(r.duration for r in ordered.values())
        speedup = busy / elapsed if elapsed > 0 else 1.0
        logger.info(f"{successful}/{len(tasks)} tasks completed in {elapsed:.2f}s (speedup {speedup:.2f}x)")
        return ExecutionResult(ordered, elapsed, successful, failed, speedup)

    def _build_execution_plan(self, tasks: List[Task]) -> ExecutionPlan:
        """Layer the tasks; raises ValueError on unknown ids or cycles."""
        by_id = {t.id: t for t in tasks}
        position = {t.id: i for i, t in enumerate(tasks)}
        unknown = sorted({d for t in tasks for d in t.dependencies if d not in by_id})
        if unknown:
            raise ValueError(f"unknown dependencies: {unknown}")

        pending = dict(by_id)
        done: set[str] = set()
        batches: List[List[Task]] = []
        while pending:
            layer = [t for t in pending.values() if done.issuperset(t.dependencies)]
            if not layer:
                raise ValueError(f"dependency cycle among: {sorted(pending)}")
            layer.sort(key=lambda t: (-t.priority, position[t.id]))
            batches.append(layer)
            for t in layer:
                del pending[t.id]
                done.add(t.id)

        widest = max((len(b) for b in batches), default=0)
        return ExecutionPlan(batches, len(tasks), widest)

    async def _execute_task(self, task: Task, finished: Dict[str, TaskResult], limit: asyncio.Semaphore) -> TaskResult:
        async with limit:
            kwargs = dict(task.kwargs)
            if task.dependencies:
                kwargs["dependency_results"] = [finished[d].output for d in task.dependencies]
            started = time.perf_counter()
            status, output, error, exc = TaskStatus.COMPLETED, None, None, None
            try:
                output = await asyncio.wait_for(asyncio.to_thread(task.executor, **kwargs), timeout=task.timeout)
            except asyncio.TimeoutError as timeout:
                status, error, exc = TaskStatus.FAILED, f"Timeout after {task.timeout}s", timeout
                logger.error(f"{task.name}: no result after {task.timeout}s")
            except Exception as failure:
                status, error, exc = TaskStatus.FAILED, str(failure), failure
                logger.error(f"{task.name} failed: {failure}")
            ended = time.perf_counter()
            if status == TaskStatus.COMPLETED:
                logger.debug(f"{task.name} done in {ended - started:.3f}s")
            return TaskResult(task.id, task.name, status, output, error, started, ended, ended - started, exc)

    def get_metrics(self, result: ExecutionResult) -> Dict[str, Any]:
        total = len(result.task_results)
        durations = [r.duration for r in result.task_results.values()]
        return {
            "total_tasks": total,
            "successful_tasks": result.successful_tasks,
            "failed_tasks": result.failed_tasks,
            "success_rate": result.successful_tasks / total if total else 0,
            "total_duration_seconds": result.total_duration,
            "speedup_factor": result.speedup_factor,
            "avg_task_duration": sum(durations) / total if total else 0,
        }
