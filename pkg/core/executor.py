"""Ordered parallel map for independent simulation tasks."""

from dataclasses import dataclass
from typing import Any, Callable, Iterable

from joblib import Parallel, delayed

from config import Config


@dataclass
class ExecutionResult:
    """Outcome of one task: its value, or the error it raised."""
    index: int
    value: Any = None
    error: BaseException | None = None

    @property
    def success(self) -> bool:
        return self.error is None


def _run_captured(fn: Callable, index: int, task) -> ExecutionResult:
    try:
        return ExecutionResult(index=index, value=fn(task))
    except Exception as exc:
        return ExecutionResult(index=index, error=exc)


class ParallelExecutor:
    """Runs a function over tasks with joblib and returns results in task order."""

    def __init__(self, workers: int | None = None, backend: str | None = None,
                 progress_callback: Callable[[str], None] | None = None):
        self.workers = max(int(workers if workers is not None else Config.WORKERS), 1)
        self.backend = backend or Config.JOBLIB_BACKEND
        self.progress_callback = progress_callback

    def _report(self, label: str | None, done: int, total: int):
        if self.progress_callback and label:
            self.progress_callback(f"⏳ {label}: {done}/{total}")

    def map(self, fn: Callable, tasks: Iterable, label: str | None = None) -> list:
        """
        Apply fn to every task.

        Args:
            fn: Picklable function of one task.
            tasks: Task arguments.
            label: Progress label; progress is reported once per batch.

        Returns:
            fn(task) for every task, in input order. The first error is re-raised.
        """
        results = self.map_captured(fn, tasks, label)
        for result in results:
            if result.error is not None:
                raise result.error
        return [result.value for result in results]

    def map_captured(self, fn: Callable, tasks: Iterable, label: str | None = None) -> list[ExecutionResult]:
        """Like map, but errors are returned per task instead of raised."""
        tasks = list(tasks)
        total = len(tasks)
        if total == 0:
            return []

        if self.workers == 1:
            results = []
            step = max(total // 10, 1)
            for i, task in enumerate(tasks):
                results.append(_run_captured(fn, i, task))
                if (i + 1) % step == 0 or i + 1 == total:
                    self._report(label, i + 1, total)
            return results

        batch = self.workers * 4
        results: list[ExecutionResult] = []
        with Parallel(n_jobs=self.workers, backend=self.backend) as parallel:
            for start in range(0, total, batch):
                chunk = tasks[start:start + batch]
                results.extend(parallel(
                    delayed(_run_captured)(fn, start + i, task) for i, task in enumerate(chunk)
                ))
                self._report(label, len(results), total)
        results.sort(key=lambda r: r.index)
        return results
