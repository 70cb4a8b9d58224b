"""
Realization tasks executed by a process pool
Keeps results in submission order so outputs do not depend on the worker count
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

from logging_config import error_tracker, log_performance

logger = logging.getLogger(__name__)


class TaskRunner:
    """Ordered map over independent realizations, in-process or on a worker pool.

    Instances are callable like ``map`` so they can be handed to the ensemble
    functions as their ``runner``.
    """

    def __init__(self, workers: int = 1, label: str = "tasks", experiment: Optional[str] = None,
                 progress_every: float = 0.1):
        self.workers = max(1, int(workers))
        self.label = label
        self.experiment = experiment
        self.progress_every = progress_every

    def __repr__(self) -> str:
        return f"TaskRunner(workers={self.workers}, label={self.label!r})"

    def __call__(self, fn: Callable, jobs: Iterable[Any]) -> List[Any]:
        return self.map(fn, jobs)

    def map(self, fn: Callable, jobs: Iterable[Any]) -> List[Any]:
        jobs = list(jobs)
        total = len(jobs)
        start_time = time.time()
        logger.info(f"{self.label}: running {total} tasks on {self.workers} worker(s)")
        results: List[Any] = []
        step = max(1, int(total * self.progress_every))
        try:
            if self.workers == 1 or total < 2:
                stream = map(fn, jobs)
                for result in stream:
                    results.append(result)
                    self._progress(len(results), total, step)
            else:
                chunksize = max(1, total // (self.workers * 8))
                with ProcessPoolExecutor(max_workers=self.workers) as pool:
                    for result in pool.map(fn, jobs, chunksize=chunksize):
                        results.append(result)
                        self._progress(len(results), total, step)
        except Exception as exc:
            log_performance(self.label, time.time() - start_time, success=False)
            error_tracker.log_error(exc, f"{self.label} task {len(results)}", self.experiment)
            raise

        log_performance(self.label, time.time() - start_time)
        return results

    def _progress(self, done: int, total: int, step: int) -> None:
        if done % step == 0 or done == total:
            logger.info(f"{self.label}: {done}/{total} done")
