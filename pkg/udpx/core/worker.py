"""
Worker pool for independent training jobs.

Students of one self-training round share nothing mutable, so they can train
side by side. The pool runs jobs inline (one worker) or in worker processes,
always returning results in submission order, and keeps simple statistics.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, TypeVar

from udpx.core.logger import get_logger

J = TypeVar("J")
T = TypeVar("T")


class WorkerMode(str, Enum):
    """Worker execution mode."""

    INLINE = "inline"  # run in the calling process, one job at a time
    PROCESS = "process"  # run in a process pool


class JobStatus(Enum):
    """Job status enumeration."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class PoolJob(Generic[J]):
    """A unit of work submitted to the pool."""

    id: int
    payload: J
    status: JobStatus = JobStatus.PENDING
    error_message: Optional[str] = None
    duration: Optional[float] = None


@dataclass
class PoolStats:
    """Counters collected while running jobs."""

    jobs_processed: int = 0
    jobs_failed: int = 0
    total_runtime: float = 0.0
    per_job_seconds: Dict[int, float] = field(default_factory=dict)


def _timed_call(func: Callable[[J], T], payload: J) -> "tuple[T, float]":
    start = time.perf_counter()
    result = func(payload)
    return result, time.perf_counter() - start


class StudentPool:
    """
    Run independent jobs, inline or in parallel worker processes.

    The callable and payloads must be picklable in process mode (module-level
    functions and plain data).
    """

    def __init__(self, jobs: int = 1, verbose: bool = False):
        """
        Initialize the pool.

        Args:
            jobs: Maximum number of concurrent workers
            verbose: Enable verbose logging
        """
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        self.max_workers = jobs
        self.mode = WorkerMode.INLINE if jobs == 1 else WorkerMode.PROCESS
        self.verbose = verbose
        self.logger = get_logger("StudentPool", verbose=verbose)
        self.stats = PoolStats()

    def run(self, func: Callable[[J], T], payloads: Sequence[J]) -> List[T]:
        """
        Run func over every payload and return results in submission order.

        The first failure is re-raised after every job has settled.
        """
        pool_jobs = [PoolJob(id=index, payload=payload) for index, payload in enumerate(payloads)]
        if not pool_jobs:
            return []

        start = time.perf_counter()
        self.logger.info(
            f"Running {len(pool_jobs)} job(s) in {self.mode.value} mode "
            f"(max {self.max_workers} worker(s))"
        )

        results: List[Any] = [None] * len(pool_jobs)
        first_error: Optional[BaseException] = None

        if self.mode == WorkerMode.INLINE:
            for job in pool_jobs:
                job.status = JobStatus.RUNNING
                try:
                    results[job.id], job.duration = _timed_call(func, job.payload)
                    self._complete(job)
                except Exception as e:
                    self._fail(job, e)
                    first_error = first_error or e
                    break
        else:
            with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
                futures = {
                    job.id: executor.submit(_timed_call, func, job.payload) for job in pool_jobs
                }
                for job in pool_jobs:
                    job.status = JobStatus.RUNNING
                    try:
                        results[job.id], job.duration = futures[job.id].result()
                        self._complete(job)
                    except Exception as e:
                        self._fail(job, e)
                        first_error = first_error or e

        self.stats.total_runtime += time.perf_counter() - start
        if first_error is not None:
            raise first_error
        return results

    def _complete(self, job: PoolJob) -> None:
        job.status = JobStatus.COMPLETED
        self.stats.jobs_processed += 1
        self.stats.per_job_seconds[job.id] = job.duration or 0.0
        self.logger.debug(f"Job {job.id} completed in {job.duration:.1f}s")

    def _fail(self, job: PoolJob, error: BaseException) -> None:
        job.status = JobStatus.FAILED
        job.error_message = str(error)
        self.stats.jobs_failed += 1
        self.logger.error(f"Job {job.id} failed: {error}")
