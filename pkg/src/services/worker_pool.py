"""
Worker pool, run clock and event scheduler shared by every algorithm.

Training jobs run on a ThreadPoolExecutor. Time is tracked on a simulated
clock by default: W virtual workers each process one job at a time and a job
of n steps occupies its worker for n * seconds_per_step. Completion order is
decided by the simulated finish time, ties broken by submission order, so a
run's event sequence does not depend on thread scheduling.
"""

import heapq
import itertools
import logging
import math
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Iterable, List, Optional, Tuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class StreamPurpose(IntEnum):
    """Namespaces of the per-run random streams."""

    INIT = 0
    TRAIN = 1
    EVALUATE = 2
    RANK = 3
    EXPLOIT = 4
    WEIGHTS = 5
    VARIATION = 6


def rng_stream(seed: int, purpose: StreamPurpose, *keys: int) -> np.random.Generator:
    """
    Independent generator for (seed, purpose, keys...).

    Every random decision of a run draws from a stream addressed by what it is
    for (solution slot, round, rung), never from a shared sequential stream.
    """
    return np.random.default_rng([int(seed), int(purpose), *(int(k) for k in keys)])


class RunClock:
    """Stamps events with simulated seconds or with real elapsed seconds."""

    def __init__(self, kind: str = "simulated"):
        if kind not in ("simulated", "wall"):
            raise ValueError(f"Unknown clock kind: {kind}")
        self.kind = kind
        self._started = time.perf_counter()

    def stamp(self, simulated: float) -> float:
        if self.kind == "wall":
            return round(time.perf_counter() - self._started, 6)
        return round(simulated, 9)


class WorkerPool:
    """Thread pool of W workers with a barrier-style `map`."""

    def __init__(self, workers: int):
        if workers < 1:
            raise ValueError(f"Worker count must be >= 1, got {workers}")
        self.workers = workers
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        self._executor = ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="mopbt-worker")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=exc_type is not None)
            self._executor = None

    @property
    def executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            raise RuntimeError("WorkerPool used outside of its context manager")
        return self._executor

    def submit(self, fn: Callable[..., R], *args: Any) -> "Future[R]":
        return self.executor.submit(fn, *args)

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Run fn over items concurrently, returning results in input order once all finished."""
        futures = [self.executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]

    def round_seconds(self, n_jobs: int, job_seconds: float) -> float:
        """Simulated length of a barrier round of equally long jobs."""
        return math.ceil(n_jobs / self.workers) * job_seconds


@dataclass(order=True)
class _Completion:
    finish: float
    seq: int
    payload: Any = field(compare=False)
    future: Optional[Future] = field(compare=False, default=None)


class EventScheduler:
    """
    Discrete-event scheduler over W virtual workers.

    `start` occupies a free worker until now + duration; `pop` advances the
    simulated time to the next completion and frees its worker.
    """

    def __init__(self, workers: int):
        if workers < 1:
            raise ValueError(f"Worker count must be >= 1, got {workers}")
        self.workers = workers
        self.now = 0.0
        self._running: List[_Completion] = []
        self._seq = itertools.count()

    @property
    def has_free_worker(self) -> bool:
        return len(self._running) < self.workers

    def start(self, payload: Any, duration: float, future: Optional[Future] = None) -> float:
        """
        Occupy a worker with a job.

        Returns:
            Simulated finish time of the job

        Raises:
            RuntimeError: If all workers are busy
        """
        if not self.has_free_worker:
            raise RuntimeError("No free worker")
        finish = self.now + duration
        heapq.heappush(self._running, _Completion(finish, next(self._seq), payload, future))
        return finish

    def pop(self) -> Tuple[float, Any, Any]:
        """
        Advance to the next completion.

        Returns:
            (finish time, payload, job result or None when no future was attached)
        """
        if not self._running:
            raise RuntimeError("No running jobs")
        completion = heapq.heappop(self._running)
        self.now = completion.finish
        result = completion.future.result() if completion.future is not None else None
        return completion.finish, completion.payload, result

    def __bool__(self) -> bool:
        return bool(self._running)


def wave_times(n_jobs: int, workers: int, rounds: int, ready_seconds: float, offset: float = 0.0) -> List[List[float]]:
    """
    Evaluation times of n independent jobs of `rounds` ready intervals each,
    run in waves of W jobs.

    Returns:
        times[j][r]: simulated time of job j's r-th evaluation
    """
    job_seconds = rounds * ready_seconds
    return [
        [offset + (j // workers) * job_seconds + (r + 1) * ready_seconds for r in range(rounds)]
        for j in range(n_jobs)
    ]
