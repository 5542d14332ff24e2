"""
Multi-objective asynchronous successive halving (MO-ASHA).

Trials are sampled uniformly and trained rung by rung along a geometric
resource ladder. When a trial completes rung k it is ranked, with
non-dominated sorting plus the within-front order, against every trial that
ever completed rung k. It is promoted to rung k + 1 if its position is within
the top ceil(n / eta), and stopped otherwise.
"""

import logging
import math
import threading
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Tuple

from src.clients.run_log import RunLog
from src.config import settings
from src.models.config_models import AshaConfig
from src.models.internal_models import ConstraintStatus, HyperparamVector, ObjectiveVector, Solution
from src.services.pbt_service import sort_population
from src.services.random_search_service import BaselineError
from src.services.trial_service import evaluate_checkpoint, sample_trial
from src.services.worker_pool import EventScheduler, RunClock, StreamPurpose, WorkerPool, rng_stream
from src.tasks.base import TrainableTask

logger = logging.getLogger(__name__)

# Population size and schedule whose simulated duration bounds a standalone run.
DEFAULT_BUDGET_POPULATION = 32


class AshaError(BaselineError):
    """Raised for invalid rung ladders or budgets."""
    pass


@dataclass
class RungRecord:
    """One trial's result at a rung."""

    trial: int
    objectives: ObjectiveVector
    constraint: ConstraintStatus


class RungTable:
    """Completed results per rung, read and extended under one lock."""

    def __init__(self, n_rungs: int):
        self._rungs: List[List[RungRecord]] = [[] for _ in range(n_rungs)]
        self._lock = threading.Lock()

    def record(self, rung: int, record: RungRecord) -> List[RungRecord]:
        """Add a result and return the rung's records including it."""
        with self._lock:
            self._rungs[rung].append(record)
            return list(self._rungs[rung])

    def completed(self, rung: int) -> List[RungRecord]:
        with self._lock:
            return list(self._rungs[rung])


def promotion_quota(n_completed: int, eta: int) -> int:
    """Number of top positions that promote among n completions."""
    return math.ceil(n_completed / eta)


def default_time_budget(task: TrainableTask, max_resource: int, workers: int) -> float:
    """Simulated duration of a synchronous 32-member PBT run to max_resource."""
    return math.ceil(DEFAULT_BUDGET_POPULATION / workers) * max_resource * task.seconds_per_step


class MoAsha:
    """One MO-ASHA run."""

    def __init__(self, task: TrainableTask, config: AshaConfig, run_id: str = "mo_asha",
                 workers: Optional[int] = None):
        """
        Raises:
            AshaError: On an invalid ladder, or when simulated jobs would take no time
        """
        self.task = task
        self.config = config
        try:
            self.rungs = config.rungs(task.steps_per_epoch)
        except ValueError as e:
            raise AshaError(str(e))
        if task.seconds_per_step <= 0 and config.clock == "simulated":
            raise AshaError("MO-ASHA needs seconds_per_step > 0 to advance its simulated clock")

        self.workers = config.max_concurrent or workers or settings.workers
        self.time_budget = config.time_budget or default_time_budget(task, self.rungs[-1], self.workers)
        self.table = RungTable(len(self.rungs))
        self.log = RunLog(run_id)
        self.clock = RunClock(config.clock)
        self._checkpoints: Dict[int, bytes] = {}
        self._hyperparams: Dict[int, HyperparamVector] = {}

    def _train_job(self, trial: int, rung: int) -> bytes:
        checkpoint = self._checkpoints[trial]
        n_steps = self.rungs[rung] - self.task.step_of(checkpoint)
        rng = rng_stream(self.config.seed, StreamPurpose.TRAIN, trial, rung)
        return self.task.train(checkpoint, self._hyperparams[trial], n_steps, rng)

    def _job_seconds(self, trial: int, rung: int) -> float:
        done = self.rungs[rung - 1] if rung > 0 else 0
        return (self.rungs[rung] - done) * self.task.seconds_per_step

    def _decide(self, trial: int, rung: int, record: RungRecord) -> Optional[Tuple[bool, int, int]]:
        """
        Rank the rung's completions and decide promotion of `trial`.

        Returns:
            (promoted, 1-based position, number of completions), or None at the top rung
        """
        if rung == len(self.rungs) - 1:
            return None

        records = self.table.record(rung, record)
        members = [
            Solution(id=r.trial, hyperparams=(), checkpoint="", objectives=r.objectives, constraint=r.constraint)
            for r in records
        ]
        order = sort_population(
            members, self.config.ranking, rng_stream(self.config.seed, StreamPurpose.RANK, trial, rung),
            constraints=self.config.constraints,
        )
        position = order.index(len(members) - 1)
        quota = promotion_quota(len(members), self.config.eta)
        return position < quota, position + 1, len(members)

    def run(self) -> RunLog:
        """Run until the time budget is spent and every started job has finished."""
        logger.info(
            f"Starting MO-ASHA {self.log.run_id}: rungs={self.rungs}, eta={self.config.eta}, "
            f"budget={self.time_budget}, workers={self.workers}"
        )
        scheduler = EventScheduler(self.workers)
        promotions: Deque[Tuple[int, int]] = deque()
        next_trial = 0

        with WorkerPool(self.workers) as pool:
            while True:
                while scheduler.has_free_worker and self.clock.stamp(scheduler.now) < self.time_budget:
                    if promotions:
                        trial, rung = promotions.popleft()
                    else:
                        trial, rung = next_trial, 0
                        next_trial += 1
                        hyperparams, checkpoint = sample_trial(self.task, self.config.seed, trial)
                        self._hyperparams[trial] = hyperparams
                        self._checkpoints[trial] = checkpoint
                    future = pool.submit(self._train_job, trial, rung)
                    scheduler.start((trial, rung), self._job_seconds(trial, rung), future)

                if not scheduler:
                    break

                simulated, (trial, rung), checkpoint = scheduler.pop()
                t = self.clock.stamp(simulated)
                if t > self.time_budget:
                    logger.debug(f"Dropping trial {trial} rung {rung}: finished at {t} past the budget")
                    continue

                self._checkpoints[trial] = checkpoint
                evaluation = evaluate_checkpoint(
                    self.task, checkpoint,
                    rng_stream(self.config.seed, StreamPurpose.EVALUATE, trial, rung),
                )
                if evaluation.nonfinite:
                    self.log.log(t, evaluation.step, "error", trial, hp=list(self._hyperparams[trial]),
                                 viol=evaluation.constraint.violation, rung=rung,
                                 message=f"non-finite objectives {list(evaluation.raw)}")
                    continue

                record = RungRecord(trial, evaluation.objectives, evaluation.constraint)
                decision = self._decide(trial, rung, record)
                promoted = decision is not None and decision[0]
                self.log.log(
                    t, evaluation.step, "eval", trial,
                    f=list(evaluation.objectives),
                    hp=list(self._hyperparams[trial]),
                    viol=evaluation.constraint.violation if self.task.has_constraint else None,
                    rung=rung,
                    promoted=promoted,
                )
                if decision is not None:
                    self.log.log(t, evaluation.step, "promote", trial, rung=rung, promoted=promoted,
                                 rank=decision[1], n=decision[2])
                if promoted:
                    promotions.append((trial, rung + 1))

        if not self.log.evaluations():
            logger.error(f"MO-ASHA {self.log.run_id}: time budget {self.time_budget} below one rung-0 training")
            self.log.log(self.clock.stamp(self.time_budget), 0, "error", -1,
                         message="empty front: time budget below one min-resource training")

        logger.info(
            f"MO-ASHA {self.log.run_id} finished: {next_trial} trials, "
            f"{len(self.log.evaluations())} evaluations, t={self.log.final_time}"
        )
        return self.log


def mo_asha(task: TrainableTask, config: AshaConfig, run_id: str = "mo_asha",
            workers: Optional[int] = None) -> RunLog:
    """Run MO-ASHA once and return its RunLog."""
    return MoAsha(task, config, run_id=run_id, workers=workers).run()
