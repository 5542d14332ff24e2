"""Random search baseline: uniform hyperparameters, fixed for the whole training."""

import logging
from typing import List, Optional

from src.clients.run_log import RunLog
from src.config import settings
from src.models.config_models import RandomSearchConfig
from src.services.trial_service import TrialResult, sample_trial, train_trial
from src.services.worker_pool import RunClock, WorkerPool, wave_times
from src.tasks.base import TrainableTask

logger = logging.getLogger(__name__)


class BaselineError(Exception):
    """Base exception for baseline algorithm errors."""
    pass


def resolve_schedule(ready_interval: Optional[int], total_steps: Optional[int], task: TrainableTask):
    """
    Ready interval and total steps with the PBT defaults (2 and 100 epochs).

    Raises:
        BaselineError: If total_steps is not a positive multiple of ready_interval
    """
    ready = ready_interval or 2 * task.steps_per_epoch
    total = total_steps or 100 * task.steps_per_epoch
    if total < ready or total % ready != 0:
        raise BaselineError(f"total_steps={total} must be a positive multiple of ready_interval={ready}")
    return ready, total


def log_trials(
    log: RunLog,
    clock: RunClock,
    trial_ids: List[int],
    hyperparams: List[tuple],
    results: List[TrialResult],
    times: List[List[float]],
    task: TrainableTask,
) -> None:
    """Append the evaluations of independently trained trials in time order."""
    rows = []
    for trial_id, hp, result, trial_times in zip(trial_ids, hyperparams, results, times):
        for t, evaluation in zip(trial_times, result.evaluations):
            rows.append((t, trial_id, hp, evaluation))

    for t, trial_id, hp, evaluation in sorted(rows, key=lambda row: (row[0], row[1])):
        stamp = clock.stamp(t)
        if evaluation.nonfinite:
            log.log(stamp, evaluation.step, "error", trial_id, hp=list(hp),
                    viol=evaluation.constraint.violation,
                    message=f"non-finite objectives {list(evaluation.raw)}")
            continue
        log.log(
            stamp, evaluation.step, "eval", trial_id,
            f=list(evaluation.objectives),
            hp=list(hp),
            viol=evaluation.constraint.violation if task.has_constraint else None,
        )


def random_search(
    task: TrainableTask,
    config: RandomSearchConfig,
    run_id: str = "random_search",
) -> RunLog:
    """
    Train n_trials independent uniform configurations to total_steps.

    Trial i starts from the same hyperparameters and checkpoint as PBT slot i
    under the same seed.
    """
    ready, total = resolve_schedule(config.ready_interval, config.total_steps, task)
    rounds = total // ready
    workers = config.workers or settings.workers
    clock = RunClock(config.clock)
    log = RunLog(run_id)

    logger.info(f"Starting random search {run_id}: n_trials={config.n_trials}, total={total}, workers={workers}")

    trial_ids = list(range(config.n_trials))
    samples = [sample_trial(task, config.seed, i) for i in trial_ids]
    with WorkerPool(workers) as pool:
        results = pool.map(
            lambda i: train_trial(task, samples[i][1], samples[i][0], ready, rounds, config.seed, i),
            trial_ids,
        )

    times = wave_times(config.n_trials, workers, rounds, ready * task.seconds_per_step)
    log_trials(log, clock, trial_ids, [s[0] for s in samples], results, times, task)

    logger.info(f"Random search {run_id} finished: {len(log.evaluations())} evaluations, t={log.final_time}")
    return log
