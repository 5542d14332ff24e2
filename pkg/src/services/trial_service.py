"""Training and evaluation helpers shared by PBT and the baselines."""

import logging
import math
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.models.internal_models import (
    ConstraintStatus,
    HyperparamVector,
    ObjectiveVector,
)
from src.tasks.base import TrainableTask
from src.services.worker_pool import StreamPurpose, rng_stream

logger = logging.getLogger(__name__)

# Violation assigned to solutions whose evaluation produced NaN or inf.
NONFINITE_VIOLATION = sys.float_info.max


@dataclass(frozen=True)
class Evaluation:
    """Result of evaluating one checkpoint."""

    objectives: ObjectiveVector
    constraint: ConstraintStatus
    step: int
    nonfinite: bool = False
    raw: Optional[ObjectiveVector] = None  # task output when it was not finite


def evaluate_checkpoint(
    task: TrainableTask,
    checkpoint: bytes,
    rng: np.random.Generator,
    penalty: float = -1e6,
) -> Evaluation:
    """
    Evaluate a checkpoint, substituting the penalty vector for non-finite output.

    Non-finite evaluations are marked infeasible with the largest representable
    violation, so both plain and constraint domination rank them last.
    """
    step = task.step_of(checkpoint)
    objectives = task.evaluate(checkpoint, rng)
    if all(math.isfinite(v) for v in objectives):
        return Evaluation(objectives, task.constraint_status(objectives), step)

    logger.error(f"Task {task.name} returned non-finite objectives {objectives} at step {step}")
    return Evaluation(
        objectives=tuple(float(penalty) for _ in objectives),
        constraint=ConstraintStatus(feasible=False, violation=NONFINITE_VIOLATION),
        step=step,
        nonfinite=True,
        raw=objectives,
    )


@dataclass(frozen=True)
class TrialResult:
    """Final checkpoint and the per-ready-point evaluations of one trial."""

    checkpoint: bytes
    evaluations: List[Evaluation]


def train_trial(
    task: TrainableTask,
    checkpoint: bytes,
    hyperparams: HyperparamVector,
    ready_interval: int,
    rounds: int,
    seed: int,
    trial_id: int,
    penalty: float = -1e6,
) -> TrialResult:
    """
    Train a trial for `rounds` ready intervals with fixed hyperparameters,
    evaluating at every ready point.
    """
    evaluations: List[Evaluation] = []
    for r in range(rounds):
        checkpoint = task.train(
            checkpoint, hyperparams, ready_interval, rng_stream(seed, StreamPurpose.TRAIN, trial_id, r)
        )
        evaluations.append(
            evaluate_checkpoint(
                task, checkpoint, rng_stream(seed, StreamPurpose.EVALUATE, trial_id, r), penalty
            )
        )
    return TrialResult(checkpoint=checkpoint, evaluations=evaluations)


def sample_trial(task: TrainableTask, seed: int, trial_id: int):
    """Uniform hyperparameters and a fresh checkpoint for trial `trial_id`."""
    rng = rng_stream(seed, StreamPurpose.INIT, trial_id)
    hyperparams = task.search_space.sample(rng)
    return hyperparams, task.init(rng)
