"""Trainable tasks and the name registry used by experiment configs."""

from typing import Any, Callable, Dict, Mapping, Optional

from src.tasks.base import (
    CheckpointFormatError,
    CheckpointState,
    TaskError,
    TrainableTask,
    decode_checkpoint,
    encode_checkpoint,
)
from src.tasks.toy_quadratic import (
    ConstrainedToyQuadraticTask,
    ThreeObjectiveToyQuadraticTask,
    ToyQuadraticTask,
)
from src.tasks.zdt1_noisy import Zdt1NoisyTask


class UnknownTaskError(TaskError):
    """Raised when a task name is not registered."""
    pass


TASKS: Dict[str, Callable[..., TrainableTask]] = {
    ToyQuadraticTask.name: ToyQuadraticTask,
    ThreeObjectiveToyQuadraticTask.name: ThreeObjectiveToyQuadraticTask,
    ConstrainedToyQuadraticTask.name: ConstrainedToyQuadraticTask,
    Zdt1NoisyTask.name: Zdt1NoisyTask,
}


def get_task(name: str, params: Optional[Mapping[str, Any]] = None) -> TrainableTask:
    """
    Build a registered task with task-specific parameters.

    Raises:
        UnknownTaskError: If no task is registered under `name`.
        TaskError: If the parameters are rejected by the task.
    """
    try:
        factory = TASKS[name]
    except KeyError:
        raise UnknownTaskError(f"Unknown task '{name}', expected one of {sorted(TASKS)}")
    try:
        return factory(**dict(params or {}))
    except (TypeError, ValueError) as e:
        raise TaskError(f"Invalid parameters for task '{name}': {e}")


__all__ = [
    "CheckpointFormatError",
    "CheckpointState",
    "ConstrainedToyQuadraticTask",
    "TASKS",
    "TaskError",
    "ThreeObjectiveToyQuadraticTask",
    "ToyQuadraticTask",
    "TrainableTask",
    "UnknownTaskError",
    "Zdt1NoisyTask",
    "decode_checkpoint",
    "encode_checkpoint",
    "get_task",
]
