"""
Trainable task contract and the checkpoint codec shared by the built-in tasks.

A task owns an opaque checkpoint format. Engines only ever hold checkpoint
bytes and pass them back to `train` / `evaluate`.
"""

import logging
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from src.models.internal_models import (
    FEASIBLE,
    ConstraintStatus,
    HyperparamVector,
    ObjectiveVector,
    SearchSpace,
    as_objective_vector,
)

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# version, task code, step counter, number of float values
_HEADER = struct.Struct("<BBQI")
# PCG64 state: state (128 bit), inc (128 bit), has_uint32, uinteger
_RNG = struct.Struct("<16s16sBI")


class TaskError(Exception):
    """Base exception for trainable task errors."""
    pass


class CheckpointFormatError(TaskError):
    """Raised when checkpoint bytes cannot be decoded by a task."""
    pass


@dataclass
class CheckpointState:
    """Decoded checkpoint: training step, task floats and the task's rng state."""

    step: int
    values: np.ndarray
    rng_state: Dict[str, Any]


def encode_checkpoint(task_code: int, state: CheckpointState) -> bytes:
    """
    Serialize a checkpoint as little-endian bytes, version byte first.

    Layout: header (version, task code, step, n) | n float64 | PCG64 state.
    """
    values = np.ascontiguousarray(state.values, dtype="<f8")
    inner = state.rng_state["state"]
    header = _HEADER.pack(CHECKPOINT_VERSION, task_code, state.step, values.size)
    rng = _RNG.pack(
        int(inner["state"]).to_bytes(16, "little"),
        int(inner["inc"]).to_bytes(16, "little"),
        int(state.rng_state.get("has_uint32", 0)),
        int(state.rng_state.get("uinteger", 0)),
    )
    return header + values.tobytes() + rng


def decode_checkpoint(task_code: int, data: bytes) -> CheckpointState:
    """
    Parse checkpoint bytes produced by encode_checkpoint.

    Raises:
        CheckpointFormatError: On truncated data, wrong version or foreign task.
    """
    if len(data) < _HEADER.size + _RNG.size:
        raise CheckpointFormatError(f"Checkpoint too short: {len(data)} bytes")

    version, code, step, n = _HEADER.unpack_from(data, 0)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"Unsupported checkpoint version {version}")
    if code != task_code:
        raise CheckpointFormatError(f"Checkpoint belongs to task code {code}, expected {task_code}")

    expected = _HEADER.size + 8 * n + _RNG.size
    if len(data) != expected:
        raise CheckpointFormatError(f"Checkpoint length {len(data)} does not match expected {expected}")

    values = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size).astype(np.float64)
    state_bytes, inc_bytes, has_uint32, uinteger = _RNG.unpack_from(data, _HEADER.size + 8 * n)
    rng_state = {
        "bit_generator": "PCG64",
        "state": {
            "state": int.from_bytes(state_bytes, "little"),
            "inc": int.from_bytes(inc_bytes, "little"),
        },
        "has_uint32": has_uint32,
        "uinteger": uinteger,
    }
    return CheckpointState(step=step, values=values, rng_state=rng_state)


def generator_from_state(rng_state: Dict[str, Any]) -> np.random.Generator:
    bit_generator = np.random.PCG64()
    bit_generator.state = rng_state
    return np.random.Generator(bit_generator)


def fresh_rng_state(rng: np.random.Generator) -> Dict[str, Any]:
    """Derive the internal stream of a new checkpoint from the caller's rng."""
    return np.random.PCG64(int(rng.integers(2**63))).state


class TrainableTask(ABC):
    """
    Pluggable training workload with K maximized objectives.

    Subclasses describe the search space and implement the state dynamics
    (`_advance`) and the objective read-out (`_objectives`). Training without
    an explicit rng consumes the checkpoint's own stream, so that
    train(c, h, a + b) equals train(train(c, h, a), h, b).
    """

    name: str = "task"
    task_code: int = 0

    def __init__(
        self,
        objective_names: Sequence[str],
        search_space: SearchSpace,
        steps_per_epoch: int = 1,
        seconds_per_step: float = 0.01,
        constraint_threshold: Optional[float] = None,
    ):
        if steps_per_epoch < 1:
            raise TaskError(f"steps_per_epoch must be >= 1, got {steps_per_epoch}")
        self.objective_names: Tuple[str, ...] = tuple(objective_names)
        self.search_space = search_space
        self.steps_per_epoch = steps_per_epoch
        self.seconds_per_step = seconds_per_step
        self.constraint_threshold = constraint_threshold

    @property
    def n_objectives(self) -> int:
        return len(self.objective_names)

    @property
    def has_constraint(self) -> bool:
        return self.constraint_threshold is not None

    def init(self, rng: np.random.Generator) -> bytes:
        """Fresh trainable state, deterministic given the rng."""
        values = self._initial_values(rng)
        state = CheckpointState(step=0, values=values, rng_state=fresh_rng_state(rng))
        return encode_checkpoint(self.task_code, state)

    def train(
        self,
        checkpoint: bytes,
        hyperparams: HyperparamVector,
        n_steps: int,
        rng: Optional[np.random.Generator] = None,
    ) -> bytes:
        """Advance the state n_steps under hyperparameters h."""
        if n_steps < 0:
            raise TaskError(f"n_steps must be >= 0, got {n_steps}")
        if n_steps == 0:
            return checkpoint

        state = decode_checkpoint(self.task_code, checkpoint)
        hp_values = np.asarray(self.search_space.decode(hyperparams), dtype=np.float64)
        internal = rng is None
        stream = generator_from_state(state.rng_state) if internal else rng

        values = self._advance(state.values, hp_values, n_steps, state.step, stream)
        new_state = CheckpointState(
            step=state.step + n_steps,
            values=values,
            rng_state=stream.bit_generator.state if internal else state.rng_state,
        )
        return encode_checkpoint(self.task_code, new_state)

    def evaluate(self, checkpoint: bytes, rng: Optional[np.random.Generator] = None) -> ObjectiveVector:
        """Objective vector of a checkpoint; a pure function of (checkpoint, rng)."""
        state = decode_checkpoint(self.task_code, checkpoint)
        stream = rng if rng is not None else generator_from_state(state.rng_state)
        return as_objective_vector(self._objectives(state.values, state.step, stream))

    def constraint_status(self, objectives: Sequence[float]) -> ConstraintStatus:
        """Feasibility f1 >= threshold, violation = max(0, threshold - f1)."""
        if self.constraint_threshold is None:
            return FEASIBLE
        return ConstraintStatus.from_violation(self.constraint_threshold - objectives[0])

    def step_of(self, checkpoint: bytes) -> int:
        return decode_checkpoint(self.task_code, checkpoint).step

    @abstractmethod
    def _initial_values(self, rng: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def _advance(
        self,
        values: np.ndarray,
        hp_values: np.ndarray,
        n_steps: int,
        step: int,
        rng: np.random.Generator,
    ) -> np.ndarray:
        ...

    @abstractmethod
    def _objectives(self, values: np.ndarray, step: int, rng: np.random.Generator) -> np.ndarray:
        ...
