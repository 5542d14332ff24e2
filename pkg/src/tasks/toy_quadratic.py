"""
Toy quadratic multi-objective task.

State theta lives in R^2. Objective k is offset - |theta - a_k|^2 for anchor a_k,
so anchors pull the state towards conflicting optima and the trade-off front is
the segment (or triangle) spanned by the anchors. Training runs noisy gradient
steps on sum_k h_k |theta - a_k|^2 with a step size taken from the last
hyperparameter; which anchors a lineage should weight changes as it converges,
which is where schedules found by PBT pay off.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.internal_models import Domain, SearchSpace
from src.tasks.base import TrainableTask, decode_checkpoint

DEFAULT_ANCHORS: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0))
THREE_OBJECTIVE_ANCHORS: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0), (1.0, 0.0))


class ToyQuadraticTask(TrainableTask):
    """Quadratic objectives around K anchor points, trained by noisy gradient descent."""

    name = "toy-quadratic-mo"
    task_code = 1

    def __init__(
        self,
        anchors: Sequence[Sequence[float]] = DEFAULT_ANCHORS,
        offset: float = 1.2,
        noise_std: float = 0.01,
        init_center: Sequence[float] = (2.0, -1.0),
        init_scale: float = 0.1,
        weight_values: int = 11,
        lr_low: float = 1e-3,
        lr_high: float = 1.0,
        lr_values: int = 10,
        theta_bound: float = 1e3,
        steps_per_epoch: int = 1,
        seconds_per_step: float = 0.01,
        constraint_threshold: Optional[float] = None,
    ):
        self.anchors = np.asarray(anchors, dtype=np.float64)
        if self.anchors.ndim != 2 or self.anchors.shape[0] < 1:
            raise ValueError(f"Anchors must be a nonempty (K, d) array, got shape {self.anchors.shape}")
        self.offset = offset
        self.noise_std = noise_std
        self.init_center = np.asarray(init_center, dtype=np.float64)
        self.init_scale = init_scale
        self.theta_bound = theta_bound

        k = self.anchors.shape[0]
        domains = [Domain.linear(f"w{i + 1}", 0.0, 1.0, weight_values) for i in range(k)]
        domains.append(Domain.log("lr", lr_low, lr_high, lr_values))
        super().__init__(
            objective_names=[f"f{i + 1}" for i in range(k)],
            search_space=SearchSpace(tuple(domains)),
            steps_per_epoch=steps_per_epoch,
            seconds_per_step=seconds_per_step,
            constraint_threshold=constraint_threshold,
        )

    def theta(self, checkpoint: bytes) -> np.ndarray:
        """Decoded parameter vector of a checkpoint."""
        return decode_checkpoint(self.task_code, checkpoint).values

    def _initial_values(self, rng: np.random.Generator) -> np.ndarray:
        return self.init_center + self.init_scale * rng.standard_normal(self.init_center.size)

    def _advance(self, values, hp_values, n_steps, step, rng):
        weights, lr = hp_values[:-1], hp_values[-1]
        theta = values.copy()
        for _ in range(n_steps):
            grad = 2.0 * np.sum(weights[:, None] * (theta[None, :] - self.anchors), axis=0)
            theta = theta - lr * grad
            if self.noise_std > 0:
                theta = theta + self.noise_std * rng.standard_normal(theta.size)
            # divergent step sizes saturate instead of overflowing
            theta = np.clip(theta, -self.theta_bound, self.theta_bound)
        return theta

    def _objectives(self, values, step, rng):
        return self.offset - np.sum((values[None, :] - self.anchors) ** 2, axis=1)


class ThreeObjectiveToyQuadraticTask(ToyQuadraticTask):
    """Toy quadratic task with a third anchor, for K=3 paths."""

    name = "toy-quadratic-mo3"
    task_code = 2

    def __init__(self, anchors: Sequence[Sequence[float]] = THREE_OBJECTIVE_ANCHORS, **kwargs):
        super().__init__(anchors=anchors, **kwargs)


class ConstrainedToyQuadraticTask(ToyQuadraticTask):
    """Toy quadratic task where solutions with f1 below a threshold are infeasible."""

    name = "toy-quadratic-constrained"
    task_code = 3

    def __init__(self, constraint_threshold: float = 0.5, **kwargs):
        super().__init__(constraint_threshold=constraint_threshold, **kwargs)
