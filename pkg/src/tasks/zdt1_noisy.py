"""ZDT1 benchmark with training-dependent evaluation noise."""

import numpy as np

from src.models.internal_models import Domain, SearchSpace
from src.tasks.base import TrainableTask


def zdt1(x: np.ndarray) -> np.ndarray:
    """ZDT1 objectives (minimization) for decision variables in [0, 1]."""
    n = len(x)
    f1 = x[0]
    g = 1.0 + 9.0 * np.sum(x[1:]) / (n - 1) if n > 1 else 1.0
    f2 = g * (1.0 - np.sqrt(f1 / g))
    return np.array([f1, f2])


class Zdt1NoisyTask(TrainableTask):
    """
    ZDT1 negated to maximization, evaluated at the decoded hyperparameters.

    "Training" for s steps only shrinks the evaluation noise, whose standard
    deviation is noise_std / sqrt(1 + s); low-fidelity evaluations are therefore
    noisier, which is what successive halving has to cope with.
    """

    name = "zdt1-noisy"
    task_code = 4

    def __init__(
        self,
        n_vars: int = 5,
        n_values: int = 11,
        noise_std: float = 0.1,
        steps_per_epoch: int = 1,
        seconds_per_step: float = 0.01,
    ):
        if n_vars < 2:
            raise ValueError(f"ZDT1 needs at least 2 variables, got {n_vars}")
        self.n_vars = n_vars
        self.noise_std = noise_std
        domains = tuple(Domain.linear(f"x{i + 1}", 0.0, 1.0, n_values) for i in range(n_vars))
        super().__init__(
            objective_names=["-f1", "-f2"],
            search_space=SearchSpace(domains),
            steps_per_epoch=steps_per_epoch,
            seconds_per_step=seconds_per_step,
        )

    def noise_at(self, step: int) -> float:
        return self.noise_std / np.sqrt(1.0 + step)

    def _initial_values(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, self.n_vars)

    def _advance(self, values, hp_values, n_steps, step, rng):
        return hp_values.copy()

    def _objectives(self, values, step, rng):
        objectives = 0.0 - zdt1(values)
        sigma = self.noise_at(step)
        if sigma > 0:
            objectives = objectives + sigma * rng.standard_normal(2)
        return objectives
