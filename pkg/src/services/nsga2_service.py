"""Generational NSGA-II over the ordinal search space, every individual fully trained."""

import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from src.clients.run_log import RunLog
from src.config import settings
from src.models.config_models import Nsga2Config
from src.models.internal_models import HyperparamVector, SearchSpace, Solution
from src.services.pbt_service import explore, sort_population
from src.services.random_search_service import log_trials, resolve_schedule
from src.services.trial_service import TrialResult, sample_trial, train_trial
from src.services.worker_pool import RunClock, StreamPurpose, WorkerPool, rng_stream, wave_times
from src.tasks.base import TrainableTask

logger = logging.getLogger(__name__)


@dataclass
class Individual:
    id: int
    hyperparams: HyperparamVector
    result: TrialResult

    def as_solution(self) -> Solution:
        final = self.result.evaluations[-1]
        return Solution(
            id=self.id,
            hyperparams=self.hyperparams,
            checkpoint="",
            objectives=final.objectives,
            constraint=final.constraint,
            step=final.step,
        )


def binary_tournament(positions: np.ndarray, rng: np.random.Generator) -> int:
    """Pick two distinct members at random; the better ranked one wins."""
    a, b = rng.choice(len(positions), size=2, replace=False)
    return int(a if positions[a] < positions[b] else b)


def uniform_crossover(
    first: HyperparamVector,
    second: HyperparamVector,
    probability: float,
    rng: np.random.Generator,
) -> HyperparamVector:
    """With the given probability take every coordinate from either parent, else copy the first."""
    if rng.random() >= probability:
        return tuple(first)
    mask = rng.random(len(first)) < 0.5
    return tuple(int(a) if take else int(b) for a, b, take in zip(first, second, mask))


def make_offspring(
    parents: List[Individual],
    positions: np.ndarray,
    config: Nsga2Config,
    space: SearchSpace,
    rng: np.random.Generator,
) -> List[HyperparamVector]:
    """Tournament selection, uniform crossover and explore mutation for one generation."""
    offspring = []
    for _ in range(config.population_size):
        first = parents[binary_tournament(positions, rng)]
        second = parents[binary_tournament(positions, rng)]
        child = uniform_crossover(first.hyperparams, second.hyperparams, config.crossover_probability, rng)
        offspring.append(explore(child, space, config.resample_probability, rng))
    return offspring


def survivors(pool: List[Individual], config: Nsga2Config, rng: np.random.Generator) -> List[Individual]:
    """(mu + lambda) survival: the first mu members of the ranked union."""
    order = sort_population([ind.as_solution() for ind in pool], config.ranking, rng)
    return [pool[i] for i in order[:config.population_size]]


def _positions(population: List[Individual], config: Nsga2Config, rng: np.random.Generator) -> np.ndarray:
    order = sort_population([ind.as_solution() for ind in population], config.ranking, rng)
    positions = np.empty(len(order), dtype=int)
    positions[order] = np.arange(len(order))
    return positions


def nsga2(task: TrainableTask, config: Nsga2Config, run_id: str = "nsga2") -> RunLog:
    """
    Run NSGA-II, training every individual to total_steps.

    The budget counts fully trained networks: population_size initial
    individuals plus population_size offspring per generation.
    """
    ready, total = resolve_schedule(config.ready_interval, config.total_steps, task)
    rounds = total // ready
    workers = config.workers or settings.workers
    mu = config.population_size
    generations = config.n_generations
    clock = RunClock(config.clock)
    log = RunLog(run_id)
    generation_seconds = math.ceil(mu / workers) * total * task.seconds_per_step

    logger.info(
        f"Starting NSGA-II {run_id}: population={mu}, generations={generations}, "
        f"trained networks={mu * (generations + 1)}, workers={workers}"
    )

    def train_batch(ids: List[int], hyperparams: List[HyperparamVector], generation: int) -> List[Individual]:
        checkpoints = [sample_trial(task, config.seed, i)[1] for i in ids]
        results = pool.map(
            lambda j: train_trial(task, checkpoints[j], hyperparams[j], ready, rounds, config.seed, ids[j]),
            range(len(ids)),
        )
        times = wave_times(len(ids), workers, rounds, ready * task.seconds_per_step,
                           offset=generation * generation_seconds)
        log_trials(log, clock, ids, hyperparams, results, times, task)
        return [Individual(i, hp, result) for i, hp, result in zip(ids, hyperparams, results)]

    with WorkerPool(workers) as pool:
        initial_ids = list(range(mu))
        population = train_batch(initial_ids, [sample_trial(task, config.seed, i)[0] for i in initial_ids], 0)

        for generation in range(1, generations + 1):
            rng = rng_stream(config.seed, StreamPurpose.VARIATION, generation)
            positions = _positions(population, config, rng_stream(config.seed, StreamPurpose.RANK, generation, 0))
            children = make_offspring(population, positions, config, task.search_space, rng)

            child_ids = list(range(generation * mu, (generation + 1) * mu))
            offspring = train_batch(child_ids, children, generation)
            population = survivors(population + offspring, config,
                                   rng_stream(config.seed, StreamPurpose.RANK, generation, 1))
            logger.debug(f"Generation {generation}/{generations}: survivors {[ind.id for ind in population]}")

    log.log(clock.stamp(log.final_time), total, "survivors", -1, ids=[ind.id for ind in population])
    logger.info(f"NSGA-II {run_id} finished: {len(log.evaluations())} evaluations, t={log.final_time}")
    return log
