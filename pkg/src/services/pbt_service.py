"""
Multi-objective population based training.

A population of N solutions trains in parallel. At every ready point the
population is ranked (non-dominated sorting with greedy scattered subset or
crowding distance order, a scalarization, or a single objective), and the
bottom tau% copy checkpoint and hyperparameters of a random top-tau% member
before perturbing the hyperparameters.
"""

import logging
import math
from collections import deque
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.clients.checkpoint_store import CheckpointStore
from src.clients.run_log import RunLog
from src.config import settings
from src.models.config_models import EngineConfig, RankingConfig
from src.models.internal_models import HyperparamVector, SearchSpace, Solution
from src.services.population_store import PopulationStore
from src.services.trial_service import evaluate_checkpoint, sample_trial
from src.services.worker_pool import (
    EventScheduler,
    RunClock,
    StreamPurpose,
    WorkerPool,
    rng_stream,
)
from src.tasks.base import TrainableTask
from src.utils.dominance import (
    crowding_distance_order,
    greedy_scattered_subset_order,
    non_dominated_sort,
)
from src.utils.scalarization import max_scalarization, sample_unit_weight, sample_weight_set, scalarize

logger = logging.getLogger(__name__)

MAX_LOCAL_SHIFT = 3


class EngineError(Exception):
    """Base exception for PBT engine errors."""
    pass


class MissingObjectivesError(EngineError):
    """Raised when ranking a population before every member was evaluated."""
    pass


class ConfigurationError(EngineError):
    """Raised when an engine config does not fit the task it is run on."""
    pass


def sort_population(
    population: Sequence[Solution],
    ranking: RankingConfig,
    rng: np.random.Generator,
    constraints: bool = False,
    weights: Optional[np.ndarray] = None,
) -> List[int]:
    """
    Order a population from best to worst.

    Args:
        population: Members to rank; all must carry objectives
        ranking: Ranking criterion
        rng: Stream for the random weight of random scalarization
        constraints: Rank by constraint domination / feasibility first
        weights: Fixed weight set W for max-scalarization

    Returns:
        Permutation of indices into `population`, best first

    Raises:
        MissingObjectivesError: If a member has not been evaluated yet
        EngineError: If max-scalarization is requested without a weight set
    """
    missing = [s.id for s in population if s.objectives is None]
    if missing:
        raise MissingObjectivesError(f"Cannot rank population, solutions {missing} have no objectives")

    objectives = [s.objectives for s in population]
    statuses = [s.constraint for s in population] if constraints else None

    if ranking.kind == "nds_greedy":
        fronts = non_dominated_sort(objectives, statuses)
        return greedy_scattered_subset_order(fronts, objectives, normalize=ranking.normalize)
    if ranking.kind == "nds_crowding":
        fronts = non_dominated_sort(objectives, statuses)
        return crowding_distance_order(fronts, objectives)

    if ranking.kind == "single_objective":
        values = [f[ranking.objective_index] for f in objectives]
    elif ranking.weight_mode == "random":
        w = sample_unit_weight(rng, len(objectives[0]))
        values = [scalarize(f, w, ranking.scalarizer, ranking.parego_rho) for f in objectives]
    else:
        if weights is None:
            raise EngineError("Max-scalarization needs a fixed weight set")
        values = [max_scalarization(f, weights, ranking.scalarizer, ranking.parego_rho) for f in objectives]

    if constraints:
        keys = [
            (not s.constraint.feasible, s.constraint.violation, -v, i)
            for i, (s, v) in enumerate(zip(population, values))
        ]
    else:
        keys = [(-v, i) for i, v in enumerate(values)]
    return [key[-1] for key in sorted(keys)]


def replacement_count(population_size: int, truncation: float) -> int:
    """floor(tau * N / 100): how many members one exploit round replaces."""
    return math.floor(truncation * population_size / 100.0)


def shift_index(index: int, shift: int, size: int) -> int:
    """Move an ordinal index by `shift`, clamped to [0, size - 1]."""
    return min(max(index + shift, 0), size - 1)


def explore(
    hyperparams: HyperparamVector,
    space: SearchSpace,
    resample_probability: float,
    rng: np.random.Generator,
) -> HyperparamVector:
    """
    Local perturbation of ordinal hyperparameters.

    Each coordinate is resampled uniformly with probability p; otherwise it is
    shifted by s ~ U{0..3}, negated with probability 1/2, and clamped.
    """
    result = []
    for h, size in zip(hyperparams, space.sizes):
        if rng.random() < resample_probability:
            result.append(int(rng.integers(size)))
            continue
        shift = int(rng.integers(0, MAX_LOCAL_SHIFT + 1))
        if rng.random() < 0.5:
            shift = -shift
        result.append(shift_index(int(h), shift, size))
    return tuple(result)


def explore_random(
    hyperparams: HyperparamVector,
    space: SearchSpace,
    rng: np.random.Generator,
) -> HyperparamVector:
    """Resample every coordinate uniformly with probability 1/P, else keep it."""
    probability = 1.0 / len(space)
    return tuple(
        int(rng.integers(size)) if rng.random() < probability else int(h)
        for h, size in zip(hyperparams, space.sizes)
    )


def exploit(
    population: List[Solution],
    truncation: float,
    order: Sequence[int],
    rng: np.random.Generator,
    checkpoints: CheckpointStore,
    space: SearchSpace,
    resample_probability: float = 0.2,
    mutation: str = "local",
    only: Optional[Sequence[int]] = None,
) -> List[Tuple[int, int]]:
    """
    Replace the bottom tau% of a ranked population with perturbed copies of top members.

    Each loser takes the checkpoint bytes, objectives snapshot and step counter
    of a donor drawn uniformly (with replacement) from the top tau%, and the
    donor's hyperparameters passed through explore. Members of `population` are
    modified in place.

    Args:
        population: Ranked members
        truncation: tau in percent
        order: Output of sort_population for `population`
        rng: Stream for donor choice and explore
        checkpoints: Store holding every member's checkpoint
        space: Search space of the hyperparameters
        resample_probability: p of the local explore
        mutation: "local" explore or "random" (resample with probability 1/P)
        only: Restrict replacement to these solution ids (asynchronous ready points)

    Returns:
        (loser id, donor id) pairs in replacement order
    """
    n = len(population)
    k = replacement_count(n, truncation)
    if k == 0:
        logger.warning(f"Truncation {truncation}% of {n} members replaces nobody")
        return []

    top = list(order[:k])
    bottom = list(order[n - k:])
    if only is not None:
        allowed = set(only)
        bottom = [i for i in bottom if population[i].id in allowed]

    pairs: List[Tuple[int, int]] = []
    for loser_index in bottom:
        donor = population[top[int(rng.integers(k))]]
        loser = population[loser_index]

        checkpoints.copy(donor.checkpoint, loser.checkpoint)
        if mutation == "random":
            loser.hyperparams = explore_random(donor.hyperparams, space, rng)
        else:
            loser.hyperparams = explore(donor.hyperparams, space, resample_probability, rng)
        loser.objectives = donor.objectives
        loser.constraint = donor.constraint
        loser.step = donor.step
        loser.generation += 1
        pairs.append((loser.id, donor.id))

    return pairs


class PBTEngine:
    """Runs one PBT experiment on a task and records it in a RunLog."""

    def __init__(
        self,
        config: EngineConfig,
        task: TrainableTask,
        run_id: str = "pbt",
        checkpoints: Optional[CheckpointStore] = None,
    ):
        """
        Initialize the engine.

        Raises:
            ConfigurationError: If the ranking or the step schedule does not fit the task
        """
        self.config = config
        self.task = task
        try:
            config.ranking.validate_for(task.n_objectives)
            self.ready_interval, self.total_steps = config.schedule(task.steps_per_epoch)
        except ValueError as e:
            raise ConfigurationError(str(e))

        self.workers = config.workers or settings.workers
        self.checkpoints = checkpoints if checkpoints is not None else CheckpointStore()
        self.population = PopulationStore()
        self.log = RunLog(run_id)
        self.clock = RunClock(config.clock)
        self.weights: Optional[np.ndarray] = None
        if config.ranking.kind == "scalarized" and config.ranking.weight_mode == "max":
            self.weights = sample_weight_set(
                rng_stream(config.seed, StreamPurpose.WEIGHTS), task.n_objectives, config.ranking.n_weights
            )

    def run(self) -> RunLog:
        """
        Train the population to total_steps per lineage.

        Returns:
            RunLog with every evaluation and every replacement pair
        """
        config = self.config
        logger.info(
            f"Starting PBT run {self.log.run_id}: N={config.population_size}, tau={config.truncation}, "
            f"ranking={config.ranking.label()}, mode={config.mode}, ready={self.ready_interval}, "
            f"total={self.total_steps}, workers={self.workers}"
        )
        self._initialize()
        with WorkerPool(self.workers) as pool:
            if config.mode == "synchronous":
                self._run_synchronous(pool)
            else:
                self._run_asynchronous(pool)

        self.checkpoints.flush()
        logger.info(
            f"PBT run {self.log.run_id} finished: {len(self.log.evaluations())} evaluations, "
            f"{len(self.log.of_kind('exploit'))} replacements, t={self.log.final_time}"
        )
        return self.log

    def _initialize(self) -> None:
        for slot in range(self.config.population_size):
            hyperparams, checkpoint = sample_trial(self.task, self.config.seed, slot)
            key = str(slot)
            self.checkpoints.put(key, checkpoint)
            self.population.add(Solution(id=slot, hyperparams=hyperparams, checkpoint=key))

    def _train_job(self, member: Solution, job_index: int) -> bytes:
        checkpoint = self.checkpoints.get(member.checkpoint)
        rng = rng_stream(self.config.seed, StreamPurpose.TRAIN, member.id, job_index)
        return self.task.train(checkpoint, member.hyperparams, self.ready_interval, rng)

    def _record_evaluation(self, member: Solution, checkpoint: bytes, t: float, job_index: int) -> None:
        self.checkpoints.put(member.checkpoint, checkpoint)
        rng = rng_stream(self.config.seed, StreamPurpose.EVALUATE, member.id, job_index)
        evaluation = evaluate_checkpoint(self.task, checkpoint, rng, self.config.nonfinite_penalty)
        self.population.update(
            member.id,
            objectives=evaluation.objectives,
            constraint=evaluation.constraint,
            step=evaluation.step,
        )

        if evaluation.nonfinite:
            self.log.log(
                t, evaluation.step, "error", member.id,
                hp=list(member.hyperparams),
                viol=evaluation.constraint.violation,
                message=f"non-finite objectives {list(evaluation.raw)}",
            )
            return

        self.log.log(
            t, evaluation.step, "eval", member.id,
            f=list(evaluation.objectives),
            hp=list(member.hyperparams),
            viol=evaluation.constraint.violation if self.task.has_constraint else None,
        )

    def _exploit(self, members: List[Solution], rank_rng, exploit_rng, t: float,
                 only: Optional[Sequence[int]] = None) -> List[Tuple[int, int]]:
        if replacement_count(len(members), self.config.truncation) == 0:
            self.log.log(t, 0, "warning", -1, message="truncation replaces no solution")
            return []

        order = sort_population(
            members, self.config.ranking, rank_rng,
            constraints=self.config.constraints, weights=self.weights,
        )
        pairs = exploit(
            members, self.config.truncation, order, exploit_rng, self.checkpoints,
            self.task.search_space, self.config.resample_probability, self.config.mutation, only=only,
        )

        by_id: Dict[int, Solution] = {m.id: m for m in members}
        for loser_id, donor_id in pairs:
            loser = by_id[loser_id]
            self.population.put(loser)
            self.log.log(
                t, loser.step, "exploit", loser_id,
                donor=donor_id,
                hp=list(loser.hyperparams),
                f=list(by_id[donor_id].objectives),
            )
        return pairs

    def _run_synchronous(self, pool: WorkerPool) -> None:
        seed = self.config.seed
        rounds = self.total_steps // self.ready_interval
        round_seconds = pool.round_seconds(
            self.config.population_size, self.ready_interval * self.task.seconds_per_step
        )

        simulated = 0.0
        for r in range(rounds):
            members = self.population.snapshot()
            trained = pool.map(lambda member: self._train_job(member, r), members)

            # barrier: every member reached its ready point
            simulated += round_seconds
            t = self.clock.stamp(simulated)
            for member, checkpoint in zip(members, trained):
                self._record_evaluation(member, checkpoint, t, r)

            if r < rounds - 1:
                pairs = self._exploit(
                    self.population.snapshot(),
                    rng_stream(seed, StreamPurpose.RANK, r),
                    rng_stream(seed, StreamPurpose.EXPLOIT, r),
                    t,
                )
                logger.debug(f"Round {r + 1}/{rounds} at t={t}: {len(pairs)} replacements")

    def _run_asynchronous(self, pool: WorkerPool) -> None:
        seed = self.config.seed
        scheduler = EventScheduler(self.workers)
        job_seconds = self.ready_interval * self.task.seconds_per_step
        jobs_done = {slot: 0 for slot in range(self.config.population_size)}
        waiting = deque(range(self.config.population_size))

        while waiting or scheduler:
            while waiting and scheduler.has_free_worker:
                slot = waiting.popleft()
                future = pool.submit(self._train_job, self.population.get(slot), jobs_done[slot])
                scheduler.start((slot, jobs_done[slot]), job_seconds, future)

            simulated, (slot, job_index), checkpoint = scheduler.pop()
            t = self.clock.stamp(simulated)
            self._record_evaluation(self.population.get(slot), checkpoint, t, job_index)
            jobs_done[slot] += 1

            if self.population.get(slot).step >= self.total_steps:
                continue

            # rank against the latest snapshot of every member, once all have one
            members = self.population.snapshot()
            if any(m.objectives is None for m in members):
                waiting.append(slot)
                continue
            self._exploit(
                members,
                rng_stream(seed, StreamPurpose.RANK, slot, job_index),
                rng_stream(seed, StreamPurpose.EXPLOIT, slot, job_index),
                t,
                only=[slot],
            )
            if self.population.get(slot).step < self.total_steps:
                waiting.append(slot)


def run_pbt(
    config: EngineConfig,
    task: TrainableTask,
    run_id: str = "pbt",
    checkpoints: Optional[CheckpointStore] = None,
) -> RunLog:
    """Run PBT once and return its RunLog."""
    return PBTEngine(config, task, run_id=run_id, checkpoints=checkpoints).run()
