"""
Tests for ranking, exploit and explore, and the PBT engine in both modes.
"""

import math
import sys
from unittest.mock import MagicMock

import numpy as np
import pytest

from src.clients.checkpoint_store import CheckpointStore
from src.models.config_models import EngineConfig, RankingConfig
from src.models.internal_models import ConstraintStatus, Domain, SearchSpace, Solution
from src.services.pbt_service import (
    ConfigurationError,
    EngineError,
    MissingObjectivesError,
    PBTEngine,
    explore,
    explore_random,
    exploit,
    replacement_count,
    run_pbt,
    shift_index,
    sort_population,
)
from src.tasks import ConstrainedToyQuadraticTask, ToyQuadraticTask
from src.utils.indicators import hypervolume, pareto_filter

SPACE = SearchSpace((Domain.linear("a", 0.0, 1.0, 10), Domain.linear("b", 0.0, 1.0, 10)))


def mocked_rng(randoms, integers):
    rng = MagicMock()
    rng.random.side_effect = list(randoms)
    rng.integers.side_effect = list(integers)
    return rng


def make_population(objectives, store=None, hyperparams=(5, 5)):
    population = []
    for i, f in enumerate(objectives):
        key = str(i)
        if store is not None:
            store.put(key, f"ckpt-{i}".encode())
        population.append(Solution(id=i, hyperparams=hyperparams, checkpoint=key, objectives=f, step=10 + i))
    return population


def small_config(**overrides):
    values = dict(population_size=8, truncation=25.0, ready_interval=2, total_steps=10, workers=2, seed=3)
    values.update(overrides)
    return EngineConfig(**values)


class NanEveryNthTask(ToyQuadraticTask):
    """Toy task whose every n-th evaluation call returns NaN for f1."""

    def __init__(self, period: int = 5, **kwargs):
        super().__init__(**kwargs)
        self.period = period
        self.calls = 0

    def evaluate(self, checkpoint, rng=None):
        self.calls += 1
        objectives = super().evaluate(checkpoint, rng)
        if self.calls % self.period == 0:
            return (math.nan,) + tuple(objectives[1:])
        return objectives


def assert_best_never_replaced(log, objective_index):
    """Replay a log and check that no exploit overwrites the member holding the best f_i."""
    current = {}
    n_exploits = 0
    for event in log.events:
        if event.event == "eval":
            current[event.sol] = event.f[objective_index]
        elif event.event == "error":
            current[event.sol] = -math.inf
        elif event.event == "exploit":
            best = max(current.values())
            assert current[event.sol] < best, f"exploit at t={event.t} replaced the best solution {event.sol}"
            current[event.sol] = event.f[objective_index]
            n_exploits += 1
    assert n_exploits > 0


class TestExplore:
    """Test cases for hyperparameter perturbation."""

    def test_shift_up(self):
        """Test index 5 shifted by +2 becomes 7."""
        rng = mocked_rng(randoms=[0.9, 0.9], integers=[2])
        assert explore((5,), SearchSpace((SPACE.domains[0],)), 0.2, rng) == (7,)

    def test_shift_down_is_clamped(self):
        """Test index 0 shifted by -3 stays at 0."""
        rng = mocked_rng(randoms=[0.9, 0.1], integers=[3])
        assert explore((0,), SearchSpace((SPACE.domains[0],)), 0.2, rng) == (0,)

    def test_resample_branch(self):
        """Test that a draw below p resamples the coordinate."""
        rng = mocked_rng(randoms=[0.1], integers=[8])
        assert explore((1,), SearchSpace((SPACE.domains[0],)), 0.2, rng) == (8,)

    def test_always_resample_stays_in_range(self):
        """Test p = 1 on many draws."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            result = explore((9, 0), SPACE, 1.0, rng)
            assert SPACE.contains(result)

    def test_local_moves_are_bounded(self):
        """Test that p = 0 moves each coordinate by at most 3."""
        rng = np.random.default_rng(1)
        for _ in range(200):
            result = explore((5, 5), SPACE, 0.0, rng)
            assert all(abs(r - 5) <= 3 for r in result)

    def test_explore_random_keeps_or_resamples(self):
        """Test the random mutation stays inside the space."""
        rng = np.random.default_rng(2)
        results = [explore_random((4, 4), SPACE, rng) for _ in range(200)]
        assert all(SPACE.contains(r) for r in results)
        assert any(r == (4, 4) for r in results)
        assert any(r != (4, 4) for r in results)

    def test_shift_index(self):
        """Test clamping at both ends."""
        assert shift_index(8, 3, 10) == 9
        assert shift_index(1, -3, 10) == 0
        assert shift_index(4, 0, 10) == 4


class TestSortPopulation:
    """Test cases for population ranking."""

    def test_single_objective_order(self):
        """Test ranking by f1 alone."""
        population = make_population([(0.2, 0.0), (0.9, 0.0), (0.5, 0.0)])
        ranking = RankingConfig(kind="single_objective")
        assert sort_population(population, ranking, np.random.default_rng(0)) == [1, 2, 0]

    def test_non_dominated_first(self):
        """Test that dominated members are ranked last."""
        population = make_population([(0.1, 0.1), (1.0, 0.0), (0.0, 1.0)])
        order = sort_population(population, RankingConfig(), np.random.default_rng(0))
        assert order[0] == 1
        assert order[-1] == 0
        crowding = sort_population(population, RankingConfig(kind="nds_crowding"), np.random.default_rng(0))
        assert crowding[-1] == 0

    def test_missing_objectives(self):
        """Test that unevaluated members cannot be ranked."""
        population = make_population([(0.1, 0.1), (1.0, 0.0)])
        population[1].objectives = None
        with pytest.raises(MissingObjectivesError, match=r"\[1\]"):
            sort_population(population, RankingConfig(), np.random.default_rng(0))

    def test_max_scalarization_needs_weights(self):
        """Test that max mode without a weight set raises."""
        population = make_population([(0.1, 0.1), (1.0, 0.0)])
        ranking = RankingConfig(kind="scalarized", weight_mode="max")
        with pytest.raises(EngineError):
            sort_population(population, ranking, np.random.default_rng(0))

    def test_random_scalarization_is_permutation(self):
        """Test that every scalarizer yields a permutation."""
        population = make_population([(0.1, 0.9), (0.5, 0.5), (0.9, 0.1), (0.0, 0.0)])
        for name in ("weighted_sum", "chebyshev", "parego", "golovin"):
            ranking = RankingConfig(kind="scalarized", scalarizer=name)
            order = sort_population(population, ranking, np.random.default_rng(4))
            assert sorted(order) == [0, 1, 2, 3]
            assert order[-1] == 3

    def test_feasible_members_first(self):
        """Test that constraints put feasible members ahead of better infeasible ones."""
        population = make_population([(0.9, 0.0), (0.2, 0.0), (0.5, 0.0)])
        population[0].constraint = ConstraintStatus.from_violation(0.3)
        ranking = RankingConfig(kind="single_objective")
        order = sort_population(population, ranking, np.random.default_rng(0), constraints=True)
        assert order == [2, 1, 0]

    def test_constraint_domination_in_nds(self):
        """Test that an infeasible non-dominated point drops behind feasible ones."""
        population = make_population([(1.0, 1.0), (0.2, 0.1), (0.1, 0.2)])
        population[0].constraint = ConstraintStatus.from_violation(0.5)
        order = sort_population(population, RankingConfig(), np.random.default_rng(0), constraints=True)
        assert order[-1] == 0


class TestExploit:
    """Test cases for truncation selection."""

    @pytest.mark.parametrize("n, expected", [(32, 8), (8, 2), (4, 1), (10, 2)])
    def test_replacement_count(self, n, expected):
        """Test floor(tau * N / 100) with tau = 25."""
        assert replacement_count(n, 25.0) == expected

    def test_losers_copy_donor_state(self):
        """Test that each bottom member takes a top member's checkpoint, objectives and step."""
        store = CheckpointStore()
        population = make_population([(float(i), -float(i)) for i in range(8)], store)
        order = [7, 6, 5, 4, 3, 2, 1, 0]
        pairs = exploit(population, 25.0, order, np.random.default_rng(0), store, SPACE)

        assert [loser for loser, _ in pairs] == [1, 0]
        for loser, donor in pairs:
            assert donor in (7, 6)
            assert store.get(str(loser)) == f"ckpt-{donor}".encode()
            assert population[loser].objectives == population[donor].objectives
            assert population[loser].step == population[donor].step
            assert population[loser].generation == 1
            assert SPACE.contains(population[loser].hyperparams)
        assert all(population[i].generation == 0 for i in range(2, 8))

    def test_single_donor_at_minimum_population(self):
        """Test N = 4: the only top member is the donor."""
        store = CheckpointStore()
        population = make_population([(0.1, 0.1), (0.9, 0.9), (0.5, 0.5), (0.3, 0.3)], store)
        pairs = exploit(population, 25.0, [1, 2, 3, 0], np.random.default_rng(0), store, SPACE)
        assert pairs == [(0, 1)]
        assert store.get("0") == b"ckpt-1"

    def test_zero_replacements(self):
        """Test that floor(tau * N / 100) = 0 replaces nobody."""
        store = CheckpointStore()
        population = make_population([(0.1, 0.1), (0.9, 0.9), (0.5, 0.5), (0.3, 0.3)], store)
        assert exploit(population, 20.0, [1, 2, 3, 0], np.random.default_rng(0), store, SPACE) == []
        assert store.get("0") == b"ckpt-0"

    def test_only_restricts_losers(self):
        """Test that asynchronous exploit only replaces the ready member."""
        store = CheckpointStore()
        population = make_population([(float(i), 0.0) for i in range(8)], store)
        order = [7, 6, 5, 4, 3, 2, 1, 0]
        assert exploit(population, 25.0, order, np.random.default_rng(0), store, SPACE, only=[3]) == []
        pairs = exploit(population, 25.0, order, np.random.default_rng(0), store, SPACE, only=[0])
        assert [loser for loser, _ in pairs] == [0]


class TestPBTEngineSynchronous:
    """Test cases for barrier-synchronized PBT."""

    def test_event_counts_and_times(self, toy_task):
        """Test one eval per member per round and 2 replacements per exploit."""
        log = run_pbt(small_config(), toy_task)
        evaluations = log.evaluations()
        assert len(evaluations) == 8 * 5
        assert len(log.of_kind("exploit")) == 2 * 4
        assert sorted({e.t for e in evaluations}) == pytest.approx([0.08, 0.16, 0.24, 0.32, 0.4])
        assert {e.step for e in evaluations} == {2, 4, 6, 8, 10}

    def test_exploit_events_reference_top_members(self, toy_task):
        """Test that donors and losers differ and hyperparameters stay in range."""
        log = run_pbt(small_config(), toy_task)
        for event in log.of_kind("exploit"):
            assert event.donor != event.sol
            assert toy_task.search_space.contains(event.hp)

    def test_deterministic_given_seed(self, toy_task):
        """Test that two runs with the same seed log identical bytes."""
        first = run_pbt(small_config(workers=3), toy_task).dumps()
        second = run_pbt(small_config(workers=3), toy_task).dumps()
        assert first == second
        assert run_pbt(small_config(seed=4, workers=3), toy_task).dumps() != first

    def test_zero_replacement_warns(self, toy_task):
        """Test that a warning event is logged at each ready point instead of exploits."""
        log = run_pbt(small_config(population_size=4, truncation=20.0, total_steps=6), toy_task)
        assert len(log.of_kind("exploit")) == 0
        assert len(log.of_kind("warning")) == 2

    def test_constrained_run_logs_violation(self):
        """Test that eval events carry viol on constrained tasks."""
        task = ConstrainedToyQuadraticTask()
        log = run_pbt(small_config(constraints=True), task)
        assert all(e.viol is not None and e.viol >= 0 for e in log.evaluations())

    def test_max_scalarization_uses_fixed_weights(self, toy_task):
        """Test that max mode draws W once per run."""
        ranking = RankingConfig(kind="scalarized", weight_mode="max", n_weights=5)
        engine = PBTEngine(small_config(ranking=ranking), toy_task)
        assert engine.weights.shape == (5, 2)
        log = engine.run()
        assert len(log.evaluations()) == 40

    def test_checkpoints_flushed(self, toy_task, tmp_path):
        """Test that the final checkpoint of every slot is written."""
        store = CheckpointStore(tmp_path / "ckpt")
        run_pbt(small_config(), toy_task, checkpoints=store)
        assert sorted(p.name for p in (tmp_path / "ckpt").iterdir()) == sorted(f"{i}.bin" for i in range(8))
        assert toy_task.step_of(store.get("0")) == 10

    def test_rejects_objective_index_beyond_task(self, toy_task):
        """Test that single-objective ranking on a missing objective is a config error."""
        ranking = RankingConfig(kind="single_objective", objective_index=2)
        with pytest.raises(ConfigurationError):
            PBTEngine(small_config(ranking=ranking), toy_task)

    def test_rejects_non_multiple_schedule(self, toy_task):
        """Test total_steps not a multiple of ready_interval."""
        with pytest.raises(ConfigurationError, match="multiple"):
            PBTEngine(small_config(ready_interval=3), toy_task)

    def test_nonfinite_objectives_rank_last_and_run_continues(self):
        """Test error events with the largest violation, and that the run finishes all rounds."""
        log = run_pbt(small_config(nonfinite_penalty=-1e9), NanEveryNthTask(period=5))
        errors = log.of_kind("error")
        assert len(errors) == 8
        assert len(log.evaluations()) == 32
        assert len(log.of_kind("exploit")) == 2 * 4
        assert all(e.viol == sys.float_info.max for e in errors)
        assert all("non-finite" in e.extra["message"] for e in errors)

        # at most two failures per round, so each one is among the replaced members
        replaced = {(e.sol, e.t) for e in log.of_kind("exploit")}
        final_time = log.final_time
        assert all((e.sol, e.t) in replaced for e in errors if e.t < final_time)

    @pytest.mark.parametrize("objective_index", [0, 1])
    def test_single_objective_never_replaces_best(self, toy_task, objective_index):
        """Test that ranking on f_i never hands the best f_i member to exploit."""
        ranking = RankingConfig(kind="single_objective", objective_index=objective_index)
        log = run_pbt(small_config(ranking=ranking), toy_task)
        assert_best_never_replaced(log, objective_index)


class TestPBTEngineAsynchronous:
    """Test cases for per-member ready points."""

    def test_every_lineage_reaches_total_steps(self, toy_task):
        """Test that each slot's last event is at total_steps."""
        log = run_pbt(small_config(mode="asynchronous"), toy_task)
        last_step = {}
        for event in log.events:
            if event.event in ("eval", "exploit"):
                last_step[event.sol] = event.step
        assert sorted(last_step) == list(range(8))
        assert all(step == 10 for step in last_step.values())

    def test_events_in_time_order(self, toy_task):
        """Test that the log is appended in simulated time order."""
        log = run_pbt(small_config(mode="asynchronous"), toy_task)
        times = [e.t for e in log.events]
        assert times == sorted(times)
        assert len(log.of_kind("exploit")) > 0

    def test_deterministic_given_seed(self, toy_task):
        """Test that thread scheduling does not change the log."""
        first = run_pbt(small_config(mode="asynchronous", workers=3), toy_task).dumps()
        second = run_pbt(small_config(mode="asynchronous", workers=3), toy_task).dumps()
        assert first == second

    def test_tolerates_uneven_schedule(self, toy_task):
        """Test that total_steps need not be a multiple of ready_interval."""
        log = run_pbt(small_config(mode="asynchronous", ready_interval=3), toy_task)
        assert max(e.step for e in log.evaluations()) >= 10

    def test_nonfinite_objectives_rank_last_and_run_continues(self):
        """Test that failed evaluations are logged and their lineages still finish."""
        log = run_pbt(small_config(mode="asynchronous", nonfinite_penalty=-1e9), NanEveryNthTask(period=5))
        errors = log.of_kind("error")
        assert errors
        assert all(e.viol == sys.float_info.max for e in errors)

        last_step = {}
        for event in log.events:
            if event.event in ("eval", "exploit", "error"):
                last_step[event.sol] = event.step
        assert sorted(last_step) == list(range(8))
        assert all(step == 10 for step in last_step.values())

        exploits = log.of_kind("exploit")
        replaced = {(e.sol, e.t) for e in exploits}
        assert any((e.sol, e.t) in replaced for e in errors)
        assert max(e.t for e in exploits) > min(e.t for e in errors)

    @pytest.mark.parametrize("objective_index", [0, 1])
    def test_single_objective_never_replaces_best(self, toy_task, objective_index):
        """Test that a ready member holding the best f_i is never replaced."""
        ranking = RankingConfig(kind="single_objective", objective_index=objective_index)
        log = run_pbt(small_config(mode="asynchronous", ranking=ranking), toy_task)
        assert_best_never_replaced(log, objective_index)


def test_quiet_task_population_improves(quiet_toy_task):
    """Test that the final non-dominated set beats the initial one on the toy task."""
    log = run_pbt(small_config(population_size=16, total_steps=40, workers=4), quiet_toy_task)
    evaluations = log.evaluations()
    first = pareto_filter([e.f for e in evaluations if e.step == 2])
    last = pareto_filter([e.f for e in evaluations])
    reference = (-10.0, -10.0)
    assert hypervolume(last, reference) > hypervolume(first, reference)


def test_task_defaults_do_not_need_schedule():
    """Test schedule defaults of 2 epochs per ready point and 100 epochs."""
    engine = PBTEngine(EngineConfig(population_size=4), ToyQuadraticTask())
    assert (engine.ready_interval, engine.total_steps) == (2, 100)
