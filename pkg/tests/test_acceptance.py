"""
End-to-end protocol checks on the toy tasks.

These runs take tens of seconds; deselect them with `-m "not slow"`.
"""

import itertools

import numpy as np
import pytest

from src.clients.checkpoint_store import CheckpointStore
from src.models.config_models import EngineConfig, ExperimentConfig, RankingConfig
from src.services.experiment_service import (
    infeasible_percentage,
    rank_sum_pvalue,
    report,
    run_experiment,
    run_statistics,
)
from src.services.pbt_service import run_pbt
from src.tasks import ConstrainedToyQuadraticTask, ToyQuadraticTask
from src.utils.dominance import greedy_scattered_subset_order, non_dominated_sort
from src.utils.indicators import hypervolume

pytestmark = pytest.mark.slow


def brute_force_fronts(points):
    remaining = np.arange(len(points))
    fronts = []
    while remaining.size:
        sub = points[remaining]
        geq = np.all(sub[:, None, :] >= sub[None, :, :], axis=2)
        gt = np.any(sub[:, None, :] > sub[None, :, :], axis=2)
        dominated = (geq & gt).any(axis=0)
        fronts.append(remaining[~dominated].tolist())
        remaining = remaining[dominated]
    return fronts


def test_ranking_matches_oracles():
    """Test sorting and the greedy order on 1000 seeded populations."""
    rng = np.random.default_rng(100)
    for _ in range(1000):
        k = int(rng.integers(2, 4))
        points = rng.random((int(rng.integers(1, 65)), k))
        partition = non_dominated_sort(points)
        assert partition.as_lists() == brute_force_fronts(points)

        order = greedy_scattered_subset_order(partition, points)
        ranked = []
        for front in partition.fronts:
            candidates = list(front)
            while candidates:
                if not ranked:
                    best = max(candidates, key=lambda i: (points[i][0], -i))
                else:
                    gaps = np.linalg.norm(points[candidates][:, None, :] - points[ranked][None, :, :], axis=2)
                    nearest = gaps.min(axis=1)
                    best = candidates[int(np.flatnonzero(nearest == nearest.max())[0])]
                assert order[len(ranked)] == best
                ranked.append(best)
                candidates.remove(best)


def test_hypervolume_matches_inclusion_exclusion():
    """Test exact 2D and 3D volumes on 500 seeded instances."""
    rng = np.random.default_rng(101)
    for _ in range(500):
        k = int(rng.integers(2, 4))
        points = rng.random((int(rng.integers(1, 9)), k))
        expected = 0.0
        for size in range(1, len(points) + 1):
            for subset in itertools.combinations(range(len(points)), size):
                expected += (-1) ** (size + 1) * float(np.prod(points[list(subset)].min(axis=0)))
        assert hypervolume(points, np.zeros(k)) == pytest.approx(expected, abs=1e-9)


def test_protocol_replaces_eight_of_thirty_two(toy_task):
    """Test 8 replacements per exploit round at N = 32, tau = 25."""
    log = run_pbt(EngineConfig(population_size=32, ready_interval=2, total_steps=10, seed=0), toy_task)
    per_round = {}
    for event in log.of_kind("exploit"):
        per_round[event.t] = per_round.get(event.t, 0) + 1
    assert list(per_round.values()) == [8, 8, 8, 8]


@pytest.mark.parametrize("truncation", [10.0, 25.0, 50.0])
@pytest.mark.parametrize("kind", ["nds_greedy", "nds_crowding"])
@pytest.mark.parametrize("mutation", ["local", "random"])
def test_ablations_run_to_completion(truncation, kind, mutation):
    """Test every ablation setting on the toy task."""
    config = EngineConfig(
        population_size=16, truncation=truncation, ready_interval=2, total_steps=20,
        ranking=RankingConfig(kind=kind), mutation=mutation, workers=4, seed=1,
    )
    log = run_pbt(config, ToyQuadraticTask(), checkpoints=CheckpointStore())
    assert len(log.evaluations()) == 16 * 10
    assert len(log.of_kind("exploit")) == 9 * int(truncation * 16 // 100)


def test_constraint_domination_reduces_infeasible_share():
    """Test that constraint domination lowers the infeasible share of the final population."""
    task = ConstrainedToyQuadraticTask()

    def mean_share(constraints):
        shares = []
        for seed in range(10):
            config = EngineConfig(population_size=16, ready_interval=2, total_steps=40,
                                  constraints=constraints, workers=4, seed=seed)
            shares.append(infeasible_percentage(run_pbt(config, task)))
        return float(np.mean(shares))

    assert mean_share(True) < mean_share(False)


def test_synchronous_experiment_is_deterministic(tmp_path):
    """Test byte-identical logs and CSVs over two synchronous experiments."""
    config = ExperimentConfig.model_validate({
        "algorithms": [
            {"kind": "pbt", "n_seeds": 2, "config": {"population_size": 8, "ready_interval": 2, "total_steps": 20}},
            {"kind": "random_search", "n_seeds": 2, "config": {"n_trials": 8, "ready_interval": 2, "total_steps": 20}},
        ],
        "workers": 4,
    })
    for name in ("a", "b"):
        run_experiment(config, out_dir=tmp_path / name)
        report(tmp_path / name)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.suffix in (".jsonl", ".csv"))
    assert len(files) == 4 + 4 + 2
    for relative in files:
        assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes()


def toy_experiment(algorithms):
    return ExperimentConfig.model_validate({
        "task": {"name": "toy-quadratic-mo"},
        "algorithms": algorithms,
        "workers": 4,
        "seed": 0,
    })


def test_multi_objective_ranking_beats_baselines(tmp_path):
    """Test MO-PBT against single-objective PBT and random search over 10 seeds."""
    pbt = {"population_size": 32, "truncation": 25}
    config = toy_experiment([
        {"kind": "pbt", "label": "mo-pbt", "n_seeds": 10, "config": {**pbt, "ranking": {"kind": "nds_greedy"}}},
        {"kind": "pbt", "label": "so-f1", "n_seeds": 10,
         "config": {**pbt, "ranking": {"kind": "single_objective", "objective_index": 0}}},
        {"kind": "pbt", "label": "so-f2", "n_seeds": 10,
         "config": {**pbt, "ranking": {"kind": "single_objective", "objective_index": 1}}},
        {"kind": "pbt", "label": "random-parego", "n_seeds": 10,
         "config": {**pbt, "ranking": {"kind": "scalarized", "scalarizer": "parego", "weight_mode": "random"}}},
        {"kind": "pbt", "label": "max-golovin", "n_seeds": 10,
         "config": {**pbt, "ranking": {"kind": "scalarized", "scalarizer": "golovin", "weight_mode": "max"}}},
        {"kind": "random_search", "label": "random-search", "n_seeds": 10, "config": {"n_trials": 32}},
    ])
    manifest = run_experiment(config, out_dir=tmp_path)
    per_run = run_statistics(tmp_path, manifest)
    hv = {label: group["hv"].to_numpy() for label, group in per_run.groupby("label")}
    cov = {label: group["coverage"].to_numpy() for label, group in per_run.groupby("label")}

    assert all(len(values) == 10 for values in hv.values())
    for baseline in ("so-f1", "so-f2", "random-search"):
        assert hv["mo-pbt"].mean() > hv[baseline].mean()
        assert rank_sum_pvalue(hv["mo-pbt"], hv[baseline]) < 0.05
    assert cov["mo-pbt"].mean() > cov["max-golovin"].mean()


def test_hypervolume_grows_with_population_size(tmp_path):
    """Test that MO-PBT mean hypervolume is nondecreasing over N in {16, 32, 64}."""
    sizes = (16, 32, 64)
    config = toy_experiment([
        {"kind": "pbt", "label": f"mo-pbt-{n}", "n_seeds": 10,
         "config": {"population_size": n, "ranking": {"kind": "nds_greedy"}}}
        for n in sizes
    ])
    manifest = run_experiment(config, out_dir=tmp_path)
    per_run = run_statistics(tmp_path, manifest)
    means = [per_run.loc[per_run["label"] == f"mo-pbt-{n}", "hv"].mean() for n in sizes]
    assert all(a <= b for a, b in zip(means, means[1:]))
