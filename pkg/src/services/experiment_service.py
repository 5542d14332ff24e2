"""
Experiment orchestration: runs every (algorithm, seed) pair of a config,
pools the evaluated points, and writes run logs, metrics, fronts, plots and
the summary report.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog
from scipy.stats import mannwhitneyu

from src.clients.checkpoint_store import CheckpointStore
from src.clients.exporters import (
    metrics_frame,
    plot_experiment,
    write_fronts_csv,
    write_metrics_csv,
    write_summary_csv,
)
from src.clients.run_log import RunLog, RunLogError
from src.config import settings
from src.models.config_models import AlgorithmConfig, AlgorithmSpec, ExperimentConfig
from src.models.internal_models import ObjectiveVector, RunEvent
from src.observability import record_experiment_summary, record_run_metrics, trace_function
from src.services.asha_service import mo_asha
from src.services.nsga2_service import nsga2
from src.services.pbt_service import ConfigurationError, run_pbt
from src.services.random_search_service import random_search
from src.tasks import TaskError, TrainableTask, get_task
from src.utils.indicators import (
    FrontArchive,
    IndicatorError,
    compute_reference_point,
    coverage,
    hypervolume,
    hypervolume_trace,
    pareto_filter,
)

logger = structlog.get_logger()

MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.csv"
PLOT_FILE = "plots/experiment.svg"
FRONTS_FILE = "fronts.csv"


class ExperimentError(Exception):
    """Raised when a run of an experiment fails or its outputs cannot be processed."""
    pass


@dataclass
class RunPlan:
    """One (algorithm, seed) run, validated before anything executes."""

    spec: AlgorithmSpec
    label: str
    seed: int
    config: AlgorithmConfig

    @property
    def run_id(self) -> str:
        return f"{self.label}__seed{self.seed}"


@dataclass
class RunRecord:
    plan: RunPlan
    log: RunLog
    wall_time: float


def _plan_runs(config: ExperimentConfig, task: TrainableTask, workers: int) -> List[RunPlan]:
    """
    Resolve every algorithm config against the task.

    Raises:
        ConfigurationError: On a ranking/objective-count mismatch or an invalid step schedule
    """
    plans: List[RunPlan] = []
    for spec in config.algorithms:
        label = spec.resolved_label()
        for k in range(spec.n_seeds):
            overrides: Dict[str, Any] = {"seed": config.seed + k}
            if spec.kind != "mo_asha" and "workers" not in spec.config:
                overrides["workers"] = workers
            if spec.kind == "pbt" and config.mode is not None:
                overrides["mode"] = config.mode
            algorithm = spec.build_config(**overrides)

            try:
                if spec.kind in ("pbt", "mo_asha", "nsga2"):
                    algorithm.ranking.validate_for(task.n_objectives)
                if spec.kind == "pbt":
                    algorithm.schedule(task.steps_per_epoch)
                if spec.kind == "mo_asha":
                    algorithm.rungs(task.steps_per_epoch)
            except ValueError as e:
                raise ConfigurationError(f"Algorithm '{label}': {e}")
            plans.append(RunPlan(spec=spec, label=label, seed=config.seed + k, config=algorithm))
    return plans


def final_population(log: RunLog) -> List[RunEvent]:
    """
    Latest eval or error event of every member of the final population.

    NSGA-II logs its survivors explicitly; for the other algorithms every
    solution id that was ever evaluated is part of the final population.
    """
    latest: Dict[int, RunEvent] = {}
    for event in log.events:
        if event.event in ("eval", "error") and event.sol >= 0:
            latest[event.sol] = event
    survivors = log.of_kind("survivors")
    if survivors:
        ids = survivors[-1].extra.get("ids", [])
        return [latest[i] for i in ids if i in latest]
    return [latest[i] for i in sorted(latest)]


def infeasible_percentage(log: RunLog) -> float:
    members = final_population(log)
    if not members:
        return 0.0
    infeasible = sum(1 for e in members if e.event == "error" or (e.viol or 0.0) > 0.0)
    return 100.0 * infeasible / len(members)


def run_front(log: RunLog) -> List[Tuple[float, int, ObjectiveVector]]:
    """Non-dominated points of a run with the time and step they were first reached."""
    first_seen: Dict[ObjectiveVector, Tuple[float, int]] = {}
    for event in log.evaluations():
        first_seen.setdefault(tuple(event.f), (event.t, event.step))
    front = pareto_filter(list(first_seen)) if first_seen else []
    return [(first_seen[p][0], first_seen[p][1], p) for p in front]


class ExperimentService:
    """Executes an experiment config and writes its output directory."""

    def __init__(self, config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None,
                 workers: Optional[int] = None):
        """
        Raises:
            ConfigurationError: If the task cannot be built or an algorithm does not fit it
        """
        self.config = config
        self.out_dir = Path(out_dir or config.out_dir or settings.out_dir)
        self.workers = workers or config.workers or settings.workers

        try:
            self.task = get_task(config.task.name, config.task.params)
        except TaskError as e:
            raise ConfigurationError(str(e))
        if self.task.n_objectives > 3:
            raise ConfigurationError(
                f"Task '{self.task.name}' has K={self.task.n_objectives}; hypervolume supports K <= 3"
            )
        self.plans = _plan_runs(config, self.task, self.workers)

    def _execute(self, plan: RunPlan) -> RunRecord:
        logger.info("Run started", label=plan.label, kind=plan.spec.kind, seed=plan.seed)
        started = time.perf_counter()
        try:
            if plan.spec.kind == "pbt":
                store = CheckpointStore(self.out_dir / "ckpt" / plan.run_id)
                log = run_pbt(plan.config, self.task, run_id=plan.run_id, checkpoints=store)
            elif plan.spec.kind == "random_search":
                log = random_search(self.task, plan.config, run_id=plan.run_id)
            elif plan.spec.kind == "nsga2":
                log = nsga2(self.task, plan.config, run_id=plan.run_id)
            else:
                log = mo_asha(self.task, plan.config, run_id=plan.run_id, workers=self.workers)
            log.write_jsonl(self.out_dir / "runs" / f"{plan.run_id}.jsonl")
        except ConfigurationError:
            raise
        except Exception as e:
            logger.error("Run failed", run_id=plan.run_id, error=str(e), exc_info=True)
            raise ExperimentError(f"Run {plan.run_id} failed: {e}") from e
        return RunRecord(plan=plan, log=log, wall_time=time.perf_counter() - started)

    def _execute_all(self, plans: List[RunPlan]) -> List[RunRecord]:
        if not self.config.parallel_runs or len(plans) < 2:
            return [self._execute(plan) for plan in plans]
        with ThreadPoolExecutor(max_workers=len(plans), thread_name_prefix="mopbt-run") as executor:
            return list(executor.map(self._execute, plans))

    def _with_asha_budget(self, plans: List[RunPlan], budget: Optional[float]) -> List[RunPlan]:
        """Give MO-ASHA runs without an explicit budget the slowest PBT run's time."""
        if budget is None or budget <= 0:
            return plans
        resolved = []
        for plan in plans:
            if plan.spec.config.get("time_budget") is None:
                plan = RunPlan(plan.spec, plan.label, plan.seed, plan.config.model_copy(update={"time_budget": budget}))
            resolved.append(plan)
        return resolved

    @trace_function("run_experiment")
    def run(self) -> Dict[str, Any]:
        """
        Execute all runs and write every output file.

        Returns:
            The manifest written to manifest.json

        Raises:
            ExperimentError: If a run fails or produced no evaluations at all
        """
        logger.info("Experiment started", task=self.task.name, runs=len(self.plans),
                    out_dir=str(self.out_dir), workers=self.workers)

        asha_plans = [p for p in self.plans if p.spec.kind == "mo_asha"]
        records = self._execute_all([p for p in self.plans if p.spec.kind != "mo_asha"])

        pbt_times = [r.log.final_time for r in records if r.plan.spec.kind == "pbt"]
        asha_budget = max(pbt_times) if pbt_times else None
        if asha_plans:
            records += self._execute_all(self._with_asha_budget(asha_plans, asha_budget))

        by_id = {r.plan.run_id: r for r in records}
        records = [by_id[p.run_id] for p in self.plans]
        manifest = self._write_outputs(records, asha_budget if asha_plans else None)
        logger.info("Experiment finished", task=self.task.name, hv_star=manifest["hv_star"],
                    out_dir=str(self.out_dir))
        return manifest

    def _write_outputs(self, records: List[RunRecord], asha_budget: Optional[float]) -> Dict[str, Any]:
        # The pooled front is the front of the per-run fronts
        fronts = {record.plan.run_id: run_front(record.log) for record in records}
        archive = FrontArchive()
        for run_id, front in fronts.items():
            for t, step, f in front:
                archive.add(f, run_id, t, step)
        try:
            reference = compute_reference_point(archive, self.config.reference_rho)
        except IndicatorError as e:
            raise ExperimentError(f"No evaluations to compute metrics from: {e}")
        hv_star = hypervolume(archive.non_dominated(), reference)
        k = self.task.n_objectives

        runs: List[Dict[str, Any]] = []
        curves: Dict[str, List[pd.DataFrame]] = {}
        front_rows = []
        for record in records:
            plan = record.plan
            trace = hypervolume_trace(record.log.evaluations(), reference)
            metrics_file = f"metrics/{plan.run_id}.csv"
            write_metrics_csv(self.out_dir / metrics_file, trace, hv_star)
            curves.setdefault(plan.label, []).append(metrics_frame(trace, hv_star))

            front_rows.extend((plan.run_id, t, step, f) for t, step, f in fronts[plan.run_id])
            final_hv = trace[-1].hv if trace else 0.0
            runs.append({
                "label": plan.label,
                "kind": plan.spec.kind,
                "seed": plan.seed,
                "run_id": plan.run_id,
                "log": f"runs/{plan.run_id}.jsonl",
                "metrics": metrics_file,
                "n_evaluations": len(record.log.evaluations()),
                "final_time": record.log.final_time,
                "final_hv": final_hv,
            })
            record_run_metrics(plan.label, plan.seed, len(record.log.evaluations()),
                               record.log.final_time, final_hv, record.wall_time)

        write_fronts_csv(self.out_dir / FRONTS_FILE, front_rows, k)
        plot_experiment(
            self.out_dir / PLOT_FILE,
            curves,
            self.task.objective_names,
            fronts=self._median_fronts(fronts, runs) if k == 2 else None,
            title=self.task.name,
        )

        manifest = {
            "task": {"name": self.task.name, "params": self.config.task.params},
            "n_objectives": k,
            "objective_names": list(self.task.objective_names),
            "constrained": self.task.has_constraint,
            "reference_rho": self.config.reference_rho,
            "reference_point": list(reference),
            "hv_star": hv_star,
            "coverage_sectors": self.config.coverage_sectors,
            "asha_time_budget": asha_budget,
            "algorithms": list(dict.fromkeys(r["label"] for r in runs)),
            "runs": runs,
        }
        (self.out_dir / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        return manifest

    @staticmethod
    def _median_fronts(
        run_fronts: Dict[str, List[Tuple[float, int, ObjectiveVector]]],
        runs: List[Dict[str, Any]],
    ) -> Dict[str, List[ObjectiveVector]]:
        """Front of the median-hypervolume run of every algorithm."""
        grouped: Dict[str, List[Tuple[float, str]]] = {}
        for run in runs:
            grouped.setdefault(run["label"], []).append((run["final_hv"], run["run_id"]))
        fronts = {}
        for label, items in grouped.items():
            items.sort(key=lambda item: item[0])
            median_run = items[(len(items) - 1) // 2][1]
            fronts[label] = [f for _, _, f in run_fronts[median_run]]
        return fronts


def run_experiment(config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None,
                   workers: Optional[int] = None) -> Dict[str, Any]:
    """Run an experiment and return its manifest."""
    return ExperimentService(config, out_dir=out_dir, workers=workers).run()


def load_manifest(out_dir: Union[str, Path]) -> Dict[str, Any]:
    path = Path(out_dir) / MANIFEST_FILE
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ExperimentError(f"Cannot read experiment manifest {path}: {e}")


def rank_sum_pvalue(reference: np.ndarray, other: np.ndarray) -> float:
    """One-sided rank-sum p-value that `reference` tends to be larger than `other`."""
    if len(reference) == 0 or len(other) == 0:
        return math.nan
    if np.all(reference == reference[0]) and np.array_equal(np.unique(reference), np.unique(other)):
        return 1.0
    return float(mannwhitneyu(reference, other, alternative="greater").pvalue)


def run_statistics(out_dir: Union[str, Path], manifest: Dict[str, Any]) -> pd.DataFrame:
    """Final hypervolume, coverage and infeasible share of every run in the manifest."""
    out_dir = Path(out_dir)
    reference = manifest["reference_point"]
    k = manifest["n_objectives"]
    rows = []
    for run in manifest["runs"]:
        try:
            log = RunLog.read_jsonl(out_dir / run["log"], run_id=run["run_id"])
        except RunLogError as e:
            raise ExperimentError(str(e))
        front = pareto_filter([e.f for e in log.evaluations()]) if log.evaluations() else []
        row = {
            "label": run["label"],
            "seed": run["seed"],
            "hv": hypervolume(front, reference),
        }
        if k == 2:
            row["coverage"] = coverage(front, reference, manifest["coverage_sectors"])
        if manifest.get("constrained"):
            row["infeasible_pct"] = infeasible_percentage(log)
        rows.append(row)
    return pd.DataFrame(rows)


@trace_function("report")
def report(out_dir: Union[str, Path]) -> pd.DataFrame:
    """
    Summarize an experiment directory per algorithm and write summary.csv.

    Hypervolume and coverage are reported x100 as mean and population standard
    deviation over seeds. Every algorithm after the first gets the one-sided
    rank-sum p-value of the first algorithm's hypervolume being larger.

    Raises:
        ExperimentError: If the manifest or a run log cannot be read
    """
    manifest = load_manifest(out_dir)
    per_run = run_statistics(out_dir, manifest)
    labels = manifest["algorithms"]
    reference_hv = per_run.loc[per_run["label"] == labels[0], "hv"].to_numpy()

    rows = []
    for label in labels:
        runs = per_run[per_run["label"] == label]
        row: Dict[str, Any] = {
            "algorithm": label,
            "runs": len(runs),
            "hv_mean": 100.0 * runs["hv"].mean(),
            "hv_std": 100.0 * runs["hv"].std(ddof=0),
        }
        if "coverage" in runs:
            row["coverage_mean"] = 100.0 * runs["coverage"].mean()
            row["coverage_std"] = 100.0 * runs["coverage"].std(ddof=0)
        if "infeasible_pct" in runs:
            row["infeasible_pct"] = runs["infeasible_pct"].mean()
        row["p_value"] = math.nan if label == labels[0] else rank_sum_pvalue(reference_hv, runs["hv"].to_numpy())
        rows.append(row)

    summary = pd.DataFrame(rows)
    write_summary_csv(Path(out_dir) / SUMMARY_FILE, summary)
    record_experiment_summary(manifest["task"]["name"], {r["algorithm"]: r for r in rows})
    return summary
