"""Pydantic models for algorithm and experiment configuration."""

from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

RankingKind = Literal["nds_greedy", "nds_crowding", "scalarized", "single_objective"]
ScalarizerName = Literal["weighted_sum", "chebyshev", "parego", "golovin"]
ClockKind = Literal["simulated", "wall"]
EngineMode = Literal["synchronous", "asynchronous"]


class RankingConfig(BaseModel):
    """How a population is ordered from best to worst."""

    kind: RankingKind = Field("nds_greedy", description="Ranking criterion")
    scalarizer: ScalarizerName = Field("parego", description="Scalarization for kind=scalarized")
    weight_mode: Literal["random", "max"] = Field(
        "random", description="Resample w at every ranking, or max over a fixed set W"
    )
    n_weights: int = Field(100, ge=1, description="|W| for max-scalarization")
    parego_rho: float = Field(0.05, ge=0.0, description="Weighted-sum factor in ParEGO")
    objective_index: int = Field(0, ge=0, description="Objective for kind=single_objective")
    normalize: bool = Field(False, description="Min-max normalize before greedy distances")

    @property
    def is_nds(self) -> bool:
        return self.kind in ("nds_greedy", "nds_crowding")

    def label(self) -> str:
        if self.kind == "scalarized":
            return f"{self.weight_mode}-{self.scalarizer}"
        if self.kind == "single_objective":
            return f"so-f{self.objective_index + 1}"
        return self.kind

    def validate_for(self, n_objectives: int) -> None:
        """Check the ranking against a task's objective count."""
        if self.kind == "single_objective" and self.objective_index >= n_objectives:
            raise ValueError(
                f"Ranking uses objective {self.objective_index} but the task has K={n_objectives}"
            )


class EngineConfig(BaseModel):
    """PBT engine configuration; defaults follow the published protocol."""

    population_size: int = Field(32, ge=4, description="N")
    truncation: float = Field(25.0, gt=0.0, le=50.0, description="tau, in percent; 50 splits the population in halves")
    ready_interval: Optional[int] = Field(None, ge=1, description="Steps between exploit-and-explore")
    total_steps: Optional[int] = Field(None, ge=1, description="Training steps per lineage")
    resample_probability: float = Field(0.2, ge=0.0, le=1.0, description="p in explore")
    ranking: RankingConfig = Field(default_factory=RankingConfig)
    constraints: bool = False
    mode: EngineMode = "synchronous"
    mutation: Literal["local", "random"] = "local"
    workers: Optional[int] = Field(None, ge=1)
    clock: ClockKind = "simulated"
    nonfinite_penalty: float = -1e6
    seed: int = 0

    def schedule(self, steps_per_epoch: int, default_epochs: int = 100) -> Tuple[int, int]:
        """
        Resolve (ready_interval, total_steps) against a task.

        Raises:
            ValueError: If total_steps is not a multiple of ready_interval in synchronous mode.
        """
        ready = self.ready_interval or 2 * steps_per_epoch
        total = self.total_steps or default_epochs * steps_per_epoch
        if self.mode == "synchronous" and total % ready != 0:
            raise ValueError(f"total_steps={total} must be a multiple of ready_interval={ready}")
        if total < ready:
            raise ValueError(f"total_steps={total} is smaller than ready_interval={ready}")
        return ready, total


class AshaConfig(BaseModel):
    """Multi-objective asynchronous successive halving configuration."""

    eta: int = Field(2, ge=2, description="Reduction factor")
    min_resource: Optional[int] = Field(None, ge=1, description="Steps at rung 0 (default: ready interval)")
    max_resource: Optional[int] = Field(None, ge=1, description="Steps at the top rung (default: total steps)")
    ranking: RankingConfig = Field(default_factory=RankingConfig)
    constraints: bool = Field(False, description="Promote by constraint domination")
    max_concurrent: Optional[int] = Field(None, ge=1, description="Concurrent trials (default: workers)")
    time_budget: Optional[float] = Field(None, gt=0.0, description="Seconds; set from PBT runs when omitted")
    clock: ClockKind = "simulated"
    seed: int = 0

    @field_validator("ranking")
    @classmethod
    def validate_ranking(cls, v):
        if not v.is_nds:
            raise ValueError("MO-ASHA promotes by non-dominated ranking; use nds_greedy or nds_crowding")
        return v

    def rungs(self, steps_per_epoch: int, default_epochs: int = 100) -> List[int]:
        """Geometric rung ladder min * eta^k <= max, topped up with max itself."""
        low = self.min_resource or 2 * steps_per_epoch
        high = self.max_resource or default_epochs * steps_per_epoch
        if low > high:
            raise ValueError(f"min_resource={low} exceeds max_resource={high}")
        ladder = [low]
        while ladder[-1] * self.eta <= high:
            ladder.append(ladder[-1] * self.eta)
        if ladder[-1] < high:
            ladder.append(high)
        return ladder


class Nsga2Config(BaseModel):
    """Generational NSGA-II configuration; every individual is fully trained."""

    population_size: int = Field(8, ge=2)
    generations: Optional[int] = Field(None, ge=0, description="Offspring generations")
    budget: Optional[int] = Field(None, ge=1, description="Fully trained networks, overrides generations")
    crossover_probability: float = Field(0.9, ge=0.0, le=1.0)
    resample_probability: float = Field(0.2, ge=0.0, le=1.0)
    ranking: RankingConfig = Field(default_factory=RankingConfig)
    ready_interval: Optional[int] = Field(None, ge=1)
    total_steps: Optional[int] = Field(None, ge=1)
    workers: Optional[int] = Field(None, ge=1)
    clock: ClockKind = "simulated"
    seed: int = 0

    @field_validator("ranking")
    @classmethod
    def validate_ranking(cls, v):
        if not v.is_nds:
            raise ValueError("NSGA-II survival uses non-dominated ranking; use nds_greedy or nds_crowding")
        return v

    @model_validator(mode="after")
    def validate_budget(self):
        if self.budget is not None and self.budget < self.population_size:
            raise ValueError(f"budget={self.budget} is smaller than population_size={self.population_size}")
        return self

    @property
    def n_generations(self) -> int:
        if self.budget is not None:
            return self.budget // self.population_size - 1
        return 3 if self.generations is None else self.generations


class RandomSearchConfig(BaseModel):
    """Random search: independent uniform configurations trained to completion."""

    n_trials: int = Field(32, ge=1)
    ready_interval: Optional[int] = Field(None, ge=1)
    total_steps: Optional[int] = Field(None, ge=1)
    workers: Optional[int] = Field(None, ge=1)
    clock: ClockKind = "simulated"
    seed: int = 0


AlgorithmKind = Literal["pbt", "random_search", "mo_asha", "nsga2"]
AlgorithmConfig = Union[EngineConfig, RandomSearchConfig, AshaConfig, Nsga2Config]

CONFIG_TYPES = {
    "pbt": EngineConfig,
    "random_search": RandomSearchConfig,
    "mo_asha": AshaConfig,
    "nsga2": Nsga2Config,
}


class TaskSpec(BaseModel):
    """Task selected by name with task-specific parameters."""

    name: str = Field("toy-quadratic-mo", description="Registered task name")
    params: Dict[str, Any] = Field(default_factory=dict)


class AlgorithmSpec(BaseModel):
    """One algorithm of an experiment and how many seeds it runs."""

    kind: AlgorithmKind
    label: Optional[str] = Field(None, description="Name used in file names and reports")
    n_seeds: int = Field(1, ge=1)
    config: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_config(self):
        # raises ValidationError with the nested field path on bad configs
        self.build_config()
        return self

    def build_config(self, **overrides: Any) -> AlgorithmConfig:
        """Validated config object of this algorithm's type, with overrides applied."""
        data = {**self.config, **{k: v for k, v in overrides.items() if v is not None}}
        return CONFIG_TYPES[self.kind].model_validate(data)

    def resolved_label(self) -> str:
        if self.label:
            return self.label
        if self.kind in ("pbt", "mo_asha", "nsga2"):
            ranking = self.build_config().ranking
            return f"{self.kind}-{ranking.label()}"
        return self.kind


class ExperimentConfig(BaseModel):
    """One experiment: a task, several algorithms, several seeds each."""

    task: TaskSpec = Field(default_factory=TaskSpec)
    algorithms: List[AlgorithmSpec] = Field(..., min_length=1)
    out_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)
    seed: int = 0
    mode: Optional[EngineMode] = Field(None, description="Overrides the mode of every PBT algorithm")
    parallel_runs: bool = False
    reference_rho: float = Field(0.1, ge=0.0)
    coverage_sectors: int = Field(360, ge=0)

    @model_validator(mode="after")
    def validate_labels(self):
        labels = [spec.resolved_label() for spec in self.algorithms]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ValueError(f"Algorithm labels must be unique, duplicated: {duplicates}")
        return self
