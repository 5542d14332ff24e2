"""Data models for the multi-objective PBT toolkit."""

from .config_models import (
    AlgorithmSpec,
    AshaConfig,
    EngineConfig,
    ExperimentConfig,
    Nsga2Config,
    RandomSearchConfig,
    RankingConfig,
    TaskSpec,
)
from .internal_models import (
    FEASIBLE,
    ConstraintStatus,
    Domain,
    FrontPartition,
    HyperparamVector,
    ObjectiveVector,
    RunEvent,
    SearchSpace,
    Solution,
)

__all__ = [
    "AlgorithmSpec",
    "AshaConfig",
    "EngineConfig",
    "ExperimentConfig",
    "Nsga2Config",
    "RandomSearchConfig",
    "RankingConfig",
    "TaskSpec",
    "FEASIBLE",
    "ConstraintStatus",
    "Domain",
    "FrontPartition",
    "HyperparamVector",
    "ObjectiveVector",
    "RunEvent",
    "SearchSpace",
    "Solution",
]
