"""Internal data models for the multi-objective PBT toolkit."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

# Point in R^K objective space, maximization convention.
ObjectiveVector = Tuple[float, ...]


def as_objective_vector(values: Sequence[float]) -> ObjectiveVector:
    """Convert a sequence of numbers into an immutable objective vector."""
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ConstraintStatus:
    """Feasibility flag plus the amount of constraint violation."""

    feasible: bool
    violation: float = 0.0

    def __post_init__(self):
        """Validate feasible <=> violation == 0."""
        if self.violation < 0 or math.isnan(self.violation):
            raise ValueError(f"Violation must be nonnegative, got {self.violation}")
        if self.feasible != (self.violation == 0.0):
            raise ValueError(
                f"Inconsistent constraint status: feasible={self.feasible}, violation={self.violation}"
            )

    @classmethod
    def from_violation(cls, violation: float) -> "ConstraintStatus":
        violation = max(0.0, float(violation))
        return cls(feasible=violation == 0.0, violation=violation)


FEASIBLE = ConstraintStatus(feasible=True, violation=0.0)


@dataclass(frozen=True)
class FrontPartition:
    """Ordered non-dominated fronts F^1..F^R over a population's indices."""

    fronts: Tuple[Tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return sum(len(front) for front in self.fronts)

    def as_lists(self) -> List[List[int]]:
        return [list(front) for front in self.fronts]


@dataclass(frozen=True)
class Domain:
    """One ordinal hyperparameter domain."""

    name: str
    values: Tuple[float, ...]
    scale: str = "linear"  # linear | log

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError(f"Domain {self.name} needs at least 2 values, got {len(self.values)}")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"Domain {self.name}: unknown scale {self.scale}")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"Domain {self.name}: values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def linear(cls, name: str, low: float, high: float, n: int) -> "Domain":
        return cls(name=name, values=tuple(float(v) for v in np.linspace(low, high, n)))

    @classmethod
    def log(cls, name: str, low: float, high: float, n: int) -> "Domain":
        return cls(name=name, values=tuple(float(v) for v in np.geomspace(low, high, n)), scale="log")


@dataclass(frozen=True)
class SearchSpace:
    """Ordered list of discrete ordinal hyperparameter domains."""

    domains: Tuple[Domain, ...]

    def __len__(self) -> int:
        return len(self.domains)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(d) for d in self.domains)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.domains)

    def contains(self, hyperparams: Sequence[int]) -> bool:
        return len(hyperparams) == len(self.domains) and all(
            0 <= h < len(d) for h, d in zip(hyperparams, self.domains)
        )

    def decode(self, hyperparams: Sequence[int]) -> Tuple[float, ...]:
        """Map ordinal indices to the real hyperparameter values."""
        if not self.contains(hyperparams):
            raise ValueError(f"Hyperparameters {list(hyperparams)} outside search space {self.sizes}")
        return tuple(d.values[h] for h, d in zip(hyperparams, self.domains))

    def sample(self, rng: np.random.Generator) -> Tuple[int, ...]:
        """Uniform per-coordinate sample of ordinal indices."""
        return tuple(int(rng.integers(len(d))) for d in self.domains)


# Ordinal indices into the search space domains.
HyperparamVector = Tuple[int, ...]


@dataclass
class Solution:
    """One population member: hyperparameters, checkpoint handle and latest snapshot."""

    id: int
    hyperparams: HyperparamVector
    checkpoint: str  # key into the checkpoint store
    objectives: Optional[ObjectiveVector] = None
    constraint: ConstraintStatus = FEASIBLE
    step: int = 0
    generation: int = 0

    def snapshot(self) -> "Solution":
        """Copy suitable for handing to readers outside the population store."""
        return Solution(
            id=self.id,
            hyperparams=self.hyperparams,
            checkpoint=self.checkpoint,
            objectives=self.objectives,
            constraint=self.constraint,
            step=self.step,
            generation=self.generation,
        )


@dataclass
class RunEvent:
    """One line of a RunLog."""

    t: float
    step: int
    event: str  # eval | exploit | promote | error | warning
    sol: int
    f: Optional[List[float]] = None
    hp: Optional[List[int]] = None
    donor: Optional[int] = None
    viol: Optional[float] = None
    rung: Optional[int] = None
    promoted: Optional[bool] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the JSONL schema, omitting absent optional fields."""
        data: Dict[str, Any] = {"t": self.t, "step": self.step, "event": self.event, "sol": self.sol}
        for key in ("f", "hp", "donor", "viol", "rung", "promoted"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        data.update(self.extra)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunEvent":
        known = {"t", "step", "event", "sol", "f", "hp", "donor", "viol", "rung", "promoted"}
        return cls(
            t=float(data["t"]),
            step=int(data["step"]),
            event=str(data["event"]),
            sol=int(data["sol"]),
            f=data.get("f"),
            hp=data.get("hp"),
            donor=data.get("donor"),
            viol=data.get("viol"),
            rung=data.get("rung"),
            promoted=data.get("promoted"),
            extra={k: v for k, v in data.items() if k not in known},
        )
