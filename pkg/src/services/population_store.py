"""Thread-safe population state shared by the engine's workers."""

import logging
import threading
from typing import Any, Dict, Iterable, List

from src.models.internal_models import Solution

logger = logging.getLogger(__name__)


class PopulationStore:
    """
    Holds the current population.

    Readers get a consistent snapshot of every member; writers update one
    member at a time under the same lock.
    """

    def __init__(self, solutions: Iterable[Solution] = ()):
        self._members: Dict[int, Solution] = {}
        self._lock = threading.RLock()
        for solution in solutions:
            self.add(solution)

    def add(self, solution: Solution) -> None:
        with self._lock:
            if solution.id in self._members:
                raise ValueError(f"Solution {solution.id} already in population")
            self._members[solution.id] = solution.snapshot()

    def get(self, solution_id: int) -> Solution:
        with self._lock:
            return self._members[solution_id].snapshot()

    def update(self, solution_id: int, **fields: Any) -> Solution:
        """Atomically replace fields of one member, returning the new snapshot."""
        with self._lock:
            member = self._members[solution_id]
            for name, value in fields.items():
                if not hasattr(member, name):
                    raise AttributeError(f"Solution has no field '{name}'")
                setattr(member, name, value)
            return member.snapshot()

    def put(self, solution: Solution) -> None:
        with self._lock:
            if solution.id not in self._members:
                raise KeyError(f"Solution {solution.id} not in population")
            self._members[solution.id] = solution.snapshot()

    def snapshot(self) -> List[Solution]:
        """Copies of all members, ordered by id."""
        with self._lock:
            return [self._members[i].snapshot() for i in sorted(self._members)]

    def __len__(self) -> int:
        with self._lock:
            return len(self._members)
