"""
Objective-space primitives: domination, non-dominated sorting and the
within-front ranking criteria used by population ranking and rung promotion.

All functions follow the maximization convention and break ties by the
lowest original index so that sorting is reproducible.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.models.internal_models import ConstraintStatus, FrontPartition

logger = logging.getLogger(__name__)


class ContractViolationError(ValueError):
    """Raised when inputs to an objective-space primitive break its contract."""
    pass


def _as_matrix(objectives: Sequence[Sequence[float]]) -> np.ndarray:
    """Validate a population of objective vectors and return an (n, K) array."""
    if len(objectives) == 0:
        raise ContractViolationError("Population must not be empty")
    try:
        matrix = np.asarray(objectives, dtype=np.float64)
    except ValueError as e:
        raise ContractViolationError(f"Objective vectors must have uniform length: {e}")
    if matrix.ndim != 2 or matrix.shape[1] < 1:
        raise ContractViolationError(f"Expected (n, K) objectives with K >= 1, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise ContractViolationError("Objective vectors must contain only finite values")
    return matrix


def _check_pair(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or va.shape != vb.shape or va.size == 0:
        raise ContractViolationError(f"Objective vectors must have equal nonzero length: {va.shape} vs {vb.shape}")
    if not (np.isfinite(va).all() and np.isfinite(vb).all()):
        raise ContractViolationError("Objective vectors must contain only finite values")
    return va, vb


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """
    Pareto domination under maximization.

    Returns:
        True iff a is at least as good as b everywhere and strictly better somewhere.

    Raises:
        ContractViolationError: On length mismatch or non-finite entries.
    """
    va, vb = _check_pair(a, b)
    return bool(np.all(va >= vb) and np.any(va > vb))


def constraint_dominates(
    a: Sequence[float],
    a_status: ConstraintStatus,
    b: Sequence[float],
    b_status: ConstraintStatus,
) -> bool:
    """
    Constraint domination: feasible beats infeasible, two feasible solutions
    compare by plain domination, two infeasible ones by strictly smaller violation.
    """
    va, vb = _check_pair(a, b)
    if a_status.feasible and not b_status.feasible:
        return True
    if not a_status.feasible and b_status.feasible:
        return False
    if a_status.feasible and b_status.feasible:
        return bool(np.all(va >= vb) and np.any(va > vb))
    return a_status.violation < b_status.violation


def _domination_matrix(
    matrix: np.ndarray, constraints: Optional[Sequence[ConstraintStatus]]
) -> np.ndarray:
    """Boolean (n, n) matrix, entry [i, j] true iff i dominates j."""
    geq = np.all(matrix[:, None, :] >= matrix[None, :, :], axis=2)
    gt = np.any(matrix[:, None, :] > matrix[None, :, :], axis=2)
    plain = geq & gt
    if constraints is None:
        return plain

    if len(constraints) != matrix.shape[0]:
        raise ContractViolationError(
            f"Got {len(constraints)} constraint statuses for {matrix.shape[0]} solutions"
        )
    feasible = np.array([c.feasible for c in constraints])
    violation = np.array([c.violation for c in constraints], dtype=np.float64)
    both_feasible = feasible[:, None] & feasible[None, :]
    both_infeasible = ~feasible[:, None] & ~feasible[None, :]
    result = np.where(both_feasible, plain, False)
    result |= feasible[:, None] & ~feasible[None, :]
    result |= both_infeasible & (violation[:, None] < violation[None, :])
    return result


def non_dominated_sort(
    objectives: Sequence[Sequence[float]],
    constraints: Optional[Sequence[ConstraintStatus]] = None,
) -> FrontPartition:
    """
    Partition a population into successive non-dominated fronts.

    Args:
        objectives: Objective vectors of the population (uniform K).
        constraints: Optional per-solution constraint status; when given,
            constraint domination replaces plain domination.

    Returns:
        FrontPartition with indices ascending inside every front.

    Raises:
        ContractViolationError: On empty input, ragged vectors or non-finite values.
    """
    matrix = _as_matrix(objectives)
    dominated_by = _domination_matrix(matrix, constraints)

    n = matrix.shape[0]
    remaining_dominators = dominated_by.sum(axis=0)
    assigned = np.zeros(n, dtype=bool)
    fronts: List[Tuple[int, ...]] = []

    while not assigned.all():
        current = np.flatnonzero((remaining_dominators == 0) & ~assigned)
        if current.size == 0:
            # Only reachable with a cyclic relation, which neither domination variant produces.
            raise ContractViolationError("Domination relation contains a cycle")
        assigned[current] = True
        remaining_dominators -= dominated_by[current].sum(axis=0)
        fronts.append(tuple(int(i) for i in current))

    return FrontPartition(fronts=tuple(fronts))


def _validate_partition(fronts: FrontPartition, n: int) -> None:
    flat = [idx for front in fronts.fronts for idx in front]
    if sorted(flat) != list(range(n)):
        raise ContractViolationError(f"Partition does not cover indices 0..{n - 1} exactly once")


def _normalized(matrix: np.ndarray) -> np.ndarray:
    low = matrix.min(axis=0)
    span = matrix.max(axis=0) - low
    span[span == 0] = 1.0
    return (matrix - low) / span


def greedy_scattered_subset_order(
    fronts: FrontPartition,
    objectives: Sequence[Sequence[float]],
    normalize: bool = False,
) -> List[int]:
    """
    Rank a population front by front with greedy scattered subset selection.

    The first index is the largest-f1 member of F^1. After that, inside each
    front, the next index is the one whose minimum Euclidean distance to all
    already ranked solutions (from every earlier front as well) is largest.

    Args:
        fronts: Partition produced by non_dominated_sort.
        objectives: Objective vectors the partition was computed on.
        normalize: Min-max normalize objectives before measuring distances.

    Returns:
        Permutation of population indices, best first.
    """
    matrix = _as_matrix(objectives)
    n = matrix.shape[0]
    _validate_partition(fronts, n)
    points = _normalized(matrix) if normalize else matrix

    distances = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    order: List[int] = []
    min_dist = np.full(n, np.inf)

    for rank, front in enumerate(fronts.fronts):
        candidates = sorted(front)
        if rank == 0:
            first_values = matrix[candidates, 0]
            first = candidates[int(np.argmax(first_values))]
            order.append(first)
            min_dist = np.minimum(min_dist, distances[first])
            candidates.remove(first)

        while candidates:
            candidate_dist = min_dist[candidates]
            chosen = candidates[int(np.argmax(candidate_dist))]
            order.append(chosen)
            min_dist = np.minimum(min_dist, distances[chosen])
            candidates.remove(chosen)

    return order


def crowding_distances(front: Sequence[int], objectives: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance for the members of one front, aligned with `front`."""
    size = len(front)
    if size <= 2:
        return np.full(size, np.inf)

    values = objectives[list(front)]
    dist = np.zeros(size)
    for obj in range(values.shape[1]):
        column = values[:, obj]
        order = np.argsort(column, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = column[order[-1]] - column[order[0]]
        if span == 0:
            continue
        gaps = (column[order[2:]] - column[order[:-2]]) / span
        dist[order[1:-1]] += gaps
    return dist


def crowding_distance_order(
    fronts: FrontPartition,
    objectives: Sequence[Sequence[float]],
) -> List[int]:
    """Rank fronts in order, descending crowding distance inside each front."""
    matrix = _as_matrix(objectives)
    _validate_partition(fronts, matrix.shape[0])

    order: List[int] = []
    for front in fronts.fronts:
        members = sorted(front)
        dist = crowding_distances(members, matrix)
        # lexsort: last key is primary -> descending distance, then ascending index
        ranked = np.lexsort((np.asarray(members), -dist))
        order.extend(members[i] for i in ranked)
    return order
