"""
Pareto-front extraction and quality indicators.

This module provides:
- Pareto filtering and the pooled front archive
- The reference-point rule (per-objective minimum minus a fraction of the range)
- Exact hypervolume for K <= 3
- Hypervolume traces and log-gap curves over a run
- The sector coverage metric for bi-objective fronts
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.models.internal_models import ObjectiveVector, RunEvent, as_objective_vector

logger = logging.getLogger(__name__)

REFERENCE_RHO = 0.1
ZERO_RANGE_EPSILON = 1e-9
GAP_FLOOR = 1e-12
COVERAGE_SECTORS = 360


class IndicatorError(ValueError):
    """Raised when an indicator cannot be computed on the given inputs."""
    pass


class UnsupportedObjectiveCountError(IndicatorError):
    """Raised for objective counts an indicator does not define."""
    pass


def _as_points(points: Sequence[Sequence[float]]) -> np.ndarray:
    matrix = np.asarray(points, dtype=np.float64)
    if matrix.size == 0:
        return matrix.reshape(0, 0)
    if matrix.ndim != 2:
        raise IndicatorError(f"Expected (n, K) points, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise IndicatorError("Points must contain only finite values")
    return matrix


def _non_dominated_mask(matrix: np.ndarray) -> np.ndarray:
    """
    Mask of the rows no other row dominates. Rows must be pairwise distinct.

    Rows are visited in descending lexicographic order, so a dominating row is
    always visited before the rows it dominates and kept rows are never removed.
    K=2 reduces to a sweep against the running maximum of f2.
    """
    n, k = matrix.shape
    order = np.lexsort(-matrix.T[::-1])
    mask = np.zeros(n, dtype=bool)
    if k == 1:
        mask[order[0]] = True
        return mask
    if k == 2:
        f2 = matrix[order, 1]
        best_before = np.concatenate(([-np.inf], np.maximum.accumulate(f2)[:-1]))
        mask[order[f2 > best_before]] = True
        return mask

    kept = np.empty((n, k))
    n_kept = 0
    for i in order:
        row = matrix[i]
        if np.any(np.all(kept[:n_kept] >= row, axis=1)):
            continue
        kept[n_kept] = row
        n_kept += 1
        mask[i] = True
    return mask


def pareto_filter(points: Sequence[Sequence[float]]) -> List[ObjectiveVector]:
    """
    Return the non-dominated points, deduplicated, in order of first appearance.
    """
    matrix = _as_points(points)
    if matrix.size == 0:
        return []
    _, first = np.unique(matrix, axis=0, return_index=True)
    unique = matrix[np.sort(first)]
    mask = _non_dominated_mask(unique)
    return [as_objective_vector(row) for row in unique[mask]]


@dataclass
class FrontArchive:
    """Append-only store of archived points with the run, time and step they came from."""

    points: List[ObjectiveVector] = field(default_factory=list)
    provenance: List[Tuple[str, float, int]] = field(default_factory=list)  # (run id, t, step)

    def add(self, point: Sequence[float], run_id: str, t: float, step: int) -> None:
        self.points.append(as_objective_vector(point))
        self.provenance.append((run_id, float(t), int(step)))

    def non_dominated(self) -> List[ObjectiveVector]:
        return pareto_filter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def compute_reference_point(
    archive: "FrontArchive | Sequence[Sequence[float]]",
    rho: float = REFERENCE_RHO,
) -> ObjectiveVector:
    """
    Reference point r_i = min_i - rho * (max_i - min_i) over the non-dominated
    points of the archive. Coordinates with zero range are lowered by an extra
    1e-9 so that r stays strictly worse than every point.

    Raises:
        IndicatorError: If the archive is empty.
    """
    points = archive.points if isinstance(archive, FrontArchive) else archive
    front = pareto_filter(points) if len(points) else []
    if not front:
        raise IndicatorError("Cannot compute a reference point from an empty archive")

    matrix = np.asarray(front)
    low = matrix.min(axis=0)
    span = matrix.max(axis=0) - low
    reference = low - rho * span
    reference[span == 0] -= ZERO_RANGE_EPSILON
    return as_objective_vector(reference)


def _hv_2d(shifted: np.ndarray) -> float:
    order = np.lexsort((-shifted[:, 1], -shifted[:, 0]))
    xs, ys = shifted[order, 0], shifted[order, 1]
    running = np.maximum.accumulate(ys)
    previous = np.concatenate(([0.0], running[:-1]))
    return float(np.sum(xs * (running - previous)))


def _hv_3d(shifted: np.ndarray) -> float:
    levels = np.unique(shifted[:, 2])[::-1]
    volume = 0.0
    for i, z in enumerate(levels):
        below = levels[i + 1] if i + 1 < len(levels) else 0.0
        slab = shifted[shifted[:, 2] >= z]
        volume += _hv_2d(slab[:, :2]) * (z - below)
    return volume


def hypervolume(points: Sequence[Sequence[float]], reference: Sequence[float]) -> float:
    """
    Exact dominated hypervolume of a point set with respect to a reference point.

    Points that do not strictly dominate the reference point in every coordinate
    contribute nothing. 2D uses a sort-and-sweep, 3D sweeps over z slices.

    Raises:
        UnsupportedObjectiveCountError: For K > 3.
    """
    ref = np.asarray(reference, dtype=np.float64)
    k = ref.size
    if k > 3:
        raise UnsupportedObjectiveCountError(f"Exact hypervolume is only supported for K <= 3, got K={k}")

    matrix = _as_points(points)
    if matrix.size == 0:
        return 0.0
    if matrix.shape[1] != k:
        raise IndicatorError(f"Points have K={matrix.shape[1]} but reference point has K={k}")

    shifted = matrix - ref
    shifted = shifted[np.all(shifted > 0, axis=1)]
    if shifted.shape[0] == 0:
        return 0.0
    if k == 1:
        return float(shifted.max())
    if k == 2:
        return float(_hv_2d(shifted))
    return float(_hv_3d(shifted))


@dataclass(frozen=True)
class TracePoint:
    """Hypervolume of a run's non-dominated set at one evaluation timestamp."""

    time: float
    hv: float
    cum_steps: int


def _insert_into_front(front: np.ndarray, point: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Add a point to a mutually non-dominated set.

    Returns:
        (new front, whether the front changed)
    """
    if front.shape[0] and np.any(np.all(front >= point, axis=1)):
        return front, False
    survivors = front[~np.all(front <= point, axis=1)]
    return np.vstack([survivors, point]), True


def hypervolume_trace(events: Iterable[RunEvent], reference: Sequence[float]) -> List[TracePoint]:
    """
    Hypervolume of the run's non-dominated set so far at every distinct
    evaluation timestamp, plus the cumulative number of trained steps.
    """
    k = len(reference)
    front = np.empty((0, k))
    hv = 0.0
    changed = False
    last_step = {}
    cum_steps = 0
    trace: List[TracePoint] = []
    pending_time: Optional[float] = None

    def close(t: float) -> None:
        nonlocal hv, changed
        if changed:
            hv = hypervolume(front, reference)
            changed = False
        trace.append(TracePoint(t, hv, cum_steps))

    for event in sorted((e for e in events if e.event == "eval" and e.f is not None), key=lambda e: e.t):
        if pending_time is not None and event.t != pending_time:
            close(pending_time)
        pending_time = event.t
        cum_steps += max(0, event.step - last_step.get(event.sol, 0))
        last_step[event.sol] = event.step
        point = np.asarray(event.f, dtype=np.float64)
        if point.shape != (k,):
            raise IndicatorError(f"Evaluation of solution {event.sol} has K={point.size}, reference has K={k}")
        front, inserted = _insert_into_front(front, point)
        changed = changed or inserted

    if pending_time is not None:
        close(pending_time)
    return trace


def log_gap(hv_star: float, hv: float) -> float:
    """log10 of the hypervolume gap, floored at 1e-12."""
    return math.log10(max(hv_star - hv, GAP_FLOOR))


def log_hv_gap_curve(
    events: Iterable[RunEvent],
    hv_star: float,
    reference: Sequence[float],
) -> List[Tuple[float, float]]:
    """Curve of (time, log10(HV* - HV_t)) over a run's evaluations."""
    return [(p.time, log_gap(hv_star, p.hv)) for p in hypervolume_trace(events, reference)]


def coverage(
    points: Sequence[Sequence[float]],
    reference: Sequence[float],
    sectors: int = COVERAGE_SECTORS,
) -> float:
    """
    Fraction of the M+1 equal-angle sectors of the quadrant anchored at the
    reference point that contain at least one non-dominated point.

    Points exactly on a sector boundary count towards the lower-angle sector.

    Raises:
        UnsupportedObjectiveCountError: If K != 2.
    """
    ref = np.asarray(reference, dtype=np.float64)
    if ref.size != 2:
        raise UnsupportedObjectiveCountError(f"Coverage is defined for K=2 only, got K={ref.size}")
    if sectors < 0:
        raise IndicatorError(f"Number of sector lines must be >= 0, got {sectors}")

    front = pareto_filter(points) if len(points) else []
    shifted = np.asarray(front, dtype=np.float64).reshape(-1, 2) - ref
    shifted = shifted[np.all(shifted > 0, axis=1)]
    if shifted.shape[0] == 0:
        return 0.0

    n_sectors = sectors + 1
    width = 90.0 / n_sectors
    angles = np.degrees(np.arctan2(shifted[:, 1], shifted[:, 0]))
    index = np.clip(np.ceil(angles / width) - 1, 0, n_sectors - 1).astype(int)
    return len(set(index.tolist())) / n_sectors
