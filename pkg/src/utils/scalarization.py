"""
Scalarization functions and weight sampling used by single-objective PBT baselines.

Every scalarizer maps an objective vector (maximization) and a weight vector to a
real number; larger is better.
"""

from typing import Callable, Dict, Optional, Sequence

import numpy as np

PAREGO_RHO = 0.05


class ScalarizationError(ValueError):
    """Raised when a scalarization is applied to invalid inputs."""
    pass


def _pair(f: Sequence[float], w: Sequence[float]):
    fv = np.asarray(f, dtype=np.float64)
    wv = np.asarray(w, dtype=np.float64)
    if fv.ndim != 1 or fv.shape != wv.shape or fv.size == 0:
        raise ScalarizationError(f"Objective and weight vectors must have equal length: {fv.shape} vs {wv.shape}")
    return fv, wv


def weighted_sum(f: Sequence[float], w: Sequence[float]) -> float:
    """Sum of w_i * f_i."""
    fv, wv = _pair(f, w)
    return float(np.dot(wv, fv))


def chebyshev(f: Sequence[float], w: Sequence[float]) -> float:
    """Minimum of w_i * f_i (maximization form, min rather than max)."""
    fv, wv = _pair(f, w)
    return float(np.min(wv * fv))


def parego(f: Sequence[float], w: Sequence[float], rho: float = PAREGO_RHO) -> float:
    """Augmented Chebyshev: rho * weighted_sum + chebyshev."""
    return rho * weighted_sum(f, w) + chebyshev(f, w)


def golovin(f: Sequence[float], w: Sequence[float], k: Optional[int] = None) -> float:
    """
    Golovin scalarization (min_i max(0, f_i / w_i)) ** K.

    Raises:
        ScalarizationError: If any weight is zero or negative.
    """
    fv, wv = _pair(f, w)
    if np.any(wv <= 0):
        raise ScalarizationError("Golovin scalarization requires strictly positive weights")
    exponent = fv.size if k is None else k
    return float(np.min(np.maximum(0.0, fv / wv)) ** exponent)


def sample_unit_weight(rng: np.random.Generator, k: int) -> np.ndarray:
    """
    Sample a weight vector uniformly from the positive orthant of the unit sphere.

    Coordinates are |N(0, 1)| draws normalized to unit L2 norm; the measure-zero
    all-zero draw is resampled.
    """
    if k < 1:
        raise ScalarizationError(f"Number of objectives must be >= 1, got {k}")
    while True:
        draw = np.abs(rng.standard_normal(k))
        norm = np.linalg.norm(draw)
        if norm > 0 and np.all(draw > 0):
            return draw / norm


def sample_weight_set(rng: np.random.Generator, k: int, size: int) -> np.ndarray:
    """Sample the fixed set W used by max-scalarization, shape (size, k)."""
    return np.stack([sample_unit_weight(rng, k) for _ in range(size)])


SCALARIZERS: Dict[str, Callable[..., float]] = {
    "weighted_sum": weighted_sum,
    "chebyshev": chebyshev,
    "parego": parego,
    "golovin": golovin,
}


def scalarize(f: Sequence[float], w: Sequence[float], kind: str, rho: float = PAREGO_RHO) -> float:
    """Dispatch to the scalarizer named by `kind`."""
    if kind == "parego":
        return parego(f, w, rho)
    if kind == "golovin":
        return golovin(f, w, len(f))
    try:
        return SCALARIZERS[kind](f, w)
    except KeyError:
        raise ScalarizationError(f"Unknown scalarizer: {kind}")


def max_scalarization(
    f: Sequence[float],
    weights: np.ndarray,
    kind: str,
    rho: float = PAREGO_RHO,
) -> float:
    """Maximum over the fixed weight set W of the scalarized value."""
    if len(weights) == 0:
        raise ScalarizationError("Weight set must not be empty")
    return max(scalarize(f, w, kind, rho) for w in weights)
