"""CSV and SVG exports of experiment metrics and fronts."""

import logging
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from src.utils.indicators import TracePoint, log_gap  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

METRICS_COLUMNS = ["time_s", "hv", "log_gap", "cum_steps"]

# Stable ids and no timestamp, so reruns write identical SVG files
plt.rcParams["svg.hashsalt"] = "mo-pbt"
plt.rcParams["svg.fonttype"] = "none"


class ExportError(Exception):
    """Raised when an export file cannot be written or read."""
    pass


def _write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise ExportError(f"Failed to write {path}: {e}")
    return path


def metrics_frame(trace: Sequence[TracePoint], hv_star: float) -> pd.DataFrame:
    """Hypervolume trace as a `time_s,hv,log_gap,cum_steps` table."""
    return pd.DataFrame(
        [(p.time, p.hv, log_gap(hv_star, p.hv), p.cum_steps) for p in trace],
        columns=METRICS_COLUMNS,
    )


def write_metrics_csv(path: PathLike, trace: Sequence[TracePoint], hv_star: float) -> Path:
    return _write_csv(metrics_frame(trace, hv_star), path)


def read_metrics_csv(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise ExportError(f"Failed to read metrics {path}: {e}")


def write_fronts_csv(path: PathLike, rows: Sequence[Tuple[str, float, int, Sequence[float]]], k: int) -> Path:
    """
    Write non-dominated points with provenance.

    Args:
        path: Target file
        rows: (run id, time, step, objective vector) per point
        k: Number of objectives, for the f1..fK header
    """
    columns = ["run_id", "time_s", "step"] + [f"f{i + 1}" for i in range(k)]
    frame = pd.DataFrame([(run_id, t, step, *f) for run_id, t, step, f in rows], columns=columns)
    return _write_csv(frame, path)


def write_summary_csv(path: PathLike, summary: pd.DataFrame) -> Path:
    return _write_csv(summary, path)


def plot_experiment(
    path: PathLike,
    curves: Mapping[str, List[pd.DataFrame]],
    objective_names: Sequence[str],
    fronts: Optional[Mapping[str, Sequence[Sequence[float]]]] = None,
    title: str = "",
) -> Path:
    """
    Emit one SVG: log-gap against cumulative steps and against time per
    algorithm (median over seeds), plus one 2D front per algorithm when given.

    Args:
        path: Target .svg file
        curves: Label -> metrics tables of that algorithm's runs
        objective_names: Axis labels for the front panel
        fronts: Label -> front points of the run to show (K=2 only)
        title: Figure title
    """
    n_panels = 3 if fronts else 2
    fig, axes = plt.subplots(1, n_panels, figsize=(5 * n_panels, 4))

    for label, tables in curves.items():
        for ax, x in ((axes[0], "cum_steps"), (axes[1], "time_s")):
            median = _median_curve(tables, x)
            if not median.empty:
                ax.step(median[x], median["log_gap"], where="post", label=label)

    axes[0].set_xlabel("cumulative training steps")
    axes[1].set_xlabel("time (s)")
    for ax in axes[:2]:
        ax.set_ylabel("log10 hypervolume gap")
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize="small")

    if fronts:
        ax = axes[2]
        for label, points in fronts.items():
            ordered = sorted(points)
            if ordered:
                xs, ys = zip(*ordered)
                ax.plot(xs, ys, marker="o", markersize=3, linestyle="-", label=label)
        ax.set_xlabel(objective_names[0])
        ax.set_ylabel(objective_names[1])
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")

    if title:
        fig.suptitle(title)
    fig.tight_layout()

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ExportError(f"Failed to write plot {path}: {e}")
    finally:
        plt.close(fig)
    return path


def _median_curve(tables: Sequence[pd.DataFrame], x: str) -> pd.DataFrame:
    """Median log-gap over runs on the union of their x values (step-wise carried forward)."""
    tables = [t for t in tables if not t.empty]
    if not tables:
        return pd.DataFrame(columns=[x, "log_gap"])
    grid = sorted(set().union(*(t[x].tolist() for t in tables)))
    aligned = [
        t.drop_duplicates(x, keep="last").set_index(x)["log_gap"].reindex(grid).ffill()
        for t in tables
    ]
    median = pd.concat(aligned, axis=1).median(axis=1, skipna=True)
    return pd.DataFrame({x: grid, "log_gap": median.to_numpy()})

