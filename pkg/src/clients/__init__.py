"""Storage and export clients: checkpoints, run logs, CSV and SVG files."""

from src.clients.checkpoint_store import CheckpointStore, CheckpointStoreError
from src.clients.exporters import (
    ExportError,
    metrics_frame,
    plot_experiment,
    read_metrics_csv,
    write_fronts_csv,
    write_metrics_csv,
    write_summary_csv,
)
from src.clients.run_log import RunLog, RunLogError

__all__ = [
    "CheckpointStore",
    "CheckpointStoreError",
    "ExportError",
    "metrics_frame",
    "plot_experiment",
    "read_metrics_csv",
    "write_fronts_csv",
    "write_metrics_csv",
    "write_summary_csv",
    "RunLog",
    "RunLogError",
]
