"""
Logging setup and run-level metric records for the multi-objective PBT toolkit.
"""

import logging
import sys
import time
from functools import wraps
from typing import Any, Callable, Dict, Optional

import structlog

logger = structlog.get_logger()


def configure_logging(level: str = "INFO", fmt: str = "console") -> None:
    """
    Configure stdlib logging and structlog with a shared processor chain.

    Service modules log through `logging.getLogger(__name__)`; the CLI and the
    experiment layer log through structlog. Both end up on stderr so that
    stdout stays reserved for reports.

    Args:
        level: Logging level name
        fmt: "console" for human-readable lines, "json" for one JSON object per line
    """
    renderer = (
        structlog.processors.JSONRenderer()
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    shared_processors = [
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            *shared_processors,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    formatter = structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=shared_processors,
        processors=[
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            renderer,
        ],
    )
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level.upper())

    # matplotlib is chatty at DEBUG about font discovery
    logging.getLogger("matplotlib").setLevel(max(logging.INFO, root.level))


def trace_function(operation_name: Optional[str] = None):
    """
    Decorator logging the wall-clock duration of a call at debug level.

    Args:
        operation_name: Optional custom operation name, defaults to the function name
    """
    def decorator(func: Callable) -> Callable:
        name = operation_name or func.__qualname__

        @wraps(func)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                logger.debug("Operation finished", operation=name,
                             duration_s=round(time.perf_counter() - started, 6))

        return wrapper

    return decorator


def record_run_metrics(
    label: str,
    seed: int,
    n_evaluations: int,
    final_time: float,
    final_hv: Optional[float],
    wall_time: float,
) -> None:
    """
    Record the outcome of one algorithm run.

    Args:
        label: Algorithm label
        seed: Run seed
        n_evaluations: Number of eval events in the run log
        final_time: Final clock value of the run in seconds
        final_hv: Hypervolume of the run's archive front, if computed
        wall_time: Real time taken by the run in seconds
    """
    logger.info(
        "Run finished",
        label=label,
        seed=seed,
        n_evaluations=n_evaluations,
        final_time=final_time,
        final_hv=final_hv,
        wall_time=round(wall_time, 3),
    )


def record_experiment_summary(task: str, rows: Dict[str, Dict[str, Any]]) -> None:
    """
    Record per-algorithm summary statistics of an experiment.

    Args:
        task: Task name
        rows: Mapping label -> summary fields (means, stds, p-values)
    """
    for label, row in rows.items():
        logger.info("Experiment summary", task=task, label=label, **row)
