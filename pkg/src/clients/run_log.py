"""Append-only run event log with JSONL persistence."""

import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Union

from src.models.internal_models import RunEvent

logger = logging.getLogger(__name__)


class RunLogError(Exception):
    """Raised when a run log file cannot be read or written."""
    pass


class RunLog:
    """
    Ordered stream of run events.

    Appends are serialized under a lock; readers get copies so that a report
    can be computed while a run is still appending.
    """

    def __init__(self, run_id: str = "", events: Optional[Iterable[RunEvent]] = None):
        self.run_id = run_id
        self._events: List[RunEvent] = list(events or [])
        self._lock = threading.Lock()

    def append(self, event: RunEvent) -> None:
        with self._lock:
            self._events.append(event)

    def log(self, t: float, step: int, event: str, sol: int, **fields: Any) -> RunEvent:
        """Build and append an event; unknown keyword fields go to `extra`."""
        known = {k: fields.pop(k) for k in ("f", "hp", "donor", "viol", "rung", "promoted") if k in fields}
        entry = RunEvent(t=t, step=step, event=event, sol=sol, extra=fields, **known)
        self.append(entry)
        return entry

    @property
    def events(self) -> List[RunEvent]:
        with self._lock:
            return list(self._events)

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)

    def __iter__(self) -> Iterator[RunEvent]:
        return iter(self.events)

    def evaluations(self) -> List[RunEvent]:
        """Eval events in append order."""
        return [e for e in self.events if e.event == "eval"]

    def of_kind(self, kind: str) -> List[RunEvent]:
        return [e for e in self.events if e.event == kind]

    @property
    def final_time(self) -> float:
        events = self.events
        return max((e.t for e in events), default=0.0)

    def lineages(self) -> List[int]:
        """Distinct solution ids that produced at least one evaluation, in first-seen order."""
        seen: Dict[int, None] = {}
        for event in self.evaluations():
            seen.setdefault(event.sol, None)
        return list(seen)

    def dumps(self) -> str:
        """JSONL text, one event per line, stable key order."""
        lines = [json.dumps(e.to_dict(), separators=(", ", ": "), allow_nan=False) for e in self.events]
        return "".join(line + "\n" for line in lines)

    def write_jsonl(self, path: Union[str, Path]) -> Path:
        """
        Persist the log as JSONL.

        Raises:
            RunLogError: If the file cannot be written or an event holds NaN/inf
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.dumps(), encoding="utf-8")
        except (OSError, ValueError) as e:
            logger.error(f"Failed to write run log {path}: {e}")
            raise RunLogError(f"Failed to write run log {path}: {e}")
        return path

    @classmethod
    def read_jsonl(cls, path: Union[str, Path], run_id: Optional[str] = None) -> "RunLog":
        """
        Load a log written by `write_jsonl`.

        Raises:
            RunLogError: On unreadable files or malformed lines
        """
        path = Path(path)
        events: List[RunEvent] = []
        try:
            with path.open(encoding="utf-8") as handle:
                for line_no, line in enumerate(handle, start=1):
                    if not line.strip():
                        continue
                    try:
                        events.append(RunEvent.from_dict(json.loads(line)))
                    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                        raise RunLogError(f"{path}:{line_no}: malformed event: {e}")
        except OSError as e:
            raise RunLogError(f"Failed to read run log {path}: {e}")
        return cls(run_id=run_id if run_id is not None else path.stem, events=events)
