"""In-memory checkpoint store with optional flushing to disk."""

import logging
import threading
from pathlib import Path
from typing import Dict, Iterator, Optional, Union

logger = logging.getLogger(__name__)


class CheckpointStoreError(Exception):
    """Raised when a checkpoint key is missing or cannot be persisted."""
    pass


class CheckpointStore:
    """
    Keyed store of opaque checkpoint bytes.

    Every key has its own lock, so a writer replacing one slot's checkpoint
    never blocks readers of another slot, and `copy` reads the source and
    writes the target without exposing a half-written value.
    """

    def __init__(self, directory: Optional[Union[str, Path]] = None):
        """
        Initialize the store.

        Args:
            directory: Where `flush` writes `<key>.bin` files; None keeps checkpoints in memory only
        """
        self._data: Dict[str, bytes] = {}
        self._locks: Dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self.directory = Path(directory) if directory is not None else None

    def _lock_for(self, key: str) -> threading.Lock:
        with self._registry_lock:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock

    def put(self, key: str, checkpoint: bytes) -> None:
        with self._lock_for(key):
            self._data[key] = bytes(checkpoint)

    def get(self, key: str) -> bytes:
        """
        Read the checkpoint stored under `key`.

        Raises:
            CheckpointStoreError: If nothing is stored under the key
        """
        with self._lock_for(key):
            try:
                return self._data[key]
            except KeyError:
                raise CheckpointStoreError(f"No checkpoint stored under '{key}'")

    def copy(self, source: str, target: str) -> bytes:
        """Copy the bytes under `source` to `target`, returning them."""
        checkpoint = self.get(source)
        self.put(target, checkpoint)
        return checkpoint

    def __contains__(self, key: str) -> bool:
        with self._registry_lock:
            return key in self._data

    def __len__(self) -> int:
        with self._registry_lock:
            return len(self._data)

    def keys(self) -> Iterator[str]:
        with self._registry_lock:
            return iter(sorted(self._data))

    def flush(self) -> int:
        """
        Write every checkpoint to `<directory>/<key>.bin`.

        Returns:
            Number of files written (0 when the store has no directory)

        Raises:
            CheckpointStoreError: If a file cannot be written
        """
        if self.directory is None:
            return 0

        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            written = 0
            for key in self.keys():
                (self.directory / f"{key}.bin").write_bytes(self.get(key))
                written += 1
        except OSError as e:
            logger.error(f"Failed to flush checkpoints to {self.directory}: {e}")
            raise CheckpointStoreError(f"Failed to flush checkpoints: {e}")

        logger.debug(f"Flushed {written} checkpoints to {self.directory}")
        return written
