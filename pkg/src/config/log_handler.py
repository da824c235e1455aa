import logging
import threading
from contextvars import ContextVar
from typing import Dict, List

current_run_id: ContextVar[str | None] = ContextVar("current_run_id", default=None)


class RunLogHandler(logging.Handler):
    """Captures warnings emitted during a run so they can be echoed into its manifest.

    Records are bucketed by the current_run_id ContextVar; records logged while
    no run is active are dropped. Worker threads started through
    contextvars.copy_context() keep the id of the run that spawned them.
    """

    def __init__(self, level: int = logging.WARNING):
        super().__init__(level=level)
        self._buckets: Dict[str, List[str]] = {}
        self._lock = threading.Lock()

    def emit(self, record: logging.LogRecord) -> None:
        run_id = current_run_id.get()
        if run_id is None:
            return
        line = self.format(record)
        with self._lock:
            self._buckets.setdefault(run_id, []).append(line)

    def logs_for(self, run_id: str) -> List[str]:
        with self._lock:
            return list(self._buckets.get(run_id, []))

    def clear(self, run_id: str) -> None:
        with self._lock:
            self._buckets.pop(run_id, None)
