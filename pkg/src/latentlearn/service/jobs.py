"""Single-worker job queue for long-running experiment work.

One worker respects the trainer's single-optimizer-owner contract; jobs run
strictly in submission order. Records live in memory; the artifacts they
produce are self-describing on disk.
"""

from __future__ import annotations

import queue
import threading
import time
import traceback
import uuid
from typing import Any, Callable

from .schemas import JobRecord


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S")


class JobManager:
    def __init__(self):
        self._records: dict[str, JobRecord] = {}
        self._queue: "queue.Queue[tuple[str, Callable[[Callable[[str], None]], dict]]]" = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn: Callable[[Callable[[str], None]], dict[str, Any]]) -> JobRecord:
        job_id = uuid.uuid4().hex[:12]
        record = JobRecord(job_id=job_id, kind=kind, status="queued", created_at=_now())
        with self._lock:
            self._records[job_id] = record
        self._queue.put((job_id, fn))
        return record.model_copy(deep=True)

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            record = self._records.get(job_id)
            return record.model_copy(deep=True) if record else None

    def list(self) -> list[JobRecord]:
        with self._lock:
            return [r.model_copy(deep=True) for r in self._records.values()]

    def _progress_cb(self, job_id: str) -> Callable[[str], None]:
        def cb(message: str) -> None:
            with self._lock:
                record = self._records.get(job_id)
                if record is not None:
                    record.progress.append(f"{_now()} {message}")

        return cb

    def _run(self) -> None:
        while True:
            job_id, fn = self._queue.get()
            with self._lock:
                record = self._records[job_id]
                record.status = "running"
            try:
                result = fn(self._progress_cb(job_id))
                with self._lock:
                    record = self._records[job_id]
                    record.status = "done"
                    record.result = result
                    record.finished_at = _now()
            except Exception as exc:  # job errors surface in the record
                with self._lock:
                    record = self._records[job_id]
                    record.status = "error"
                    record.error = f"{type(exc).__name__}: {exc}"
                    record.progress.append(traceback.format_exc(limit=8))
                    record.finished_at = _now()
            finally:
                self._queue.task_done()
