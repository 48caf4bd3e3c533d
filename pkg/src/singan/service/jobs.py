"""In-process training job queue: one worker, bounded backlog.

Training is serialized (a single worker thread owns the device); up to
four jobs may wait in the queue. Job states move strictly
queued -> running -> done | failed.
"""

from __future__ import annotations

import threading
import traceback
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

MAX_QUEUE_DEPTH = 4


class QueueFullError(RuntimeError):
    pass


@dataclass
class Job:
    job_id: str
    work: Callable[["Job"], str]
    state: str = "queued"
    scale: Optional[int] = None
    iter: Optional[int] = None
    num_scales: Optional[int] = None
    iters_per_scale: Optional[int] = None
    model_id: Optional[str] = None
    error: Optional[str] = None
    losses: list[dict] = field(default_factory=list)


class JobManager:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._pending: list[str] = []
        self._lock = threading.Lock()
        self._wake = threading.Condition(self._lock)
        self._worker: Optional[threading.Thread] = None
        self._stop = False

    def _ensure_worker(self) -> None:
        if self._worker is None or not self._worker.is_alive():
            self._worker = threading.Thread(target=self._run, daemon=True)
            self._worker.start()

    def submit(self, work: Callable[[Job], str]) -> Job:
        """Queue a training job; raises QueueFullError beyond the backlog."""
        with self._lock:
            if len(self._pending) >= MAX_QUEUE_DEPTH:
                raise QueueFullError(f"training queue is full ({MAX_QUEUE_DEPTH} pending)")
            job = Job(job_id=uuid.uuid4().hex[:12], work=work)
            self._jobs[job.job_id] = job
            self._pending.append(job.job_id)
            self._ensure_worker()
            self._wake.notify()
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def _run(self) -> None:
        while True:
            with self._lock:
                while not self._pending and not self._stop:
                    self._wake.wait(timeout=1.0)
                if self._stop:
                    return
                job = self._jobs[self._pending.pop(0)]
                job.state = "running"
            try:
                model_id = job.work(job)
                job.model_id = model_id
                job.state = "done"
            except Exception as e:  # job isolation: a bad job must not kill the worker
                job.error = f"{type(e).__name__}: {e}"
                job.state = "failed"
                traceback.print_exc()

    def shutdown(self) -> None:
        with self._lock:
            self._stop = True
            self._wake.notify_all()
        if self._worker is not None:
            self._worker.join(timeout=5.0)
