"""Background job bookkeeping for the long-running computations.

Jobs run on a shared thread pool; state only ever moves forward
(queued -> running -> done | failed) and the result id is written
exactly once, so readers never need a lock for a consistent snapshot.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

STATES = ("queued", "running", "done", "failed")


@dataclass
class Job:
    id: str
    kind: str
    state: str = "queued"
    progress: float = 0.0
    result: str | None = None
    error: str | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def advance(self, state: str) -> None:
        with self._lock:
            if STATES.index(state) < STATES.index(self.state):
                raise RuntimeError(f"job state cannot move {self.state} -> {state}")
            self.state = state

    def snapshot(self) -> dict:
        with self._lock:
            return {"id": self.id, "kind": self.kind, "state": self.state,
                    "progress": round(self.progress, 6), "result": self.result,
                    "error": self.error}


class JobManager:
    def __init__(self, workers: int = 2):
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, work: Callable[[Callable[[float], None]], str]) -> Job:
        """Queue ``work(report)``; it must return a result id and may
        call ``report(fraction)`` as it goes."""
        job = Job(uuid.uuid4().hex[:12], kind)
        with self._lock:
            self._jobs[job.id] = job

        def report(fraction: float) -> None:
            with job._lock:
                job.progress = max(job.progress, min(1.0, fraction))

        def run():
            job.advance("running")
            try:
                result = work(report)
            except Exception as exc:  # surfaced via the job, not the log
                with job._lock:
                    job.error = f"{type(exc).__name__}: {exc}"
                job.advance("failed")
                return
            with job._lock:
                job.result = result
                job.progress = 1.0
            job.advance("done")

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Job:
        with self._lock:
            return self._jobs[job_id]

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
