"""Operations behind both the HTTP API and the local CLI path."""
from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor

from .config import ExperimentConfig
from .experiments import check_equivalence, estimate_cost, run_incremental, run_train
from .schemas import CostRequest, CostResponse, EquivalenceRequest, EquivalenceResponse, JobStatus

log = logging.getLogger(__name__)


def cost(req: CostRequest) -> CostResponse:
    return CostResponse(**estimate_cost(req.p, req.q, req.mode))


def equivalence(req: EquivalenceRequest) -> EquivalenceResponse:
    rep = check_equivalence(req.p, req.q, req.trials, req.seed)
    return EquivalenceResponse(passed=rep.passed, trials=rep.trials,
                               first_divergence=rep.first_divergence, detail=rep.detail)


def train(cfg: ExperimentConfig) -> dict:
    return run_train(cfg)


def incremental(cfg: ExperimentConfig) -> dict:
    return run_incremental(cfg)


class JobRunner:
    """Runs experiments one at a time on a worker thread (online learning is
    sequential anyway; this keeps the API responsive)."""

    def __init__(self):
        self._pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="tnnsim-job")
        self._jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, cfg: ExperimentConfig) -> JobStatus:
        job = JobStatus(id=uuid.uuid4().hex[:12], kind=kind, state="queued", out_dir=cfg.out_dir)
        with self._lock:
            self._jobs[job.id] = job
        self._pool.submit(self._run, job.id, kind, cfg)
        return job

    def _run(self, job_id: str, kind: str, cfg: ExperimentConfig):
        self._set(job_id, state="running")
        try:
            summary = train(cfg) if kind == "train" else incremental(cfg)
        except Exception as exc:  # reported through the job status
            log.exception("job %s failed", job_id)
            self._set(job_id, state="failed", error=f"{type(exc).__name__}: {exc}")
        else:
            self._set(job_id, state="done", summary=summary)

    def _set(self, job_id: str, **fields):
        with self._lock:
            self._jobs[job_id] = self._jobs[job_id].model_copy(update=fields)

    def get(self, job_id: str) -> JobStatus | None:
        with self._lock:
            return self._jobs.get(job_id)

    def list(self) -> list[JobStatus]:
        with self._lock:
            return list(self._jobs.values())

    def shutdown(self, wait: bool = True):
        self._pool.shutdown(wait=wait)
