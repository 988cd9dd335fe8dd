from __future__ import annotations

from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException

from . import __version__, service
from .config import ExperimentConfig
from .schemas import CostRequest, CostResponse, EquivalenceRequest, EquivalenceResponse, JobStatus


def create_app(runner: service.JobRunner | None = None) -> FastAPI:
    jobs = runner or service.JobRunner()

    @asynccontextmanager
    async def lifespan(_app):
        yield
        jobs.shutdown(wait=False)

    app = FastAPI(title="tnnsim", version=__version__, lifespan=lifespan)
    app.state.jobs = jobs

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/cost", response_model=CostResponse)
    def cost(req: CostRequest):
        return service.cost(req)

    @app.post("/equivalence", response_model=EquivalenceResponse)
    def equivalence(req: EquivalenceRequest):
        return service.equivalence(req)

    @app.post("/runs/train", response_model=JobStatus, status_code=202)
    def start_train(cfg: ExperimentConfig):
        return jobs.submit("train", cfg)

    @app.post("/runs/incremental", response_model=JobStatus, status_code=202)
    def start_incremental(cfg: ExperimentConfig):
        return jobs.submit("incremental", cfg)

    @app.get("/runs", response_model=list[JobStatus])
    def list_runs():
        return jobs.list()

    @app.get("/runs/{job_id}", response_model=JobStatus)
    def get_run(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no run {job_id}")
        return job

    return app


app = create_app()
