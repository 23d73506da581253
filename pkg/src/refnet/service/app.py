"""FastAPI service wrapping the pipeline.

Serves the explorer's static assets and ``GET /bundle.json`` (the explorer
itself is fully client-side), plus a small JSON API so thin clients can
inspect datasets and trigger pipeline runs in the service workspace.
"""

from __future__ import annotations

import dataclasses
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..bundle import load_bundle
from ..errors import IntegrityError, StageError, UsageError
from ..pipeline import STAGES, PipelineConfig, run_pipeline
from .schemas import (
    DatasetInfo,
    DatasetListResponse,
    DatasetMetricsResponse,
    HealthResponse,
    RunRequest,
    RunResponse,
)

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>refnet</title></head>
<body>
<h1>refnet service</h1>
<p>No explorer build found. Build the frontend and point --static-dir at it,
or use the JSON surface directly:</p>
<ul>
<li><a href="/bundle.json">/bundle.json</a></li>
<li><a href="/api/datasets">/api/datasets</a></li>
<li><a href="/api/health">/api/health</a></li>
</ul>
</body></html>
"""


def create_app(config: PipelineConfig) -> FastAPI:
    app = FastAPI(title="refnet", version=__version__)
    run_lock = threading.Lock()

    @app.exception_handler(UsageError)
    async def usage_handler(request: Request, exc: UsageError):
        return JSONResponse(status_code=400, content={"detail": str(exc), "error_kind": "usage"})

    @app.exception_handler(StageError)
    async def stage_handler(request: Request, exc: StageError):
        return JSONResponse(status_code=424, content={"detail": str(exc), "error_kind": "stage"})

    @app.exception_handler(IntegrityError)
    async def integrity_handler(request: Request, exc: IntegrityError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "error_kind": "integrity"})

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/api/datasets", response_model=DatasetListResponse)
    def datasets() -> DatasetListResponse:
        bundle = _bundle_or_424(config)
        infos = [
            DatasetInfo(
                dataset_id=d["dataset_id"],
                label=d["label"],
                node_count=len(d["nodes"]),
                edge_count=len(d["edges"]),
                total_weight=sum(e["weight"] for e in d["edges"]),
            )
            for d in bundle["datasets"]
        ]
        return DatasetListResponse(generated_at=bundle["meta"]["generated_at"], datasets=infos)

    @app.get("/api/datasets/{dataset_id}/metrics", response_model=DatasetMetricsResponse)
    def dataset_metrics(dataset_id: str) -> DatasetMetricsResponse:
        path = config.metrics_json
        if not path.exists():
            raise StageError(f"missing prerequisite artifact {path}; run the 'analyze' stage first")
        payload = json.loads(path.read_text(encoding="utf-8"))
        data = payload["datasets"].get(dataset_id)
        if data is None:
            return JSONResponse(  # type: ignore[return-value]
                status_code=404, content={"detail": f"unknown dataset {dataset_id!r}", "error_kind": "usage"}
            )
        return DatasetMetricsResponse(
            dataset_id=dataset_id,
            nodes=data["nodes"],
            reciprocity=data.get("reciprocity"),
            modularity=data.get("modularity"),
            top_shares=data.get("top_shares", {}),
        )

    @app.post("/api/pipeline/run", response_model=RunResponse)
    def pipeline_run(request: RunRequest) -> RunResponse:
        unknown = [s for s in request.stages if s not in STAGES]
        if unknown:
            raise UsageError(f"unknown stages {unknown}; valid: {list(STAGES)}")
        if not run_lock.acquire(blocking=False):
            return JSONResponse(  # type: ignore[return-value]
                status_code=409, content={"detail": "a pipeline run is already in progress", "error_kind": "busy"}
            )
        try:
            effective = _apply_overrides(config, request)
            results = run_pipeline(effective, request.stages)
        finally:
            run_lock.release()
        artifacts = [str(p) for paths in results.values() for p in paths]
        return RunResponse(status="ok", stages=list(results), artifacts=artifacts)

    @app.get("/bundle.json")
    def bundle_json():
        if not config.bundle_json.exists():
            raise StageError(f"missing prerequisite artifact {config.bundle_json}; run the 'export' stage first")
        return FileResponse(config.bundle_json, media_type="application/json")

    @app.get("/", response_class=HTMLResponse)
    def index() -> HTMLResponse:
        static_dir = config.static_dir
        if static_dir and (Path(static_dir) / "index.html").exists():
            return HTMLResponse((Path(static_dir) / "index.html").read_text(encoding="utf-8"))
        return HTMLResponse(_FALLBACK_PAGE)

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="static")

    return app


def _bundle_or_424(config: PipelineConfig) -> dict:
    if not config.bundle_json.exists():
        raise StageError(f"missing prerequisite artifact {config.bundle_json}; run the 'export' stage first")
    return load_bundle(config.bundle_json)


def _apply_overrides(config: PipelineConfig, request: RunRequest) -> PipelineConfig:
    o = request.overrides
    updates: dict = {}
    if o.cap is not None:
        updates["per_text_cap"] = o.cap
    if o.window is not None:
        updates["window_size"] = o.window
    if o.seed is not None:
        updates["seed"] = o.seed
    if o.per_category_limit is not None:
        updates["per_category_limit"] = o.per_category_limit
    if o.thresholds:
        updates["thresholds"] = {**config.thresholds, **o.thresholds}
    return dataclasses.replace(config, **updates) if updates else config
