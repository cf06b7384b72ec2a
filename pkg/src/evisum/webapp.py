"""HTTP surface for the annotation protocol, plus static hosting for the
browser client when a built frontend directory is supplied.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annotation import AnnotationError, AnnotationStore


class SessionRequest(BaseModel):
    annotator_id: str


class JudgmentRequest(BaseModel):
    token: str
    review_id: str
    question: str
    value: int | str
    slot_id: str | None = None


def create_app(store: AnnotationStore, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(AnnotationError)
    async def annotation_error(request: Request, exc: AnnotationError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"error": str(exc)})

    @app.post("/sessions")
    def create_session(body: SessionRequest) -> dict:
        token = store.create_session(body.annotator_id)
        return {"token": token}

    @app.get("/tasks/next")
    def next_task(token: str) -> dict:
        task = store.next_task(token)
        progress = store.progress(token)
        if task is None:
            return {"done": True, "progress": progress}
        payload = task.to_payload()
        payload["done"] = False
        payload["progress"] = progress
        return payload

    @app.post("/judgments")
    def submit(body: JudgmentRequest) -> dict:
        judgment = store.submit_judgment(
            token=body.token,
            review_id=body.review_id,
            question=body.question,
            value=body.value,
            slot_id=body.slot_id,
        )
        return {"status": "ok", "timestamp": judgment.timestamp}

    @app.get("/admin/export")
    def export(token: str) -> PlainTextResponse:
        return PlainTextResponse(store.export_ndjson(token))

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app
