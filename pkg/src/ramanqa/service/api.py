"""HTTP API (/v1): multi-turn sessions over the QA pipeline."""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from ..errors import (
    PlanError,
    ProviderError,
    QAError,
    RetryableProviderError,
)
from ..planner import ContextFilters, plan
from ..qa import execute_plan, synthesize
from .sessions import SessionStore, Turn, UnknownSessionError, export_transcript
from .wiring import WiredSystem


class AskBody(BaseModel):
    question: str
    filters: dict | None = None


def create_app(system: WiredSystem, sessions: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="ramanqa", version="0.1.0")
    store = sessions or SessionStore(system.config.session_log)
    app.state.system = system
    app.state.sessions = store

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(UnknownSessionError)
    async def unknown_session(request: Request, exc: UnknownSessionError):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(RetryableProviderError)
    async def provider_outage(request: Request, exc: RetryableProviderError):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.exception_handler(QAError)
    async def qa_failure(request: Request, exc: QAError):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.exception_handler(PlanError)
    async def plan_failure(request: Request, exc: PlanError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(ProviderError)
    async def provider_failure(request: Request, exc: ProviderError):
        return JSONResponse(status_code=503, content={"error": str(exc)})

    @app.get("/v1/health")
    def health():
        components = system.component_health()
        status = "ok" if all(components.values()) else "degraded"
        return {"status": status, "components": components}

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"session_id": session.session_id}

    @app.post("/v1/sessions/{session_id}/ask")
    def ask(session_id: str, body: AskBody):
        store.get(session_id)  # 404 before doing any work
        filters = ContextFilters.from_json(body.filters)
        started = time.time()
        qplan = plan(
            body.question, filters, system.planner_provider, system.config.row_limit
        )
        evidence = execute_plan(
            qplan,
            system.store,
            system.index,
            system.embedder,
            k=system.config.k,
            leg_timeout=system.config.leg_timeout_s,
        )
        answer = synthesize(body.question, evidence, system.synth_provider)

        def build(index: int) -> Turn:
            return Turn(
                index=index,
                question=body.question,
                plan=qplan,
                evidence=evidence,
                answer=answer,
                started_at=started,
                finished_at=time.time(),
            )

        turn = store.append_turn(session_id, build)
        return {"session_id": session_id, "turn": turn.to_json()}

    @app.get("/v1/sessions/{session_id}/transcript")
    def transcript(session_id: str):
        return store.get(session_id).to_json()

    @app.get("/v1/sessions/{session_id}/export")
    def export(session_id: str):
        return PlainTextResponse(export_transcript(store.get(session_id)))

    return app
