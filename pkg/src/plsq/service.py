"""HTTP/JSON session API in front of the engine.

Sessions live in an in-memory registry. Mutations use optimistic
versioning: every request carries the version it saw, mutations are
serialized per session under a lock, and a stale version yields a 409
without touching the state. All errors render as {"code", "message"}.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import engine
from .corpus import Corpus, cache_from_dict
from .engine import DEFAULT_CONFIG, EngineConfig, SessionState
from .errors import (
    EmptyCandidateSetError,
    EmptyResultSetError,
    PlsqError,
    UndoAtRootError,
    VariableNotFoundError,
)
from .llm import validate_candidates
from .schema import database_from_dict


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class Session:
    id: str
    state: SessionState
    version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


def state_view(session: Session) -> dict:
    state = session.state
    predicted = engine.predicted_features(state)
    top = max(state.candidates, key=lambda c: (c.weight, -c.id))
    return {
        "session_id": session.id,
        "version": session.version,
        "utterance": state.utterance,
        "turn": state.turn,
        "terminal": engine.is_terminal(state),
        "candidates": [
            {
                "id": c.id,
                "sql": c.sql,
                "features": [f.display for f in sorted(c.features)],
                "glyph": {"rows": len(c.result.rows), "cols": len(c.result.columns)},
                "x": state.layout[i][0],
                "y": state.layout[i][1],
                "cluster": state.clusters.labels[i],
                "weight": c.weight,
            }
            for i, c in enumerate(state.candidates)
        ],
        "variables": [
            {
                "id": v.id,
                "features": list(v.display_features()),
                "implicit": [
                    {"feature": f.display, "probability": p}
                    for f, p in v.implicit_features
                ],
                "example_candidate_id": v.example_candidate_id,
                "ig_bits": v.ig_bits,
                "lift": v.lift,
                "source_cluster": v.source_cluster,
            }
            for v in state.variables
        ],
        "predicted_features": [
            {"id": f.id, "feature": f.display, "probability": p, "determined": determined}
            for f, p, determined in predicted
        ],
        "predicted_output": {
            "columns": list(top.result.columns),
            "rows": [list(r) for r in top.result.rows],
        },
    }


class SessionRegistry:
    def __init__(self, snapshot_dir: str | Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None

    def create(self, state: SessionState) -> Session:
        session = Session(id=uuid.uuid4().hex, state=state)
        with self._lock:
            self._sessions[session.id] = session
        self._snapshot(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "SESSION_NOT_FOUND", f"no session {session_id!r}")
        return session

    def _snapshot(self, session: Session):
        if self.snapshot_dir is None:
            return
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "view": state_view(session),
            "log": [e.to_dict() for e in session.state.log],
        }
        (self.snapshot_dir / f"{session.id}.json").write_text(
            json.dumps(payload, indent=2)
        )

    def mutate(self, session_id: str, version: int, apply) -> Session:
        session = self.get(session_id)
        with session.lock:
            if version != session.version:
                raise ApiError(
                    409,
                    "VERSION_CONFLICT",
                    f"version {version} is stale (current {session.version})",
                )
            session.state = apply(session.state)
            session.version += 1
        self._snapshot(session)
        return session


def create_app(
    corpus: Corpus,
    caches: dict | None = None,
    snapshot_dir: str | Path | None = None,
    config: EngineConfig = DEFAULT_CONFIG,
    llm_transport=None,
) -> FastAPI:
    app = FastAPI(title="plsq session service")
    registry = SessionRegistry(snapshot_dir)
    caches = dict(caches or {})
    app.state.registry = registry

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "INVALID_REQUEST", "message": str(exc)}
        )

    def _engine_call(fn, *args):
        try:
            return fn(*args)
        except EmptyResultSetError as exc:
            raise ApiError(400, "EMPTY_RESULT_SET", str(exc)) from exc
        except UndoAtRootError as exc:
            raise ApiError(400, "UNDO_AT_ROOT", str(exc)) from exc
        except VariableNotFoundError as exc:
            raise ApiError(404, "VARIABLE_NOT_FOUND", str(exc)) from exc

    @app.get("/tasks")
    def list_tasks():
        return {
            "tasks": [
                {
                    "id": t.id,
                    "utterance": t.utterance,
                    "ambiguity_type": t.ambiguity_type,
                    "n_golds": len(t.gold_sqls),
                    "has_cache": t.id in caches,
                }
                for t in corpus.tasks
            ]
        }

    @app.post("/sessions")
    def create_session(body: dict):
        task_id = body.get("task_id")
        if task_id is not None:
            task = corpus.task(task_id)
            if task is None:
                raise ApiError(404, "TASK_NOT_FOUND", f"no task {task_id!r}")
            cache = caches.get(task_id)
            if body.get("cache") is not None:
                cache = cache_from_dict(body["cache"])
            if body.get("sample") is not None:
                cache = _sample_live(task, body["sample"])
            if cache is None:
                raise ApiError(
                    422, "NO_CANDIDATES", f"task {task_id!r} has no candidate cache"
                )
            db = task.db
            utterance = body.get("utterance", task.utterance)
        else:
            if "db" not in body or "cache" not in body:
                raise ApiError(
                    422, "INVALID_REQUEST",
                    "provide either task_id or inline db + cache",
                )
            try:
                db = database_from_dict(body["db"])
                cache = cache_from_dict(body["cache"])
            except PlsqError as exc:
                raise ApiError(422, "INVALID_REQUEST", str(exc)) from exc
            utterance = body.get("utterance", "")
        try:
            candidates = validate_candidates(cache, db)
        except EmptyCandidateSetError as exc:
            raise ApiError(422, "NO_VALID_CANDIDATES", str(exc)) from exc
        session = registry.create(engine.init_session(utterance, candidates, config))
        return state_view(session)

    def _sample_live(task, request: dict):
        # network sampling happens only on explicit request
        from .errors import SamplingError
        from .llm import SamplingConfig, generate_candidates

        try:
            cfg = SamplingConfig(
                endpoint=str(request.get("endpoint", "")),
                model=str(request.get("model", "gpt-4o")),
                n=int(request.get("n", 50)),
                temperature=float(request.get("temperature", 0.7)),
            )
        except (TypeError, ValueError) as exc:
            raise ApiError(422, "INVALID_REQUEST", f"bad sampling config: {exc}") from exc
        try:
            return generate_candidates(task, cfg, transport=llm_transport)
        except SamplingError as exc:
            raise ApiError(502, "SAMPLING_FAILED", str(exc)) from exc

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return state_view(registry.get(session_id))

    @app.post("/sessions/{session_id}/decision")
    def decide(session_id: str, body: dict):
        version = _require_version(body)
        variable_id = body.get("variable_id")
        choice = body.get("choice")
        if not isinstance(variable_id, str) or choice not in ("yes", "no"):
            raise ApiError(
                422, "INVALID_REQUEST", "decision needs variable_id and choice yes|no"
            )
        session = registry.mutate(
            session_id,
            version,
            lambda state: _engine_call(engine.apply_decision, state, variable_id, choice),
        )
        return state_view(session)

    @app.post("/sessions/{session_id}/select")
    def select(session_id: str, body: dict):
        version = _require_version(body)
        ids = body.get("candidate_ids")
        if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
            raise ApiError(422, "INVALID_REQUEST", "candidate_ids must be a list of ints")
        session = registry.mutate(
            session_id,
            version,
            lambda state: _engine_call(engine.apply_selection, state, ids),
        )
        return state_view(session)

    @app.post("/sessions/{session_id}/undo")
    def undo_action(session_id: str, body: dict):
        version = _require_version(body)
        session = registry.mutate(
            session_id, version, lambda state: _engine_call(engine.undo, state)
        )
        return state_view(session)

    @app.get("/sessions/{session_id}/export")
    def export_log(session_id: str):
        session = registry.get(session_id)
        return {"session_id": session.id, "log": [e.to_dict() for e in session.state.log]}

    return app


def _require_version(body: dict) -> int:
    version = body.get("version")
    if not isinstance(version, int):
        raise ApiError(422, "INVALID_REQUEST", "body must carry the integer version")
    return version
