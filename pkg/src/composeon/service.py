"""HTTP service exposing the interactive loop under /api/v1.

Sessions live in memory and persist to one JSON file each under the data
directory (COMPOSEON_DATA_DIR). Operations on a single session serialize
behind a per-session lock; different sessions proceed concurrently. Mentor
calls never hold a session lock.
"""

from __future__ import annotations

import os
import threading
from contextlib import contextmanager
from pathlib import Path

from fastapi import FastAPI, Request, Response, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import CorpusDb, load_corpus
from .errors import (
    ComposeOnError,
    CorpusExhausted,
    DurationMismatch,
    ForbiddenEdit,
    IllegalState,
    InvalidEdit,
    MalformedHeader,
    MalformedRiff,
    MentorUnavailable,
    NoNotesDetected,
    ParseError,
    PolyphonicInput,
    SchemaVersionMismatch,
    ScopeOutOfRange,
    TruncatedChunk,
    UnmatchedNoteOn,
    UnsupportedEncoding,
    UnsupportedMediaType,
)
from .explain import MentorConfig, load_glossary, mentor_ask, stub_answer
from .generate import GenerationConfig
from .session import Session

DEFAULT_DATA_DIR = "composeon_data"

_STATUS_BY_ERROR = [
    (IllegalState, 409),
    (ForbiddenEdit, 403),
    (UnsupportedMediaType, 415),
    (SchemaVersionMismatch, 422),
    (InvalidEdit, 422),
    (ScopeOutOfRange, 422),
    (CorpusExhausted, 422),
    (PolyphonicInput, 422),
    (NoNotesDetected, 422),
    (MalformedRiff, 422),
    (UnsupportedEncoding, 422),
    (MalformedHeader, 422),
    (TruncatedChunk, 422),
    (UnmatchedNoteOn, 422),
    (ParseError, 422),
    (DurationMismatch, 422),
]


class SessionStore:
    """In-memory session registry with per-session exclusive locks."""

    def __init__(self, data_dir: str | Path | None = None,
                 db: CorpusDb | None = None,
                 mentor: MentorConfig | None = None):
        self.data_dir = Path(data_dir or os.environ.get("COMPOSEON_DATA_DIR", DEFAULT_DATA_DIR))
        self.db = db or load_corpus()
        self.mentor = mentor or MentorConfig.from_env()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def create(self, config: GenerationConfig) -> Session:
        session = Session(db=self.db, config=config)
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        return session

    def adopt(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks.setdefault(session.id, threading.Lock())

    @contextmanager
    def locked(self, session_id: str):
        with self._registry_lock:
            session = self._sessions.get(session_id)
            lock = self._locks.get(session_id)
        if session is None:
            raise KeyError(session_id)
        with lock:
            yield session


class CreateSessionBody(BaseModel):
    seed: int = 0
    substitution_probability: float = 0.2
    ornament_rate: float = 0.05


class ProcessBody(BaseModel):
    bpm: int | None = None


class EditBody(BaseModel):
    field: str
    value: str | int


class MentorBody(BaseModel):
    query: str


def _error_response(exc: Exception) -> JSONResponse:
    for error_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, error_type):
            return JSONResponse(
                status_code=status,
                content={"error": type(exc).__name__, "message": str(exc)},
            )
    if isinstance(exc, (ValueError, KeyError)):
        return JSONResponse(status_code=422,
                            content={"error": type(exc).__name__, "message": str(exc)})
    return JSONResponse(status_code=500,
                        content={"error": type(exc).__name__, "message": str(exc)})


def _explanation_payload(doc) -> dict:
    return {
        "scope": {"kind": doc.scope.kind.value, "index": doc.scope.index},
        "level": doc.level.value,
        "sections": [
            {"aspect": s.aspect, "text": s.text,
             "facts": {k: list(v) for k, v in s.facts.items()}}
            for s in doc.sections
        ],
        "terms": list(doc.terms),
    }


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="composeon", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ComposeOnError)
    async def composeon_error(request: Request, exc: ComposeOnError):
        return _error_response(exc)

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return _error_response(exc)

    @app.exception_handler(KeyError)
    async def key_error(request: Request, exc: KeyError):
        return JSONResponse(status_code=404,
                            content={"error": "NotFound", "message": str(exc)})

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "corpus_digest": store.db.source_digest}

    @app.get("/api/v1/glossary")
    def glossary():
        return {"terms": load_glossary()}

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody | None = None):
        body = body or CreateSessionBody()
        config = GenerationConfig(
            seed=body.seed,
            substitution_probability=body.substitution_probability,
            ornament_rate=body.ornament_rate,
        )
        return store.create(config).summary()

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str):
        with store.locked(session_id) as session:
            return session.summary()

    @app.post("/api/v1/sessions/{session_id}/audio")
    def upload_audio(session_id: str, file: UploadFile):
        data = file.file.read()
        if (file.filename or "").lower().endswith(".mp3"):
            raise UnsupportedMediaType(
                "mp3 uploads are not supported; please provide .wav or .mid")
        with store.locked(session_id) as session:
            session.upload_audio(data)
            return session.summary()

    @app.post("/api/v1/sessions/{session_id}/midi")
    def upload_midi(session_id: str, file: UploadFile):
        data = file.file.read()
        if (file.filename or "").lower().endswith(".mp3"):
            raise UnsupportedMediaType(
                "mp3 uploads are not supported; please provide .wav or .mid")
        with store.locked(session_id) as session:
            session.upload_midi(data)
            return session.summary()

    @app.post("/api/v1/sessions/{session_id}/process")
    def process(session_id: str, body: ProcessBody | None = None):
        body = body or ProcessBody()
        with store.locked(session_id) as session:
            session.process(body.bpm)
            return session.summary()

    @app.post("/api/v1/sessions/{session_id}/continue")
    def continue_phrase(session_id: str):
        with store.locked(session_id) as session:
            phrase = session.continue_phrase()
            return {"phrase": phrase, "score": session.score_document()}

    @app.post("/api/v1/sessions/{session_id}/end")
    def end_piece(session_id: str):
        with store.locked(session_id) as session:
            result = session.end()
            return {"end": result, "score": session.score_document()}

    @app.get("/api/v1/sessions/{session_id}/score")
    def get_score(session_id: str):
        with store.locked(session_id) as session:
            return session.score_document()

    @app.get("/api/v1/sessions/{session_id}/export")
    def export_midi(session_id: str):
        with store.locked(session_id) as session:
            data = session.export()
            name = f"{session.id}.mid"
        return Response(
            content=data,
            media_type="audio/midi",
            headers={"Content-Disposition": f'attachment; filename="{name}"'},
        )

    @app.get("/api/v1/sessions/{session_id}/explanation")
    def get_explanation(session_id: str, scope: str = "piece",
                        index: int | None = None, level: str = "beginner"):
        with store.locked(session_id) as session:
            return _explanation_payload(session.explanation(scope, index, level))

    @app.get("/api/v1/sessions/{session_id}/measures/{measure}/alternatives")
    def get_alternatives(session_id: str, measure: int):
        with store.locked(session_id) as session:
            return session.alternatives(measure)

    @app.patch("/api/v1/sessions/{session_id}/measures/{measure}")
    def edit_measure(session_id: str, measure: int, body: EditBody):
        with store.locked(session_id) as session:
            result = session.edit_measure(measure, body.field, body.value)
            return {"measure": result, "score": session.score_document()}

    @app.post("/api/v1/sessions/{session_id}/save")
    def save_session(session_id: str):
        with store.locked(session_id) as session:
            path = session.save(store.data_dir)
            return {"saved": True, "path": str(path)}

    @app.post("/api/v1/sessions/{session_id}/load")
    def load_session(session_id: str):
        try:
            session = Session.load(store.data_dir, session_id, store.db)
        except FileNotFoundError as exc:
            return JSONResponse(status_code=404,
                                content={"error": "NotFound", "message": str(exc)})
        store.adopt(session)
        return session.summary()

    @app.post("/api/v1/mentor")
    def mentor(body: MentorBody):
        # Runs outside any session lock. A live endpoint failure degrades to
        # the packaged stub answer.
        try:
            exchange = mentor_ask(body.query, store.mentor)
        except MentorUnavailable as exc:
            return {"query": body.query, "response": stub_answer(body.query),
                    "source": "stub", "note": str(exc)}
        return {"query": exchange.query, "response": exchange.response,
                "source": exchange.source}

    return app


def run(port: int = 8000, data_dir: str | None = None):
    import uvicorn

    app = create_app(SessionStore(data_dir=data_dir))
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
