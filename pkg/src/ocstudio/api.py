"""HTTP service exposing profiles, sessions, and turns.

Every JSON response carries ``schema_version``; errors use one envelope::

    {"schema_version": 1, "error": {"status": 404, "code": "not_found",
     "message": "...", "correlation_id": "..."}}

Error codes are ``validation``, ``not_found``, ``turn_failed``,
``provider``, and ``storage``.  POST /sessions/{sid}/turns honors an
``Idempotency-Key`` header: repeating a key replays the recorded response
(marked with ``Idempotency-Replayed: true``) instead of running a new turn.
"""

from __future__ import annotations

import threading
import uuid
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .config import AppConfig, make_provider
from .engine import Engine, TurnOutcome
from .errors import (
    BudgetError,
    FormatError,
    NotFoundError,
    OcstudioError,
    TransportError,
    TurnFailed,
    ValidationError,
)
from .profile import ConfigRevision, ProfileStore
from .provider import Provider
from .session import (
    RECORDS_FORMAT,
    TRANSCRIPT_FORMAT,
    SessionStore,
)

SCHEMA_VERSION = 1

_EXPORT_FORMATS = {
    "records": RECORDS_FORMAT,
    "transcript": TRANSCRIPT_FORMAT,
    RECORDS_FORMAT: RECORDS_FORMAT,
    TRANSCRIPT_FORMAT: TRANSCRIPT_FORMAT,
}


def _body(payload: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, **payload}


def _error_payload(
    status: int, code: str, message: str, correlation_id: str, details: dict | None = None
) -> dict:
    error = {
        "status": status,
        "code": code,
        "message": message,
        "correlation_id": correlation_id,
    }
    if details:
        error["details"] = details
    return _body({"error": error})


def _classify(exc: OcstudioError) -> tuple[int, str, dict | None]:
    """Map a domain error onto (HTTP status, error code, extra details)."""

    if isinstance(exc, TurnFailed):
        details: dict = {"attempts": exc.attempts}
        if exc.parse_error is not None:
            details["parse_error"] = {
                "kind": exc.parse_error.kind.value,
                "detail": exc.parse_error.detail,
            }
        return 502, "turn_failed", details
    if isinstance(exc, TransportError):
        return (503 if exc.retriable else 502), "provider", {
            "retriable": exc.retriable
        }
    if isinstance(exc, NotFoundError):
        return 404, "not_found", None
    if isinstance(exc, FormatError):
        return 400, "validation", {"offset": exc.offset}
    if isinstance(exc, (ValidationError, BudgetError)):
        return 400, "validation", None
    return 500, "storage", None


def _profile_doc(profiles: ProfileStore, profile) -> dict:
    return {
        "profile": profile.to_dict(),
        "latest_revision": profiles.latest_revision_number(profile.id),
    }


def _revision_doc(revision: ConfigRevision, *, include_prompt: bool) -> dict:
    return revision.to_dict(include_prompt=include_prompt)


def _turn_doc(outcome: TurnOutcome) -> dict:
    return {
        "entry": outcome.entry.to_dict(),
        "attempts": outcome.attempts,
        "degradations": list(outcome.degradations),
    }


async def _read_json_object(request: Request) -> dict:
    try:
        payload = await request.json()
    except Exception:
        raise ValidationError("request body must be a JSON object") from None
    if not isinstance(payload, dict):
        raise ValidationError("request body must be a JSON object")
    return payload


def _require_str(payload: dict, key: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str):
        raise ValidationError(f"field {key!r} must be a string")
    return value


def _optional_str(payload: dict, key: str) -> str | None:
    value = payload.get(key)
    if value is not None and not isinstance(value, str):
        raise ValidationError(f"field {key!r} must be a string")
    return value


def _parse_int(text: str | None, name: str, default: int) -> int:
    if text is None:
        return default
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"query parameter {name!r} must be an integer") from None


def create_app(
    config: AppConfig | None = None,
    *,
    profiles: ProfileStore | None = None,
    sessions: SessionStore | None = None,
    provider: Provider | None = None,
    clock: Callable[[], int] | None = None,
) -> FastAPI:
    """Build the service.  Stores/provider can be injected for tests."""

    config = config or AppConfig()
    store_kwargs = {} if clock is None else {"clock": clock}
    profiles = profiles or ProfileStore(config.storage.profiles_root, **store_kwargs)
    sessions = sessions or SessionStore(config.storage.sessions_root, **store_kwargs)
    provider = provider or make_provider(config.provider)
    engine = Engine(
        profiles,
        sessions,
        provider,
        model_id=config.provider.model,
        temperature=config.defaults.temperature,
        max_tokens=config.defaults.max_tokens,
        max_retries=config.defaults.max_retries,
    )

    app = FastAPI(title="ocstudio", version=__version__)
    app.state.config = config
    app.state.profiles = profiles
    app.state.sessions = sessions
    app.state.provider = provider
    app.state.engine = engine
    app.state.idempotency_cache = {}
    app.state.idempotency_lock = threading.Lock()

    @app.middleware("http")
    async def stamp_correlation_id(request: Request, call_next):
        request.state.correlation_id = uuid.uuid4().hex[:12]
        response = await call_next(request)
        response.headers["X-Correlation-Id"] = request.state.correlation_id
        return response

    # Browser UIs are typically served by a separate local static server,
    # so their requests arrive cross-origin. The service has no auth, so
    # only local origins are acknowledged; public sites stay blocked.
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$",
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Correlation-Id", "Idempotency-Replayed"],
    )

    @app.exception_handler(OcstudioError)
    async def domain_error_handler(request: Request, exc: OcstudioError):
        status, code, details = _classify(exc)
        correlation_id = getattr(request.state, "correlation_id", "") or uuid.uuid4().hex[:12]
        return JSONResponse(
            _error_payload(status, code, str(exc), correlation_id, details),
            status_code=status,
        )

    # ------------------------------------------------------------------
    # Health

    @app.get("/health")
    async def health():
        return _body({"status": "ok", "version": __version__})

    # ------------------------------------------------------------------
    # Profiles

    @app.post("/profiles", status_code=201)
    async def create_profile(request: Request):
        draft = await _read_json_object(request)
        profile = profiles.create_profile(draft)
        return _body(_profile_doc(profiles, profile))

    @app.get("/profiles")
    async def list_profiles():
        return _body(
            {"profiles": [p.to_dict() for p in profiles.list_profiles()]}
        )

    @app.get("/profiles/{profile_id}")
    async def get_profile(profile_id: str):
        profile = profiles.get_profile(profile_id)
        return _body(_profile_doc(profiles, profile))

    @app.patch("/profiles/{profile_id}")
    async def update_profile(profile_id: str, request: Request):
        patch = await _read_json_object(request)
        change_note = patch.pop("change_note", "")
        if not isinstance(change_note, str):
            raise ValidationError("field 'change_note' must be a string")
        revision = profiles.update_profile(profile_id, patch, change_note)
        doc = _profile_doc(profiles, profiles.get_profile(profile_id))
        doc["revision"] = _revision_doc(revision, include_prompt=False)
        return _body(doc)

    @app.get("/profiles/{profile_id}/revisions")
    async def list_revisions(profile_id: str):
        revisions = profiles.list_revisions(profile_id)
        return _body(
            {
                "profile_id": profile_id,
                "revisions": [
                    _revision_doc(r, include_prompt=False) for r in revisions
                ],
            }
        )

    @app.get("/profiles/{profile_id}/revisions/{n}")
    async def get_revision(profile_id: str, n: str):
        try:
            number = int(n)
        except ValueError:
            raise ValidationError("revision number must be an integer") from None
        revision = profiles.get_revision(profile_id, number)
        doc = _revision_doc(revision, include_prompt=True)
        doc["state"] = profiles.revision_state(profile_id, number).to_dict()
        return _body(doc)

    @app.get("/profiles/{profile_id}/diff")
    async def diff_revisions(profile_id: str, request: Request):
        params = request.query_params
        a = _parse_int(params.get("from"), "from", 0)
        b = _parse_int(params.get("to"), "to", 0)
        if a <= 0 or b <= 0:
            raise ValidationError(
                "query parameters 'from' and 'to' must be positive revision numbers"
            )
        return _body(
            {
                "profile_id": profile_id,
                "from": a,
                "to": b,
                "diff": profiles.diff_revisions(profile_id, a, b),
            }
        )

    # ------------------------------------------------------------------
    # Sessions

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await _read_json_object(request)
        allowed = {"profile_id", "speaker_context", "window_size", "session_id"}
        unknown = sorted(set(payload) - allowed)
        if unknown:
            raise ValidationError(f"unknown field(s): {', '.join(unknown)}")
        profile_id = _require_str(payload, "profile_id")
        window_size = payload.get("window_size")
        if window_size is not None and (
            isinstance(window_size, bool) or not isinstance(window_size, int)
        ):
            raise ValidationError("field 'window_size' must be an integer")
        if window_size is None:
            window_size = config.defaults.window_size
        session = engine.create_session(
            profile_id,
            speaker_context=_optional_str(payload, "speaker_context"),
            window_size=window_size,
            session_id=_optional_str(payload, "session_id"),
        )
        return _body({"session": session.to_dict()})

    @app.get("/sessions")
    async def list_sessions():
        return _body(
            {"sessions": [s.to_dict() for s in sessions.list_sessions()]}
        )

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return _body({"session": sessions.get_session(session_id).to_dict()})

    @app.post("/sessions/{session_id}/turns")
    async def take_turn(session_id: str, request: Request):
        idem_key = request.headers.get("Idempotency-Key")
        cache_key = ("POST", f"/sessions/{session_id}/turns", idem_key)
        if idem_key:
            with app.state.idempotency_lock:
                cached = app.state.idempotency_cache.get(cache_key)
            if cached is not None:
                return JSONResponse(
                    cached, headers={"Idempotency-Replayed": "true"}
                )
        payload = await _read_json_object(request)
        content = _require_str(payload, "content")
        label = _optional_str(payload, "speaker_label")
        kwargs = {} if label is None else {"speaker_label": label}
        outcome = engine.take_turn(session_id, content, **kwargs)
        doc = _body(_turn_doc(outcome))
        if idem_key:
            with app.state.idempotency_lock:
                app.state.idempotency_cache[cache_key] = doc
        return doc

    @app.post("/sessions/{session_id}/notes", status_code=201)
    async def add_note(session_id: str, request: Request):
        payload = await _read_json_object(request)
        content = _require_str(payload, "content")
        label = _optional_str(payload, "speaker_label")
        kwargs = {} if label is None else {"speaker_label": label}
        entry = engine.handle_operator_message(session_id, content, **kwargs)
        return _body({"entry": entry.to_dict()})

    @app.put("/sessions/{session_id}/speaker-context")
    async def set_speaker_context(session_id: str, request: Request):
        payload = await _read_json_object(request)
        text = _require_str(payload, "speaker_context")
        change = sessions.set_speaker_context(session_id, text)
        return _body({"context_change": change.to_dict()})

    @app.get("/sessions/{session_id}/log")
    async def read_log(session_id: str, request: Request):
        params = request.query_params
        after = _parse_int(params.get("after"), "after", 0)
        limit_text = params.get("limit")
        limit = None if limit_text is None else _parse_int(limit_text, "limit", 0)
        if limit is not None and limit < 0:
            raise ValidationError("query parameter 'limit' must be >= 0")
        records, cursor = sessions.read_records(session_id, after=after, limit=limit)
        return _body(
            {"session_id": session_id, "records": records, "next_cursor": cursor}
        )

    @app.get("/sessions/{session_id}/export")
    async def export_log(session_id: str, request: Request):
        requested = request.query_params.get("format", "records")
        format_token = _EXPORT_FORMATS.get(requested)
        if format_token is None:
            raise ValidationError(
                f"unknown export format {requested!r}; "
                f"use 'records' or 'transcript'"
            )
        data = sessions.export_log(session_id, format=format_token)
        if format_token == RECORDS_FORMAT:
            media, ext = "application/x-ndjson", "log"
        else:
            media, ext = "text/plain; charset=utf-8", "txt"
        return Response(
            content=data,
            media_type=media,
            headers={
                "Content-Disposition": f'attachment; filename="{session_id}.{ext}"',
                "X-Export-Format": format_token,
            },
        )

    @app.post("/sessions/import", status_code=201)
    async def import_log(request: Request):
        data = await request.body()
        if not data:
            raise ValidationError("import body must be a non-empty session log")
        session = sessions.import_log(data)
        return _body({"session": session.to_dict()})

    return app


__all__ = ["SCHEMA_VERSION", "create_app"]
