"""HTTP contract tests, run in-process against the ASGI app."""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from conftest import TickClock
from ocstudio.api import SCHEMA_VERSION, create_app
from ocstudio.profile import ProfileStore
from ocstudio.provider import ScriptedProvider
from ocstudio.session import (
    ARTIST_AUTHOR,
    CHARACTER_AUTHOR,
    OPERATOR_AUTHOR,
    SessionStore,
)

GOLDEN_TURN = (Path(__file__).parent / "fixtures" / "golden_turn.txt").read_text(
    encoding="utf-8"
)


def make_reply(reply: str = "Hello.", action: str = "Normal") -> str:
    return "\n".join(
        [
            "Observe: A message arrives.",
            "Reflect: Thinking it over.",
            "User impression: Curious and kind.",
            "Behavior: Antenna twitches.",
            f"Action: {action}",
            f"NOMAD ZERO: {reply}",
        ]
    )


@pytest.fixture
def app_parts(tmp_path, nomad_draft):
    def build(script=(), *, subdir="main"):
        clock = TickClock()
        profiles = ProfileStore(tmp_path / subdir / "profiles", clock=clock)
        sessions = SessionStore(tmp_path / subdir / "sessions", clock=clock)
        provider = ScriptedProvider(list(script))
        app = create_app(profiles=profiles, sessions=sessions, provider=provider)
        return TestClient(app), profiles, sessions, provider

    return build


@pytest.fixture
def client_with_profile(app_parts, nomad_draft):
    client, profiles, sessions, provider = app_parts([GOLDEN_TURN])
    response = client.post("/profiles", json=nomad_draft)
    assert response.status_code == 201
    profile_id = response.json()["profile"]["id"]
    return client, profile_id, sessions, provider


class TestHealthAndEnvelope:
    def test_health(self, app_parts):
        client, *_ = app_parts()
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["schema_version"] == SCHEMA_VERSION
        assert body["status"] == "ok"
        assert response.headers["X-Correlation-Id"]

    def test_error_envelope_shape(self, app_parts):
        client, *_ = app_parts()
        response = client.get("/profiles/nope")
        assert response.status_code == 404
        body = response.json()
        assert body["schema_version"] == SCHEMA_VERSION
        error = body["error"]
        assert error["status"] == 404
        assert error["code"] == "not_found"
        assert error["message"]
        assert error["correlation_id"]

    def test_validation_error_is_400(self, app_parts):
        client, *_ = app_parts()
        response = client.post("/profiles", json={"pronoun": "he"})
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "validation"

    def test_malformed_json_body_is_400(self, app_parts):
        client, *_ = app_parts()
        response = client.post(
            "/profiles", content=b"not json", headers={"Content-Type": "application/json"}
        )
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "validation"


class TestCrossOriginAccess:
    def test_local_origin_is_allowed(self, app_parts):
        client, *_ = app_parts()
        response = client.get("/health", headers={"Origin": "http://localhost:5173"})
        assert response.headers["access-control-allow-origin"] == "http://localhost:5173"

    def test_preflight_admits_turn_posts_with_idempotency_key(self, app_parts):
        client, *_ = app_parts()
        response = client.options(
            "/sessions/some-session/turns",
            headers={
                "Origin": "http://127.0.0.1:8080",
                "Access-Control-Request-Method": "POST",
                "Access-Control-Request-Headers": "content-type,idempotency-key",
            },
        )
        assert response.status_code == 200
        assert response.headers["access-control-allow-origin"] == "http://127.0.0.1:8080"
        allowed = response.headers["access-control-allow-headers"].lower()
        assert "idempotency-key" in allowed

    def test_public_origin_is_not_acknowledged(self, app_parts):
        client, *_ = app_parts()
        response = client.get("/health", headers={"Origin": "https://example.com"})
        assert "access-control-allow-origin" not in response.headers


class TestProfiles:
    def test_create_and_get(self, app_parts, nomad_draft):
        client, *_ = app_parts()
        created = client.post("/profiles", json=nomad_draft).json()
        assert created["latest_revision"] == 1
        assert created["profile"]["name"] == "NOMAD ZERO"
        pid = created["profile"]["id"]

        fetched = client.get(f"/profiles/{pid}").json()
        assert fetched["profile"] == created["profile"]

        listing = client.get("/profiles").json()
        assert [p["id"] for p in listing["profiles"]] == [pid]

    def test_patch_creates_revision_with_diff(self, app_parts, nomad_draft):
        client, *_ = app_parts()
        pid = client.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        response = client.patch(
            f"/profiles/{pid}",
            json={
                "actions": nomad_draft["actions"]
                + [{"name": "Thinking", "description": "Pause and think it over"}],
                "change_note": "add thinking action",
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["latest_revision"] == 2
        revision = body["revision"]
        assert revision["revision_number"] == 2
        assert revision["change_note"] == "add thinking action"
        assert "+Thinking: Pause and think it over" in revision["diff"]
        assert "rendered_prompt" not in revision

    def test_revision_listing_and_detail(self, app_parts, nomad_draft):
        client, *_ = app_parts()
        pid = client.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        client.patch(f"/profiles/{pid}", json={"traits": "curious, restless"})

        listing = client.get(f"/profiles/{pid}/revisions").json()
        numbers = [r["revision_number"] for r in listing["revisions"]]
        assert numbers == [1, 2]
        assert all("rendered_prompt" not in r for r in listing["revisions"])

        detail = client.get(f"/profiles/{pid}/revisions/2").json()
        assert detail["revision_number"] == 2
        assert "From now on, you are NOMAD ZERO." in detail["rendered_prompt"]
        assert detail["state"]["traits"] == "curious, restless"

        assert client.get(f"/profiles/{pid}/revisions/99").status_code == 404
        assert client.get(f"/profiles/{pid}/revisions/abc").status_code == 400

    def test_diff_endpoint(self, app_parts, nomad_draft):
        client, profiles, *_ = app_parts()
        pid = client.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        client.patch(f"/profiles/{pid}", json={"pronoun": "they"})
        got = client.get(f"/profiles/{pid}/diff", params={"from": 1, "to": 2}).json()
        assert got["diff"] == profiles.diff_revisions(pid, 1, 2)
        assert 'Your pronoun is "they".' in got["diff"]

        missing = client.get(f"/profiles/{pid}/diff")
        assert missing.status_code == 400


class TestSessions:
    def test_create_session_defaults(self, client_with_profile):
        client, pid, *_ = client_with_profile
        response = client.post("/sessions", json={"profile_id": pid})
        assert response.status_code == 201
        session = response.json()["session"]
        assert session["profile_id"] == pid
        assert session["window_size"] == 5
        assert session["speaker_context"] == "Now, a human is talking to you"

    def test_create_session_custom_fields(self, client_with_profile):
        client, pid, *_ = client_with_profile
        response = client.post(
            "/sessions",
            json={
                "profile_id": pid,
                "speaker_context": "Now, your best friend Lydia is talking to you",
                "window_size": 3,
                "session_id": "pinned-id",
            },
        )
        session = response.json()["session"]
        assert session["session_id"] == "pinned-id"
        assert session["window_size"] == 3
        assert (
            session["speaker_context"]
            == "Now, your best friend Lydia is talking to you"
        )

    def test_create_session_rejects_unknown_fields(self, client_with_profile):
        client, pid, *_ = client_with_profile
        response = client.post(
            "/sessions", json={"profile_id": pid, "wibble": True}
        )
        assert response.status_code == 400

    def test_session_listing_and_404(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        assert client.get(f"/sessions/{sid}").status_code == 200
        ids = [s["session_id"] for s in client.get("/sessions").json()["sessions"]]
        assert sid in ids
        assert client.get("/sessions/unknown").status_code == 404
        assert (
            client.post("/sessions", json={"profile_id": "ghost"}).status_code == 404
        )


class TestTurns:
    def test_turn_roundtrip(self, client_with_profile):
        client, pid, sessions, provider = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        response = client.post(
            f"/sessions/{sid}/turns", json={"content": "who are you?"}
        )
        assert response.status_code == 200
        body = response.json()
        assert body["attempts"] == 1
        assert body["degradations"] == []
        entry = body["entry"]
        assert entry["author_kind"] == CHARACTER_AUTHOR
        assert entry["speaker_label"] == "NOMAD ZERO"
        assert entry["trajectory"]["action"] == "Normal"
        assert entry["content"].startswith("Greetings, <Artist>!")

    def test_turn_validation_errors(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        assert (
            client.post(f"/sessions/{sid}/turns", json={}).status_code == 400
        )
        assert (
            client.post(
                "/sessions/ghost/turns", json={"content": "hi"}
            ).status_code
            == 404
        )

    def test_turn_failed_maps_to_502(self, app_parts, nomad_draft):
        client, profiles, sessions, provider = app_parts(
            ["junk", "junk", "junk"]
        )
        pid = client.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        response = client.post(f"/sessions/{sid}/turns", json={"content": "hi"})
        assert response.status_code == 502
        error = response.json()["error"]
        assert error["code"] == "turn_failed"
        assert error["details"]["attempts"] == 3
        assert error["details"]["parse_error"]["kind"] == "NoLabelsFound"
        # The artist message stays in the log.
        records = client.get(f"/sessions/{sid}/log").json()["records"]
        assert [r["kind"] for r in records] == ["entry"]
        assert records[0]["author_kind"] == ARTIST_AUTHOR

    def test_provider_exhaustion_maps_to_502_provider(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        assert (
            client.post(f"/sessions/{sid}/turns", json={"content": "one"}).status_code
            == 200
        )
        # Script of one item is now exhausted.
        response = client.post(f"/sessions/{sid}/turns", json={"content": "two"})
        assert response.status_code == 502
        assert response.json()["error"]["code"] == "provider"

    def test_idempotency_key_replays_response(self, app_parts, nomad_draft):
        client, profiles, sessions, provider = app_parts([GOLDEN_TURN])
        pid = client.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        headers = {"Idempotency-Key": "turn-1"}
        first = client.post(
            f"/sessions/{sid}/turns", json={"content": "who are you?"}, headers=headers
        )
        assert first.status_code == 200
        second = client.post(
            f"/sessions/{sid}/turns", json={"content": "who are you?"}, headers=headers
        )
        assert second.status_code == 200
        assert second.headers.get("Idempotency-Replayed") == "true"
        assert second.json() == first.json()
        # The provider ran only once; the log holds exactly one exchange.
        assert provider.remaining() == 0
        assert len(provider.requests) == 1
        records = client.get(f"/sessions/{sid}/log").json()["records"]
        assert [r["author_kind"] for r in records] == [ARTIST_AUTHOR, CHARACTER_AUTHOR]


class TestNotesAndContext:
    def test_note_and_context_change(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        note = client.post(
            f"/sessions/{sid}/notes", json={"content": "tone: keep it light"}
        )
        assert note.status_code == 201
        assert note.json()["entry"]["author_kind"] == OPERATOR_AUTHOR

        change = client.put(
            f"/sessions/{sid}/speaker-context",
            json={"speaker_context": "Now, a stranger is talking to you"},
        )
        assert change.status_code == 200
        doc = change.json()["context_change"]
        assert doc["old"] == "Now, a human is talking to you"
        assert doc["new"] == "Now, a stranger is talking to you"
        assert doc["changed"] is True

        session = client.get(f"/sessions/{sid}").json()["session"]
        assert session["speaker_context"] == "Now, a stranger is talking to you"

    def test_log_paging(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        for i in range(4):
            client.post(f"/sessions/{sid}/notes", json={"content": f"note {i}"})
        first = client.get(f"/sessions/{sid}/log", params={"limit": 3}).json()
        assert len(first["records"]) == 3
        rest = client.get(
            f"/sessions/{sid}/log", params={"after": first["next_cursor"]}
        ).json()
        assert len(rest["records"]) == 1
        assert rest["records"][0]["content"] == "note 3"
        assert (
            client.get(f"/sessions/{sid}/log", params={"after": "x"}).status_code
            == 400
        )


class TestExportImport:
    def test_export_records_bytes(self, client_with_profile):
        client, pid, sessions, provider = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        client.post(f"/sessions/{sid}/turns", json={"content": "who are you?"})
        response = client.get(f"/sessions/{sid}/export")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("application/x-ndjson")
        assert response.content == sessions.export_log(sid)

    def test_export_transcript(self, client_with_profile):
        client, pid, *_ = client_with_profile
        sid = client.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        client.post(f"/sessions/{sid}/turns", json={"content": "who are you?"})
        client.post(f"/sessions/{sid}/notes", json={"content": "SECRET-NOTE"})
        response = client.get(
            f"/sessions/{sid}/export", params={"format": "transcript"}
        )
        assert response.headers["content-type"].startswith("text/plain")
        text = response.text
        assert text.startswith("<Artist>: who are you?\n")
        assert "NOMAD ZERO: Greetings" in text
        assert "SECRET-NOTE" not in text

        bad = client.get(f"/sessions/{sid}/export", params={"format": "pdf"})
        assert bad.status_code == 400

    def test_import_roundtrip_between_services(self, app_parts, nomad_draft):
        client_a, _, sessions_a, _ = app_parts([GOLDEN_TURN], subdir="a")
        pid = client_a.post("/profiles", json=nomad_draft).json()["profile"]["id"]
        sid = client_a.post("/sessions", json={"profile_id": pid}).json()["session"][
            "session_id"
        ]
        client_a.post(f"/sessions/{sid}/turns", json={"content": "who are you?"})
        exported = client_a.get(f"/sessions/{sid}/export").content

        client_b, _, sessions_b, _ = app_parts([], subdir="b")
        imported = client_b.post("/sessions/import", content=exported)
        assert imported.status_code == 201
        assert imported.json()["session"]["session_id"] == sid
        assert client_b.get(f"/sessions/{sid}/export").content == exported

        duplicate = client_b.post("/sessions/import", content=exported)
        assert duplicate.status_code == 400

        empty = client_b.post("/sessions/import", content=b"")
        assert empty.status_code == 400

    def test_import_rejects_corrupt_log(self, app_parts):
        client, *_ = app_parts()
        response = client.post("/sessions/import", content=b"{bad json\n")
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "validation"
