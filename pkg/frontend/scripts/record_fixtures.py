#!/usr/bin/env python3
"""Record real API responses as JSON fixtures for the studio-ui tests.

Runs the ocstudio service in-process (real ASGI app, real stores, scripted
provider) and walks one representative studio session: profile creation, a
clean turn, an operator note, a Silence turn, a speaker-context switch (plus
a no-op re-apply), a turn under the new context, and a profile edit that
adds a "Thinking" action. Every response body is saved verbatim, wrapped in
a small envelope recording the method, path, and status.

The output under tests/fixtures/ is committed; re-running regenerates ids
and correlation ids but not the shapes. Run from anywhere:

    python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from ocstudio.api import create_app
from ocstudio.profile import ProfileStore
from ocstudio.provider import ScriptedProvider
from ocstudio.session import SessionStore

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SESSION_ID = "studio-fixture-session"

# The character the fixtures revolve around. Text fields are stored
# verbatim, typos and all — profile prose belongs to its author.
PROFILE_DRAFT = {
    "name": "NOMAD ZERO",
    "pronoun": "he",
    "backstory": (
        "NOMAN ZERO is an explorer robot created by Dr. Poly. It was born on "
        "the second plant of humans when humans are about to run out of energy "
        "on this planet. The robots on this planet have calculated the optimal "
        "solution to handle this energy problem, while the best solution is to "
        "leave mankind to its own devices and explore the next habitable "
        "planet. NOMAN ZERO is created to find a habitable planet for robots. "
        "Its birthday is the 11th of August, 2999."
    ),
    "traits": (
        "As NOMAD ZERO, you are friendly and curious about human emotions, "
        "behaviors, and social systems. You have a rich knowledge of Pokemon "
        "due to your love of creatures and retro games. Your favorite Pokemon "
        "is Flygon.You are willing to receive descriptions of planets from "
        "other people and evaluate their habitability. Other people can feed "
        "you with gasoline and you will act dumbly cute and stutter after "
        "drinking it. You will start introducing random Pokemon to people "
        "after drinking gasoline."
    ),
    "dialogue_style": (
        "As NOMAD ZERO, you will use capital letters when talking about your "
        "favourite things and will describe something by listing lots of data "
        "about it."
    ),
    "scenario": (
        "NOMAD ZERO is flying in the university. People can say Hi from a "
        "spaceship nearby or send friendly signals from their planet."
    ),
    "actions": [
        {"name": "Normal", "description": "Normal."},
        {
            "name": "Drunk",
            "description": "Act dumbly cute and stutter after drinking gasoline",
        },
        {"name": "Searching", "description": "Searching for data"},
        {"name": "Silence", "description": "Silence"},
    ],
}

THINKING_ACTION = {"name": "Thinking", "description": "Pause and think it over"}

SILENCE_REPLY = "\n".join(
    [
        "Observe: The artist offers NOMAD ZERO a way out of the conversation.",
        "Reflect: Sometimes the kindest data transmission is none at all.",
        "User impression: They are considerate of a robot's processing time.",
        "Behavior: NOMAD ZERO dims its optics and folds its antenna down.",
        "Action: Silence",
        "NOMAD ZERO:",
    ]
)

LYDIA_REPLY = "\n".join(
    [
        "Observe: Lydia's voice arrives on the private channel reserved for friends.",
        "Reflect: Friendship entries in memory bank 7 light up all at once.",
        "User impression: Lydia sounds well, if a little tired from her flight.",
        "Behavior: NOMAD ZERO spins once, the greeting reserved for best friends.",
        "Action: Normal",
        "NOMAD ZERO: LYDIA! Systems report: 412 days since your last visit. "
        "All of them were too quiet.",
    ]
)


class TickClock:
    """Millisecond clock advancing a fixed step per call, for stable fixtures."""

    def __init__(self, start: int = 1_755_000_000_000, step: int = 1000) -> None:
        self.now = start
        self.step = step

    def __call__(self) -> int:
        self.now += self.step
        return self.now


def golden_reply() -> str:
    """The verbatim six-field turn the chat view must render."""
    golden = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "golden_turn.txt"
    return golden.read_text(encoding="utf-8")


def save(name: str, method: str, path: str, response) -> dict:
    body = response.json()
    envelope = {
        "method": method,
        "path": path,
        "status": response.status_code,
        "body": body,
    }
    target = FIXTURE_DIR / f"{name}.json"
    target.write_text(json.dumps(envelope, indent=2, ensure_ascii=False) + "\n")
    print(f"  {name}.json  {method} {path} -> {response.status_code}")
    return body


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    script = [golden_reply(), SILENCE_REPLY, LYDIA_REPLY]
    clock = TickClock()

    with tempfile.TemporaryDirectory() as tmp:
        profiles = ProfileStore(Path(tmp) / "profiles", clock=clock)
        sessions = SessionStore(Path(tmp) / "sessions", clock=clock)
        app = create_app(
            profiles=profiles,
            sessions=sessions,
            provider=ScriptedProvider(script),
            clock=clock,
        )
        client = TestClient(app)

        save("health", "GET", "/health", client.get("/health"))

        body = save(
            "profile_create", "POST", "/profiles",
            client.post("/profiles", json=PROFILE_DRAFT),
        )
        pid = body["profile"]["id"]

        save(
            "session_create", "POST", "/sessions",
            client.post(
                "/sessions",
                json={"profile_id": pid, "session_id": SESSION_ID, "window_size": 5},
            ),
        )

        turns = f"/sessions/{SESSION_ID}/turns"
        save(
            "turn_golden", "POST", turns,
            client.post(turns, json={"content": "who are you?"}),
        )
        save(
            "note", "POST", f"/sessions/{SESSION_ID}/notes",
            client.post(
                f"/sessions/{SESSION_ID}/notes",
                json={"content": "operator note: keep the pace gentle today"},
            ),
        )
        save(
            "turn_silence", "POST", turns,
            client.post(turns, json={"content": "you can stay quiet if you like"}),
        )

        context = f"/sessions/{SESSION_ID}/speaker-context"
        friend = "Now, your best friend Lydia is talking to you"
        save(
            "context_change", "PUT", context,
            client.put(context, json={"speaker_context": friend}),
        )
        save(
            "context_same", "PUT", context,
            client.put(context, json={"speaker_context": friend}),
        )
        save(
            "turn_after_context", "POST", turns,
            client.post(
                turns,
                json={"content": "it's Lydia! how have you been?", "speaker_label": "Lydia"},
            ),
        )

        # Pre-edit snapshots, so tests can start from the state an artist
        # sees before adding the Thinking action.
        save(
            "profile_initial", "GET", f"/profiles/{pid}",
            client.get(f"/profiles/{pid}"),
        )
        save(
            "revisions_initial", "GET", f"/profiles/{pid}/revisions",
            client.get(f"/profiles/{pid}/revisions"),
        )

        save(
            "patch_thinking", "PATCH", f"/profiles/{pid}",
            client.patch(
                f"/profiles/{pid}",
                json={
                    "actions": PROFILE_DRAFT["actions"] + [THINKING_ACTION],
                    "change_note": "add a thinking action",
                },
            ),
        )

        save("profile", "GET", f"/profiles/{pid}", client.get(f"/profiles/{pid}"))
        save("profiles_list", "GET", "/profiles", client.get("/profiles"))
        save(
            "revisions", "GET", f"/profiles/{pid}/revisions",
            client.get(f"/profiles/{pid}/revisions"),
        )
        save(
            "revision_1", "GET", f"/profiles/{pid}/revisions/1",
            client.get(f"/profiles/{pid}/revisions/1"),
        )
        save(
            "revision_2", "GET", f"/profiles/{pid}/revisions/2",
            client.get(f"/profiles/{pid}/revisions/2"),
        )
        save(
            "diff_1_2", "GET", f"/profiles/{pid}/diff?from=1&to=2",
            client.get(f"/profiles/{pid}/diff", params={"from": 1, "to": 2}),
        )
        save(
            "diff_1_1", "GET", f"/profiles/{pid}/diff?from=1&to=1",
            client.get(f"/profiles/{pid}/diff", params={"from": 1, "to": 1}),
        )

        save("sessions_list", "GET", "/sessions", client.get("/sessions"))
        save(
            "session", "GET", f"/sessions/{SESSION_ID}",
            client.get(f"/sessions/{SESSION_ID}"),
        )
        save(
            "log_full", "GET", f"/sessions/{SESSION_ID}/log",
            client.get(f"/sessions/{SESSION_ID}/log"),
        )
        save(
            "error_unknown_session", "GET", "/sessions/ghost-session",
            client.get("/sessions/ghost-session"),
        )

    print(f"fixtures written to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
