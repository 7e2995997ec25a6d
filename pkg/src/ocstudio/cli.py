"""Command-line interface.

Subcommands::

    ocstudio serve    [--config FILE] [--listen HOST:PORT]
    ocstudio profile  create --file DRAFT.json
    ocstudio profile  update PROFILE_ID --file PATCH.json [--note TEXT]
    ocstudio chat     (--profile PID | --session SID) [--message TEXT] ...
    ocstudio export   SESSION_ID [--format records|transcript] [--out FILE]
    ocstudio import   --file FILE
    ocstudio replay   SESSION_ID [--config FILE]

Everything except ``serve`` and ``replay`` talks to a running service over
HTTP (``--base-url``, default derived from the config's listen address).
``replay`` works directly on the storage directory: it re-runs the
session's inputs against its own recorded outputs and verifies the
transcript reproduces exactly.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from . import __version__
from .config import AppConfig, load_config, make_provider
from .engine import Engine, transcript_view
from .errors import OcstudioError
from .profile import ProfileStore
from .provider import ScriptedProvider
from .session import SessionStore
from .trajectory import (
    ACTION_LABEL,
    BEHAVIOR_LABEL,
    IMPRESSION_LABEL,
    OBSERVE_LABEL,
    REFLECT_LABEL,
    SILENCE_ACTION,
)


class CliError(Exception):
    """Operational failure that should print once and exit 1."""


def _make_client(base_url: str) -> httpx.Client:
    """Build the HTTP client; tests substitute an in-process transport."""

    return httpx.Client(base_url=base_url, timeout=60.0)


def _checked(response: httpx.Response) -> dict:
    """Return a JSON body, or raise CliError from the error envelope."""

    try:
        body = response.json()
    except ValueError:
        body = None
    if response.status_code >= 400:
        if isinstance(body, dict) and "error" in body:
            error = body["error"]
            raise CliError(f"{error.get('code', 'error')}: {error.get('message', '')}")
        raise CliError(f"request failed with status {response.status_code}")
    if not isinstance(body, dict):
        raise CliError("service returned an unexpected non-JSON body")
    return body


def _base_url(args: argparse.Namespace, config: AppConfig) -> str:
    if args.base_url:
        return args.base_url.rstrip("/")
    return f"http://{config.server.host}:{config.server.port}"


def _read_json_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CliError(f"{path} must contain a JSON object")
    return data


def _print_turn(body: dict, *, show_trajectory: bool) -> None:
    entry = body["entry"]
    trajectory = entry.get("trajectory") or {}
    if show_trajectory:
        for label, key in (
            (OBSERVE_LABEL, "observe"),
            (REFLECT_LABEL, "reflect"),
            (IMPRESSION_LABEL, "impression"),
            (BEHAVIOR_LABEL, "behavior"),
            (ACTION_LABEL, "action"),
        ):
            print(f"  {label}: {trajectory.get(key, '')}")
    reply = entry["content"]
    if not reply and trajectory.get("action") == SILENCE_ACTION:
        print(f"{entry['speaker_label']}: (silence)")
    else:
        print(f"{entry['speaker_label']}: {reply}")
    degradations = body.get("degradations") or []
    if degradations:
        print(f"  [degraded: {', '.join(degradations)}]", file=sys.stderr)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_serve(args: argparse.Namespace) -> int:
    from .api import create_app
    from .config import parse_listen

    config = load_config(args.config)
    host, port = config.server.host, config.server.port
    if args.listen:
        host, port = parse_listen(args.listen)
    app = create_app(config)
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def cmd_profile_create(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    draft = _read_json_file(args.file)
    with _make_client(_base_url(args, config)) as client:
        body = _checked(client.post("/profiles", json=draft))
    profile = body["profile"]
    print(f"created profile {profile['id']} ({profile['name']}) revision 1")
    return 0


def cmd_profile_update(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    patch = _read_json_file(args.file)
    if args.note:
        patch["change_note"] = args.note
    with _make_client(_base_url(args, config)) as client:
        body = _checked(client.patch(f"/profiles/{args.profile_id}", json=patch))
    revision = body["revision"]
    print(
        f"updated profile {args.profile_id} to revision "
        f"{revision['revision_number']}"
    )
    removed = revision.get("removed_actions") or []
    if removed:
        print(f"  removed actions: {', '.join(removed)}")
    return 0


def _ensure_session(client, args: argparse.Namespace) -> str:
    if args.session:
        _checked(client.get(f"/sessions/{args.session}"))
        return args.session
    payload: dict = {"profile_id": args.profile}
    if args.context:
        payload["speaker_context"] = args.context
    if args.window is not None:
        payload["window_size"] = args.window
    body = _checked(client.post("/sessions", json=payload))
    session_id = body["session"]["session_id"]
    print(f"session: {session_id}", file=sys.stderr)
    return session_id


def cmd_chat(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    with _make_client(_base_url(args, config)) as client:
        session_id = _ensure_session(client, args)

        def take(text: str) -> None:
            payload: dict = {"content": text}
            if args.speaker:
                payload["speaker_label"] = args.speaker
            body = _checked(client.post(f"/sessions/{session_id}/turns", json=payload))
            _print_turn(body, show_trajectory=args.show_trajectory)

        if args.message is not None:
            take(args.message)
            return 0

        # Interactive loop; EOF or /quit ends it.
        while True:
            try:
                line = input("> ")
            except EOFError:
                print()
                return 0
            if line.strip() == "/quit":
                return 0
            if not line.strip():
                continue
            try:
                take(line)
            except CliError as exc:
                print(f"error: {exc}", file=sys.stderr)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    with _make_client(_base_url(args, config)) as client:
        response = client.get(
            f"/sessions/{args.session_id}/export",
            params={"format": args.format},
        )
        if response.status_code >= 400:
            _checked(response)
        data = response.content
    if args.out:
        Path(args.out).write_bytes(data)
        print(f"wrote {len(data)} bytes to {args.out}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    return 0


def cmd_import(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc}") from exc
    with _make_client(_base_url(args, config)) as client:
        body = _checked(client.post("/sessions/import", content=data))
    print(f"imported session {body['session']['session_id']}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    profiles = ProfileStore(config.storage.profiles_root)
    sessions = SessionStore(config.storage.sessions_root)
    engine = Engine(
        profiles,
        sessions,
        make_provider(config.provider),
        model_id=config.provider.model,
        temperature=config.defaults.temperature,
        max_tokens=config.defaults.max_tokens,
        max_retries=config.defaults.max_retries,
    )
    script = engine.original_script(args.session_id)
    replayed = engine.replay(args.session_id, ScriptedProvider(script))
    original = sessions.entries(args.session_id)
    if transcript_view(replayed) == transcript_view(original):
        print(f"replay OK: {len(replayed)} entries reproduced")
        return 0
    print("replay MISMATCH:", file=sys.stderr)
    for i, (a, b) in enumerate(zip(transcript_view(original), transcript_view(replayed))):
        if a != b:
            print(f"  entry {i}: {a!r} != {b!r}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocstudio",
        description="Original-character chat studio: profiles, sessions, turns.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="path to a TOML config file")
        p.add_argument(
            "--base-url",
            default=None,
            help="service URL (default: from config listen address)",
        )

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None, help="path to a TOML config file")
    p.add_argument("--listen", default=None, help="override HOST:PORT to bind")
    p.set_defaults(func=cmd_serve)

    profile = sub.add_parser("profile", help="manage character profiles")
    profile_sub = profile.add_subparsers(dest="profile_command", required=True)

    p = profile_sub.add_parser("create", help="create a profile from a JSON draft")
    common(p)
    p.add_argument("--file", required=True, help="JSON file with the profile draft")
    p.set_defaults(func=cmd_profile_create)

    p = profile_sub.add_parser("update", help="apply a JSON patch to a profile")
    common(p)
    p.add_argument("profile_id")
    p.add_argument("--file", required=True, help="JSON file with the patch")
    p.add_argument("--note", default="", help="change note for the revision")
    p.set_defaults(func=cmd_profile_update)

    p = sub.add_parser("chat", help="send messages to a character")
    common(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--profile", help="profile id; opens a new session")
    group.add_argument("--session", help="existing session id to continue")
    p.add_argument("--message", default=None, help="send one message and exit")
    p.add_argument("--speaker", default=None, help="speaker label for the cue line")
    p.add_argument("--context", default=None, help="speaker context for a new session")
    p.add_argument("--window", type=int, default=None, help="dialogue window size")
    p.add_argument(
        "--show-trajectory",
        action="store_true",
        help="print the reasoning fields above each reply",
    )
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("export", help="download a session log")
    common(p)
    p.add_argument("session_id")
    p.add_argument(
        "--format",
        choices=["records", "transcript"],
        default="records",
        help="records (line-delimited JSON) or transcript (plain text)",
    )
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import", help="upload a previously exported session log")
    common(p)
    p.add_argument("--file", required=True, help="log file to import")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser(
        "replay", help="re-run a stored session and verify it reproduces"
    )
    p.add_argument("session_id")
    p.add_argument("--config", default=None, help="path to a TOML config file")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OcstudioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: cannot reach the service: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print(file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
