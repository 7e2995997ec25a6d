"""Turn orchestration: prompt assembly, retries, fallback, and replay.

The engine glues the stores to a text-completion provider.  One call to
:meth:`Engine.take_turn` performs a full character turn:

1. snapshot the dialogue window *before* the incoming message is appended,
2. persist the incoming artist message,
3. render the formative prompt and dispatch it to the provider,
4. parse the structured reply, re-prompting with a corrective instruction
   on parse failures, and
5. persist the parsed character turn.

Every degradation from the ideal single-shot path is reported on the
returned :class:`TurnOutcome` so callers can surface it.
"""

from __future__ import annotations

import dataclasses
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ScriptMismatch, TransportError, TurnFailed, ValidationError
from .profile import CharacterProfile, ProfileStore
from .prompting import render_format_directive, render_prompt
from .provider import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    PROVIDER_ERROR,
    Provider,
    ProviderRequest,
    ScriptedProvider,
)
from .session import (
    ARTIST_AUTHOR,
    CHARACTER_AUTHOR,
    OPERATOR_AUTHOR,
    ConversationEntry,
    Session,
    SessionStore,
)
from .trajectory import (
    ParseError,
    ParseErrorKind,
    Trajectory,
    normalize_action,
    parse_trajectory,
    serialize_trajectory,
)

DEFAULT_MAX_RETRIES = 2
DEFAULT_MODEL_ID = "mock-model"

#: Degradation markers reported on :class:`TurnOutcome`.
RETRIED_PARSE = "retried_parse"
ACTION_FALLBACK = "action_fallback"
WINDOW_SHRUNK = "window_shrunk"

DEFAULT_ARTIST_LABEL = "<Artist>"


@dataclass(frozen=True)
class TurnOutcome:
    """Result of a successful character turn."""

    entry: ConversationEntry
    attempts: int
    degradations: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "entry": self.entry.to_dict(),
            "attempts": self.attempts,
            "degradations": list(self.degradations),
        }


def transcript_view(entries: Iterable[ConversationEntry]) -> list[tuple]:
    """Project entries onto the fields that define conversational meaning.

    Timestamps, entry ids, and profile revision stamps are excluded so
    transcripts produced at different times (for example by
    :meth:`Engine.replay`, possibly after further profile edits) can be
    compared. A material profile change still shows up as a content or
    trajectory difference; a bookkeeping stamp alone never should.
    """

    view = []
    for entry in entries:
        trajectory = entry.trajectory.to_dict() if entry.trajectory else None
        view.append(
            (
                entry.author_kind,
                entry.speaker_label,
                entry.content,
                trajectory,
            )
        )
    return view


class Engine:
    """Drives character turns against a provider with retry and fallback."""

    def __init__(
        self,
        profiles: ProfileStore,
        sessions: SessionStore,
        provider: Provider,
        *,
        model_id: str = DEFAULT_MODEL_ID,
        temperature: float = DEFAULT_TEMPERATURE,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        max_retries: int = DEFAULT_MAX_RETRIES,
        prompt_char_budget: int | None = None,
    ) -> None:
        if max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if prompt_char_budget is not None and prompt_char_budget <= 0:
            raise ValidationError("prompt_char_budget must be positive when set")
        self.profiles = profiles
        self.sessions = sessions
        self.provider = provider
        self.model_id = model_id
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.max_retries = max_retries
        self.prompt_char_budget = prompt_char_budget
        self._turn_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # ------------------------------------------------------------------
    # Session conveniences

    def create_session(
        self,
        profile_id: str,
        *,
        speaker_context: str | None = None,
        window_size: int | None = None,
        session_id: str | None = None,
    ) -> Session:
        """Open a session for ``profile_id``.

        The speaker context defaults to the profile's own, so a freshly
        created session renders the same prompt the profile editor previews.
        """

        profile = self.profiles.get_profile(profile_id)
        context = profile.speaker_context if speaker_context is None else speaker_context
        kwargs: dict = {"session_id": session_id}
        if window_size is not None:
            kwargs["window_size"] = window_size
        return self.sessions.create_session(profile_id, context, **kwargs)

    def set_speaker_context(self, session_id: str, text: str):
        return self.sessions.set_speaker_context(session_id, text)

    # ------------------------------------------------------------------
    # Turns

    def take_turn(
        self,
        session_id: str,
        content: str,
        *,
        speaker_label: str = DEFAULT_ARTIST_LABEL,
    ) -> TurnOutcome:
        """Run one full character turn for an incoming artist message."""

        if not isinstance(content, str) or not content.strip():
            raise ValidationError("incoming message content must be a nonempty string")
        if not isinstance(speaker_label, str) or not speaker_label.strip():
            raise ValidationError("speaker_label must be a nonempty string")
        with self._turn_lock(session_id):
            return self._take_turn_locked(session_id, content, speaker_label)

    def _take_turn_locked(
        self, session_id: str, content: str, speaker_label: str
    ) -> TurnOutcome:
        session = self.sessions.get_session(session_id)
        profile = self.profiles.get_profile(session.profile_id)
        revision = self.profiles.latest_revision_number(profile.id)

        # The window is captured before the incoming message lands: the
        # incoming message is rendered separately as the turn cue, never as
        # a chat-window line.
        window = [
            (entry.speaker_label, entry.content)
            for entry in self.sessions.dialogue_window(session_id)
        ]
        self.sessions.append_entry(session_id, ARTIST_AUTHOR, speaker_label, content)

        bundle = render_prompt(
            profile,
            session.speaker_context,
            window,
            incoming=(speaker_label, content),
            max_chars=self.prompt_char_budget,
        )
        degradations: list[str] = []
        if bundle.window_shrunk:
            degradations.append(WINDOW_SHRUNK)

        trajectory: Trajectory | None = None
        last_error: ParseError | None = None
        last_raw: str | None = None
        corrective: str | None = None
        attempts = 0
        for attempt in range(1 + self.max_retries):
            attempts = attempt + 1
            system_text = bundle.system_text
            if corrective is not None:
                system_text = system_text + "\n\n" + corrective
            request = ProviderRequest(
                model_id=self.model_id,
                system_prompt=system_text,
                turn_cue=bundle.turn_cue,
                temperature=self.temperature,
                max_tokens=self.max_tokens,
            )
            reply = self.provider.complete(request)
            if reply.finish_reason == PROVIDER_ERROR:
                raise TransportError(
                    f"provider failed during turn: {reply.error_message}",
                    retriable=reply.retriable,
                )
            parsed = parse_trajectory(reply.raw_text, profile.actions, profile.name)
            if isinstance(parsed, Trajectory):
                trajectory = parsed
                break
            last_error, last_raw = parsed, reply.raw_text
            if attempt < self.max_retries:
                if RETRIED_PARSE not in degradations:
                    degradations.append(RETRIED_PARSE)
                corrective = self._corrective_instruction(profile, parsed)

        if trajectory is None:
            assert last_error is not None
            if last_error.kind is ParseErrorKind.UNKNOWN_ACTION:
                trajectory = self._fallback_to_normal(last_raw, last_error, profile)
                if trajectory is not None:
                    degradations.append(ACTION_FALLBACK)
            if trajectory is None:
                # The incoming artist message stays persisted so the failure
                # is visible in the log and the turn can be retried.
                raise TurnFailed(
                    f"turn failed after {attempts} attempt(s): {last_error.describe()}",
                    parse_error=last_error,
                    attempts=attempts,
                )

        entry = self.sessions.append_entry(
            session_id,
            CHARACTER_AUTHOR,
            profile.name,
            trajectory.reply,
            trajectory=trajectory,
            profile_revision=revision,
        )
        return TurnOutcome(entry=entry, attempts=attempts, degradations=tuple(degradations))

    def handle_operator_message(
        self,
        session_id: str,
        content: str,
        *,
        speaker_label: str = DEFAULT_ARTIST_LABEL,
    ) -> ConversationEntry:
        """Record an operator note.

        Operator notes are audit-only: they are excluded from the dialogue
        window, from rendered prompts, and from plain-transcript exports, so
        they can never leak into what the character sees.
        """

        if not isinstance(content, str) or not content.strip():
            raise ValidationError("operator note content must be a nonempty string")
        return self.sessions.append_entry(
            session_id, OPERATOR_AUTHOR, speaker_label, content
        )

    # ------------------------------------------------------------------
    # Replay

    def original_script(self, session_id: str) -> list[str]:
        """Reconstruct the raw provider outputs behind a session's turns.

        Each stored character turn is re-serialized into the canonical
        six-field layout, which parses back to the identical trajectory.
        Feeding this script to :meth:`replay` reproduces the session.
        """

        session = self.sessions.get_session(session_id)
        profile = self.profiles.get_profile(session.profile_id)
        script = []
        for entry in self.sessions.entries(session_id):
            if entry.author_kind == CHARACTER_AUTHOR and entry.trajectory is not None:
                script.append(serialize_trajectory(entry.trajectory, profile.name))
        return script

    def replay(self, session_id: str, provider: Provider) -> list[ConversationEntry]:
        """Re-run a session's inputs against ``provider`` in a scratch store.

        All artist messages, operator notes, and speaker-context changes are
        replayed in their original order; character turns are regenerated by
        the provider.  The original session is never touched.  Returns the
        regenerated entries.  Raises :class:`ScriptMismatch` when a scripted
        provider's reply count diverges from the session's turn count.
        """

        session = self.sessions.get_session(session_id)
        entries = self.sessions.entries(session_id)
        changes = self.sessions.context_changes(session_id)
        initial_context = changes[0].old if changes else session.speaker_context

        if isinstance(provider, ScriptedProvider):
            artist_turns = sum(1 for e in entries if e.author_kind == ARTIST_AUTHOR)
            if provider.remaining() < artist_turns:
                raise ScriptMismatch(
                    f"script holds {provider.remaining()} replies but the session "
                    f"has {artist_turns} artist messages"
                )

        steps = self._replay_steps(session_id)
        with tempfile.TemporaryDirectory(prefix="ocstudio-replay-") as tmp:
            scratch = SessionStore(Path(tmp), clock=self.sessions.clock)
            runner = Engine(
                self.profiles,
                scratch,
                provider,
                model_id=self.model_id,
                temperature=self.temperature,
                max_tokens=self.max_tokens,
                max_retries=self.max_retries,
                prompt_char_budget=self.prompt_char_budget,
            )
            scratch.create_session(
                session.profile_id,
                initial_context,
                window_size=session.window_size,
                session_id=session_id,
            )
            for kind, payload in steps:
                if kind == "artist":
                    label, content = payload
                    try:
                        runner.take_turn(session_id, content, speaker_label=label)
                    except TransportError as exc:
                        if "script exhausted" in str(exc):
                            raise ScriptMismatch(
                                "script ran out of replies mid-session"
                            ) from exc
                        raise
                elif kind == "note":
                    label, content = payload
                    runner.handle_operator_message(
                        session_id, content, speaker_label=label
                    )
                elif kind == "context":
                    scratch.set_speaker_context(session_id, payload)
            if isinstance(provider, ScriptedProvider) and provider.remaining() > 0:
                raise ScriptMismatch(
                    f"script has {provider.remaining()} unused replies after replay"
                )
            return scratch.entries(session_id)

    def _replay_steps(self, session_id: str) -> list[tuple[str, object]]:
        """Flatten a session's log into replayable input steps, in order."""

        records, _ = self.sessions.read_records(session_id)
        steps: list[tuple[str, object]] = []
        for record in records:
            if record["kind"] == "entry":
                if record["author_kind"] == ARTIST_AUTHOR:
                    steps.append(
                        ("artist", (record["speaker_label"], record["content"]))
                    )
                elif record["author_kind"] == OPERATOR_AUTHOR:
                    steps.append(
                        ("note", (record["speaker_label"], record["content"]))
                    )
            elif record["kind"] == "context_change":
                steps.append(("context", record["new"]))
        return steps

    # ------------------------------------------------------------------
    # Internals

    def _turn_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._turn_locks.get(session_id)
            if lock is None:
                lock = threading.Lock()
                self._turn_locks[session_id] = lock
            return lock

    @staticmethod
    def _corrective_instruction(profile: CharacterProfile, error: ParseError) -> str:
        """Build the reprompt suffix for a parse failure.

        It restates the format contract only; conversational content is
        untouched so the retry answers the same incoming message.
        """

        directive = render_format_directive(profile.name, profile.actions)
        return (
            "Your previous reply could not be accepted: "
            + error.describe()
            + ".\nReply again to the same message, and follow this format exactly:\n"
            + directive
        )

    @staticmethod
    def _fallback_to_normal(
        raw: str | None, error: ParseError, profile: CharacterProfile
    ) -> Trajectory | None:
        """Salvage a reply whose only defect is an unrecognized action name.

        The unknown token is temporarily admitted so the rest of the reply
        can be parsed, then the action is substituted with the profile's
        "Normal" action.  Returns None when the profile has no Normal action
        or the reply has other defects.
        """

        if raw is None or not error.detail:
            return None
        normal = normalize_action("Normal", profile.actions)
        if normal is None:
            return None
        widened: list = list(profile.actions) + [error.detail]
        parsed = parse_trajectory(raw, widened, profile.name)
        if not isinstance(parsed, Trajectory):
            return None
        return dataclasses.replace(parsed, action_name=normal)


__all__ = [
    "ACTION_FALLBACK",
    "DEFAULT_ARTIST_LABEL",
    "DEFAULT_MAX_RETRIES",
    "DEFAULT_MODEL_ID",
    "Engine",
    "RETRIED_PARSE",
    "TurnOutcome",
    "WINDOW_SHRUNK",
    "transcript_view",
]
