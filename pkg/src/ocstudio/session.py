"""Conversation sessions: the append-only log, the dialogue window, exports.

A session belongs to one profile and stores every message as an immutable
record in a per-session log file: a header record first, then entry and
context-change records in arrival order. Entries carry a per-session
monotonic id shared with context changes, so a single cursor pages the whole
log. Operator notes live in the log like any entry but are never part of the
dialogue window — they are configuration-channel traffic, invisible to the
character.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import FormatError, NotFoundError, StorageError, ValidationError
from .records import decode_stream, encode_record, utc_now_ms
from .trajectory import Trajectory

__all__ = [
    "ARTIST_AUTHOR",
    "CHARACTER_AUTHOR",
    "OPERATOR_AUTHOR",
    "AUTHOR_KINDS",
    "RECORDS_FORMAT",
    "TRANSCRIPT_FORMAT",
    "DEFAULT_WINDOW_SIZE",
    "ConversationEntry",
    "ContextChange",
    "Session",
    "SessionStore",
]

ARTIST_AUTHOR = "artist_as_speaker"
CHARACTER_AUTHOR = "character"
OPERATOR_AUTHOR = "operator_note"
AUTHOR_KINDS = (ARTIST_AUTHOR, CHARACTER_AUTHOR, OPERATOR_AUTHOR)

RECORDS_FORMAT = "line-delimited-records"
TRANSCRIPT_FORMAT = "plain-transcript"

DEFAULT_WINDOW_SIZE = 5

_HEADER_RECORD = "session"
_ENTRY_RECORD = "entry"
_CONTEXT_RECORD = "context_change"


@dataclass(frozen=True)
class ConversationEntry:
    entry_id: int
    session_id: str
    author_kind: str
    speaker_label: str
    content: str
    trajectory: Trajectory | None
    profile_revision: int | None
    timestamp: int

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "session_id": self.session_id,
            "author_kind": self.author_kind,
            "speaker_label": self.speaker_label,
            "content": self.content,
            "trajectory": self.trajectory.to_dict() if self.trajectory else None,
            "profile_revision": self.profile_revision,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class ContextChange:
    """Audit record for one speaker-context switch (old may equal new)."""

    seq: int
    session_id: str
    old: str
    new: str
    timestamp: int

    @property
    def changed(self) -> bool:
        return self.old != self.new

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "old": self.old,
            "new": self.new,
            "changed": self.changed,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class Session:
    session_id: str
    profile_id: str
    speaker_context: str
    window_size: int
    created_at: int

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "profile_id": self.profile_id,
            "speaker_context": self.speaker_context,
            "window_size": self.window_size,
            "created_at": self.created_at,
        }


class _SessionState:
    __slots__ = ("session", "entries", "context_changes", "next_seq")

    def __init__(self, session: Session):
        self.session = session
        self.entries: list[ConversationEntry] = []
        self.context_changes: list[ContextChange] = []
        self.next_seq = 1


def _entry_from_record(record: dict) -> ConversationEntry:
    trajectory = record["trajectory"]
    return ConversationEntry(
        entry_id=record["seq"],
        session_id=record["session_id"],
        author_kind=record["author_kind"],
        speaker_label=record["speaker_label"],
        content=record["content"],
        trajectory=Trajectory.from_dict(trajectory) if trajectory else None,
        profile_revision=record["profile_revision"],
        timestamp=record["ts"],
    )


class SessionStore:
    """Directory-backed session persistence: one append-only log per session."""

    def __init__(self, root: str | Path, *, clock: Callable[[], int] = utc_now_ms):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._states: dict[str, _SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    # -- locking / paths ------------------------------------------------------

    def lock(self, session_id: str) -> threading.Lock:
        """The per-session writer lock (also used by the engine's turn mutex)."""
        with self._guard:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.log"

    # -- record folding --------------------------------------------------------

    def _fold(self, data: bytes, *, strict_source: str = "log") -> _SessionState:
        """Replay a record stream into in-memory state, validating shape.

        Raises FormatError pointing at the offending record's byte offset.
        """
        records = decode_stream(data)
        if not records:
            raise FormatError(f"{strict_source} has no header record", offset=0)
        header, header_offset = records[0]
        if header["t"] != _HEADER_RECORD:
            raise FormatError(
                f"{strict_source} must start with a session header",
                offset=header_offset,
            )
        try:
            session = Session(
                session_id=header["session_id"],
                profile_id=header["profile_id"],
                speaker_context=header["speaker_context"],
                window_size=header["window_size"],
                created_at=header["ts"],
            )
        except KeyError as exc:
            raise FormatError(
                f"session header is missing field {exc}", offset=header_offset
            ) from None
        if not isinstance(session.window_size, int) or session.window_size < 0:
            raise FormatError(
                "session header window_size must be a nonnegative integer",
                offset=header_offset,
            )

        state = _SessionState(session)
        for record, offset in records[1:]:
            kind = record["t"]
            try:
                seq = record["seq"]
                if seq != state.next_seq:
                    raise FormatError(
                        f"record sequence jumps to {seq}, expected {state.next_seq}",
                        offset=offset,
                    )
                if record["session_id"] != session.session_id:
                    raise FormatError(
                        "record belongs to a different session", offset=offset
                    )
                if kind == _ENTRY_RECORD:
                    if record["author_kind"] not in AUTHOR_KINDS:
                        raise FormatError(
                            f"unknown author kind {record['author_kind']!r}",
                            offset=offset,
                        )
                    has_trajectory = record["trajectory"] is not None
                    if has_trajectory != (record["author_kind"] == CHARACTER_AUTHOR):
                        raise FormatError(
                            "trajectory must be present exactly for character entries",
                            offset=offset,
                        )
                    state.entries.append(_entry_from_record(record))
                elif kind == _CONTEXT_RECORD:
                    change = ContextChange(
                        seq=seq,
                        session_id=record["session_id"],
                        old=record["old"],
                        new=record["new"],
                        timestamp=record["ts"],
                    )
                    state.context_changes.append(change)
                    state.session = Session(
                        session_id=session.session_id,
                        profile_id=session.profile_id,
                        speaker_context=change.new,
                        window_size=session.window_size,
                        created_at=session.created_at,
                    )
                else:
                    raise FormatError(
                        f"unknown record type {kind!r}", offset=offset
                    )
            except KeyError as exc:
                raise FormatError(
                    f"record is missing field {exc}", offset=offset
                ) from None
            state.next_seq += 1
        return state

    def _load(self, session_id: str) -> _SessionState:
        if session_id in self._states:
            return self._states[session_id]
        path = self._path(session_id)
        if not path.exists():
            raise NotFoundError(f"no session {session_id!r}")
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise StorageError(f"session {session_id!r} is unreadable: {exc}") from exc
        state = self._fold(data)
        self._states[session_id] = state
        return state

    def _append_line(self, session_id: str, line: str) -> None:
        with open(self._path(session_id), "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    # -- operations -------------------------------------------------------------

    def create_session(
        self,
        profile_id: str,
        speaker_context: str,
        *,
        window_size: int = DEFAULT_WINDOW_SIZE,
        session_id: str | None = None,
    ) -> Session:
        if not isinstance(window_size, int) or window_size < 0:
            raise ValidationError("window_size must be a nonnegative integer")
        session_id = session_id or uuid.uuid4().hex
        if self._path(session_id).exists():
            raise ValidationError(f"session {session_id!r} already exists")
        session = Session(
            session_id=session_id,
            profile_id=profile_id,
            speaker_context=speaker_context,
            window_size=window_size,
            created_at=self.clock(),
        )
        header = encode_record(
            _HEADER_RECORD,
            session.created_at,
            {
                "session_id": session.session_id,
                "profile_id": session.profile_id,
                "window_size": session.window_size,
                "speaker_context": session.speaker_context,
            },
        )
        with self.lock(session_id):
            self._append_line(session_id, header)
            self._states[session_id] = _SessionState(session)
        return session

    def get_session(self, session_id: str) -> Session:
        return self._load(session_id).session

    def list_sessions(self) -> list[Session]:
        sessions = []
        for path in sorted(self.root.glob("*.log")):
            sessions.append(self.get_session(path.stem))
        return sessions

    def entries(self, session_id: str) -> list[ConversationEntry]:
        return list(self._load(session_id).entries)

    def append_entry(
        self,
        session_id: str,
        author_kind: str,
        speaker_label: str,
        content: str,
        *,
        trajectory: Trajectory | None = None,
        profile_revision: int | None = None,
    ) -> ConversationEntry:
        if author_kind not in AUTHOR_KINDS:
            raise ValidationError(f"unknown author kind {author_kind!r}")
        if (trajectory is not None) != (author_kind == CHARACTER_AUTHOR):
            raise ValidationError(
                "a trajectory accompanies character entries and only those"
            )
        if not isinstance(content, str) or not isinstance(speaker_label, str):
            raise ValidationError("speaker_label and content must be text")
        with self.lock(session_id):
            state = self._load(session_id)
            entry = ConversationEntry(
                entry_id=state.next_seq,
                session_id=session_id,
                author_kind=author_kind,
                speaker_label=speaker_label,
                content=content,
                trajectory=trajectory,
                profile_revision=profile_revision,
                timestamp=self.clock(),
            )
            line = encode_record(
                _ENTRY_RECORD,
                entry.timestamp,
                {
                    "seq": entry.entry_id,
                    "session_id": session_id,
                    "author_kind": author_kind,
                    "speaker_label": speaker_label,
                    "content": content,
                    "trajectory": trajectory.to_dict() if trajectory else None,
                    "profile_revision": profile_revision,
                },
            )
            self._append_line(session_id, line)
            state.entries.append(entry)
            state.next_seq += 1
        return entry

    def dialogue_window(self, session_id: str) -> list[ConversationEntry]:
        """The last W dialogue entries (artist and character), oldest first."""
        state = self._load(session_id)
        window_size = state.session.window_size
        if window_size <= 0:
            return []
        dialogue = [
            entry
            for entry in state.entries
            if entry.author_kind in (ARTIST_AUTHOR, CHARACTER_AUTHOR)
        ]
        return dialogue[-window_size:]

    def set_speaker_context(self, session_id: str, text: str) -> ContextChange:
        if not isinstance(text, str):
            raise ValidationError("speaker context must be text")
        with self.lock(session_id):
            state = self._load(session_id)
            change = ContextChange(
                seq=state.next_seq,
                session_id=session_id,
                old=state.session.speaker_context,
                new=text,
                timestamp=self.clock(),
            )
            line = encode_record(
                _CONTEXT_RECORD,
                change.timestamp,
                {
                    "seq": change.seq,
                    "session_id": session_id,
                    "old": change.old,
                    "new": change.new,
                },
            )
            self._append_line(session_id, line)
            state.context_changes.append(change)
            state.session = Session(
                session_id=state.session.session_id,
                profile_id=state.session.profile_id,
                speaker_context=text,
                window_size=state.session.window_size,
                created_at=state.session.created_at,
            )
            state.next_seq += 1
        return change

    def context_changes(self, session_id: str) -> list[ContextChange]:
        return list(self._load(session_id).context_changes)

    def read_records(
        self, session_id: str, *, after: int = 0, limit: int | None = None
    ) -> tuple[list[dict], int]:
        """Page through a session's records by sequence cursor.

        Returns (records, next_cursor): entry and context_change records with
        seq > after, in order, each shaped as its public document. The cursor
        is the last returned seq (or ``after`` when nothing new).
        """
        state = self._load(session_id)
        merged: list[tuple[int, dict]] = []
        for entry in state.entries:
            merged.append((entry.entry_id, {"kind": "entry", **entry.to_dict()}))
        for change in state.context_changes:
            merged.append((change.seq, {"kind": "context_change", **change.to_dict()}))
        merged.sort(key=lambda pair: pair[0])
        selected = [(seq, doc) for seq, doc in merged if seq > after]
        if limit is not None:
            selected = selected[: max(limit, 0)]
        cursor = selected[-1][0] if selected else after
        return [doc for _seq, doc in selected], cursor

    # -- export / import ---------------------------------------------------------

    def export_log(self, session_id: str, format: str = RECORDS_FORMAT) -> bytes:
        if format == RECORDS_FORMAT:
            self._load(session_id)  # existence check
            return self._path(session_id).read_bytes()
        if format == TRANSCRIPT_FORMAT:
            lines = [
                f"{entry.speaker_label}: {entry.content}"
                for entry in self._load(session_id).entries
                if entry.author_kind in (ARTIST_AUTHOR, CHARACTER_AUTHOR)
            ]
            text = "\n".join(lines) + ("\n" if lines else "")
            return text.encode("utf-8")
        raise ValidationError(f"unknown export format {format!r}")

    def import_log(self, data: bytes) -> Session:
        """Install an exported record stream as a session, byte-for-byte.

        The stream is fully validated first; the original bytes (timestamps
        included) are then written verbatim so a subsequent export is
        identical. Importing over an existing session id is refused.
        """
        state = self._fold(data, strict_source="imported stream")
        session_id = state.session.session_id
        with self.lock(session_id):
            path = self._path(session_id)
            if path.exists():
                raise ValidationError(
                    f"session {session_id!r} already exists; refusing to overwrite"
                )
            tmp = path.with_suffix(".log.tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
            self._states[session_id] = state
        return state.session
