"""Character profiles, their action registries, and prompt revision history.

A profile is the artist-authored description of one original character:
name, pronoun, backstory, traits, dialogue style and samples, default
scenario, default speaker context, and the ordered action registry the model
must choose from each turn.

Every create or update renders the full system prompt and appends an
immutable ConfigRevision (numbered 1..k with no gaps) to the profile's
revision log, together with a line diff against the previous prompt and a
snapshot of the profile state, so any historical prompt can be reproduced
byte-for-byte.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

from .errors import NotFoundError, StorageError, ValidationError
from .linediff import diff_lines
from .prompting import TEMPLATE_VERSION, render_prompt
from .records import RECORD_VERSION, decode_stream, encode_record, utc_now_ms
from .trajectory import FIELD_LABELS

__all__ = [
    "DEFAULT_SPEAKER_CONTEXT",
    "ActionSpec",
    "CharacterProfile",
    "ConfigRevision",
    "default_actions",
    "ProfileStore",
]

#: Who is addressing the character unless the artist says otherwise.
DEFAULT_SPEAKER_CONTEXT = "Now, a human is talking to you"

#: Names that would collide with the output grammar's field labels.
_RESERVED_NAMES = frozenset(label.casefold() for label in FIELD_LABELS)

_REVISION_RECORD = "revision_marker"


@dataclass(frozen=True)
class ActionSpec:
    """One selectable action: a short label and a one-line description."""

    name: str
    description: str

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description}

    @classmethod
    def from_dict(cls, data: dict) -> "ActionSpec":
        return cls(name=data["name"], description=data.get("description", ""))


def default_actions() -> list[ActionSpec]:
    """The three built-in actions every new character starts with."""
    return [
        ActionSpec("Normal", "Normal reply"),
        ActionSpec("Relate", "Relate reply (relate to memories)"),
        ActionSpec("Silence", "Silence"),
    ]


@dataclass(frozen=True)
class CharacterProfile:
    id: str
    name: str
    pronoun: str = ""
    backstory: str = ""
    traits: str = ""
    dialogue_style: str = ""
    dialogue_samples: tuple[str, ...] = ()
    scenario: str = ""
    speaker_context: str = DEFAULT_SPEAKER_CONTEXT
    actions: tuple[ActionSpec, ...] = ()
    created_at: int = 0
    updated_at: int = 0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "pronoun": self.pronoun,
            "backstory": self.backstory,
            "traits": self.traits,
            "dialogue_style": self.dialogue_style,
            "dialogue_samples": list(self.dialogue_samples),
            "scenario": self.scenario,
            "speaker_context": self.speaker_context,
            "actions": [spec.to_dict() for spec in self.actions],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CharacterProfile":
        return cls(
            id=data["id"],
            name=data["name"],
            pronoun=data.get("pronoun", ""),
            backstory=data.get("backstory", ""),
            traits=data.get("traits", ""),
            dialogue_style=data.get("dialogue_style", ""),
            dialogue_samples=tuple(data.get("dialogue_samples", ())),
            scenario=data.get("scenario", ""),
            speaker_context=data.get("speaker_context", DEFAULT_SPEAKER_CONTEXT),
            actions=tuple(
                ActionSpec.from_dict(item) for item in data.get("actions", ())
            ),
            created_at=data.get("created_at", 0),
            updated_at=data.get("updated_at", 0),
        )


@dataclass(frozen=True)
class ConfigRevision:
    """An immutable snapshot of the rendered prompt after one profile change."""

    revision_number: int
    profile_id: str
    rendered_prompt: str
    diff: str
    change_note: str
    timestamp: int
    template_version: str = TEMPLATE_VERSION
    removed_actions: tuple[str, ...] = ()

    def to_dict(self, *, include_prompt: bool = True) -> dict:
        doc = {
            "revision_number": self.revision_number,
            "profile_id": self.profile_id,
            "change_note": self.change_note,
            "timestamp": self.timestamp,
            "template_version": self.template_version,
            "removed_actions": list(self.removed_actions),
            "diff": self.diff,
        }
        if include_prompt:
            doc["rendered_prompt"] = self.rendered_prompt
        return doc


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

_TEXT_FIELDS = (
    "name",
    "pronoun",
    "backstory",
    "traits",
    "dialogue_style",
    "scenario",
    "speaker_context",
)
_PATCHABLE_FIELDS = _TEXT_FIELDS + ("dialogue_samples", "actions")


def _validate_name(name: str) -> str:
    if not isinstance(name, str) or not name.strip():
        raise ValidationError("character name must be nonempty")
    name = name.strip()
    if ":" in name or "\n" in name or "\r" in name:
        raise ValidationError("character name may not contain ':' or line breaks")
    if name.casefold() in _RESERVED_NAMES:
        raise ValidationError(
            f"character name {name!r} collides with an output field label"
        )
    return name


def _validate_actions(raw: Iterable) -> tuple[ActionSpec, ...]:
    specs: list[ActionSpec] = []
    seen: set[str] = set()
    for item in raw:
        spec = item if isinstance(item, ActionSpec) else ActionSpec.from_dict(item)
        name = spec.name.strip() if isinstance(spec.name, str) else ""
        if not name:
            raise ValidationError("action name must be nonempty")
        if ":" in name or "\n" in name or "\r" in name:
            raise ValidationError(
                f"action name {spec.name!r} may not contain ':' or line breaks"
            )
        description = spec.description if isinstance(spec.description, str) else ""
        if "\n" in description or "\r" in description:
            raise ValidationError(
                f"action description for {name!r} must be a single line"
            )
        folded = name.casefold()
        if folded in seen:
            raise ValidationError(f"duplicate action name {name!r}")
        seen.add(folded)
        specs.append(ActionSpec(name, description))
    if not specs:
        raise ValidationError("action registry must contain at least one action")
    return tuple(specs)


def _validate_patch(patch: dict) -> dict:
    clean: dict = {}
    for key, value in patch.items():
        if key not in _PATCHABLE_FIELDS:
            raise ValidationError(f"unknown profile field {key!r}")
        if key == "name":
            clean[key] = _validate_name(value)
        elif key == "actions":
            clean[key] = _validate_actions(value)
        elif key == "dialogue_samples":
            if isinstance(value, str) or not isinstance(value, (list, tuple)):
                raise ValidationError("dialogue_samples must be a list of lines")
            for sample in value:
                if not isinstance(sample, str):
                    raise ValidationError("dialogue_samples must be a list of strings")
            clean[key] = tuple(value)
        else:
            if not isinstance(value, str):
                raise ValidationError(f"profile field {key!r} must be text")
            clean[key] = value
    return clean


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


def _render_revision_prompt(profile: CharacterProfile) -> str:
    return render_prompt(profile, profile.speaker_context, window=[]).rendered_text


class ProfileStore:
    """Directory-backed profile persistence with an append-only revision log.

    Layout: <root>/<profile_id>/metadata.json (current state) and
    <root>/<profile_id>/revisions.log (one record per revision). Writes are
    serialized per profile; reads always see a complete revision.
    """

    def __init__(self, root: str | Path, *, clock: Callable[[], int] = utc_now_ms):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._cache: dict[str, tuple[CharacterProfile, list[ConfigRevision]]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    # -- locking ------------------------------------------------------------

    def _lock(self, profile_id: str) -> threading.Lock:
        with self._guard:
            if profile_id not in self._locks:
                self._locks[profile_id] = threading.Lock()
            return self._locks[profile_id]

    # -- paths --------------------------------------------------------------

    def _dir(self, profile_id: str) -> Path:
        return self.root / profile_id

    def _metadata_path(self, profile_id: str) -> Path:
        return self._dir(profile_id) / "metadata.json"

    def _log_path(self, profile_id: str) -> Path:
        return self._dir(profile_id) / "revisions.log"

    # -- persistence --------------------------------------------------------

    def _write_metadata(self, profile: CharacterProfile) -> None:
        doc = dict(profile.to_dict())
        doc = {"v": RECORD_VERSION, **doc}
        path = self._metadata_path(profile.id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(doc, ensure_ascii=False, separators=(",", ":")),
            encoding="utf-8",
        )
        os.replace(tmp, path)

    def _append_revision(self, profile: CharacterProfile, rev: ConfigRevision) -> None:
        payload = {
            "n": rev.revision_number,
            "profile_id": rev.profile_id,
            "template_version": rev.template_version,
            "note": rev.change_note,
            "removed_actions": list(rev.removed_actions),
            "prompt": rev.rendered_prompt,
            "diff": rev.diff,
            "state": profile.to_dict(),
        }
        line = encode_record(_REVISION_RECORD, rev.timestamp, payload)
        with open(self._log_path(profile.id), "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def _load(self, profile_id: str) -> tuple[CharacterProfile, list[ConfigRevision]]:
        if profile_id in self._cache:
            return self._cache[profile_id]
        metadata_path = self._metadata_path(profile_id)
        if not metadata_path.exists():
            raise NotFoundError(f"no profile {profile_id!r}")
        try:
            profile = CharacterProfile.from_dict(
                json.loads(metadata_path.read_text(encoding="utf-8"))
            )
            revisions = []
            for record, _offset in decode_stream(self._log_path(profile_id).read_bytes()):
                if record["t"] != _REVISION_RECORD:
                    continue
                revisions.append(
                    ConfigRevision(
                        revision_number=record["n"],
                        profile_id=record["profile_id"],
                        rendered_prompt=record["prompt"],
                        diff=record["diff"],
                        change_note=record["note"],
                        timestamp=record["ts"],
                        template_version=record["template_version"],
                        removed_actions=tuple(record["removed_actions"]),
                    )
                )
        except (OSError, KeyError, ValueError) as exc:
            raise StorageError(f"profile {profile_id!r} is unreadable: {exc}") from exc
        self._cache[profile_id] = (profile, revisions)
        return self._cache[profile_id]

    def _states(self, profile_id: str) -> dict[int, CharacterProfile]:
        states: dict[int, CharacterProfile] = {}
        for record, _offset in decode_stream(self._log_path(profile_id).read_bytes()):
            if record["t"] == _REVISION_RECORD:
                states[record["n"]] = CharacterProfile.from_dict(record["state"])
        return states

    # -- operations ----------------------------------------------------------

    def create_profile(
        self, draft: dict, *, profile_id: str | None = None
    ) -> CharacterProfile:
        """Create a profile from draft fields; revision 1 is rendered at once.

        The draft must carry a nonempty name; omitted actions get the default
        registry (Normal / Relate / Silence).
        """
        if "name" not in draft:
            raise ValidationError("profile draft must include a name")
        draft = dict(draft)
        change_note = str(draft.pop("change_note", ""))
        fields = _validate_patch(draft)
        if "actions" not in fields:
            fields["actions"] = tuple(default_actions())
        profile_id = profile_id or uuid.uuid4().hex
        if self._metadata_path(profile_id).exists():
            raise ValidationError(f"profile {profile_id!r} already exists")
        ts = self.clock()
        profile = CharacterProfile(
            id=profile_id, created_at=ts, updated_at=ts, **fields
        )
        prompt = _render_revision_prompt(profile)
        revision = ConfigRevision(
            revision_number=1,
            profile_id=profile_id,
            rendered_prompt=prompt,
            diff="",
            change_note=change_note,
            timestamp=ts,
        )
        with self._lock(profile_id):
            self._dir(profile_id).mkdir(parents=True, exist_ok=True)
            self._write_metadata(profile)
            self._append_revision(profile, revision)
            self._cache[profile_id] = (profile, [revision])
        return profile

    def get_profile(self, profile_id: str) -> CharacterProfile:
        return self._load(profile_id)[0]

    def list_profiles(self) -> list[CharacterProfile]:
        profiles = []
        for entry in sorted(self.root.iterdir()) if self.root.exists() else []:
            if entry.is_dir() and (entry / "metadata.json").exists():
                profiles.append(self.get_profile(entry.name))
        return profiles

    def update_profile(
        self, profile_id: str, patch: dict, change_note: str = ""
    ) -> ConfigRevision:
        """Apply a partial update; returns the newly appended revision."""
        fields = _validate_patch(dict(patch))
        with self._lock(profile_id):
            current, revisions = self._load(profile_id)
            ts = self.clock()
            updated = replace(current, updated_at=ts, **fields)
            prompt = _render_revision_prompt(updated)
            previous = revisions[-1]
            removed = tuple(
                spec.name
                for spec in current.actions
                if spec.name.casefold()
                not in {s.name.casefold() for s in updated.actions}
            )
            revision = ConfigRevision(
                revision_number=previous.revision_number + 1,
                profile_id=profile_id,
                rendered_prompt=prompt,
                diff=diff_lines(previous.rendered_prompt, prompt),
                change_note=change_note,
                timestamp=ts,
                removed_actions=removed,
            )
            self._write_metadata(updated)
            self._append_revision(updated, revision)
            self._cache[profile_id] = (updated, revisions + [revision])
        return revision

    def list_revisions(self, profile_id: str) -> list[ConfigRevision]:
        return list(self._load(profile_id)[1])

    def get_revision(self, profile_id: str, n: int) -> ConfigRevision:
        for revision in self._load(profile_id)[1]:
            if revision.revision_number == n:
                return revision
        raise NotFoundError(f"profile {profile_id!r} has no revision {n}")

    def latest_revision_number(self, profile_id: str) -> int:
        return self._load(profile_id)[1][-1].revision_number

    def revision_state(self, profile_id: str, n: int) -> CharacterProfile:
        """The profile state snapshot stored with revision n."""
        self.get_revision(profile_id, n)
        states = self._states(profile_id)
        if n not in states:
            raise NotFoundError(f"profile {profile_id!r} has no revision {n}")
        return states[n]

    def diff_revisions(self, profile_id: str, a: int, b: int) -> str:
        """Line delta between the rendered prompts of revisions a and b."""
        prompt_a = self.get_revision(profile_id, a).rendered_prompt
        prompt_b = self.get_revision(profile_id, b).rendered_prompt
        return diff_lines(prompt_a, prompt_b)
