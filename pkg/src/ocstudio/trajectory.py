"""Parsing and serialization of structured reasoning turns.

Every character turn is a six-field trajectory written one field per label:

    Observe: <what the character notices>
    Reflect: <what the character feels about it>
    User impression: <what the character thinks of the speaker>
    Behavior: <visible body language>
    Action: <one name from the character's action registry>
    <character name>: <the spoken reply>

``parse_trajectory`` is total: any input string yields either a ``Trajectory``
or a ``ParseError`` value, never an exception. ``serialize_trajectory`` emits
the canonical one-field-per-line layout, and the two functions round-trip for
any trajectory whose field contents contain no line that itself begins with a
recognized label.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

__all__ = [
    "FIELD_LABELS",
    "OBSERVE_LABEL",
    "REFLECT_LABEL",
    "IMPRESSION_LABEL",
    "BEHAVIOR_LABEL",
    "ACTION_LABEL",
    "SILENCE_ACTION",
    "Trajectory",
    "ParseError",
    "ParseErrorKind",
    "parse_trajectory",
    "serialize_trajectory",
    "normalize_action",
]

OBSERVE_LABEL = "Observe"
REFLECT_LABEL = "Reflect"
IMPRESSION_LABEL = "User impression"
BEHAVIOR_LABEL = "Behavior"
ACTION_LABEL = "Action"

#: The five fixed wire labels, in canonical order. The sixth label of a turn
#: is the character's own name.
FIELD_LABELS = (
    OBSERVE_LABEL,
    REFLECT_LABEL,
    IMPRESSION_LABEL,
    BEHAVIOR_LABEL,
    ACTION_LABEL,
)

#: The built-in action whose reply segment may be empty.
SILENCE_ACTION = "Silence"

_EXCERPT_LIMIT = 160


class ParseErrorKind(str, Enum):
    MISSING_FIELD = "MissingField"
    DUPLICATE_FIELD = "DuplicateField"
    UNKNOWN_ACTION = "UnknownAction"
    EMPTY_REQUIRED_FIELD = "EmptyRequiredField"
    NO_LABELS_FOUND = "NoLabelsFound"


@dataclass(frozen=True)
class Trajectory:
    """One parsed character turn."""

    observe: str
    reflect: str
    impression: str
    behavior: str
    action_name: str
    reply: str

    def to_dict(self) -> dict:
        return {
            "observe": self.observe,
            "reflect": self.reflect,
            "impression": self.impression,
            "behavior": self.behavior,
            "action": self.action_name,
            "reply": self.reply,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        return cls(
            observe=data["observe"],
            reflect=data["reflect"],
            impression=data["impression"],
            behavior=data["behavior"],
            action_name=data["action"],
            reply=data["reply"],
        )


@dataclass(frozen=True)
class ParseError:
    """Why a raw reply could not be read as a trajectory.

    ``detail`` names the field (or carries the offending action token);
    ``raw_excerpt`` is a short slice of the offending text for display.
    """

    kind: ParseErrorKind
    detail: str
    raw_excerpt: str

    def describe(self) -> str:
        if self.kind is ParseErrorKind.MISSING_FIELD:
            return f"missing required field {self.detail!r}"
        if self.kind is ParseErrorKind.DUPLICATE_FIELD:
            return f"field {self.detail!r} appears more than once"
        if self.kind is ParseErrorKind.UNKNOWN_ACTION:
            return f"action {self.detail!r} is not in the action list"
        if self.kind is ParseErrorKind.EMPTY_REQUIRED_FIELD:
            return f"field {self.detail!r} is empty"
        return "no recognizable fields in reply"


def _registry_names(registry: Sequence) -> list[str]:
    """Accept ActionSpec-like objects (anything with .name) or bare strings."""
    return [getattr(item, "name", item) for item in registry]


def _excerpt(text: str) -> str:
    text = text.strip()
    if len(text) > _EXCERPT_LIMIT:
        return text[: _EXCERPT_LIMIT - 1] + "…"
    return text


def _label_pattern(character_name: str) -> re.Pattern:
    alternatives = [re.escape(label) for label in FIELD_LABELS]
    alternatives.append(re.escape(character_name))
    # Longest alternative first so a name like "Action Man" beats "Action".
    alternatives.sort(key=len, reverse=True)
    return re.compile(
        r"^[ \t]*(?P<label>" + "|".join(alternatives) + r")[ \t]*:(?P<rest>.*)$",
        re.IGNORECASE,
    )


def normalize_action(raw_label: str, registry: Sequence) -> str | None:
    """Map a model-written action token onto the registry's canonical casing.

    Trims whitespace and one layer of square brackets; the comparison is
    case-insensitive. Returns None when the token names no known action.
    """
    token = raw_label.strip()
    if token.startswith("[") and token.endswith("]") and len(token) >= 2:
        token = token[1:-1].strip()
    folded = token.casefold()
    for name in _registry_names(registry):
        if name.casefold() == folded:
            return name
    return None


def _stripped_action_token(raw_label: str) -> str:
    token = raw_label.strip()
    if token.startswith("[") and token.endswith("]") and len(token) >= 2:
        token = token[1:-1].strip()
    return token


def parse_trajectory(
    raw: str, registry: Sequence, character_name: str
) -> Trajectory | ParseError:
    """Parse a raw model reply into a Trajectory, or report why it failed.

    Labels are recognized at line starts (leading whitespace tolerated,
    case-insensitive); a field's content runs until the next recognized label
    or the end of text, with internal newlines preserved and surrounding
    whitespace stripped. Text before the first label is ignored. Problems are
    reported as the first applicable error in document order: a duplicated
    label wins over anything later, then absence, emptiness, and finally an
    unknown action token.
    """
    pattern = _label_pattern(character_name)
    reply_key = character_name.casefold()
    canonical = {label.casefold(): label for label in FIELD_LABELS}
    canonical[reply_key] = character_name

    segments: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.split("\n"):
        match = pattern.match(line)
        if match:
            key = match.group("label").casefold()
            if key in segments:
                return ParseError(
                    kind=ParseErrorKind.DUPLICATE_FIELD,
                    detail=canonical[key],
                    raw_excerpt=_excerpt(line),
                )
            segments[key] = [match.group("rest")]
            current = key
        elif current is not None:
            segments[current].append(line)

    if not segments:
        return ParseError(
            kind=ParseErrorKind.NO_LABELS_FOUND,
            detail="",
            raw_excerpt=_excerpt(raw),
        )

    ordered_keys = [label.casefold() for label in FIELD_LABELS] + [reply_key]
    for key in ordered_keys:
        if key not in segments:
            return ParseError(
                kind=ParseErrorKind.MISSING_FIELD,
                detail=canonical[key],
                raw_excerpt=_excerpt(raw),
            )

    fields = {key: "\n".join(lines).strip() for key, lines in segments.items()}

    for label in (OBSERVE_LABEL, REFLECT_LABEL, IMPRESSION_LABEL, BEHAVIOR_LABEL):
        if not fields[label.casefold()]:
            return ParseError(
                kind=ParseErrorKind.EMPTY_REQUIRED_FIELD,
                detail=label,
                raw_excerpt=_excerpt(raw),
            )

    action_raw = fields[ACTION_LABEL.casefold()]
    action_token = _stripped_action_token(action_raw)
    if not action_token:
        return ParseError(
            kind=ParseErrorKind.EMPTY_REQUIRED_FIELD,
            detail=ACTION_LABEL,
            raw_excerpt=_excerpt(raw),
        )
    action_name = normalize_action(action_raw, registry)
    if action_name is None:
        return ParseError(
            kind=ParseErrorKind.UNKNOWN_ACTION,
            detail=action_token,
            raw_excerpt=_excerpt(action_raw),
        )

    reply = fields[reply_key]
    if not reply and action_name != SILENCE_ACTION:
        return ParseError(
            kind=ParseErrorKind.EMPTY_REQUIRED_FIELD,
            detail=character_name,
            raw_excerpt=_excerpt(raw),
        )

    return Trajectory(
        observe=fields[OBSERVE_LABEL.casefold()],
        reflect=fields[REFLECT_LABEL.casefold()],
        impression=fields[IMPRESSION_LABEL.casefold()],
        behavior=fields[BEHAVIOR_LABEL.casefold()],
        action_name=action_name,
        reply=reply,
    )


def serialize_trajectory(t: Trajectory, character_name: str) -> str:
    """Emit the canonical one-field-per-label layout for a valid trajectory."""
    from .errors import ValidationError

    for label, value in (
        (OBSERVE_LABEL, t.observe),
        (REFLECT_LABEL, t.reflect),
        (IMPRESSION_LABEL, t.impression),
        (BEHAVIOR_LABEL, t.behavior),
    ):
        if not value.strip():
            raise ValidationError(f"trajectory field {label!r} must be nonempty")
    if not t.action_name.strip():
        raise ValidationError("trajectory action name must be nonempty")
    if not t.reply and t.action_name != SILENCE_ACTION:
        raise ValidationError(
            f"trajectory reply may be empty only for the {SILENCE_ACTION!r} action"
        )

    lines = [
        f"{OBSERVE_LABEL}: {t.observe}",
        f"{REFLECT_LABEL}: {t.reflect}",
        f"{IMPRESSION_LABEL}: {t.impression}",
        f"{BEHAVIOR_LABEL}: {t.behavior}",
        f"{ACTION_LABEL}: {t.action_name}",
        f"{character_name}: {t.reply}" if t.reply else f"{character_name}:",
    ]
    return "\n".join(lines)
