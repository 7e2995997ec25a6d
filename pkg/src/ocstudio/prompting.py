"""Assembly of the seven-part system prompt that drives a character turn.

The prompt is rendered from a character profile, the active speaker context,
and a window of recent dialogue. Its seven sections, in fixed order:

1. persona_assignment — "From now on, you are <name>."
2. backstory          — the character's history, plus the pronoun sentence
3. action_list        — one "<name>: <description>" line per action
4. format_directive   — the six output labels the model must emit
5. traits_and_style   — personality, voice, and sample lines
6. scenario_and_speaker — current scene plus who is talking
7. chat_window        — "current chat:" and the recent dialogue lines

Rendering is a pure function of its inputs; all fixed wording lives in a
versioned template asset so golden tests can pin the output byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import TYPE_CHECKING, Sequence

from .trajectory import (
    ACTION_LABEL,
    BEHAVIOR_LABEL,
    IMPRESSION_LABEL,
    OBSERVE_LABEL,
    REFLECT_LABEL,
)

if TYPE_CHECKING:  # pragma: no cover - type-only imports
    from .profile import ActionSpec, CharacterProfile

__all__ = [
    "TEMPLATE_VERSION",
    "SECTION_NAMES",
    "RESULT_CUE",
    "PromptSection",
    "PromptBundle",
    "render_format_directive",
    "render_prompt",
]

TEMPLATE_VERSION = "a1-reconstruction-1"

SECTION_NAMES = (
    "persona_assignment",
    "backstory",
    "action_list",
    "format_directive",
    "traits_and_style",
    "scenario_and_speaker",
    "chat_window",
)


def _load_template(version: str) -> dict[str, str]:
    """Read the named template asset into a {block_name: text} map."""
    asset = resources.files(__package__).joinpath(f"templates/formative-{version}.txt")
    blocks: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in asset.read_text(encoding="utf-8").split("\n"):
        if line.startswith("== ") and line.rstrip().endswith(" =="):
            name = line.strip()[3:-3].strip()
            current = blocks.setdefault(name, [])
        elif current is not None:
            current.append(line)
    return {name: "\n".join(lines).strip("\n") for name, lines in blocks.items()}


_TEMPLATE = _load_template("a1r1")

# The parser and the template must agree on the six labels; catch a drifted
# asset at import time rather than at the first malformed turn.
_DIRECTIVE_BLOCKS = {
    "directive_observe": OBSERVE_LABEL,
    "directive_reflect": REFLECT_LABEL,
    "directive_impression": IMPRESSION_LABEL,
    "directive_behavior": BEHAVIOR_LABEL,
    "directive_action": ACTION_LABEL,
}
for _block, _label in _DIRECTIVE_BLOCKS.items():
    if not _TEMPLATE.get(_block, "").startswith(_label + ":"):
        raise RuntimeError(f"template block {_block!r} must start with {_label!r}:")

RESULT_CUE = _TEMPLATE["result_cue"]


def _fill(block: str, **values: str) -> str:
    """Substitute {key} tokens literally (content may itself contain braces)."""
    for key, value in values.items():
        block = block.replace("{" + key + "}", value)
    return block


@dataclass(frozen=True)
class PromptSection:
    name: str
    text: str


@dataclass(frozen=True)
class PromptBundle:
    """A fully rendered prompt, split for transport.

    ``system_text`` is the seven sections; ``turn_cue`` is the incoming
    message line (when there is one) plus the result-reply sentinel;
    ``rendered_text`` is the complete prompt as a single string.
    ``window_shrunk`` reports that the dialogue window was cut below the
    requested size to fit the character budget.
    """

    sections: tuple[PromptSection, ...]
    template_version: str
    turn_cue: str
    window_shrunk: bool = False
    dropped_entries: int = 0

    def __post_init__(self) -> None:
        names = tuple(s.name for s in self.sections)
        if names != SECTION_NAMES:
            raise ValueError(f"prompt must have the seven fixed sections, got {names}")

    @property
    def system_text(self) -> str:
        return "\n\n".join(section.text for section in self.sections)

    @property
    def rendered_text(self) -> str:
        return self.system_text + "\n" + self.turn_cue

    def section(self, name: str) -> str:
        for candidate in self.sections:
            if candidate.name == name:
                return candidate.text
        raise KeyError(name)


def render_format_directive(name: str, actions: Sequence["ActionSpec"]) -> str:
    """The output-format block: six labels, one action chosen from the list."""
    action_names = " / ".join(spec.name for spec in actions)
    lines = [
        _TEMPLATE["directive_header"],
        _fill(_TEMPLATE["directive_observe"], name=name),
        _fill(_TEMPLATE["directive_reflect"], name=name),
        _fill(_TEMPLATE["directive_impression"], name=name),
        _fill(_TEMPLATE["directive_behavior"], name=name),
        _fill(_TEMPLATE["directive_action"], action_names=action_names),
        _fill(_TEMPLATE["directive_reply"], name=name),
    ]
    return "\n".join(lines)


def _chat_line(speaker: str, content: str) -> str:
    return _fill(_TEMPLATE["chat_line"], speaker=speaker, content=content)


def _render_sections(
    profile: "CharacterProfile",
    speaker_context: str,
    window: Sequence[tuple[str, str]],
) -> tuple[PromptSection, ...]:
    persona = _fill(_TEMPLATE["persona_assignment"], name=profile.name)

    backstory_parts = [profile.backstory.strip()]
    if profile.pronoun.strip():
        backstory_parts.append(
            _fill(_TEMPLATE["pronoun_sentence"], pronoun=profile.pronoun.strip())
        )
    backstory = " ".join(part for part in backstory_parts if part)

    action_lines = [
        _fill(_TEMPLATE["action_line"], name=spec.name, description=spec.description)
        for spec in profile.actions
    ]
    action_list = "\n".join([_TEMPLATE["action_list_header"], *action_lines])

    directive = render_format_directive(profile.name, profile.actions)

    style_parts = [profile.traits.strip(), profile.dialogue_style.strip()]
    style_parts.extend(sample.strip() for sample in profile.dialogue_samples)
    traits_and_style = "\n".join(part for part in style_parts if part)

    scenario_parts = [profile.scenario.strip(), speaker_context.strip()]
    scenario_and_speaker = "\n".join(part for part in scenario_parts if part)

    chat_lines = [_TEMPLATE["chat_header"]]
    chat_lines.extend(_chat_line(speaker, content) for speaker, content in window)
    chat_window = "\n".join(chat_lines)

    texts = (
        persona,
        backstory,
        action_list,
        directive,
        traits_and_style,
        scenario_and_speaker,
        chat_window,
    )
    return tuple(
        PromptSection(name=name, text=text)
        for name, text in zip(SECTION_NAMES, texts)
    )


def render_prompt(
    profile: "CharacterProfile",
    speaker_context: str,
    window: Sequence[tuple[str, str]],
    *,
    incoming: tuple[str, str] | None = None,
    max_chars: int | None = None,
) -> PromptBundle:
    """Render the full prompt for one turn (or for a stored revision).

    ``window`` holds (speaker_label, content) pairs, oldest first, already
    truncated to the session's window size. ``incoming`` is the message being
    answered this turn; it is rendered as the cue line right before the
    result-reply sentinel rather than as part of the window. When
    ``max_chars`` is set and the rendered prompt exceeds it, window entries
    are dropped oldest-first (profile sections are never cut).
    """
    if incoming is not None:
        cue = _chat_line(*incoming) + "\n" + RESULT_CUE
    else:
        cue = RESULT_CUE

    window = list(window)
    dropped = 0
    while True:
        bundle = PromptBundle(
            sections=_render_sections(profile, speaker_context, window),
            template_version=TEMPLATE_VERSION,
            turn_cue=cue,
            window_shrunk=dropped > 0,
            dropped_entries=dropped,
        )
        if max_chars is None or len(bundle.rendered_text) <= max_chars or not window:
            return bundle
        window = window[1:]
        dropped += 1
