"""Unit tests for prompt assembly: section structure, directive, golden bytes."""

from __future__ import annotations

from pathlib import Path

import pytest

from ocstudio.profile import (
    DEFAULT_SPEAKER_CONTEXT,
    ActionSpec,
    CharacterProfile,
    default_actions,
)
from ocstudio.prompting import (
    RESULT_CUE,
    SECTION_NAMES,
    TEMPLATE_VERSION,
    PromptBundle,
    PromptSection,
    render_format_directive,
    render_prompt,
)
from ocstudio.trajectory import (
    ParseError,
    ParseErrorKind,
    Trajectory,
    parse_trajectory,
)

FIXTURES = Path(__file__).parent / "fixtures"

LABELS_IN_ORDER = ["Observe:", "Reflect:", "User impression:", "Behavior:", "Action:"]


def nomad_profile(nomad_draft) -> CharacterProfile:
    return CharacterProfile(
        id="p-nomad",
        name=nomad_draft["name"],
        pronoun=nomad_draft["pronoun"],
        backstory=nomad_draft["backstory"],
        traits=nomad_draft["traits"],
        dialogue_style=nomad_draft["dialogue_style"],
        scenario=nomad_draft["scenario"],
        actions=tuple(
            ActionSpec(a["name"], a["description"]) for a in nomad_draft["actions"]
        ),
    )


@pytest.fixture
def nomad(nomad_draft) -> CharacterProfile:
    return nomad_profile(nomad_draft)


class TestStructure:
    def test_seven_sections_in_fixed_order(self, nomad):
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, [])
        assert tuple(s.name for s in bundle.sections) == SECTION_NAMES
        assert bundle.template_version == TEMPLATE_VERSION

    def test_wrong_section_tuple_rejected(self):
        with pytest.raises(ValueError):
            PromptBundle(
                sections=(PromptSection("persona_assignment", "x"),),
                template_version=TEMPLATE_VERSION,
                turn_cue=RESULT_CUE,
            )

    def test_rendered_text_is_sections_plus_cue(self, nomad):
        bundle = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, [], incoming=("<Artist>", "hello")
        )
        joined = "\n\n".join(s.text for s in bundle.sections)
        assert bundle.system_text == joined
        assert bundle.rendered_text == joined + "\n" + bundle.turn_cue

    def test_begins_with_persona_assignment(self, nomad):
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, [])
        assert bundle.rendered_text.startswith("From now on, you are NOMAD ZERO.")

    def test_pronoun_sentence_joins_backstory(self, nomad):
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, [])
        assert bundle.section("backstory").endswith('Your pronoun is "he".')

    def test_action_list_lines(self, nomad):
        section = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, []).section(
            "action_list"
        )
        lines = section.split("\n")
        assert lines[0] == "Action list:"
        assert lines[2:] == [
            "Normal: Normal.",
            "Drunk: Act dumbly cute and stutter after drinking gasoline",
            "Searching: Searching for data",
        ]

    def test_speaker_context_lands_in_scenario_section(self, nomad):
        context = "Now, your best friend Lydia is talking to you"
        bundle = render_prompt(nomad, context, [])
        section = bundle.section("scenario_and_speaker")
        assert section.endswith(context)
        assert nomad.scenario in section

    def test_profile_braces_render_literally(self, nomad):
        # A profile whose prose contains template-like braces must not be
        # treated as a substitution site.
        from dataclasses import replace

        profile = replace(nomad, backstory="Speaks in {curly} {name} braces.")
        bundle = render_prompt(profile, DEFAULT_SPEAKER_CONTEXT, [])
        assert "Speaks in {curly} {name} braces." in bundle.section("backstory")


class TestDirective:
    def test_contains_all_six_labels_in_order_exactly_once(self, nomad):
        directive = render_format_directive(nomad.name, nomad.actions)
        positions = []
        for label in LABELS_IN_ORDER + ["NOMAD ZERO:"]:
            assert directive.count(label) == 1, label
            positions.append(directive.index(label))
        assert positions == sorted(positions)

    def test_action_line_verbatim_prefix_and_enumeration(self, nomad):
        directive = render_format_directive(nomad.name, nomad.actions)
        assert "Action: [Action name from the previous list." in directive
        assert "Normal / Drunk / Searching" in directive

    def test_singleton_registry_enumerates_one_name(self):
        directive = render_format_directive("A", [ActionSpec("Normal", "Normal reply")])
        enumeration_line = next(
            line for line in directive.split("\n") if line.startswith("Action:")
        )
        assert "Normal" in enumeration_line
        assert " / " not in enumeration_line

    def test_directive_self_test_recognizes_all_labels(self, nomad):
        # Feeding the directive itself to the parser must find every label;
        # the only acceptable complaint is the placeholder action token.
        directive = render_format_directive(nomad.name, nomad.actions)
        result = parse_trajectory(directive, nomad.actions, nomad.name)
        assert isinstance(result, ParseError)
        assert result.kind is ParseErrorKind.UNKNOWN_ACTION

    def test_skeleton_filled_from_directive_parses(self, nomad):
        directive = render_format_directive(nomad.name, nomad.actions)
        filled = []
        for line in directive.split("\n")[1:]:
            label = line.split(":", 1)[0]
            filled.append(f"{label}: placeholder content")
        text = "\n".join(filled).replace(
            "Action: placeholder content", "Action: Searching"
        )
        parsed = parse_trajectory(text, nomad.actions, nomad.name)
        assert isinstance(parsed, Trajectory)
        assert parsed.action_name == "Searching"


class TestChatWindow:
    def test_empty_window_section_is_header_only(self, nomad):
        bundle = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, [], incoming=("<Artist>", "hi")
        )
        assert bundle.section("chat_window") == "current chat:"

    def test_rendered_text_ends_with_cue_and_sentinel(self, nomad):
        bundle = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, [], incoming=("<Artist>", "who are you?")
        )
        assert bundle.rendered_text.endswith(
            "current chat:\n<Artist>:who are you?\n<Result reply>:"
        )

    def test_without_incoming_ends_with_sentinel(self, nomad):
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, [])
        assert bundle.rendered_text.endswith("current chat:\n<Result reply>:")
        assert bundle.turn_cue == RESULT_CUE

    def test_window_lines_render_speaker_colon_content(self, nomad):
        window = [("<Artist>", "who are you?"), ("NOMAD ZERO", "an explorer robot")]
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, window)
        assert bundle.section("chat_window") == (
            "current chat:\n<Artist>:who are you?\nNOMAD ZERO:an explorer robot"
        )

    def test_window_order_is_preserved(self, nomad):
        window = [(f"s{i}", f"m{i}") for i in range(5)]
        section = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, window).section(
            "chat_window"
        )
        assert section.split("\n")[1:] == [f"s{i}:m{i}" for i in range(5)]


class TestBudget:
    def test_budget_shrinks_window_oldest_first(self, nomad):
        window = [(f"speaker{i}", "x" * 200) for i in range(5)]
        full = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, window)
        limit = len(full.rendered_text) - 100
        shrunk = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, window, max_chars=limit
        )
        assert shrunk.window_shrunk
        assert shrunk.dropped_entries >= 1
        section = shrunk.section("chat_window")
        assert "speaker4:" in section
        assert "speaker0:" not in section
        assert len(shrunk.rendered_text) <= limit

    def test_profile_sections_never_cut(self, nomad):
        window = [("s", "x" * 50)]
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, window, max_chars=10)
        assert bundle.section("backstory") == render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, []
        ).section("backstory")
        assert bundle.section("chat_window") == "current chat:"
        assert bundle.dropped_entries == 1

    def test_no_budget_no_shrink(self, nomad):
        bundle = render_prompt(nomad, DEFAULT_SPEAKER_CONTEXT, [("a", "b")])
        assert not bundle.window_shrunk
        assert bundle.dropped_entries == 0


class TestDeterminismAndGolden:
    def test_same_inputs_render_identically(self, nomad):
        window = [("<Artist>", "hello")]
        first = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, window, incoming=("<Artist>", "again")
        )
        second = render_prompt(
            nomad, DEFAULT_SPEAKER_CONTEXT, window, incoming=("<Artist>", "again")
        )
        assert first.rendered_text == second.rendered_text

    def test_golden_prompt_bytes(self, nomad):
        expected = (FIXTURES / "golden_prompt.txt").read_text(encoding="utf-8")
        bundle = render_prompt(
            nomad,
            DEFAULT_SPEAKER_CONTEXT,
            [],
            incoming=("<Artist>", "who are you?"),
        )
        assert bundle.rendered_text == expected

    def test_default_actions_render_in_both_places(self):
        profile = CharacterProfile(
            id="p", name="Inno", actions=tuple(default_actions())
        )
        bundle = render_prompt(profile, DEFAULT_SPEAKER_CONTEXT, [])
        action_list = bundle.section("action_list")
        directive = bundle.section("format_directive")
        for name in ("Normal", "Relate", "Silence"):
            assert action_list.count(f"\n{name}: ") == 1
            enumeration = next(
                line for line in directive.split("\n") if line.startswith("Action:")
            )
            assert enumeration.count(name) == 1
