"""Unit tests for profiles, validation, and the revision log."""

from __future__ import annotations

import random

import pytest

from conftest import TickClock
from helpers import random_line
from ocstudio.errors import NotFoundError, ValidationError
from ocstudio.linediff import apply_diff
from ocstudio.profile import (
    DEFAULT_SPEAKER_CONTEXT,
    ActionSpec,
    ProfileStore,
    default_actions,
)
from ocstudio.prompting import render_prompt


class TestDefaultActions:
    def test_exact_names_descriptions_order(self):
        assert default_actions() == [
            ActionSpec("Normal", "Normal reply"),
            ActionSpec("Relate", "Relate reply (relate to memories)"),
            ActionSpec("Silence", "Silence"),
        ]

    def test_purity(self):
        assert default_actions() == default_actions()
        first = default_actions()
        first.append(ActionSpec("X", "x"))
        assert len(default_actions()) == 3

    def test_names_pairwise_distinct_case_insensitively(self):
        names = [spec.name.casefold() for spec in default_actions()]
        assert len(set(names)) == len(names)


class TestCreateProfile:
    def test_create_renders_revision_one(self, profile_store, nomad_draft):
        profile = profile_store.create_profile(nomad_draft, profile_id="p1")
        revisions = profile_store.list_revisions("p1")
        assert [r.revision_number for r in revisions] == [1]
        assert revisions[0].diff == ""
        assert "From now on, you are NOMAD ZERO." in revisions[0].rendered_prompt
        assert profile.name == "NOMAD ZERO"

    def test_missing_actions_get_default_registry(self, profile_store):
        profile = profile_store.create_profile({"name": "X"})
        assert list(profile.actions) == default_actions()

    def test_default_speaker_context(self, profile_store):
        profile = profile_store.create_profile({"name": "X"})
        assert profile.speaker_context == "Now, a human is talking to you"
        assert profile.speaker_context == DEFAULT_SPEAKER_CONTEXT

    @pytest.mark.parametrize(
        "name", ["   ", "", "a:b", "two\nlines", "Observe", "user IMPRESSION"]
    )
    def test_invalid_names_rejected(self, profile_store, name):
        with pytest.raises(ValidationError):
            profile_store.create_profile({"name": name})

    @pytest.mark.parametrize(
        "actions",
        [
            [],
            [{"name": "Normal"}, {"name": "normal"}],
            [{"name": "a:b"}],
            [{"name": "two\nlines"}],
            [{"name": "  "}],
            [{"name": "ok", "description": "multi\nline"}],
        ],
    )
    def test_invalid_action_registries_rejected(self, profile_store, actions):
        with pytest.raises(ValidationError):
            profile_store.create_profile({"name": "X", "actions": actions})

    def test_unknown_draft_field_rejected(self, profile_store):
        with pytest.raises(ValidationError):
            profile_store.create_profile({"name": "X", "color": "blue"})

    def test_duplicate_id_rejected(self, profile_store):
        profile_store.create_profile({"name": "X"}, profile_id="same")
        with pytest.raises(ValidationError):
            profile_store.create_profile({"name": "Y"}, profile_id="same")


class TestUpdateProfile:
    def test_adding_thinking_action(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        actions = nomad_draft["actions"] + [
            {"name": "Thinking", "description": "Pause and think it over"}
        ]
        revision = profile_store.update_profile(
            "p1", {"actions": actions}, change_note="add thinking"
        )
        assert revision.revision_number == 2
        assert "Thinking: Pause and think it over" in revision.rendered_prompt
        assert revision.change_note == "add thinking"

        # Independent oracle: the only +/- content lines in the diff are the
        # added action line and the reworked enumeration line.
        changed = [l for l in revision.diff.split("\n") if l[:1] in "+-"]
        assert "+Thinking: Pause and think it over" in changed

    def test_diff_applies_as_patch(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        profile_store.update_profile("p1", {"scenario": "A quiet rooftop at dusk."})
        one = profile_store.get_revision("p1", 1)
        two = profile_store.get_revision("p1", 2)
        assert apply_diff(one.rendered_prompt, two.diff) == two.rendered_prompt

    def test_empty_patch_is_noop_revision(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        revision = profile_store.update_profile("p1", {})
        assert revision.revision_number == 2
        assert revision.diff == ""
        assert (
            revision.rendered_prompt
            == profile_store.get_revision("p1", 1).rendered_prompt
        )

    def test_unknown_profile(self, profile_store):
        with pytest.raises(NotFoundError):
            profile_store.update_profile("ghost", {})

    def test_update_validates_like_create(self, profile_store):
        profile_store.create_profile({"name": "X"}, profile_id="p1")
        with pytest.raises(ValidationError):
            profile_store.update_profile("p1", {"name": "  "})
        with pytest.raises(ValidationError):
            profile_store.update_profile(
                "p1", {"actions": [{"name": "A"}, {"name": "a"}]}
            )

    def test_removed_actions_flagged(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        revision = profile_store.update_profile(
            "p1", {"actions": [{"name": "Normal", "description": "Normal."}]}
        )
        assert revision.removed_actions == ("Drunk", "Searching")

    def test_updated_at_moves_created_at_stays(self, profile_store, nomad_draft):
        created = profile_store.create_profile(nomad_draft, profile_id="p1")
        profile_store.update_profile("p1", {"pronoun": "she"})
        after = profile_store.get_profile("p1")
        assert after.created_at == created.created_at
        assert after.updated_at > created.updated_at
        assert after.pronoun == "she"


class TestRevisions:
    def test_numbering_is_gapless(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        profile_store.update_profile("p1", {"traits": "curious"})
        profile_store.update_profile("p1", {"traits": "curious and kind"})
        revisions = profile_store.list_revisions("p1")
        assert [r.revision_number for r in revisions] == [1, 2, 3]
        assert profile_store.latest_revision_number("p1") == 3

    def test_get_revision_not_found(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        with pytest.raises(NotFoundError):
            profile_store.get_revision("p1", 7)
        with pytest.raises(NotFoundError):
            profile_store.list_revisions("ghost")

    def test_diff_revisions_identity_and_delta(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        profile_store.update_profile("p1", {"scenario": "New scene."})
        assert profile_store.diff_revisions("p1", 1, 1) == ""
        assert profile_store.diff_revisions("p1", 2, 2) == ""
        delta = profile_store.diff_revisions("p1", 1, 2)
        assert "+New scene." in delta.split("\n")

    def test_rerender_from_stored_state_is_byte_exact(
        self, profile_store, nomad_draft
    ):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        rng = random.Random(7)
        for index in range(6):
            patch = {
                "traits": random_line(rng),
                "scenario": random_line(rng),
            }
            if index % 2:
                patch["actions"] = [
                    {"name": f"Act{index}{j}", "description": random_line(rng)}
                    for j in range(rng.randint(1, 4))
                ]
            profile_store.update_profile("p1", patch)
        for revision in profile_store.list_revisions("p1"):
            state = profile_store.revision_state("p1", revision.revision_number)
            rerendered = render_prompt(
                state, state.speaker_context, window=[]
            ).rendered_text
            assert rerendered == revision.rendered_prompt

    def test_diff_chain_reconstructs_every_prompt(self, profile_store, nomad_draft):
        profile_store.create_profile(nomad_draft, profile_id="p1")
        for text in ("one", "two", "three"):
            profile_store.update_profile("p1", {"backstory": f"Backstory {text}."})
        revisions = profile_store.list_revisions("p1")
        current = revisions[0].rendered_prompt
        for revision in revisions[1:]:
            current = apply_diff(current, revision.diff)
            assert current == revision.rendered_prompt


class TestPersistence:
    def test_reopened_store_sees_identical_state(self, tmp_path, nomad_draft):
        clock = TickClock()
        store = ProfileStore(tmp_path / "profiles", clock=clock)
        store.create_profile(nomad_draft, profile_id="p1")
        store.update_profile("p1", {"pronoun": "they"}, change_note="pronoun fix")

        reopened = ProfileStore(tmp_path / "profiles", clock=clock)
        assert reopened.get_profile("p1") == store.get_profile("p1")
        assert reopened.list_revisions("p1") == store.list_revisions("p1")
        assert [p.id for p in reopened.list_profiles()] == ["p1"]

    def test_unicode_profile_round_trips(self, tmp_path):
        store = ProfileStore(tmp_path / "profiles", clock=TickClock())
        store.create_profile(
            {
                "name": "小鱼",
                "backstory": "生活在深海的小机器人。",
                "dialogue_samples": ["你好呀~", "………"],
            },
            profile_id="cn",
        )
        reopened = ProfileStore(tmp_path / "profiles", clock=TickClock())
        profile = reopened.get_profile("cn")
        assert profile.name == "小鱼"
        assert profile.dialogue_samples == ("你好呀~", "………")
        assert "生活在深海的小机器人。" in reopened.get_revision("cn", 1).rendered_prompt
