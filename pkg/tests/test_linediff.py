"""Unit tests for the line-diff pair: exactness, emptiness, patch application."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ocstudio.errors import ValidationError
from ocstudio.linediff import apply_diff, diff_lines

BASE = "alpha\nbeta\ngamma\ndelta"


class TestDiffLines:
    def test_identical_texts_give_empty_diff(self):
        assert diff_lines(BASE, BASE) == ""
        assert diff_lines("", "") == ""

    def test_single_added_line_is_the_only_change(self):
        new = "alpha\nbeta\nThinking: thinking hard\ngamma\ndelta"
        diff = diff_lines(BASE, new)
        changed = [line for line in diff.split("\n") if line[:1] in "+-"]
        assert changed == ["+Thinking: thinking hard"]

    def test_single_removed_line(self):
        new = "alpha\ngamma\ndelta"
        diff = diff_lines(BASE, new)
        changed = [line for line in diff.split("\n") if line[:1] in "+-"]
        assert changed == ["-beta"]

    def test_replacement(self):
        new = "alpha\nBETA\ngamma\ndelta"
        diff = diff_lines(BASE, new)
        assert "-beta" in diff.split("\n")
        assert "+BETA" in diff.split("\n")

    def test_diff_is_deterministic(self):
        new = BASE + "\nepsilon"
        assert diff_lines(BASE, new) == diff_lines(BASE, new)


class TestApplyDiff:
    def test_empty_diff_returns_original(self):
        assert apply_diff(BASE, "") == BASE

    @pytest.mark.parametrize(
        "new",
        [
            "",
            "alpha",
            "alpha\nbeta\ngamma\ndelta\nepsilon",
            "zeta\nalpha\nbeta\ngamma\ndelta",
            "alpha\nbeta\nX\nY\ndelta",
            "completely\ndifferent\ntext",
        ],
    )
    def test_round_trips_named_cases(self, new):
        assert apply_diff(BASE, diff_lines(BASE, new)) == new

    def test_rejects_malformed_header(self):
        with pytest.raises(ValidationError):
            apply_diff(BASE, "not a hunk header\n-beta")

    def test_rejects_wrong_base(self):
        diff = diff_lines(BASE, "alpha\nBETA\ngamma\ndelta")
        with pytest.raises(ValidationError):
            apply_diff("some\nother\ntext", diff)


_line = st.text(
    alphabet=st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
    max_size=20,
)
_text = st.lists(_line, min_size=0, max_size=30).map("\n".join)


@given(old=_text, new=_text)
@settings(max_examples=400, deadline=None)
def test_apply_diff_inverts_diff_lines(old, new):
    assert apply_diff(old, diff_lines(old, new)) == new


@given(old=_text, new=_text)
@settings(max_examples=200, deadline=None)
def test_empty_diff_iff_equal(old, new):
    assert (diff_lines(old, new) == "") == (old == new)
