"""Line-based deltas between rendered prompts.

Diffs are zero-context unified hunks ("@@ -s,c +s,c @@" followed by the
removed and added lines) over "\n"-split lines, with no file headers. The
pair (diff_lines, apply_diff) is exact: apply_diff(old, diff_lines(old, new))
reproduces new byte-for-byte, and the diff of identical texts is "".
"""

from __future__ import annotations

import difflib
import re

from .errors import ValidationError

__all__ = ["diff_lines", "apply_diff"]

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@$")


def diff_lines(old: str, new: str) -> str:
    """Delta from old to new; empty string iff the texts are identical."""
    if old == new:
        return ""
    old_lines = old.split("\n")
    new_lines = new.split("\n")
    matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
    out: list[str] = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        old_count = i2 - i1
        new_count = j2 - j1
        old_start = i1 + 1 if old_count else i1
        new_start = j1 + 1 if new_count else j1
        out.append(f"@@ -{old_start},{old_count} +{new_start},{new_count} @@")
        out.extend("-" + line for line in old_lines[i1:i2])
        out.extend("+" + line for line in new_lines[j1:j2])
    return "\n".join(out)


def apply_diff(old: str, diff: str) -> str:
    """Apply a diff_lines delta as an exact patch.

    Raises ValidationError when the delta does not fit the given text
    (wrong anchor lines, malformed hunk headers).
    """
    if diff == "":
        return old
    old_lines = old.split("\n")
    result: list[str] = []
    cursor = 0

    lines = diff.split("\n")
    index = 0
    while index < len(lines):
        header = _HUNK_RE.match(lines[index])
        if not header:
            raise ValidationError(f"malformed hunk header: {lines[index]!r}")
        old_start = int(header.group(1))
        old_count = int(header.group(2)) if header.group(2) is not None else 1
        new_count = int(header.group(4)) if header.group(4) is not None else 1
        index += 1

        # Unified convention: a zero-length old range names the line *before*
        # the insertion point, so the hunk begins after that line.
        hunk_at = old_start - 1 if old_count else old_start
        if hunk_at < cursor or hunk_at > len(old_lines):
            raise ValidationError(f"hunk at line {old_start} does not fit the text")
        result.extend(old_lines[cursor:hunk_at])
        cursor = hunk_at

        for _ in range(old_count):
            if index >= len(lines) or not lines[index].startswith("-"):
                raise ValidationError("hunk is missing expected removed lines")
            expected = lines[index][1:]
            if cursor >= len(old_lines) or old_lines[cursor] != expected:
                raise ValidationError(
                    f"hunk expects line {cursor + 1} to be {expected!r}"
                )
            cursor += 1
            index += 1
        added = 0
        while index < len(lines) and lines[index].startswith("+"):
            result.append(lines[index][1:])
            added += 1
            index += 1
        if added != new_count:
            raise ValidationError(
                f"hunk declares {new_count} added lines but carries {added}"
            )

    result.extend(old_lines[cursor:])
    return "\n".join(result)
