"""Shared test utilities: deterministic generators and independent oracles.

The generators here are used both by the unit property tests and by the
acceptance suite, so they are built on random.Random with explicit seeds.
Generated field contents are "label-collision-free": no content line starts
with a recognized label (guaranteed by banning ':' from the word pool) and
contents are pre-stripped, which is exactly the domain the round-trip law
quantifies over.
"""

from __future__ import annotations

import random

from ocstudio.trajectory import SILENCE_ACTION, Trajectory

WORDS = [
    "signal",
    "lantern",
    "quiet",
    "orbit",
    "hums",
    "under",
    "the",
    "glass",
    "波止場",
    "réverbère",
    "static",
    "warm",
    "blinks",
    "twice",
    "🌒",
    "gears",
    "settle",
    "dust",
    "answers",
    "slowly",
]


def random_line(rng: random.Random, max_words: int = 6) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, max_words)))


def random_content(rng: random.Random, max_lines: int = 3) -> str:
    return "\n".join(random_line(rng) for _ in range(rng.randint(1, max_lines)))


def make_trajectory(rng: random.Random, registry_names: list[str]) -> Trajectory:
    action = rng.choice(registry_names)
    if action == SILENCE_ACTION and rng.random() < 0.5:
        reply = ""
    else:
        reply = random_content(rng)
    return Trajectory(
        observe=random_content(rng),
        reflect=random_content(rng),
        impression=random_content(rng),
        behavior=random_content(rng),
        action_name=action,
        reply=reply,
    )


def window_oracle(entries, window_size: int):
    """Independent statement of the dialogue-window law.

    Filter to dialogue entries (artist and character), then take the last
    ``window_size`` in log order. Deliberately written as filter-then-slice
    with an explicit zero guard rather than sharing any code with the
    implementation under test.
    """
    dialogue = [
        e for e in entries if e.author_kind in ("artist_as_speaker", "character")
    ]
    if window_size <= 0:
        return []
    return dialogue[-window_size:]
