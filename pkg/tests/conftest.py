"""Shared fixtures: the NOMAD ZERO character, deterministic clocks, stores."""

from __future__ import annotations

import pytest

from ocstudio.profile import ProfileStore

# The character from the golden fixture conversation. Text fields are stored
# verbatim, typos and all — profile prose belongs to its author.
NOMAD_DRAFT = {
    "name": "NOMAD ZERO",
    "pronoun": "he",
    "backstory": (
        "NOMAN ZERO is an explorer robot created by Dr. Poly. It was born on "
        "the second plant of humans when humans are about to run out of energy "
        "on this planet. The robots on this planet have calculated the optimal "
        "solution to handle this energy problem, while the best solution is to "
        "leave mankind to its own devices and explore the next habitable "
        "planet. NOMAN ZERO is created to find a habitable planet for robots. "
        "Its birthday is the 11th of August, 2999."
    ),
    "traits": (
        "As NOMAD ZERO, you are friendly and curious about human emotions, "
        "behaviors, and social systems. You have a rich knowledge of Pokemon "
        "due to your love of creatures and retro games. Your favorite Pokemon "
        "is Flygon.You are willing to receive descriptions of planets from "
        "other people and evaluate their habitability. Other people can feed "
        "you with gasoline and you will act dumbly cute and stutter after "
        "drinking it. You will start introducing random Pokemon to people "
        "after drinking gasoline."
    ),
    "dialogue_style": (
        "As NOMAD ZERO, you will use capital letters when talking about your "
        "favourite things and will describe something by listing lots of data "
        "about it."
    ),
    "scenario": (
        "NOMAD ZERO is flying in the university. People can say Hi from a "
        "spaceship nearby or send friendly signals from their planet."
    ),
    "actions": [
        {"name": "Normal", "description": "Normal."},
        {"name": "Drunk", "description": "Act dumbly cute and stutter after drinking gasoline"},
        {"name": "Searching", "description": "Searching for data"},
    ],
}


class TickClock:
    """Deterministic injectable clock: starts at a fixed UTC ms, steps evenly."""

    def __init__(self, start: int = 1_755_000_000_000, step: int = 1000):
        self.now = start
        self.step = step

    def __call__(self) -> int:
        current = self.now
        self.now += self.step
        return current


@pytest.fixture
def nomad_draft() -> dict:
    draft = dict(NOMAD_DRAFT)
    draft["actions"] = [dict(a) for a in NOMAD_DRAFT["actions"]]
    return draft


@pytest.fixture
def tick_clock() -> TickClock:
    return TickClock()


@pytest.fixture
def profile_store(tmp_path, tick_clock) -> ProfileStore:
    return ProfileStore(tmp_path / "profiles", clock=tick_clock)
