from __future__ import annotations

import pytest

from llmnas import (
    cell_space,
    channel_space,
    macro_space,
    mobilenet_v2_space,
    synth_benchmark,
)

# Width rows chosen so numeric order differs from string order at some
# layers ("112" < "96" lexicographically); keeps key-sorting honest.
CHANNEL_WIDTHS = [
    (32, 40, 48, 64),
    (32, 40, 48, 64),
    (48, 56, 64, 96),
    (48, 56, 64, 96),
    (96, 112, 128, 160),
    (96, 112, 128, 160),
    (112, 128, 144, 192),
]


@pytest.fixture(scope="session")
def macro():
    return macro_space()


@pytest.fixture(scope="session")
def cell():
    return cell_space()


@pytest.fixture(scope="session")
def chan():
    return channel_space(CHANNEL_WIDTHS, "resnet")


@pytest.fixture(scope="session")
def mbv2():
    return mobilenet_v2_space()


@pytest.fixture(scope="session")
def macro_table(macro):
    return synth_benchmark(macro, seed=11)


def mbv2_key(stages: list[list[str]]) -> str:
    """Join per-stage block lists into a canonical key, padding skips."""
    return "|".join(",".join(s + ["skip"] * (6 - len(s))) for s in stages)


G329_KEY = mbv2_key(
    [
        ["mb3e4"] * 2,
        ["mb3e4"] * 4,
        ["mb3e6", "mb3e6", "mb7e4"],
        ["mb3e6", "mb7e4", "mb3e6", "mb3e6"],
        ["mb5e6"] * 4,
    ]
)

G401_KEY = mbv2_key(
    [
        ["mb3e4"] * 4,
        ["mb3e4"] * 4,
        ["mb3e6"] * 4,
        ["mb3e6", "mb5e6", "mb5e6", "mb5e6"],
        ["mb7e6", "mb5e6", "mb7e6", "mb5e6"],
    ]
)

ALL_SKIP_KEY = mbv2_key([[], [], [], [], []])
