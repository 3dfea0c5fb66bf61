"""Search-space definitions and canonical key handling.

Four spaces are built in:

* macro: 8 layers, each identity / mb3e3 / mb5e6. Keys are 8 digits.
* channel: 7 layers, each choosing one of 4 widths. Keys are the chosen
  widths joined by commas. A channel space is tied to a base model
  (resnet or mobilenet).
* cell: a 4-node DAG with 6 edges in lexicographic order
  (0,1),(0,2),(0,3),(1,2),(1,3),(2,3), each edge one of 5 ops.
  Keys are 6 digits.
* mobilenet_v2: 5 stages of 6 slots, each slot one of six MBConv
  variants or skip. Within a stage every skip must come after the
  active blocks (canonical form). Keys are the 5 stages joined by "|",
  each stage its 6 slot mnemonics joined by ",".
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

from .errors import InvalidArchitecture, KeyParseError, SpaceTooLarge

ENUMERATION_GUARD = 10**6


class SpaceKind(str, Enum):
    MACRO = "macro"
    CHANNEL = "channel"
    CELL = "cell"
    MOBILENET_V2 = "mobilenet_v2"


@dataclass(frozen=True)
class Choice:
    """One selectable candidate at a position.

    ``kernel``/``expansion`` are set for MBConv-style blocks, ``width``
    for channel candidates; unused fields stay None.
    """

    name: str
    kernel: int | None = None
    expansion: int | None = None
    width: int | None = None


@dataclass(frozen=True)
class ChoicePosition:
    label: str
    choices: tuple[Choice, ...]


@dataclass(frozen=True)
class Architecture:
    """A point in a search space: one candidate index per position."""

    kind: SpaceKind
    choices: tuple[int, ...]


@dataclass(frozen=True)
class SearchSpace:
    kind: SpaceKind
    name: str
    positions: tuple[ChoicePosition, ...]
    base_model: str | None = None

    def __len__(self) -> int:
        return len(self.positions)


# Candidate orders are frozen: key grammars and benchmark files depend
# on these exact indices.

MACRO_CHOICES = (
    Choice("identity"),
    Choice("mb3e3", kernel=3, expansion=3),
    Choice("mb5e6", kernel=5, expansion=6),
)

CELL_OPS = ("none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3", "avg_pool_3x3")
CELL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

MBV2_STAGES = 5
MBV2_SLOTS = 6
MBV2_CHOICES = (
    Choice("mb3e4", kernel=3, expansion=4),
    Choice("mb3e6", kernel=3, expansion=6),
    Choice("mb5e4", kernel=5, expansion=4),
    Choice("mb5e6", kernel=5, expansion=6),
    Choice("mb7e4", kernel=7, expansion=4),
    Choice("mb7e6", kernel=7, expansion=6),
    Choice("skip"),
)
MBV2_SKIP = 6

CHANNEL_LAYERS = 7
CHANNEL_WIDTHS_PER_LAYER = 4


def macro_space() -> SearchSpace:
    positions = tuple(
        ChoicePosition(f"layer {i}", MACRO_CHOICES) for i in range(8)
    )
    return SearchSpace(SpaceKind.MACRO, "macro", positions)


def cell_space() -> SearchSpace:
    ops = tuple(Choice(op) for op in CELL_OPS)
    positions = tuple(
        ChoicePosition(f"edge ({a},{b})", ops) for a, b in CELL_EDGES
    )
    return SearchSpace(SpaceKind.CELL, "cell", positions)


def channel_space(widths: Sequence[Sequence[int]], base_model: str) -> SearchSpace:
    """Channel-width space over the given per-layer width options.

    ``widths`` must give CHANNEL_LAYERS rows of CHANNEL_WIDTHS_PER_LAYER
    strictly ascending positive ints; ``base_model`` is "resnet" or
    "mobilenet".
    """
    if base_model not in ("resnet", "mobilenet"):
        raise ValueError(f"base_model must be resnet or mobilenet, got {base_model!r}")
    if len(widths) != CHANNEL_LAYERS:
        raise ValueError(f"expected {CHANNEL_LAYERS} width rows, got {len(widths)}")
    positions = []
    for i, row in enumerate(widths):
        row = tuple(int(w) for w in row)
        if len(row) != CHANNEL_WIDTHS_PER_LAYER:
            raise ValueError(f"layer {i}: expected {CHANNEL_WIDTHS_PER_LAYER} widths")
        if any(w <= 0 for w in row) or list(row) != sorted(set(row)):
            raise ValueError(f"layer {i}: widths must be distinct, positive, ascending")
        positions.append(
            ChoicePosition(f"layer {i}", tuple(Choice(str(w), width=w) for w in row))
        )
    return SearchSpace(
        SpaceKind.CHANNEL, f"channel-{base_model}", tuple(positions), base_model
    )


def mobilenet_v2_space() -> SearchSpace:
    positions = tuple(
        ChoicePosition(f"stage {s} slot {j}", MBV2_CHOICES)
        for s in range(MBV2_STAGES)
        for j in range(MBV2_SLOTS)
    )
    return SearchSpace(SpaceKind.MOBILENET_V2, "mobilenet_v2", positions)


def space_cardinality(space: SearchSpace) -> int:
    """Number of raw index combinations.

    For mobilenet_v2 this counts slot assignments (7^30); distinct
    canonical forms are fewer because skip placement is normalized.
    """
    n = 1
    for pos in space.positions:
        n *= len(pos.choices)
    return n


def validate(space: SearchSpace, arch: Architecture) -> list[str]:
    """Return all violation messages; empty list means valid."""
    problems = []
    if arch.kind != space.kind:
        problems.append(f"kind mismatch: {arch.kind.value} vs {space.kind.value}")
        return problems
    if len(arch.choices) != len(space.positions):
        problems.append(
            f"expected {len(space.positions)} choices, got {len(arch.choices)}"
        )
        return problems
    for i, (c, pos) in enumerate(zip(arch.choices, space.positions)):
        if not isinstance(c, int) or isinstance(c, bool) or not 0 <= c < len(pos.choices):
            problems.append(f"{pos.label}: index {c!r} out of range 0..{len(pos.choices) - 1}")
    if problems:
        return problems
    if space.kind is SpaceKind.MOBILENET_V2:
        for s in range(MBV2_STAGES):
            stage = arch.choices[s * MBV2_SLOTS : (s + 1) * MBV2_SLOTS]
            seen_skip = False
            for j, c in enumerate(stage):
                if c == MBV2_SKIP:
                    seen_skip = True
                elif seen_skip:
                    problems.append(
                        f"stage {s}: active block at slot {j} after skip"
                    )
                    break
    return problems


def is_valid(space: SearchSpace, arch: Architecture) -> bool:
    return not validate(space, arch)


def normalize(space: SearchSpace, arch: Architecture) -> Architecture:
    """Canonicalize an architecture.

    Only mobilenet_v2 has a non-trivial canonical form: within each
    stage the active blocks keep their relative order and the skips are
    pushed to the end. Other spaces pass through unchanged.
    """
    if space.kind is not SpaceKind.MOBILENET_V2:
        return arch
    out: list[int] = []
    for s in range(MBV2_STAGES):
        stage = arch.choices[s * MBV2_SLOTS : (s + 1) * MBV2_SLOTS]
        active = [c for c in stage if c != MBV2_SKIP]
        out.extend(active + [MBV2_SKIP] * (MBV2_SLOTS - len(active)))
    return Architecture(arch.kind, tuple(out))


def canonical_key(space: SearchSpace, arch: Architecture) -> str:
    problems = validate(space, arch)
    if problems:
        raise InvalidArchitecture(problems)
    if space.kind in (SpaceKind.MACRO, SpaceKind.CELL):
        return "".join(str(c) for c in arch.choices)
    if space.kind is SpaceKind.CHANNEL:
        return ",".join(
            str(space.positions[i].choices[c].width)
            for i, c in enumerate(arch.choices)
        )
    stages = []
    for s in range(MBV2_STAGES):
        stage = arch.choices[s * MBV2_SLOTS : (s + 1) * MBV2_SLOTS]
        stages.append(",".join(MBV2_CHOICES[c].name for c in stage))
    return "|".join(stages)


def parse_key(space: SearchSpace, key: str) -> Architecture:
    """Inverse of canonical_key on its image.

    Raises KeyParseError (with the position of the first bad token) for
    anything outside the canonical grammar, including mobilenet_v2 keys
    with a skip before an active block.
    """
    if space.kind in (SpaceKind.MACRO, SpaceKind.CELL):
        n = len(space.positions)
        if len(key) != n:
            raise KeyParseError(
                f"expected {n} digits, got {len(key)}", min(len(key), n)
            )
        choices = []
        for i, ch in enumerate(key):
            if not ch.isdigit() or int(ch) >= len(space.positions[i].choices):
                raise KeyParseError(f"bad digit {ch!r}", i)
            choices.append(int(ch))
        return Architecture(space.kind, tuple(choices))

    if space.kind is SpaceKind.CHANNEL:
        tokens = key.split(",")
        if len(tokens) != len(space.positions):
            raise KeyParseError(
                f"expected {len(space.positions)} widths, got {len(tokens)}",
                min(len(tokens), len(space.positions)),
            )
        choices = []
        for i, tok in enumerate(tokens):
            widths = [c.width for c in space.positions[i].choices]
            try:
                w = int(tok)
            except ValueError:
                raise KeyParseError(f"bad width {tok!r}", i) from None
            if w not in widths:
                raise KeyParseError(f"width {w} not offered at layer {i}", i)
            choices.append(widths.index(w))
        return Architecture(space.kind, tuple(choices))

    stages = key.split("|")
    if len(stages) != MBV2_STAGES:
        raise KeyParseError(
            f"expected {MBV2_STAGES} stages, got {len(stages)}",
            min(len(stages), MBV2_STAGES),
        )
    names = [c.name for c in MBV2_CHOICES]
    choices = []
    for s, stage in enumerate(stages):
        tokens = stage.split(",")
        if len(tokens) != MBV2_SLOTS:
            raise KeyParseError(
                f"stage {s}: expected {MBV2_SLOTS} blocks, got {len(tokens)}",
                s * MBV2_SLOTS + min(len(tokens), MBV2_SLOTS),
            )
        seen_skip = False
        for j, tok in enumerate(tokens):
            if tok not in names:
                raise KeyParseError(f"unknown block {tok!r}", s * MBV2_SLOTS + j)
            idx = names.index(tok)
            if idx == MBV2_SKIP:
                seen_skip = True
            elif seen_skip:
                raise KeyParseError(
                    f"stage {s}: active block after skip", s * MBV2_SLOTS + j
                )
            choices.append(idx)
    return Architecture(space.kind, tuple(choices))


def random_arch(space: SearchSpace, rng: random.Random) -> Architecture:
    """Uniform draw over raw index combinations, then canonicalized."""
    choices = tuple(
        rng.randrange(len(pos.choices)) for pos in space.positions
    )
    return normalize(space, Architecture(space.kind, choices))


def mutate(space: SearchSpace, arch: Architecture, rng: random.Random) -> Architecture:
    """Change exactly one position to a different candidate.

    For mobilenet_v2 the result is re-canonicalized, so the returned
    architecture may differ from the input in more than one slot while
    still being a single-candidate edit before normalization.
    """
    problems = validate(space, arch)
    if problems:
        raise InvalidArchitecture(problems)
    pos = rng.randrange(len(space.positions))
    n = len(space.positions[pos].choices)
    new = rng.randrange(n - 1)
    if new >= arch.choices[pos]:
        new += 1
    choices = list(arch.choices)
    choices[pos] = new
    return normalize(space, Architecture(space.kind, tuple(choices)))


def enumerate_space(
    space: SearchSpace, guard: int = ENUMERATION_GUARD
) -> Iterator[Architecture]:
    """Yield every architecture, ordered by canonical key string.

    Refuses spaces larger than ``guard`` raw combinations. The full key
    list is materialized for sorting, so keep the guard modest.
    """
    n = space_cardinality(space)
    if n > guard:
        raise SpaceTooLarge(f"{space.name}: {n} architectures exceeds guard {guard}")
    archs = [
        Architecture(space.kind, combo)
        for combo in itertools.product(
            *(range(len(pos.choices)) for pos in space.positions)
        )
    ]
    archs.sort(key=lambda a: canonical_key(space, a))
    return iter(archs)
