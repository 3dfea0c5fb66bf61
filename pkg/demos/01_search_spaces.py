"""
The four search spaces and their canonical keys
===============================================

Every space is a fixed list of positions, each holding a small set of
candidates. An architecture is one index per position, and each space
defines a compact string key for it.
"""

import random

from llmnas import (
    canonical_key,
    cell_space,
    channel_space,
    enumerate_space,
    macro_space,
    mobilenet_v2_space,
    mutate,
    parse_key,
    random_arch,
    space_cardinality,
)

# The channel space needs its width menu up front; the other three are
# fully determined by their definitions.
widths = [
    (32, 40, 48, 64),
    (32, 40, 48, 64),
    (48, 56, 64, 96),
    (48, 56, 64, 96),
    (96, 112, 128, 160),
    (96, 112, 128, 160),
    (112, 128, 144, 192),
]

spaces = [
    macro_space(),
    channel_space(widths, "resnet"),
    cell_space(),
    mobilenet_v2_space(),
]

for space in spaces:
    print(f"{space.name}: {space_cardinality(space)} architectures, "
          f"{len(space.positions)} positions")

# Keys round-trip: parse(key(a)) == a. The macro space uses one digit
# per layer, the channel space comma-joined widths, the cell space one
# digit per edge, and the block space mnemonic names per stage.
rng = random.Random(0)
for space in spaces:
    arch = random_arch(space, rng)
    key = canonical_key(space, arch)
    assert parse_key(space, key) == arch
    print(f"{space.name:>12}: {key}")

# A mutation changes exactly one position.
macro = spaces[0]
arch = random_arch(macro, rng)
neighbor = mutate(macro, arch, rng)
print("arch    ", canonical_key(macro, arch))
print("neighbor", canonical_key(macro, neighbor))

# Small spaces can be walked exhaustively (keys come out sorted).
keys = [canonical_key(macro, a) for a in enumerate_space(macro)]
print(f"enumerated {len(keys)} macro keys, first={keys[0]} last={keys[-1]}")
