"""FLOPs model checks.

Every pinned number below is recomputed from first principles inside
this module (see ``_block_ops`` and ``_oracle_total``) rather than
copied out of the implementation, so a regression in the model and a
regression in the test cannot cancel.
"""

from __future__ import annotations

import random

import pytest

from llmnas import (
    DEFAULT_PLAN,
    Architecture,
    DimensionError,
    InvalidArchitecture,
    SpaceKind,
    StagePlan,
    build_flops_table,
    conv_macs,
    fixed_flops,
    fixed_params,
    layer_flops,
    layer_params,
    parse_key,
    random_arch,
    slot_shape,
    total_flops,
    total_params,
)
from llmnas.space import MBV2_CHOICES, MBV2_SKIP, MBV2_SLOTS

from conftest import ALL_SKIP_KEY, G329_KEY, G401_KEY

# ----- independent oracle -------------------------------------------------
# Shapes seen by each group's first slot: (cin, cout, input_hw, stride).
# Later slots in a group are shape-preserving at the group's output.
_GROUPS = [
    (16, 24, 56, 2),
    (24, 40, 28, 2),
    (40, 80, 14, 1),
    (80, 96, 14, 2),
    (96, 192, 7, 1),
]

_KERNEL_EXPANSION = {
    "mb3e4": (3, 4),
    "mb3e6": (3, 6),
    "mb5e4": (5, 4),
    "mb5e6": (5, 6),
    "mb7e4": (7, 4),
    "mb7e6": (7, 6),
}


def _shape(stage: int, slot: int) -> tuple[int, int, int, int]:
    cin, cout, hw, stride = _GROUPS[stage]
    if slot == 0:
        return cin, cout, hw, stride
    return cout, cout, -(-hw // stride), 1


def _block_ops(kernel: int, expansion: int, cin: int, cout: int, hw: int, stride: int) -> int:
    ec = cin * expansion
    out = -(-hw // stride)
    expand = 2 * cin * ec * hw * hw
    depthwise = 2 * kernel * kernel * ec * out * out
    se = 2 * ec * (ec // 4) + ec * out * out
    project = 2 * ec * cout * out * out
    return expand + depthwise + se + project


def _block_weights(kernel: int, expansion: int, cin: int, cout: int) -> int:
    ec = cin * expansion
    return cin * ec + kernel * kernel * ec + 2 * ec * (ec // 4) + ec * cout


_FIXED_OPS = (
    2 * (3 * 16 * 9 * 112 * 112)
    + 2 * (16 * 9 * 56 * 56)
    + 2 * (16 * 16 * 56 * 56)
    + 2 * (192 * 320 * 7 * 7)
    + 2 * (320 * 1280)
    + 2 * (1280 * 1000)
)

_FIXED_WEIGHTS = (
    3 * 16 * 9 + 16 * 9 + 16 * 16 + 192 * 320 + 320 * 1280 + 1280 * 1000
)


def _oracle_total(key: str) -> int:
    ops = _FIXED_OPS
    for stage, part in enumerate(key.split("|")):
        for slot, name in enumerate(part.split(",")):
            if name == "skip":
                continue
            k, e = _KERNEL_EXPANSION[name]
            cin, cout, hw, stride = _shape(stage, slot)
            ops += _block_ops(k, e, cin, cout, hw, stride)
    return ops


def _oracle_weights(key: str) -> int:
    weights = _FIXED_WEIGHTS
    for stage, part in enumerate(key.split("|")):
        for slot, name in enumerate(part.split(",")):
            if name == "skip":
                continue
            k, e = _KERNEL_EXPANSION[name]
            cin, cout, _, _ = _shape(stage, slot)
            weights += _block_weights(k, e, cin, cout)
    return weights


# ----- primitives ----------------------------------------------------------


def test_conv_macs_pinned():
    assert conv_macs(16, 16, 1, 112) == 3_211_264
    assert conv_macs(64, 64, 3, 28, groups=64) == 9 * 64 * 28 * 28 == 451_584
    assert conv_macs(3, 16, 3, 112) == 9 * 3 * 16 * 112 * 112


def test_conv_macs_rejects_nonpositive():
    with pytest.raises(DimensionError):
        conv_macs(0, 16, 3, 112)
    with pytest.raises(DimensionError):
        conv_macs(16, 16, 3, 0)
    with pytest.raises(DimensionError):
        conv_macs(16, 16, 3, 112, groups=0)


def test_layer_flops_pinned_block():
    choice = next(c for c in MBV2_CHOICES if c.name == "mb3e4")
    got = layer_flops(choice, 16, 24, 56, 2)
    assert got == 9_786_368
    assert got == _block_ops(3, 4, 16, 24, 56, 2)


def test_layer_flops_all_choices_match_oracle():
    for choice in MBV2_CHOICES:
        if choice.name == "skip":
            continue
        for cin, cout, hw, stride in _GROUPS:
            want = _block_ops(choice.kernel, choice.expansion, cin, cout, hw, stride)
            assert layer_flops(choice, cin, cout, hw, stride) == want


def test_skip_costs_nothing():
    skip = MBV2_CHOICES[MBV2_SKIP]
    assert skip.name == "skip"
    assert layer_flops(skip, 16, 24, 56, 2) == 0
    assert layer_params(skip, 16, 24) == 0


def test_layer_flops_rejects_bad_dims():
    choice = next(c for c in MBV2_CHOICES if c.name == "mb3e4")
    with pytest.raises(DimensionError):
        layer_flops(choice, 0, 24, 56, 2)
    with pytest.raises(DimensionError):
        layer_flops(choice, 16, 24, 56, 0)


def test_layer_params_match_oracle():
    for choice in MBV2_CHOICES:
        if choice.name == "skip":
            continue
        for cin, cout, _, _ in _GROUPS:
            want = _block_weights(choice.kernel, choice.expansion, cin, cout)
            assert layer_params(choice, cin, cout) == want


# ----- skeleton -------------------------------------------------------------


def test_fixed_flops_pinned():
    assert fixed_flops() == _FIXED_OPS == 22_747_136
    assert fixed_params() == _FIXED_WEIGHTS == 1_751_872


def test_slot_shapes_nominal():
    for stage in range(5):
        for slot in range(MBV2_SLOTS):
            assert slot_shape(DEFAULT_PLAN, stage, slot) == _shape(stage, slot)


def test_slot_shape_bounds():
    with pytest.raises(DimensionError):
        slot_shape(DEFAULT_PLAN, 5, 0)
    with pytest.raises(DimensionError):
        slot_shape(DEFAULT_PLAN, 0, 6)
    with pytest.raises(DimensionError):
        slot_shape(DEFAULT_PLAN, 0, 0, resolution=0)


def test_stage_plan_validation():
    with pytest.raises(DimensionError):
        StagePlan(group_channels=(24, 40), group_strides=(2,))
    with pytest.raises(DimensionError):
        StagePlan(resolution=2)


# ----- whole-model totals ---------------------------------------------------


def test_all_skip_total(mbv2):
    arch = parse_key(mbv2, ALL_SKIP_KEY)
    assert total_flops(mbv2, arch) == 22_747_136 / 1e6


def test_reference_model_totals(mbv2):
    for key, claimed_m in ((G329_KEY, 329.0), (G401_KEY, 401.0)):
        arch = parse_key(mbv2, key)
        got = total_flops(mbv2, arch)
        assert got == _oracle_total(key) / 1e6
        assert abs(got - claimed_m) / claimed_m < 0.05, (key, got)


def test_reference_model_params(mbv2):
    for key, claimed_m in ((G329_KEY, 7.0), (G401_KEY, 7.5)):
        arch = parse_key(mbv2, key)
        got = total_params(mbv2, arch)
        assert got == _oracle_weights(key) / 1e6
        assert abs(got - claimed_m) / claimed_m < 0.02, (key, got)


def test_random_totals_match_oracle(mbv2):
    rng = random.Random(29)
    for _ in range(200):
        arch = random_arch(mbv2, rng)
        key = "|".join(
            ",".join(MBV2_CHOICES[c].name for c in arch.choices[s * 6 : s * 6 + 6])
            for s in range(5)
        )
        assert total_flops(mbv2, arch) == _oracle_total(key) / 1e6
        assert total_params(mbv2, arch) == _oracle_weights(key) / 1e6


def test_total_rejects_other_spaces(macro):
    arch = Architecture(SpaceKind.MACRO, (0,) * 8)
    with pytest.raises(ValueError):
        total_flops(macro, arch)


def test_total_rejects_invalid_arch(mbv2):
    bad = Architecture(SpaceKind.MOBILENET_V2, (9,) * 30)
    with pytest.raises(InvalidArchitecture):
        total_flops(mbv2, bad)
    skip_first = Architecture(SpaceKind.MOBILENET_V2, (6, 0) + (6,) * 28)
    with pytest.raises(InvalidArchitecture):
        total_flops(mbv2, skip_first)


def test_smaller_resolution_costs_less(mbv2):
    arch = parse_key(mbv2, G329_KEY)
    assert total_flops(mbv2, arch, resolution=112) < total_flops(mbv2, arch)


# ----- look-up table ---------------------------------------------------------


def test_table_identity_random(mbv2):
    table = build_flops_table(mbv2)
    rng = random.Random(31)
    for _ in range(1000):
        arch = random_arch(mbv2, rng)
        assert table.arch_flops(arch) == total_flops(mbv2, arch)


def test_table_skip_column_zero(mbv2):
    table = build_flops_table(mbv2)
    for stage in range(5):
        for slot in range(MBV2_SLOTS):
            assert table.entries[(stage, slot, MBV2_SKIP)] == 0


def test_table_fixed_and_shape(mbv2):
    table = build_flops_table(mbv2)
    assert table.fixed == _FIXED_OPS
    assert table.resolution == 224
    assert len(table.entries) == 5 * 6 * 7


def test_table_json_shape(mbv2):
    doc = build_flops_table(mbv2).to_json()
    assert doc["resolution"] == 224
    assert doc["fixed"] == _FIXED_OPS
    assert len(doc["entries"]) == 210
    row = doc["entries"][0]
    assert set(row) == {"stage", "slot", "choice", "flops"}
    names = {r["choice"] for r in doc["entries"]}
    assert names == set(_KERNEL_EXPANSION) | {"skip"}


def test_resolution_doubling_decomposition(mbv2):
    """Doubling input resolution quadruples every spatial term but not
    the squeeze-excitation FC pair, which depends only on channels."""
    at224 = build_flops_table(mbv2, resolution=224)
    at448 = build_flops_table(mbv2, resolution=448)
    for (stage, slot, idx), small in at224.entries.items():
        choice = MBV2_CHOICES[idx]
        big = at448.entries[(stage, slot, idx)]
        if choice.name == "skip":
            assert small == big == 0
            continue
        cin = _shape(stage, slot)[0]
        se_fc = 2 * (cin * choice.expansion) * ((cin * choice.expansion) // 4)
        assert big == 4 * (small - se_fc) + se_fc


def test_entries_monotone_in_kernel_and_expansion(mbv2):
    table = build_flops_table(mbv2)
    by_name = {c.name: i for i, c in enumerate(MBV2_CHOICES)}
    for stage in range(5):
        for slot in range(MBV2_SLOTS):
            cost = lambda n: table.entries[(stage, slot, by_name[n])]  # noqa: E731
            assert cost("mb3e4") <= cost("mb5e4") <= cost("mb7e4")
            assert cost("mb3e6") <= cost("mb5e6") <= cost("mb7e6")
            assert cost("mb3e4") <= cost("mb3e6")
            assert cost("mb5e4") <= cost("mb5e6")
            assert cost("mb7e4") <= cost("mb7e6")
            for name in _KERNEL_EXPANSION:
                assert cost(name) > 0


def test_activating_a_slot_strictly_increases_total(mbv2):
    base = parse_key(mbv2, ALL_SKIP_KEY)
    baseline = total_flops(mbv2, base)
    for idx in range(6):
        choices = list(base.choices)
        choices[0] = idx
        arch = Architecture(SpaceKind.MOBILENET_V2, tuple(choices))
        assert total_flops(mbv2, arch) > baseline


def test_table_rejects_other_spaces(cell):
    with pytest.raises(ValueError):
        build_flops_table(cell)
