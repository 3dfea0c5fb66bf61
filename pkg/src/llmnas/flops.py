"""Analytic FLOPs and parameter model for the mobilenet_v2 space.

Convolution and fully-connected layers count two operations per
multiply-accumulate (the multiply and the add). The squeeze-excitation
estimate (two bottleneck FC layers plus pooling/scale) is added once
per block:

    se_ops = 2 * ec * (ec // 4) + ec * out_hw^2

All intermediate arithmetic is exact integer op counts; only the
public totals convert to millions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DimensionError, InvalidArchitecture
from .space import (
    MBV2_SLOTS,
    MBV2_STAGES,
    Architecture,
    Choice,
    SearchSpace,
    SpaceKind,
    validate,
)

OPS_PER_MAC = 2
DEFAULT_RESOLUTION = 224


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def conv_macs(cin: int, cout: int, kernel: int, out_hw: int, groups: int = 1) -> int:
    """Multiply-accumulate count of a conv producing an out_hw square map."""
    if min(cin, cout, kernel, out_hw, groups) < 1:
        raise DimensionError(
            f"conv dims must be positive: cin={cin} cout={cout} "
            f"kernel={kernel} out_hw={out_hw} groups={groups}"
        )
    return kernel * kernel * (cin // groups) * cout * out_hw * out_hw


def layer_flops(choice: Choice, cin: int, cout: int, hw: int, stride: int) -> int:
    """Op count of one slot. Skip choices cost nothing.

    ``hw`` is the square input resolution; the output resolution is
    ceil(hw / stride).
    """
    if choice.name == "skip":
        return 0
    if choice.kernel is None or choice.expansion is None:
        raise DimensionError(f"choice {choice.name!r} has no kernel/expansion")
    if min(cin, cout, hw, stride) < 1:
        raise DimensionError(
            f"dims must be positive: cin={cin} cout={cout} hw={hw} stride={stride}"
        )
    ec = cin * choice.expansion
    out = _ceil_div(hw, stride)
    expand = OPS_PER_MAC * conv_macs(cin, ec, 1, hw)
    depthwise = OPS_PER_MAC * conv_macs(ec, ec, choice.kernel, out, groups=ec)
    se = 2 * ec * (ec // 4) + ec * out * out
    project = OPS_PER_MAC * conv_macs(ec, cout, 1, out)
    return expand + depthwise + se + project


def layer_params(choice: Choice, cin: int, cout: int) -> int:
    """Weight count of one slot (biases and batch norm ignored)."""
    if choice.name == "skip":
        return 0
    ec = cin * choice.expansion
    return (
        cin * ec
        + choice.kernel * choice.kernel * ec
        + 2 * ec * (ec // 4)
        + ec * cout
    )


@dataclass(frozen=True)
class StagePlan:
    """Fixed skeleton around the searchable blocks.

    Stem: 3x3 conv (3 -> stem_channels, stride 2), then a 3x3
    depthwise + 1x1 pointwise pair (stride 2). Groups of searchable
    blocks follow, the first block of each group applying the group
    stride and channel change. Tail: 1x1 conv to tail_channels, global
    average pool, 1x1 conv to head_channels, FC classifier.
    """

    stem_channels: int = 16
    group_channels: tuple[int, ...] = (24, 40, 80, 96, 192)
    group_strides: tuple[int, ...] = (2, 2, 1, 2, 1)
    blocks_per_group: int = MBV2_SLOTS
    tail_channels: int = 320
    head_channels: int = 1280
    num_classes: int = 1000
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if len(self.group_channels) != len(self.group_strides):
            raise DimensionError("group_channels and group_strides lengths differ")
        if self.resolution < 4:
            raise DimensionError(f"resolution too small: {self.resolution}")


DEFAULT_PLAN = StagePlan()


def _stem_resolutions(resolution: int) -> tuple[int, int]:
    r1 = _ceil_div(resolution, 2)
    return r1, _ceil_div(r1, 2)


def slot_shape(
    plan: StagePlan, stage: int, slot: int, resolution: int | None = None
) -> tuple[int, int, int, int]:
    """(cin, cout, input_hw, stride) seen by a slot.

    Shapes are nominal per the plan: the first slot of every group
    carries that group's stride and channel change, later slots are
    shape-preserving. They do not depend on which slots an
    architecture fills.
    """
    resolution = plan.resolution if resolution is None else resolution
    if resolution < 1:
        raise DimensionError(f"resolution must be positive: {resolution}")
    if not 0 <= stage < len(plan.group_channels):
        raise DimensionError(f"stage {stage} out of range")
    if not 0 <= slot < plan.blocks_per_group:
        raise DimensionError(f"slot {slot} out of range")
    _, h = _stem_resolutions(resolution)
    cin = plan.stem_channels
    for s in range(stage):
        cin = plan.group_channels[s]
        h = _ceil_div(h, plan.group_strides[s])
    cout = plan.group_channels[stage]
    if slot == 0:
        return cin, cout, h, plan.group_strides[stage]
    return cout, cout, _ceil_div(h, plan.group_strides[stage]), 1


def fixed_flops(plan: StagePlan = DEFAULT_PLAN, resolution: int | None = None) -> int:
    """Op count of the stem and tail (independent of block choices)."""
    resolution = plan.resolution if resolution is None else resolution
    if resolution < 1:
        raise DimensionError(f"resolution must be positive: {resolution}")
    r1, r2 = _stem_resolutions(resolution)
    c = plan.stem_channels
    ops = OPS_PER_MAC * conv_macs(3, c, 3, r1)
    ops += OPS_PER_MAC * conv_macs(c, c, 3, r2, groups=c)
    ops += OPS_PER_MAC * conv_macs(c, c, 1, r2)
    h = r2
    for stride in plan.group_strides:
        h = _ceil_div(h, stride)
    ops += OPS_PER_MAC * conv_macs(plan.group_channels[-1], plan.tail_channels, 1, h)
    ops += OPS_PER_MAC * plan.tail_channels * plan.head_channels
    ops += OPS_PER_MAC * plan.head_channels * plan.num_classes
    return ops


def fixed_params(plan: StagePlan = DEFAULT_PLAN) -> int:
    c = plan.stem_channels
    return (
        9 * 3 * c
        + 9 * c
        + c * c
        + plan.group_channels[-1] * plan.tail_channels
        + plan.tail_channels * plan.head_channels
        + plan.head_channels * plan.num_classes
    )


def _require_mbv2(space: SearchSpace, arch: Architecture) -> None:
    if space.kind is not SpaceKind.MOBILENET_V2:
        raise ValueError(f"FLOPs model only covers mobilenet_v2, got {space.kind.value}")
    problems = validate(space, arch)
    if problems:
        raise InvalidArchitecture(problems)


def total_flops(
    space: SearchSpace,
    arch: Architecture,
    plan: StagePlan = DEFAULT_PLAN,
    resolution: int | None = None,
) -> float:
    """Total op count of an architecture, in millions."""
    _require_mbv2(space, arch)
    ops = fixed_flops(plan, resolution)
    for i, c in enumerate(arch.choices):
        stage, slot = divmod(i, MBV2_SLOTS)
        choice = space.positions[i].choices[c]
        cin, cout, hw, stride = slot_shape(plan, stage, slot, resolution)
        ops += layer_flops(choice, cin, cout, hw, stride)
    return ops / 1e6


def total_params(
    space: SearchSpace, arch: Architecture, plan: StagePlan = DEFAULT_PLAN
) -> float:
    """Total weight count of an architecture, in millions."""
    _require_mbv2(space, arch)
    params = fixed_params(plan)
    for i, c in enumerate(arch.choices):
        stage, slot = divmod(i, MBV2_SLOTS)
        choice = space.positions[i].choices[c]
        cin, cout, _, _ = slot_shape(plan, stage, slot)
        params += layer_params(choice, cin, cout)
    return params / 1e6


@dataclass(frozen=True)
class FlopsTable:
    """Per-slot look-up table of op counts.

    ``entries[(stage, slot, choice_index)]`` holds the op count of
    placing that choice at that slot; ``fixed`` is the stem+tail cost.
    For any valid architecture the exact identity holds:

        total_flops(arch) == (fixed + sum of selected entries) / 1e6
    """

    space: SearchSpace
    resolution: int
    fixed: int
    entries: dict[tuple[int, int, int], int] = field(repr=False)

    def arch_flops(self, arch: Architecture) -> float:
        _require_mbv2(self.space, arch)
        ops = self.fixed
        for i, c in enumerate(arch.choices):
            stage, slot = divmod(i, MBV2_SLOTS)
            ops += self.entries[(stage, slot, c)]
        return ops / 1e6

    def to_json(self) -> dict:
        rows = [
            {
                "stage": s,
                "slot": j,
                "choice": self.space.positions[s * MBV2_SLOTS + j].choices[c].name,
                "flops": v,
            }
            for (s, j, c), v in sorted(self.entries.items())
        ]
        return {"resolution": self.resolution, "fixed": self.fixed, "entries": rows}


def build_flops_table(
    space: SearchSpace,
    plan: StagePlan = DEFAULT_PLAN,
    resolution: int | None = None,
) -> FlopsTable:
    if space.kind is not SpaceKind.MOBILENET_V2:
        raise ValueError(f"FLOPs table only covers mobilenet_v2, got {space.kind.value}")
    resolution = plan.resolution if resolution is None else resolution
    entries: dict[tuple[int, int, int], int] = {}
    for stage in range(MBV2_STAGES):
        for slot in range(plan.blocks_per_group):
            cin, cout, hw, stride = slot_shape(plan, stage, slot, resolution)
            pos = space.positions[stage * MBV2_SLOTS + slot]
            for idx, choice in enumerate(pos.choices):
                entries[(stage, slot, idx)] = layer_flops(choice, cin, cout, hw, stride)
    return FlopsTable(space, resolution, fixed_flops(plan, resolution), entries)
