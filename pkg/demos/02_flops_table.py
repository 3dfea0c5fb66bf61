"""
Analytic FLOPs for the block-wise space
=======================================
"""

from llmnas import build_flops_table, mobilenet_v2_space, parse_key, total_flops, total_params

space = mobilenet_v2_space()

# A known ~329M-FLOPs model, written as its canonical key.
key = (
    "mb3e4,mb3e4,skip,skip,skip,skip"
    "|mb3e4,mb3e4,mb3e4,mb3e4,skip,skip"
    "|mb3e6,mb3e6,mb7e4,skip,skip,skip"
    "|mb3e6,mb7e4,mb3e6,mb3e6,skip,skip"
    "|mb5e6,mb5e6,mb5e6,mb5e6,skip,skip"
)
arch = parse_key(space, key)
print(f"total:  {total_flops(space, arch):.3f} M FLOPs")
print(f"params: {total_params(space, arch):.3f} M")

# The same totals come from a per-slot look-up table: fixed stem/tail
# cost plus one entry per slot. This is what gets embedded into the
# problem statement when a FLOPs budget is active, so the advisor can
# do arithmetic instead of guessing.
table = build_flops_table(space)
print(f"fixed:  {table.fixed / 1e6:.3f} M")
assert table.arch_flops(arch) == total_flops(space, arch)

# Cost of each candidate at stage 0, slot 0 (16 -> 24 channels, stride 2):
for idx, choice in enumerate(space.positions[0].choices):
    ops = table.entries[(0, 0, idx)]
    print(f"  {choice.name:>6}: {ops / 1e6:7.3f} M")

# Halving the input resolution roughly quarters the spatial work.
print(f"at 112px: {total_flops(space, arch, resolution=112):.3f} M FLOPs")
