"""
Synthetic benchmark tables
==========================

A benchmark table maps every architecture in a space to precomputed
metrics, so a "training run" is a dictionary lookup. Real tables come
from the ingest tool; synthetic ones are generated on the spot and are
byte-reproducible from their seed.
"""

import tempfile
from pathlib import Path

from llmnas import load_benchmark, macro_space, save_benchmark, synth_benchmark

space = macro_space()
table = synth_benchmark(space, seed=11)
print(f"{len(table)} entries, provenance: {table.provenance!r}")

key, best = table.optimum()
print(f"optimum {key} at {best.val_acc:.2f}% validation accuracy")

# rank 1 means nothing in the table scores strictly higher
print("rank of optimum:", table.rank_of(best.val_acc))
print("rank of 90.00:  ", table.rank_of(90.0))

some_key = "01201201"
m = table.lookup(some_key)
print(f"{some_key}: val {m.val_acc:.2f}, test {m.test_acc:.2f}, "
      f"{m.flops_m:.1f}M FLOPs")

# Round-trips through JSONL preserve every byte.
with tempfile.TemporaryDirectory() as tmp:
    p1 = Path(tmp) / "a.jsonl"
    p2 = Path(tmp) / "b.jsonl"
    save_benchmark(table, str(p1))
    save_benchmark(load_benchmark(str(p1)), str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    print(f"saved {p1.stat().st_size} bytes; reload+resave is identical")
