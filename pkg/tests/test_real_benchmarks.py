"""Checks against the real converted benchmark tables.

These run only when the converted JSONL files exist (see the ingest
tool under ingest/). Point LLMNAS_DATA_DIR at the directory holding
them; it defaults to ./data. Everything here is skipped otherwise, so
the main suite stays self-contained.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from llmnas import (
    AdvisorSession,
    ReplayAdvisor,
    RunConfig,
    TraceStatus,
    load_benchmark,
    run_search,
)

DATA_DIR = Path(os.environ.get("LLMNAS_DATA_DIR", "data"))

MACRO_FILE = DATA_DIR / "nas-bench-macro.jsonl"
RESNET_FILE = DATA_DIR / "channel-bench-resnet.jsonl"
MOBILENET_FILE = DATA_DIR / "channel-bench-mobilenet.jsonl"
CELL_FILE = DATA_DIR / "nas-bench-201.jsonl"

# One recorded reference run on the macro table: accuracy (2 decimals)
# and global rank at each step, ending in a declination.
RECORDED_STEPS = (
    (85.70, 6221),
    (92.62, 212),
    (92.82, 64),
    (93.05, 8),
    (92.95, 21),
    (92.46, 479),
)


def _need(path: Path):
    return pytest.mark.skipif(
        not path.exists(), reason=f"{path} not present; run the ingest tool first"
    )


@_need(MACRO_FILE)
def test_macro_table_shape_and_optimum():
    table = load_benchmark(str(MACRO_FILE))
    assert len(table) == 6561
    _, best = table.optimum()
    assert round(best.val_acc, 2) == 93.13
    assert table.rank_of(best.val_acc) == 1


@_need(MACRO_FILE)
def test_macro_recorded_run_replays():
    table = load_benchmark(str(MACRO_FILE))
    keys = []
    for acc, rank in RECORDED_STEPS:
        matches = [
            key
            for key, m in table.items()
            if round(m.val_acc, 2) == acc and table.rank_of(m.val_acc) == rank
        ]
        assert matches, f"no entry with accuracy {acc} at rank {rank}"
        keys.append(matches[0])

    session = AdvisorSession(table.space, ReplayAdvisor(keys))
    trace = run_search(table.space, table, session, RunConfig(iterations=10))
    assert trace.status is TraceStatus.NO_IMPROVEMENT
    assert len(trace.records) == 6
    got = [(round(r.val_acc, 2), r.rank) for r in trace.records]
    assert got == list(RECORDED_STEPS)


@_need(RESNET_FILE)
def test_resnet_channel_optimum():
    table = load_benchmark(str(RESNET_FILE))
    assert len(table) == 16384
    assert table.space.base_model == "resnet"
    _, best = table.optimum()
    assert round(best.val_acc, 2) == 93.89


@_need(MOBILENET_FILE)
def test_mobilenet_channel_optimum():
    table = load_benchmark(str(MOBILENET_FILE))
    assert len(table) == 16384
    assert table.space.base_model == "mobilenet"
    _, best = table.optimum()
    assert round(best.val_acc, 2) == 91.89


@_need(CELL_FILE)
def test_cell_table_shape():
    table = load_benchmark(str(CELL_FILE))
    assert len(table) == 15625
    _, best = table.optimum()
    assert table.rank_of(best.val_acc) == 1
