"""Run logs: JSONL persistence, summary tables, plot-ready CSV.

A log file is one header line followed by one line per recorded
iteration. Reruns with the same seed produce byte-identical files; no
timestamps are written unless the caller puts them in the metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .engine import IterationRecord, Trace, TraceStatus, best_of_trace, record_value
from .errors import EmptyTrace, FormatError, MixedRuns

_RECORD_FIELDS = (
    "key",
    "val_acc",
    "test_acc",
    "rank",
    "flops_m",
    "duplicate",
    "constraint_retries",
    "digest",
    "error",
)


@dataclass
class ExperimentLog:
    metadata: dict
    traces: list[Trace] = field(default_factory=list)


def write_trace_jsonl(log: ExperimentLog, path: str) -> None:
    """One header line, then one line per iteration record."""
    header = {
        "meta": log.metadata,
        "trials": [
            {"trial": t.trial, "status": t.status.value, "note": t.note}
            for t in log.traces
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for trace in log.traces:
            for rec in trace.records:
                row = {"trial": trace.trial, "t": rec.t}
                row.update({f: getattr(rec, f) for f in _RECORD_FIELDS})
                fh.write(json.dumps(row) + "\n")


def read_trace_jsonl(path: str) -> ExperimentLog:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty log file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad header: {exc.msg}", 1) from None
    if not isinstance(header, dict) or "meta" not in header or "trials" not in header:
        raise FormatError("header must carry 'meta' and 'trials'", 1)
    traces: dict[int, Trace] = {}
    for t in header["trials"]:
        traces[t["trial"]] = Trace(
            trial=t["trial"],
            status=TraceStatus(t["status"]),
            note=t.get("note"),
        )
    for n, line in enumerate(lines[1:], start=2):
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad record: {exc.msg}", n) from None
        trial = row.get("trial")
        if trial not in traces:
            raise FormatError(f"record for unknown trial {trial}", n)
        traces[trial].records.append(
            IterationRecord(
                t=row["t"], **{f: row.get(f) for f in _RECORD_FIELDS}
            )
        )
    return ExperimentLog(metadata=header["meta"], traces=list(traces.values()))


def _iterations(log: ExperimentLog) -> int:
    config = log.metadata.get("config", {})
    if isinstance(config, dict) and "iterations" in config:
        return int(config["iterations"])
    most = 0
    for trace in log.traces:
        for rec in trace.records:
            most = max(most, rec.t + 1)
    return most


def _check_traces(log: ExperimentLog, iterations: int) -> None:
    seen = set()
    for trace in log.traces:
        if trace.trial in seen:
            raise MixedRuns(f"trial {trace.trial} appears twice")
        seen.add(trace.trial)
        last = -1
        for rec in trace.records:
            if rec.t <= last or rec.t >= iterations:
                raise MixedRuns(
                    f"trial {trace.trial}: iteration {rec.t} out of order or "
                    f"beyond {iterations}"
                )
            last = rec.t


def _fmt_acc(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}"


def summary_table(log: ExperimentLog, metric: str = "val") -> str:
    """Per-trial accuracy and rank rows, one column per iteration.

    Iterations that never ran (early stop) or failed render as "-",
    matching the usual presentation of advisor-driven search tables.
    The optimum column comes from metadata["optimum"] when present.
    """
    iterations = _iterations(log)
    _check_traces(log, iterations)
    optimum = log.metadata.get("optimum") or {}
    opt_acc = optimum.get("val_acc") if metric == "val" else optimum.get("test_acc")

    lines = [
        "trial,series," + ",".join(f"T{t}" for t in range(iterations)) + ",best,optimum"
    ]
    for trace in sorted(log.traces, key=lambda tr: tr.trial):
        by_t = {rec.t: rec for rec in trace.records}
        acc_cells = []
        rank_cells = []
        for t in range(iterations):
            rec = by_t.get(t)
            if rec is None or rec.error is not None:
                acc_cells.append("-")
                rank_cells.append("-")
            else:
                acc_cells.append(_fmt_acc(record_value(rec, metric)))
                rank_cells.append("-" if rec.rank is None else str(rec.rank))
        try:
            best = best_of_trace(trace, metric)
            best_acc = _fmt_acc(record_value(best, metric))
            best_rank = "-" if best.rank is None else str(best.rank)
        except EmptyTrace:
            best_acc = best_rank = "-"
        lines.append(
            f"{trace.trial},accuracy," + ",".join(acc_cells)
            + f",{best_acc},{_fmt_acc(opt_acc)}"
        )
        lines.append(
            f"{trace.trial},rank," + ",".join(rank_cells)
            + f",{best_rank},{'1' if opt_acc is not None else '-'}"
        )
    return "\n".join(lines) + "\n"


def export_plot_csv(log: ExperimentLog, kind: str, metric: str = "val") -> str:
    """Long-format series for plotting: trial,iteration,value.

    ``kind`` is "accuracy_vs_iter" or "rank_vs_iter". Only evaluated
    iterations appear; values match the summary table cells.
    """
    if kind not in ("accuracy_vs_iter", "rank_vs_iter"):
        raise ValueError(
            f"kind must be 'accuracy_vs_iter' or 'rank_vs_iter', got {kind!r}"
        )
    iterations = _iterations(log)
    _check_traces(log, iterations)
    lines = ["trial,iteration,value"]
    for trace in sorted(log.traces, key=lambda tr: tr.trial):
        for rec in trace.records:
            if rec.error is not None:
                continue
            if kind == "accuracy_vs_iter":
                v = record_value(rec, metric)
                if v is None:
                    continue
                lines.append(f"{trace.trial},{rec.t},{v:.2f}")
            else:
                if rec.rank is None:
                    continue
                lines.append(f"{trace.trial},{rec.t},{rec.rank}")
    return "\n".join(lines) + "\n"
