"""Command-line surface: search, baseline, flops, bench.

Exit codes: 0 success, 2 configuration/usage error, 3 benchmark or
file error, 4 all trials failed. Every subcommand is deterministic
for fixed flags and seed as long as a mock advisor backend is used.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .advisor import (
    API_KEY_ENV,
    ChatAdvisor,
    ChatCompletionsClient,
    HillClimbAdvisor,
    RandomAdvisor,
    ReplayAdvisor,
)
from .bench import load_benchmark
from .engine import (
    RunConfig,
    TraceStatus,
    exact_best_of_k_expectation,
    random_baseline,
    run_trials,
)
from .errors import FormatError, KeyParseError, LlmnasError
from .flops import (
    DEFAULT_RESOLUTION,
    StagePlan,
    build_flops_table,
    total_params,
)
from .report import ExperimentLog, export_plot_csv, summary_table, write_trace_jsonl
from .space import (
    MBV2_SLOTS,
    SpaceKind,
    mobilenet_v2_space,
    parse_key,
)

SPACE_SELECTORS = {
    "nas-bench-macro": (SpaceKind.MACRO, None),
    "channel-bench-resnet": (SpaceKind.CHANNEL, "resnet"),
    "channel-bench-mobilenet": (SpaceKind.CHANNEL, "mobilenet"),
    "nas-bench-201": (SpaceKind.CELL, None),
    "mobilenet-v2": (SpaceKind.MOBILENET_V2, None),
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BENCH = 3
EXIT_ALL_FAILED = 4


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_table(path: str):
    try:
        return load_benchmark(path)
    except (LlmnasError, OSError) as exc:
        return _fail(EXIT_BENCH, f"cannot load benchmark {path}: {exc}")


def _read_fixture_keys(path: str) -> list[str]:
    """Replay fixture: JSONL of {"key": ...} objects (bare key lines
    are tolerated)."""
    keys = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                keys.append(line)
                continue
            if isinstance(obj, dict) and "key" in obj:
                keys.append(str(obj["key"]))
            elif isinstance(obj, str):
                keys.append(obj)
            else:
                raise FormatError(f"fixture line is not a key: {line!r}")
    return keys


def cmd_search(args: argparse.Namespace) -> int:
    kind, base_model = SPACE_SELECTORS[args.space]
    if args.flops_limit_m is not None and kind is not SpaceKind.MOBILENET_V2:
        return _fail(EXIT_CONFIG, "--flops-limit-m requires --space mobilenet-v2")
    if args.advisor == "replay" and not args.fixture:
        return _fail(EXIT_CONFIG, "--advisor replay requires --fixture")
    if args.advisor == "openai" and not os.environ.get(API_KEY_ENV):
        return _fail(EXIT_CONFIG, f"--advisor openai requires {API_KEY_ENV} to be set")

    table = _load_table(args.bench)
    if isinstance(table, int):
        return table
    if table.space.kind is not kind or (
        base_model and table.space.base_model != base_model
    ):
        return _fail(
            EXIT_BENCH,
            f"benchmark {args.bench} holds a {table.space.name} table, "
            f"not {args.space}",
        )

    if args.advisor == "replay":
        try:
            fixture_keys = _read_fixture_keys(args.fixture)
        except (OSError, FormatError) as exc:
            return _fail(EXIT_BENCH, f"cannot read fixture: {exc}")

    def factory(trial: int, seed: int):
        if args.advisor == "random":
            return RandomAdvisor(seed)
        if args.advisor == "hillclimb":
            return HillClimbAdvisor(seed)
        if args.advisor == "replay":
            return ReplayAdvisor(fixture_keys)
        client = ChatCompletionsClient(base_url=args.base_url, model=args.model)
        return ChatAdvisor(client, truncate_turns=args.truncate_turns)

    config = RunConfig(
        iterations=args.iterations,
        temperature=args.temperature,
        trials=args.trials,
        seed=args.seed,
        parse_retries=args.parse_retries,
        flops_limit_m=args.flops_limit_m,
        max_constraint_retries=args.constraint_retries,
        flops_resolution=args.resolution,
        feedback_metric=args.metric,
        parallel=args.parallel,
    )
    traces = run_trials(table.space, table, factory, config)

    opt_key, opt_metrics = table.optimum(args.metric)
    metadata = {
        "space": args.space,
        "kind": kind.value,
        "advisor": args.advisor,
        "benchmark": {
            "path": str(args.bench),
            "provenance": table.provenance,
            "count": len(table),
        },
        "config": asdict(config),
        "optimum": {
            "key": opt_key,
            "val_acc": opt_metrics.val_acc,
            "test_acc": opt_metrics.test_acc,
        },
        "version": __version__,
    }
    log = ExperimentLog(metadata=metadata, traces=traces)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_jsonl(log, str(out / "log.jsonl"))
    summary = summary_table(log, metric=args.metric)
    (out / "summary.csv").write_text(summary, encoding="utf-8")
    (out / "accuracy.csv").write_text(
        export_plot_csv(log, "accuracy_vs_iter", metric=args.metric), encoding="utf-8"
    )
    (out / "rank.csv").write_text(
        export_plot_csv(log, "rank_vs_iter"), encoding="utf-8"
    )

    print(summary, end="")
    for trace in traces:
        note = f" ({trace.note})" if trace.note else ""
        print(
            f"trial {trace.trial}: {trace.status.value}, "
            f"{len(trace.records)} records{note}",
            file=sys.stderr,
        )
    if all(t.status is TraceStatus.ADVISOR_FAILED for t in traces):
        return _fail(EXIT_ALL_FAILED, "all trials failed")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    table = _load_table(args.bench)
    if isinstance(table, int):
        return table
    try:
        result = random_baseline(
            table, k=args.k, repeats=args.repeats, seed=args.seed, metric=args.metric
        )
        exact = exact_best_of_k_expectation(table, args.k, metric=args.metric)
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    sem = result.std / math.sqrt(result.repeats)
    gap = abs(result.mean - exact)
    print(f"best-of-{args.k} over {len(table)} entries ({args.metric} accuracy)")
    print(
        f"empirical: mean {result.mean:.4f}  std {result.std:.4f}  "
        f"(r={result.repeats}, seed={result.seed})"
    )
    print(f"exact:     {exact:.4f}")
    print(f"gap:       {gap:.4f} (3*std/sqrt(r) = {3 * sem:.4f})")
    if args.check:
        if gap > 3 * sem:
            print("check: FAIL", file=sys.stderr)
            return 1
        print("check: OK")
    return EXIT_OK


def cmd_flops(args: argparse.Namespace) -> int:
    if args.key:
        key = args.key
    else:
        try:
            with open(args.arch_file, encoding="utf-8") as fh:
                lines = [ln.strip() for ln in fh if ln.strip()]
        except OSError as exc:
            return _fail(EXIT_BENCH, f"cannot read {args.arch_file}: {exc}")
        if not lines:
            return _fail(EXIT_CONFIG, f"{args.arch_file} holds no key")
        key = lines[0]
        try:
            obj = json.loads(key)
            if isinstance(obj, dict) and "key" in obj:
                key = str(obj["key"])
        except json.JSONDecodeError:
            pass

    space = mobilenet_v2_space()
    try:
        arch = parse_key(space, key)
    except KeyParseError as exc:
        return _fail(EXIT_CONFIG, f"bad architecture key: {exc}")

    plan = StagePlan(resolution=args.resolution)
    table = build_flops_table(space, plan)
    total = table.arch_flops(arch)
    print(f"resolution: {args.resolution}x{args.resolution}")
    print(f"fixed (stem+tail): {table.fixed / 1e6:.3f} M")
    for stage in range(len(plan.group_channels)):
        ops = sum(
            table.entries[(stage, slot, arch.choices[stage * MBV2_SLOTS + slot])]
            for slot in range(plan.blocks_per_group)
        )
        print(f"stage {stage}: {ops / 1e6:.3f} M")
    print(f"total: {total:.3f} M FLOPs")
    print(f"params: {total_params(space, arch, plan):.3f} M")
    if args.dump_table:
        print(json.dumps(table.to_json(), indent=2))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    table = _load_table(args.path)
    if isinstance(table, int):
        return table
    if args.action == "validate":
        print(f"OK {len(table)} entries")
        return EXIT_OK
    for metric in ("val", "test"):
        vals = [v for _, m in table.items() if (v := m.get(metric)) is not None]
        if not vals:
            print(f"{metric}_acc: none recorded")
            continue
        print(
            f"{metric}_acc: min {min(vals):.2f}  max {max(vals):.2f}  "
            f"mean {sum(vals) / len(vals):.4f}  ({len(vals)} entries)"
        )
    try:
        key, metrics = table.optimum("val")
        opt_val = metrics.val_acc
    except ValueError:
        key, metrics = table.optimum("test")
        opt_val = metrics.test_acc
    print(f"optimum: {key} ({opt_val:.2f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llmnas",
        description="Iterative architecture search over tabular benchmarks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run advisor-guided search trials")
    p.add_argument("--space", required=True, choices=sorted(SPACE_SELECTORS))
    p.add_argument("--bench", required=True, help="benchmark JSONL path")
    p.add_argument(
        "--advisor",
        required=True,
        choices=["openai", "random", "hillclimb", "replay"],
    )
    p.add_argument("--fixture", help="replay fixture: JSONL of {\"key\": ...} lines")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parse-retries", type=int, default=3)
    p.add_argument("--flops-limit-m", type=float, default=None)
    p.add_argument("--constraint-retries", type=int, default=5)
    p.add_argument("--resolution", type=int, default=None,
                   help="FLOPs model input resolution (default 224)")
    p.add_argument("--metric", choices=["val", "test"], default="val")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out", default="runs", help="output directory")
    p.add_argument("--base-url", default="https://api.openai.com/v1")
    p.add_argument("--model", default="gpt-4")
    p.add_argument("--truncate-turns", type=int, default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("baseline", help="random best-of-k baseline vs exact oracle")
    p.add_argument("--bench", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["val", "test"], default="val")
    p.add_argument("--check", action="store_true",
                   help="fail unless empirical mean is within 3*std/sqrt(r) of exact")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("flops", help="FLOPs of a mobilenet-v2 architecture")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--key", help="canonical architecture key")
    group.add_argument("--arch-file", help="file whose first line holds the key")
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.add_argument("--dump-table", action="store_true",
                   help="also print the per-slot look-up table as JSON")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("bench", help="validate or summarize a benchmark file")
    p.add_argument("action", choices=["validate", "stats"])
    p.add_argument("path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except LlmnasError as exc:
        return _fail(EXIT_BENCH, str(exc))


if __name__ == "__main__":
    sys.exit(main())
