"""Search orchestration: the advisor loop, trials, and baselines.

One trial is a budgeted conversation: the first prompt states the
problem, each later prompt feeds back the measured accuracy of the
previous proposal. Proposals that cannot be evaluated (over-budget,
unknown to the table) consume their iteration slot and are recorded as
failures; the trial keeps going. A declination ends the trial early.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Protocol

import numpy as np

from .advisor import (
    AdvisorSession,
    ArchProposal,
    HistoryRecord,
    NoImprovement,
    encode_problem,
    feedback_prompt,
    flops_violation_prompt,
    reply_digest,
    retry_feedback_prompt,
)
from .bench import BenchmarkTable, Metrics
from .errors import (
    AdvisorFailed,
    ConstraintUnsatisfied,
    EmptyTrace,
    TransportError,
    UnknownArchitecture,
)
from .flops import DEFAULT_PLAN, FlopsTable, StagePlan, build_flops_table
from .space import Architecture, SearchSpace, SpaceKind, canonical_key


class Evaluator(Protocol):
    def evaluate(self, key: str) -> Metrics: ...

    def rank_of(self, value: float, metric: str) -> int | None: ...


class TableEvaluator:
    def __init__(self, table: BenchmarkTable):
        self.table = table

    def evaluate(self, key: str) -> Metrics:
        return self.table.lookup(key)

    def rank_of(self, value: float, metric: str) -> int | None:
        return self.table.rank_of(value, metric)


class FunctionEvaluator:
    """Wraps a key -> Metrics function; provides no ranking."""

    def __init__(self, fn: Callable[[str], Metrics]):
        self._fn = fn

    def evaluate(self, key: str) -> Metrics:
        return self._fn(key)

    def rank_of(self, value: float, metric: str) -> int | None:
        return None


def _as_evaluator(evaluator) -> Evaluator:
    if isinstance(evaluator, BenchmarkTable):
        return TableEvaluator(evaluator)
    return evaluator


@dataclass(frozen=True)
class RunConfig:
    iterations: int = 10
    temperature: float = 0.0
    trials: int = 1
    seed: int = 0
    parse_retries: int = 3
    flops_limit_m: float | None = None
    max_constraint_retries: int = 5
    flops_resolution: int | None = None
    feedback_metric: str = "val"
    parallel: int = 1
    # Informational proxy-evaluation tags carried into run metadata;
    # nothing is trained here.
    proxy_epochs: int = 20
    proxy_input_size: int = 196

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.max_constraint_retries < 0:
            raise ValueError("max_constraint_retries must be >= 0")


class TraceStatus(str, Enum):
    COMPLETED = "completed"
    NO_IMPROVEMENT = "no_improvement_declared"
    ADVISOR_FAILED = "advisor_failed"


@dataclass(frozen=True)
class IterationRecord:
    t: int
    key: str | None
    val_acc: float | None = None
    test_acc: float | None = None
    rank: int | None = None
    flops_m: float | None = None
    duplicate: bool = False
    constraint_retries: int = 0
    digest: str = ""
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class Trace:
    trial: int
    status: TraceStatus
    records: list[IterationRecord] = field(default_factory=list)
    note: str | None = None


def record_value(rec: IterationRecord, metric: str) -> float | None:
    if metric == "val":
        return rec.val_acc
    if metric == "test":
        return rec.test_acc
    raise ValueError(f"unknown metric {metric!r}")


def _feedback_value(m: Metrics, preferred: str) -> tuple[float, str]:
    v = m.get(preferred)
    if v is not None:
        return v, preferred
    other = "test" if preferred == "val" else "val"
    v = m.get(other)
    if v is None:
        raise ValueError("entry records no accuracy to feed back")
    return v, other


def enforce_flops(
    session: AdvisorSession,
    proposal: ArchProposal,
    raw: str,
    table: FlopsTable,
    limit_m: float,
    max_retries: int,
) -> tuple[Architecture, float, int, str]:
    """Re-ask until the proposal fits the FLOPs budget.

    Returns (architecture, flops_m, retries_used, raw_reply) and never
    returns an over-budget architecture; after ``max_retries``
    re-proposals it raises ConstraintUnsatisfied. The violation
    feedback quotes the measured and allowed FLOPs.
    """
    current = proposal
    for attempt in range(max_retries + 1):
        flops_m = table.arch_flops(current.architecture)
        if flops_m <= limit_m:
            return current.architecture, flops_m, attempt, raw
        if attempt == max_retries:
            raise ConstraintUnsatisfied(flops_m, limit_m, attempt + 1)
        prop, raw = session.propose(flops_violation_prompt(flops_m, limit_m))
        if isinstance(prop, NoImprovement):
            raise ConstraintUnsatisfied(flops_m, limit_m, attempt + 1)
        current = prop
    raise AssertionError("unreachable")


def run_search(
    space: SearchSpace,
    evaluator,
    session: AdvisorSession,
    config: RunConfig,
    trial: int = 0,
    plan: StagePlan = DEFAULT_PLAN,
) -> Trace:
    """Run one trial of at most ``config.iterations`` proposals."""
    evaluator = _as_evaluator(evaluator)
    flops_table = None
    want_flops = space.kind is SpaceKind.MOBILENET_V2
    if want_flops:
        flops_table = build_flops_table(space, plan, config.flops_resolution)
    trace = Trace(trial=trial, status=TraceStatus.COMPLETED)
    seen: set[str] = set()
    prompt = encode_problem(
        space,
        config.flops_limit_m,
        flops_table if config.flops_limit_m is not None else None,
    )
    for t in range(config.iterations):
        try:
            prop, raw = session.propose(prompt)
        except (AdvisorFailed, TransportError) as exc:
            trace.status = TraceStatus.ADVISOR_FAILED
            trace.note = str(exc)
            return trace
        if isinstance(prop, NoImprovement):
            trace.status = TraceStatus.NO_IMPROVEMENT
            return trace

        flops_m = None
        retries = 0
        arch = prop.architecture
        if config.flops_limit_m is not None:
            try:
                arch, flops_m, retries, raw = enforce_flops(
                    session, prop, raw, flops_table,
                    config.flops_limit_m, config.max_constraint_retries,
                )
            except ConstraintUnsatisfied as exc:
                trace.records.append(
                    IterationRecord(
                        t=t,
                        key=canonical_key(space, prop.architecture),
                        flops_m=exc.flops_m,
                        constraint_retries=exc.attempts - 1,
                        digest=reply_digest(raw),
                        error="constraint_unsatisfied",
                    )
                )
                prompt = retry_feedback_prompt(str(exc))
                continue
            except (AdvisorFailed, TransportError) as exc:
                trace.status = TraceStatus.ADVISOR_FAILED
                trace.note = str(exc)
                return trace
        elif want_flops:
            flops_m = flops_table.arch_flops(arch)

        key = canonical_key(space, arch)
        try:
            metrics = evaluator.evaluate(key)
        except UnknownArchitecture:
            trace.records.append(
                IterationRecord(
                    t=t,
                    key=key,
                    flops_m=flops_m,
                    constraint_retries=retries,
                    digest=reply_digest(raw),
                    error="unknown_architecture",
                )
            )
            prompt = retry_feedback_prompt(f"architecture {key} is not in the table")
            continue

        accuracy, used_metric = _feedback_value(metrics, config.feedback_metric)
        rank = evaluator.rank_of(accuracy, used_metric)
        duplicate = key in seen
        seen.add(key)
        session.history.add(
            HistoryRecord(
                iteration=t, architecture=arch, accuracy=accuracy, flops_m=flops_m
            )
        )
        trace.records.append(
            IterationRecord(
                t=t,
                key=key,
                val_acc=metrics.val_acc,
                test_acc=metrics.test_acc,
                rank=rank,
                flops_m=flops_m,
                duplicate=duplicate,
                constraint_retries=retries,
                digest=reply_digest(raw),
            )
        )
        prompt = feedback_prompt(accuracy)
    return trace


def run_trials(
    space: SearchSpace,
    evaluator,
    advisor_factory: Callable[[int, int], object],
    config: RunConfig,
    plan: StagePlan = DEFAULT_PLAN,
) -> list[Trace]:
    """Run ``config.trials`` independent trials.

    ``advisor_factory(trial_index, derived_seed)`` builds a fresh
    backend per trial; the derived seed is ``config.seed + trial``.
    Trials run in threads when ``config.parallel`` > 1; one trial
    crashing does not stop the others.
    """

    def one(i: int) -> Trace:
        backend = advisor_factory(i, config.seed + i)
        session = AdvisorSession(
            space,
            backend,
            temperature=config.temperature,
            flops_limit_m=config.flops_limit_m,
            parse_retries=config.parse_retries,
        )
        try:
            return run_search(space, evaluator, session, config, trial=i, plan=plan)
        except Exception as exc:  # noqa: BLE001 - trial isolation
            return Trace(
                trial=i,
                status=TraceStatus.ADVISOR_FAILED,
                note=f"trial crashed: {exc}",
            )

    indices = range(config.trials)
    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            return list(pool.map(one, indices))
    return [one(i) for i in indices]


def best_of_trace(trace: Trace, metric: str = "val") -> IterationRecord:
    """Best successful record by the metric; earliest iteration on ties."""
    best = None
    best_v = None
    for rec in trace.records:
        if rec.error is not None:
            continue
        v = record_value(rec, metric)
        if v is None:
            continue
        if best_v is None or v > best_v:
            best, best_v = rec, v
    if best is None:
        raise EmptyTrace(f"trial {trace.trial} has no evaluated iterations")
    return best


@dataclass(frozen=True)
class BaselineResult:
    k: int
    repeats: int
    seed: int
    metric: str
    mean: float
    std: float
    bests: tuple[float, ...]


def random_baseline(
    table: BenchmarkTable,
    k: int,
    repeats: int,
    seed: int,
    metric: str = "val",
) -> BaselineResult:
    """Empirical best-of-k: draw k entries with replacement, keep the
    max, repeat. Deterministic for a given seed."""
    if k < 1 or repeats < 1:
        raise ValueError("k and repeats must be >= 1")
    values = np.array(
        [v for _, m in table.items() if (v := m.get(metric)) is not None],
        dtype=float,
    )
    if values.size == 0:
        raise ValueError(f"no entries record metric {metric!r}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(repeats, k))
    bests = values[idx].max(axis=1)
    std = float(bests.std(ddof=1)) if repeats > 1 else 0.0
    return BaselineResult(
        k=k,
        repeats=repeats,
        seed=seed,
        metric=metric,
        mean=float(bests.mean()),
        std=std,
        bests=tuple(float(b) for b in bests),
    )


def exact_best_of_k_expectation(
    table: BenchmarkTable, k: int, metric: str = "val"
) -> float:
    """Exact E[max of k uniform draws with replacement].

    With the n values sorted ascending and c_j the cumulative count up
    to the j-th distinct value a_j:

        E = sum_j a_j * (c_j^k - c_{j-1}^k) / n^k

    accumulated in exact rational arithmetic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = sorted(
        v for _, m in table.items() if (v := m.get(metric)) is not None
    )
    if not vals:
        raise ValueError(f"no entries record metric {metric!r}")
    n = len(vals)
    total = Fraction(0)
    cum = 0
    prev_pow = 0
    for value, group in itertools.groupby(vals):
        cum += sum(1 for _ in group)
        cum_pow = cum**k
        total += Fraction(value) * (cum_pow - prev_pow)
        prev_pow = cum_pow
    return float(total / Fraction(n) ** k)
