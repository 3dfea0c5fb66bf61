"""Immutable tabular benchmarks: JSONL load/save, ranking, synthesis.

File format (one JSON object per line):

    {"space": "macro", "provenance": "...", "count": 6561}
    {"key": "00000000", "val_acc": 85.7, "test_acc": null,
     "flops_m": 12.3, "params_m": 0.9}
    ...

The header's ``count`` must match the number of entry lines. Channel
tables carry an extra ``base_model`` header field, and their width
options are recovered from the keys themselves when no explicit space
is supplied.
"""

from __future__ import annotations

import hashlib
import json
import random
from bisect import bisect_right
from dataclasses import dataclass

from .errors import DuplicateKey, FormatError, KeyParseError, UnknownArchitecture
from .space import (
    CHANNEL_WIDTHS_PER_LAYER,
    Architecture,
    SearchSpace,
    SpaceKind,
    canonical_key,
    space_cardinality,
    cell_space,
    channel_space,
    enumerate_space,
    macro_space,
    mobilenet_v2_space,
    parse_key,
)

_METRIC_FIELDS = {
    "val": "val_acc",
    "test": "test_acc",
    "flops": "flops_m",
    "params": "params_m",
}


@dataclass(frozen=True)
class Metrics:
    val_acc: float | None = None
    test_acc: float | None = None
    flops_m: float | None = None
    params_m: float | None = None

    def get(self, metric: str) -> float | None:
        try:
            return getattr(self, _METRIC_FIELDS[metric])
        except KeyError:
            raise ValueError(f"unknown metric {metric!r}") from None


class BenchmarkTable:
    """Read-only mapping from canonical keys to recorded metrics."""

    def __init__(self, space: SearchSpace, provenance: str, entries: dict[str, Metrics]):
        self.space = space
        self.provenance = provenance
        self._entries = dict(entries)
        self._sorted_cache: dict[str, list[float]] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def keys(self):
        return self._entries.keys()

    def items(self):
        return self._entries.items()

    def lookup(self, key: str) -> Metrics:
        try:
            return self._entries[key]
        except KeyError:
            raise UnknownArchitecture(key) from None

    def _sorted_values(self, metric: str) -> list[float]:
        if metric not in self._sorted_cache:
            vals = sorted(
                v for m in self._entries.values() if (v := m.get(metric)) is not None
            )
            self._sorted_cache[metric] = vals
        return self._sorted_cache[metric]

    def rank_of(self, value: float, metric: str = "val") -> int:
        """1 + number of entries whose metric strictly exceeds value.

        Tied entries share the best rank of the tie group.
        """
        vals = self._sorted_values(metric)
        if not vals:
            raise ValueError(f"no entries record metric {metric!r}")
        return 1 + len(vals) - bisect_right(vals, value)

    def optimum(self, metric: str = "val") -> tuple[str, Metrics]:
        """Best entry by the metric; ties go to the smallest key."""
        best_key = None
        best_val = None
        for key, m in self._entries.items():
            v = m.get(metric)
            if v is None:
                continue
            if (
                best_val is None
                or v > best_val
                or (v == best_val and key < best_key)
            ):
                best_key, best_val = key, v
        if best_key is None:
            raise ValueError(f"no entries record metric {metric!r}")
        return best_key, self._entries[best_key]


def _check_metric(obj: dict, field: str, line: int) -> float | None:
    v = obj.get(field)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"{field} must be a number or null", line)
    v = float(v)
    if field.endswith("_acc") and not 0.0 <= v <= 100.0:
        raise FormatError(f"{field} out of range [0, 100]: {v}", line)
    if field.endswith("_m") and v <= 0:
        raise FormatError(f"{field} must be positive: {v}", line)
    return v


def _read_lines(path: str) -> list[tuple[int, dict]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped:
                raise FormatError("blank line", n)
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise FormatError(f"not valid JSON ({exc.msg})", n) from None
            if not isinstance(obj, dict):
                raise FormatError("line is not a JSON object", n)
            rows.append((n, obj))
    return rows


def _space_from_header(header: dict, rows: list[tuple[int, dict]]) -> SearchSpace:
    kind = header.get("space")
    if kind == SpaceKind.MACRO.value:
        return macro_space()
    if kind == SpaceKind.CELL.value:
        return cell_space()
    if kind == SpaceKind.MOBILENET_V2.value:
        return mobilenet_v2_space()
    if kind == SpaceKind.CHANNEL.value:
        base = header.get("base_model")
        if not base:
            raise FormatError("channel header missing base_model", 1)
        if not rows:
            raise FormatError("cannot derive channel widths from an empty table", 1)
        per_layer: list[set[int]] = []
        for n, obj in rows:
            tokens = str(obj.get("key", "")).split(",")
            if not per_layer:
                per_layer = [set() for _ in tokens]
            if len(tokens) != len(per_layer):
                raise FormatError("inconsistent width count in key", n)
            for i, tok in enumerate(tokens):
                try:
                    per_layer[i].add(int(tok))
                except ValueError:
                    raise FormatError(f"bad width {tok!r} in key", n) from None
        for i, widths in enumerate(per_layer):
            if len(widths) != CHANNEL_WIDTHS_PER_LAYER:
                raise FormatError(
                    f"layer {i} offers {len(widths)} widths, "
                    f"expected {CHANNEL_WIDTHS_PER_LAYER}",
                    1,
                )
        return channel_space([sorted(w) for w in per_layer], base)
    raise FormatError(f"unknown space {kind!r}", 1)


def load_benchmark(path: str, space: SearchSpace | None = None) -> BenchmarkTable:
    """Load a benchmark table, validating every line before returning.

    Any violation (bad JSON, bad key, duplicate key, metric out of
    range, count mismatch) raises with the offending line number and
    nothing is returned.
    """
    rows = _read_lines(path)
    if not rows:
        raise FormatError("empty file: missing header", 1)
    header_line, header = rows[0]
    entry_rows = rows[1:]
    for field in ("space", "provenance", "count"):
        if field not in header:
            raise FormatError(f"header missing {field!r}", header_line)
    if space is None:
        space = _space_from_header(header, entry_rows)
    count = header["count"]
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise FormatError("count must be a non-negative integer", header_line)
    if count != len(entry_rows):
        raise FormatError(
            f"header count {count} != {len(entry_rows)} entry lines", header_line
        )
    entries: dict[str, Metrics] = {}
    for n, obj in entry_rows:
        key = obj.get("key")
        if not isinstance(key, str):
            raise FormatError("entry missing string 'key'", n)
        try:
            parse_key(space, key)
        except KeyParseError as exc:
            raise FormatError(f"bad key {key!r}: {exc}", n) from None
        if key in entries:
            raise DuplicateKey(f"duplicate key {key!r}", n)
        if len(entries) >= space_cardinality(space):
            raise FormatError(
                f"more entries than the space holds ({space_cardinality(space)})", n
            )
        m = Metrics(
            val_acc=_check_metric(obj, "val_acc", n),
            test_acc=_check_metric(obj, "test_acc", n),
            flops_m=_check_metric(obj, "flops_m", n),
            params_m=_check_metric(obj, "params_m", n),
        )
        if m.val_acc is None and m.test_acc is None:
            raise FormatError("entry records neither val_acc nor test_acc", n)
        entries[key] = m
    return BenchmarkTable(space, str(header["provenance"]), entries)


def save_benchmark(table: BenchmarkTable, path: str) -> None:
    """Write a table back to JSONL, preserving entry order."""
    header: dict = {
        "space": table.space.kind.value,
        "provenance": table.provenance,
        "count": len(table),
    }
    if table.space.kind is SpaceKind.CHANNEL:
        header["base_model"] = table.space.base_model
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for key, m in table.items():
            fh.write(
                json.dumps(
                    {
                        "key": key,
                        "val_acc": m.val_acc,
                        "test_acc": m.test_acc,
                        "flops_m": m.flops_m,
                        "params_m": m.params_m,
                    }
                )
                + "\n"
            )


def _unit_hash(seed: int, tag: str, key: str) -> float:
    """Deterministic float in [0, 1) from (seed, tag, key)."""
    digest = hashlib.blake2b(
        f"{seed}:{tag}:{key}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2**64


@dataclass(frozen=True)
class SynthModel:
    """Recomputable ground truth behind a synthetic benchmark.

    val accuracy = base + per-position bonus of each chosen candidate
    + a small key-hashed noise term; test accuracy sits test_gap below
    with its own noise. Defaults keep every value inside [0, 100], so
    the clamp never bites and the bonus-maximizing architecture is the
    table optimum. ``from_seed`` rebuilds the exact model used by
    ``synth_benchmark``, so tests can recover the true optimum.
    """

    seed: int
    base: float
    bonuses: tuple[tuple[float, ...], ...]
    noise_scale: float
    test_gap: float

    @classmethod
    def from_seed(
        cls,
        space: SearchSpace,
        seed: int,
        base: float = 85.0,
        bonus_scale: float = 1.0,
        noise_scale: float = 0.05,
        test_gap: float = 0.5,
    ) -> "SynthModel":
        rng = random.Random(seed)
        bonuses = tuple(
            tuple(rng.uniform(0.0, bonus_scale) for _ in pos.choices)
            for pos in space.positions
        )
        return cls(seed, base, bonuses, noise_scale, test_gap)

    def metrics(self, space: SearchSpace, arch: Architecture) -> Metrics:
        key = canonical_key(space, arch)
        bonus = sum(self.bonuses[i][c] for i, c in enumerate(arch.choices))
        val = self.base + bonus
        val += (2 * _unit_hash(self.seed, "val", key) - 1) * self.noise_scale
        test = val - self.test_gap
        test += (2 * _unit_hash(self.seed, "test", key) - 1) * self.noise_scale
        flops = 20.0 + 100.0 * _unit_hash(self.seed, "flops", key)
        return Metrics(
            val_acc=min(100.0, max(0.0, val)),
            test_acc=min(100.0, max(0.0, test)),
            flops_m=flops,
            params_m=flops / 15.0,
        )

    def optimum_arch(self, space: SearchSpace) -> Architecture:
        """Brute-force argmax of val accuracy over the whole space."""
        best = None
        best_val = None
        for arch in enumerate_space(space):
            v = self.metrics(space, arch).val_acc
            if best_val is None or v > best_val:
                best, best_val = arch, v
        return best


def synth_benchmark(
    space: SearchSpace,
    seed: int,
    model: SynthModel | None = None,
    provenance: str | None = None,
) -> BenchmarkTable:
    """Generate a fully enumerated synthetic benchmark.

    Byte-identical for a given (space, seed, model). Only works for
    spaces small enough to enumerate. ``model`` defaults to
    SynthModel.from_seed(space, seed).
    """
    if model is None:
        model = SynthModel.from_seed(space, seed)
    entries = {}
    for arch in enumerate_space(space):
        entries[canonical_key(space, arch)] = model.metrics(space, arch)
    if provenance is None:
        provenance = f"synthetic seed={seed} n={space_cardinality(space)}"
    return BenchmarkTable(space, provenance, entries)
