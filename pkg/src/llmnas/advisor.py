"""Advisors: prompt construction, reply parsing, and backends.

A session keeps the full chat transcript and the history of evaluated
architectures. Backends only need to turn a transcript into a reply
string; everything else (prompt templates, JSON extraction, validation,
parse retries) lives here so that a live chat endpoint and the
deterministic mocks behave identically.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import requests

from .errors import (
    AdvisorFailed,
    InvalidArchitecture,
    ParseError,
    TransportError,
)
from .flops import FlopsTable
from .space import (
    Architecture,
    SearchSpace,
    SpaceKind,
    mutate,
    parse_key,
    random_arch,
    validate,
)

log = logging.getLogger(__name__)

API_KEY_ENV = "GENIUS_API_KEY"

# Sent after every evaluation, verbatim apart from the accuracy value.
FEEDBACK_TEMPLATE = (
    "By using this model, we achieved an accuracy of {accuracy}%. Please "
    "recommend a new model that outperforms prior architectures based on "
    "the abovementioned experiments. Also, Please provide a rationale "
    "explaining why the suggested model surpasses all previous "
    "architectures."
)

_DECLINE_PHRASES = (
    "no_improvement",
    "no improvement",
    "cannot improve",
    "can't improve",
    "no better architecture",
    "unable to suggest a better",
    "no further improvement",
)


def feedback_prompt(accuracy: float) -> str:
    """Evaluation feedback message, accuracy rendered to 2 decimals."""
    if not 0.0 <= accuracy <= 100.0:
        raise ValueError(f"accuracy out of range [0, 100]: {accuracy}")
    return FEEDBACK_TEMPLATE.format(accuracy=f"{accuracy:.2f}")


def flops_violation_prompt(flops_m: float, limit_m: float) -> str:
    """Constraint feedback; only meaningful when the limit is exceeded."""
    if flops_m <= limit_m:
        raise ValueError(f"{flops_m}M does not exceed {limit_m}M")
    return (
        f"The proposed model uses {flops_m:.1f}M FLOPs, which exceeds the "
        f"limit of {limit_m:.1f}M FLOPs. Please recommend a new model that "
        f"fits within the FLOPs limit while keeping accuracy as high as "
        f"possible."
    )


def corrective_prompt(reason: str) -> str:
    reason = reason.strip().splitlines()[0] if reason.strip() else "unparseable reply"
    return (
        f"Your last reply was not valid: {reason}. Respond with only the "
        f"JSON object in the requested format."
    )


def retry_feedback_prompt(reason: str) -> str:
    """Sent after a proposal that could not be evaluated."""
    return (
        f"The previous proposal could not be evaluated ({reason}). Please "
        f"propose a different architecture from the search space, using "
        f"the same JSON format."
    )


def _position_lines(space: SearchSpace) -> list[str]:
    lines: list[str] = []
    if space.kind in (SpaceKind.MACRO, SpaceKind.CELL):
        names = ", ".join(
            f"{i}={c.name}" for i, c in enumerate(space.positions[0].choices)
        )
        lines.append(
            f"Each of the {len(space.positions)} positions picks one "
            f"operation index: {names}."
        )
        for pos in space.positions:
            lines.append(f"- {pos.label}")
    elif space.kind is SpaceKind.CHANNEL:
        lines.append(
            f"Each of the {len(space.positions)} layers picks one output "
            f"width, given as the index into that layer's option list:"
        )
        for pos in space.positions:
            widths = ", ".join(f"{i}={c.width}" for i, c in enumerate(pos.choices))
            lines.append(f"- {pos.label}: {widths}")
        lines.append(f"The backbone is a {space.base_model} network.")
    else:
        names = ", ".join(
            f"{i}={c.name}" for i, c in enumerate(space.positions[0].choices)
        )
        lines.append(
            "The network has 5 stages of 6 block slots each, listed stage "
            "by stage (30 positions total). Each slot picks one index: "
            f"{names}."
        )
        lines.append(
            "Within a stage, every skip must come after all active blocks; "
            "use skip entries only at the end of a stage."
        )
    return lines


def encode_problem(
    space: SearchSpace,
    flops_limit_m: float | None = None,
    flops_table: FlopsTable | None = None,
) -> str:
    """Initial problem statement: space description, objective, and the
    required reply format. Deterministic for fixed inputs."""
    lines = [
        "You are helping with a neural architecture search over the "
        f"'{space.name}' search space.",
        "",
    ]
    lines.extend(_position_lines(space))
    lines.append("")
    lines.append(
        "Objective: find the architecture with the highest validation "
        "accuracy. After each suggestion you will receive the measured "
        "accuracy as feedback."
    )
    if flops_limit_m is not None:
        lines.append("")
        lines.append(
            f"Hard constraint: the model must use at most {flops_limit_m:g}M "
            f"FLOPs."
        )
        if flops_table is not None:
            lines.append(
                "Per-slot FLOPs look-up table (add 'fixed' to the sum of "
                "one entry per slot):"
            )
            lines.append(json.dumps(flops_table.to_json(), separators=(",", ":")))
    lines.append("")
    lines.append(
        'Reply with exactly one fenced JSON block of the form '
        '{"arch": [i0, i1, ...], "rationale": "..."} giving one index per '
        "position, in order. If you cannot suggest anything better than "
        'what was already tried, reply {"no_improvement": true} instead.'
    )
    return "\n".join(lines)


_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ArchProposal:
    architecture: Architecture
    rationale: str


@dataclass(frozen=True)
class NoImprovement:
    text: str


Proposal = ArchProposal | NoImprovement


def _extract_json(text: str) -> dict | None:
    for block in reversed(_FENCE_RE.findall(text)):
        try:
            obj = json.loads(block.strip())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    try:
        obj = json.loads(text.strip())
    except json.JSONDecodeError:
        return None
    return obj if isinstance(obj, dict) else None


def parse_proposal(space: SearchSpace, text: str) -> Proposal:
    """Interpret a raw advisor reply.

    Takes the last well-formed fenced JSON block (or the whole reply as
    bare JSON). A reply that declines in prose rather than JSON is
    accepted as NoImprovement and logged. Invalid architectures are
    never repaired.
    """
    obj = _extract_json(text)
    if obj is None:
        lowered = text.lower()
        if any(phrase in lowered for phrase in _DECLINE_PHRASES):
            log.info("treating non-JSON reply as a declination")
            return NoImprovement(text)
        raise ParseError("no JSON object found in reply", raw=text)
    if obj.get("no_improvement") is True:
        return NoImprovement(text)
    if "arch" not in obj:
        raise ParseError("reply JSON has neither 'arch' nor 'no_improvement'", raw=text)
    arch_field = obj["arch"]
    if not isinstance(arch_field, list):
        raise ParseError("'arch' must be a list of indices", raw=text)
    choices = []
    for v in arch_field:
        if isinstance(v, bool):
            raise ParseError(f"'arch' entry {v!r} is not an index", raw=text)
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if not isinstance(v, int):
            raise ParseError(f"'arch' entry {v!r} is not an index", raw=text)
        choices.append(v)
    arch = Architecture(space.kind, tuple(choices))
    problems = validate(space, arch)
    if problems:
        raise InvalidArchitecture(problems, raw=text)
    return ArchProposal(arch, str(obj.get("rationale", "")))


def reply_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    architecture: Architecture
    accuracy: float
    flops_m: float | None = None
    violation: bool = False


class History:
    """Evaluated architectures in iteration order."""

    def __init__(self):
        self._records: list[HistoryRecord] = []

    def add(self, record: HistoryRecord) -> None:
        if self._records and record.iteration <= self._records[-1].iteration:
            raise ValueError(
                f"iteration {record.iteration} not after "
                f"{self._records[-1].iteration}"
            )
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def best(self) -> HistoryRecord | None:
        """Highest accuracy; earliest iteration wins ties."""
        best = None
        for rec in self._records:
            if best is None or rec.accuracy > best.accuracy:
                best = rec
        return best


class Advisor(Protocol):
    name: str

    def reply(self, session: "AdvisorSession") -> str: ...


@dataclass
class AdvisorSession:
    """One conversation with an advisor.

    ``propose`` appends the prompt, queries the backend, and parses the
    reply; malformed replies are retried with a corrective message, up
    to ``parse_retries`` extra attempts, after which AdvisorFailed is
    raised. The transcript is append-only.
    """

    space: SearchSpace
    backend: Advisor
    temperature: float = 0.0
    flops_limit_m: float | None = None
    parse_retries: int = 3
    messages: list[dict[str, str]] = field(default_factory=list)
    history: History = field(default_factory=History)

    def propose(self, prompt: str) -> tuple[Proposal, str]:
        self.messages.append({"role": "user", "content": prompt})
        attempts = 0
        while True:
            raw = self.backend.reply(self)
            self.messages.append({"role": "assistant", "content": raw})
            try:
                return parse_proposal(self.space, raw), raw
            except (ParseError, InvalidArchitecture) as exc:
                attempts += 1
                if attempts > self.parse_retries:
                    raise AdvisorFailed(
                        f"gave up after {attempts} malformed replies: {exc}"
                    ) from exc
                self.messages.append(
                    {"role": "user", "content": corrective_prompt(str(exc))}
                )


def proposal_text(arch: Architecture, rationale: str) -> str:
    """Render a proposal the way the parser expects replies."""
    body = json.dumps({"arch": list(arch.choices), "rationale": rationale})
    return f"```json\n{body}\n```"


NO_IMPROVEMENT_TEXT = json.dumps({"no_improvement": True})


class RandomAdvisor:
    """Proposes uniform random architectures; ignores all feedback."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def reply(self, session: AdvisorSession) -> str:
        arch = random_arch(session.space, self._rng)
        return proposal_text(arch, "uniform random draw")


class HillClimbAdvisor:
    """Proposes a one-candidate edit of the best architecture so far."""

    name = "hillclimb"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def reply(self, session: AdvisorSession) -> str:
        best = session.history.best()
        if best is None:
            arch = random_arch(session.space, self._rng)
            return proposal_text(arch, "random starting point")
        arch = mutate(session.space, best.architecture, self._rng)
        return proposal_text(
            arch, "single-candidate edit of the best architecture so far"
        )


class ReplayAdvisor:
    """Replays a fixed sequence of canonical keys, then declines.

    Ignores temperature and the transcript entirely, which makes it the
    backend of choice for reproducing a recorded run.
    """

    name = "replay"

    def __init__(self, keys: Sequence[str]):
        self._keys = list(keys)
        self._next = 0

    def reply(self, session: AdvisorSession) -> str:
        if self._next >= len(self._keys):
            return NO_IMPROVEMENT_TEXT
        arch = parse_key(session.space, self._keys[self._next])
        self._next += 1
        return proposal_text(arch, f"replayed step {self._next}")


class ScriptedAdvisor:
    """Returns pre-baked reply strings in order; raises when exhausted."""

    name = "scripted"

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self._next = 0

    def reply(self, session: AdvisorSession) -> str:
        if self._next >= len(self._replies):
            raise TransportError("scripted replies exhausted")
        text = self._replies[self._next]
        self._next += 1
        return text


@dataclass
class ChatCompletionsClient:
    """Minimal client for an OpenAI-compatible chat-completions server.

    POSTs {model, messages, temperature} to {base_url}/chat/completions
    and returns choices[0].message.content. Connection failures and
    5xx/429 responses are retried with exponential backoff; other
    failures raise TransportError immediately.
    """

    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4"
    api_key: str | None = None
    timeout: float = 120.0
    max_retries: int = 3
    backoff: float = 1.0
    transport: Callable[..., tuple[int, dict]] | None = None

    def _resolve_key(self) -> str:
        key = self.api_key or os.environ.get(API_KEY_ENV)
        if not key:
            raise TransportError(f"no API key: set {API_KEY_ENV} or pass api_key")
        return key

    def _post(self, url: str, headers: dict, payload: dict) -> tuple[int, dict]:
        if self.transport is not None:
            return self.transport(url, headers, payload, self.timeout)
        resp = requests.post(url, headers=headers, json=payload, timeout=self.timeout)
        try:
            body = resp.json()
        except ValueError:
            body = {}
        return resp.status_code, body

    def complete(self, messages: list[dict[str, str]], temperature: float) -> str:
        url = self.base_url.rstrip("/") + "/chat/completions"
        headers = {
            "Authorization": f"Bearer {self._resolve_key()}",
            "Content-Type": "application/json",
        }
        payload = {
            "model": self.model,
            "messages": messages,
            "temperature": temperature,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                status, body = self._post(url, headers, payload)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if status in (429,) or status >= 500:
                last_error = TransportError(f"HTTP {status}")
                continue
            if status != 200:
                raise TransportError(f"HTTP {status}: {body}")
            try:
                return body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                raise TransportError(f"malformed response body: {body}") from None
        raise TransportError(
            f"request failed after {self.max_retries + 1} attempts: {last_error}"
        )


class ChatAdvisor:
    """Backend that forwards the session transcript to a chat endpoint.

    ``truncate_turns`` optionally caps the transcript at the problem
    statement plus the last N messages; off by default.
    """

    name = "openai"

    def __init__(self, client: ChatCompletionsClient, truncate_turns: int | None = None):
        self.client = client
        self.truncate_turns = truncate_turns

    def reply(self, session: AdvisorSession) -> str:
        msgs = session.messages
        if self.truncate_turns is not None and len(msgs) > 1 + self.truncate_turns:
            msgs = [msgs[0]] + msgs[-self.truncate_turns :]
        return self.client.complete(msgs, session.temperature)
