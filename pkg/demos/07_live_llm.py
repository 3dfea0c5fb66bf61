"""
Live chat-advisor smoke test
============================

Drives one short search with a real chat endpoint. Costs money and is
nondeterministic, so it only runs when explicitly asked for:

    export GENIUS_API_KEY=sk-...
    LLMNAS_LIVE_DEMO=1 python3 demos/07_live_llm.py

Optionally set LLMNAS_BASE_URL / LLMNAS_MODEL for a compatible server.
Only protocol validity is checked (proposals parse and stay in the
space); accuracy is whatever the model manages.
"""

import os
import sys

from llmnas import (
    AdvisorSession,
    ChatAdvisor,
    ChatCompletionsClient,
    RunConfig,
    TraceStatus,
    macro_space,
    run_search,
    synth_benchmark,
)

if os.environ.get("LLMNAS_LIVE_DEMO") != "1" or not os.environ.get("GENIUS_API_KEY"):
    print("set LLMNAS_LIVE_DEMO=1 and GENIUS_API_KEY to run this demo")
    sys.exit(0)

space = macro_space()
table = synth_benchmark(space, seed=11)

client = ChatCompletionsClient(
    base_url=os.environ.get("LLMNAS_BASE_URL", "https://api.openai.com/v1"),
    model=os.environ.get("LLMNAS_MODEL", "gpt-4"),
)
session = AdvisorSession(space, ChatAdvisor(client), temperature=0.0)
trace = run_search(space, table, session, RunConfig(iterations=5))

print(f"status: {trace.status.value}")
for rec in trace.records:
    print(f"t={rec.t} key={rec.key} val={rec.val_acc:.2f} rank={rec.rank}")

assert trace.status is not TraceStatus.ADVISOR_FAILED, trace.note
assert all(rec.key for rec in trace.records)
print("protocol OK")
