"""
Searching under a FLOPs budget
==============================

With a budget active, every proposal is costed against the look-up
table before evaluation. An over-budget model is bounced back to the
advisor with the measured figure; only compliant models are recorded.
"""

from llmnas import (
    AdvisorSession,
    FunctionEvaluator,
    Metrics,
    ReplayAdvisor,
    RunConfig,
    build_flops_table,
    mobilenet_v2_space,
    run_search,
)

space = mobilenet_v2_space()
table = build_flops_table(space)

BIG = (
    "mb3e4,mb3e4,mb3e4,mb3e4,skip,skip"
    "|mb3e4,mb3e4,mb3e4,mb3e4,skip,skip"
    "|mb3e6,mb3e6,mb3e6,mb3e6,skip,skip"
    "|mb3e6,mb5e6,mb5e6,mb5e6,skip,skip"
    "|mb7e6,mb5e6,mb7e6,mb5e6,skip,skip"
)
SMALL = (
    "mb3e4,mb3e4,skip,skip,skip,skip"
    "|mb3e4,mb3e4,mb3e4,mb3e4,skip,skip"
    "|mb3e6,mb3e6,mb7e4,skip,skip,skip"
    "|mb3e6,mb7e4,mb3e6,mb3e6,skip,skip"
    "|mb5e6,mb5e6,mb5e6,mb5e6,skip,skip"
)

# There is no full table for this space (7^30 architectures), so the
# evaluator here is a stand-in function. Anything keyed works.
evaluator = FunctionEvaluator(lambda key: Metrics(val_acc=70.0 + len(key) % 7))

session = AdvisorSession(space, ReplayAdvisor([BIG, SMALL]))
config = RunConfig(iterations=5, flops_limit_m=400.0, max_constraint_retries=5)
trace = run_search(space, evaluator, session, config)

print(f"status: {trace.status.value}")
for rec in trace.records:
    print(f"t={rec.t} flops={rec.flops_m:.1f}M "
          f"constraint_retries={rec.constraint_retries} ok={rec.ok}")

# The violation turn the advisor saw, verbatim:
for msg in session.messages:
    if msg["role"] == "user" and "exceeds" in msg["content"]:
        print("\n" + msg["content"])
        break
