"""
The advisor loop, end to end
============================

One trial is a conversation: the first message states the problem, the
advisor answers with a JSON proposal, we evaluate it on the table and
feed the accuracy back, and so on for a fixed number of iterations or
until the advisor declines. Swapping the live LLM for a deterministic
mock changes nothing else about the loop.
"""

from llmnas import (
    ExperimentLog,
    HillClimbAdvisor,
    RandomAdvisor,
    RunConfig,
    best_of_trace,
    encode_problem,
    macro_space,
    run_trials,
    summary_table,
    synth_benchmark,
)

space = macro_space()
table = synth_benchmark(space, seed=11)

# This is the exact first message an advisor sees.
print(encode_problem(space))
print("-" * 72)

config = RunConfig(iterations=10, trials=3, seed=7)

for make in (RandomAdvisor, HillClimbAdvisor):
    traces = run_trials(space, table, lambda i, seed: make(seed), config)
    bests = [best_of_trace(t).val_acc for t in traces]
    print(f"{make.__name__}: best per trial "
          + ", ".join(f"{b:.2f}" for b in bests))

# The per-iteration breakdown of the last run, as a CSV summary; the
# optimum column shows what a perfect search would have found.
key, best = table.optimum()
log = ExperimentLog(
    metadata={"config": {"iterations": 10},
              "optimum": {"key": key, "val_acc": best.val_acc}},
    traces=traces,
)
print(summary_table(log))
