"""
Best-of-k random search, empirically and exactly
================================================

Any search that evaluates k architectures should beat drawing k at
random and keeping the best. That reference point has a closed form
over a finite table, which also validates the empirical estimator.
"""

from llmnas import (
    exact_best_of_k_expectation,
    macro_space,
    random_baseline,
    synth_benchmark,
)

table = synth_benchmark(macro_space(), seed=11)

print(" k   empirical mean   exact      std")
for k in (1, 2, 5, 10, 20):
    result = random_baseline(table, k=k, repeats=10_000, seed=0)
    exact = exact_best_of_k_expectation(table, k=k)
    print(f"{k:2d}   {result.mean:10.4f}    {exact:8.4f}   {result.std:.4f}")

# The gap between the two shrinks like 1/sqrt(repeats); with 10k
# repeats it sits well inside three standard errors.
result = random_baseline(table, k=10, repeats=10_000, seed=0)
exact = exact_best_of_k_expectation(table, k=10)
sem = result.std / 10_000**0.5
print(f"\nk=10 gap {abs(result.mean - exact):.4f} vs 3*sem {3 * sem:.4f}")
