"""Binary differential evolution on OneMax, step by step.

Prints the best energy per generation for a few seeds, then the success
rate over 100 seeds. Some runs stall: once every candidate agrees on a bit,
mutation has no way to flip it, so the population can collapse short of the
optimum.
"""
import numpy as np

from epruning import bench
from epruning.bde import BdeParams

D = 12
objective = bench.onemax_objective(D)
params = BdeParams(mutation_factor=0.5, crossover_rate=0.9)

for seed in range(3):
    params_s = BdeParams(params.mutation_factor, params.crossover_rate, seed)
    pop, history = bench.run_bde(objective, D, params_s, steps=30)
    print(f"seed {seed}: best energy by step {np.array(history[:12]).astype(int).tolist()} ...")
    print(f"        final state {pop.best_state.tolist()}")

result = bench.run_bde_benchmark(objective, params, 500, range(100))
print(f"reached the optimum on {result.success_rate:.0%} of 100 seeds")

# what happens with a larger population
result = bench.run_bde_benchmark(objective, params, 500, range(100), S=16)
print(f"with S=16: {result.success_rate:.0%}")
