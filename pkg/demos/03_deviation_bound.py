"""How much can an adaptive smooth adversary feed a small-measure function?

Take a family of disjoint slab indicators, each of uniform measure eps.  A
sigma-smooth adversary can boost any single slab's hit rate to at most
eps/sigma per round, and chasing the current leader adaptively buys only a
sqrt(log |F|) factor on top: the expected maximum count over the family stays
within O(T * (eps/sigma) * sqrt(ln |F|)).  This script measures that maximum
under the greedy leader-chasing strategy and compares it with the bound at
explicit constant 8.
"""

import math

import numpy as np

from smoothlearn import GreedyConcentrationStrategy, max_deviation_monte_carlo
from smoothlearn.domains import Domain
from smoothlearn.hypotheses import Hypothesis

n, horizon, trials = 1024, 400, 100
domain = Domain.unit_interval_grid(n)

print(f"disjoint slab families on {n} atoms, T={horizon}, {trials} trials each")
print(f"{'|F|':>5} {'eps':>8} {'sigma':>7} {'E[max count]':>13} {'bound':>9}")
for family_size in (4, 16, 64):
    eps = 1.0 / family_size
    sigma = 4.0 * eps  # adversary allowed 4x concentration over the slabs
    slab = n // family_size
    functions = []
    for j in range(family_size):
        bits = np.zeros(n, dtype=np.uint8)
        bits[j * slab : (j + 1) * slab] = 1
        functions.append(Hypothesis(domain, "extensional", bits=bits))
    mean = max_deviation_monte_carlo(
        functions,
        GreedyConcentrationStrategy(),
        horizon,
        trials,
        eps,
        sigma,
        np.random.default_rng(7),
    )
    bound = 8.0 * horizon * (eps / sigma) * math.sqrt(math.log(family_size))
    print(f"{family_size:>5} {eps:>8.4f} {sigma:>7.3f} {mean:>13.1f} {bound:>9.1f}")

print()
print(f"the per-round ceiling eps/sigma = 0.25 puts T*eps/sigma = {horizon * 0.25:.0f}")
print("in every row; growing the family only adds the sqrt(ln|F|) slack.")
