"""Why smoothing defeats the classic threshold-learning lower bound.

A worst-case adversary with unbounded precision forces any binary-search
style learner into one mistake per round: it just keeps placing instances
inside the learner's shrinking uncertainty interval.  A smooth adversary
cannot do that - once the uncertainty region's mass drops below sigma, the
density cap 1/(sigma*N) limits how often instances land there - and Hedge
over a cover of the class exploits exactly that.
"""

import numpy as np

from smoothlearn import (
    Domain,
    ThresholdClass,
    UncertaintyRegionAdversary,
    binary_search_duel,
    smooth_online_play,
)

# --- the worst-case baseline: one mistake per round, forever -----------------

domain = Domain.unit_interval_grid(1 << 16)
duel = binary_search_duel(domain, 16)
print("worst-case point-mass adversary vs halving learner on 2^16 atoms:")
print(f"  {duel.mistakes} mistakes in {duel.rounds} rounds (one per round)")
print("  doubling the horizon would double the mistakes until the grid runs out\n")

# --- the same game, but the adversary must stay sigma-smooth -----------------

n = 2048
domain = Domain.unit_interval_grid(n)
cls = ThresholdClass(domain)
horizon = 1000
seeds = 8

print(f"Hedge over a cover, T={horizon}, N={n}, adaptive smooth adversary")
print("concentrating on the version space (labels from a hidden threshold):")
for sigma in (0.5, 0.1, 0.02):
    regrets = []
    for seed in range(seeds):
        record = smooth_online_play(
            cls,
            sigma,
            horizon,
            UncertaintyRegionAdversary(sigma),
            np.random.default_rng(1000 + seed),
        )
        regrets.append(record.regret)
    mean = float(np.mean(regrets))
    print(
        f"  sigma={sigma:<5} mean regret {mean:7.1f}   "
        f"({mean / horizon:.3f} per round vs the baseline's 1.000)"
    )

print(
    "\nSmaller sigma hands the adversary more concentration power, but any"
    "\nfixed sigma keeps regret sublinear: the per-round forcing probability"
    "\nis capped by (region mass) / sigma."
)
