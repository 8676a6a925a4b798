"""Adaptivity defeats concentration even for smooth processes.

The quarter-commit process is 1/4-smooth every round: the first instance is
uniform on the outer quarters of [0, 1], and every later round is uniform on
whichever quarter the first instance hit.  The time-average of the midpoint
threshold query then lands exactly on 0 or 1 - a fair coin, never near its
expectation of 1/2.  Time averages of a fixed small-measure query do not
concentrate under adaptive smooth adversaries; uniform bounds need the
pointwise (bracketing) machinery instead.
"""

import numpy as np

from smoothlearn import Domain, QuarterCommitAdversary, is_sigma_smooth

n, horizon, trials = 1024, 50, 600
domain = Domain.unit_interval_grid(n)
half_query = (domain.coordinates() >= 0.5).astype(float)

means = np.zeros(trials)
for trial in range(trials):
    rng = np.random.default_rng(trial)
    adversary = QuarterCommitAdversary(horizon)
    adversary.start(domain, rng)
    total = 0.0
    for _ in range(horizon):
        dist, _ = adversary.emit()
        assert is_sigma_smooth(dist, 0.25)  # the process never breaks smoothness
        x = dist.sample_index(rng)
        total += half_query[x]
        adversary.observe(None, x, 1)
    means[trial] = total / horizon

at_zero = int(np.sum(means == 0.0))
at_one = int(np.sum(means == 1.0))
print(f"{trials} independent runs of the quarter-commit process, T={horizon}:")
print(f"  runs with time-average exactly 0: {at_zero}")
print(f"  runs with time-average exactly 1: {at_one}")
print(f"  anything in between:              {trials - at_zero - at_one}")
print(f"  grand mean {means.mean():.4f}  (the expectation is 1/2)")
print()
print("Every run is glued to an extreme: the empirical average never")
print("resembles its expectation, although each round is 1/4-smooth.")
