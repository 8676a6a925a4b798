"""Private synthetic-data release with a guaranteed-smooth output.

Answering queries through a cover works, but releasing the averaged MWEM
distribution itself is unsafe for off-cover queries: multiplicative updates
can pile mass anywhere.  The projected variant KL-projects every iterate
onto the polytope of sigma-smooth distributions, so the released average is
itself sigma-smooth (the polytope is convex) and any query can be evaluated
on it directly.  The projection never loses progress: the Pythagorean
inequality of information projections says each projected iterate is at
least as close to the smooth witness as its pre-projection point.
"""

import math

import numpy as np

from smoothlearn import (
    ThresholdClass,
    is_sigma_smooth,
    kl_divergence,
    projected_smooth_mwem,
)
from smoothlearn.domains import Domain, dist_to_text, make_two_level_dataset

sigma, n_records, horizon, eps = 0.1, 2000, 10, 1.0
domain = Domain.unit_interval_grid(512)
dataset = make_two_level_dataset(domain, sigma, n_records, heavy_mass=0.3)
witness = dataset.empirical()  # smooth by construction: its own witness

released, transcript = projected_smooth_mwem(
    dataset,
    ThresholdClass(domain),
    sigma,
    horizon,
    eps,
    np.random.default_rng(4),
    witness=witness,
)

print(f"released distribution sigma-smooth: {is_sigma_smooth(released, sigma)}")
print(f"density cap 1/(sigma*N) = {1 / (sigma * 512):.6f}, "
      f"max released weight = {released.max_weight:.6f}")
print(f"initial potential {transcript.psi_initial:.4f} <= log(1/sigma) = "
      f"{math.log(1 / sigma):.4f}")

print("\nper-round potential against the smooth witness (never increases past")
print("its pre-projection value, Pythagorean slack always >= 0):")
for r in transcript.rounds:
    slack = (
        kl_divergence(witness.weights, r.pre_projection)
        - kl_divergence(witness.weights, r.post_projection)
        - kl_divergence(r.post_projection, r.pre_projection)
    )
    print(
        f"  round {r.index:>2}: psi={r.psi:.4f}  pre-projection psi={r.psi_pre:.4f}"
        f"  pythagorean slack={slack:+.2e}"
    )

text = dist_to_text(released)
print(f"\nserialized synthetic distribution: {len(text.splitlines())} lines, "
      "17-significant-digit text, bit-exact round trip")
