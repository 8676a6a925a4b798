"""Certifying approximate smoothness of datasets against a finite query set.

A dataset is (sigma, chi)-smooth with respect to a query set when some
sigma-smooth distribution answers every query within chi of the dataset's
empirical answers.  The certifier searches for such a witness by mirror
descent on the worst-query discrepancy with a KL projection back onto the
smooth polytope after every step, and reports the best discrepancy it
achieved.  The reported chi is therefore a sound upper bound on the optimal
chi (the witness attains it); optimality is not claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domains import Dataset, Dist, as_query_bits, is_sigma_smooth, validate_sigma
from .dp import SmoothPolytope, kl_project_capped_simplex


@dataclass(frozen=True)
class PseudoSmoothCertificate:
    """A sigma-smooth witness together with its verified query discrepancy."""

    witness: Dist
    sigma: float
    chi: float
    query_class_id: str

    def __post_init__(self):
        if not is_sigma_smooth(self.witness, self.sigma):
            raise ValueError("certificate witness is not sigma-smooth")
        if self.chi < 0.0:
            raise ValueError("chi must be non-negative")


def certify_pseudo_smooth(
    dataset: Dataset,
    queries: Sequence,
    sigma: float,
    max_iters: int = 500,
    query_class_id: str = "queries",
) -> PseudoSmoothCertificate:
    """Find a sigma-smooth witness with small worst-query discrepancy.

    Deterministic mirror descent: each step exponentiates against the
    indicator of the currently worst query (signed toward reducing its
    discrepancy), projects back onto the smooth polytope, and keeps the best
    iterate seen.  chi is the exact worst-query discrepancy of the returned
    witness over the given finite query set.
    """
    validate_sigma(sigma)
    if max_iters <= 0:
        raise ValueError("max_iters must be >= 1")
    if len(queries) == 0:
        raise ValueError("query set must be non-empty")

    domain = dataset.domain
    bits = np.stack([as_query_bits(q, domain) for q in queries])
    target = bits @ dataset.empirical().weights
    polytope = SmoothPolytope(sigma, domain.n_atoms)

    current = kl_project_capped_simplex(domain.uniform(), polytope)
    best_weights = current.weights
    best_chi = float(np.abs(bits @ current.weights - target).max())

    for t in range(max_iters):
        diffs = bits @ current.weights - target
        j = int(np.argmax(np.abs(diffs)))
        chi = abs(float(diffs[j]))
        if chi < best_chi:
            best_chi, best_weights = chi, current.weights
        if chi <= 1e-15:
            break
        step = 0.5 / math.sqrt(t + 1.0)
        # Push mass toward (diff < 0) or away from (diff > 0) the worst query.
        moved = current.weights * np.exp(-math.copysign(step, diffs[j]) * bits[j])
        current = kl_project_capped_simplex(Dist(domain, moved), polytope)

    final_chi = float(np.abs(bits @ current.weights - target).max())
    if final_chi < best_chi:
        best_chi, best_weights = final_chi, current.weights

    witness = Dist(domain, best_weights)
    return PseudoSmoothCertificate(
        witness=witness,
        sigma=sigma,
        chi=float(np.abs(bits @ witness.weights - target).max()),
        query_class_id=query_class_id,
    )
