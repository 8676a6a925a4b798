"""Independent reference computations used by tests and replication suites.

These deliberately avoid the library's primary code paths: the projection
oracle searches the feasible set directly instead of using the closed-form
water-filling solution, and the hindsight oracle scores every threshold by
definition instead of using prefix sums.
"""

from __future__ import annotations

import math

import numpy as np

from .domains import Domain


def kl_projection_oracle(
    weights: np.ndarray, cap: float, resolution: float = 1e-4
) -> float:
    """Grid-search value of min KL(z || p) over the capped simplex.

    For two atoms the 1-simplex is searched directly at the given resolution.
    In higher dimensions candidates come from a dense multiplicative sweep:
    scale p by c, clamp at the cap, and keep the rescaled point whenever the
    clamped mass is at least 1 (rescaling down keeps every entry under the
    cap, so those candidates are feasible, and the sweep crosses the optimum
    where the clamped mass equals 1).  Accuracy is O(resolution^2) near the
    optimum.
    """
    p = np.asarray(weights, dtype=np.float64)
    n = p.size
    if cap * n < 1.0 - 1e-12:
        raise ValueError("infeasible cap")

    def kl(z: np.ndarray) -> float:
        mask = z > 0
        if np.any(p[mask] <= 0):
            return math.inf
        zm = z[mask]
        return float(np.sum(zm * np.log(zm / p[mask])))

    if n == 2:
        # grid over the 1-simplex plus the cap boundary points, where the
        # optimum sits whenever the constraint binds
        z1 = np.arange(0.0, min(cap, 1.0) + resolution, resolution).tolist()
        z1 += [cap, 1.0 - cap]
        best = math.inf
        for a in z1:
            if 0.0 <= a <= cap and 0.0 <= 1.0 - a <= cap:
                best = min(best, kl(np.array([a, 1.0 - a])))
        return best

    positive = p > 0
    c_max = max(cap / p[positive].min(), 1.0)
    cs = np.exp(np.arange(0.0, math.log(c_max) + resolution, resolution))
    clamped = np.minimum(cs[:, None] * p[None, :], cap)
    totals = clamped.sum(axis=1)
    feasible = totals >= 1.0 - 1e-13  # rescaling down keeps entries under the cap
    best = math.inf
    if np.any(feasible):
        z = clamped[feasible] / totals[feasible, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.divide(z, p[None, :], out=np.ones_like(z), where=z > 0)
            best = float(np.sum(np.where(z > 0, z * np.log(ratio), 0.0), axis=1).min())
    # the sweep's feasibility frontier (clamped mass = 1) holds the optimum;
    # pin it down by bisection on the mass, not by any KKT structure
    lo, hi = 1.0, c_max
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.minimum(mid * p, cap).sum() < 1.0:
            lo = mid
        else:
            hi = mid
    z = np.minimum(hi * p, cap)
    if z.sum() >= 1.0 - 1e-13:
        best = min(best, kl(z / z.sum()))
    return best


def best_threshold_loss_by_definition(
    domain: Domain, xs: np.ndarray, ys: np.ndarray
) -> int:
    """Minimum mistakes over all thresholds, scored atom by atom."""
    coords = domain.coordinates()
    cuts = np.concatenate([np.sort(np.unique(coords)), [np.inf]])
    best = len(xs)
    for b in cuts:
        preds = np.where(coords[xs] >= b, 1, -1)
        best = min(best, int(np.sum(preds != ys)))
    return best


def threshold_disagreement_by_definition(
    domain: Domain, b1: float, b2: float, weights: np.ndarray
) -> float:
    """Pr_mu[1(x>=b1) != 1(x>=b2)] summed atom by atom with fsum."""
    coords = domain.coordinates()
    differ = (coords >= b1) != (coords >= b2)
    return math.fsum(weights[differ].tolist())
