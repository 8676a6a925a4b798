"""Differential-privacy primitives and multiplicative-weights mechanisms.

Implements the Laplace and exponential primitives, the baseline
multiplicative-weights exponential mechanism (MWEM) for finite query sets,
its smooth variant for huge query classes (run MWEM on a data-independent
gamma-cover of the class, answer any query through its nearest cover member),
the projected variant whose iterates are KL-projected onto the polytope of
smooth distributions so the released distribution itself stays smooth, and a
subsampled small-dataset release mechanism.

Per round, MWEM spends eps/2T on exponential-mechanism selection with score
n * |q(D_prev) - q(D_B)| (sensitivity 1 for 0/1 queries) and eps/2T on a
Laplace measurement m_i = q_i(D_B) + (1/n) Lap(2T/eps), then reweights
    D_i(x) proportional to D_{i-1}(x) * exp(q_i(x) * (m_i - q_i(D_{i-1})) / 2)
and finally averages the iterates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .covers import Cover, build_cover, nearest_in_cover_indexed
from .domains import (
    Dataset,
    Dist,
    as_query_bits,
    is_sigma_smooth,
    smoothness_cap,
    validate_sigma,
)
from .hypotheses import Hypothesis, HypothesisClass

ASSERT_TOL = 1e-9
MULTISET_ENUMERATION_GUARD = 10**7


@dataclass(frozen=True)
class PrivacyParams:
    """An (epsilon, delta) differential-privacy guarantee."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")


# ---------------------------------------------------------------------------
# Primitives.
# ---------------------------------------------------------------------------

def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    """One draw from Laplace(0, scale) by inverse CDF on a single uniform.

    Exactly one rng value is consumed per call, so transcripts are
    reproducible from the seed alone.
    """
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    u = rng.random() - 0.5
    return -scale * math.copysign(1.0, u) * math.log(max(1.0 - 2.0 * abs(u), 5e-324))


def exponential_mechanism_probabilities(
    scores: np.ndarray, eps_em: float, sensitivity: float
) -> np.ndarray:
    """Closed-form selection probabilities proportional to exp(eps*s/(2*Delta))."""
    if sensitivity <= 0.0:
        raise ValueError("sensitivity must be positive")
    logits = (eps_em / (2.0 * sensitivity)) * np.asarray(scores, dtype=np.float64)
    logits -= logits.max()  # overflow-safe shift; cancels in normalization
    p = np.exp(logits)
    return p / p.sum()


def exponential_mechanism(
    candidates: Sequence,
    score: Callable | np.ndarray,
    eps_em: float,
    sensitivity: float,
    rng: np.random.Generator,
):
    """Sample a candidate with probability proportional to exp(eps*s/(2*Delta))."""
    if len(candidates) == 0:
        raise ValueError("exponential mechanism needs a non-empty candidate set")
    if callable(score):
        scores = np.array([float(score(c)) for c in candidates])
    else:
        scores = np.asarray(score, dtype=np.float64)
        if scores.shape != (len(candidates),):
            raise ValueError("score vector length does not match candidates")
    probs = exponential_mechanism_probabilities(scores, eps_em, sensitivity)
    i = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return candidates[min(i, len(candidates) - 1)]


def multiplicative_update(
    d_prev: Dist, q, noisy_value: float, q_prev_value: float
) -> Dist:
    """Reweight by exp(q(x) * (m - q(D_prev)) / 2) and renormalize."""
    bits = as_query_bits(q, d_prev.domain)
    factor = np.exp(bits * ((noisy_value - q_prev_value) / 2.0))
    return Dist(d_prev.domain, d_prev.weights * factor)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats with the 0 log 0 = 0 convention."""
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        return math.inf
    pm = p[mask]
    return float(np.sum(pm * np.log(pm / q[mask])))


# ---------------------------------------------------------------------------
# The smooth polytope and its KL projection.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SmoothPolytope:
    """{z : z >= 0, sum z = 1, z_i <= 1/(sigma*N)} - the sigma-smooth simplex."""

    sigma: float
    n_atoms: int

    def __post_init__(self):
        validate_sigma(self.sigma)
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.cap * self.n_atoms < 1.0 - 1e-12:
            raise ValueError("polytope is empty: cap * N < 1")

    @property
    def cap(self) -> float:
        return smoothness_cap(self.sigma, self.n_atoms)


def _water_fill_scale(weights: np.ndarray, cap: float) -> float:
    """The unique c >= 1 with sum_i min(c * w_i, cap) = 1, by sorted scan."""
    order = np.argsort(-weights, kind="stable")
    ws = weights[order]
    tail = float(ws.sum())
    for k in range(ws.size):
        if ws[k] <= 0.0 or tail <= 0.0:
            break
        c = (1.0 - k * cap) / tail
        if c * ws[k] <= cap:
            return c
        tail -= float(ws[k])
    raise ValueError("projection infeasible: allowed mass on the support is below 1")


def _bisect_scale(weights: np.ndarray, cap: float) -> float:
    lo, hi = 1.0, 2.0
    while np.minimum(hi * weights, cap).sum() < 1.0:
        hi *= 2.0
        if hi > 1e18:
            raise ValueError("projection infeasible: allowed mass on the support is below 1")
    for _ in range(200):  # bisection to ~1e-12 relative
        mid = 0.5 * (lo + hi)
        if np.minimum(mid * weights, cap).sum() < 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def kl_project_capped_simplex(
    p: Dist, polytope: SmoothPolytope, return_scale: bool = False
):
    """Information projection of ``p`` onto the smooth polytope.

    By the KKT conditions the minimizer of KL(z || p) over the capped simplex
    is z_i = min(c * p_i, cap) for the unique scalar c >= 1 restoring total
    mass 1; c comes from a descending water-filling scan with a bisection
    fallback.  The output satisfies the cap exactly (entries are clamped with
    min) and sums to 1 after renormalization.
    """
    if polytope.n_atoms != p.domain.n_atoms:
        raise ValueError("polytope size does not match the distribution's domain")
    cap = polytope.cap
    support = p.weights > 0.0
    if cap * support.sum() < 1.0 - 1e-12:
        raise ValueError("projection infeasible: allowed mass on the support is below 1")
    c = _water_fill_scale(p.weights, cap)
    z = np.minimum(c * p.weights, cap)
    total = z.sum()
    if abs(total - 1.0) > 1e-9:
        c = _bisect_scale(p.weights, cap)
        z = np.minimum(c * p.weights, cap)
    out = Dist(p.domain, z)
    if return_scale:
        return out, c
    return out


# ---------------------------------------------------------------------------
# Transcripts.
# ---------------------------------------------------------------------------

@dataclass
class MechanismRound:
    index: int
    selected_index: int
    selected_query: str
    scores: np.ndarray
    noisy_value: float
    query_prev_value: float
    pre_projection: np.ndarray
    post_projection: np.ndarray
    psi: float | None = None
    psi_pre: float | None = None


@dataclass
class MechanismTranscript:
    """Per-round record of an MWEM-family run plus the averaged output.

    ``budget`` lists every (step, epsilon) privacy charge; the charges sum to
    the total budget.  Potentials are logged only when a smooth witness for
    the dataset is supplied.
    """

    rounds: list[MechanismRound]
    final_average: Dist
    budget: list[tuple[str, float]]
    config: dict = field(default_factory=dict)
    psi_initial: float | None = None
    cover: Cover | None = None

    def budget_total(self) -> float:
        return math.fsum(e for _, e in self.budget)

    def potentials(self) -> list[float]:
        return [r.psi for r in self.rounds if r.psi is not None]

    def to_jsonl(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            header = {
                "config": self.config,
                "budget": self.budget,
                "psi_initial": self.psi_initial,
                "final_average": self.final_average.weights.tolist(),
            }
            fh.write(json.dumps(header) + "\n")
            for r in self.rounds:
                fh.write(
                    json.dumps(
                        {
                            "i": r.index,
                            "selected_index": r.selected_index,
                            "selected_query": r.selected_query,
                            "scores": r.scores.tolist(),
                            "noisy_value": r.noisy_value,
                            "query_prev_value": r.query_prev_value,
                            "pre": r.pre_projection.tolist(),
                            "post": r.post_projection.tolist(),
                            "psi": r.psi,
                            "psi_pre": r.psi_pre,
                        }
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# MWEM family.
# ---------------------------------------------------------------------------

def _resolve_witness(
    dataset: Dataset, sigma: float | None, witness: Dist | None
) -> Dist | None:
    if witness is not None:
        if sigma is not None and not is_sigma_smooth(witness, sigma):
            raise ValueError("supplied witness is not sigma-smooth")
        return witness
    if sigma is not None:
        empirical = dataset.empirical()
        if is_sigma_smooth(empirical, sigma):
            return empirical
    return None


def _run_mwem_rounds(
    dataset: Dataset,
    queries: Sequence[Hypothesis],
    rounds: int,
    eps: float,
    rng: np.random.Generator,
    polytope: SmoothPolytope | None,
    witness: Dist | None,
    config: dict,
) -> tuple[Dist, MechanismTranscript]:
    if rounds < 1:
        raise ValueError("T must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if len(queries) == 0:
        raise ValueError("query set must be non-empty")
    domain = dataset.domain
    n = dataset.n
    bits = np.stack([as_query_bits(q, domain) for q in queries])
    tokens = [q.token() for q in queries]
    data_values = bits @ dataset.empirical().weights

    eps_round = eps / (2.0 * rounds)

    current = domain.uniform()
    w = witness.weights if witness is not None else None
    psi_initial = None
    if w is not None:
        psi_initial = kl_divergence(w, current.weights)
        if polytope is not None:
            bound = math.log(1.0 / polytope.sigma) + ASSERT_TOL
            if psi_initial > bound:
                raise AssertionError(
                    f"initial potential {psi_initial} exceeds log(1/sigma) for a smooth witness"
                )

    record_rounds: list[MechanismRound] = []
    budget: list[tuple[str, float]] = []
    iterates = np.zeros((rounds, domain.n_atoms))

    for i in range(1, rounds + 1):
        prev_values = bits @ current.weights
        scores = n * np.abs(prev_values - data_values)
        sel = exponential_mechanism(
            np.arange(len(queries)), scores, eps_round, 1.0, rng
        )
        budget.append(("selection", eps_round))
        noisy = float(data_values[sel] + laplace_sample(2.0 * rounds / eps, rng) / n)
        budget.append(("measurement", eps_round))

        updated = multiplicative_update(current, bits[sel], noisy, float(prev_values[sel]))
        pre_weights = updated.weights
        if polytope is not None:
            projected = kl_project_capped_simplex(updated, polytope)
        else:
            projected = updated

        psi = psi_pre = None
        if w is not None:
            psi_pre = kl_divergence(w, pre_weights)
            psi = kl_divergence(w, projected.weights)
            if psi < -1e-12:
                raise AssertionError("potential went negative: KL must be non-negative")
            if polytope is not None:
                if psi > psi_pre + 1e-12:
                    raise AssertionError("projection increased the witness potential")
                pythag_gap = psi_pre - psi - kl_divergence(projected.weights, pre_weights)
                if pythag_gap < -ASSERT_TOL:
                    raise AssertionError(
                        f"Pythagorean inequality violated by {-pythag_gap:.3e}"
                    )

        record_rounds.append(
            MechanismRound(
                index=i,
                selected_index=int(sel),
                selected_query=tokens[sel],
                scores=scores,
                noisy_value=noisy,
                query_prev_value=float(prev_values[sel]),
                pre_projection=pre_weights,
                post_projection=projected.weights,
                psi=psi,
                psi_pre=psi_pre,
            )
        )
        iterates[i - 1] = projected.weights
        current = projected

    final = Dist(domain, iterates.mean(axis=0))
    transcript = MechanismTranscript(
        rounds=record_rounds,
        final_average=final,
        budget=budget,
        config=config,
        psi_initial=psi_initial,
    )
    return final, transcript


def mwem(
    dataset: Dataset,
    queries: Sequence[Hypothesis],
    rounds: int,
    eps: float,
    rng: np.random.Generator,
    witness: Dist | None = None,
) -> tuple[Dist, MechanismTranscript]:
    """Baseline MWEM over a finite query list; pure eps-DP by composition.

    T selection steps at eps/2T plus T Laplace measurements at eps/2T spend
    exactly eps; the transcript's budget ledger records every charge.
    """
    config = {
        "mechanism": "mwem",
        "T": rounds,
        "eps": eps,
        "n": dataset.n,
        "n_queries": len(queries),
    }
    return _run_mwem_rounds(dataset, queries, rounds, eps, rng, None, witness, config)


def default_cover_radius(sigma: float, n: int) -> float:
    """Cover radius sigma / (4n) used by the smooth mechanisms."""
    return validate_sigma(sigma) / (4.0 * n)


def smooth_mwem(
    dataset: Dataset,
    query_class: HypothesisClass,
    sigma: float,
    rounds: int,
    eps: float,
    rng: np.random.Generator,
    gamma: float | None = None,
    cover: Cover | None = None,
    requested: Sequence[Hypothesis] | None = None,
    witness: Dist | None = None,
) -> tuple[dict[str, float], MechanismTranscript]:
    """Query answering for (sigma, 0)-smooth data over a possibly huge class.

    Builds a gamma-cover of the class under the uniform distribution (data
    independent, so privacy is untouched), runs MWEM on the cover, and
    answers a query by evaluating its nearest cover member on the averaged
    distribution.  The radius defaults to sigma/(4n), the value under which
    the cover-approximation error 2*gamma/sigma becomes 1/(2n).
    """
    validate_sigma(sigma)
    if gamma is None:
        gamma = default_cover_radius(sigma, dataset.n)
    if cover is None:
        cover = build_cover(query_class, gamma, rng=rng)
    witness = _resolve_witness(dataset, sigma, witness)
    config = {
        "mechanism": "smooth_mwem",
        "T": rounds,
        "eps": eps,
        "n": dataset.n,
        "sigma": sigma,
        "gamma": gamma,
        "cover_size": len(cover),
    }
    dbar, transcript = _run_mwem_rounds(
        dataset, list(cover.members), rounds, eps, rng, None, witness, config
    )
    transcript.cover = cover
    if requested is None:
        # cover members are their own nearest member: evaluate directly,
        # bit-identical to query_value on the averaged distribution
        answers = {
            m.token(): float(np.dot(dbar.weights, m.query_bits()))
            for m in cover.members
        }
    else:
        uniform = dataset.domain.uniform()
        answers = {
            q.token(): answer_with_cover(q, cover, dbar, uniform) for q in requested
        }
    return answers, transcript


def answer_with_cover(q: Hypothesis, cover: Cover, dbar: Dist, uniform: Dist) -> float:
    """Evaluate the cover member nearest to ``q`` (under uniform) on ``dbar``."""
    member, _, _ = nearest_in_cover_indexed(q, cover, uniform)
    return float(np.dot(dbar.weights, member.query_bits()))


def projected_smooth_mwem(
    dataset: Dataset,
    query_class: HypothesisClass,
    sigma: float,
    rounds: int,
    eps: float,
    rng: np.random.Generator,
    gamma: float | None = None,
    cover: Cover | None = None,
    witness: Dist | None = None,
) -> tuple[Dist, MechanismTranscript]:
    """Data release: smooth-MWEM rounds with a KL projection after each update.

    Every iterate is projected onto the sigma-smooth polytope, and the
    polytope is convex, so the averaged output is itself sigma-smooth and any
    query can be answered directly on it.  When a smooth witness is known the
    run hard-asserts, per round: the potential stays non-negative, the
    projection never increases it, and the Pythagorean inequality
    KL(w||pre) >= KL(w||post) + KL(post||pre) holds to 1e-9.
    """
    validate_sigma(sigma)
    if gamma is None:
        gamma = default_cover_radius(sigma, dataset.n)
    if cover is None:
        cover = build_cover(query_class, gamma, rng=rng)
    witness = _resolve_witness(dataset, sigma, witness)
    polytope = SmoothPolytope(sigma, dataset.domain.n_atoms)
    config = {
        "mechanism": "projected_smooth_mwem",
        "T": rounds,
        "eps": eps,
        "n": dataset.n,
        "sigma": sigma,
        "gamma": gamma,
        "cover_size": len(cover),
    }
    dbar, transcript = _run_mwem_rounds(
        dataset, list(cover.members), rounds, eps, rng, polytope, witness, config
    )
    transcript.cover = cover
    if not is_sigma_smooth(dbar, sigma):
        raise AssertionError("projected average escaped the smooth polytope")
    return dbar, transcript


# ---------------------------------------------------------------------------
# Subsampled small-dataset release.
# ---------------------------------------------------------------------------

def default_net_size(vc_dim: int, accuracy: float) -> int:
    """Default released-dataset size ceil(8 * d / accuracy^2)."""
    if accuracy <= 0.0:
        raise ValueError("accuracy must be positive")
    return math.ceil(8.0 * vc_dim / accuracy**2)


def enumerate_multiset_counts(support: np.ndarray, k: int, n_atoms: int) -> np.ndarray:
    """Count vectors of all size-k multisets over the support atoms."""
    support = np.asarray(support, dtype=np.int64)
    total = math.comb(len(support) + k - 1, k)
    if total > MULTISET_ENUMERATION_GUARD:
        raise ValueError(
            f"{total} candidate datasets exceed the enumeration guard; "
            "reduce the subsample size M or the released size k"
        )
    out = np.zeros((total, n_atoms), dtype=np.int64)
    for row, combo in enumerate(combinations_with_replacement(support, k)):
        for atom in combo:
            out[row, atom] += 1
    return out


def _net_scores(dataset: Dataset, queries: Sequence[Hypothesis], counts: np.ndarray, k: int):
    bits = np.stack([as_query_bits(q, dataset.domain) for q in queries])
    data_values = bits @ dataset.empirical().weights
    cand_values = (counts / k) @ bits.T
    return np.abs(cand_values - data_values[None, :]).max(axis=1)


def subsampled_net_selection_probabilities(
    dataset: Dataset,
    queries: Sequence[Hypothesis],
    eps: float,
    support: np.ndarray,
    k: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form candidate probabilities for a fixed subsampled support.

    Selection weight is exp(-eps * n * s / 2) where s is the worst query
    discrepancy; equivalently the exponential mechanism on score -s with
    sensitivity 1/n.  Used to check the privacy ratio exactly.
    """
    counts = enumerate_multiset_counts(support, k, dataset.domain.n_atoms)
    s = _net_scores(dataset, queries, counts, k)
    probs = exponential_mechanism_probabilities(-s, eps, 1.0 / dataset.n)
    return counts, probs


def subsampled_net_mechanism(
    dataset: Dataset,
    queries: Sequence[Hypothesis],
    eps: float,
    subsample_size: int,
    k: int,
    rng: np.random.Generator,
) -> Dataset:
    """Release a k-record dataset supported on a random sub-universe.

    Draws M atoms with replacement, enumerates every size-k multiset over the
    support, and selects one with probability proportional to
    exp(-eps * n * s / 2), s being the worst query discrepancy against the
    private dataset.  Privacy is exactly the exponential mechanism's.
    """
    if subsample_size < 1 or k < 1:
        raise ValueError("subsample size M and released size k must be >= 1")
    guard = math.comb(subsample_size + k - 1, k)
    if guard > MULTISET_ENUMERATION_GUARD:
        raise ValueError(
            f"{guard} candidate datasets exceed the enumeration guard; "
            "reduce the subsample size M or the released size k"
        )
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    domain = dataset.domain
    draws = rng.integers(0, domain.n_atoms, size=subsample_size)
    support = np.unique(draws)
    counts = enumerate_multiset_counts(support, k, domain.n_atoms)
    s = _net_scores(dataset, queries, counts, k)
    chosen = exponential_mechanism(
        np.arange(counts.shape[0]), -s, eps, 1.0 / dataset.n, rng
    )
    return Dataset.from_counts(domain, counts[int(chosen)])


def advanced_composition(eps_round: float, rounds: int, delta: float) -> PrivacyParams:
    """Total budget of T adaptive eps-DP rounds under advanced composition.

    eps_total = eps * sqrt(2 T ln(1/delta)) + T * eps * (e^eps - 1); pure
    arithmetic, no randomness.
    """
    if eps_round <= 0.0 or rounds < 1:
        raise ValueError("eps_round must be positive and rounds >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    total = eps_round * math.sqrt(2.0 * rounds * math.log(1.0 / delta)) + (
        rounds * eps_round * (math.exp(eps_round) - 1.0)
    )
    return PrivacyParams(epsilon=total, delta=delta)
