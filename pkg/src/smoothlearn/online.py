"""Online learning against smooth and worst-case adversaries.

The learner runs Hedge over a gamma-cover of the hypothesis class built under
the uniform distribution, with gamma = sigma / (4 * sqrt(T)).  Play is
full-information: after each round the learner sees the realized labeled
instance and charges every cover member its 0/1 loss.  The learner samples
its hypothesis from the Hedge weights (randomized play), so expected regret
includes the learner's own randomness.

Adversaries emit a per-round distribution over instances plus a labeling of
the atoms.  Smooth adversaries must emit distributions whose per-atom mass
never exceeds 1/(sigma*N); this is a hard per-round contract, checked on
every emission.  The zoo also contains the classic precision-unbounded
point-mass adversary that forces one mistake per round from any
binary-search-style learner, as the worst-case baseline that smoothing
removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .covers import Cover, build_cover
from .domains import (
    Dist,
    Domain,
    is_sigma_smooth,
    query_value,
    smoothness_cap,
    validate_sigma,
)
from .hypotheses import Hypothesis, HypothesisClass, ThresholdClass


class SmoothnessContractError(ValueError):
    """A smooth-kind adversary emitted a distribution above the density cap."""


# ---------------------------------------------------------------------------
# Hedge.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LearnerState:
    """Hedge state over a fixed cover: weights, learning rate, round index."""

    cover: Cover
    weights: np.ndarray
    eta: float
    t: int
    horizon: int

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("learning rate must be positive")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.cover),) or abs(w.sum() - 1.0) > 1e-9 or w.min() < 0:
            raise ValueError("weights must be a probability vector over cover members")


def tuned_hedge_rate(n_experts: int, horizon: int) -> float:
    """Standard tuned rate sqrt(8 ln K / T) for a known horizon."""
    return math.sqrt(8.0 * math.log(max(n_experts, 2)) / horizon)


def initial_learner_state(cover: Cover, horizon: int) -> LearnerState:
    k = len(cover)
    return LearnerState(
        cover=cover,
        weights=np.full(k, 1.0 / k),
        eta=tuned_hedge_rate(k, horizon),
        t=0,
        horizon=horizon,
    )


def hedge_update(state: LearnerState, losses: np.ndarray) -> LearnerState:
    """Multiplicative-weights step: w_i <- w_i * exp(-eta * loss_i), renormalized."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.shape != (len(state.cover),):
        raise ValueError(
            f"loss vector length {losses.shape} does not match cover size {len(state.cover)}"
        )
    w = state.weights * np.exp(-state.eta * losses)
    w = w / w.sum()
    return replace(state, weights=w, t=state.t + 1)


# ---------------------------------------------------------------------------
# Adversaries.
# ---------------------------------------------------------------------------

def cap_concentrated_dist(domain: Domain, mask: np.ndarray, sigma: float) -> Dist:
    """The sigma-smooth distribution with maximal mass on the masked atoms.

    Masked atoms sit at the density cap 1/(sigma*N) (or share all mass
    uniformly once the cap would exceed total mass 1); the remainder spreads
    uniformly over the complement, which stays below the cap for any
    sigma <= 1.  With mask mass w under the uniform distribution, the masked
    region receives min(1, w / sigma).
    """
    n = domain.n_atoms
    k = int(mask.sum())
    if k == 0:
        return domain.uniform()
    cap = smoothness_cap(sigma, n)
    w = np.zeros(n)
    if k * cap >= 1.0:
        w[mask] = 1.0 / k
    else:
        w[mask] = cap
        w[~mask] = (1.0 - k * cap) / (n - k)
    return Dist(domain, w)


class Adversary:
    """Per-round opponent: emits (instance distribution, atom labels).

    ``sigma`` is the smoothness the adversary promises for every emission
    (None for the worst-case kind).  Adaptive adversaries update internal
    state from the realized play via ``observe``; they see the learner's past
    hypotheses and the realized instances, never the current round's draw.
    One instance drives one game: call ``start`` before each game.
    """

    kind: str = "abstract"
    sigma: float | None = None

    def start(self, domain: Domain, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def emit(self) -> tuple[Dist, np.ndarray]:
        raise NotImplementedError

    def observe(self, played: Hypothesis | None, x_index: int, y: int) -> None:
        pass


class FixedSmoothAdversary(Adversary):
    """Non-adaptive kind: a fixed sigma-smooth distribution, labels from a target."""

    kind = "nonadaptive"

    def __init__(self, dist: Dist, target: Hypothesis, sigma: float):
        self.sigma = validate_sigma(sigma)
        if not is_sigma_smooth(dist, sigma):
            raise SmoothnessContractError("fixed distribution is not sigma-smooth")
        self._dist = dist
        self._target = target

    def start(self, domain, rng):
        if domain is not self._dist.domain and domain != self._dist.domain:
            raise ValueError("adversary was built for a different domain")
        self._labels = self._target.predictions()

    def emit(self):
        return self._dist, self._labels


class QuarterCommitAdversary(Adversary):
    """Adaptive process that commits to a quarter of the line after round 1.

    Round 1 is uniform on the outer quarters [0, 1/4] u [3/4, 1]; every later
    round is uniform on whichever quarter the first instance landed in.  All
    labels are +1.  Every emission is 1/4-smooth, yet the time-average of the
    midpoint threshold query is 0 or 1 (a fair coin), never near its mean:
    adaptivity defeats concentration even at constant smoothness.
    """

    kind = "appendixB"
    sigma = 0.25

    def __init__(self, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.horizon = int(horizon)

    def start(self, domain, rng):
        coords = domain.coordinates()
        low = coords <= 0.25
        high = coords >= 0.75
        if not (low.any() and high.any()):
            raise ValueError("domain must cover the outer quarters of [0, 1]")
        n = domain.n_atoms
        both = np.where(low | high, 1.0, 0.0)
        self._round_one = Dist(domain, both)
        self._low = Dist(domain, np.where(low, 1.0, 0.0))
        self._high = Dist(domain, np.where(high, 1.0, 0.0))
        self._low_mask = low
        self._labels = np.ones(n, dtype=np.int8)
        self._committed: Dist | None = None

    def emit(self):
        dist = self._round_one if self._committed is None else self._committed
        return dist, self._labels

    def observe(self, played, x_index, y):
        if self._committed is None:
            self._committed = self._low if self._low_mask[x_index] else self._high


class UncertaintyRegionAdversary(Adversary):
    """Adaptive smooth adversary concentrating on the threshold version space.

    A hidden target threshold labels all instances.  The adversary tracks the
    interval of thresholds consistent with the realized labeled instances and
    emits the sigma-smooth distribution packing maximal mass (density capped
    at 1/(sigma*N)) onto the atoms where consistent thresholds still
    disagree.  Once that region's uniform mass w drops below sigma, no more
    than w/sigma probability can land in it per round, which is what caps the
    learner's forced mistakes.
    """

    kind = "uncertainty_region"

    def __init__(self, sigma: float):
        self.sigma = validate_sigma(sigma)

    def start(self, domain, rng):
        coords = domain.coordinates()
        self._domain = domain
        self._order = np.argsort(coords, kind="stable")
        self._pos_of_atom = np.empty(domain.n_atoms, dtype=np.int64)
        self._pos_of_atom[self._order] = np.arange(domain.n_atoms)
        n = domain.n_atoms
        self._lo, self._hi = 0, n  # consistent threshold cut positions
        self._target = int(rng.integers(0, n + 1))
        labels = np.where(np.arange(n) >= self._target, 1, -1).astype(np.int8)
        self._labels = labels[self._pos_of_atom]
        self._cached: tuple[int, int] | None = None
        self._dist: Dist | None = None

    def emit(self):
        if self._cached != (self._lo, self._hi):
            mask = np.zeros(self._domain.n_atoms, dtype=bool)
            mask[self._order[self._lo : self._hi]] = True
            self._dist = cap_concentrated_dist(self._domain, mask, self.sigma)
            self._cached = (self._lo, self._hi)
        return self._dist, self._labels

    def observe(self, played, x_index, y):
        p = int(self._pos_of_atom[x_index])
        if y > 0:
            self._hi = min(self._hi, p)
        else:
            self._lo = max(self._lo, p + 1)


class BinarySearchAdversary(Adversary):
    """Worst-case point-mass adversary for thresholds (not smooth).

    Maintains the interval of thresholds consistent with play so far, places
    all mass on the atom that splits it most evenly, and labels against the
    version-space majority vote, which is exactly the prediction of a halving
    learner.  This forces one mistake per round until the interval narrows to
    a single threshold, at which point it stops forcing and plays
    consistently (recorded via ``exhausted``).
    """

    kind = "worst_case_binary_search"
    sigma = None

    def __init__(self, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.horizon = int(horizon)

    def start(self, domain, rng):
        coords = domain.coordinates()
        self._domain = domain
        self._order = np.argsort(coords, kind="stable")
        n = domain.n_atoms
        self._positions = np.empty(n, dtype=np.int64)
        self._positions[self._order] = np.arange(n)
        self._lo, self._hi = 0, n
        self.exhausted_at: int | None = None
        self._round = 0

    def _labels_from_cut(self, cut: int) -> np.ndarray:
        n = self._domain.n_atoms
        by_pos = np.where(np.arange(n) >= cut, 1, -1).astype(np.int8)
        return by_pos[self._positions]

    def emit(self):
        self._round += 1
        lo, hi = self._lo, self._hi
        if hi <= lo:  # single consistent threshold: nothing left to force
            if self.exhausted_at is None:
                self.exhausted_at = self._round
            pos = min(lo, self._domain.n_atoms - 1)
            atom = int(self._order[pos])
            return Dist.point_mass(self._domain, atom), self._labels_from_cut(lo)
        a = (lo + hi - 1) // 2
        plus_votes = a - lo + 1
        minus_votes = hi - a
        majority_plus = plus_votes >= minus_votes
        # Label against the majority: cut above the probe if the majority
        # says +1 there, at-or-below otherwise.
        cut = a + 1 if majority_plus else lo
        atom = int(self._order[a])
        return Dist.point_mass(self._domain, atom), self._labels_from_cut(cut)

    def observe(self, played, x_index, y):
        p = int(self._positions[x_index])
        if y > 0:
            self._hi = min(self._hi, p)
        else:
            self._lo = max(self._lo, p + 1)


def adversary_appendix_b(horizon: int) -> QuarterCommitAdversary:
    return QuarterCommitAdversary(horizon)


def adversary_uncertainty_region(sigma: float) -> UncertaintyRegionAdversary:
    return UncertaintyRegionAdversary(sigma)


def adversary_binary_search(horizon: int) -> BinarySearchAdversary:
    return BinarySearchAdversary(horizon)


# ---------------------------------------------------------------------------
# The game.
# ---------------------------------------------------------------------------

@dataclass
class RegretRecord:
    """Full transcript of one game plus the exact regret accounting.

    ``regret`` is cumulative learner loss minus the loss of the best fixed
    hypothesis in the full class; the latter is exact for 1-D thresholds and
    otherwise a cover/grid approximation (``best_is_exact`` says which).
    """

    losses: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    played: np.ndarray
    best_hindsight: float
    best_is_exact: bool
    regret: float
    cover_size: int
    seed: int | None = None
    config: dict = field(default_factory=dict)

    @property
    def cumulative_loss(self) -> float:
        return float(self.losses.sum())

    def verify(self) -> bool:
        return abs(self.regret - (self.cumulative_loss - self.best_hindsight)) < 1e-9


def exact_best_threshold_loss(domain: Domain, xs: np.ndarray, ys: np.ndarray) -> float:
    """Minimum mistakes of any threshold on the realized sequence, O(T + N).

    Sweeping the cut across sorted atoms, mistakes(cut) = (+1-labeled mass
    below the cut) + (-1-labeled mass at or above it); prefix sums give all
    N+1 values at once.
    """
    coords = domain.coordinates()
    order = np.argsort(coords, kind="stable")
    pos = np.empty(domain.n_atoms, dtype=np.int64)
    pos[order] = np.arange(domain.n_atoms)
    plus = np.bincount(pos[xs[ys > 0]], minlength=domain.n_atoms)
    minus = np.bincount(pos[xs[ys < 0]], minlength=domain.n_atoms)
    plus_below = np.concatenate([[0], np.cumsum(plus)])
    minus_at_or_above = np.concatenate([np.cumsum(minus[::-1])[::-1], [0]])
    return float(np.min(plus_below + minus_at_or_above))


def best_in_hindsight(
    cls: HypothesisClass, cover: Cover, xs: np.ndarray, ys: np.ndarray
) -> tuple[float, bool]:
    if isinstance(cls, ThresholdClass):
        return exact_best_threshold_loss(cls.domain, xs, ys), True
    # Approximate argmin: cover members plus the enumerable class members.
    candidates = list(cover.members)
    try:
        candidates += cls.enumerate_hypotheses()
    except NotImplementedError:
        pass
    best = math.inf
    for h in candidates:
        preds = h.predictions()
        best = min(best, float(np.sum(preds[xs] != ys)))
    return best, False


def smooth_online_play(
    cls: HypothesisClass,
    sigma: float,
    horizon: int,
    adversary: Adversary,
    rng: np.random.Generator,
    cover: Cover | None = None,
    sample_size: int | None = None,
    seed: int | None = None,
) -> RegretRecord:
    """Run Hedge over a gamma-cover for T rounds against the adversary.

    gamma = sigma / (4 sqrt(T)).  Each round: the learner samples a cover
    member from its weights, the adversary emits a distribution (checked
    against its promised smoothness; a violation raises, it is a contract
    breach) and a labeling, an instance is drawn, and the full loss vector
    over cover members feeds the Hedge update.
    """
    validate_sigma(sigma)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    gamma = sigma / (4.0 * math.sqrt(horizon))
    if cover is None:
        cover = build_cover(cls, gamma, m=sample_size, rng=rng)
    state = initial_learner_state(cover, horizon)
    preds = cover.prediction_matrix()  # (N, K), 1 = predicts +1

    adversary.start(cls.domain, rng)
    losses = np.zeros(horizon)
    xs = np.zeros(horizon, dtype=np.int64)
    ys = np.zeros(horizon, dtype=np.int8)
    played = np.zeros(horizon, dtype=np.int64)

    for t in range(horizon):
        dist, labels = adversary.emit()
        if adversary.sigma is not None and not is_sigma_smooth(dist, adversary.sigma):
            raise SmoothnessContractError(
                f"adversary {adversary.kind!r} emitted a non-smooth distribution at round {t + 1}"
            )
        i_t = int(np.searchsorted(np.cumsum(state.weights), rng.random(), side="right"))
        i_t = min(i_t, len(cover) - 1)
        x = dist.sample_index(rng)
        y = int(labels[x])
        loss_vec = (preds[x] ^ (y > 0)).astype(np.float64)
        losses[t] = loss_vec[i_t]
        xs[t], ys[t], played[t] = x, y, i_t
        state = hedge_update(state, loss_vec)
        adversary.observe(cover.members[i_t], x, y)

    best, exact = best_in_hindsight(cls, cover, xs, ys)
    total = float(losses.sum())
    return RegretRecord(
        losses=losses,
        xs=xs,
        ys=ys,
        played=played,
        best_hindsight=best,
        best_is_exact=exact,
        regret=total - best,
        cover_size=len(cover),
        seed=seed,
        config={
            "class": cls.class_id(),
            "sigma": sigma,
            "T": horizon,
            "gamma": gamma,
            "adversary": adversary.kind,
            "cover_size": len(cover),
        },
    )


# ---------------------------------------------------------------------------
# Worst-case baseline: halving learner vs the point-mass adversary.
# ---------------------------------------------------------------------------

class HalvingLearner:
    """Deterministic learner predicting the version-space majority vote."""

    def __init__(self, domain: Domain):
        coords = domain.coordinates()
        self._order = np.argsort(coords, kind="stable")
        self._positions = np.empty(domain.n_atoms, dtype=np.int64)
        self._positions[self._order] = np.arange(domain.n_atoms)
        self._lo, self._hi = 0, domain.n_atoms

    @property
    def version_space_size(self) -> int:
        return self._hi - self._lo + 1

    def predict_index(self, x_index: int) -> int:
        p = int(self._positions[x_index])
        plus = max(0, min(p, self._hi) - self._lo + 1)
        minus = (self._hi - self._lo + 1) - plus
        return 1 if plus >= minus else -1

    def observe(self, x_index: int, y: int) -> None:
        p = int(self._positions[x_index])
        if y > 0:
            self._hi = min(self._hi, p)
        else:
            self._lo = max(self._lo, p + 1)


@dataclass
class DuelRecord:
    mistakes: int
    rounds: int
    exhausted_at: int | None


def binary_search_duel(domain: Domain, horizon: int) -> DuelRecord:
    """Deterministic replay of the precision lower bound: one mistake per round.

    The point-mass adversary keeps probing the middle of the halving
    learner's uncertainty interval until the grid resolution runs out.
    """
    adversary = BinarySearchAdversary(horizon)
    adversary.start(domain, np.random.default_rng(0))  # rng unused: fully deterministic
    learner = HalvingLearner(domain)
    mistakes = 0
    for _ in range(horizon):
        dist, labels = adversary.emit()
        x = int(np.argmax(dist.weights))  # point mass
        y = int(labels[x])
        if learner.predict_index(x) != y:
            mistakes += 1
        learner.observe(x, y)
        adversary.observe(None, x, y)
    return DuelRecord(mistakes=mistakes, rounds=horizon, exhausted_at=adversary.exhausted_at)


# ---------------------------------------------------------------------------
# Adaptive max-deviation estimation for small-measure function families.
# ---------------------------------------------------------------------------

class DeviationStrategy:
    """Adaptive instance-chooser for the max-deviation experiment."""

    def start(
        self, domain: Domain, bits: np.ndarray, sigma: float, rng: np.random.Generator
    ) -> None:
        raise NotImplementedError

    def emit(self, counts: np.ndarray) -> Dist:
        raise NotImplementedError


class UniformDeviationStrategy(DeviationStrategy):
    """Non-adaptive baseline: always the uniform distribution."""

    def start(self, domain, bits, sigma, rng):
        self._uniform = domain.uniform()

    def emit(self, counts):
        return self._uniform


class GreedyConcentrationStrategy(DeviationStrategy):
    """Concentrates all smoothness-allowed mass on the currently-leading function.

    Each round it targets the support of argmax-count f (ties to the lowest
    index) with the cap-filled smooth distribution; distributions are cached
    per target.
    """

    def start(self, domain, bits, sigma, rng):
        self._dists = [
            cap_concentrated_dist(domain, row.astype(bool), sigma) for row in bits
        ]

    def emit(self, counts):
        return self._dists[int(np.argmax(counts))]


def max_deviation_monte_carlo(
    functions: Sequence,
    strategy: DeviationStrategy,
    horizon: int,
    trials: int,
    eps: float,
    sigma: float,
    rng: np.random.Generator,
    domain: Domain | None = None,
) -> float:
    """Empirical mean over trials of max_f sum_t f(x_t) under the strategy.

    Preconditions checked exactly: every function has uniform measure at most
    eps, and eps <= sigma.  Every emitted distribution must be sigma-smooth.
    """
    validate_sigma(sigma)
    if eps > sigma:
        raise ValueError("eps must not exceed sigma")
    if domain is None:
        first = functions[0]
        if not isinstance(first, Hypothesis):
            raise ValueError("pass domain= when functions are plain bit vectors")
        domain = first.domain
    uniform = domain.uniform()
    rows = []
    for f in functions:
        measure = query_value(f, uniform)
        if measure > eps + 1e-12:
            raise ValueError(
                f"function has uniform measure {measure}, above the promised {eps}"
            )
        rows.append(
            f.query_bits() if isinstance(f, Hypothesis) else np.asarray(f, dtype=np.uint8)
        )
    bits = np.stack(rows)

    totals = np.zeros(trials)
    for trial in range(trials):
        strategy.start(domain, bits, sigma, rng)
        counts = np.zeros(bits.shape[0], dtype=np.int64)
        for _ in range(horizon):
            dist = strategy.emit(counts)
            if not is_sigma_smooth(dist, sigma):
                raise SmoothnessContractError("deviation strategy emitted a non-smooth distribution")
            x = dist.sample_index(rng)
            counts += bits[:, x]
        totals[trial] = counts.max()
    return float(totals.mean())
