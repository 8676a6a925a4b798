"""Cover construction by uniform sampling and consistency-oracle labeling.

A gamma-cover of a class is built by drawing sample points uniformly from the
domain and expanding a hierarchical labeling tree: each level labels one more
sampled point +1 or -1, nodes whose partial labeling admits no consistent
hypothesis are pruned, and each surviving leaf contributes the oracle's
canonical hypothesis for its labeling.  The member count is therefore the
number of realized labelings, which Sauer-Shelah bounds by sum_{i<=vc} C(m,i).
"""

from __future__ import annotations

import math

import numpy as np

from .domains import Dist, Domain, _check_same_domain
from .hypotheses import Hypothesis, HypothesisClass

DEFAULT_SAMPLE_CONSTANT = 8.0


class Cover:
    """A finite set of in-class hypotheses used as a proxy for the class.

    ``gamma`` is the target radius under the uniform distribution.  The
    prediction matrix (atoms x members, 1 = predicts +1) is materialized
    lazily and cached; instances are immutable after construction.
    """

    def __init__(
        self,
        members: list[Hypothesis],
        gamma: float,
        class_id: str,
        sample_size: int,
        distinct_sampled: int,
    ):
        if not members:
            raise ValueError("a cover needs at least one member")
        self.members = tuple(members)
        self.gamma = float(gamma)
        self.class_id = class_id
        self.sample_size = int(sample_size)
        self.distinct_sampled = int(distinct_sampled)
        self.domain = members[0].domain
        self._prediction_matrix: np.ndarray | None = None
        self._threshold_cache: dict[int, tuple] = {}

    def __len__(self) -> int:
        return len(self.members)

    def prediction_matrix(self) -> np.ndarray:
        """uint8 matrix P of shape (N, K): P[x, i] = 1 iff member i is +1 at x."""
        if self._prediction_matrix is None:
            cols = [m.query_bits() for m in self.members]
            mat = np.stack(cols, axis=1)
            mat.setflags(write=False)
            self._prediction_matrix = mat
        return self._prediction_matrix

    def all_thresholds(self) -> bool:
        return all(m.family == "threshold1d" for m in self.members)

    def __repr__(self):
        return f"Cover({self.class_id}, size={len(self)}, gamma={self.gamma:.3g})"


def default_cover_sample_size(vc_dim: int, gamma: float, c: float = DEFAULT_SAMPLE_CONSTANT) -> int:
    """Default draw count ceil(c * vc * log(1/gamma) / gamma^2)."""
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    return max(1, math.ceil(c * vc_dim * math.log(1.0 / gamma) / gamma**2))


def sample_distinct_uniform(
    domain: Domain, m: int, rng: np.random.Generator
) -> np.ndarray:
    """Distinct atoms hit by m uniform draws with replacement.

    Draws in chunks and stops once every atom has appeared; further draws
    cannot change the distinct set, so early termination is exact even for
    astronomically large m.
    """
    n = domain.n_atoms
    seen = np.zeros(n, dtype=bool)
    order: list[int] = []
    drawn = 0
    while drawn < m and len(order) < n:
        chunk = int(min(m - drawn, 1 << 16))
        idx = rng.integers(0, n, size=chunk)
        drawn += chunk
        for i in idx:
            if not seen[i]:
                seen[i] = True
                order.append(int(i))
    return np.array(order, dtype=np.int64)


def _sauer_shelah_bound(m: int, vc_dim: int) -> int:
    return sum(math.comb(m, i) for i in range(min(vc_dim, m) + 1))


def build_cover(
    cls: HypothesisClass,
    gamma: float,
    m: int | None = None,
    rng: np.random.Generator | None = None,
) -> Cover:
    """Build a gamma-cover of ``cls`` under the uniform distribution.

    One consistent hypothesis is returned per realized labeling of the
    sample.  Pruning guarantees the oracle succeeds on every reachable node;
    an oracle failure at a leaf is a programming error, not a data condition.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if m is None:
        m = default_cover_sample_size(cls.vc_dim, gamma)
    if m < 1:
        raise ValueError("sample size m must be >= 1")
    if rng is None:
        raise ValueError("cover construction needs an explicit random source")

    distinct = sample_distinct_uniform(cls.domain, m, rng)
    order = cls.tree_order(distinct)
    states = cls.tree_leaves(order)
    members = [cls.tree_hypothesis(st) for st in states]
    assert all(h is not None for h in members)
    if cls.vc_dim <= 4:  # keep the big-binomial check cheap
        assert len(members) <= _sauer_shelah_bound(len(distinct), cls.vc_dim)
    return Cover(
        members,
        gamma=gamma,
        class_id=cls.class_id(),
        sample_size=m,
        distinct_sampled=len(distinct),
    )


def disagreement_mass(a: Hypothesis, b: Hypothesis, mu: Dist) -> float:
    """Pr_{x ~ mu}[a(x) != b(x)], computed exactly on the finite domain."""
    _check_same_domain(a.domain, mu.domain)
    _check_same_domain(b.domain, mu.domain)
    diff = a.query_bits() != b.query_bits()
    return float(np.dot(mu.weights, diff))


def nearest_in_cover(
    h: Hypothesis, cover: Cover, mu: Dist
) -> tuple[Hypothesis, float]:
    """Closest cover member to ``h`` in mu-disagreement; ties -> lowest index."""
    member, dist, _ = nearest_in_cover_indexed(h, cover, mu)
    return member, dist


def nearest_in_cover_indexed(
    h: Hypothesis, cover: Cover, mu: Dist
) -> tuple[Hypothesis, float, int]:
    if len(cover) == 0:
        raise ValueError("cover is empty")
    _check_same_domain(h.domain, cover.domain)
    _check_same_domain(h.domain, mu.domain)
    if h.family == "threshold1d" and cover.all_thresholds():
        dists = _threshold_distances(h, cover, mu)
    else:
        diff = cover.prediction_matrix() != h.query_bits()[:, None]
        dists = mu.weights @ diff
    i = int(np.argmin(dists))  # argmin takes the first minimum: lowest index
    return cover.members[i], float(dists[i]), i


def _threshold_prefix_mass(b: float, sorted_coords: np.ndarray, prefix: np.ndarray) -> float:
    # mass of atoms with coordinate < b, i.e. atoms the threshold labels -1
    i = int(np.searchsorted(sorted_coords, b, side="left"))
    return float(prefix[i])


def _threshold_structure(cover: Cover, mu: Dist) -> tuple:
    # Sorted coordinates, prefix masses, and per-member below-cut masses,
    # cached per measure object (the measure is held, so ids stay valid).
    cached = cover._threshold_cache.get(id(mu))
    if cached is not None:
        return cached
    coords = mu.domain.coordinates()
    order = np.argsort(coords, kind="stable")
    sorted_coords = coords[order]
    prefix = np.concatenate([[0.0], np.cumsum(mu.weights[order])])
    cuts = np.array([m.params[0] for m in cover.members])
    member_mass = prefix[np.searchsorted(sorted_coords, cuts, side="left")]
    entry = (mu, sorted_coords, prefix, member_mass)
    cover._threshold_cache[id(mu)] = entry
    return entry


def _threshold_distances(h: Hypothesis, cover: Cover, mu: Dist) -> np.ndarray:
    # Two thresholds disagree exactly on the atoms between their cut points,
    # so the disagreement mass is the difference of below-cut prefix masses.
    _, sorted_coords, prefix, member_mass = _threshold_structure(cover, mu)
    own = _threshold_prefix_mass(h.params[0], sorted_coords, prefix)
    return np.abs(member_mass - own)


def cover_radius(cover: Cover, hypotheses: list[Hypothesis], mu: Dist) -> float:
    """Exact max over the given hypotheses of the distance to the cover."""
    worst = 0.0
    for h in hypotheses:
        _, d, _ = nearest_in_cover_indexed(h, cover, mu)
        worst = max(worst, d)
    return worst
