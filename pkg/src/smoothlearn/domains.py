"""Finite instance spaces, distributions over them, and smoothness predicates.

Everything downstream (hypothesis classes, covers, adversaries, private
mechanisms) works over a finite ordered set of atoms.  Continuous spaces are
represented by uniform discretizations; the uniform distribution plays the
role of the base measure, so a distribution is sigma-smooth exactly when no
atom carries more than ``1 / (sigma * N)`` probability.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-12
SMOOTHNESS_TOL = 1e-12


class DomainMismatchError(ValueError):
    """A query, hypothesis, or distribution was used with the wrong domain."""


def validate_sigma(sigma: float) -> float:
    """Check that a smoothness parameter lies in (0, 1] and return it."""
    sigma = float(sigma)
    if not (0.0 < sigma <= 1.0) or math.isnan(sigma):
        raise ValueError(f"smoothness parameter must lie in (0, 1], got {sigma}")
    return sigma


def smoothness_cap(sigma: float, n_atoms: int) -> float:
    """Per-atom probability cap 1/(sigma*N) for sigma-smooth distributions.

    All smoothness checks and projections use this one expression so the cap
    is bitwise consistent across the library.
    """
    return 1.0 / (validate_sigma(sigma) * n_atoms)


class Domain:
    """An ordered finite set of atoms, optionally embedded in R^m.

    Atom identifiers are strings (constructors coerce), must be unique, and
    must contain no whitespace so they serialize as single tokens.  A domain
    may carry a label channel: each atom then also has a label in {-1, +1},
    which is how product instance-times-label spaces are represented.
    Domains are immutable after construction and safe to share across threads.
    """

    __slots__ = ("atoms", "embedding", "labels", "_index")

    def __init__(
        self,
        atoms: Iterable[object],
        embedding: np.ndarray | Sequence[Sequence[float]] | None = None,
        labels: np.ndarray | Sequence[int] | None = None,
    ):
        ids = tuple(str(a) for a in atoms)
        if len(ids) < 1:
            raise ValueError("a domain needs at least one atom")
        for a in ids:
            if not a or any(ch.isspace() for ch in a):
                raise ValueError(f"atom id {a!r} is empty or contains whitespace")
        index = {a: i for i, a in enumerate(ids)}
        if len(index) != len(ids):
            raise ValueError("atom identifiers must be unique")
        self.atoms = ids
        self._index = index

        if embedding is not None:
            emb = np.asarray(embedding, dtype=np.float64)
            if emb.ndim == 1:
                emb = emb[:, None]
            if emb.shape[0] != len(ids) or emb.ndim != 2 or emb.shape[1] < 1:
                raise ValueError(
                    f"embedding must have shape (N, m) with m >= 1, got {emb.shape}"
                )
            emb.setflags(write=False)
            self.embedding = emb
        else:
            self.embedding = None

        if labels is not None:
            lab = np.asarray(labels, dtype=np.int8)
            if lab.shape != (len(ids),) or not np.all(np.abs(lab) == 1):
                raise ValueError("labels must be a length-N vector of +/-1")
            lab.setflags(write=False)
            self.labels = lab
        else:
            self.labels = None

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def embedding_dim(self) -> int:
        if self.embedding is None:
            raise ValueError("domain has no embedding")
        return self.embedding.shape[1]

    @property
    def has_label_channel(self) -> bool:
        return self.labels is not None

    def index(self, atom: object) -> int:
        try:
            return self._index[str(atom)]
        except KeyError:
            raise DomainMismatchError(f"atom {atom!r} does not belong to this domain")

    def coordinates(self) -> np.ndarray:
        """1-D coordinates; only valid for domains embedded in R^1."""
        if self.embedding is None or self.embedding.shape[1] != 1:
            raise ValueError("domain is not embedded on a line")
        return self.embedding[:, 0]

    @classmethod
    def unit_interval_grid(cls, n: int) -> "Domain":
        """Uniform midpoint grid on [0, 1]: atom i sits at (i + 1/2) / n."""
        if n < 1:
            raise ValueError("grid size must be >= 1")
        coords = (np.arange(n, dtype=np.float64) + 0.5) / n
        return cls([str(i) for i in range(n)], embedding=coords)

    @classmethod
    def from_points(cls, points: np.ndarray, ids: Sequence[object] | None = None) -> "Domain":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if ids is None:
            ids = [str(i) for i in range(pts.shape[0])]
        return cls(ids, embedding=pts)

    def with_label_channel(self) -> "Domain":
        """Product domain of (atom, label) pairs with 2N atoms.

        Error indicators 1(h(x) != y) become ordinary 0/1 queries here, so the
        same query-evaluation code path serves learning and privacy uses.
        """
        if self.has_label_channel:
            raise ValueError("domain already has a label channel")
        ids = [f"{a}|{s}" for a in self.atoms for s in ("+1", "-1")]
        labels = np.tile(np.array([1, -1], dtype=np.int8), self.n_atoms)
        emb = None
        if self.embedding is not None:
            emb = np.repeat(self.embedding, 2, axis=0)
        return Domain(ids, embedding=emb, labels=labels)

    def uniform(self) -> "Dist":
        return Dist(self, np.full(self.n_atoms, 1.0 / self.n_atoms))

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Domain):
            return NotImplemented
        if self.atoms != other.atoms:
            return False
        if (self.embedding is None) != (other.embedding is None):
            return False
        if self.embedding is not None and not np.array_equal(self.embedding, other.embedding):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return True

    def __hash__(self):
        return hash(self.atoms)

    def __repr__(self):
        m = self.embedding.shape[1] if self.embedding is not None else 0
        return f"Domain(N={self.n_atoms}, m={m}, labeled={self.has_label_channel})"


def _check_same_domain(a: Domain, b: Domain) -> None:
    if a is not b and a != b:
        raise DomainMismatchError("objects live on different domains")


class Dist:
    """A probability vector over a domain's atoms.

    Weights must be non-negative; the constructor renormalizes totals that
    drift beyond additive 1e-12 rather than rejecting them, and leaves
    already-normalized vectors untouched bit-for-bit (serialization and exact
    mass accounting rely on that).  Instances are immutable; sampling takes a
    caller-owned numpy Generator.
    """

    __slots__ = ("domain", "weights", "_cdf", "_max")

    def __init__(self, domain: Domain, weights: np.ndarray | Sequence[float]):
        w = np.array(weights, dtype=np.float64)
        if w.shape != (domain.n_atoms,):
            raise ValueError(
                f"weights shape {w.shape} does not match domain size {domain.n_atoms}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        lowest = w.min()
        if lowest < 0.0:
            if lowest < -NORMALIZATION_TOL:
                raise ValueError(f"weights must be non-negative, got min {lowest}")
            w = np.maximum(w, 0.0)
        total = w.sum()
        if total <= 0.0:
            raise ValueError("weights must have positive total mass")
        if abs(total - 1.0) > NORMALIZATION_TOL:
            w /= total
        w.setflags(write=False)
        self.domain = domain
        self.weights = w
        self._cdf = None
        self._max = None

    @classmethod
    def uniform(cls, domain: Domain) -> "Dist":
        return domain.uniform()

    @classmethod
    def point_mass(cls, domain: Domain, index: int) -> "Dist":
        w = np.zeros(domain.n_atoms)
        w[index] = 1.0
        return cls(domain, w)

    @classmethod
    def from_counts(cls, domain: Domain, counts: np.ndarray | Sequence[float]) -> "Dist":
        return cls(domain, np.asarray(counts, dtype=np.float64))

    @property
    def max_weight(self) -> float:
        if self._max is None:
            self._max = float(self.weights.max())
        return self._max

    def _cumulative(self) -> np.ndarray:
        if self._cdf is None:
            self._cdf = np.cumsum(self.weights)
        return self._cdf

    def sample_index(self, rng: np.random.Generator) -> int:
        """Draw one atom index; deterministic given the rng state."""
        u = rng.random()
        i = int(np.searchsorted(self._cumulative(), u, side="right"))
        return min(i, self.domain.n_atoms - 1)

    def sample_indices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        idx = np.searchsorted(self._cumulative(), u, side="right")
        return np.minimum(idx, self.domain.n_atoms - 1)

    def total_variation(self, other: "Dist") -> float:
        _check_same_domain(self.domain, other.domain)
        return 0.5 * float(np.abs(self.weights - other.weights).sum())

    def __repr__(self):
        return f"Dist(N={self.domain.n_atoms}, max={self.max_weight:.4g})"


def sample(dist: Dist, rng: np.random.Generator) -> str:
    """Draw one atom id from ``dist`` using the caller's random source."""
    return dist.domain.atoms[dist.sample_index(rng)]


def is_sigma_smooth(dist: Dist, sigma: float) -> bool:
    """True iff no atom exceeds the density cap 1/(sigma*N) (tolerance 1e-12)."""
    cap = smoothness_cap(sigma, dist.domain.n_atoms)
    return dist.max_weight <= cap + SMOOTHNESS_TOL


def query_value(q, dist: Dist) -> float:
    """Expected value of a 0/1 query under ``dist``: sum_x dist(x) * q(x).

    ``q`` may be a Hypothesis (its predicts-plus view is used) or a length-N
    0/1 vector.  Deterministic; raises DomainMismatchError on a wrong domain.
    """
    bits = as_query_bits(q, dist.domain)
    return float(np.dot(dist.weights, bits))


def as_query_bits(q, domain: Domain) -> np.ndarray:
    """Coerce a query (Hypothesis or 0/1 vector) to a float vector over atoms."""
    qb = getattr(q, "query_bits", None)
    if callable(qb):
        _check_same_domain(q.domain, domain)
        return q.query_bits().astype(np.float64)
    arr = np.asarray(q, dtype=np.float64)
    if arr.shape != (domain.n_atoms,):
        raise DomainMismatchError(
            f"query of length {arr.shape} does not match domain size {domain.n_atoms}"
        )
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValueError("queries must be 0/1 valued")
    return arr


class Dataset:
    """A multiset of atoms, stored as an index array.

    ``empirical()`` is the normalized histogram; a dataset whose empirical
    distribution is itself sigma-smooth witnesses (sigma, 0)-smoothness with
    respect to every query class.
    """

    __slots__ = ("domain", "records")

    def __init__(self, domain: Domain, records: np.ndarray | Sequence[int]):
        rec = np.asarray(records, dtype=np.int64)
        if rec.ndim != 1 or rec.size < 1:
            raise ValueError("a dataset needs at least one record")
        if rec.min() < 0 or rec.max() >= domain.n_atoms:
            raise DomainMismatchError("record index outside the domain")
        rec.setflags(write=False)
        self.domain = domain
        self.records = rec

    @property
    def n(self) -> int:
        return int(self.records.size)

    @classmethod
    def from_atoms(cls, domain: Domain, atoms: Iterable[object]) -> "Dataset":
        return cls(domain, [domain.index(a) for a in atoms])

    @classmethod
    def from_counts(cls, domain: Domain, counts: np.ndarray | Sequence[int]) -> "Dataset":
        c = np.asarray(counts, dtype=np.int64)
        if c.shape != (domain.n_atoms,) or c.min() < 0:
            raise ValueError("counts must be a non-negative length-N vector")
        return cls(domain, np.repeat(np.arange(domain.n_atoms), c))

    def counts(self) -> np.ndarray:
        return np.bincount(self.records, minlength=self.domain.n_atoms)

    def empirical(self) -> Dist:
        return Dist(self.domain, self.counts().astype(np.float64))

    def __repr__(self):
        return f"Dataset(n={self.n}, N={self.domain.n_atoms})"


def make_smooth_dataset(
    domain: Domain, sigma: float, n: int, rng: np.random.Generator
) -> Dataset:
    """Sample an n-record dataset whose empirical distribution is sigma-smooth.

    Atom counts are filled by repeated sampling from a random smooth shape,
    rejecting atoms already at the integer cap floor(n/(sigma*N)), so the
    result is (sigma, 0)-smooth with its own empirical distribution as the
    witness.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = smoothness_cap(sigma, domain.n_atoms)
    count_cap = int(math.floor(n * cap))
    if count_cap < 1 or count_cap * domain.n_atoms < n:
        raise ValueError(
            f"no sigma-smooth dataset of size {n} exists on {domain.n_atoms} atoms"
        )
    shape = rng.dirichlet(np.ones(domain.n_atoms))
    base = Dist(domain, shape + 1e-12)
    counts = np.zeros(domain.n_atoms, dtype=np.int64)
    filled = 0
    while filled < n:
        idx = base.sample_indices(rng, n - filled)
        for i in idx:
            if counts[i] < count_cap:
                counts[i] += 1
                filled += 1
    return Dataset.from_counts(domain, counts)


def make_two_level_dataset(
    domain: Domain,
    sigma: float,
    n: int,
    heavy_fraction: float = 0.1,
    heavy_mass: float = 0.8,
) -> Dataset:
    """Deterministic n-record discretization of a fixed two-level density.

    The first ``heavy_fraction`` of atoms (by index) share ``heavy_mass`` of
    the probability, the rest share the remainder; records are placed by
    systematic (quota) sampling against the cumulative weights, which spreads
    rounding evenly even when n is far below the atom count.  Because the
    underlying density is fixed on [0, 1], datasets built at different grid
    resolutions describe the same scenario, which is what domain-size
    comparisons need.  The empirical distribution is verified sigma-smooth,
    so the dataset is (sigma, 0)-smooth with itself as witness.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n_atoms = domain.n_atoms
    heavy = max(1, int(round(heavy_fraction * n_atoms)))
    w = np.empty(n_atoms)
    w[:heavy] = heavy_mass / heavy
    w[heavy:] = (1.0 - heavy_mass) / max(1, n_atoms - heavy)
    quantiles = (np.arange(n) + 0.5) / n
    atoms = np.searchsorted(np.cumsum(w), quantiles, side="right")
    counts = np.bincount(np.minimum(atoms, n_atoms - 1), minlength=n_atoms)
    dataset = Dataset.from_counts(domain, counts)
    if not is_sigma_smooth(dataset.empirical(), sigma):
        raise ValueError(
            "two-level dataset is not sigma-smooth at these parameters; "
            "lower heavy_mass or raise sigma"
        )
    return dataset


# ---------------------------------------------------------------------------
# Line-oriented text serialization.
#
# Header ``N=<int> m=<int>`` followed by one line per atom:
#   ``id coord_1 ... coord_m weight``
# Floats are written with 17 significant digits, which round-trips IEEE
# doubles bit-exactly.  A bare domain serializes with uniform weights.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dist_to_text(dist: Dist) -> str:
    dom = dist.domain
    m = dom.embedding.shape[1] if dom.embedding is not None else 0
    lines = [f"N={dom.n_atoms} m={m}"]
    for i, a in enumerate(dom.atoms):
        coords = (
            [_fmt(c) for c in dom.embedding[i]] if dom.embedding is not None else []
        )
        lines.append(" ".join([a, *coords, _fmt(dist.weights[i])]))
    return "\n".join(lines) + "\n"


def domain_to_text(domain: Domain) -> str:
    return dist_to_text(domain.uniform())


def dist_from_text(text: str) -> Dist:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty serialization")
    header = dict(part.split("=", 1) for part in lines[0].split())
    n, m = int(header["N"]), int(header["m"])
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} atom lines, found {len(lines) - 1}")
    ids, coords, weights = [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != m + 2:
            raise ValueError(f"malformed atom line: {ln!r}")
        ids.append(parts[0])
        coords.append([float(c) for c in parts[1 : 1 + m]])
        weights.append(float(parts[-1]))
    labels = _labels_from_ids(ids)
    domain = Domain(ids, embedding=np.array(coords) if m else None, labels=labels)
    return Dist(domain, weights)


def domain_from_text(text: str) -> Domain:
    return dist_from_text(text).domain


def _labels_from_ids(ids: Sequence[str]) -> np.ndarray | None:
    # Product domains encode the label bit in the id suffix; recover it so
    # label domains round-trip through the same format.
    out = []
    for a in ids:
        if a.endswith("|+1"):
            out.append(1)
        elif a.endswith("|-1"):
            out.append(-1)
        else:
            return None
    return np.array(out, dtype=np.int8)


def save_dist(path, dist: Dist) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dist_to_text(dist))


def load_dist(path) -> Dist:
    with open(path, "r", encoding="ascii") as fh:
        return dist_from_text(fh.read())
