"""Bracketings of hypothesis classes: construction, composition, verification.

A bracket is a pair of 0/1 functions lower <= upper (pointwise, exact integer
comparison); its gap is the measure of the disagreement set.  A bracketing at
level epsilon covers every class member between some pair with gap <= epsilon.

Constructions here: the 1-D threshold base case, k-fold intersection/union
composition, symmetric differences (via complementation and composition), and
pullback along an atom map into an embedded image domain.  Gap arithmetic uses
exact rational accumulation (for slab construction) and exactly-rounded
``math.fsum`` (for verification), so the "gap <= epsilon" claims hold without
floating-point slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .domains import Dist, Domain, _check_same_domain
from .hypotheses import Hypothesis, HypothesisClass


def exact_mass(weights: np.ndarray, mask: np.ndarray) -> float:
    """Exactly-rounded sum of the selected weights."""
    sel = weights[mask]
    return math.fsum(sel.tolist()) if sel.size else 0.0


class Bracket:
    """A pointwise-ordered pair of 0/1 functions with its disagreement mass."""

    __slots__ = ("lower", "upper", "gap_measure")

    def __init__(self, lower: np.ndarray, upper: np.ndarray, gap_measure: float):
        lo = np.asarray(lower, dtype=np.uint8)
        up = np.asarray(upper, dtype=np.uint8)
        if lo.shape != up.shape or lo.ndim != 1:
            raise ValueError("bracket bounds must be equal-length bit vectors")
        if np.any(lo > up):
            raise ValueError("bracket violates pointwise domination lower <= upper")
        lo.setflags(write=False)
        up.setflags(write=False)
        self.lower = lo
        self.upper = up
        self.gap_measure = float(gap_measure)

    def contains_bits(self, bits: np.ndarray) -> bool:
        return bool(np.all(self.lower <= bits) and np.all(bits <= self.upper))


class Bracketing:
    """A list of epsilon-brackets for a class under a fixed measure."""

    def __init__(
        self, brackets: Sequence[Bracket], epsilon: float, measure: Dist, class_id: str
    ):
        if not brackets:
            raise ValueError("a bracketing needs at least one bracket")
        n = measure.domain.n_atoms
        for br in brackets:
            if br.lower.shape != (n,):
                raise ValueError("bracket length does not match the measure's domain")
        self.brackets = list(brackets)
        self.epsilon = float(epsilon)
        self.measure = measure
        self.class_id = class_id
        self._lowers: np.ndarray | None = None
        self._uppers: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.brackets)

    def lowers(self) -> np.ndarray:
        if self._lowers is None:
            self._lowers = np.stack([b.lower for b in self.brackets])
        return self._lowers

    def uppers(self) -> np.ndarray:
        if self._uppers is None:
            self._uppers = np.stack([b.upper for b in self.brackets])
        return self._uppers

    def __repr__(self):
        return f"Bracketing({self.class_id}, count={len(self)}, eps={self.epsilon:.4g})"


# ---------------------------------------------------------------------------
# Threshold base case.
# ---------------------------------------------------------------------------

def bracket_thresholds(epsilon: float, mu: Dist) -> Bracketing:
    """Epsilon-bracketing of all grid thresholds 1(x >= b) under ``mu``.

    Atoms are swept in coordinate order and packed greedily into slabs whose
    mass never exceeds epsilon; slab boundaries b_0 < b_1 < ... yield brackets
    [1(x >= b_{i+1}), 1(x >= b_i)].  Mass comparisons use exact rational
    arithmetic, so a slab closes exactly when one more atom would push it over
    epsilon.  Atoms heavier than epsilon get boundary cuts on both sides; the
    two thresholds around such an atom are covered by degenerate zero-gap
    brackets, never by a bracket spanning the heavy atom.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    domain = mu.domain
    coords = domain.coordinates()
    order = np.argsort(coords, kind="stable")
    w = mu.weights[order]
    n = domain.n_atoms

    eps_exact = Fraction(epsilon)
    boundaries = [0]
    skip: set[tuple[int, int]] = set()
    cur = Fraction(0)
    for p in range(n):
        wp = Fraction(float(w[p]))
        if wp > eps_exact:
            if boundaries[-1] != p:
                boundaries.append(p)
            boundaries.append(p + 1)
            skip.add((p, p + 1))
            cur = Fraction(0)
        elif cur + wp > eps_exact:
            boundaries.append(p)
            cur = wp
        else:
            cur += wp
    if boundaries[-1] != n:
        boundaries.append(n)

    def suffix_bits(pos: int) -> np.ndarray:
        bits = np.zeros(n, dtype=np.uint8)
        bits[order[pos:]] = 1
        return bits

    brackets: list[Bracket] = []
    covered: set[int] = set()
    for a, b in zip(boundaries, boundaries[1:]):
        if (a, b) in skip:
            continue
        gap = math.fsum(w[a:b].tolist())
        brackets.append(Bracket(suffix_bits(b), suffix_bits(a), gap))
        covered.update(range(a, b + 1))
    for j in boundaries:
        if j not in covered:
            bits = suffix_bits(j)
            brackets.append(Bracket(bits, bits, 0.0))
            covered.add(j)

    return Bracketing(brackets, epsilon, mu, class_id="threshold1d")


# ---------------------------------------------------------------------------
# Composition, complement, symmetric difference, pullback.
# ---------------------------------------------------------------------------

def _check_same_measure(a: Bracketing, b: Bracketing) -> None:
    _check_same_domain(a.measure.domain, b.measure.domain)
    if not np.array_equal(a.measure.weights, b.measure.weights):
        raise ValueError("bracketings must share one measure to compose")


def _pairwise_compose(a: Bracketing, b: Bracketing, op: str) -> Bracketing:
    combine = np.minimum if op == "intersection" else np.maximum
    la, ua = a.lowers(), a.uppers()
    lb, ub = b.lowers(), b.uppers()
    ka, kb = la.shape[0], lb.shape[0]
    lowers = combine(la[:, None, :], lb[None, :, :]).reshape(ka * kb, -1)
    uppers = combine(ua[:, None, :], ub[None, :, :]).reshape(ka * kb, -1)
    weights = a.measure.weights
    brackets = [
        Bracket(lo, up, exact_mass(weights, lo != up))
        for lo, up in zip(lowers, uppers)
    ]
    return Bracketing(
        brackets,
        a.epsilon + b.epsilon,
        a.measure,
        class_id=f"{op}({a.class_id},{b.class_id})",
    )


def compose_brackets(*bracketings: Bracketing, op: str) -> Bracketing:
    """Product bracketing under pointwise AND (intersection) or OR (union).

    The output has size prod |b_i| and level sum eps_i; each output gap is the
    recomputed disagreement mass, which the union bound keeps below the summed
    input levels.
    """
    if op not in ("intersection", "union"):
        raise ValueError(f"op must be 'intersection' or 'union', got {op!r}")
    if not bracketings:
        raise ValueError("need at least one bracketing")
    out = bracketings[0]
    for nxt in bracketings[1:]:
        _check_same_measure(out, nxt)
        out = _pairwise_compose(out, nxt, op)
    return out


def complement_bracketing(b: Bracketing) -> Bracketing:
    """Bracketing of the complemented class: swap and negate the bounds."""
    brackets = [
        Bracket(1 - br.upper, 1 - br.lower, br.gap_measure) for br in b.brackets
    ]
    return Bracketing(brackets, b.epsilon, b.measure, class_id=f"not({b.class_id})")


def sym_diff_bracketing(b: Bracketing) -> Bracketing:
    """Bracketing of pairwise symmetric differences {f XOR f'} at level 4*eps.

    Uses f XOR f' = (f OR f') AND NOT(f AND f'): compose the union bracketing
    with the complemented intersection bracketing.  Size is at most |b|^4.
    """
    union = _pairwise_compose(b, b, "union")
    inter = _pairwise_compose(b, b, "intersection")
    out = _pairwise_compose(union, complement_bracketing(inter), "intersection")
    out.class_id = f"sym_difference({b.class_id})"
    return out


@dataclass(frozen=True)
class AtomMap:
    """A map between finite domains, one image atom index per source atom."""

    source: Domain
    image: Domain
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.shape != (self.source.n_atoms,):
            raise ValueError("atom map needs one image index per source atom")
        if idx.min() < 0 or idx.max() >= self.image.n_atoms:
            raise ValueError("atom map points outside the image domain")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_point_map(cls, source: Domain, fn: Callable[[np.ndarray], np.ndarray]) -> "AtomMap":
        """Build the image domain from a coordinate map applied to the source.

        Distinct image points become image atoms (first-occurrence order).
        """
        if source.embedding is None:
            raise ValueError("point maps need an embedded source domain")
        pts = np.atleast_2d(np.asarray(fn(source.embedding), dtype=np.float64))
        if pts.shape[0] != source.n_atoms:
            raise ValueError("point map must return one point per source atom")
        keys = [tuple(row) for row in pts]
        uniq: dict[tuple, int] = {}
        idx = np.empty(source.n_atoms, dtype=np.int64)
        for i, key in enumerate(keys):
            if key not in uniq:
                uniq[key] = len(uniq)
            idx[i] = uniq[key]
        image_pts = np.array(list(uniq.keys()), dtype=np.float64)
        image = Domain.from_points(image_pts)
        return cls(source, image, idx)


def pushforward(amap: AtomMap, source_measure: Dist) -> Dist:
    """Image measure: each image atom's mass is the fsum of its preimages."""
    _check_same_domain(amap.source, source_measure.domain)
    w = np.zeros(amap.image.n_atoms)
    for z in range(amap.image.n_atoms):
        w[z] = exact_mass(source_measure.weights, amap.indices == z)
    return Dist(amap.image, w)


def pullback_bracketing(
    amap: AtomMap, b: Bracketing, source_measure: Dist
) -> Bracketing:
    """Pull a bracketing on the image domain back through the atom map.

    Requires the bracketing's measure to equal the pushforward of
    ``source_measure``; the preimage of each image disagreement set then has
    identical mass, so size, level, containment, and gaps are all preserved.
    """
    _check_same_domain(amap.source, source_measure.domain)
    _check_same_domain(amap.image, b.measure.domain)
    fwd = pushforward(amap, source_measure)
    if not np.allclose(fwd.weights, b.measure.weights, rtol=0.0, atol=1e-12):
        raise ValueError("bracketing measure is not the pushforward of the source measure")
    idx = amap.indices
    brackets = [
        Bracket(
            br.lower[idx],
            br.upper[idx],
            exact_mass(source_measure.weights, br.lower[idx] != br.upper[idx]),
        )
        for br in b.brackets
    ]
    return Bracketing(
        brackets, b.epsilon, source_measure, class_id=f"pullback({b.class_id})"
    )


# ---------------------------------------------------------------------------
# Verification.
# ---------------------------------------------------------------------------

@dataclass
class BracketingViolation:
    hypothesis_token: str
    witness_atom: str | None
    reason: str


@dataclass
class BracketingReport:
    passed: bool
    worst_gap: float
    n_checked: int
    violations: list[BracketingViolation] = field(default_factory=list)


def verify_bracketing(b: Bracketing, class_sample: Sequence[Hypothesis]) -> BracketingReport:
    """Containment and gap audit against a (possibly empty) class sample.

    Every gap is recomputed exactly; every sampled hypothesis must sit inside
    some bracket, else the nearest-miss bracket supplies a witness atom.  An
    empty sample yields a vacuous pass with the worst gap still reported.
    """
    weights = b.measure.weights
    atoms = b.measure.domain.atoms
    violations: list[BracketingViolation] = []

    worst_gap = 0.0
    for br in b.brackets:
        gap = exact_mass(weights, br.lower != br.upper)
        worst_gap = max(worst_gap, gap)
        if gap > b.epsilon:
            where = np.flatnonzero(br.lower != br.upper)
            violations.append(
                BracketingViolation(
                    hypothesis_token="<bracket>",
                    witness_atom=atoms[int(where[0])] if where.size else None,
                    reason=f"gap {gap!r} exceeds epsilon {b.epsilon!r}",
                )
            )

    lowers, uppers = b.lowers(), b.uppers()
    for h in class_sample:
        bits = h.query_bits()
        ok = np.all(lowers <= bits, axis=1) & np.all(bits <= uppers, axis=1)
        if not np.any(ok):
            bad = (lowers > bits) | (bits > uppers)
            best = int(np.argmin(bad.sum(axis=1)))
            witness = int(np.flatnonzero(bad[best])[0])
            violations.append(
                BracketingViolation(
                    hypothesis_token=h.token(),
                    witness_atom=atoms[witness],
                    reason=f"not contained in any bracket (closest: #{best})",
                )
            )

    return BracketingReport(
        passed=not violations,
        worst_gap=worst_gap,
        n_checked=len(class_sample),
        violations=violations,
    )


# ---------------------------------------------------------------------------
# Base-case registry and serialization.
# ---------------------------------------------------------------------------

_BASE_BUILDERS: dict[str, Callable[[HypothesisClass, float, Dist], Bracketing]] = {}


def register_base_bracketing(
    family: str, builder: Callable[[HypothesisClass, float, Dist], Bracketing]
) -> None:
    """Plug in a bracketing construction for a base family."""
    _BASE_BUILDERS[family] = builder


def build_base_bracketing(cls: HypothesisClass, epsilon: float, mu: Dist) -> Bracketing:
    builder = _BASE_BUILDERS.get(cls.family)
    if builder is None:
        raise NotImplementedError(
            f"no bracketing construction registered for family {cls.family!r}"
        )
    return builder(cls, epsilon, mu)


register_base_bracketing("threshold1d", lambda cls, eps, mu: bracket_thresholds(eps, mu))


def _rle_encode(bits: np.ndarray) -> str:
    runs: list[int] = []
    first = int(bits[0]) if bits.size else 0
    cur, count = first, 0
    for v in bits:
        if int(v) == cur:
            count += 1
        else:
            runs.append(count)
            cur, count = int(v), 1
    runs.append(count)
    return f"{first}:" + ",".join(str(r) for r in runs)


def _rle_decode(text: str, n: int) -> np.ndarray:
    head, _, body = text.partition(":")
    first = int(head)
    out = np.empty(n, dtype=np.uint8)
    pos, bit = 0, first
    for run in body.split(","):
        r = int(run)
        out[pos : pos + r] = bit
        pos += r
        bit ^= 1
    if pos != n:
        raise ValueError(f"run lengths sum to {pos}, expected {n}")
    return out


def bracketing_to_text(b: Bracketing) -> str:
    """Header ``epsilon=<real> count=<int>`` plus two RLE lines per bracket."""
    lines = [f"epsilon={format(b.epsilon, '.17g')} count={len(b)}"]
    for br in b.brackets:
        lines.append("lower=" + _rle_encode(br.lower))
        lines.append("upper=" + _rle_encode(br.upper))
    return "\n".join(lines) + "\n"


def bracketing_from_text(text: str, measure: Dist, class_id: str = "loaded") -> Bracketing:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(part.split("=", 1) for part in lines[0].split())
    epsilon = float(header["epsilon"])
    count = int(header["count"])
    n = measure.domain.n_atoms
    if len(lines) != 1 + 2 * count:
        raise ValueError("wrong number of bracket lines")
    brackets = []
    for i in range(count):
        lo_line, up_line = lines[1 + 2 * i], lines[2 + 2 * i]
        lo = _rle_decode(lo_line.removeprefix("lower="), n)
        up = _rle_decode(up_line.removeprefix("upper="), n)
        brackets.append(Bracket(lo, up, exact_mass(measure.weights, lo != up)))
    return Bracketing(brackets, epsilon, measure, class_id=class_id)
