"""Parametric hypothesis families over finite embedded domains.

Hypotheses map atoms to {-1, +1}; the 0/1 "query view" (1 where the
prediction is +1) is what distributions and private mechanisms consume.
Boundary ties break as sign(0) = +1 everywhere so behaviour on grids is
deterministic.

Families: 1-D thresholds, unions of k intervals, halfspaces over the domain
embedding, polynomial thresholds (monomial features of the embedding), and
k-fold intersections / unions / symmetric differences of other families.
Each intensional family carries a deterministic consistency oracle used by
cover construction.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .domains import Domain, DomainMismatchError, _check_same_domain

FEASIBILITY_MARGIN = 1e-9

_COMPOSED_FAMILIES = ("kfold_intersection", "kfold_union", "sym_difference")


class Hypothesis:
    """A single predicate: intensional (family + parameters) or extensional.

    The extensional materialization always agrees with intensional
    evaluation; it is computed lazily and cached, so hypotheses are cheap to
    create and immutable afterwards.
    """

    __slots__ = ("domain", "family", "params", "components", "_bits")

    def __init__(
        self,
        domain: Domain,
        family: str,
        params: Sequence[float] = (),
        components: Sequence["Hypothesis"] | None = None,
        bits: np.ndarray | None = None,
    ):
        self.domain = domain
        self.family = family
        self.params = tuple(float(p) for p in params)
        self.components = tuple(components) if components is not None else ()
        if bits is not None:
            b = np.asarray(bits, dtype=np.uint8)
            if b.shape != (domain.n_atoms,) or not np.all(b <= 1):
                raise ValueError("extensional bits must be a 0/1 vector over atoms")
            b.setflags(write=False)
            self._bits = b
        else:
            self._bits = None

    def query_bits(self) -> np.ndarray:
        """0/1 view over all atoms (1 where the hypothesis predicts +1)."""
        if self._bits is None:
            b = _evaluate_family(self).astype(np.uint8)
            b.setflags(write=False)
            self._bits = b
        return self._bits

    def predictions(self) -> np.ndarray:
        """+/-1 predictions over all atoms."""
        return self.query_bits().astype(np.int8) * 2 - 1

    def evaluate_index(self, i: int) -> int:
        return int(self.query_bits()[i]) * 2 - 1

    def evaluate(self, atom: object) -> int:
        return self.evaluate_index(self.domain.index(atom))

    def complement(self) -> "Hypothesis":
        return Hypothesis(self.domain, "extensional", bits=1 - self.query_bits())

    def token(self) -> str:
        return format_hypothesis(self)

    def __repr__(self):
        return f"Hypothesis({self.token()})"


def evaluate(h: Hypothesis, atom: object) -> int:
    """Sign of ``h`` on one atom, with the sign(0) = +1 tie-break."""
    return h.evaluate(atom)


def _evaluate_family(h: Hypothesis) -> np.ndarray:
    dom = h.domain
    if h.family == "threshold1d":
        (b,) = h.params
        return dom.coordinates() >= b
    if h.family == "interval_union_k":
        coords = dom.coordinates()
        out = np.zeros(dom.n_atoms, dtype=bool)
        for lo, hi in zip(h.params[0::2], h.params[1::2]):
            out |= (coords >= lo) & (coords < hi)
        return out
    if h.family == "halfspace":
        if dom.embedding is None:
            raise ValueError("halfspace hypotheses need an embedded domain")
        w = np.array(h.params[:-1])
        c = h.params[-1]
        return dom.embedding @ w - c >= 0.0
    if h.family == "poly_threshold":
        if dom.embedding is None:
            raise ValueError("polynomial thresholds need an embedded domain")
        d = int(h.params[0])
        w = np.array(h.params[1:-1])
        c = h.params[-1]
        return monomial_features(dom.embedding, d) @ w - c >= 0.0
    if h.family in _COMPOSED_FAMILIES:
        stack = [comp.query_bits().astype(bool) for comp in h.components]
        if h.family == "kfold_intersection":
            return np.logical_and.reduce(stack)
        if h.family == "kfold_union":
            return np.logical_or.reduce(stack)
        return np.logical_xor.reduce(stack)
    raise ValueError(f"unknown hypothesis family {h.family!r}")


# ---------------------------------------------------------------------------
# Monomial embedding for polynomial thresholds.
# ---------------------------------------------------------------------------

def monomial_exponents(n: int, d: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials of total degree 1..d in n variables.

    Graded order: degree ascending, lexicographic within a degree.  The
    constant monomial is excluded (it is absorbed by the halfspace offset).
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 variables and degree d >= 1")
    exps = []
    for g in range(1, d + 1):
        for combo in combinations_with_replacement(range(n), g):
            e = [0] * n
            for i in combo:
                e[i] += 1
            exps.append(tuple(e))
    return exps


def monomial_embed(x_vec: Sequence[float], d: int) -> np.ndarray:
    """Evaluate all monomials of degree <= d at one point; length C(n+d,d)-1."""
    x = np.asarray(x_vec, dtype=np.float64)
    return monomial_features(x[None, :], d)[0]


def monomial_features(points: np.ndarray, d: int) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    exps = monomial_exponents(pts.shape[1], d)
    cols = [np.prod(pts ** np.array(e), axis=1) for e in exps]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# Hypothesis classes.
# ---------------------------------------------------------------------------

class HypothesisClass:
    """A family of hypotheses with a consistency oracle and declared VC dim.

    ``consistency(labeled)`` takes (atom_index, label) pairs with distinct
    atoms and returns a canonical in-class hypothesis consistent with every
    label, or None when no such hypothesis exists.  Subclasses may override
    the labeling-tree hooks with incremental state for speed; the defaults
    re-run the oracle on each extension.
    """

    family: str = "abstract"

    def __init__(self, domain: Domain, vc_dim: int, vc_dim_is_bound: bool = False):
        if vc_dim < 1:
            raise ValueError("vc_dim must be >= 1")
        self.domain = domain
        self.vc_dim = int(vc_dim)
        self.vc_dim_is_bound = bool(vc_dim_is_bound)

    def class_id(self) -> str:
        return self.family

    def make(self, *params: float) -> Hypothesis:
        return Hypothesis(self.domain, self.family, params)

    def consistency(self, labeled: Sequence[tuple[int, int]]) -> Hypothesis | None:
        raise NotImplementedError(f"no consistency oracle for family {self.family!r}")

    def enumerate_hypotheses(self) -> list[Hypothesis]:
        raise NotImplementedError(f"family {self.family!r} is not enumerable")

    # -- labeling-tree hooks ------------------------------------------------

    def tree_order(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(indices, dtype=np.int64)

    def tree_root(self):
        return ((), self.consistency(()))

    def tree_extend(self, state, index: int, label: int):
        labeled = state[0] + ((index, label),)
        h = self.consistency(labeled)
        if h is None:
            return None
        return (labeled, h)

    def tree_hypothesis(self, state) -> Hypothesis:
        return state[1]

    def tree_leaves(self, order: np.ndarray) -> list:
        """Level-by-level expansion of the labeling tree with pruning.

        Each level labels one more sample point; children whose partial
        labeling admits no consistent hypothesis are dropped, so the leaves
        are exactly the realized labelings of the sample.  Families with
        structure may override this with an equivalent closed form.
        """
        root = self.tree_root()
        if root is None:
            raise AssertionError("hypothesis class admits no hypothesis at the tree root")
        states = [root]
        for idx in order:
            nxt = []
            for st in states:
                for label in (1, -1):
                    child = self.tree_extend(st, int(idx), label)
                    if child is not None:
                        nxt.append(child)
            states = nxt
            assert states, "labeling tree lost all nodes despite pruning"
        return states

    def __repr__(self):
        return f"{type(self).__name__}(N={self.domain.n_atoms}, vc={self.vc_dim})"


def consistency_oracle(
    cls: HypothesisClass, labeled: Sequence[tuple[int, int]]
) -> Hypothesis | None:
    """Deterministic consistent-hypothesis search; None when none exists."""
    return cls.consistency(labeled)


class ThresholdClass(HypothesisClass):
    """Thresholds 1(x >= b) over a 1-D embedded domain; VC dimension 1.

    Canonical parameters are the grid coordinates plus +inf for the all-minus
    hypothesis, and the oracle returns the smallest consistent one.
    """

    family = "threshold1d"

    def __init__(self, domain: Domain):
        self._coords = domain.coordinates()
        self._sorted_coords = np.unique(self._coords)
        super().__init__(domain, vc_dim=1)

    def _canonical_b(self, max_neg: float, min_pos: float) -> float:
        # Smallest grid coordinate strictly above every -1 atom.
        i = int(np.searchsorted(self._sorted_coords, max_neg, side="right"))
        if i == self._sorted_coords.size:
            return math.inf
        b = float(self._sorted_coords[i])
        return b if b <= min_pos else math.inf

    def consistency(self, labeled):
        max_neg, min_pos = -math.inf, math.inf
        for idx, label in labeled:
            c = float(self._coords[idx])
            if label > 0:
                min_pos = min(min_pos, c)
            else:
                max_neg = max(max_neg, c)
        if max_neg >= min_pos:
            return None
        return self.make(self._canonical_b(max_neg, min_pos))

    def enumerate_hypotheses(self) -> list[Hypothesis]:
        bs = [float(c) for c in self._sorted_coords] + [math.inf]
        return [self.make(b) for b in bs]

    def tree_order(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return idx[np.argsort(self._coords[idx], kind="stable")]

    def tree_root(self):
        return (-math.inf, math.inf)

    def tree_extend(self, state, index, label):
        max_neg, min_pos = state
        c = float(self._coords[index])
        if label > 0:
            min_pos = min(min_pos, c)
        else:
            max_neg = max(max_neg, c)
        if max_neg >= min_pos:
            return None
        return (max_neg, min_pos)

    def tree_hypothesis(self, state):
        return self.make(self._canonical_b(*state))

    def tree_leaves(self, order):
        # Closed form of the generic expansion: the consistent labelings of a
        # point set are the monotone ones over its distinct coordinates, so
        # the leaf states are the adjacent (max_neg, min_pos) coordinate
        # pairs.  Identical output to the base-class loop, without the
        # per-node oracle calls.
        ucoords = np.unique(self._coords[np.asarray(order, dtype=np.int64)])
        edges = np.concatenate([[-math.inf], ucoords, [math.inf]])
        return [(float(edges[j]), float(edges[j + 1])) for j in range(len(edges) - 1)]


class IntervalUnionClass(HypothesisClass):
    """Unions of k half-open intervals [b, e) on a 1-D domain; VC dim 2k."""

    family = "interval_union_k"

    def __init__(self, domain: Domain, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = int(k)
        self._coords = domain.coordinates()
        super().__init__(domain, vc_dim=2 * k)

    def class_id(self) -> str:
        return f"interval_union_{self.k}"

    def make_intervals(self, intervals: Sequence[tuple[float, float]]) -> Hypothesis:
        if len(intervals) > self.k:
            raise ValueError(f"at most {self.k} intervals allowed")
        params: list[float] = []
        for lo, hi in intervals:
            params.extend((lo, hi))
        while len(params) < 2 * self.k:
            params.extend((math.inf, math.inf))  # empty padding interval
        return self.make(*params)

    def consistency(self, labeled):
        by_coord: dict[float, int] = {}
        for idx, label in labeled:
            c = float(self._coords[idx])
            if by_coord.get(c, label) != label:
                return None
            by_coord[c] = label
        seq = sorted(by_coord.items())
        intervals: list[tuple[float, float]] = []
        open_at: float | None = None
        for c, label in seq:
            if label > 0 and open_at is None:
                open_at = c
            elif label < 0 and open_at is not None:
                intervals.append((open_at, c))
                open_at = None
        if open_at is not None:
            intervals.append((open_at, math.inf))
        if len(intervals) > self.k:
            return None
        return self.make_intervals(intervals)


def _feasible_signed_threshold(
    features: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, float] | None:
    """Deterministic linear feasibility for sign(w.x - c) with sign(0) = +1.

    Maximizes the negative-side margin tau subject to |w|, |c| <= 1 with the
    HiGHS solver (fixed pivoting, reproducible), then recenters c so both
    sides of the labeled set are strictly inside their half-space.
    """
    m = features.shape[1]
    n_vars = m + 2  # w, c, tau
    a_rows, b_vals = [], []
    for x, y in zip(features, labels):
        if y > 0:
            a_rows.append(np.concatenate([-x, [1.0, 0.0]]))
        else:
            a_rows.append(np.concatenate([x, [-1.0, 1.0]]))
        b_vals.append(0.0)
    cost = np.zeros(n_vars)
    cost[-1] = -1.0
    bounds = [(-1.0, 1.0)] * (m + 1) + [(0.0, 1.0)]
    res = linprog(
        cost, A_ub=np.array(a_rows), b_ub=np.array(b_vals), bounds=bounds, method="highs"
    )
    if not res.success or res.x[-1] <= FEASIBILITY_MARGIN:
        return None
    w, c = res.x[:m], float(res.x[m])
    margins = features @ w - c
    pos_min = margins[labels > 0].min() if np.any(labels > 0) else 1.0
    neg_max = margins[labels < 0].max() if np.any(labels < 0) else -1.0
    c = c + (pos_min + neg_max) / 2.0
    return w, c


class HalfspaceClass(HypothesisClass):
    """Halfspaces sign(<w, psi(x)> - c) over the domain embedding; VC = m+1."""

    family = "halfspace"

    def __init__(self, domain: Domain):
        if domain.embedding is None:
            raise ValueError("halfspace class needs an embedded domain")
        super().__init__(domain, vc_dim=domain.embedding.shape[1] + 1)

    def class_id(self) -> str:
        return f"halfspace_{self.domain.embedding.shape[1]}d"

    def consistency(self, labeled):
        if not labeled:
            return self.make(*np.zeros(self.domain.embedding.shape[1]), -1.0)
        idx = np.array([i for i, _ in labeled], dtype=np.int64)
        labels = np.array([y for _, y in labeled], dtype=np.int8)
        found = _feasible_signed_threshold(self.domain.embedding[idx], labels)
        if found is None:
            return None
        w, c = found
        h = self.make(*w, c)
        if not np.array_equal(h.query_bits()[idx], (labels > 0).astype(np.uint8)):
            return None  # margin too thin to certify at float precision
        return h


class PolyThresholdClass(HypothesisClass):
    """Degree-d polynomial thresholds via the monomial feature map.

    VC dimension is the number of monomials of degree <= d (constant
    included), i.e. C(n+d, d).
    """

    family = "poly_threshold"

    def __init__(self, domain: Domain, degree: int):
        if domain.embedding is None:
            raise ValueError("polynomial thresholds need an embedded domain")
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = int(degree)
        self._features = monomial_features(domain.embedding, degree)
        n = domain.embedding.shape[1]
        super().__init__(domain, vc_dim=math.comb(n + degree, degree))

    def class_id(self) -> str:
        return f"poly_threshold_d{self.degree}"

    def make_poly(self, w: Sequence[float], c: float) -> Hypothesis:
        return self.make(self.degree, *w, c)

    def consistency(self, labeled):
        if not labeled:
            return self.make_poly(np.zeros(self._features.shape[1]), -1.0)
        idx = np.array([i for i, _ in labeled], dtype=np.int64)
        labels = np.array([y for _, y in labeled], dtype=np.int8)
        found = _feasible_signed_threshold(self._features[idx], labels)
        if found is None:
            return None
        w, c = found
        h = self.make_poly(w, c)
        if not np.array_equal(h.query_bits()[idx], (labels > 0).astype(np.uint8)):
            return None
        return h


class KFoldClass(HypothesisClass):
    """Pointwise AND / OR / XOR combinations of k base-class hypotheses.

    The recorded VC dimension is an O(k * max_vc * log k) upper bound, not an
    exact value, and is flagged as such.  Component hypotheses are stored and
    combined lazily rather than materialized eagerly.
    """

    def __init__(self, bases: Sequence[HypothesisClass], family: str):
        if not bases:
            raise ValueError("k-fold combination needs at least one class")
        if family not in _COMPOSED_FAMILIES:
            raise ValueError(f"unknown combination family {family!r}")
        domain = bases[0].domain
        for b in bases[1:]:
            _check_same_domain(domain, b.domain)
        self.family = family
        self.bases = tuple(bases)
        k = len(bases)
        max_vc = max(b.vc_dim for b in bases)
        bound = max_vc if k == 1 else 2 * k * max_vc * max(1, math.ceil(math.log2(2 * k)))
        super().__init__(domain, vc_dim=bound, vc_dim_is_bound=True)

    def class_id(self) -> str:
        inner = ",".join(b.class_id() for b in self.bases)
        return f"{self.family}({inner})"

    def make_from(self, components: Sequence[Hypothesis]) -> Hypothesis:
        if len(components) != len(self.bases):
            raise ValueError(f"expected {len(self.bases)} component hypotheses")
        for comp in components:
            _check_same_domain(self.domain, comp.domain)
        return Hypothesis(self.domain, self.family, components=components)

    def consistency(self, labeled):
        raise NotImplementedError(
            "composed families have no consistency oracle; build covers on the base classes"
        )


def kfold_combine(classes: Sequence[HypothesisClass], op: str) -> KFoldClass:
    """Wrapper class of k-wise intersections or unions of the given classes."""
    if op not in ("intersection", "union"):
        raise ValueError(f"op must be 'intersection' or 'union', got {op!r}")
    return KFoldClass(classes, f"kfold_{op}")


def sym_difference_class(base: HypothesisClass) -> KFoldClass:
    """Class of symmetric differences f XOR f' of two base-class members."""
    return KFoldClass((base, base), "sym_difference")


def error_query(h: Hypothesis, product_domain: Domain) -> Hypothesis:
    """Mistake indicator 1(h(x) != y) as a 0/1 query over a labeled domain.

    ``product_domain`` must be ``h.domain.with_label_channel()`` (atom j maps
    to base atom j // 2).
    """
    if not product_domain.has_label_channel:
        raise DomainMismatchError("error queries live on a labeled product domain")
    if product_domain.n_atoms != 2 * h.domain.n_atoms:
        raise DomainMismatchError("product domain does not match the hypothesis domain")
    preds = h.predictions()
    bits = (preds[np.arange(product_domain.n_atoms) // 2] != product_domain.labels)
    return Hypothesis(product_domain, "extensional", bits=bits.astype(np.uint8))


# ---------------------------------------------------------------------------
# Text tokens: ``family:p1,p2,...`` for parametric families,
# ``family(token;token)`` for compositions, ``extensional:0110...`` for bits.
# ---------------------------------------------------------------------------

def format_hypothesis(h: Hypothesis) -> str:
    if h.family == "extensional":
        return "extensional:" + "".join(str(int(b)) for b in h.query_bits())
    if h.components:
        return f"{h.family}(" + ";".join(format_hypothesis(c) for c in h.components) + ")"
    return h.family + ":" + ",".join(format(p, ".17g") for p in h.params)


def parse_hypothesis(domain: Domain, token: str) -> Hypothesis:
    token = token.strip()
    paren = token.find("(")
    colon = token.find(":")
    if paren != -1 and (colon == -1 or paren < colon):
        family = token[:paren]
        if not token.endswith(")"):
            raise ValueError(f"unbalanced composition token: {token!r}")
        inner = token[paren + 1 : -1]
        parts, depth, start = [], 0, 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == ";" and depth == 0:
                parts.append(inner[start:i])
                start = i + 1
        parts.append(inner[start:])
        comps = [parse_hypothesis(domain, p) for p in parts]
        return Hypothesis(domain, family, components=comps)
    if colon == -1:
        raise ValueError(f"malformed hypothesis token: {token!r}")
    family, payload = token[:colon], token[colon + 1 :]
    if family == "extensional":
        bits = np.array([int(ch) for ch in payload], dtype=np.uint8)
        return Hypothesis(domain, "extensional", bits=bits)
    params = [float(p) for p in payload.split(",")] if payload else []
    return Hypothesis(domain, family, params)
