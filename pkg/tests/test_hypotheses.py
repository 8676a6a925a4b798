import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smoothlearn.domains import Domain
from smoothlearn.hypotheses import (
    HalfspaceClass,
    Hypothesis,
    IntervalUnionClass,
    PolyThresholdClass,
    ThresholdClass,
    consistency_oracle,
    error_query,
    evaluate,
    format_hypothesis,
    kfold_combine,
    monomial_embed,
    monomial_exponents,
    parse_hypothesis,
    sym_difference_class,
)


def grid(n):
    return Domain.unit_interval_grid(n)


def plane(points):
    return Domain.from_points(np.asarray(points, dtype=float))


class TestEvaluate:
    def test_threshold_above(self):
        cls = ThresholdClass(grid(4))
        h = cls.make(0.5)
        assert evaluate(h, cls.domain.atoms[3]) == 1  # coord 0.875

    def test_threshold_below(self):
        cls = ThresholdClass(grid(4))
        h = cls.make(0.5)
        assert evaluate(h, cls.domain.atoms[0]) == -1  # coord 0.125

    def test_halfspace_boundary_tie_break_is_plus(self):
        d = plane([[0.3, 0.3], [0.2, 0.5]])
        h = HalfspaceClass(d).make(1.0, -1.0, 0.0)
        assert h.evaluate_index(0) == 1  # exactly on the boundary
        assert h.evaluate_index(1) == -1

    def test_missing_embedding_errors(self):
        d = Domain(["a", "b"])
        h = Hypothesis(d, "halfspace", (1.0, 0.0))
        with pytest.raises(ValueError):
            h.predictions()

    def test_extensional_agrees_with_intensional(self):
        cls = ThresholdClass(grid(64))
        h = cls.make(0.31)
        ext = Hypothesis(cls.domain, "extensional", bits=h.query_bits())
        assert np.array_equal(ext.predictions(), h.predictions())

    @given(st.integers(0, 2**32 - 1))
    def test_materialization_commutes_with_pointwise_evaluation(self, seed):
        rng = np.random.default_rng(seed)
        d = grid(16)
        cls = ThresholdClass(d)
        h = cls.make(float(rng.uniform(0, 1)))
        preds = h.predictions()
        for i in range(d.n_atoms):
            assert preds[i] == h.evaluate_index(i)

    @given(st.integers(0, 2**32 - 1))
    def test_halfspace_materialization_commutes(self, seed):
        rng = np.random.default_rng(seed)
        d = plane(rng.standard_normal((12, 3)))
        h = HalfspaceClass(d).make(*rng.standard_normal(3), float(rng.standard_normal()))
        preds = h.predictions()
        for i in range(12):
            assert preds[i] == h.evaluate_index(i)


class TestThresholdOracle:
    def test_consistent_pair(self):
        d = grid(10)
        cls = ThresholdClass(d)
        lo, hi = d.index("2"), d.index("8")  # coords 0.25 and 0.85
        h = consistency_oracle(cls, [(lo, -1), (hi, 1)])
        assert h is not None
        assert 0.25 < h.params[0] <= 0.85
        assert h.evaluate_index(lo) == -1 and h.evaluate_index(hi) == 1

    def test_inconsistent_pair(self):
        d = grid(10)
        cls = ThresholdClass(d)
        assert consistency_oracle(cls, [(d.index("2"), 1), (d.index("8"), -1)]) is None

    def test_canonical_choice_is_smallest_grid_cut(self):
        d = grid(10)
        cls = ThresholdClass(d)
        h = consistency_oracle(cls, [(0, -1), (5, 1)])
        # smallest grid coordinate above 0.05 is 0.15
        assert h.params[0] == pytest.approx(0.15)

    def test_all_minus_returns_inf_cut(self):
        cls = ThresholdClass(grid(4))
        h = consistency_oracle(cls, [(3, -1)])
        assert math.isinf(h.params[0])
        assert np.all(h.predictions() == -1)

    def test_oracle_output_verified_consistent(self):
        rng = np.random.default_rng(7)
        cls = ThresholdClass(grid(50))
        for _ in range(50):
            target = cls.make(float(rng.uniform(0, 1)))
            idx = rng.choice(50, size=8, replace=False)
            labeled = [(int(i), int(target.evaluate_index(int(i)))) for i in idx]
            h = consistency_oracle(cls, labeled)
            assert h is not None
            for i, y in labeled:
                assert h.evaluate_index(i) == y

    def test_enumeration_covers_all_behaviors(self):
        cls = ThresholdClass(grid(9))
        hs = cls.enumerate_hypotheses()
        assert len(hs) == 10
        patterns = {h.query_bits().tobytes() for h in hs}
        assert len(patterns) == 10

    def test_sauer_shelah_labeling_counts(self):
        # thresholds realize at most m+1 labelings of any m-point subset
        cls = ThresholdClass(grid(12))
        all_bits = np.stack([h.query_bits() for h in cls.enumerate_hypotheses()])
        for m in range(1, 13):
            subset = np.arange(0, 12, max(1, 12 // m))[:m]
            labelings = {tuple(row[subset]) for row in all_bits}
            assert len(labelings) <= m + 1


class TestHalfspaceOracle:
    def test_linearly_separable(self):
        d = plane([[0, 0], [1, 0], [0, 1], [1, 1]])
        cls = HalfspaceClass(d)
        labeled = [(0, -1), (3, 1)]
        h = consistency_oracle(cls, labeled)
        assert h is not None
        for i, y in labeled:
            assert h.evaluate_index(i) == y

    def test_triangle_with_interior_point_is_infeasible(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.25, 0.25]])
        d = plane(pts)
        cls = HalfspaceClass(d)
        labeled = [(0, 1), (1, 1), (2, 1), (3, -1)]
        assert consistency_oracle(cls, labeled) is None
        # brute-force confirmation over a parameter grid
        labels = np.array([1, 1, 1, -1])
        gridvals = np.linspace(-1, 1, 21)
        feasible = False
        for w1, w2, c in product(gridvals, gridvals, gridvals):
            preds = np.where(pts @ np.array([w1, w2]) - c >= 0, 1, -1)
            if np.array_equal(preds, labels):
                feasible = True
                break
        assert not feasible

    def test_oracle_deterministic(self):
        rng = np.random.default_rng(3)
        d = plane(rng.standard_normal((10, 2)))
        cls = HalfspaceClass(d)
        labeled = [(0, 1), (1, -1), (2, 1)]
        h1 = consistency_oracle(cls, labeled)
        h2 = consistency_oracle(cls, labeled)
        assert h1.params == h2.params


class TestIntervalUnionOracle:
    def test_single_interval(self):
        cls = IntervalUnionClass(grid(10), k=2)
        h = consistency_oracle(cls, [(1, -1), (4, 1), (5, 1), (8, -1)])
        assert h is not None
        for i, y in [(1, -1), (4, 1), (5, 1), (8, -1)]:
            assert h.evaluate_index(i) == y

    def test_too_many_runs(self):
        cls = IntervalUnionClass(grid(10), k=1)
        labeled = [(0, 1), (3, -1), (6, 1)]
        assert consistency_oracle(cls, labeled) is None

    def test_vc_dim(self):
        assert IntervalUnionClass(grid(10), k=3).vc_dim == 6


class TestMonomials:
    def test_degree_two_univariate(self):
        assert np.allclose(monomial_embed([3.0], 2), [3.0, 9.0])

    def test_degree_one_identity(self):
        assert np.allclose(monomial_embed([2.0, 5.0], 1), [2.0, 5.0])

    def test_two_vars_degree_two_graded_order(self):
        assert np.allclose(monomial_embed([2.0, 3.0], 2), [2.0, 3.0, 4.0, 6.0, 9.0])

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_dimension_formula(self, n, d):
        assert len(monomial_exponents(n, d)) == math.comb(n + d, d) - 1

    def test_poly_threshold_class_vc(self):
        dom = plane(np.random.default_rng(0).standard_normal((6, 2)))
        assert PolyThresholdClass(dom, degree=2).vc_dim == math.comb(4, 2)

    def test_poly_threshold_oracle_consistent(self):
        rng = np.random.default_rng(1)
        dom = plane(rng.standard_normal((12, 2)))
        cls = PolyThresholdClass(dom, degree=2)
        labeled = [(0, 1), (1, -1), (2, -1), (3, 1)]
        h = cls.consistency(labeled)
        if h is not None:
            for i, y in labeled:
                assert h.evaluate_index(i) == y


class TestKFold:
    def test_k1_identity(self):
        d = grid(20)
        base = ThresholdClass(d)
        wrapper = kfold_combine([base], op="intersection")
        h = wrapper.make_from([base.make(0.4)])
        assert np.array_equal(h.predictions(), base.make(0.4).predictions())

    def test_intersection_with_complement_is_interval(self):
        d = grid(40)
        base = ThresholdClass(d)
        wrapper = kfold_combine([base, base], op="intersection")
        h = wrapper.make_from([base.make(0.3), base.make(0.7).complement()])
        coords = d.coordinates()
        expected = ((coords >= 0.3) & (coords < 0.7)).astype(np.uint8)
        assert np.array_equal(h.query_bits(), expected)

    def test_union_of_disjoint_intervals(self):
        d = grid(30)
        iu = IntervalUnionClass(d, k=1)
        a = iu.make_intervals([(0.1, 0.2)])
        b = iu.make_intervals([(0.6, 0.8)])
        wrapper = kfold_combine([iu, iu], op="union")
        h = wrapper.make_from([a, b])
        coords = d.coordinates()
        expected = (
            ((coords >= 0.1) & (coords < 0.2)) | ((coords >= 0.6) & (coords < 0.8))
        ).astype(np.uint8)
        assert np.array_equal(h.query_bits(), expected)

    def test_sym_difference(self):
        d = grid(25)
        base = ThresholdClass(d)
        cls = sym_difference_class(base)
        h = cls.make_from([base.make(0.3), base.make(0.6)])
        coords = d.coordinates()
        expected = ((coords >= 0.3) & (coords < 0.6)).astype(np.uint8)
        assert np.array_equal(h.query_bits(), expected)

    def test_vc_is_flagged_bound(self):
        d = grid(8)
        wrapper = kfold_combine([ThresholdClass(d)] * 3, op="union")
        assert wrapper.vc_dim_is_bound
        assert wrapper.vc_dim >= 3

    def test_empty_class_list_rejected(self):
        with pytest.raises(ValueError):
            kfold_combine([], op="union")

    def test_no_oracle_for_composed(self):
        d = grid(8)
        wrapper = kfold_combine([ThresholdClass(d)] * 2, op="intersection")
        with pytest.raises(NotImplementedError):
            wrapper.consistency([(0, 1)])


class TestErrorQuery:
    def test_error_bits(self):
        d = grid(3)  # coords 1/6, 1/2, 5/6
        prod = d.with_label_channel()
        h = ThresholdClass(d).make(0.5)  # predicts -, +, + (ties go positive)
        q = error_query(h, prod)
        # product atoms: (0,+1),(0,-1),(1,+1),(1,-1),(2,+1),(2,-1)
        assert list(q.query_bits()) == [1, 0, 0, 1, 0, 1]


class TestTokens:
    @pytest.mark.parametrize(
        "make",
        [
            lambda d: ThresholdClass(d).make(0.123456789123456789),
            lambda d: ThresholdClass(d).make(math.inf),
            lambda d: IntervalUnionClass(d, 2).make_intervals([(0.1, 0.4), (0.5, 0.9)]),
        ],
    )
    def test_round_trip(self, make):
        d = grid(16)
        h = make(d)
        again = parse_hypothesis(d, format_hypothesis(h))
        assert again.family == h.family
        assert again.params == h.params
        assert np.array_equal(again.query_bits(), h.query_bits())

    def test_composed_round_trip(self):
        d = grid(12)
        base = ThresholdClass(d)
        cls = sym_difference_class(base)
        h = cls.make_from([base.make(0.25), base.make(0.75)])
        again = parse_hypothesis(d, format_hypothesis(h))
        assert np.array_equal(again.query_bits(), h.query_bits())

    def test_extensional_round_trip(self):
        d = grid(9)
        h = Hypothesis(d, "extensional", bits=np.array([0, 1, 1, 0, 1, 0, 0, 1, 0]))
        again = parse_hypothesis(d, format_hypothesis(h))
        assert np.array_equal(again.query_bits(), h.query_bits())
