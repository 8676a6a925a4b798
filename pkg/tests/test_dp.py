import math

import numpy as np
import pytest

from smoothlearn.covers import build_cover
from smoothlearn.domains import (
    Dataset,
    Dist,
    Domain,
    is_sigma_smooth,
    make_smooth_dataset,
    query_value,
)
from smoothlearn.dp import (
    MULTISET_ENUMERATION_GUARD,
    PrivacyParams,
    SmoothPolytope,
    advanced_composition,
    answer_with_cover,
    default_net_size,
    enumerate_multiset_counts,
    exponential_mechanism,
    exponential_mechanism_probabilities,
    kl_divergence,
    laplace_sample,
    multiplicative_update,
    mwem,
    projected_smooth_mwem,
    smooth_mwem,
    subsampled_net_mechanism,
    subsampled_net_selection_probabilities,
)
from smoothlearn.hypotheses import Hypothesis, ThresholdClass


def grid(n):
    return Domain.unit_interval_grid(n)


def thresholds(domain, k=None):
    hs = ThresholdClass(domain).enumerate_hypotheses()
    if k is None or k >= len(hs):
        return hs
    idx = np.linspace(0, len(hs) - 1, k).round().astype(int)
    return [hs[i] for i in idx]


class TestLaplace:
    def test_moments(self):
        rng = np.random.default_rng(0)
        samples = np.array([laplace_sample(1.0, rng) for _ in range(1_000_000)])
        assert -0.01 <= samples.mean() <= 0.01
        assert 1.96 <= samples.var() <= 2.04

    def test_median_near_zero(self):
        rng = np.random.default_rng(1)
        samples = np.array([laplace_sample(3.0, rng) for _ in range(200_000)])
        assert abs(np.median(samples)) <= 0.02

    def test_tail_probability_at_b_ln2(self):
        rng = np.random.default_rng(2)
        b = 1.7
        samples = np.array([laplace_sample(b, rng) for _ in range(400_000)])
        frac = np.mean(np.abs(samples) > b * math.log(2.0))
        assert abs(frac - 0.5) <= 0.005

    def test_scale_validation(self):
        with pytest.raises(ValueError):
            laplace_sample(0.0, np.random.default_rng(0))

    def test_deterministic_given_seed(self):
        a = [laplace_sample(2.0, np.random.default_rng(9)) for _ in range(5)]
        b = [laplace_sample(2.0, np.random.default_rng(9)) for _ in range(5)]
        assert a == b


class TestExponentialMechanism:
    def test_equal_scores_select_uniformly(self):
        rng = np.random.default_rng(3)
        picks = np.array(
            [exponential_mechanism([0, 1, 2, 3], np.zeros(4), 1.0, 1.0, rng) for _ in range(100_000)]
        )
        freq = np.bincount(picks, minlength=4) / picks.size
        assert np.all((0.24 <= freq) & (freq <= 0.26))

    def test_closed_form_probabilities(self):
        probs = exponential_mechanism_probabilities(np.array([0.0, 1.0, 2.0, 3.0]), 1.0, 1.0)
        raw = np.exp([0.0, 0.5, 1.0, 1.5])
        assert np.allclose(probs, raw / raw.sum(), atol=1e-15)

    def test_empirical_matches_closed_form(self):
        rng = np.random.default_rng(4)
        scores = np.array([0.0, 1.0, 2.0, 3.0])
        picks = np.array(
            [exponential_mechanism([0, 1, 2, 3], scores, 1.0, 1.0, rng) for _ in range(100_000)]
        )
        freq = np.bincount(picks, minlength=4) / picks.size
        target = exponential_mechanism_probabilities(scores, 1.0, 1.0)
        assert np.abs(freq - target).sum() <= 0.01

    def test_huge_eps_concentrates_on_argmax(self):
        rng = np.random.default_rng(5)
        scores = np.array([0.0, 1.0, 2.0, 3.0])
        picks = np.array(
            [exponential_mechanism([0, 1, 2, 3], scores, 1e4, 1.0, rng) for _ in range(2_000)]
        )
        assert np.mean(picks == 3) >= 0.999

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            exponential_mechanism([], np.array([]), 1.0, 1.0, np.random.default_rng(0))

    def test_callable_score(self):
        rng = np.random.default_rng(6)
        out = exponential_mechanism(["a", "b"], lambda c: 100.0 if c == "b" else 0.0, 10.0, 1.0, rng)
        assert out == "b"


class TestMultiplicativeUpdate:
    def test_noop_when_measurement_matches(self):
        d = grid(6)
        dist = Dist(d, np.random.default_rng(0).random(6) + 0.1)
        q = np.array([1, 0, 1, 0, 1, 0], dtype=float)
        out = multiplicative_update(dist, q, 0.42, 0.42)
        assert np.allclose(out.weights, dist.weights, atol=1e-15)

    def test_hand_example(self):
        d = grid(2)
        out = multiplicative_update(
            Dist(d, [0.5, 0.5]), np.array([1.0, 0.0]), 2.0 * math.log(2.0), 0.0
        )
        assert np.allclose(out.weights, [2 / 3, 1 / 3], atol=1e-15)

    def test_constant_query_is_noop(self):
        d = grid(5)
        dist = Dist(d, np.arange(1.0, 6.0))
        out = multiplicative_update(dist, np.ones(5), 0.9, 0.2)
        assert np.allclose(out.weights, dist.weights, atol=1e-15)


class TestMwem:
    def test_budget_ledger_sums_to_eps(self):
        d = grid(32)
        ds = Dataset(d, np.random.default_rng(0).integers(0, 32, size=100))
        for eps, rounds in [(1.0, 10), (0.7, 3), (2.5, 7)]:
            _, transcript = mwem(ds, thresholds(d, 16), rounds, eps, np.random.default_rng(1))
            assert abs(transcript.budget_total() - eps) <= 1e-12
            assert len(transcript.budget) == 2 * rounds

    def test_constant_query_error_within_noise(self):
        d = grid(16)
        ds = Dataset(d, np.random.default_rng(1).integers(0, 16, size=200))
        ones = Hypothesis(d, "extensional", bits=np.ones(16, dtype=np.uint8))
        for rounds in (1, 5, 20):
            dbar, _ = mwem(ds, [ones], rounds, 1.0, np.random.default_rng(2))
            err = abs(query_value(ones, dbar) - query_value(ones, ds.empirical()))
            assert err <= 3.0 * (2.0 * rounds / (1.0 * 200))

    def test_uniform_data_stays_near_uniform(self):
        d = grid(64)
        ds = Dataset.from_counts(d, np.full(64, 5))
        dbar, _ = mwem(ds, thresholds(d, 32), 10, 1e4, np.random.default_rng(3))
        assert dbar.total_variation(d.uniform()) <= 0.1

    def test_average_is_mean_of_iterates(self):
        d = grid(16)
        ds = Dataset(d, np.random.default_rng(4).integers(0, 16, size=50))
        dbar, transcript = mwem(ds, thresholds(d, 8), 6, 1.0, np.random.default_rng(5))
        stack = np.stack([r.post_projection for r in transcript.rounds])
        assert np.array_equal(Dist(d, stack.mean(axis=0)).weights, dbar.weights)

    def test_potential_telescoping(self):
        d = grid(32)
        ds = make_smooth_dataset(d, 0.25, 300, np.random.default_rng(6))
        witness = ds.empirical()
        _, transcript = mwem(
            ds, thresholds(d, 16), 8, 1.0, np.random.default_rng(7), witness=witness
        )
        psis = [transcript.psi_initial] + transcript.potentials()
        drops = [a - b for a, b in zip(psis, psis[1:])]
        assert abs(math.fsum(drops) - (psis[0] - psis[-1])) <= 1e-12
        assert all(p >= -1e-12 for p in psis)

    def test_transcript_jsonl_round_trip_fields(self, tmp_path):
        d = grid(8)
        ds = Dataset(d, [0, 1, 2, 3, 4, 5, 6, 7])
        _, transcript = mwem(ds, thresholds(d, 4), 3, 1.0, np.random.default_rng(8))
        path = tmp_path / "transcript.jsonl"
        transcript.to_jsonl(path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 3  # header + one record per round
        import json

        rec = json.loads(lines[1])
        assert set(rec) >= {"i", "selected_query", "scores", "noisy_value", "pre", "post"}


class TestSmoothMwem:
    def test_cover_member_answers_match_direct_evaluation(self):
        d = grid(128)
        ds = make_smooth_dataset(d, 0.2, 400, np.random.default_rng(0))
        cls = ThresholdClass(d)
        answers, transcript = smooth_mwem(ds, cls, 0.2, 5, 1.0, np.random.default_rng(1))
        dbar = transcript.final_average
        for member in transcript.cover.members[:10]:
            direct = float(np.dot(dbar.weights, member.query_bits()))
            assert answers[member.token()] == direct

    def test_answer_for_off_cover_query_uses_nearest_member(self):
        d = grid(64)
        ds = make_smooth_dataset(d, 0.25, 200, np.random.default_rng(2))
        cls = ThresholdClass(d)
        probe = cls.make(0.412345)
        answers, transcript = smooth_mwem(
            ds, cls, 0.25, 4, 1.0, np.random.default_rng(3), requested=[probe]
        )
        expected = answer_with_cover(
            probe, transcript.cover, transcript.final_average, d.uniform()
        )
        assert answers[probe.token()] == expected

    def test_default_radius_is_quarter_sigma_over_n(self):
        d = grid(32)
        ds = make_smooth_dataset(d, 0.5, 64, np.random.default_rng(4))
        _, transcript = smooth_mwem(ds, ThresholdClass(d), 0.5, 2, 1.0, np.random.default_rng(5))
        assert transcript.config["gamma"] == pytest.approx(0.5 / (4 * 64))

    def test_rejects_non_smooth_witness(self):
        d = grid(16)
        ds = Dataset(d, [0] * 50)
        with pytest.raises(ValueError):
            smooth_mwem(
                ds,
                ThresholdClass(d),
                0.5,
                2,
                1.0,
                np.random.default_rng(6),
                witness=Dist.point_mass(d, 0),
            )


class TestProjectedSmoothMwem:
    def test_output_always_sigma_smooth(self):
        d = grid(128)
        ds = make_smooth_dataset(d, 0.1, 500, np.random.default_rng(0))
        cls = ThresholdClass(d)
        cover = build_cover(cls, 0.1 / (4 * 500), rng=np.random.default_rng(1))
        for seed in range(5):
            dbar, _ = projected_smooth_mwem(
                ds, cls, 0.1, 6, 1.0, np.random.default_rng(seed), cover=cover
            )
            assert is_sigma_smooth(dbar, 0.1)

    def test_potential_facts_and_pythagorean_logged(self):
        d = grid(64)
        ds = make_smooth_dataset(d, 0.2, 300, np.random.default_rng(2))
        cls = ThresholdClass(d)
        witness = ds.empirical()
        dbar, transcript = projected_smooth_mwem(
            ds, cls, 0.2, 8, 1.0, np.random.default_rng(3), witness=witness
        )
        assert transcript.psi_initial <= math.log(1.0 / 0.2) + 1e-9
        w = witness.weights
        for r in transcript.rounds:
            assert r.psi >= -1e-12
            assert r.psi <= r.psi_pre + 1e-12
            lhs = kl_divergence(w, r.pre_projection)
            rhs = kl_divergence(w, r.post_projection) + kl_divergence(
                r.post_projection, r.pre_projection
            )
            assert lhs >= rhs - 1e-9

    def test_iterates_inside_polytope(self):
        d = grid(32)
        ds = make_smooth_dataset(d, 0.25, 100, np.random.default_rng(4))
        cls = ThresholdClass(d)
        _, transcript = projected_smooth_mwem(
            ds, cls, 0.25, 5, 0.5, np.random.default_rng(5)
        )
        cap = SmoothPolytope(0.25, 32).cap
        for r in transcript.rounds:
            assert r.post_projection.max() <= cap + 1e-12


class TestSubsampledNet:
    def test_constant_query_selects_uniformly(self):
        d = grid(8)
        ds = Dataset(d, [0, 1, 2, 3, 4])
        ones = Hypothesis(d, "extensional", bits=np.ones(8, dtype=np.uint8))
        _, probs = subsampled_net_selection_probabilities(
            ds, [ones], 1.0, np.array([0, 3, 5]), 2
        )
        assert np.allclose(probs, probs[0], atol=1e-15)

    def test_huge_eps_recovers_enumerated_optimum(self):
        d = grid(16)
        rng = np.random.default_rng(7)
        ds = Dataset(d, rng.integers(0, 16, size=60))
        queries = thresholds(d, 8)
        support = np.arange(0, 16, 2)
        counts, probs = subsampled_net_selection_probabilities(ds, queries, 1e4, support, 6)
        from smoothlearn.dp import _net_scores

        scores = _net_scores(ds, queries, counts, 6)
        assert probs.argmax() == scores.argmin()
        released = subsampled_net_mechanism(ds, queries, 1e4, 8, 6, np.random.default_rng(8))
        released_score = _net_scores(ds, queries, released.counts()[None, :], 6)[0]
        assert released_score <= scores.min() + 1.0 / 6 + 0.2

    def test_privacy_ratio_exact(self):
        d = grid(8)
        base = Dataset(d, [0, 1, 2, 3, 4])
        adjacent = Dataset(d, [0, 1, 2, 3, 7])
        queries = thresholds(d)
        support = np.array([0, 2, 4, 6])
        for eps in (0.5, 1.0, 2.0):
            _, p = subsampled_net_selection_probabilities(base, queries, eps, support, 3)
            _, q = subsampled_net_selection_probabilities(adjacent, queries, eps, support, 3)
            assert float(np.max(p / q)) <= math.exp(eps) * (1 + 1e-9)
            assert float(np.max(q / p)) <= math.exp(eps) * (1 + 1e-9)

    def test_enumeration_guard(self):
        d = grid(64)
        ds = Dataset(d, [0])
        with pytest.raises(ValueError):
            subsampled_net_mechanism(ds, thresholds(d, 4), 1.0, 64, 16, np.random.default_rng(0))
        assert math.comb(64 + 16 - 1, 16) > MULTISET_ENUMERATION_GUARD

    def test_multiset_enumeration_count(self):
        counts = enumerate_multiset_counts(np.array([0, 2, 5]), 3, 8)
        assert counts.shape == (math.comb(3 + 3 - 1, 3), 8)
        assert np.all(counts.sum(axis=1) == 3)
        assert np.all(counts[:, [1, 3, 4, 6, 7]] == 0)

    def test_default_net_size(self):
        assert default_net_size(3, 0.1) == math.ceil(8 * 3 / 0.01)


class TestComposition:
    def test_formula_at_single_round(self):
        out = advanced_composition(0.3, 1, 1e-5)
        expected = 0.3 * math.sqrt(2 * math.log(1e5)) + 0.3 * (math.exp(0.3) - 1)
        assert out.epsilon == pytest.approx(expected, abs=1e-15)

    def test_frozen_arithmetic_example(self):
        out = advanced_composition(0.1, 100, 1e-6)
        assert out.epsilon == pytest.approx(6.3082309505, abs=1e-9)

    def test_monotone_in_delta(self):
        eps_small = advanced_composition(0.1, 50, 1e-9).epsilon
        eps_large = advanced_composition(0.1, 50, 1e-3).epsilon
        assert eps_small > eps_large

    def test_privacy_params_validation(self):
        with pytest.raises(ValueError):
            PrivacyParams(epsilon=-1.0)
        with pytest.raises(ValueError):
            PrivacyParams(epsilon=1.0, delta=1.0)
