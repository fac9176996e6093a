import numpy as np
import pytest

from popseq.popularity import (combine_scores, counts_vector,
                               pp_probability, pps_matrix, sigmoid,
                               sigmoid_pps_logits, smoothed_pp_probability,
                               softmax, softmax_pps_logits)


class TestCountsVector:
    def test_empty_prefix(self):
        assert counts_vector([], 3).tolist() == [0, 0, 0]

    def test_hand_tally(self):
        assert counts_vector([3, 1, 3, 2, 3], 4).tolist() == [0, 1, 1, 3]

    def test_total_mass(self):
        seq = np.random.default_rng(0).integers(0, 200, size=10_000)
        assert counts_vector(seq, 200).sum() == 10_000

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            counts_vector([5], 3)


class TestProbabilities:
    def test_unsmoothed(self):
        np.testing.assert_allclose(pp_probability([2, 1, 0]),
                                   [2 / 3, 1 / 3, 0], atol=1e-15)

    def test_single_support(self):
        np.testing.assert_allclose(pp_probability([5, 0, 0, 0]),
                                   [1, 0, 0, 0], atol=0)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            pp_probability([0, 0])

    def test_smoothed_exact_fractions(self):
        np.testing.assert_allclose(smoothed_pp_probability([2, 1, 0], 1.0),
                                   [0.5, 1 / 3, 1 / 6], atol=1e-15)

    def test_smoothed_all_zero_is_uniform(self):
        np.testing.assert_allclose(smoothed_pp_probability([0, 0, 0], 0.01),
                                   [1 / 3] * 3, atol=1e-15)

    def test_smoothed_limit_matches_unsmoothed(self):
        c = [2, 1, 0]
        np.testing.assert_allclose(smoothed_pp_probability(c, 1e-9),
                                   pp_probability(c), atol=1e-6)

    def test_epsilon_validation(self):
        for fn in (smoothed_pp_probability, softmax_pps_logits):
            with pytest.raises(ValueError):
                fn([1, 0], 0.0)


class TestLogits:
    def test_softmax_mode_exact(self):
        y = softmax_pps_logits([2, 1, 0], 1.0).values
        np.testing.assert_allclose(y, [0.0, np.log(2 / 3), np.log(1 / 3)],
                                   atol=1e-15)
        assert (y <= 0).all()

    def test_softmax_inversion(self):
        y = softmax_pps_logits([2, 1, 0], 1.0)
        np.testing.assert_allclose(softmax(y.values), [0.5, 1 / 3, 1 / 6],
                                   atol=1e-12)

    def test_uniform_counts_give_zero_logits(self):
        y = softmax_pps_logits([4, 4, 4, 4], 0.5).values
        np.testing.assert_array_equal(y, np.zeros(4))
        np.testing.assert_allclose(softmax(y), 0.25, atol=0)

    def test_sigmoid_mode_exact(self):
        y = sigmoid_pps_logits([2, 1, 0], 1.0).values
        np.testing.assert_allclose(y, [0.0, -np.log(2), -np.log(5)],
                                   atol=1e-12)

    def test_sigmoid_inversion(self):
        y = sigmoid_pps_logits([2, 1, 0], 1.0)
        np.testing.assert_allclose(sigmoid(y.values), [0.5, 1 / 3, 1 / 6],
                                   atol=1e-12)

    def test_sigmoid_argmax_follows_counts(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            c = rng.integers(0, 50, size=12)
            c[rng.integers(12)] += 100
            y = sigmoid_pps_logits(c, 0.01).values
            assert np.argmax(y) == np.argmax(c)

    def test_sigmoid_needs_two_items(self):
        with pytest.raises(ValueError):
            sigmoid_pps_logits([3], 0.1)

    def test_logits_always_finite(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            c = rng.integers(0, 10_000, size=rng.integers(2, 60))
            for eps in (0.01, 1.0):
                assert np.isfinite(softmax_pps_logits(c, eps).values).all()
                assert np.isfinite(sigmoid_pps_logits(c, eps).values).all()


class TestRankEquivalence:
    def test_all_encodings_rank_identically(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            c = rng.integers(0, 30, size=15)
            orders = [
                np.argsort(-c.astype(float), kind="stable"),
                np.argsort(-smoothed_pp_probability(c, 0.1), kind="stable"),
                np.argsort(-softmax_pps_logits(c, 0.1).values, kind="stable"),
                np.argsort(-sigmoid_pps_logits(c, 0.1).values, kind="stable"),
            ]
            for other in orders[1:]:
                np.testing.assert_array_equal(orders[0], other)


class TestEpsilonBehavior:
    def test_contrast_strictly_decreasing(self):
        c = np.array([9, 4, 0, 2])
        ratios = []
        for eps in (0.01, 0.1, 1.0, 10.0):
            p = smoothed_pp_probability(c, eps)
            ratios.append(p.max() / p.min())
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_contrast_closed_form(self):
        c = np.array([7, 1, 3])
        for eps in (0.01, 0.1, 1.0, 10.0):
            p = smoothed_pp_probability(c, eps)
            np.testing.assert_allclose(p.max() / p.min(),
                                       (c.max() + eps) / (c.min() + eps),
                                       rtol=1e-12)

    def test_uniform_limit(self):
        # spread is (cmax - cmin) / (N*eps + sum(c)), ~2.5e-7 here
        c = np.array([1000, 0, 37, 512])
        p = smoothed_pp_probability(c, 1e9)
        assert p.max() - p.min() < 1e-6


class TestPpsMatrix:
    def test_two_step_prefix(self):
        m = pps_matrix([0, 1], 0.5, "softmax", n=3)
        np.testing.assert_array_equal(
            m.values[0], softmax_pps_logits(counts_vector([0], 3), 0.5).values)
        np.testing.assert_array_equal(
            m.values[1], softmax_pps_logits(counts_vector([0, 1], 3), 0.5).values)

    def test_causality_under_perturbation(self):
        rng = np.random.default_rng(2)
        seq = rng.integers(0, 10, size=30)
        m = pps_matrix(seq, 0.01, "sigmoid", n=10)
        mutated = seq.copy()
        mutated[3:] = rng.integers(0, 10, size=27)
        m2 = pps_matrix(mutated, 0.01, "sigmoid", n=10)
        np.testing.assert_array_equal(m.values[:3], m2.values[:3])

    @pytest.mark.parametrize("mode", ["softmax", "sigmoid"])
    def test_incremental_matches_naive(self, mode):
        """Oracle: recompute every prefix from scratch."""
        rng = np.random.default_rng(4)
        seq = rng.integers(0, 40, size=200)
        m = pps_matrix(seq, 0.05, mode, n=40)
        build = softmax_pps_logits if mode == "softmax" else sigmoid_pps_logits
        naive = np.stack([build(counts_vector(seq[:i + 1], 40), 0.05).values
                          for i in range(200)])
        np.testing.assert_allclose(m.values, naive, atol=1e-12)

    def test_empty_sequence(self):
        m = pps_matrix([], 0.1, "softmax", n=5)
        assert m.values.shape == (0, 5)

    def test_row_prefix_dependence_only(self):
        m = pps_matrix([2, 2, 1], 0.5, "softmax", n=4)
        assert m.values.shape == (3, 4)
        assert np.argmax(m.values[2]) == 2  # item 2 still dominates


class TestCombineScores:
    def test_additive_identity(self):
        pps = softmax_pps_logits([3, 1, 0], 0.1)
        out = combine_scores(np.zeros((4, 3)), pps)
        np.testing.assert_array_equal(out, np.tile(pps.values, (4, 1)))

    def test_rank_matches_counts_on_zero_model(self):
        rng = np.random.default_rng(9)
        c = rng.integers(0, 20, size=8)
        pps = sigmoid_pps_logits(c, 0.01)
        out = combine_scores(np.zeros(8), pps)
        np.testing.assert_array_equal(np.argsort(-out, kind="stable"),
                                      np.argsort(-c.astype(float), kind="stable"))

    def test_uniform_counts_leave_model_unchanged(self):
        scores = np.random.default_rng(1).normal(size=(2, 4))
        pps = softmax_pps_logits([3, 3, 3, 3], 0.2)
        np.testing.assert_array_equal(combine_scores(scores, pps), scores)

    def test_matrix_combination(self):
        m = pps_matrix([0, 1, 1], 0.1, "sigmoid", n=3)
        scores = np.ones((3, 3))
        np.testing.assert_array_equal(combine_scores(scores, m),
                                      1.0 + m.values)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            combine_scores(np.zeros((2, 4)), softmax_pps_logits([1, 2], 0.1))
        with pytest.raises(ValueError):
            combine_scores(np.zeros((3, 3)),
                           pps_matrix([0, 1], 0.1, "softmax", n=3))

    def test_mode_mismatch(self):
        pps = sigmoid_pps_logits([1, 2], 0.1)
        with pytest.raises(ValueError):
            combine_scores(np.zeros(2), pps, head="softmax")
        combine_scores(np.zeros(2), pps, head="sigmoid")  # matching is fine
