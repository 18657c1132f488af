import numpy as np
import pytest

from ranklosslab import (
    SampleBatch,
    SmoothedApConfig,
    auc_grad,
    hinge_error_driven,
    smoothed_ap_loss_and_grad,
    softmax_error_driven,
)
from helpers import central_diff, random_batch_arrays


class TestSmoothedAp:
    def test_single_pair_equal_scores(self):
        # One positive, one negative, all scores equal, slope 1: the
        # sigmoid sits at 0.5 so the value is 0.5 / 1.5 = 1/3.
        b = SampleBatch([0.0, 0.0], [1, 0])
        loss, _ = smoothed_ap_loss_and_grad(b, SmoothedApConfig(k=1.0))
        np.testing.assert_allclose(loss, 1 / 3, rtol=1e-12)

    def test_vanishes_as_positive_escapes(self):
        losses = []
        for lift in (0.0, 5.0, 20.0, 60.0):
            b = SampleBatch([lift, 0.0, -1.0], [1, 0, 0])
            loss, _ = smoothed_ap_loss_and_grad(b, SmoothedApConfig(k=1.0))
            losses.append(loss)
        assert losses == sorted(losses, reverse=True)
        assert losses[-1] < 1e-12

    @pytest.mark.parametrize("log_space", [False, True])
    def test_gradient_matches_finite_differences(self, log_space):
        rng = np.random.default_rng(0)
        cfg = SmoothedApConfig(k=0.5, log_space=log_space, epsilon=1e-2)
        for _ in range(30):
            scores, labels = random_batch_arrays(rng, max_n=25, tie_prob=0.0)
            _, grad = smoothed_ap_loss_and_grad(SampleBatch(scores, labels), cfg)
            num = central_diff(
                lambda s: smoothed_ap_loss_and_grad(SampleBatch(s, labels), cfg)[0], scores
            )
            scale = max(np.abs(num).max(), 1e-8)
            assert np.abs(grad - num).max() / scale < 1e-4

    def test_degenerate_batch(self):
        loss, grad = smoothed_ap_loss_and_grad(SampleBatch([1.0, 2.0], [1, 1]))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, np.zeros(2))

    def test_log_space_requires_epsilon(self):
        with pytest.raises(ValueError):
            SmoothedApConfig(k=1.0, log_space=True, epsilon=0.0)

    def test_ignored_samples_excluded(self):
        cfg = SmoothedApConfig(k=1.0)
        full = smoothed_ap_loss_and_grad(SampleBatch([1.0, 0.0, 9.0], [1, 0, -1]), cfg)
        trimmed = smoothed_ap_loss_and_grad(SampleBatch([1.0, 0.0], [1, 0]), cfg)
        assert full[0] == trimmed[0]
        assert full[1][2] == 0.0


class TestAucGrad:
    def test_worst_ranking(self):
        loss, grad = auc_grad(SampleBatch([1.0, 2.0, 3.0], [1, 0, 0]))
        assert loss == 1.0
        np.testing.assert_allclose(grad, [-1.0, 0.5, 0.5])

    def test_perfect_ranking(self):
        loss, grad = auc_grad(SampleBatch([3.0, 1.0, 2.0], [1, 0, 0]))
        assert loss == 0.0
        np.testing.assert_array_equal(grad, np.zeros(3))

    def test_all_tied(self):
        loss, grad = auc_grad(SampleBatch([0.0, 0.0, 0.0], [1, 0, 0]))
        assert loss == 1.0
        np.testing.assert_allclose(grad, [-1.0, 0.5, 0.5])

    def test_conservation_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            scores, labels = random_batch_arrays(rng)
            _, grad = auc_grad(SampleBatch(scores, labels))
            assert abs(grad.sum()) <= 1e-12
            assert np.all(grad[labels == -1] == 0.0)


class TestSoftmaxErrorDriven:
    def test_symmetric_logits(self):
        np.testing.assert_allclose(softmax_error_driven(np.array([0.0, 0.0]), 1), [-0.5, 0.5])

    def test_two_class_closed_form(self):
        g = softmax_error_driven(np.array([1.0, 2.0]), 2)
        e = np.e
        np.testing.assert_allclose(g, [e / (e + e**2), e**2 / (e + e**2) - 1.0], rtol=1e-12)

    def test_sums_to_zero(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            k = int(rng.integers(2, 10))
            x = rng.normal(scale=5.0, size=k)
            y = int(rng.integers(1, k + 1))
            assert abs(softmax_error_driven(x, y).sum()) < 1e-12

    def test_matches_independent_analytic_gradient(self):
        # Independent route: probabilities via explicit log-sum-exp.
        rng = np.random.default_rng(3)
        for _ in range(200):
            k = int(rng.integers(2, 12))
            x = rng.normal(scale=4.0, size=k)
            y = int(rng.integers(1, k + 1))
            lse = np.log(np.sum(np.exp(x - x.max()))) + x.max()
            probs = np.exp(x - lse)
            expected = probs.copy()
            expected[y - 1] -= 1.0
            np.testing.assert_allclose(softmax_error_driven(x, y), expected, atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            k = int(rng.integers(2, 8))
            x = rng.normal(size=k)
            y = int(rng.integers(1, k + 1))

            def ce(v):
                lse = np.log(np.sum(np.exp(v - v.max()))) + v.max()
                return lse - v[y - 1]

            np.testing.assert_allclose(
                softmax_error_driven(x, y), central_diff(ce, x, eps=1e-6), atol=1e-5
            )

    def test_invalid_class_index(self):
        with pytest.raises(ValueError, match="out of range"):
            softmax_error_driven(np.array([0.0, 1.0]), 3)
        with pytest.raises(ValueError, match="out of range"):
            softmax_error_driven(np.array([0.0, 1.0]), 0)


class TestHingeErrorDriven:
    def test_margin_violated(self):
        np.testing.assert_array_equal(hinge_error_driven(0.5, 2), [0.0, -1.0])

    def test_margin_satisfied_class_two(self):
        np.testing.assert_array_equal(hinge_error_driven(2.0, 2), [0.0, 0.0])

    def test_margin_satisfied_class_one(self):
        np.testing.assert_array_equal(hinge_error_driven(-2.0, 1), [0.0, 0.0])

    def test_boundary_uses_zero_subgradient(self):
        # At the kink the step activates, selecting the flat subgradient.
        np.testing.assert_array_equal(hinge_error_driven(1.0, 2), [0.0, 0.0])
        np.testing.assert_array_equal(hinge_error_driven(-1.0, 1), [0.0, 0.0])

    def test_matches_finite_differences_away_from_kinks(self):
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(200):
            x = float(rng.uniform(-3, 3))
            if min(abs(x - 1.0), abs(x + 1.0)) < 1e-3:
                continue
            y = int(rng.integers(1, 3))

            def hinge(v):
                x1, x2 = -v[0], v[0]
                return max(1 - x1, 0.0) if y == 1 else max(1 - x2, 0.0)

            # d/dx of the loss, mapped to the two class scores (-x, x).
            num = central_diff(hinge, np.array([x]), eps=1e-6)[0]
            g = hinge_error_driven(x, y)
            analytic_dx = -g[0] + g[1]
            np.testing.assert_allclose(analytic_dx, num, atol=1e-5)
            checked += 1
        assert checked > 150

    def test_invalid_class(self):
        with pytest.raises(ValueError):
            hinge_error_driven(0.0, 3)
