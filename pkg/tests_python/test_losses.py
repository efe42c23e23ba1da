"""Tests for pose losses, their analytic gradients and the gradient checker."""

from __future__ import annotations

import numpy as np
import pytest

from sign_kinematics.cli import run_gradcheck
from sign_kinematics.errors import ConfigError, DataError, DegenerateBoneError, ShapeMismatchError
from sign_kinematics.losses import (
    LossCoefficients,
    LossValue,
    bone_length_loss,
    bone_pose_loss,
    composite_loss,
    counter_regression_loss,
    eos_classification_loss,
    eos_loss_from_logits,
    gradient_check,
    sample_nonkink_instance,
    weighted_mse_loss,
)
from sign_kinematics.skeleton import Skeleton, default_skeleton
from sign_kinematics.weighting import BoneLambdas, JointWeights, uniform_lambdas, uniform_weights


def _make_pair() -> Skeleton:
    return Skeleton(("root", "tip"), (-1, 0), {"finger": (1,)})


def _make_fork() -> Skeleton:
    return Skeleton(("root", "a", "b"), (-1, 0, 0), {"upper_arm": (1,), "palm": (2,)})


def _random_weights(rng, skeleton):
    return (
        JointWeights(rng.uniform(0.1, 1.0, skeleton.num_joints)),
        BoneLambdas(rng.uniform(0.1, 1.0, skeleton.num_bones)),
    )


# ---------------------------------------------------------------------------
# individual terms
# ---------------------------------------------------------------------------


class TestWeightedMse:
    def test_identity(self):
        ref = np.random.default_rng(0).normal(size=(3, 16, 3))
        result = weighted_mse_loss(ref, ref, uniform_weights(16))
        assert result.value == 0.0
        np.testing.assert_array_equal(result.grad, 0.0)

    def test_hand_example(self):
        pred = np.array([[[1.0, 2.0, 2.0]]])
        result = weighted_mse_loss(pred, np.zeros_like(pred), JointWeights(np.array([0.5])))
        assert result.value == pytest.approx(4.5)

    def test_linear_in_weights(self):
        rng = np.random.default_rng(1)
        pred, ref = rng.normal(size=(2, 4, 5, 3))
        w = rng.uniform(size=5)
        single = weighted_mse_loss(pred, ref, JointWeights(w))
        double = weighted_mse_loss(pred, ref, JointWeights(2 * w))
        assert double.value == pytest.approx(2 * single.value)
        np.testing.assert_allclose(double.grad, 2 * single.grad)

    def test_averaged_over_frames(self):
        pred = np.array([[[1.0, 2.0, 2.0]]])
        ref = np.zeros_like(pred)
        w = JointWeights(np.array([0.5]))
        doubled = weighted_mse_loss(np.concatenate([pred, pred]), np.concatenate([ref, ref]), w)
        assert doubled.value == pytest.approx(4.5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            weighted_mse_loss(np.zeros((2, 3, 3)), np.zeros((3, 3, 3)), uniform_weights(3))
        with pytest.raises(ShapeMismatchError):
            weighted_mse_loss(np.zeros((2, 3, 3)), np.zeros((2, 3, 3)), uniform_weights(4))


class TestBoneLength:
    def test_identity(self):
        ref = np.random.default_rng(0).normal(size=(3, 16, 3))
        assert bone_length_loss(ref, ref, default_skeleton(), uniform_lambdas(15)).value == 0.0

    def test_hand_example(self):
        ref = np.array([[[0.0, 0, 0], [0, 3, 4]]])
        pred = np.array([[[0.0, 0, 0], [0, 0, 4]]])
        result = bone_length_loss(pred, ref, _make_pair(), uniform_lambdas(1))
        assert result.value == pytest.approx(0.2)

    def test_lambda_weighting(self):
        ref = np.array([[[0.0, 0, 0], [2, 0, 0], [0, 1, 0]]])
        pred = np.array([[[0.0, 0, 0], [3, 0, 0], [0, 1, 0]]])
        result = bone_length_loss(pred, ref, _make_fork(), BoneLambdas(np.array([2.0, 1.0])))
        assert result.value == pytest.approx(1.0)

    def test_degenerate_reference(self):
        ref = np.zeros((1, 2, 3))
        with pytest.raises(DegenerateBoneError):
            bone_length_loss(ref, ref, _make_pair(), uniform_lambdas(1))

    def test_kink_takes_zero_subgradient(self):
        ref = np.array([[[0.0, 0, 0], [1, 0, 0]]])
        pred = np.array([[[0.0, 0, 0], [0, 1, 0]]])
        result = bone_length_loss(pred, ref, _make_pair(), uniform_lambdas(1))
        assert result.value == 0.0
        np.testing.assert_array_equal(result.grad, 0.0)


class TestBonePose:
    def test_identity(self):
        ref = np.random.default_rng(0).normal(size=(3, 16, 3))
        result = bone_pose_loss(ref, ref, default_skeleton())
        assert result.value == 0.0
        np.testing.assert_array_equal(result.grad, 0.0)

    def test_hand_example(self):
        ref = np.array([[[0.0, 0, 0], [1, 0, 0]]])
        pred = np.array([[[0.0, 0, 0], [0, 1, 0]]])
        assert bone_pose_loss(pred, ref, _make_pair()).value == pytest.approx(1.41421356)

    def test_per_frame_average(self):
        ref = np.array([[[0.0, 0, 0], [1, 0, 0]]] * 2)
        pred = np.array([[[0.0, 0, 0], [0, 1, 0]]] * 2)
        assert bone_pose_loss(pred, ref, _make_pair()).value == pytest.approx(np.sqrt(2))


class TestEos:
    def test_saturated_correct(self):
        target = np.array([1.0, 1.0, 0.0])
        assert eos_classification_loss(target, target).value <= 1e-6

    def test_half_probability(self):
        result = eos_classification_loss(np.array([0.5]), np.array([1.0]))
        assert result.value == pytest.approx(np.log(2))

    def test_logit_gradient_closed_form(self):
        steps = 4
        result = eos_loss_from_logits(np.zeros(steps), np.ones(steps))
        np.testing.assert_allclose(result.grad, -0.5 / steps)

    def test_empty(self):
        assert eos_classification_loss(np.zeros(0), np.zeros(0)).value == 0.0

    def test_unit_step_weights_match_plain_mean(self):
        rng = np.random.default_rng(6)
        p, target = rng.uniform(0.05, 0.95, 7), (rng.uniform(size=7) > 0.5).astype(float)
        plain = eos_classification_loss(p, target)
        weighted = eos_classification_loss(p, target, np.ones(7))
        assert weighted.value == pytest.approx(plain.value, rel=1e-12)
        np.testing.assert_allclose(weighted.grad, plain.grad, rtol=1e-12)

    def test_step_weights_hand_example(self):
        # three continue frames at weight 1, the stop frame at weight 3
        targets, weights = np.array([1.0, 1, 1, 0]), np.array([1.0, 1, 1, 3])
        result = eos_loss_from_logits(np.zeros(4), targets, weights)
        assert result.value == pytest.approx(np.log(2))
        np.testing.assert_allclose(result.grad, [-0.5 / 6, -0.5 / 6, -0.5 / 6, 1.5 / 6])
        assert result.grad.sum() == pytest.approx(0.0, abs=1e-15)

    def test_weighted_logit_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        target = np.array([1.0, 1, 1, 1, 0])
        weights = np.array([1.0, 1, 1, 1, 4])
        logits = rng.normal(size=5)
        assert gradient_check(lambda x: eos_loss_from_logits(x, target, weights), logits) < 1e-6

    def test_step_weight_errors(self):
        with pytest.raises(ShapeMismatchError):
            eos_classification_loss(np.full(3, 0.5), np.ones(3), np.ones(2))
        with pytest.raises(DataError):
            eos_classification_loss(np.full(2, 0.5), np.ones(2), np.array([1.0, -1.0]))


class TestCounter:
    def test_perfect_counter(self):
        target = np.arange(1, 5) / 4
        result = counter_regression_loss(target, target)
        assert result.value == 0.0
        assert result.components == {"eos": 0.0}

    def test_hand_example(self):
        result = counter_regression_loss(np.array([0.0, 1.0]), np.array([0.5, 1.0]))
        assert result.value == pytest.approx(0.125)
        np.testing.assert_allclose(result.grad, [-0.5, 0.0])


# ---------------------------------------------------------------------------
# composite
# ---------------------------------------------------------------------------


class TestComposite:
    def _instance(self, seed: int = 3):
        skeleton = default_skeleton()
        rng = np.random.default_rng(seed)
        pred, ref = sample_nonkink_instance(rng, skeleton, 4)
        weights, lambdas = _random_weights(rng, skeleton)
        return pred, ref, skeleton, weights, lambdas

    def test_mse_only_matches_mse(self):
        pred, ref, skeleton, weights, lambdas = self._instance()
        coeffs = LossCoefficients(1.0, 0.0, 0.0, 0.0)
        result = composite_loss(pred, ref, skeleton, weights, lambdas, coeffs)
        mse = weighted_mse_loss(pred, ref, weights)
        assert result.value == mse.value
        np.testing.assert_array_equal(result.grad, mse.grad)

    def test_all_zero_coefficients(self):
        pred, ref, skeleton, weights, lambdas = self._instance()
        coeffs = LossCoefficients(0.0, 0.0, 0.0, 0.0)
        result = composite_loss(pred, ref, skeleton, weights, lambdas, coeffs)
        assert result.value == 0.0
        np.testing.assert_array_equal(result.grad, 0.0)

    def test_additive(self):
        pred, ref, skeleton, weights, lambdas = self._instance()
        coeffs = LossCoefficients(1.0, 1.0, 1.0, 0.0)
        result = composite_loss(pred, ref, skeleton, weights, lambdas, coeffs)
        parts = [
            weighted_mse_loss(pred, ref, weights),
            bone_length_loss(pred, ref, skeleton, lambdas),
            bone_pose_loss(pred, ref, skeleton),
        ]
        assert result.value == pytest.approx(sum(p.value for p in parts), abs=1e-12)
        assert set(result.components) == {"mse", "bone", "pose"}

    def test_negative_coefficient_rejected(self):
        with pytest.raises(ConfigError):
            LossCoefficients(alpha=-1.0)

    def test_coefficients_round_trip(self):
        coeffs = LossCoefficients(0.5, 2.0, 0.0, 1.5)
        assert LossCoefficients.from_dict(coeffs.to_dict()) == coeffs


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


class TestGradientCheck:
    def test_detects_wrong_gradient(self):
        def wrong(x):
            return LossValue(float(np.sum(x**2)), 4.0 * x)

        assert gradient_check(wrong, np.ones(4)) > 0.5

    def test_exact_gradient(self):
        def square(x):
            return LossValue(float(np.sum(x**2)), 2.0 * x)

        assert gradient_check(square, np.arange(5.0)) < 1e-7

    def test_instance_not_mutated(self):
        x = np.arange(3.0)
        gradient_check(lambda v: LossValue(float(v.sum()), np.ones_like(v)), x)
        np.testing.assert_array_equal(x, [0.0, 1.0, 2.0])

    def test_all_losses_on_random_instances(self):
        worst = run_gradcheck(seed=42, instances=100, num_frames=2)
        assert worst["mse"] < 1e-7
        assert worst["bone_length"] < 1e-5
        assert worst["bone_pose"] < 1e-5
        assert worst["eos"] < 1e-5

    def test_composite_gradient(self):
        skeleton = _make_fork()
        rng = np.random.default_rng(5)
        pred, ref = sample_nonkink_instance(rng, skeleton, 3)
        weights, lambdas = _random_weights(rng, skeleton)
        coeffs = LossCoefficients(0.7, 1.3, 0.4, 0.0)
        err = gradient_check(
            lambda x: composite_loss(x, ref, skeleton, weights, lambdas, coeffs), pred
        )
        assert err < 1e-5

    def test_counter_gradient(self):
        rng = np.random.default_rng(6)
        target = np.arange(1, 7) / 6
        err = gradient_check(lambda c: counter_regression_loss(c, target), rng.normal(size=6))
        assert err < 1e-7


# ---------------------------------------------------------------------------
# invariances
# ---------------------------------------------------------------------------


class TestInvariances:
    @pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
    def test_scale(self, scale):
        skeleton = default_skeleton()
        rng = np.random.default_rng(12)
        pred, ref = sample_nonkink_instance(rng, skeleton, 3)
        _, lambdas = _random_weights(rng, skeleton)
        for loss in (
            lambda p, r: bone_length_loss(p, r, skeleton, lambdas),
            lambda p, r: bone_pose_loss(p, r, skeleton),
        ):
            assert loss(scale * pred, scale * ref).value == pytest.approx(
                loss(pred, ref).value, abs=1e-10
            )

    def test_translation(self):
        skeleton = default_skeleton()
        rng = np.random.default_rng(13)
        pred, ref = sample_nonkink_instance(rng, skeleton, 3)
        _, lambdas = _random_weights(rng, skeleton)
        shift = rng.normal(size=3) * 10
        for loss in (
            lambda p, r: bone_length_loss(p, r, skeleton, lambdas),
            lambda p, r: bone_pose_loss(p, r, skeleton),
        ):
            assert loss(pred + shift, ref + shift).value == pytest.approx(
                loss(pred, ref).value, abs=1e-10
            )
