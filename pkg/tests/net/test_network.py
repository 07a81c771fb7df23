import unittest

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimasmith.errors import ConfigError, EmptyBatch, ShapeError
from minimasmith.net.models import Dataset, LabeledSample, NetworkSpec, smooth_targets
from minimasmith.net.network import (
    accuracy,
    batch_loss_and_grad,
    class_jacobian,
    dataset_loss,
    entropy,
    forward,
    init_params,
    input_jacobian,
    loss,
    per_sample_grad,
    per_sample_jacobian,
    smooth_labels,
)
from minimasmith.oracle.hessian import finite_diff_gradient, max_relative_error


def _dataset(n: int, d: int, k: int, seed: int = 0, epsilon: float = 0.0) -> Dataset:
    rng = np.random.default_rng(seed)
    classes = np.arange(n) % k
    return Dataset(
        features=rng.standard_normal((n, d)),
        labels=smooth_targets(classes, k, epsilon),
    )


def _assert_matches_central_diff(func, x: np.ndarray, analytic: np.ndarray) -> None:
    # per-coordinate relative error, coordinates above 1e-8 in magnitude
    numeric = finite_diff_gradient(func, x, step=1e-5)
    assert max_relative_error(analytic, numeric, magnitude_floor=1e-8) < 1e-5
    assert np.all(np.abs(analytic[np.abs(numeric) <= 1e-8]) < 1e-7)


class NetworkSpecTest(unittest.TestCase):
    def test_param_count(self):
        assert NetworkSpec((4, 3)).param_count == 15
        assert NetworkSpec((10, 32, 32, 2)).param_count == 352 + 1056 + 66

    def test_invalid_specs(self):
        with pytest.raises(ConfigError) as err:
            NetworkSpec((4,))
        assert err.value.option == "layer_sizes"

        with pytest.raises(ConfigError):
            NetworkSpec((4, 0, 2))
        with pytest.raises(ConfigError):
            NetworkSpec((4, 1))
        with pytest.raises(ConfigError) as err:
            NetworkSpec((4, 2), activation="sigmoid")
        assert err.value.option == "activation"

    def test_unpack_keeps_leading_axes(self):
        spec = NetworkSpec((3, 5, 2))
        params = np.arange(2 * spec.param_count, dtype=float).reshape(2, -1)
        layers = spec.unpack(params)

        assert layers[0][0].shape == (2, 5, 3)
        assert layers[0][1].shape == (2, 5)
        assert layers[1][0].shape == (2, 2, 5)
        assert layers[1][1][0, -1] == spec.param_count - 1

    def test_check_params(self):
        spec = NetworkSpec((3, 2))
        with pytest.raises(ShapeError):
            spec.check_params(np.zeros(7))
        with pytest.raises(ConfigError):
            spec.check_params(np.full(8, np.nan))


class DatasetTest(unittest.TestCase):
    def test_rejects_bad_inputs(self):
        with pytest.raises(EmptyBatch):
            Dataset(features=np.zeros((0, 2)), labels=np.zeros((0, 2)))
        with pytest.raises(ShapeError):
            Dataset(features=np.zeros((3, 2)), labels=np.eye(2))
        with pytest.raises(ConfigError):
            Dataset(features=np.zeros((2, 2)), labels=np.array([[0.5, 0.6], [1.0, 0.0]]))
        with pytest.raises(ConfigError):
            Dataset.from_classes(np.zeros((2, 2)), [0, 3], 3)

    def test_check_against(self):
        data = _dataset(4, 3, 2)
        data.check_against(NetworkSpec((3, 2)))
        with pytest.raises(ShapeError):
            data.check_against(NetworkSpec((3, 4)))

    def test_smoothed_keeps_onehot(self):
        data = _dataset(6, 2, 3).smoothed(0.1)
        np.testing.assert_allclose(data.labels.sum(axis=1), 1.0)
        np.testing.assert_array_equal(data.onehot, np.arange(6) % 3)
        assert data.labels.max() == pytest.approx(0.9 + 0.1 / 3)


class LossTest(unittest.TestCase):
    def test_smooth_labels(self):
        np.testing.assert_allclose(smooth_labels(1, 4, 0.2), [0.05, 0.85, 0.05, 0.05])
        with pytest.raises(ConfigError):
            smooth_labels(4, 4, 0.1)

    def test_smooth_labels_examples(self):
        np.testing.assert_array_equal(smooth_labels(2, 4, 0.0), [0.0, 0.0, 1.0, 0.0])
        np.testing.assert_allclose(smooth_labels(0, 2, 0.1), [0.95, 0.05], rtol=1e-12)
        with pytest.raises(ConfigError):
            smooth_labels(0, 2, 1.0)

    def test_confident_prediction_loss(self):
        assert loss(np.array([0.8808, 0.1192]), np.array([1.0, 0.0])) == pytest.approx(
            0.1269, abs=1e-4
        )
        assert loss(np.full(4, 0.25), np.array([0.0, 0.0, 1.0, 0.0])) == pytest.approx(np.log(4.0))

    def test_loss_ignores_zero_label_terms(self):
        assert loss(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 0.0
        assert loss(np.array([0.5, 0.5]), np.array([0.0, 1.0])) == pytest.approx(np.log(2.0))
        with pytest.raises(ShapeError):
            loss(np.array([0.5, 0.5]), np.array([1.0, 0.0, 0.0]))

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2, max_size=6))
    @settings(max_examples=50, deadline=None)
    def test_loss_is_bounded_below_by_entropy(self, weights):
        y = np.asarray(weights) / np.sum(weights)
        q = np.roll(y, 1)
        assert loss(q, y) >= entropy(y) - 1e-12
        assert loss(y, y) == pytest.approx(entropy(y))


class ForwardTest(unittest.TestCase):
    def test_probabilities_sum_to_one(self):
        spec = NetworkSpec((3, 8, 4))
        params = init_params(spec, 0)
        cache = forward(spec, params, np.ones((5, 3)))

        assert cache.probs.shape == (5, 4)
        np.testing.assert_allclose(cache.probs.sum(axis=1), 1.0)

    def test_single_input_matches_batch_row(self):
        spec = NetworkSpec((3, 8, 4), activation="relu")
        params = init_params(spec, 1)
        x = np.random.default_rng(0).standard_normal((4, 3))

        np.testing.assert_allclose(forward(spec, params, x[2]).probs, forward(spec, params, x).probs[2])

    def test_temperature_flattens_the_softmax(self):
        spec = NetworkSpec((3, 4))
        params = init_params(spec, 2)
        x = np.ones(3)

        assert forward(spec, params, x, 10.0).probs.max() < forward(spec, params, x).probs.max()
        with pytest.raises(ConfigError):
            forward(spec, params, x, 0.0)

    def test_wrong_input_dimension(self):
        spec = NetworkSpec((3, 4))
        with pytest.raises(ShapeError):
            forward(spec, init_params(spec, 0), np.ones(4))

    def test_init_params_is_deterministic(self):
        spec = NetworkSpec((5, 6, 2))
        np.testing.assert_array_equal(init_params(spec, 7), init_params(spec, 7))
        assert not np.array_equal(init_params(spec, 7), init_params(spec, 8))


class GradientTest(unittest.TestCase):
    def setUp(self):
        self.spec = NetworkSpec((3, 5, 4, 3))
        self.params = init_params(self.spec, 3) * 0.5
        self.data = _dataset(6, 3, 3, epsilon=0.1)

    def test_per_sample_grad_matches_finite_differences(self):
        sample = self.data[1]

        def _loss(w):
            return loss(forward(self.spec, w, sample.x).probs, sample.y)

        _assert_matches_central_diff(
            _loss, self.params, per_sample_grad(self.spec, self.params, sample)
        )

    def test_random_draws_match_finite_differences(self):
        shapes = [(3, 4, 3), (2, 2), (4, 5, 3, 2), (3, 6, 4)]
        for case in range(20):
            spec = NetworkSpec(shapes[case % len(shapes)])
            params = init_params(spec, case)
            data = _dataset(1, spec.input_dim, spec.n_classes, seed=case, epsilon=0.1)
            sample = data[0]

            def _loss(w, spec=spec, sample=sample):
                return loss(forward(spec, w, sample.x).probs, sample.y)

            _assert_matches_central_diff(_loss, params, per_sample_grad(spec, params, sample))

    def test_relu_gradient_matches_finite_differences(self):
        spec = NetworkSpec((3, 6, 2), activation="relu")
        params = init_params(spec, 4)
        data = _dataset(3, 3, 2, seed=5)

        def _mean_loss(w):
            return dataset_loss(spec, w, data)

        _, grad = batch_loss_and_grad(spec, params, data)
        _assert_matches_central_diff(_mean_loss, params, grad)

    def test_jacobian_rows_are_per_sample_gradients(self):
        jac = per_sample_jacobian(self.spec, self.params, self.data, indices=[0, 4])

        assert jac.shape == (2, self.spec.param_count)
        np.testing.assert_allclose(
            jac[1], per_sample_grad(self.spec, self.params, self.data[4], use_onehot=True)
        )

    def test_class_jacobian_rows_are_onehot_gradients(self):
        x = self.data.features[2]
        jac = class_jacobian(self.spec, self.params, x, temperature=2.0)
        data = Dataset.from_classes(np.tile(x, (3, 1)), [0, 1, 2], 3)

        expected = per_sample_jacobian(self.spec, self.params, data, temperature=2.0)
        np.testing.assert_allclose(jac, expected, atol=1e-12)

    def test_batch_mean_equals_mean_of_sample_gradients(self):
        value, grad = batch_loss_and_grad(self.spec, self.params, self.data)
        jac = per_sample_jacobian(self.spec, self.params, self.data, use_onehot=False)

        np.testing.assert_allclose(grad, jac.mean(axis=0), atol=1e-12)
        assert value == pytest.approx(dataset_loss(self.spec, self.params, self.data))

    def test_input_jacobian_matches_finite_differences(self):
        x = self.data.features[0]

        for i in range(3):
            def _prob(v, i=i):
                return forward(self.spec, self.params, v).probs[i]

            _assert_matches_central_diff(_prob, x, input_jacobian(self.spec, self.params, x)[i])

    def test_accuracy(self):
        spec = NetworkSpec((2, 2))
        # Identity weights classify by the larger coordinate.
        params = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        data = Dataset.from_classes(np.array([[2.0, 0.0], [0.0, 2.0], [3.0, 1.0]]), [0, 1, 1], 2)

        assert accuracy(spec, params, data) == pytest.approx(2.0 / 3.0)


class ClosedFormTest(unittest.TestCase):
    """Softmax regression and zero-parameter cases with known answers."""

    def setUp(self):
        rng = np.random.default_rng(21)
        self.spec = NetworkSpec((3, 4))
        self.params = rng.standard_normal(self.spec.param_count)
        self.x = rng.standard_normal(3)

    def _weights(self) -> np.ndarray:
        return self.params[:12].reshape(4, 3)

    def test_zero_params_give_uniform_probabilities(self):
        spec = NetworkSpec((3, 5, 4))
        probs = forward(spec, np.zeros(spec.param_count), self.x).probs
        np.testing.assert_allclose(probs, 0.25, rtol=1e-12)

    def test_two_class_logits(self):
        spec = NetworkSpec((2, 2))
        # identity weights pass the input through as logits (2, 0)
        params = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        probs = forward(spec, params, np.array([2.0, 0.0])).probs
        np.testing.assert_allclose(probs, [0.8808, 0.1192], atol=1e-4)

    def test_output_bias_shift_leaves_probabilities_unchanged(self):
        spec = NetworkSpec((3, 5, 4))
        params = init_params(spec, 6)
        shifted = params.copy()
        shifted[-4:] += 3.7

        np.testing.assert_allclose(
            forward(spec, shifted, self.x).probs, forward(spec, params, self.x).probs, atol=1e-12
        )

    def test_gradient_vanishes_when_probabilities_match_target(self):
        probs = forward(self.spec, self.params, self.x).probs
        sample = LabeledSample(x=self.x, y=probs, y_onehot=int(np.argmax(probs)))

        np.testing.assert_allclose(
            per_sample_grad(self.spec, self.params, sample), 0.0, atol=1e-14
        )

    def test_softmax_regression_gradient(self):
        sample = Dataset.from_classes(self.x[None, :], [2], 4)[0]
        probs = forward(self.spec, self.params, self.x).probs
        grad = per_sample_grad(self.spec, self.params, sample)

        np.testing.assert_allclose(grad[:12], np.outer(probs - sample.y, self.x).ravel(), atol=1e-12)
        np.testing.assert_allclose(grad[12:], probs - sample.y, atol=1e-12)

    def test_singleton_batch_equals_per_sample_values(self):
        spec = NetworkSpec((3, 5, 4))
        params = init_params(spec, 8)
        data = _dataset(1, 3, 4, seed=2, epsilon=0.1)

        value, grad = batch_loss_and_grad(spec, params, data)

        assert value == pytest.approx(loss(forward(spec, params, data[0].x).probs, data[0].y), rel=1e-12)
        np.testing.assert_allclose(grad, per_sample_grad(spec, params, data[0]), atol=1e-12)

    def test_duplicated_batch_keeps_mean_loss_and_gradient(self):
        spec = NetworkSpec((3, 5, 4))
        params = init_params(spec, 9)
        data = _dataset(5, 3, 4, seed=3, epsilon=0.1)
        doubled = Dataset(
            features=np.concatenate([data.features, data.features]),
            labels=np.concatenate([data.labels, data.labels]),
        )

        value, grad = batch_loss_and_grad(spec, params, data)
        doubled_value, doubled_grad = batch_loss_and_grad(spec, params, doubled)

        assert doubled_value == pytest.approx(value, rel=1e-12)
        np.testing.assert_allclose(doubled_grad, grad, atol=1e-12)

    def test_input_jacobian_of_zero_params(self):
        spec = NetworkSpec((3, 5, 4))
        jac = input_jacobian(spec, np.zeros(spec.param_count), self.x)

        assert jac.shape == (4, 3)
        np.testing.assert_array_equal(jac, 0.0)

    def test_linear_input_jacobian(self):
        probs = forward(self.spec, self.params, self.x).probs
        expected = (np.diag(probs) - np.outer(probs, probs)) @ self._weights()

        np.testing.assert_allclose(
            input_jacobian(self.spec, self.params, self.x), expected, atol=1e-12
        )
