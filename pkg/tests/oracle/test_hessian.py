import unittest

import numpy as np
import pytest

from minimasmith.errors import NumericError, ShapeError, SizeError
from minimasmith.net.models import Dataset, NetworkSpec
from minimasmith.net.network import batch_loss_and_grad, init_params
from minimasmith.oracle.hessian import (
    finite_diff_gradient,
    finite_diff_hessian,
    finite_diff_hessian_fn,
    max_relative_error,
    training_loss,
)


class FiniteDiffTest(unittest.TestCase):
    def test_quadratic_recovers_matrix(self):
        rng = np.random.default_rng(0)
        factor = rng.standard_normal((5, 5))
        matrix = factor @ factor.T
        x = rng.standard_normal(5)

        hessian = finite_diff_hessian_fn(lambda w: 0.5 * w @ matrix @ w, x)

        np.testing.assert_allclose(hessian.entries, matrix, atol=1e-5)
        np.testing.assert_array_equal(hessian.entries, hessian.entries.T)
        assert hessian.method == "central_fd"

    def test_gradient(self):
        grad = finite_diff_gradient(lambda w: np.sum(np.sin(w)), np.array([0.0, 1.0]))
        np.testing.assert_allclose(grad, np.cos([0.0, 1.0]), atol=1e-8)

    def test_relative_error_skips_tiny_coordinates(self):
        numeric = np.array([1.0, -2.0, 1e-9, 0.0])
        analytic = np.array([1.0 + 1e-6, -2.0, 5e-9, 1e-10])

        assert max_relative_error(analytic, numeric) == pytest.approx(1e-6)
        assert max_relative_error(np.full(2, 0.1), np.zeros(2)) == 0.0
        # a floor of zero keeps every nonzero coordinate
        assert max_relative_error(analytic, numeric, magnitude_floor=0.0) == pytest.approx(4.0)
        with pytest.raises(ShapeError):
            max_relative_error(np.zeros(2), np.zeros(3))

    def test_guards(self):
        with pytest.raises(SizeError) as err:
            finite_diff_hessian_fn(lambda w: 0.0, np.zeros(201))
        assert err.value.limit == 200

        with pytest.raises(NumericError):
            finite_diff_hessian_fn(lambda w: np.inf if w[0] > 0 else 0.0, np.zeros(2))


class TrainingLossHessianTest(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(1)
        self.spec = NetworkSpec((1, 2))
        self.dataset = Dataset.from_classes(
            rng.standard_normal((6, 1)), [0, 1, 0, 1, 1, 0], 2
        )
        self.params = init_params(self.spec, 3)

    def test_logistic_regression(self):
        hessian = finite_diff_hessian(self.spec, self.params, self.dataset).entries

        def _grad(w: np.ndarray) -> np.ndarray:
            return batch_loss_and_grad(self.spec, w, self.dataset)[1]

        # central differences of the analytic gradient, column by column
        step = 1e-6
        expected = np.stack(
            [
                (_grad(self.params + step * e) - _grad(self.params - step * e)) / (2 * step)
                for e in np.eye(self.spec.param_count)
            ],
            axis=1,
        )
        np.testing.assert_allclose(hessian, expected, atol=1e-5)

    def test_loss_matches_batch_loss(self):
        plain = training_loss(self.spec, self.params, self.dataset)
        batched, _ = batch_loss_and_grad(self.spec, self.params, self.dataset)
        assert plain == pytest.approx(batched, rel=1e-12)

    def test_size_guard(self):
        spec = NetworkSpec((10, 20, 2))
        with pytest.raises(SizeError):
            finite_diff_hessian(spec, init_params(spec, 0), self.dataset)
