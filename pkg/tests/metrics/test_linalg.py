import unittest

import numpy as np
import pytest

from minimasmith.errors import NumericError, ShapeError
from minimasmith.metrics.linalg import power_iteration, sorted_eigenvalues, symmetrize


class SymmetrizeTest(unittest.TestCase):
    def test_average_with_transpose(self):
        matrix = np.array([[1.0, 2.0], [0.0, 3.0]])
        np.testing.assert_array_equal(symmetrize(matrix), [[1.0, 1.0], [1.0, 3.0]])

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            symmetrize(np.zeros((2, 3)))

    def test_sorted_eigenvalues(self):
        np.testing.assert_allclose(sorted_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])
        with pytest.raises(NumericError):
            sorted_eigenvalues(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class PowerIterationTest(unittest.TestCase):
    def test_diagonal(self):
        eigenvalue, vec = power_iteration(np.diag([2.0, 8.0]))
        assert eigenvalue == pytest.approx(8.0, rel=1e-10)
        assert abs(vec[1]) == pytest.approx(1.0, rel=1e-8)

    def test_zero_matrix(self):
        eigenvalue, vec = power_iteration(np.zeros((3, 3)))
        assert eigenvalue == 0.0
        np.testing.assert_array_equal(vec, [1.0, 0.0, 0.0])

    def test_matches_dense_eigendecomposition(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            jac = rng.standard_normal((8, 30))
            gram = jac @ jac.T
            eigenvalue, _ = power_iteration(gram)
            assert eigenvalue == pytest.approx(np.linalg.eigvalsh(gram)[-1], rel=1e-8)

    def test_is_deterministic_per_seed(self):
        gram = np.random.default_rng(0).standard_normal((5, 5))
        gram = gram @ gram.T
        assert power_iteration(gram, seed=3) == pytest.approx(power_iteration(gram, seed=3))

    def test_iteration_cap_returns_last_estimate(self):
        # Two nearly equal eigenvalues converge slowly.
        eigenvalue, _ = power_iteration(np.diag([1.0, 1.0 - 1e-9]), max_iter=3)
        assert 1.0 - 1e-6 < eigenvalue <= 1.0 + 1e-12
