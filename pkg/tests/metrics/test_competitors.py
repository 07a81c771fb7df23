import unittest

import numpy as np
import pytest

from minimasmith.metrics.competitors import (
    frobenius_from_gram,
    frobenius_metric,
    robustness_metric,
    spectral_norm_squared,
    spectral_radius_from_gram,
    spectral_radius_metric,
)
from minimasmith.metrics.gram import sample_subset
from minimasmith.net.models import Dataset, NetworkSpec
from minimasmith.net.network import init_params, input_jacobian, per_sample_jacobian


def _problem(n: int = 10, seed: int = 0):
    spec = NetworkSpec((3, 5, 2))
    rng = np.random.default_rng(seed)
    data = Dataset.from_classes(rng.standard_normal((n, 3)), np.arange(n) % 2, 2)
    return spec, init_params(spec, seed), data


class GramIdentityTest(unittest.TestCase):
    def test_identity_gram(self):
        assert frobenius_from_gram(np.eye(7)) == 7.0
        assert spectral_radius_from_gram(np.eye(4)) == pytest.approx(1.0)

    def test_diagonal_radius(self):
        assert spectral_radius_from_gram(np.diag([2.0, 8.0])) == pytest.approx(8.0, rel=1e-10)

    def test_rank_one_frobenius(self):
        g = np.array([[1.0, -2.0, 0.5]])
        assert frobenius_from_gram(g @ g.T) == pytest.approx(np.sum(g * g) ** 2)

    def test_frobenius_identity_on_random_jacobians(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            jac = rng.standard_normal((6, 40))
            brute = np.sum(np.square(jac.T @ jac))
            assert frobenius_from_gram(jac @ jac.T) == pytest.approx(brute, rel=1e-10)

    def test_spectral_norm_matches_svd(self):
        rng = np.random.default_rng(2)
        for shape in [(3, 10), (10, 3), (50, 50)]:
            matrix = rng.standard_normal(shape)
            expected = np.linalg.svd(matrix, compute_uv=False)[0] ** 2
            assert spectral_norm_squared(matrix) == pytest.approx(expected, rel=1e-8)


class RobustnessTest(unittest.TestCase):
    def test_zero_params(self):
        spec, _, data = _problem()
        assert robustness_metric(spec, np.zeros(spec.param_count), data) == 0.0

    def test_linear_model_closed_form(self):
        # Softmax regression, d = 2: at zero logits J_x = 0.25 * [[1, -1], [-1, 1]] @ W.
        spec = NetworkSpec((2, 2))
        params = np.array([3.0, 0.0, -3.0, 0.0, 0.0, 0.0])
        data = Dataset.from_classes(np.zeros((1, 2)), [0], 2)

        expected = np.linalg.norm(input_jacobian(spec, params, np.zeros(2)), 2) ** 2
        assert expected == pytest.approx(4.5)
        assert robustness_metric(spec, params, data) == pytest.approx(expected, rel=1e-8)

    def test_mean_over_samples(self):
        spec, params, data = _problem(n=4)
        expected = np.mean(
            [np.linalg.norm(input_jacobian(spec, params, x), 2) ** 2 for x in data.features]
        )
        assert robustness_metric(spec, params, data) == pytest.approx(expected, rel=1e-8)


class NetworkCompetitorTest(unittest.TestCase):
    def test_exact_frobenius_matches_brute_force(self):
        spec, params, data = _problem()
        jac = per_sample_jacobian(spec, params, data)
        brute = np.sum(np.square(jac.T @ jac))
        assert frobenius_metric(spec, params, data) == pytest.approx(brute, rel=1e-10)

    def test_sampled_frobenius_agrees_with_exact(self):
        spec, params, data = _problem()
        exact = frobenius_metric(spec, params, data)
        sampled = frobenius_metric(
            spec, params, data, {"competitor_mode": "sampled", "n_prime": 10, "trials": 3}
        )
        assert sampled == pytest.approx(exact, rel=0.05)

    def test_sampled_frobenius_with_entry_sampling(self):
        spec, params, data = _problem()
        exact = frobenius_metric(spec, params, data)
        sampled = frobenius_metric(
            spec,
            params,
            data,
            {
                "competitor_mode": "sampled",
                "n_prime": 10,
                "trials": 50,
                "frobenius_entries": 1000,
            },
        )
        assert sampled == pytest.approx(exact, rel=0.1)

    def test_exact_spectral_radius_matches_eigendecomposition(self):
        spec, params, data = _problem()
        jac = per_sample_jacobian(spec, params, data)
        expected = np.linalg.eigvalsh(jac @ jac.T)[-1]
        assert spectral_radius_metric(spec, params, data) == pytest.approx(expected, rel=1e-8)

    def test_sampled_spectral_radius_is_mean_of_trials(self):
        spec, params, data = _problem()
        options = {"competitor_mode": "sampled", "n_prime": 4, "trials": 3, "seed": 1}
        radii = []
        for trial in range(3):
            idx = sample_subset(10, 4, np.random.default_rng(1 + trial))
            jac = per_sample_jacobian(spec, params, data, idx)
            radii.append(np.linalg.eigvalsh(jac @ jac.T)[-1])

        assert spectral_radius_metric(spec, params, data, options) == pytest.approx(
            np.mean(radii), rel=1e-8
        )

    def test_sampled_spectral_radius_over_the_full_set_equals_exact(self):
        spec, params, data = _problem()
        exact = spectral_radius_metric(spec, params, data)
        sampled = spectral_radius_metric(
            spec, params, data, {"competitor_mode": "sampled", "n_prime": 10, "trials": 2}
        )
        smaller = spectral_radius_metric(
            spec, params, data, {"competitor_mode": "sampled", "n_prime": 4, "trials": 5}
        )

        assert sampled == pytest.approx(exact, rel=1e-8)
        # subset Grams are principal sub-matrices, so their radius never exceeds the full one
        assert smaller <= exact * (1.0 + 1e-8)
