import unittest

import numpy as np
import pytest

from minimasmith.bound.bound import basin_height
from minimasmith.bound.models import BoundInputs, QuadraticModel
from minimasmith.bound.quadrature import ellipse_area, kl_height_bound_check
from minimasmith.errors import ConfigError


class QuadraticModelTest(unittest.TestCase):
    def test_validation(self):
        with pytest.raises(ConfigError):
            QuadraticModel(hessian=np.array([[1.0, 2.0], [0.0, 1.0]]), l0=0.0, volume=1.0)
        with pytest.raises(ConfigError):
            QuadraticModel(hessian=np.diag([1.0, -1.0]), l0=0.0, volume=1.0)
        with pytest.raises(ConfigError):
            QuadraticModel(hessian=np.eye(2), l0=0.0, volume=0.0)

    def test_logdet(self):
        assert QuadraticModel(hessian=np.diag([2.0, 3.0]), l0=0.0, volume=1.0).logdet == pytest.approx(
            np.log(6.0)
        )


class EllipseAreaTest(unittest.TestCase):
    def test_basin_encloses_its_volume(self):
        hessian = np.array([[3.0, 0.5], [0.5, 1.0]])
        for volume in (0.01, 0.5, 2.0):
            inputs = BoundInputs(n=10, w=2, volume=volume, l0=0.2)
            height = basin_height(inputs, np.log(np.linalg.det(hessian)), exact=True)

            assert ellipse_area(hessian, height - 0.2) == pytest.approx(volume, rel=1e-2)

    def test_circle(self):
        assert ellipse_area(np.eye(2), 0.5) == pytest.approx(np.pi)

    def test_rejects_other_dimensions(self):
        with pytest.raises(ConfigError):
            ellipse_area(np.eye(3), 1.0)


class KLHeightCheckTest(unittest.TestCase):
    def test_isotropic_volume_sweep(self):
        for volume in np.geomspace(1e-4, 50.0, 8):
            report = kl_height_bound_check(QuadraticModel(hessian=np.eye(2), l0=0.1, volume=volume))
            assert report.holds
            assert report.kl >= 0.0

    def test_anisotropic(self):
        report = kl_height_bound_check(QuadraticModel(hessian=np.diag([1.0, 100.0]), l0=0.0, volume=1.0))
        assert report.holds

    def test_three_parameters(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            a = rng.standard_normal((3, 3))
            model = QuadraticModel(hessian=a @ a.T + np.eye(3), l0=0.05, volume=rng.uniform(0.1, 5.0))
            assert kl_height_bound_check(model).holds

    def test_point_mass_limit(self):
        report = kl_height_bound_check(QuadraticModel(hessian=np.eye(2), l0=0.3, volume=1e-12))
        assert report.kl == pytest.approx(0.0, abs=1e-9)
        assert report.h == pytest.approx(0.3, abs=1e-9)

    def test_dimension_guard(self):
        with pytest.raises(ConfigError):
            kl_height_bound_check(QuadraticModel(hessian=np.eye(6), l0=0.0, volume=1.0))
