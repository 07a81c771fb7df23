import unittest

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimasmith.bound.bound import (
    basin_height,
    bound_rhs,
    bound_sweep,
    curvature_term,
    log_curvature_term,
)
from minimasmith.bound.models import BoundInputs
from minimasmith.errors import ConfigError, NumericError


class BoundInputsTest(unittest.TestCase):
    def test_validation(self):
        with pytest.raises(ConfigError) as err:
            BoundInputs(n=1, w=3)
        assert err.value.option == "n"

        for kwargs, option in [
            ({"w": 0}, "w"),
            ({"volume": 0.0}, "volume"),
            ({"delta": 0.0}, "delta"),
            ({"delta": 1.5}, "delta"),
            ({"l0": -0.1}, "l0"),
            ({"gamma": float("nan")}, "gamma"),
        ]:
            with pytest.raises(ConfigError) as err:
                BoundInputs(**{"n": 10, "w": 3, **kwargs})
            assert err.value.option == option

    def test_train_loss_plugin_defaults_to_l0(self):
        assert BoundInputs(n=10, w=3, l0=0.2).train_loss_plugin == 0.2
        assert BoundInputs(n=10, w=3, l0=0.2, expected_train_loss=0.3).train_loss_plugin == 0.3


class CurvatureTermTest(unittest.TestCase):
    def test_closed_form(self):
        assert curvature_term(BoundInputs(n=10, w=1)) == pytest.approx(1.0 / (4.0 * np.e))

    def test_doubles_when_gamma_grows_by_w_ln_2(self):
        base = BoundInputs(n=10, w=7, gamma=-3.0)
        shifted = BoundInputs(n=10, w=7, gamma=-3.0 + 7.0 * np.log(2.0))
        assert curvature_term(shifted) == pytest.approx(2.0 * curvature_term(base), rel=1e-12)

    def test_vanishes_with_volume(self):
        values = [curvature_term(BoundInputs(n=10, w=4, volume=v)) for v in np.geomspace(1.0, 1e-200, 20)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-90

    def test_overflow(self):
        inputs = BoundInputs(n=10, w=1, gamma=1e6)
        with pytest.raises(NumericError):
            curvature_term(inputs)
        assert np.isfinite(log_curvature_term(inputs))
        assert log_curvature_term(inputs) == pytest.approx(1e6 - np.log(4.0 * np.e), rel=1e-12)


class BoundRhsTest(unittest.TestCase):
    def test_vanishing_curvature(self):
        inputs = BoundInputs(n=2, w=1, delta=1.0, gamma=-1e6, expected_train_loss=0.3)
        result = bound_rhs(inputs)
        assert result.rhs == pytest.approx(0.3 + 2.0 * np.sqrt(np.log(4.0)), rel=1e-12)

    def test_matches_direct_evaluation(self):
        base = BoundInputs(n=10_000, w=50, delta=0.05, l0=0.01, volume=0.5)
        for gamma in np.linspace(-400.0, 100.0, 30):
            inputs = BoundInputs(n=10_000, w=50, delta=0.05, l0=0.01, volume=0.5, gamma=gamma)
            a = (
                inputs.w
                * inputs.volume ** (2.0 / inputs.w)
                * np.pi ** (1.0 / inputs.w)
                * np.exp(gamma / inputs.w)
                / (4.0 * np.pi * np.e)
            )
            direct = base.l0 + 2.0 * np.sqrt(
                (2.0 * base.l0 + 2.0 * a + np.log(2.0 * base.n / base.delta)) / (base.n - 1)
            )
            assert bound_rhs(inputs).rhs == pytest.approx(direct, rel=1e-12)

    def test_monotone_sweep(self):
        inputs = BoundInputs(n=10_000, w=100)
        sweep = bound_sweep(inputs, np.linspace(-2000.0, 500.0, 30))

        assert len(sweep) == 30
        assert all(b[1] > a[1] for a, b in zip(sweep, sweep[1:]))

    def test_monotone_in_l0_and_delta(self):
        low = bound_rhs(BoundInputs(n=100, w=5, l0=0.1)).rhs
        assert bound_rhs(BoundInputs(n=100, w=5, l0=0.2, expected_train_loss=0.1)).rhs > low
        assert bound_rhs(BoundInputs(n=100, w=5, l0=0.1, delta=0.01)).rhs > low
        assert bound_rhs(BoundInputs(n=1000, w=5, l0=0.1)).rhs < low

    def test_result_invariants(self):
        result = bound_rhs(BoundInputs(n=50, w=3, l0=0.05, gamma=2.0))
        assert result.a >= 0.0
        assert result.rhs >= 0.05
        assert result.h >= 0.05
        assert result.log_a == pytest.approx(np.log(result.a))

    def test_extreme_inputs_stay_finite_in_log_domain(self):
        for gamma in (-1e6, 1e6):
            for volume in (1e-300, 1e30):
                for w in (1, 10_000_000):
                    result = bound_rhs(BoundInputs(n=100, w=w, volume=volume, gamma=gamma))
                    assert np.isfinite(result.log_a)
                    assert np.isfinite(result.log_gap)
                    assert not np.isnan(result.rhs)

    @given(
        st.floats(min_value=-100.0, max_value=1e4),
        st.floats(min_value=1e-3, max_value=10.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_strictly_increasing_in_gamma(self, gamma, step):
        inputs = BoundInputs(n=1000, w=20, gamma=gamma)
        shifted = BoundInputs(n=1000, w=20, gamma=gamma + step)
        assert bound_rhs(shifted).log_gap > bound_rhs(inputs).log_gap


class BasinHeightTest(unittest.TestCase):
    def test_closed_form(self):
        inputs = BoundInputs(n=10, w=2, volume=np.sqrt(np.pi))
        assert basin_height(inputs, 0.0) == pytest.approx(2.0**1.5 / (4.0 * np.e))
        assert basin_height(inputs, 0.0) == pytest.approx(0.2601, abs=1e-4)

    def test_vanishing_volume(self):
        assert basin_height(BoundInputs(n=10, w=3, volume=1e-200, l0=0.4), 1.0) == pytest.approx(0.4)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=30, deadline=None)
    def test_volume_scaling(self, factor):
        inputs = BoundInputs(n=10, w=5, volume=0.7, l0=0.1)
        scaled = BoundInputs(n=10, w=5, volume=0.7 * factor, l0=0.1)

        base = basin_height(inputs, 1.5) - 0.1
        assert basin_height(scaled, 1.5) - 0.1 == pytest.approx(factor ** (2.0 / 5.0) * base, rel=1e-12)

    def test_exact_form_for_two_parameters(self):
        # Ellipse of area V: h - L0 = V sqrt|H| / (2 pi).
        inputs = BoundInputs(n=10, w=2, volume=0.3)
        assert basin_height(inputs, np.log(4.0), exact=True) == pytest.approx(0.3 * 2.0 / (2.0 * np.pi))
