import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import orderest as oe
from orderest.errors import ConfigurationError, DomainError

from conftest import central_difference


def test_squared_error_location_values():
    loss = oe.squared_error_loss(oe.LOCATION)
    assert loss.value(0.0) == 0.0
    assert loss.deriv(3.0) == 6.0
    assert loss.argmin == 0.0


def test_squared_error_scale_values():
    loss = oe.squared_error_loss(oe.SCALE)
    assert loss.value(2.0) == pytest.approx(1.0)
    assert loss.value(1.0) == 0.0
    assert loss.deriv(2.0) == pytest.approx(2.0)


def test_linex_values():
    loss = oe.linex_loss()
    assert loss.value(0.0) == 0.0
    assert loss.deriv(0.0) == 0.0
    # e^{ln 2} - 1 = 1, cross-checked by a central difference of the value
    assert loss.deriv(math.log(2.0)) == pytest.approx(1.0, abs=1e-12)
    fd = central_difference(lambda t: float(loss.value(t)), math.log(2.0))
    assert fd == pytest.approx(1.0, rel=1e-6)


def test_scale_domain_rejected():
    loss = oe.squared_error_loss(oe.SCALE)
    with pytest.raises(DomainError):
        loss.value(0.0)
    with pytest.raises(DomainError):
        loss.deriv(-1.0)
    with pytest.raises(DomainError):
        loss.value(np.array([0.5, -0.5]))


def test_custom_loss_requires_derivative():
    with pytest.raises(ConfigurationError):
        oe.custom_loss(lambda t: t * t, None)


def test_make_loss_names():
    assert oe.make_loss("squared_error", oe.SCALE).argmin == 1.0
    with pytest.raises(ConfigurationError):
        oe.make_loss("huber", oe.LOCATION)
    with pytest.raises(ConfigurationError):
        oe.make_loss("linex", oe.SCALE)


@given(st.floats(min_value=-20.0, max_value=20.0))
@settings(max_examples=200, deadline=None)
def test_location_derivative_matches_finite_difference(t):
    for loss in (oe.squared_error_loss(oe.LOCATION), oe.linex_loss()):
        fd = central_difference(lambda x: float(loss.value(x)), t)
        assert fd == pytest.approx(float(loss.deriv(t)), rel=1e-6, abs=1e-6)


@given(st.floats(min_value=0.01, max_value=50.0))
@settings(max_examples=200, deadline=None)
def test_scale_derivative_matches_finite_difference(t):
    loss = oe.squared_error_loss(oe.SCALE)
    fd = central_difference(lambda x: float(loss.value(x)), t, step=1e-7 * max(1.0, t))
    assert fd == pytest.approx(float(loss.deriv(t)), rel=1e-6, abs=1e-6)


@given(st.floats(min_value=-30.0, max_value=30.0))
@settings(max_examples=200, deadline=None)
def test_builtin_losses_nonnegative(t):
    for loss in (oe.squared_error_loss(oe.LOCATION), oe.linex_loss()):
        v = float(loss.value(t))
        assert v >= 0.0
        if abs(t - loss.argmin) > 1e-8:
            assert v > 0.0


def test_bowl_check_passes_builtins():
    grid = np.linspace(-5.0, 5.0, 41)
    for loss in (oe.squared_error_loss(oe.LOCATION), oe.linex_loss()):
        assert oe.check_bowl_conditions(loss, grid).passed
    scale_grid = np.linspace(0.05, 6.0, 41)
    assert oe.check_bowl_conditions(oe.squared_error_loss(oe.SCALE), scale_grid).passed


def test_bowl_check_flags_decreasing_function():
    bad = oe.custom_loss(lambda t: -t, lambda t: np.full_like(np.asarray(t, dtype=float), -1.0))
    report = oe.check_bowl_conditions(bad, [-3.0, 0.0, 3.0])
    assert not report.passed
    assert any("increasing_right" in v[0] for v in report.violations)


def test_bowl_check_needs_three_points():
    with pytest.raises(DomainError):
        oe.check_bowl_conditions(oe.squared_error_loss(oe.LOCATION), [0.0, 1.0])
    # points outside the scale domain do not count
    with pytest.raises(DomainError):
        oe.check_bowl_conditions(oe.squared_error_loss(oe.SCALE), [-1.0, -0.5, 0.5, 1.0])
