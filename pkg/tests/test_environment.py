"""Environment construction, evaluation and validation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from demefront import (
    constant_environment,
    lipschitz_constant,
    periodic_plateaus,
    smooth_environment,
    validate,
)


def test_constant_evaluates_everywhere():
    env = constant_environment(2.0)
    assert env.evaluate(0.0, 0.0) == 2.0
    assert env.evaluate(5.0, -3.7) == 2.0
    vals = env.evaluate(np.linspace(0, 1, 7), np.linspace(-2, 2, 7))
    assert np.all(vals == 2.0)


def test_plateau_values_and_half_open_split():
    env = periodic_plateaus(3.0, 0.1, 1.0)
    assert env.evaluate(0.0, 0.25) == 3.0
    assert env.evaluate(0.0, 0.75) == 0.1
    assert env.evaluate(0.0, 1.25) == 3.0
    # the split point itself belongs to the low plateau
    assert env.evaluate(0.0, 0.5) == 0.1
    assert env.evaluate(0.0, 0.0) == 3.0


@given(st.floats(-50, 50), st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_plateau_periodicity_exact(x, k):
    env = periodic_plateaus(3.0, 0.1, 1.0)
    assert env.evaluate(0.0, x) == env.evaluate(0.0, x + k)


def test_negative_time_rejected():
    env = constant_environment(1.0)
    with pytest.raises(ValueError):
        env.evaluate(-0.1, 0.0)


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        constant_environment(0.0)
    with pytest.raises(ValueError):
        periodic_plateaus(0.1, 3.0)  # needs mu_plus > mu_minus
    with pytest.raises(ValueError):
        periodic_plateaus(3.0, -0.1)


def test_lipschitz_constant_formula():
    # field 2 + sin(x): |dr/dx| <= 1, |dr/dt| = 0, r_inf = 1
    assert lipschitz_constant(0.0, 1.0, 1.0) == pytest.approx(1.0 / math.sqrt(2.0))


def test_validate_constant_passes():
    report = validate(constant_environment(2.0))
    assert report.passed
    assert report.entries == ()


def test_validate_smooth_sine_passes():
    env = smooth_environment(
        lambda t, x: 2.0 + np.sin(x), r_inf=1.0, r_sup=3.0,
        lipschitz_L=1.0 / math.sqrt(2.0),
    )
    report = validate(env, n_default=4000)
    assert report.passed, [e.message for e in report.entries]


def test_validate_catches_overdeclared_lower_bound():
    env = smooth_environment(lambda t, x: 2.0 + np.sin(x), 1.5, 3.0, 1.0 / math.sqrt(2.0))
    report = validate(env, n_default=4000)
    assert not report.passed
    assert any("below declared r_inf" in e.message for e in report.violations)
    # the offending sample sits near the sine minimum
    t, x = report.violations[0].where
    assert math.sin(x) < -0.95


def test_validate_flags_plateau_discontinuity_without_failing():
    report = validate(periodic_plateaus(3.0, 0.1), n_default=2000)
    assert report.passed
    assert any("discontinuous" in e.message for e in report.entries)


def test_validate_catches_understated_lipschitz():
    env = smooth_environment(lambda t, x: 2.0 + np.sin(3.0 * x), 1.0, 3.0, lipschitz_L=0.2)
    report = validate(env, n_default=4000)
    assert any("exceeds L*" in e.message for e in report.violations)
