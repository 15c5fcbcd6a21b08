"""Displacement law, log-MGF, rate function and speed roots."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from demefront import (
    RateFunction,
    build_step_law,
    check_rate_bounds,
    gaussian_rate,
    gaussian_speed,
    speed_root_sensitivity,
)

# Central cell mass for dt=0.1, dx=0.01, computed beforehand with a 40-digit
# normal-CDF oracle (mpmath erf): Phi(0.005/sqrt(0.1)) - Phi(-0.005/sqrt(0.1)).
MU0_ORACLE = 0.01261513697720343


def test_one_huge_cell_swallows_everything():
    law = build_step_law(dt=1.0, dx=100.0)
    mid = law.j_trunc
    assert abs(law.weights[mid] - 1.0) < 1e-12


def test_normalization_symmetry_and_zero_mean():
    law = build_step_law(0.1, 0.01)
    assert law.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(law.weights, law.weights[::-1])
    assert abs(np.sum(law.displacements * law.weights)) < 1e-16


def test_central_mass_matches_high_precision_oracle():
    law = build_step_law(0.1, 0.01)
    assert law.weights[law.j_trunc] == pytest.approx(MU0_ORACLE, rel=1e-13)


def test_tail_mass_tiny():
    for dt, dx in ((0.1, 0.01), (0.1, 1e-3), (0.01, 7e-4), (1.0, 100.0)):
        law = build_step_law(dt, dx)
        assert law.tail_mass < 1e-12


@given(st.floats(1e-3, 2.0), st.floats(1e-4, 0.5))
@settings(max_examples=40, deadline=None)
def test_law_properties_random(dt, dx):
    law = build_step_law(dt, dx)
    assert law.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(law.weights, law.weights[::-1])
    assert np.all(law.weights >= 0)
    assert law.tail_mass < 1e-12


def test_log_mgf_basics():
    rf = RateFunction(build_step_law(0.1, 0.01))
    assert rf.log_mgf(0.0) == 0.0
    assert rf.log_mgf(1.3) == pytest.approx(rf.log_mgf(-1.3), abs=1e-14)
    # quadratic-envelope bracket at lam = 1
    val = rf.log_mgf(1.0)
    assert 0.045 <= val <= 0.055
    # zero derivative at the origin (zero-mean law)
    assert abs(rf.log_mgf_derivative(0.0)) < 1e-14
    fd = (rf.log_mgf(1e-5) - rf.log_mgf(-1e-5)) / 2e-5
    assert abs(fd) < 1e-8


def test_log_mgf_convexity_on_grid():
    rf = RateFunction(build_step_law(0.1, 0.01))
    lams = np.linspace(-3.0, 3.0, 61)
    vals = np.array([rf.log_mgf(l) for l in lams])
    second = np.diff(vals, 2)
    assert np.all(second >= -1e-9)


def test_log_mgf_overflow_guard():
    rf = RateFunction(build_step_law(0.1, 0.01))
    with pytest.raises(OverflowError):
        rf.log_mgf(rf.lambda_guard * 1.5)


def test_rate_basics_and_gaussian_bracket():
    rf = RateFunction(build_step_law(0.1, 0.01))
    assert rf.rate(0.0) == 0.0
    assert rf.rate(0.25) == pytest.approx(rf.rate(-0.25), abs=1e-12)
    val = rf.rate(0.3)
    assert gaussian_rate(0.1, 0.295) <= val <= gaussian_rate(0.1, 0.305)
    assert 0.4351 <= val <= 0.4651


def test_rate_positive_off_origin():
    rf = RateFunction(build_step_law(0.1, 0.01))
    for y in (0.05, 0.1, 0.4):
        assert rf.rate(y) > 0.0


def test_rate_legendre_consistency():
    rf = RateFunction(build_step_law(0.1, 0.01))
    for y in (0.05, 0.15, 0.3, 0.5):
        lam = rf.tilt_for_slope(y)
        assert rf.log_mgf_derivative(lam) == pytest.approx(y, abs=1e-8)
        assert lam * y - rf.log_mgf(lam) == pytest.approx(rf.rate(y), abs=1e-8)


def test_rate_out_of_reach_is_infinite():
    rf = RateFunction(build_step_law(0.1, 0.01))
    assert rf.rate(1e9) == math.inf


def test_solve_speed_near_gaussian_root():
    rf = RateFunction(build_step_law(0.1, 1e-3))
    c = rf.solve_speed(1.1)
    c0 = gaussian_speed(0.1, 1.1)
    a = speed_root_sensitivity(1.0, 1.0)
    assert a == pytest.approx(19.217958540583197, rel=1e-12)
    assert abs(c - c0) <= a * 1e-3


def test_solve_speed_bracket_and_monotonicity():
    rf = RateFunction(build_step_law(0.1, 0.01))
    prev = 0.0
    for m in (1.05, 1.1, 1.3, 2.0):
        c = rf.solve_speed(m)
        c0 = gaussian_speed(0.1, m)
        assert 0.5 * c0 < c < 2.0 * c0
        assert c > prev
        prev = c


def test_solve_speed_refinement_converges_to_gaussian_root():
    c0 = gaussian_speed(0.1, 2.0)
    errs = []
    for dx in (1e-2, 1e-3, 1e-4):
        rf = RateFunction(build_step_law(0.1, dx))
        errs.append(abs(rf.solve_speed(2.0) - c0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4
    assert c0 == pytest.approx(0.3723297411, abs=1e-9)


def test_solve_speed_rejects_subcritical_mean():
    rf = RateFunction(build_step_law(0.1, 0.01))
    with pytest.raises(ValueError):
        rf.solve_speed(1.0)


def test_convexity_gap_example():
    # dt=0.1, dx=1e-3, y=0.3, eta=0.5: I(0.45) >= I(0.3) + 0.3^2/(4 dt) * 0.5
    rf = RateFunction(build_step_law(0.1, 1e-3))
    assert rf.rate(0.45) >= rf.rate(0.3) + 0.09 / 0.4 * 0.5 - 1e-12


def test_lipschitz_lower_bound_example():
    # floor slope y_low = 0.3: |I(0.4) - I(0.3)| >= 0.3/(4 dt) * 0.1 = 0.075
    rf = RateFunction(build_step_law(0.1, 1e-3))
    assert abs(rf.rate(0.4) - rf.rate(0.3)) >= 0.3 / 0.4 * 0.1 - 1e-12


def test_check_rate_bounds_all_pass():
    rf = RateFunction(build_step_law(0.1, 1e-3))
    entries = check_rate_bounds(rf)
    assert [e.name for e in entries] == [
        "log_mgf_gaussian_bracket",
        "rate_gaussian_bracket",
        "speed_root_bracket",
        "convexity_gap",
        "lipschitz_lower_bound",
    ]
    assert all(e.passed for e in entries), [e.detail for e in entries if not e.passed]


def test_builder_rejects_bad_grid():
    with pytest.raises(ValueError):
        build_step_law(0.0, 0.1)
    with pytest.raises(ValueError):
        build_step_law(0.1, -1.0)
