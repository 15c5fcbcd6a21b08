"""Forward Euler for the limiting trajectory: exactness, order, stability."""

import math

import numpy as np
import pytest

from demefront import (
    check_stability,
    constant_environment,
    euler_error_bound,
    periodic_limit_speed_empirical,
    periodic_plateaus,
    perturbation_bound,
    smooth_environment,
    solve_euler,
)

SINE_ENV = smooth_environment(
    lambda t, x: 2.0 + np.sin(x), r_inf=1.0, r_sup=3.0, lipschitz_L=1.0 / math.sqrt(2.0)
)


def test_constant_field_is_exact():
    sol = solve_euler(constant_environment(2.0), 0.0, 1.0, 0.01)
    assert np.allclose(sol.values, 2.0 * sol.times, atol=1e-14)


def test_unit_speed_case():
    sol = solve_euler(constant_environment(0.5), 0.0, 1.0, 0.01)
    assert sol.values[-1] == pytest.approx(1.0, abs=1e-12)


def test_values_strictly_increasing_with_bounded_slope():
    sol = solve_euler(SINE_ENV, 0.0, 2.0, 1e-3)
    steps = np.diff(sol.values)
    assert np.all(steps > 0)
    lo = math.sqrt(2.0 * 1.0) * 1e-3
    hi = math.sqrt(2.0 * 3.0) * 1e-3
    assert np.all(steps >= lo - 1e-12)
    assert np.all(steps <= hi + 1e-12)


def test_first_order_convergence_and_error_bound():
    ref = solve_euler(SINE_ENV, 0.0, 1.0, 1e-6)
    errs = {}
    for h in (1e-2, 1e-3):
        sol = solve_euler(SINE_ENV, 0.0, 1.0, h)
        stride = int(round(h / 1e-6))
        errs[h] = float(np.max(np.abs(sol.values - ref.values[::stride])))
    ratio = errs[1e-2] / errs[1e-3]
    assert 8.0 <= ratio <= 12.0
    for h, err in errs.items():
        assert err <= euler_error_bound(SINE_ENV.lipschitz_L, 1.0, h)


def test_comparison_between_ordered_fields():
    lo_env = constant_environment(1.0)
    hi_env = constant_environment(2.0)
    lo = solve_euler(lo_env, 0.0, 2.0, 1e-3)
    hi = solve_euler(hi_env, 0.0, 2.0, 1e-3)
    assert np.all(hi.values >= lo.values)


def test_zero_perturbation_changes_nothing():
    a = solve_euler(SINE_ENV, 0.0, 1.0, 1e-3, delta=0.0)
    b = solve_euler(SINE_ENV, 0.0, 1.0, 1e-3)
    assert np.array_equal(a.values, b.values)


def test_constant_field_perturbation_is_linear_shift():
    # L = 0: the delta-perturbed trajectory differs by exactly delta * t
    base = solve_euler(constant_environment(2.0), 0.0, 1.0, 1e-3)
    pert = solve_euler(constant_environment(2.0), 0.0, 1.0, 1e-3, delta=0.1)
    gap = np.max(np.abs(pert.values - base.values))
    assert gap == pytest.approx(0.1 * 1.0, abs=1e-12)
    assert gap <= perturbation_bound(0.1, 1.0, 0.0)


def test_stability_bound_on_sine_field():
    entries = check_stability(SINE_ENV, delta=0.05, T=2.0, h=1e-4)
    assert all(e.passed for e in entries), [e.detail for e in entries]
    # measured gap must also sit under the closed-form bound 0.05 * 3 * e^(L*2)
    assert perturbation_bound(0.05, 2.0, SINE_ENV.lipschitz_L) == pytest.approx(
        0.05 * 3.0 * math.exp(2.0 / math.sqrt(2.0)), rel=1e-12
    )


def test_plateau_average_speed_matches_harmonic_mean():
    env = periodic_plateaus(4.0, 1.0)
    slope = periodic_limit_speed_empirical(env, T=100.0, h=2e-4)
    target = 2.0 * math.sqrt(8.0) / 3.0  # harmonic mean of sqrt(8) and sqrt(2)
    assert target == pytest.approx(1.8856180831641267, rel=1e-12)
    assert abs(slope - target) / target < 0.005


def test_parameter_validation():
    env = constant_environment(1.0)
    with pytest.raises(ValueError):
        solve_euler(env, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        solve_euler(env, 0.0, 0.001, 0.01)
    with pytest.raises(ValueError):
        solve_euler(env, 0.0, 1.0, 0.01, delta=-1.0)
    with pytest.raises(ValueError):
        periodic_limit_speed_empirical(env, 10.0)
