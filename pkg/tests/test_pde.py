"""Explicit reaction-diffusion solver: fixed points, fronts, comparison."""

import math

import numpy as np
import pytest
from scipy.special import erf

from demefront import constant_environment, estimate_speed, periodic_plateaus
from demefront.pde import (
    WindowFault,
    cfl_limit,
    front_position,
    make_front_state,
    reaction_term,
    run_pde,
    step_pde,
)

ENV1 = constant_environment(1.0)


def _state(u, h_x=0.05, reaction="logistic", threshold=1e-3, left_index=0, env=ENV1, eps=1.0):
    from demefront.pde import PdeState

    return PdeState(left_index, h_x, np.asarray(u, dtype=float), 0.0, reaction, eps, threshold, env)


def test_zero_density_is_fixed():
    st = _state(np.zeros(50))
    st2 = step_pde(st, cfl_limit(0.05))
    # interior stays zero; only the left Dirichlet boundary feeds in
    assert np.all(st2.u[2:] == 0.0)


def test_full_density_is_fixed_for_both_reactions():
    for reaction in ("logistic", "kpp_cut"):
        st = _state(np.ones(50), reaction=reaction)
        st2 = step_pde(st, cfl_limit(0.05))
        assert np.allclose(st2.u[:-1], 1.0, atol=1e-12)


def test_reaction_terms():
    u = np.array([0.0, 0.25, 0.5, 1.0])
    assert np.allclose(reaction_term(u, "logistic"), u * (1 - u))
    assert np.allclose(reaction_term(u, "kpp_cut"), u)
    above = np.array([1.0 + 1e-9, 2.0])
    assert np.allclose(reaction_term(above, "kpp_cut"), 0.0)


def test_cfl_violation_rejected():
    st = _state(np.zeros(20))
    with pytest.raises(ValueError):
        step_pde(st, 2.0 * cfl_limit(0.05))


def test_one_step_against_heat_kernel_oracle():
    # Gaussian bump on 64 points: the discrete step must match exact heat
    # semigroup + pointwise growth to the scheme's truncation accuracy, and
    # total mass must grow by a factor in [1, 1 + r dt].
    h = 0.25
    x = (np.arange(64) - 32) * h
    u0 = 0.5 * np.exp(-(x**2))
    st = _state(u0.copy(), h_x=h, reaction="logistic", left_index=-32)
    dt = cfl_limit(h)
    st2 = step_pde(st, dt)
    # interior mass only: the window's Dirichlet edges inject/absorb at the
    # two boundary cells, which a bump test must not count
    core = slice(2, 62)
    mass0 = u0[core].sum() * h
    mass1 = st2.u[core].sum() * h
    r = 1.0
    assert 1.0 - 1e-9 <= mass1 / mass0 <= 1.0 + r * dt * (1.0 + 1e-6)
    # heat-kernel oracle: u0 convolved with N(0, dt) (exact via erf cell sums)
    # plus explicit Euler reaction
    kernel_edges = (np.arange(-200, 202) - 0.5) * h  # 401 cells centred at 0
    cell = 0.5 * (erf((kernel_edges[1:]) / math.sqrt(2 * dt)) - erf(kernel_edges[:-1] / math.sqrt(2 * dt)))
    diffused = np.convolve(np.pad(u0, 200), cell, mode="same")[200:-200]
    oracle = diffused + dt * 1.0 * u0 * (1 - u0)
    interior = slice(4, 60)
    # one-step agreement up to the scheme's local truncation error O(dt h^2)
    assert np.max(np.abs(st2.u[interior] - oracle[interior])) < 2.5e-3


def test_front_position_interpolates():
    u = np.where(np.arange(100) < 50, 1.0, 0.0)
    st = _state(u, threshold=0.5, left_index=-50)
    pos = front_position(st)
    assert abs(pos - 0.0) <= 0.05 / 2 + 1e-12
    # closed-form crossing of an exponential profile
    h = 0.05
    grid = np.arange(300) * h
    st2 = _state(np.exp(-grid), h_x=h, threshold=1e-3)
    assert front_position(st2) == pytest.approx(math.log(1000.0), abs=h)


def test_front_translation_equivariance():
    h = 0.05
    grid = np.arange(400) * h
    prof = 1.0 / (1.0 + np.exp(4.0 * (grid - 5.0)))
    a = _state(prof, h_x=h, threshold=1e-2)
    shift_cells = 37
    b = _state(np.roll(prof, shift_cells), h_x=h, threshold=1e-2)
    b.u[:shift_cells] = 1.0
    assert front_position(b) - front_position(a) == pytest.approx(shift_cells * h, abs=1e-6)


def test_front_position_window_faults():
    st = _state(np.zeros(30), threshold=0.5)
    with pytest.raises(WindowFault):
        front_position(st)
    st2 = _state(np.ones(30), threshold=0.5)
    with pytest.raises(WindowFault):
        front_position(st2)


def test_densities_stay_in_unit_interval():
    for reaction in ("logistic", "kpp_cut"):
        st = make_front_state(ENV1, 1.0, 1e3, reaction, 0.05, -8.0, 8.0)
        for _ in range(300):
            st = step_pde(st, cfl_limit(0.05))
        assert st.u.min() >= 0.0
        assert st.u.max() <= 1.0


def test_comparison_principle_under_cfl():
    rng = np.random.default_rng(0)
    lo0 = np.clip(rng.random(120) * 0.8, 0, 1)
    hi0 = np.clip(lo0 + rng.random(120) * 0.2, 0, 1)
    lo = _state(lo0)
    hi = _state(hi0)
    for _ in range(150):
        lo = step_pde(lo, cfl_limit(0.05))
        hi = step_pde(hi, cfl_limit(0.05))
        assert np.all(hi.u >= lo.u - 1e-12)


def test_profile_monotone_in_x_for_front_like_data():
    # the monotone scheme preserves nonincreasing-in-x profiles
    st = make_front_state(ENV1, 1.0, 1e3, "logistic", 0.05, -8.0, 8.0)
    for _ in range(400):
        st = step_pde(st, cfl_limit(0.05))
    assert np.all(np.diff(st.u) <= 1e-6)


def test_front_monotone_for_front_like_data():
    trace = run_pde(ENV1, 1.0, 1e2, "logistic", T=15.0, h_x=0.05, record_stride=20)
    diffs = np.diff(trace.positions)
    assert np.all(diffs > -0.05)  # tolerance of one cell


def test_homogeneous_front_speed_sqrt2r():
    # r = 2: asymptotic spreading speed sqrt(2 r) = 2
    trace = run_pde(constant_environment(2.0), 1.0, 1e4, "logistic", T=40.0, h_x=0.05, record_stride=50)
    est = estimate_speed(trace, window=0.4)
    assert abs(est.slope - 2.0) / 2.0 < 0.03


def test_plateau_front_beats_harmonic_speed():
    # heterogeneous continuum front stays strictly above the trajectory-limit
    # speed: here at eps=0.5 the plateau front must outrun 0.7563
    env = periodic_plateaus(3.0, 0.1)
    trace = run_pde(env, 0.5, 1e4, "logistic", T=60.0, h_x=0.05, record_stride=50)
    est = estimate_speed(trace, window=0.5)
    macro_slope = est.slope
    assert macro_slope > 0.7563
