"""Particle engine: conservation, growth, couplings, observers, estimators."""

import math

import numpy as np
import pytest

import demefront as df
from demefront.engine import (
    CouplingHypothesisError,
    EngineConfigError,
    MemoryGuardError,
    branching_population_overflow,
)
from demefront.offspring import custom_family

FAM = df.bernoulli_duplication()
ENV1 = df.constant_environment(1.0)
# duplication probability ~1e-302 rounds every binomial draw to zero: the
# exact no-branching regime while keeping the rate field strictly positive
ENV0 = df.constant_environment(1e-300)


def _cfg(**kw):
    base = dict(
        env=ENV1,
        step=df.build_step_law(0.1, 0.01),
        family=FAM,
        eps=1.0,
        K=math.inf,
        initial=df.initial_single(),
        seed=0,
        horizon=10,
    )
    base.update(kw)
    return df.EngineConfig(**base)


def test_population_state_drops_zeros_and_rejects_negatives():
    st = df.PopulationState({0: 3, 5: 0, -2: 1})
    assert st.counts == {0: 3, -2: 1}
    assert st.rightmost_site() == 0
    with pytest.raises(ValueError):
        df.PopulationState({0: -1})


def test_conservation_without_branching():
    cfg = _cfg(env=ENV0, initial=df.initial_single(0, 5), horizon=60, seed=3)
    final = df.run_population(cfg)
    assert final.total() == 5


def test_single_step_single_particle_is_one_displacement():
    cfg = _cfg(env=ENV0, horizon=1)
    rng = np.random.default_rng(5)
    for _ in range(100):
        nxt = df.step_generation(df.initial_single(), cfg, rng)
        assert nxt.total() == 1
        assert nxt.generation == 1


def test_pure_walk_moments():
    # one particle, no branching: after n steps mean 0, variance n*(dt + dx^2/12)
    law = df.build_step_law(0.1, 0.01)
    n = 20
    finals = []
    for rep in range(4000):
        cfg = _cfg(env=ENV0, step=law, horizon=n, seed=7, replicate=rep)
        tr = df.run(cfg)
        finals.append(tr.positions[-1])
    finals = np.asarray(finals)
    step_var = law.variance()
    assert step_var == pytest.approx(0.1 + 0.01**2 / 12.0, rel=1e-6)
    se_mean = math.sqrt(n * step_var / len(finals))
    assert abs(finals.mean()) < 3 * se_mean
    var = finals.var()
    se_var = n * step_var * math.sqrt(2.0 / len(finals))
    assert abs(var - n * step_var) < 3 * se_var


def test_mean_total_growth_matches_mean_litter_power():
    # E[population at generation n] = (1 + r dt)^n for the free process
    n, reps = 10, 10_000
    tots = np.array(
        [
            df.run_population(_cfg(horizon=n, seed=11, replicate=rep)).total()
            for rep in range(reps)
        ],
        dtype=float,
    )
    target = 1.1**n
    assert abs(tots.mean() - target) < 3 * tots.std() / math.sqrt(reps)


def test_run_trace_shape_and_determinism():
    cfg = _cfg(horizon=50, K=30, seed=21)
    tr1 = df.run(cfg)
    tr2 = df.run(cfg)
    assert len(tr1.times) == 51
    assert np.array_equal(tr1.positions, tr2.positions)
    assert tr1.times[1] == pytest.approx(cfg.eps * cfg.step.dt)
    assert tr1.meta["extinct_at"] is None


def test_capacity_caps_site_totals():
    # the cap acts before migration: a single occupied site can emit at
    # most K particles per generation no matter how fast it reproduces
    cfg = _cfg(env=df.constant_environment(5.0), K=4, initial=df.initial_single(0, 4), horizon=30, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        st = df.step_generation(df.initial_single(0, 4), cfg, rng)
        assert st.total() == 4


def test_extinction_with_custom_family():
    dying = custom_family(lambda p: np.array([0.9, 0.0, 0.1 + p * 0.0]))
    cfg = df.EngineConfig(
        env=ENV1,
        step=df.build_step_law(0.1, 0.01),
        family=dying,
        eps=1.0,
        K=math.inf,
        initial=df.initial_single(),
        seed=4,
        horizon=40,
    )
    tr = df.run(cfg)
    assert tr.meta["extinct_at"] is not None
    k = tr.meta["extinct_at"]
    assert np.all(np.isnan(tr.positions[k:]))
    assert len(tr.times) == 41


def test_rdt_above_one_aborts():
    cfg = _cfg(env=df.constant_environment(20.0), horizon=5)  # r dt = 2
    with pytest.raises(EngineConfigError):
        df.run(cfg)


def test_memory_guard_trips():
    cfg = _cfg(horizon=5, max_window_sites=100)
    with pytest.raises(MemoryGuardError):
        df.run(cfg)


# ---------------------------------------------------------------------------
# Coupled pair
# ---------------------------------------------------------------------------


def test_coupled_identical_configs_bit_identical():
    law = df.build_step_law(0.01, 0.01)
    cfg = df.EngineConfig(
        env=df.constant_environment(1.5), step=law, family=FAM, eps=1.0, K=100,
        initial=df.initial_single(0, 3), seed=0, horizon=120,
    )
    res = df.run_coupled_pair(cfg, cfg, shared_seed=9)
    assert res.dominated
    assert np.array_equal(res.trace_high.positions, res.trace_low.positions)


def test_coupled_truncated_below_free():
    law = df.build_step_law(0.01, 0.01)
    hi = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0, K=math.inf,
        initial=df.initial_single(0, 20), seed=0, horizon=150,
    )
    lo = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0, K=8,
        initial=df.initial_single(0, 20), seed=0, horizon=150,
    )
    for seed in range(10):
        res = df.run_coupled_pair(hi, lo, shared_seed=seed)
        assert res.dominated
        finite = ~np.isnan(res.trace_low.positions)
        assert np.all(
            res.trace_high.positions[finite] >= res.trace_low.positions[finite] - 1e-12
        )


def test_coupled_rate_ordered():
    law = df.build_step_law(0.01, 0.01)
    hi = df.EngineConfig(
        env=df.constant_environment(2.0), step=law, family=FAM, eps=1.0,
        K=math.inf, initial=df.initial_single(), seed=0, horizon=200,
    )
    lo = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0,
        K=math.inf, initial=df.initial_single(), seed=0, horizon=200,
    )
    for seed in range(10):
        res = df.run_coupled_pair(hi, lo, shared_seed=seed)
        assert res.dominated
        assert np.all(res.trace_high.positions >= res.trace_low.positions - 1e-12)


def test_coupled_rejects_wrong_ordering():
    law = df.build_step_law(0.01, 0.01)
    slow = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0, K=math.inf,
        initial=df.initial_single(), seed=0, horizon=50,
    )
    fast = df.EngineConfig(
        env=df.constant_environment(2.0), step=law, family=FAM, eps=1.0,
        K=math.inf, initial=df.initial_single(), seed=0, horizon=50,
    )
    with pytest.raises(CouplingHypothesisError):
        df.run_coupled_pair(slow, fast, shared_seed=1)  # rate ordering violated
    small_K = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0, K=5,
        initial=df.initial_single(), seed=0, horizon=50,
    )
    with pytest.raises(CouplingHypothesisError):
        df.run_coupled_pair(small_K, slow, shared_seed=1)  # capacity ordering
    bigger_init = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0, K=math.inf,
        initial=df.initial_single(0, 2), seed=0, horizon=50,
    )
    with pytest.raises(CouplingHypothesisError):
        df.run_coupled_pair(slow, bigger_init, shared_seed=1)  # initial ordering


def test_coupled_with_common_window_keeps_domination():
    law = df.build_step_law(0.01, 0.01)
    hi = df.EngineConfig(
        env=df.constant_environment(2.0), step=law, family=FAM, eps=1.0,
        K=math.inf, initial=df.initial_single(0, 10), seed=0, horizon=150,
        window_back=3.0,
    )
    lo = df.EngineConfig(
        env=ENV1, step=law, family=FAM, eps=1.0,
        K=50, initial=df.initial_single(0, 10), seed=0, horizon=150,
        window_back=3.0,
    )
    for seed in (0, 1, 2):
        res = df.run_coupled_pair(hi, lo, shared_seed=seed)
        assert res.dominated


def test_coupled_requires_shared_grid():
    a = _cfg(step=df.build_step_law(0.1, 0.01), horizon=5)
    b = _cfg(step=df.build_step_law(0.1, 0.02), horizon=5)
    with pytest.raises(CouplingHypothesisError):
        df.run_coupled_pair(a, b, shared_seed=0)


# ---------------------------------------------------------------------------
# Rebooted process and observers
# ---------------------------------------------------------------------------


def test_reboot_period_one_keeps_single_particle():
    # with reboots every generation the population restarts from one
    # particle each time, so it can never exceed one litter (here <= 2)
    cfg = _cfg(K=1000.0, horizon=40, seed=5)
    tr = df.run_rebooted(cfg, phi_period=1)
    assert tr.meta["phi_period"] == 1
    assert tr.meta["final_total"] <= 2
    # and a longer period lets it grow past that
    tr2 = df.run_rebooted(_cfg(K=1000.0, horizon=40, seed=6), phi_period=40)
    assert tr2.meta["final_total"] > 2


def test_reboot_default_period_is_floor_log_K():
    cfg = _cfg(K=1e4, horizon=18, seed=5)
    tr = df.run_rebooted(cfg)
    assert tr.meta["phi_period"] == 9


def test_reboot_default_needs_finite_K():
    cfg = _cfg(K=math.inf, horizon=5)
    with pytest.raises(EngineConfigError):
        df.run_rebooted(cfg)


@pytest.mark.slow
def test_reboot_block_drift_band():
    """Mean per-generation block drift sits in [0.9 c, 1.1 c] once blocks
    are long enough for the running maximum to approach its linear speed
    (the log-correction decays like log(n)/n, so period 1000 suffices)."""
    law = df.build_step_law(0.1, 0.005)
    c = df.RateFunction(law).solve_speed(1.1)
    phi = 1000
    reps, blocks = 12, 3
    drifts = []
    for rep in range(reps):
        cfg = df.EngineConfig(
            env=ENV1, step=law, family=FAM, eps=1.0, K=math.inf,
            initial=df.initial_single(), seed=88, horizon=phi * blocks, replicate=rep,
            window_back=14.0, bulk_threshold=64,
        )
        tr = df.run_rebooted(cfg, phi_period=phi)
        marks = tr.positions[::phi]
        drifts.extend(np.diff(marks) / phi)
    mean_drift = float(np.mean(drifts))
    assert 0.9 * c <= mean_drift <= 1.1 * c, (mean_drift, c)


def test_observe_stopping_immediate_capacity_hit():
    cfg = _cfg(K=1.0, horizon=5, initial=df.initial_single(0, 1))
    rep = df.observe_stopping(cfg)
    assert rep.tau_capacity == 0


def test_observe_stopping_radius():
    cfg = _cfg(env=ENV0, K=math.inf, horizon=10, eps=1.0)
    rep = df.observe_stopping(cfg, radius=1e-6, horizon=10)
    assert rep.tau_radius == 1  # the very first jump exceeds a micro radius
    rep2 = df.observe_stopping(cfg, radius=1e9, horizon=10)
    assert rep2.tau_radius is None


def test_default_radius_is_quarter_power():
    cfg = _cfg(eps=1e-4, env=ENV0, horizon=1)
    rep = df.observe_stopping(cfg)
    assert rep.radius == pytest.approx((1e-4) ** -0.25)


def test_branching_overflow_matches_enumeration():
    # p=1/2, threshold 4, horizon 2, from one particle:
    # P(hit) = P(first litter doubles) * P(both double again) = 1/2 * 1/4
    hits, n = branching_population_overflow(0.5, 4, 2, 40_000, seed=3)
    p_exact = 0.125
    sigma = math.sqrt(p_exact * (1 - p_exact) / n)
    assert abs(hits / n - p_exact) < 4 * sigma


def test_branching_overflow_vs_engine_smallscale():
    # cross-check the size-only sampler against the full spatial engine:
    # migration cannot change population totals, so the overflow event law
    # must agree
    thresh, horizon, reps = 3, 3, 4000
    engine_hits = 0
    for rep in range(reps):
        cfg = _cfg(
            env=df.constant_environment(3.0), step=df.build_step_law(0.1, 0.05),
            K=thresh, horizon=horizon, seed=31, replicate=rep,
        )
        out = df.observe_stopping(cfg, radius=math.inf, horizon=horizon)
        if out.tau_capacity is not None:
            engine_hits += 1
    gw_hits, n = branching_population_overflow(0.3, thresh, horizon, 100_000, seed=77)
    p_engine = engine_hits / reps
    p_gw = gw_hits / n
    se = math.sqrt(p_engine * (1 - p_engine) / reps + p_gw * (1 - p_gw) / n)
    assert abs(p_engine - p_gw) < 4 * se


# ---------------------------------------------------------------------------
# Speed estimation
# ---------------------------------------------------------------------------


def test_estimate_speed_exact_line():
    t = np.linspace(0.0, 3.0, 40)
    tr = df.FrontTrace(t, 2.0 * t, {})
    est = df.estimate_speed(tr, window=1.0)
    assert est.slope == pytest.approx(2.0, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_estimate_speed_guards():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        df.estimate_speed(df.FrontTrace(t, t, {}))  # too short
    t = np.linspace(0, 1, 20)
    with pytest.raises(ValueError):
        df.estimate_speed(df.FrontTrace(t, t, {}), window=0.0)
    y = t.copy()
    y[-3:] = np.nan
    with pytest.raises(ValueError):
        df.estimate_speed(df.FrontTrace(t, y, {}))


def test_front_trace_validates_alignment():
    with pytest.raises(ValueError):
        df.FrontTrace(np.array([0.0, 1.0]), np.array([0.0]), {})
    with pytest.raises(ValueError):
        df.FrontTrace(np.array([0.0, 0.0]), np.array([0.0, 1.0]), {})
