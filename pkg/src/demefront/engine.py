"""Particle engines on the lattice dx * Z.

One generation of the competing process does, in order:

1. reproduction -- every particle on site i litters according to the
   offspring family at rate r(eps * t_k, eps * x_i);
2. competition -- the site total is truncated at the capacity K;
3. migration  -- each survivor jumps independently by the displacement law.

Setting ``K = inf`` removes competition and yields the free branching
random walk.  On top of the plain engine sit a coupled-pair engine (two
processes driven by one shared uniform per site per generation, realizing
pathwise domination), a rebooted engine (the population collapses to a
single particle at its own front every ``phi_period`` generations), and
stopping-time / front observers.

Counts are integers throughout.  Two opt-in approximations make
desk-scale Monte Carlo feasible on one core; both default to off and the
exact path is used everywhere a test asserts an exact property:

* ``window_back`` -- drop particles more than this distance behind the
  rightmost one.  Dropping particles can only slow the front (the engine
  is monotone), and the front-speed deficit decays like 1/width^2, so a
  window of a dozen decay lengths biases speeds well below the
  statistical resolution of the experiments that use it.
* ``bulk_threshold`` -- sites holding at least this many particles move
  their mass by the expected flow (a convolution) plus unbiased stochastic
  rounding, instead of per-particle jumps.  Relative per-site error is
  O(1/sqrt(count)); front sites stay exact because their counts sit below
  the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft
from scipy.signal import fftconvolve

from . import streams
from .environment import Environment
from .offspring import (
    OffspringFamily,
    coupled_site_quantile,
    site_offspring_pmf,
    dominates,
)
from .steplaw import StepLaw

__all__ = [
    "PopulationState",
    "EngineConfig",
    "FrontTrace",
    "EngineConfigError",
    "MemoryGuardError",
    "CouplingHypothesisError",
    "initial_single",
    "initial_filled_left",
    "step_generation",
    "run",
    "run_population",
    "run_coupled_pair",
    "run_rebooted",
    "observe_stopping",
    "branching_population_overflow",
    "estimate_speed",
]


class EngineConfigError(ValueError):
    pass


class MemoryGuardError(RuntimeError):
    pass


class CouplingHypothesisError(RuntimeError):
    pass


@dataclass
class PopulationState:
    """Sparse site -> count map for one generation."""

    counts: dict
    generation: int = 0

    def __post_init__(self) -> None:
        self.counts = {int(i): int(c) for i, c in self.counts.items() if c != 0}
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("negative site count")

    def total(self) -> int:
        return sum(self.counts.values())

    def rightmost_site(self) -> int | None:
        return max(self.counts) if self.counts else None


def initial_single(site: int = 0, count: int = 1) -> PopulationState:
    return PopulationState({site: count})


def initial_filled_left(width_sites: int, count: int = 1) -> PopulationState:
    """One deme of size ``count`` on every site -width..-1 (front at 0)."""
    return PopulationState({-i: count for i in range(1, width_sites + 1)})


@dataclass(frozen=True)
class EngineConfig:
    env: Environment
    step: StepLaw
    family: OffspringFamily
    eps: float
    K: float  # capacity per site; math.inf for the free branching walk
    initial: PopulationState
    seed: int
    horizon: int
    replicate: int = 0
    window_back: float | None = None
    bulk_threshold: int | None = None
    max_window_sites: int = 5_000_000

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise EngineConfigError("eps must be positive")
        if not (self.K >= 1):
            raise EngineConfigError("capacity K must be >= 1 (or inf)")
        if not self.initial.counts:
            raise EngineConfigError("initial population must be nonempty")
        if self.horizon < 0:
            raise EngineConfigError("horizon must be nonnegative")
        if self.window_back is not None and self.window_back <= 0:
            raise EngineConfigError("window_back must be positive")
        if self.family.kind == "custom":
            # litter pmfs must at least be probability vectors; the full
            # stochastic-ordering battery lives in offspring.check_assumptions
            # and is enforced where it is load-bearing (the coupled engine)
            for probe in (0.05, 0.5):
                pmf = np.asarray(self.family.pmf_for(probe), dtype=float)
                if np.any(pmf < -1e-15) or abs(pmf.sum() - 1.0) > 1e-9:
                    raise EngineConfigError(
                        f"custom litter pmf at p={probe} is not a probability vector"
                    )

    def summary(self) -> dict:
        return {
            "env": self.env.describe(),
            "dt": self.step.dt,
            "dx": self.step.dx,
            "family": self.family.kind,
            "eps": self.eps,
            "K": self.K if math.isfinite(self.K) else "inf",
            "seed": self.seed,
            "horizon": self.horizon,
            "replicate": self.replicate,
            "window_back": self.window_back,
            "bulk_threshold": self.bulk_threshold,
        }


@dataclass
class FrontTrace:
    """Rescaled front positions: times eps*k*dt, positions eps*X*_k."""

    times: np.ndarray
    positions: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions must align")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


# ---------------------------------------------------------------------------
# Lattice core
# ---------------------------------------------------------------------------


class _Lattice:
    """Dense int64 window [lo, lo + len) over the occupied sites."""

    __slots__ = ("lo", "counts")

    def __init__(self, lo: int, counts: np.ndarray):
        self.lo = int(lo)
        self.counts = counts

    @classmethod
    def from_state(cls, state: PopulationState) -> "_Lattice":
        sites = np.fromiter(state.counts.keys(), dtype=np.int64)
        vals = np.fromiter(state.counts.values(), dtype=np.int64)
        lo = int(sites.min())
        arr = np.zeros(int(sites.max()) - lo + 1, dtype=np.int64)
        arr[sites - lo] = vals
        return cls(lo, arr)

    def to_state(self, generation: int) -> PopulationState:
        idx = np.nonzero(self.counts)[0]
        return PopulationState(
            {int(self.lo + i): int(self.counts[i]) for i in idx}, generation
        )

    def empty(self) -> bool:
        return self.counts.size == 0 or not self.counts.any()

    def rightmost(self) -> int:
        idx = np.nonzero(self.counts)[0]
        return int(self.lo + idx[-1])

    def total(self) -> int:
        return int(self.counts.sum())


def _draw_offsets(rng: np.random.Generator, n: int, step: StepLaw) -> np.ndarray:
    """n i.i.d. lattice jumps, as nonnegative indices 0..2*j_trunc.

    The cell-integrated Gaussian law is exactly the law of a Gaussian
    displacement rounded to the nearest lattice point, so sampling reduces
    to one normal draw per particle; the clip at +-j_trunc moves ~1e-19 of
    mass and is there only for array-bounds safety.
    """
    z = rng.standard_normal(n)
    z *= math.sqrt(step.dt) / step.dx
    np.rint(z, out=z)
    offs = z.astype(np.int64)
    jt = step.j_trunc
    np.clip(offs, -jt, jt, out=offs)
    offs += jt
    return offs


def _convolve_cached(x: np.ndarray, kernel: np.ndarray, cache: dict | None) -> np.ndarray:
    """Linear convolution with the kernel's rfft memoized per FFT size."""
    if cache is None:
        return fftconvolve(x, kernel)
    out_len = len(x) + len(kernel) - 1
    nfft = next_fast_len(out_len, True)
    kf = cache.get(nfft)
    if kf is None:
        kf = rfft(kernel, nfft)
        cache[nfft] = kf
    return irfft(rfft(x, nfft) * kf, nfft)[:out_len]


def _advance(
    lat: _Lattice,
    k: int,
    cfg: EngineConfig,
    weights: np.ndarray,
    get_repro,
    get_mig,
    get_round,
    fft_cache: dict | None = None,
) -> int | None:
    """One generation in place; lat.lo shifts left by the kernel radius.

    Returns the rightmost occupied site (absolute index) or ``None`` on
    extinction.  The three rng arguments are zero-argument callables
    producing the generator for each phase; phases draw strictly one after
    another, so the callables may hand back one shared (reset-in-place)
    generator.
    """
    env, step = cfg.env, cfg.step
    jt = step.j_trunc
    idx = np.nonzero(lat.counts)[0]
    n = lat.counts[idx]
    sites = lat.lo + idx

    t_macro = cfg.eps * k * step.dt
    x_macro = cfg.eps * sites * step.dx
    r = env.evaluate(np.float64(t_macro), x_macro)
    p = np.asarray(r, dtype=float) * step.dt
    if np.any(p > 1.0):
        bad = int(np.argmax(p))
        raise EngineConfigError(
            f"r*dt = {float(p[bad]):.6g} > 1 at site {int(sites[bad])} "
            f"(generation {k}); shrink dt"
        )

    thr = cfg.bulk_threshold
    if cfg.family.kind == "bernoulli_duplication":
        rng_repro = get_repro()
        if thr is None or len(n) == 0:
            births = rng_repro.binomial(n, p)
        else:
            # Bulk sites use moment-matched approximations (normal when the
            # count is large, Poisson otherwise); the front tip, where the
            # discreteness matters, keeps the exact binomial.
            births = np.empty_like(n)
            bulk_site = n >= thr
            if np.any(~bulk_site):
                births[~bulk_site] = rng_repro.binomial(n[~bulk_site], p[~bulk_site])
            if np.any(bulk_site):
                nb = n[bulk_site]
                pb = p[bulk_site]
                lam = nb * pb
                var = lam * (1.0 - pb)
                gauss = var >= 100.0
                draw = np.empty(len(nb), dtype=np.int64)
                if np.any(gauss):
                    z = rng_repro.standard_normal(int(gauss.sum()))
                    raw = np.rint(lam[gauss] + np.sqrt(var[gauss]) * z).astype(np.int64)
                    draw[gauss] = np.clip(raw, 0, nb[gauss])
                if np.any(~gauss):
                    draw[~gauss] = np.minimum(rng_repro.poisson(lam[~gauss]), nb[~gauss])
                births[bulk_site] = draw
        tot = n + births
    else:
        from .offspring import sample_untruncated

        tot = sample_untruncated(cfg.family, p, n, get_repro())
    if math.isfinite(cfg.K):
        np.minimum(tot, np.int64(cfg.K), out=tot)

    new_len = len(lat.counts) + 2 * jt
    if new_len > cfg.max_window_sites:
        raise MemoryGuardError(
            f"occupied window would reach {new_len} sites "
            f"(guard {cfg.max_window_sites})"
        )

    if thr is None:
        small_mask = np.ones(len(tot), dtype=bool)
    else:
        small_mask = tot < thr

    out = np.zeros(new_len, dtype=np.int64)
    small_tot = tot[small_mask]
    n_small = int(small_tot.sum())
    if n_small:
        src = np.repeat(idx[small_mask], small_tot)  # local, new frame offset jt
        offs = _draw_offsets(get_mig(), n_small, step)
        out += np.bincount(src + offs, minlength=new_len)

    if thr is not None and not np.all(small_mask):
        bulk = np.zeros(len(lat.counts), dtype=np.float64)
        bulk[idx[~small_mask]] = tot[~small_mask]
        flow = _convolve_cached(bulk, weights, fft_cache)
        np.maximum(flow, 0.0, out=flow)
        base = np.floor(flow)
        frac = flow - base
        add = get_round().random(new_len) < frac
        out += base.astype(np.int64) + add

    lat.lo -= jt
    nz = np.nonzero(out)[0]
    if nz.size == 0:
        lat.counts = np.zeros(0, dtype=np.int64)
        return None
    left = int(nz[0])
    right = int(nz[-1])
    if cfg.window_back is not None:
        left = max(left, right - int(round(cfg.window_back / step.dx)))
    lat.counts = out[left : right + 1]
    lat.lo += left
    return lat.lo + (right - left)


# ---------------------------------------------------------------------------
# Public engines
# ---------------------------------------------------------------------------


def step_generation(
    state: PopulationState, config: EngineConfig, rng: np.random.Generator
) -> PopulationState:
    """Advance one generation using the caller's generator for all draws."""
    lat = _Lattice.from_state(state)
    get = lambda: rng
    _advance(lat, state.generation, config, config.step.weights, get, get, get)
    return lat.to_state(state.generation + 1)


def _run_core(cfg: EngineConfig, collect_trace: bool, reboot_every: int | None = None):
    lat = _Lattice.from_state(cfg.initial)
    weights = cfg.step.weights
    rs = streams.ReplicateStreams(cfg.seed, cfg.replicate)
    dt, dx, eps = cfg.step.dt, cfg.step.dx, cfg.eps
    fft_cache: dict = {}

    times = np.empty(cfg.horizon + 1) if collect_trace else None
    positions = np.empty(cfg.horizon + 1) if collect_trace else None
    extinct_at = None
    if collect_trace:
        times[0] = 0.0
        positions[0] = eps * lat.rightmost() * dx

    k_done = 0
    for k in range(cfg.horizon):
        top = _advance(
            lat,
            k,
            cfg,
            weights,
            lambda: rs.borrow(k, streams.REPRODUCTION),
            lambda: rs.borrow(k, streams.MIGRATION),
            lambda: rs.borrow(k, streams.ROUNDING),
            fft_cache,
        )
        k_done = k + 1
        if top is None:
            extinct_at = k_done
            if collect_trace:
                times[k_done:] = dt * eps * np.arange(k_done, cfg.horizon + 1)
                positions[k_done:] = math.nan
            break
        if reboot_every is not None and k_done % reboot_every == 0 and k_done < cfg.horizon:
            lat = _Lattice(top, np.ones(1, dtype=np.int64))
        if collect_trace:
            times[k_done] = eps * k_done * dt
            positions[k_done] = eps * top * dx

    trace = None
    if collect_trace:
        trace = FrontTrace(
            times,
            positions,
            meta={
                "config": cfg.summary(),
                "extinct_at": extinct_at,
                "final_total": lat.total(),
            },
        )
    return trace, lat, extinct_at, k_done


def run(config: EngineConfig) -> FrontTrace:
    """Run the process, recording the rescaled front each generation."""
    trace, _, _, _ = _run_core(config, collect_trace=True)
    return trace


def run_population(config: EngineConfig) -> PopulationState:
    """Run and return only the final population (no trace)."""
    _, lat, _, k_done = _run_core(config, collect_trace=False)
    return lat.to_state(k_done)


def run_rebooted(config: EngineConfig, phi_period: int | None = None) -> FrontTrace:
    """Run with periodic collapse to a single particle at the current front."""
    if phi_period is None:
        if not math.isfinite(config.K) or config.K <= math.e:
            raise EngineConfigError("default reboot period needs finite K > e")
        phi_period = int(math.floor(math.log(config.K)))
    if phi_period < 1:
        raise EngineConfigError("phi_period must be >= 1")
    trace, _, _, _ = _run_core(config, collect_trace=True, reboot_every=phi_period)
    trace.meta["phi_period"] = phi_period
    return trace


# ---------------------------------------------------------------------------
# Coupled pair
# ---------------------------------------------------------------------------


def _pair_hypotheses_precheck(cfg1: EngineConfig, cfg2: EngineConfig) -> None:
    if cfg1.step.dt != cfg2.step.dt or cfg1.step.dx != cfg2.step.dx:
        raise CouplingHypothesisError("coupled processes must share dt and dx")
    if not (cfg1.K >= cfg2.K):
        raise CouplingHypothesisError(
            f"capacity ordering violated: K1={cfg1.K} < K2={cfg2.K}"
        )
    if cfg1.horizon != cfg2.horizon:
        raise CouplingHypothesisError("coupled processes must share the horizon")
    s1 = _Lattice.from_state(cfg1.initial)
    s2 = _Lattice.from_state(cfg2.initial)
    lo = min(s1.lo, s2.lo)
    hi = max(s1.lo + len(s1.counts), s2.lo + len(s2.counts))
    a1 = np.zeros(hi - lo, dtype=np.int64)
    a2 = np.zeros(hi - lo, dtype=np.int64)
    a1[s1.lo - lo : s1.lo - lo + len(s1.counts)] = s1.counts
    a2[s2.lo - lo : s2.lo - lo + len(s2.counts)] = s2.counts
    if np.any(a1 < a2):
        raise CouplingHypothesisError("initial configurations not ordered sitewise")


class _PairLawCache:
    """Exact dominance verification for the litter laws seen by the pair."""

    def __init__(self, fam1: OffspringFamily, fam2: OffspringFamily, K1, K2, enum_cap=256):
        self.fam1, self.fam2 = fam1, fam2
        self.K1, self.K2 = K1, K2
        self.enum_cap = enum_cap
        self.seen: set = set()
        self.default_pair = (
            fam1.kind == "bernoulli_duplication" and fam2.kind == "bernoulli_duplication"
        )

    def verify(self, n: int, p1: float, p2: float, generation: int, site: int) -> None:
        if p1 + 1e-15 < p2:
            raise CouplingHypothesisError(
                f"rate ordering violated at generation {generation}, site {site}: "
                f"p1={p1:.6g} < p2={p2:.6g} (n={n}, K1={self.K1}, K2={self.K2})"
            )
        if self.default_pair:
            return  # ordering in (n, p, K) is exact for shifted binomial laws
        key = (n, round(p1, 12), round(p2, 12))
        if key in self.seen or n > self.enum_cap:
            return
        self.seen.add(key)
        hi = site_offspring_pmf(self.fam1, p1, n, self.K1)
        lo = site_offspring_pmf(self.fam2, p2, n, self.K2)
        if not dominates(hi, lo):
            size = max(len(hi), len(lo))
            s_hi = np.cumsum(np.pad(hi, (0, size - len(hi)))[::-1])[::-1]
            s_lo = np.cumsum(np.pad(lo, (0, size - len(lo)))[::-1])[::-1]
            lvl = int(np.argmax(s_hi < s_lo))
            raise CouplingHypothesisError(
                f"litter-law dominance fails at generation {generation}, site {site}: "
                f"n={n}, p1={p1:.6g}, p2={p2:.6g}, K=({self.K1},{self.K2}), "
                f"threshold {lvl}"
            )


@dataclass
class CoupledResult:
    trace_high: FrontTrace
    trace_low: FrontTrace
    dominated: bool


def run_coupled_pair(
    cfg1: EngineConfig, cfg2: EngineConfig, shared_seed: int
) -> CoupledResult:
    """Evolve both processes on one probability space; process 1 dominates.

    One uniform per (site, generation) drives both litter draws through
    their inverse CDFs; the low process's offspring reuse the high
    process's displacement draws particle-for-particle, and only the
    surplus particles of the high process draw fresh displacements.
    """
    _pair_hypotheses_precheck(cfg1, cfg2)
    step = cfg1.step
    jt = step.j_trunc
    dt, dx = step.dt, step.dx
    cache = _PairLawCache(cfg1.family, cfg2.family, cfg1.K, cfg2.K)
    rs = streams.ReplicateStreams(shared_seed, 0)

    s1 = _Lattice.from_state(cfg1.initial)
    s2 = _Lattice.from_state(cfg2.initial)
    lo = min(s1.lo, s2.lo)
    hi = max(s1.lo + len(s1.counts), s2.lo + len(s2.counts))
    n1 = np.zeros(hi - lo, dtype=np.int64)
    n2 = np.zeros(hi - lo, dtype=np.int64)
    n1[s1.lo - lo : s1.lo - lo + len(s1.counts)] = s1.counts
    n2[s2.lo - lo : s2.lo - lo + len(s2.counts)] = s2.counts

    horizon = cfg1.horizon
    t1 = np.empty(horizon + 1)
    y1 = np.empty(horizon + 1)
    y2 = np.empty(horizon + 1)
    t1[0] = 0.0
    y1[0] = cfg1.eps * (lo + int(np.nonzero(n1)[0][-1])) * dx
    y2[0] = cfg2.eps * (lo + int(np.nonzero(n2)[0][-1])) * dx
    dominated = True

    for k in range(horizon):
        idx = np.nonzero(n1)[0]
        if idx.size == 0:
            raise EngineConfigError("high process went extinct during coupling")
        sites = lo + idx
        x1 = cfg1.eps * sites * dx
        x2 = cfg2.eps * sites * dx
        p1 = np.asarray(cfg1.env.evaluate(np.float64(cfg1.eps * k * dt), x1), dtype=float) * dt
        p2 = np.asarray(cfg2.env.evaluate(np.float64(cfg2.eps * k * dt), x2), dtype=float) * dt
        if np.any(p1 > 1.0) or np.any(p2 > 1.0):
            raise EngineConfigError("r*dt > 1 in coupled run; shrink dt")

        occupied2 = n2[idx] > 0
        if np.any(occupied2):
            bad = (p1 + 1e-15 < p2) & occupied2
            if np.any(bad):
                b = int(np.argmax(bad))
                cache.verify(int(n2[idx][b]), float(p1[b]), float(p2[b]), k, int(sites[b]))
            if not cache.default_pair:
                for j in np.nonzero(occupied2)[0]:
                    cache.verify(int(n2[idx][j]), float(p1[j]), float(p2[j]), k, int(sites[j]))

        u = rs.borrow(k, streams.COUPLE_UNIFORM).random(idx.size)
        tot1 = coupled_site_quantile(cfg1.family, u, p1, n1[idx], cfg1.K)
        tot2 = coupled_site_quantile(cfg2.family, u, p2, n2[idx], cfg2.K)
        if np.any(tot1 < tot2):
            b = int(np.argmax(tot1 < tot2))
            raise CouplingHypothesisError(
                f"pathwise litter ordering failed at generation {k}, site "
                f"{int(sites[b])}: n=({int(n1[idx][b])},{int(n2[idx][b])}), "
                f"draw=({int(tot1[b])},{int(tot2[b])})"
            )

        new_len = len(n1) + 2 * jt
        if new_len > cfg1.max_window_sites:
            raise MemoryGuardError("coupled occupied window exceeds the guard")
        shared = tot2
        extra = tot1 - tot2
        n_shared = int(shared.sum())
        n_extra = int(extra.sum())
        new2 = np.zeros(new_len, dtype=np.int64)
        if n_shared:
            src = np.repeat(idx, shared)
            offs = _draw_offsets(rs.borrow(k, streams.COUPLE_SHARED), n_shared, step)
            new2 = np.bincount(src + offs, minlength=new_len)
        new1 = new2.copy()
        if n_extra:
            src = np.repeat(idx, extra)
            offs = _draw_offsets(rs.borrow(k, streams.COUPLE_EXTRA), n_extra, step)
            new1 += np.bincount(src + offs, minlength=new_len)

        lo -= jt
        n1, n2 = new1, new2
        if cfg1.window_back is not None:
            nz1 = np.nonzero(n1)[0]
            nz2 = np.nonzero(n2)[0]
            tops = [a[-1] for a in (nz1, nz2) if a.size]
            if tops:
                cut = int(min(tops)) - int(round(cfg1.window_back / dx))
                if cut > 0:
                    n1[:cut] = 0
                    n2[:cut] = 0

        if np.any(n1 < n2):
            dominated = False
        nz1 = np.nonzero(n1)[0]
        nz2 = np.nonzero(n2)[0]
        t1[k + 1] = cfg1.eps * (k + 1) * dt
        y1[k + 1] = cfg1.eps * (lo + int(nz1[-1])) * dx if nz1.size else math.nan
        y2[k + 1] = cfg2.eps * (lo + int(nz2[-1])) * dx if nz2.size else math.nan

        keep = np.nonzero(n1)[0]
        if keep.size:
            a, b = int(keep[0]), int(keep[-1])
            n1 = n1[a : b + 1].copy()
            n2 = n2[a : b + 1].copy()
            lo += a

    meta1 = {"config": cfg1.summary(), "role": "dominating"}
    meta2 = {"config": cfg2.summary(), "role": "dominated"}
    return CoupledResult(
        FrontTrace(t1, y1, meta1), FrontTrace(t1.copy(), y2, meta2), dominated
    )


# ---------------------------------------------------------------------------
# Observers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StoppingReport:
    tau_capacity: int | None  # first generation with total population >= K
    tau_radius: int | None  # first generation with a particle beyond the radius
    horizon: int
    radius: float


def observe_stopping(
    config: EngineConfig, radius: float | None = None, horizon: int | None = None
) -> StoppingReport:
    """Watch capacity/radius stopping times on the free branching walk.

    The dynamics run capacity-free; ``config.K`` only sets the population
    threshold being observed.
    """
    if radius is None:
        radius = config.eps ** (-0.25)
    if horizon is None:
        horizon = config.horizon
    free_cfg = replace(config, K=math.inf, horizon=horizon)
    lat = _Lattice.from_state(free_cfg.initial)
    rs = streams.ReplicateStreams(free_cfg.seed, free_cfg.replicate)
    tau_cap = None
    tau_rad = None
    if lat.total() >= config.K:
        tau_cap = 0
    for k in range(horizon):
        top = _advance(
            lat,
            k,
            free_cfg,
            free_cfg.step.weights,
            lambda: rs.borrow(k, streams.REPRODUCTION),
            lambda: rs.borrow(k, streams.MIGRATION),
            lambda: rs.borrow(k, streams.ROUNDING),
        )
        if top is None:
            break
        if tau_cap is None and lat.counts.sum() >= config.K:
            tau_cap = k + 1
        if tau_rad is None:
            left = lat.lo * free_cfg.step.dx
            right = top * free_cfg.step.dx
            if max(abs(left), abs(right)) > radius:
                tau_rad = k + 1
        if tau_cap is not None and tau_rad is not None:
            break
    return StoppingReport(tau_cap, tau_rad, horizon, radius)


def branching_population_overflow(
    p: float, threshold: float, horizon: int, n_blocks: int, seed: int, batch: int = 200_000
) -> tuple[int, int]:
    """Fraction of capacity-free blocks whose population reaches ``threshold``.

    Population sizes of the duplication branching walk form the recursion
    N_{k+1} = N_k + Binomial(N_k, p) independently of particle positions,
    so blocks vectorize exactly.  Returns (hits, n_blocks).
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    hits = 0
    done = 0
    b = 0
    while done < n_blocks:
        size = min(batch, n_blocks - done)
        rng = streams.stream_for(seed, b, 0, streams.SCRATCH)
        n = np.ones(size, dtype=np.int64)
        hit = np.zeros(size, dtype=bool)
        for _ in range(horizon):
            n = n + rng.binomial(n, p)
            hit |= n >= threshold
        hits += int(hit.sum())
        done += size
        b += 1
    return hits, n_blocks


# ---------------------------------------------------------------------------
# Speed estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedEstimate:
    slope: float
    stderr: float
    n_points: int


def estimate_speed(trace: FrontTrace, window: float = 0.5) -> SpeedEstimate:
    """Least-squares slope of position vs time over the trailing window."""
    if not (0.0 < window <= 1.0):
        raise ValueError("window must lie in (0, 1]")
    n = len(trace.times)
    if n < 10:
        raise ValueError("trace too short for a slope estimate")
    start = int(math.floor((1.0 - window) * n))
    t = np.asarray(trace.times[start:], dtype=float)
    y = np.asarray(trace.positions[start:], dtype=float)
    if np.any(~np.isfinite(y)):
        raise ValueError("trace contains non-finite positions (extinction?)")
    if float(np.ptp(t)) == 0.0:
        raise ValueError("degenerate trace: constant time column")
    t_c = t - t.mean()
    y_c = y - y.mean()
    sxx = float(t_c @ t_c)
    slope = float(t_c @ y_c) / sxx
    resid = y_c - slope * t_c
    dof = max(len(t) - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return SpeedEstimate(slope, stderr, len(t))
