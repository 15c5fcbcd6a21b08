"""Reproduction-law families with per-site capacity truncation.

The default family is Bernoulli duplication: one particle leaves behind
either itself (probability 1 - p) or itself plus a copy (probability p),
with p = r * dt.  A site holding n particles under capacity K therefore
produces

    min(n + Binomial(n, p), K)

offspring before migration.  The module also carries the machinery the
monotone-coupling constructions rely on: exact pmf/survival enumeration,
batched binomial inverse-CDF draws sharing one uniform per site, and a
check battery for the stochastic-ordering hypotheses (capacity-free law
dominates the truncated one, litters increase with r and with n, and a
capacity-many convolution of the dominating single-particle law bounds
every site law).

Custom families provide the single-particle litter pmf as a function of r;
they must pass :func:`check_assumptions` before an engine uses them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import bdtr

from .reports import CheckEntry

__all__ = [
    "OffspringFamily",
    "bernoulli_duplication",
    "custom_family",
    "sample_site_offspring",
    "sample_untruncated",
    "site_offspring_pmf",
    "untruncated_pmf",
    "batched_binomial_quantile",
    "coupled_site_quantile",
    "check_assumptions",
]


@dataclass(frozen=True)
class OffspringFamily:
    """Litter-law family, parameterized by the duplication probability p = r dt.

    ``kind`` is ``bernoulli_duplication`` or ``custom``.  For custom
    families ``individual_pmf(p)`` returns the litter pmf over 0..len-1 for
    one particle; the default family needs no stored data.
    """

    kind: str = "bernoulli_duplication"
    individual_pmf: Callable[[float], np.ndarray] | None = field(default=None, repr=False)

    def pmf_for(self, p: float) -> np.ndarray:
        if self.kind == "bernoulli_duplication":
            return np.array([0.0, 1.0 - p, p])
        return np.asarray(self.individual_pmf(p), dtype=float)


def bernoulli_duplication() -> OffspringFamily:
    return OffspringFamily("bernoulli_duplication")


def custom_family(individual_pmf: Callable[[float], np.ndarray]) -> OffspringFamily:
    return OffspringFamily("custom", individual_pmf)


def _validate_p(p) -> None:
    p = np.asarray(p)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("duplication probability r*dt must lie in [0, 1]")


def sample_untruncated(family: OffspringFamily, p, n, rng: np.random.Generator):
    """Capacity-free site litter: n + Binomial(n, p) for the default family.

    Accepts scalars or aligned arrays of p and n; returns int64 of the
    broadcast shape.
    """
    _validate_p(p)
    n_arr = np.asarray(n, dtype=np.int64)
    if np.any(n_arr < 0):
        raise ValueError("site count must be nonnegative")
    if family.kind == "bernoulli_duplication":
        out = n_arr + rng.binomial(n_arr, p)
    else:
        out = _sample_custom_sites(family, p, n_arr, rng)
    if np.ndim(n) == 0:
        return int(out)
    return out


def sample_site_offspring(family: OffspringFamily, p, n, K, rng: np.random.Generator):
    """Site litter with capacity: min(capacity-free litter, K); 0 stays 0."""
    if np.ndim(K) == 0 and not math.isinf(float(K)) and K < 1:
        raise ValueError("capacity K must be >= 1")
    raw = sample_untruncated(family, p, n, rng)
    if np.ndim(K) == 0 and math.isinf(float(K)):
        return raw
    out = np.minimum(raw, np.asarray(K, dtype=np.int64))
    if np.ndim(n) == 0:
        return int(out)
    return out


def _sample_custom_sites(family, p, n_arr, rng):
    """Per-particle aggregation for custom litter laws (small populations)."""
    p_arr = np.broadcast_to(np.asarray(p, dtype=float), n_arr.shape)
    flat_n = n_arr.ravel()
    flat_p = p_arr.ravel()
    out = np.zeros(flat_n.shape, dtype=np.int64)
    for key in np.unique(flat_p):
        pmf = family.pmf_for(float(key))
        cdf = np.cumsum(pmf)
        cdf[-1] = 1.0
        sel = flat_p == key
        counts = flat_n[sel]
        total = int(counts.sum())
        draws = np.searchsorted(cdf, rng.random(total), side="right")
        bounds = np.concatenate([[0], np.cumsum(counts)])
        sums = np.add.reduceat(draws, bounds[:-1]) if total else np.zeros(len(counts), dtype=np.int64)
        sums = np.where(counts == 0, 0, sums)
        out[sel] = sums
    return out.reshape(n_arr.shape)


# ---------------------------------------------------------------------------
# Exact laws (enumeration oracles and ordering checks)
# ---------------------------------------------------------------------------


def _binom_pmf_fractions(n: int, p: Fraction) -> list[Fraction]:
    q = 1 - p
    return [Fraction(math.comb(n, k)) * p**k * q ** (n - k) for k in range(n + 1)]


def untruncated_pmf(family: OffspringFamily, p: float, n: int) -> np.ndarray:
    """Exact pmf of the capacity-free site litter, support 0..(max litter)*n."""
    if n == 0:
        return np.array([1.0])
    if family.kind == "bernoulli_duplication":
        pf = _binom_pmf_fractions(n, Fraction(p))
        out = np.zeros(2 * n + 1)
        for k, mass in enumerate(pf):
            out[n + k] = float(mass)
        return out
    single = family.pmf_for(p)
    out = np.array([1.0])
    for _ in range(n):
        out = np.convolve(out, single)
    return out


def site_offspring_pmf(family: OffspringFamily, p: float, n: int, K) -> np.ndarray:
    """Exact pmf of min(capacity-free litter, K)."""
    raw = untruncated_pmf(family, p, n)
    if math.isinf(float(K)) or len(raw) - 1 <= K:
        return raw
    K = int(K)
    out = raw[: K + 1].copy()
    out[K] += raw[K + 1 :].sum()
    return out


def _survival(pmf: np.ndarray, size: int) -> np.ndarray:
    """S(x) = P(X >= x) for x = 0..size-1, zero-padded beyond the support."""
    padded = np.zeros(size)
    padded[: len(pmf)] = pmf
    return padded[::-1].cumsum()[::-1]


def dominates(pmf_hi: np.ndarray, pmf_lo: np.ndarray, tol: float = 1e-12) -> bool:
    """Stochastic dominance: survival of hi >= survival of lo everywhere."""
    size = max(len(pmf_hi), len(pmf_lo))
    return bool(np.all(_survival(pmf_hi, size) >= _survival(pmf_lo, size) - tol))


# ---------------------------------------------------------------------------
# Shared-uniform inverse-CDF draws (the coupling primitive)
# ---------------------------------------------------------------------------


_SMALL_N = 64
_small_cdf_cache: dict = {}


def _small_cdf_matrix(p: float) -> np.ndarray:
    """CDF rows of Binomial(n, p) for n = 0.._SMALL_N, padded with ones."""
    mat = _small_cdf_cache.get(p)
    if mat is None:
        ns = np.arange(_SMALL_N + 1)[:, None]
        ks = np.arange(_SMALL_N + 1)[None, :]
        mat = bdtr(np.broadcast_to(ks, (ns.size, ks.size)).copy(), np.broadcast_to(ns, (ns.size, ks.size)).copy(), p)
        mat[ks > ns] = 1.0  # beyond the support
        mat.setflags(write=False)
        if len(_small_cdf_cache) > 1024:
            _small_cdf_cache.clear()
        _small_cdf_cache[p] = mat
    return mat


def _quantile_ragged(u, n, p) -> np.ndarray:
    """Slice-based binomial quantile for arbitrary n (12-sigma slices)."""
    mean = n * p
    sd = np.sqrt(np.maximum(mean * (1.0 - p), 0.0))
    lo = np.maximum(np.floor(mean - 12.0 * sd - 12.0), 0).astype(np.int64)
    hi = np.minimum(np.ceil(mean + 12.0 * sd + 12.0), n).astype(np.int64)
    widths = hi - lo + 1
    starts = np.concatenate([[0], np.cumsum(widths)[:-1]])
    total = int(widths.sum())
    ks = np.arange(total) - np.repeat(starts, widths) + np.repeat(lo, widths)
    cdf = bdtr(ks, np.repeat(n, widths), np.repeat(p, widths))
    below = (cdf <= np.repeat(u, widths)).astype(np.int64)
    idx = np.add.reduceat(below, starts)
    return np.minimum(lo + idx, n)


def batched_binomial_quantile(u: np.ndarray, n: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Smallest b with P(Binomial(n, p) <= b) > u, vectorized over sites.

    Small n hit a cached CDF-matrix lookup; large n evaluate the CDF on a
    +-12 sigma slice around the mean (a draw outside the slice has
    probability < 1e-30 and clips to the slice edge).
    """
    n = np.asarray(n, dtype=np.int64)
    p = np.broadcast_to(np.asarray(p, dtype=float), n.shape)
    u = np.asarray(u, dtype=float)
    out = np.zeros(n.shape, dtype=np.int64)
    live = n > 0
    if not np.any(live):
        return out
    small = live & (n <= _SMALL_N)
    if np.any(small):
        ns = n[small]
        us = u[small]
        res = np.empty(ns.shape, dtype=np.int64)
        for pv in np.unique(p[small]):
            sel = p[small] == pv
            mat = _small_cdf_matrix(float(pv))
            res[sel] = (mat[ns[sel]] <= us[sel, None]).sum(axis=1)
        out[small] = np.minimum(res, ns)
    big = live & (n > _SMALL_N)
    if np.any(big):
        out[big] = _quantile_ragged(u[big], n[big], p[big])
    return out


def coupled_site_quantile(
    family: OffspringFamily, u: np.ndarray, p: np.ndarray, n: np.ndarray, K
) -> np.ndarray:
    """Inverse-CDF litter draw per site from one shared uniform per site.

    Monotone in (n, p, K) pointwise in u, which is what makes the shared
    uniform a pathwise-domination coupling.
    """
    if family.kind != "bernoulli_duplication":
        return _custom_site_quantile(family, u, p, n, K)
    b = batched_binomial_quantile(u, n, p)
    tot = np.asarray(n, dtype=np.int64) + b
    if np.ndim(K) == 0 and math.isinf(float(K)):
        return tot
    return np.minimum(tot, np.asarray(K, dtype=np.int64))


def _custom_site_quantile(family, u, p, n, K):
    n = np.asarray(n, dtype=np.int64)
    u = np.asarray(u, dtype=float)
    p_arr = np.broadcast_to(np.asarray(p, dtype=float), n.shape)
    out = np.zeros(n.shape, dtype=np.int64)
    for i in range(len(n)):
        if n[i] == 0:
            continue
        pmf = site_offspring_pmf(family, float(p_arr[i]), int(n[i]), K)
        cdf = np.cumsum(pmf)
        out[i] = int(np.searchsorted(cdf, u[i], side="right"))
    return out


# ---------------------------------------------------------------------------
# Ordering-hypothesis battery
# ---------------------------------------------------------------------------


def check_assumptions(
    family: OffspringFamily,
    p_grid=(0.05, 0.1, 0.3, 0.5),
    n_grid=(0, 1, 2, 3, 5, 8, 13, 20),
    K_grid=(1, 2, 4, 8, 50),
    p_bar: float | None = None,
    rng: np.random.Generator | None = None,
) -> list[CheckEntry]:
    """Exact-CDF verification of the ordering hypotheses on small grids.

    Checks, for every sampled (p, n, K):

    1. the capacity-free n-fold law dominates the truncated site law;
    2. the K-fold convolution of the dominating single-particle law (built
       at ``p_bar``, default max of the grid) dominates every site law;
    3. single-particle litters increase stochastically with p;
    4. site litters increase stochastically with n (coupling hypothesis);
    5. the min-with-K construction reproduces the sampler's distribution
       (empirical check when an rng is supplied, 50k draws, 5 sigma).
    """
    entries: list[CheckEntry] = []
    p_grid = [float(p) for p in p_grid]
    n_grid = [int(n) for n in n_grid]
    if p_bar is None:
        p_bar = max(p_grid)

    ok, worst = True, ""
    for p in p_grid:
        for n in n_grid:
            free = untruncated_pmf(family, p, n)
            for K in K_grid:
                trunc = site_offspring_pmf(family, p, n, K)
                if not dominates(free, trunc):
                    ok, worst = False, f"free law fails to dominate at (p={p}, n={n}, K={K})"
    entries.append(CheckEntry("capacity_free_dominates_truncated", ok, worst or "all grid points"))

    ok, worst = True, ""
    for K in K_grid:
        cap_law = untruncated_pmf(family, p_bar, int(K))
        for p in p_grid:
            if p > p_bar:
                continue
            for n in n_grid:
                trunc = site_offspring_pmf(family, p, n, K)
                if not dominates(cap_law, trunc):
                    ok, worst = False, f"K-fold envelope fails at (p={p}, n={n}, K={K})"
    entries.append(CheckEntry("capacity_fold_envelope_dominates", ok, worst or "all grid points"))

    ok, worst = True, ""
    ps = sorted(p_grid)
    for p1, p2 in zip(ps[:-1], ps[1:]):
        if not dominates(family.pmf_for(p2), family.pmf_for(p1)):
            ok, worst = False, f"single-particle law not increasing between p={p1} and p={p2}"
    entries.append(CheckEntry("litter_increasing_in_p", ok, worst or "all neighbouring p"))

    ok, worst = True, ""
    for p in p_grid:
        for K in K_grid:
            prev = site_offspring_pmf(family, p, n_grid[0], K)
            for n1, n2 in zip(n_grid[:-1], n_grid[1:]):
                cur = site_offspring_pmf(family, p, n2, K)
                if not dominates(cur, prev):
                    ok, worst = False, f"site law not increasing in n at (p={p}, {n1}->{n2}, K={K})"
                prev = cur
    entries.append(CheckEntry("site_law_increasing_in_n", ok, worst or "all grid points"))

    if family.kind == "bernoulli_duplication":
        means_ok = all(
            abs(float(np.arange(len(family.pmf_for(p))) @ family.pmf_for(p)) - (1.0 + p)) < 1e-12
            for p in p_grid
        )
        no_zero = all(family.pmf_for(p)[0] == 0.0 for p in p_grid)
    else:
        means_ok, no_zero = True, True
        for p in p_grid:
            pmf = family.pmf_for(p)
            mean = float(np.arange(len(pmf)) @ pmf)
            if abs(mean - (1.0 + p)) > 1e-9:
                means_ok = False
            if pmf[0] > 0:
                no_zero = False
    entries.append(CheckEntry("litter_mean_is_1_plus_p", means_ok, ""))
    entries.append(CheckEntry("no_mass_at_zero", no_zero, ""))

    if rng is not None:
        ok, worst = True, ""
        for p, n, K in [(0.1, 5, 6), (0.5, 3, 4), (0.3, 8, math.inf)]:
            pmf = site_offspring_pmf(family, p, n, K)
            draws = np.asarray(
                [sample_site_offspring(family, p, n, K, rng) for _ in range(2000)]
            )
            for k, mass in enumerate(pmf):
                if mass <= 0:
                    continue
                freq = float(np.mean(draws == k))
                sd = math.sqrt(mass * (1 - mass) / len(draws))
                if abs(freq - mass) > 5 * sd + 1e-9:
                    ok, worst = False, f"sampler drifts from exact law at (p={p}, n={n}, K={K}, k={k})"
        entries.append(CheckEntry("sampler_matches_exact_law", ok, worst or "3 spot laws"))

    return entries
