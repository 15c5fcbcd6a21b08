"""Closed-form propagation speeds for two-plateau periodic media.

For a 1-periodic profile taking the value mu_plus on half the period and
mu_minus on the other half (mu_plus >= mu_minus > 0):

* ``c_ode``       -- harmonic mean of the plateau speeds sqrt(2 mu+-),
  the slow-modulation limit of the particle front;
* ``c_quadratic`` -- sqrt(mu_plus + mu_minus), the homogenization
  (fast-modulation) limit of the continuum front speeds;
* ``c_star0``     -- slow-modulation limit of the continuum (pulsating
  front) speeds, bounded below by ``c_quadratic``.

The strict chain c_ode < c_quadratic <= c_star0 for mu_plus != mu_minus is
what makes the two double limits differ.

A transcription wrinkle deserves a note: the closed form for c_star0 is
sometimes displayed with (mu+ - mu-) sqrt(D) in the numerator, which
evaluates to ~1.8396 at (3, 0.1) and collapses to sqrt(mu/2) -- half the
homogeneous front speed -- as mu+ -> mu-, breaking the ordering chain.
With (mu+ + mu-) sqrt(D) instead, the value at (3, 0.1) is ~1.9015
(matching the commonly quoted 1.901) and the homogeneous limit is exactly
sqrt(2 mu).  This module computes the latter and reports both numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpeedReport",
    "c_ode",
    "c_star0",
    "quadratic_mean_speed",
    "speed_report",
    "LadderSettings",
    "LadderCell",
    "ComparisonResult",
    "compare_engines",
]

_QUOTED_C_STAR0_3_01 = 1.901


def _check_plateaus(mu_plus: float, mu_minus: float) -> None:
    if not (mu_plus > 0 and mu_minus > 0):
        raise ValueError("plateau rates must be positive")
    if mu_plus < mu_minus:
        raise ValueError("expected mu_plus >= mu_minus")


def c_ode(mu_plus: float, mu_minus: float) -> float:
    """Harmonic mean 2 sqrt(2 mu+ mu-) / (sqrt(mu-) + sqrt(mu+))."""
    _check_plateaus(mu_plus, mu_minus)
    return 2.0 * math.sqrt(2.0 * mu_plus * mu_minus) / (math.sqrt(mu_minus) + math.sqrt(mu_plus))


def quadratic_mean_speed(mu_plus: float, mu_minus: float) -> float:
    _check_plateaus(mu_plus, mu_minus)
    return math.sqrt(mu_plus + mu_minus)


def c_star0(mu_plus: float, mu_minus: float) -> float:
    """2 sqrt2 [mu+^2 + mu-^2 + (mu+ + mu-) sqrt(D)] / (mu+ + mu- + 2 sqrt(D))^(3/2),
    with D = mu+^2 + mu-^2 - mu+ mu-.

    The middle sign is the corrected one (see the module docstring): it is
    the unique choice that recovers sqrt(2 mu) in the homogeneous limit and
    keeps c_star0 >= sqrt(mu+ + mu-).
    """
    _check_plateaus(mu_plus, mu_minus)
    disc = mu_plus**2 + mu_minus**2 - mu_plus * mu_minus
    if disc < 0:
        raise ValueError("negative discriminant in the plateau speed formula")
    sd = math.sqrt(disc)
    num = mu_plus**2 + mu_minus**2 + (mu_plus + mu_minus) * sd
    den = (mu_plus + mu_minus + 2.0 * sd) ** 1.5
    return 2.0 * math.sqrt(2.0) * num / den


def c_star0_as_printed(mu_plus: float, mu_minus: float) -> float:
    """The (mu+ - mu-) sqrt(D) variant, kept for the discrepancy report."""
    _check_plateaus(mu_plus, mu_minus)
    sd = math.sqrt(mu_plus**2 + mu_minus**2 - mu_plus * mu_minus)
    num = mu_plus**2 + mu_minus**2 + (mu_plus - mu_minus) * sd
    return 2.0 * math.sqrt(2.0) * num / (mu_plus + mu_minus + 2.0 * sd) ** 1.5


@dataclass(frozen=True)
class SpeedReport:
    mu_plus: float
    mu_minus: float
    c_ode: float
    c_quadratic: float
    c_star0: float
    notes: tuple

    def ordering_holds(self) -> bool:
        if self.mu_plus == self.mu_minus:
            return math.isclose(self.c_ode, self.c_quadratic, rel_tol=1e-10) and math.isclose(
                self.c_quadratic, self.c_star0, rel_tol=1e-10
            )
        return self.c_ode < self.c_quadratic <= self.c_star0 + 1e-12

    def as_dict(self) -> dict:
        return {
            "mu_plus": self.mu_plus,
            "mu_minus": self.mu_minus,
            "c_ode": self.c_ode,
            "c_quadratic": self.c_quadratic,
            "c_star0": self.c_star0,
            "ordering_holds": self.ordering_holds(),
            "notes": list(self.notes),
        }


def speed_report(mu_plus: float, mu_minus: float) -> SpeedReport:
    """Assemble the three closed-form speeds with provenance notes."""
    report = SpeedReport(
        mu_plus,
        mu_minus,
        c_ode(mu_plus, mu_minus),
        quadratic_mean_speed(mu_plus, mu_minus),
        c_star0(mu_plus, mu_minus),
        _notes_for(mu_plus, mu_minus),
    )
    if not report.ordering_holds():
        raise AssertionError(
            f"speed ordering violated for (mu_plus={mu_plus}, mu_minus={mu_minus}): "
            f"{report.c_ode:.6g} / {report.c_quadratic:.6g} / {report.c_star0:.6g}"
        )
    return report


def _notes_for(mu_plus: float, mu_minus: float) -> tuple:
    notes = []
    if (mu_plus, mu_minus) == (3.0, 0.1):
        printed = c_star0_as_printed(3.0, 0.1)
        corrected = c_star0(3.0, 0.1)
        notes.append(
            "discrepancy flagged for (3, 0.1): the homogenization-speed closed form "
            "as displayed in the source derivation evaluates to ~1.8396 "
            f"(computed {printed:.6f}), while the quoted value is "
            f"{_QUOTED_C_STAR0_3_01}; unresolved paper ambiguity surfaced rather "
            "than hidden. The sign-corrected numerator (mu+ + mu-) sqrt(D) gives "
            f"{corrected:.6f}, matches the quoted 1.901, and is the only variant "
            "that collapses to sqrt(2 mu) at homogeneity, so this report computes "
            "with it and carries both values"
        )
    return tuple(notes)


# ---------------------------------------------------------------------------
# Cross-engine double-limit comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LadderSettings:
    """Parameters of the two-direction (K, eps) ladder experiment."""

    mu_plus: float = 3.0
    mu_minus: float = 0.1
    period: float = 1.0
    dt: float = 0.1
    dx: float = 0.005
    T: float = 5.0
    eps_fixed: float = 0.1
    K_fixed: float = 1e3
    eps_ladder: tuple = (0.2, 0.1, 0.05)
    K_ladder: tuple = (1e2, 1e4, 1e6)
    replicates: int = 20
    seed: int = 0
    window_back: float = 8.0
    bulk_threshold: int | None = 128
    init_width: float = 8.0  # filled-left initial block, position units
    slope_window: float = 0.5
    include_pde: bool = False
    pde_h_x: float = 0.05
    reaction: str = "logistic"
    ode_h: float = 1e-4


@dataclass
class LadderCell:
    eps: float
    K: float
    slopes: np.ndarray
    first_trace: object  # FrontTrace of replicate 0 (for plotting)
    pde_trace: object | None = None

    @property
    def mean(self) -> float:
        return float(self.slopes.mean())

    @property
    def ci95(self) -> float:
        if len(self.slopes) < 2:
            return math.inf
        return 1.96 * float(self.slopes.std(ddof=1)) / math.sqrt(len(self.slopes))

    def as_dict(self) -> dict:
        ci = self.ci95
        return {
            "eps": self.eps,
            "K": self.K if math.isfinite(self.K) else "inf",
            "slopes": [float(s) for s in self.slopes],
            "mean_slope": self.mean,
            "ci95": ci if math.isfinite(ci) else None,
        }


@dataclass
class ComparisonResult:
    settings: LadderSettings
    closed_form: SpeedReport
    eps_cells: list  # fixed K, eps decreasing along the list
    K_cells: list  # fixed eps, K increasing along the list
    ode_slope: float

    def eps_trend_decreasing(self) -> bool:
        means = [c.mean for c in self.eps_cells]
        return all(a > b for a, b in zip(means[:-1], means[1:]))

    def K_trend_increasing(self) -> bool:
        means = [c.mean for c in self.K_cells]
        return all(a < b for a, b in zip(means[:-1], means[1:]))

    def trend_z_scores(self) -> dict:
        """Adjacent-cell mean differences in units of their combined CI."""

        def zs(cells, sign):
            out = []
            for a, b in zip(cells[:-1], cells[1:]):
                halfwidth = math.hypot(a.ci95, b.ci95)
                if 0.0 < halfwidth < math.inf:
                    out.append(sign * (b.mean - a.mean) / halfwidth)
                else:
                    out.append(None)
            return out

        return {"eps_direction": zs(self.eps_cells, -1.0), "K_direction": zs(self.K_cells, +1.0)}

    def as_dict(self) -> dict:
        return {
            "closed_form": self.closed_form.as_dict(),
            "ode_slope": self.ode_slope,
            "eps_cells": [c.as_dict() for c in self.eps_cells],
            "K_cells": [c.as_dict() for c in self.K_cells],
            "eps_trend_decreasing": self.eps_trend_decreasing(),
            "K_trend_increasing": self.K_trend_increasing(),
            "trend_z_scores": self.trend_z_scores(),
        }


def _run_cell(settings: LadderSettings, env, eps: float, K: float, cell_index: int):
    from . import engine as eng
    from .offspring import bernoulli_duplication
    from .steplaw import build_step_law

    law = build_step_law(settings.dt, settings.dx)
    fam = bernoulli_duplication()
    width_sites = int(round(settings.init_width / settings.dx))
    horizon = int(round(settings.T / (eps * settings.dt)))
    # The front profile spans ~log(K / (lam dx)) / lam from tip to saturation
    # (lam = tilt of the fast-plateau speed root); the drop-behind window must
    # hold all of it plus margin or large-K cells lose their own bulk.
    lam_plus = math.sqrt(2.0 * math.log1p(settings.mu_plus * settings.dt) / settings.dt)
    if math.isfinite(K):
        profile_len = math.log(max(K, 2.0) / (lam_plus * settings.dx)) / lam_plus
        window = max(settings.window_back, profile_len + 6.0)
    else:
        window = max(settings.window_back, 14.0)
    slopes = []
    first_trace = None
    for rep in range(settings.replicates):
        cfg = eng.EngineConfig(
            env=env,
            step=law,
            family=fam,
            eps=eps,
            K=K,
            initial=eng.initial_filled_left(width_sites),
            seed=settings.seed,
            horizon=horizon,
            replicate=cell_index * 100_000 + rep,
            window_back=window,
            bulk_threshold=settings.bulk_threshold,
        )
        trace = eng.run(cfg)
        if first_trace is None:
            first_trace = trace
        slopes.append(eng.estimate_speed(trace, settings.slope_window).slope)
    return LadderCell(eps, K, np.asarray(slopes), first_trace)


def compare_engines(settings: LadderSettings) -> ComparisonResult:
    """Run the particle ladders in both limit directions plus the limiting ODE.

    The eps ladder holds K fixed and lets eps shrink (slopes should fall
    toward the harmonic-mean speed); the K ladder holds eps fixed and lets
    the capacity grow (slopes should rise toward the continuum front).
    """
    from .environment import periodic_plateaus
    from .ode import periodic_limit_speed_empirical
    from .pde import run_pde

    env = periodic_plateaus(settings.mu_plus, settings.mu_minus, settings.period)
    report = speed_report(settings.mu_plus, settings.mu_minus)

    eps_cells = []
    for i, eps in enumerate(settings.eps_ladder):
        eps_cells.append(_run_cell(settings, env, eps, settings.K_fixed, i))
    K_cells = []
    for i, K in enumerate(settings.K_ladder):
        K_cells.append(_run_cell(settings, env, settings.eps_fixed, K, 100 + i))

    ode_slope = periodic_limit_speed_empirical(env, T=max(settings.T * 40.0, 200.0), h=settings.ode_h)

    if settings.include_pde:
        for cell in eps_cells + K_cells:
            cell.pde_trace = run_pde(
                env,
                cell.eps,
                cell.K,
                settings.reaction,
                T=settings.T / cell.eps,
                h_x=settings.pde_h_x,
                record_stride=50,
            )

    return ComparisonResult(settings, report, eps_cells, K_cells, ode_slope)
