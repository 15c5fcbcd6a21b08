"""Forward Euler for the limiting front trajectory x'(t) = sqrt(2 r(t, x)).

The scheme is deliberately plain forward Euler (optionally with a constant
speed perturbation delta added to the right-hand side), because the error
and stability bounds being tested are specific to it:

* global error on a C^1 field:  max_i |x(t_i) - y_i| <= e^(L T) h / 2,
* perturbed-vs-unperturbed gap: sup_[0,T] |x - x_tilde| <= delta (T+1) e^(L T),

with L the Lipschitz constant of sqrt(2 r).  For discontinuous plateau
fields those bounds do not apply; the long-horizon average speed is used
instead and converges to the harmonic mean of the plateau speeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import FrontTrace
from .environment import Environment
from .reports import CheckEntry

__all__ = [
    "OdeSolution",
    "solve_euler",
    "euler_error_bound",
    "perturbation_bound",
    "check_stability",
    "periodic_limit_speed_empirical",
]


@dataclass(frozen=True)
class OdeSolution:
    times: np.ndarray
    values: np.ndarray
    h: float
    delta: float
    env: Environment = field(repr=False)

    def to_trace(self, eps: float = 1.0) -> FrontTrace:
        """View as a front trace (already in macroscopic variables)."""
        return FrontTrace(
            self.times.copy(),
            self.values.copy(),
            meta={"engine": "ode", "h": self.h, "delta": self.delta, "eps": eps},
        )

    def final_slope(self) -> float:
        return float(self.values[-1] - self.values[0]) / float(self.times[-1] - self.times[0])


def euler_error_bound(L: float, T: float, h: float) -> float:
    """Global forward-Euler error bound on a field with Lipschitz data L."""
    return math.exp(L * T) * h / 2.0


def perturbation_bound(delta: float, T: float, L: float) -> float:
    """Bound on the gap between the delta-perturbed and plain trajectories."""
    return delta * (T + 1.0) * math.exp(L * T)


def solve_euler(
    env: Environment, x0: float, T: float, h: float, delta: float = 0.0
) -> OdeSolution:
    """y_{i+1} = y_i + (sqrt(2 r(i h, y_i)) + delta) h on the grid 0..T."""
    if h <= 0:
        raise ValueError("step h must be positive")
    if T < h:
        raise ValueError("horizon T must be at least one step")
    if delta < 0:
        raise ValueError("perturbation delta must be nonnegative")
    n = int(math.floor(T / h + 1e-9))
    values = np.empty(n + 1)
    values[0] = x0
    y = float(x0)

    kind = env.kind
    if kind == "constant":
        slope = math.sqrt(2.0 * env.params["r0"]) + delta
        values = x0 + slope * h * np.arange(n + 1, dtype=float)
    elif kind == "periodic_piecewise":
        period = env.params["period"]
        half = period / 2.0
        v_hi = math.sqrt(2.0 * env.params["mu_plus"]) + delta
        v_lo = math.sqrt(2.0 * env.params["mu_minus"]) + delta
        for i in range(n):
            y += (v_hi if (y % period) < half else v_lo) * h
            values[i + 1] = y
    else:
        fn = env._fn
        sqrt = math.sqrt
        for i in range(n):
            y += (sqrt(2.0 * float(fn(i * h, y))) + delta) * h
            values[i + 1] = y
    return OdeSolution(h * np.arange(n + 1, dtype=float), values, h, delta, env)


def check_stability(
    env: Environment, delta: float, T: float, h: float = 1e-5, x0: float = 0.0
) -> list[CheckEntry]:
    """Solve the plain and delta-perturbed problems; check the gap bound."""
    if env.lipschitz_L is None:
        raise ValueError("stability bound needs a field with declared Lipschitz data")
    base = solve_euler(env, x0, T, h, 0.0)
    pert = solve_euler(env, x0, T, h, delta)
    gap = float(np.max(np.abs(base.values - pert.values)))
    bound = perturbation_bound(delta, T, env.lipschitz_L)
    slack = 2.0 * euler_error_bound(env.lipschitz_L, T, h)
    ok = gap <= bound + slack
    return [
        CheckEntry(
            "perturbation_gap",
            ok,
            f"sup gap {gap:.6g} vs bound {bound:.6g} (+ discretization slack {slack:.3g})",
        )
    ]


def periodic_limit_speed_empirical(env: Environment, T: float, h: float = 1e-4) -> float:
    """Average slope x(T)/T of the trajectory through a plateau field."""
    if env.kind != "periodic_piecewise":
        raise ValueError("empirical plateau speed expects a periodic plateau field")
    sol = solve_euler(env, 0.0, T, h, 0.0)
    return float(sol.values[-1] / sol.times[-1])
