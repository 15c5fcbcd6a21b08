"""Growth-rate fields r(t, x) with bound and smoothness metadata.

An :class:`Environment` wraps a positive, bounded rate field together with
the constants the rest of the library needs: the global lower bound
``r_inf``, the upper bound ``r_sup`` and, when the field is differentiable,
the Lipschitz constant ``L`` of (t, x) -> sqrt(2 r(t, x)).  Three families
are supported:

* ``constant`` -- r(t, x) = r0,
* ``periodic_piecewise`` -- a 1-periodic-in-x two-plateau profile, value
  ``mu_plus`` on [0, P/2) and ``mu_minus`` on [P/2, P) (half-open cells,
  the split point belongs to the low plateau),
* ``smooth_callable`` -- an arbitrary user callable with user-declared
  bounds and Lipschitz constant.

Environments are immutable and safe to share across concurrent replicates.
The macroscopic scale ``eps`` is deliberately *not* stored here: engines
evaluate the field at (eps * t, eps * x) themselves, so a single
environment serves a whole parameter sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Environment",
    "ValidationEntry",
    "ValidationReport",
    "constant_environment",
    "periodic_plateaus",
    "smooth_environment",
    "validate",
    "lipschitz_constant",
]


def lipschitz_constant(grad_t_sup: float, grad_x_sup: float, r_inf: float) -> float:
    """Lipschitz constant of sqrt(2 r) from sup-norms of the partials of r."""
    if r_inf <= 0:
        raise ValueError("r_inf must be positive")
    return (grad_t_sup + grad_x_sup) / math.sqrt(2.0 * r_inf)


@dataclass(frozen=True)
class Environment:
    """Immutable growth-rate field with its declared constants.

    ``lipschitz_L`` is ``None`` for fields that are not C^1 (the two-plateau
    profile); simulation is still allowed there, but smoothness-based error
    bounds do not apply and :func:`validate` flags the fact.
    """

    kind: str
    r_inf: float
    r_sup: float
    lipschitz_L: float | None
    params: dict = field(default_factory=dict, repr=False)
    _fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "periodic_piecewise", "smooth_callable"):
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if not (self.r_inf > 0):
            raise ValueError("r_inf must be positive")
        if self.r_sup < self.r_inf:
            raise ValueError("r_sup must be >= r_inf")

    def evaluate(self, t, x):
        """Rate r(t, x); accepts scalars or arrays, rejects negative times."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("time must be nonnegative")
        x_arr = np.asarray(x, dtype=float)
        out = self._fn(t_arr, x_arr)
        shape = np.broadcast_shapes(t_arr.shape, x_arr.shape)
        if shape == ():
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def describe(self) -> dict:
        """JSON-friendly description (used by run manifests)."""
        d = {"kind": self.kind, "r_inf": self.r_inf, "r_sup": self.r_sup}
        if self.lipschitz_L is not None:
            d["lipschitz_L"] = self.lipschitz_L
        d.update(self.params)
        return d


def constant_environment(r0: float) -> Environment:
    if r0 <= 0:
        raise ValueError("constant rate must be positive")

    def fn(t, x):
        return np.broadcast_to(np.float64(r0), np.broadcast_shapes(np.shape(t), np.shape(x))).copy()

    return Environment("constant", r0, r0, 0.0, {"r0": r0}, fn)


def periodic_plateaus(mu_plus: float, mu_minus: float, period: float = 1.0) -> Environment:
    """Two-plateau x-periodic profile: mu_plus on [0, P/2), mu_minus on [P/2, P)."""
    if not (mu_plus > mu_minus > 0):
        raise ValueError("need mu_plus > mu_minus > 0")
    if period <= 0:
        raise ValueError("period must be positive")
    half = period / 2.0

    def fn(t, x):
        frac = np.mod(x, period)
        # np.mod can round up to exactly `period` for tiny negative x;
        # fold that back so periodicity stays exact at the boundary
        frac = np.where(frac >= period, frac - period, frac)
        return np.where(frac < half, mu_plus, mu_minus).astype(float)

    params = {"mu_plus": mu_plus, "mu_minus": mu_minus, "period": period}
    return Environment("periodic_piecewise", mu_minus, mu_plus, None, params, fn)


def smooth_environment(
    fn: Callable,
    r_inf: float,
    r_sup: float,
    lipschitz_L: float,
    label: str = "smooth",
) -> Environment:
    """Wrap a user callable r(t, x); it must broadcast over numpy arrays."""

    def wrapped(t, x):
        return np.asarray(fn(t, x), dtype=float)

    return Environment(
        "smooth_callable", r_inf, r_sup, lipschitz_L, {"label": label}, wrapped
    )


@dataclass(frozen=True)
class ValidationEntry:
    severity: str  # "violation" | "note"
    message: str
    where: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple

    @property
    def violations(self) -> tuple:
        return tuple(e for e in self.entries if e.severity == "violation")

    @property
    def passed(self) -> bool:
        return not self.violations


def validate(
    env: Environment,
    t_grid: Sequence[float] | None = None,
    x_grid: Sequence[float] | None = None,
    n_default: int = 10_000,
) -> ValidationReport:
    """Sampling-based check of the declared bounds and Lipschitz property.

    Violations become report entries (never exceptions).  Non-C^1 fields get
    a "note" entry; notes do not fail the report since such fields are still
    legal simulation inputs.
    """
    entries: list[ValidationEntry] = []
    if t_grid is None:
        t_grid = np.linspace(0.0, 10.0, n_default)
    else:
        t_grid = np.asarray(t_grid, dtype=float)
    if x_grid is None:
        x_grid = np.linspace(-4.0 * math.pi, 4.0 * math.pi, n_default)
    else:
        x_grid = np.asarray(x_grid, dtype=float)
    if len(t_grid) == 0 or len(x_grid) == 0:
        raise ValueError("validation grid must be nonempty")

    if env.kind == "periodic_piecewise":
        entries.append(
            ValidationEntry(
                "note",
                "discontinuous field: C1 smoothness hypothesis not met; "
                "smoothness-based error bounds do not apply",
            )
        )

    tol = 1e-12
    # Bound checks along a t-slice and an x-slice plus a thinned product grid.
    t_probe = t_grid[:: max(1, len(t_grid) // 128)]
    vals = env.evaluate(t_probe[:, None], x_grid[None, :])
    lo = float(np.min(vals))
    hi = float(np.max(vals))
    if lo < env.r_inf - tol:
        ti, xi = np.unravel_index(int(np.argmin(vals)), vals.shape)
        entries.append(
            ValidationEntry(
                "violation",
                f"sampled rate {lo:.6g} below declared r_inf={env.r_inf:.6g}",
                (float(t_probe[ti]), float(x_grid[xi])),
            )
        )
    if hi > env.r_sup + tol:
        ti, xi = np.unravel_index(int(np.argmax(vals)), vals.shape)
        entries.append(
            ValidationEntry(
                "violation",
                f"sampled rate {hi:.6g} above declared r_sup={env.r_sup:.6g}",
                (float(t_probe[ti]), float(x_grid[xi])),
            )
        )

    if env.lipschitz_L is not None and env.kind != "constant":
        L = env.lipschitz_L
        # sqrt(2 r) increments between neighbouring samples, both axes.
        t_mid = t_grid[len(t_grid) // 2]
        sx = np.sqrt(2.0 * env.evaluate(np.float64(t_mid), x_grid))
        dx_pairs = np.abs(np.diff(sx)) - L * np.abs(np.diff(x_grid))
        slack = 1e-9 + L * 1e-9
        if np.any(dx_pairs > slack):
            i = int(np.argmax(dx_pairs))
            entries.append(
                ValidationEntry(
                    "violation",
                    f"sqrt(2r) increment exceeds L*|dx| near x={x_grid[i]:.6g} "
                    f"(excess {float(dx_pairs[i]):.3g})",
                    (float(t_mid), float(x_grid[i])),
                )
            )
        x_mid = x_grid[len(x_grid) // 2]
        st = np.sqrt(2.0 * env.evaluate(t_grid, np.float64(x_mid)))
        dt_pairs = np.abs(np.diff(st)) - L * np.abs(np.diff(t_grid))
        if np.any(dt_pairs > slack):
            i = int(np.argmax(dt_pairs))
            entries.append(
                ValidationEntry(
                    "violation",
                    f"sqrt(2r) increment exceeds L*|dt| near t={t_grid[i]:.6g} "
                    f"(excess {float(dt_pairs[i]):.3g})",
                    (float(t_grid[i]), float(x_mid)),
                )
            )

    return ValidationReport(tuple(entries))
