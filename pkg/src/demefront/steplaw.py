"""Lattice displacement law and its Chernoff/Legendre toolkit.

The migration law puts on lattice offset j the Gaussian cell mass

    mu(j) = Phi((j + 1/2) dx / sqrt(dt)) - Phi((j - 1/2) dx / sqrt(dt)),

truncated at an offset ``j_trunc`` beyond which the excluded mass is
negligible (< 1e-12; the builder actually truncates at nine standard
deviations, leaving ~2e-19).  On top of the law sit

* ``log_mgf``  -- Lambda(lam) = log E[exp(lam X)], evaluated max-shifted,
* ``rate``     -- the convex conjugate I(y) = sup_lam (lam y - Lambda(lam)),
  computed by solving Lambda'(lam) = y (Lambda' is strictly increasing),
* ``solve_speed`` -- the unique positive root c of I(c) = log m, which is
  the linear spreading speed of a branching random walk with mean litter m,
* the Gaussian references Lambda0(lam) = dt lam^2 / 2, I0(y) = y^2 / (2 dt),
  c0 = sqrt(2 dt log m) used as two-sided envelopes.

Everything here is immutable and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import erf, erfc

from .reports import CheckEntry

__all__ = [
    "StepLaw",
    "RateFunction",
    "build_step_law",
    "gaussian_log_mgf",
    "gaussian_rate",
    "gaussian_speed",
    "speed_root_sensitivity",
    "check_rate_bounds",
]

# Offsets are kept out to this many standard deviations; the excluded mass
# 2*Q(9) ~ 2.3e-19 keeps the log-MGF truncation error under control for the
# slope ranges the rate-function checks sample.
_TRUNC_SIGMAS = 9.0
_MGF_TRUNC_TOL = 1e-9


@dataclass(frozen=True)
class StepLaw:
    """Symmetric cell-integrated Gaussian displacement law on dx * Z."""

    dt: float
    dx: float
    weights: np.ndarray = field(repr=False)  # index j + j_trunc, sums to 1
    j_trunc: int
    tail_mass: float  # Gaussian mass excluded by the truncation

    @property
    def offsets(self) -> np.ndarray:
        """Lattice offsets -j_trunc .. j_trunc matching ``weights``."""
        return np.arange(-self.j_trunc, self.j_trunc + 1)

    @property
    def displacements(self) -> np.ndarray:
        """Physical displacements j * dx matching ``weights``."""
        return self.offsets * self.dx

    def cdf(self) -> np.ndarray:
        """Cumulative weights, last entry exactly 1 (for inverse sampling)."""
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def variance(self) -> float:
        return float(np.sum(self.weights * self.displacements**2))


def build_step_law(dt: float, dx: float) -> StepLaw:
    """Build the displacement law for time step dt and lattice spacing dx."""
    if dt <= 0 or dx <= 0:
        raise ValueError("dt and dx must be positive")
    h = dx / math.sqrt(dt)  # cell width in standard deviations
    j = max(1, math.ceil(_TRUNC_SIGMAS / h - 0.5))
    edges_right = (np.arange(0, j + 1) + 0.5) * h  # (k+1/2) h, k = 0..j
    # Right-tail masses Q(z) = erfc(z / sqrt(2)) / 2, computed on the tail
    # side so neighbouring-cell differences do not cancel.
    q = 0.5 * erfc(edges_right / math.sqrt(2.0))
    w_pos = q[:-1] - q[1:]  # mass of cells 1..j
    w0 = float(erf(0.5 * h / math.sqrt(2.0)))
    raw = np.concatenate([w_pos[::-1], [w0], w_pos])
    tail = 2.0 * float(q[-1])
    total = raw.sum()
    weights = raw / total
    # Exact mirror symmetry regardless of summation order.
    weights = 0.5 * (weights + weights[::-1])
    return StepLaw(dt=dt, dx=dx, weights=weights, j_trunc=j, tail_mass=tail)


def gaussian_log_mgf(dt: float, lam) -> float:
    """Reference Lambda0(lam) = dt lam^2 / 2 of the untruncated Gaussian."""
    return 0.5 * dt * np.asarray(lam, dtype=float) ** 2


def gaussian_rate(dt: float, y) -> float:
    """Reference I0(y) = y^2 / (2 dt)."""
    return np.asarray(y, dtype=float) ** 2 / (2.0 * dt)


def gaussian_speed(dt: float, m: float) -> float:
    """Closed-form root c0 = sqrt(2 dt log m) of I0(c0) = log m."""
    if m <= 1:
        raise ValueError("mean litter size m must exceed 1")
    return math.sqrt(2.0 * dt * math.log(m))


def speed_root_sensitivity(r_bar: float, r_inf: float) -> float:
    """Constant a = 16 (log 2)^(-1/2) sqrt(r_bar / r_inf) bounding |c - c0| / dx."""
    return 16.0 / math.sqrt(math.log(2.0)) * math.sqrt(r_bar / r_inf)


class RateFunction:
    """Log-MGF, rate function and speed roots of a :class:`StepLaw`."""

    def __init__(self, step: StepLaw):
        self.step = step
        self._z = step.displacements  # physical displacements
        self._w = step.weights
        span = step.j_trunc * step.dx
        # Largest |lam| at which the truncated sum still approximates the
        # full law to _MGF_TRUNC_TOL: tail_mass * exp(lam * span) < tol.
        tail = max(step.tail_mass, 1e-300)
        self.lambda_guard = math.log(_MGF_TRUNC_TOL / tail) / span

    def _check_guard(self, lam: float) -> None:
        if abs(lam) > self.lambda_guard:
            bound = self.step.tail_mass * math.exp(abs(lam) * self.step.j_trunc * self.step.dx)
            raise OverflowError(
                f"|lambda|={abs(lam):.6g} exceeds truncation guard "
                f"{self.lambda_guard:.6g} (error bound {bound:.3g} > {_MGF_TRUNC_TOL:g})"
            )

    def log_mgf(self, lam: float) -> float:
        """Lambda(lam), max-shifted log-sum-exp over the truncated support."""
        lam = float(lam)
        self._check_guard(lam)
        s = lam * self._z
        m = s[-1] if lam >= 0 else s[0]
        return float(m + np.log(np.sum(self._w * np.exp(s - m))))

    def log_mgf_derivative(self, lam: float) -> float:
        """Lambda'(lam) = E[X e^(lam X)] / E[e^(lam X)], strictly increasing."""
        lam = float(lam)
        self._check_guard(lam)
        s = lam * self._z
        m = s[-1] if lam >= 0 else s[0]
        e = self._w * np.exp(s - m)
        return float(np.sum(e * self._z) / np.sum(e))

    def tilt_for_slope(self, y: float) -> float:
        """Solve Lambda'(lam) = y for y >= 0; inf when y is out of reach."""
        if y == 0.0:
            return 0.0
        if y < 0:
            raise ValueError("tilt_for_slope expects y >= 0; use symmetry")
        if y >= self.log_mgf_derivative(self.lambda_guard):
            return math.inf
        lo, hi = 0.0, min(2.0 * y / self.step.dt + 1.0, self.lambda_guard)
        while self.log_mgf_derivative(hi) < y:
            hi = min(2.0 * hi, self.lambda_guard)
            if hi == self.lambda_guard:
                break
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-12 * max(1.0, hi):
                break
            if self.log_mgf_derivative(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def rate(self, y: float) -> float:
        """The conjugate I(y); +inf marks directions beyond the tilt guard."""
        y = abs(float(y))
        if y == 0.0:
            return 0.0
        lam = self.tilt_for_slope(y)
        if not math.isfinite(lam):
            return math.inf
        return lam * y - self.log_mgf(lam)

    def solve_speed(self, m: float) -> float:
        """Unique positive root of I(c) = log m, by bisection to 1e-12."""
        if m <= 1:
            raise ValueError("mean litter size m must exceed 1")
        target = math.log(m)
        lo = self.step.dx * 1e-6
        hi = 4.0 * gaussian_speed(self.step.dt, m)
        while self.rate(hi) < target:
            hi *= 2.0
            if hi > self.step.j_trunc * self.step.dx:
                raise ValueError("speed root outside the reachable slope range")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-12:
                break
            if self.rate(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def check_rate_bounds(
    rf: RateFunction,
    y_samples: Iterable[float] | None = None,
    lam_samples: Iterable[float] | None = None,
    etas: Iterable[float] = (0.1, 0.5, 1.0),
    m_samples: Iterable[float] = (1.05, 1.1, 1.5, 2.0),
) -> list[CheckEntry]:
    """Verify the Gaussian-envelope and convexity inequalities on sample grids.

    Checked properties (violations become report entries, not exceptions):

    * bracketing of Lambda by Lambda0 +- lam dx / 2 (lam >= 0),
    * bracketing I0(y - dx/2) <= I(y) <= I0(y + dx/2) for dx <= 2y,
    * the speed root lies in (c0/2, 2 c0) whenever dx < c0,
    * convexity gap I((1+eta) y) >= I(y) + eta y^2 / (4 dt) for dx < y/2,
    * lower Lipschitz bound |I(y1)-I(y2)| >= y_low |y1-y2| / (4 dt)
      for y1, y2 >= y_low and dx < y_low / 2.
    """
    dt, dx = rf.step.dt, rf.step.dx
    entries: list[CheckEntry] = []
    sigma = math.sqrt(dt)
    if y_samples is None:
        y_samples = np.linspace(max(dx, 1e-3 * sigma), 2.0 * sigma, 25)
    y_samples = [float(y) for y in y_samples]
    if lam_samples is None:
        lam_samples = np.linspace(0.0, min(rf.lambda_guard, 6.0 / sigma), 17)
    lam_samples = [float(l) for l in lam_samples]

    ok, worst = True, ""
    for lam in lam_samples:
        lam0 = gaussian_log_mgf(dt, lam)
        val = rf.log_mgf(lam)
        if not (lam0 - lam * dx / 2 - 1e-12 <= val <= lam0 + lam * dx / 2 + 1e-12):
            ok = False
            worst = f"lam={lam:.4g}: Lambda={val:.6g} outside [{lam0 - lam * dx / 2:.6g}, {lam0 + lam * dx / 2:.6g}]"
            break
    entries.append(CheckEntry("log_mgf_gaussian_bracket", ok, worst or f"{len(lam_samples)} slopes"))

    ok, worst = True, ""
    for y in y_samples:
        if dx > 2.0 * y:
            continue
        val = rf.rate(y)
        lo = gaussian_rate(dt, max(y - dx / 2, 0.0))
        hi = gaussian_rate(dt, y + dx / 2)
        if not (lo - 1e-10 <= val <= hi + 1e-10):
            ok = False
            worst = f"y={y:.4g}: I={val:.6g} outside [{lo:.6g}, {hi:.6g}]"
            break
    entries.append(CheckEntry("rate_gaussian_bracket", ok, worst or f"{len(y_samples)} slopes"))

    ok, worst = True, ""
    for m in m_samples:
        c0 = gaussian_speed(dt, m)
        if dx >= c0:
            continue
        c = rf.solve_speed(m)
        if not (0.5 * c0 < c < 2.0 * c0):
            ok = False
            worst = f"m={m:.4g}: c={c:.6g} outside ({0.5 * c0:.6g}, {2 * c0:.6g})"
            break
    entries.append(CheckEntry("speed_root_bracket", ok, worst or f"{len(list(m_samples))} litter means"))

    ok, worst = True, ""
    for y in y_samples:
        if dx >= 0.5 * y:
            continue
        base = rf.rate(y)
        for eta in etas:
            stretched = rf.rate((1.0 + eta) * y)
            if not math.isfinite(stretched):
                continue
            gap = y * y / (4.0 * dt) * eta
            if stretched + 1e-10 < base + gap:
                ok = False
                worst = f"y={y:.4g}, eta={eta:.3g}: I((1+eta)y)={stretched:.6g} < I(y)+gap={base + gap:.6g}"
                break
        if not ok:
            break
    entries.append(CheckEntry("convexity_gap", ok, worst or "all sampled (y, eta)"))

    ok, worst = True, ""
    y_low = max(2.5 * dx, 0.2 * sigma)
    ys = [y for y in y_samples if y >= y_low]
    for i in range(len(ys)):
        for jj in range(i + 1, len(ys)):
            y1, y2 = ys[i], ys[jj]
            v1, v2 = rf.rate(y1), rf.rate(y2)
            if not (math.isfinite(v1) and math.isfinite(v2)):
                continue
            lhs = y_low / (4.0 * dt) * abs(y1 - y2)
            if abs(v1 - v2) + 1e-10 < lhs:
                ok = False
                worst = f"y1={y1:.4g}, y2={y2:.4g}: |dI|={abs(v1 - v2):.6g} < {lhs:.6g}"
                break
        if not ok:
            break
    entries.append(CheckEntry("lipschitz_lower_bound", ok, worst or f"{len(ys)} slope pairs"))
    return entries
