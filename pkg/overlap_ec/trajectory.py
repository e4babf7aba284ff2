"""
Trajectory predictions for the lazy largest-clause algorithm on 1-in-3 formulas.

Scaled counts c3 = C3/n, c2 = C2/n, p = P/n and n = N/n evolve in scaled time
t = steps/n. The default schedule serves each branch with probability 1/3 and
admits closed forms up to t2, the time at which 3-clauses run out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .const import (
    DEFAULT_SCHEDULE_EPSILON,
    ODE_MAX_STEP,
    ODE_MODE_ALIASES,
    ODE_MODES,
    ODE_STEP,
    ODE_T_MAX,
    SCHEDULE_KINDS,
)
from .core import OverlapEcDomainError, OverlapEcInvalidParametersError
from .data import EndgameDensity, TrajectoryCurve, TrajectorySample

_LOGGER = logging.getLogger(__name__)

SUPERCRITICAL_RATE = 1.0 / 6.0
SUM_SLACK = 1e-12


def _check_rate(r: float) -> None:
    if not r > 0:
        msg = f"Clause density must be positive, got r={r}"
        raise OverlapEcInvalidParametersError(msg)


def closed_forms(t, r: float):  # noqa: ANN001, ANN201
    """Return (c3, c2) under the default schedule; t may be an array."""
    _check_rate(r)
    s = 1.0 - np.asarray(t, dtype=float)
    a = r + 1.0 / 6.0
    c3 = a * s**3 - s / 6.0
    c2 = s**2 / 3.0 - s / 3.0 + 2.0 * a * (1.0 - s) * s**2
    if np.ndim(c3) == 0:
        return float(c3), float(c2)
    return c3, c2


def stopping_time_t2(r: float) -> float:
    """Return t2 = 1 - 1/sqrt(6r + 1)."""
    _check_rate(r)
    return 1.0 - 1.0 / math.sqrt(6.0 * r + 1.0)


def min_raw_overlap(r: float) -> float:
    """Return the overlap of the raw pair, the smallest target reachable by tuning."""
    return stopping_time_t2(r)


def flows(t, r: float):  # noqa: ANN001, ANN201
    """Return the average flows (fp, fn) into the positive and negative unit queues."""
    t2 = stopping_time_t2(r)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr >= t2):
        msg = f"Flows are defined on [0, {t2}) for r={r}"
        raise OverlapEcDomainError(msg)
    c3, c2 = closed_forms(t_arr, r)
    s = 1.0 - t_arr
    fp = (2.0 / 3.0) * 2.0 * c2 / s + (1.0 / 3.0) * 6.0 * c3 / s
    fn = (1.0 / 3.0) * 2.0 * c2 / s
    if np.ndim(fp) == 0:
        return float(fp), float(fn)
    return fp, fn


def flow_maxima(r: float) -> tuple[float, float, float]:
    """Return (max fp, max fn, argmax fn) on [0, t2)."""
    _check_rate(r)
    return 2.0 * r, 2.0 * r * r / (6.0 * r + 1.0), 3.0 * r / (6.0 * r + 1.0)


def endgame_density_mu(r: float) -> EndgameDensity:
    """Return the mean degree of the residual 2-clause graph at t2."""
    t2 = stopping_time_t2(r)
    _, c2 = closed_forms(t2, r)
    mu = 2.0 * c2 / (1.0 - t2)
    supercritical = r >= SUPERCRITICAL_RATE or mu >= 1.0
    if supercritical:
        _LOGGER.warning("Endgame density mu=%s at r=%s is outside the subcritical range", mu, r)
    return EndgameDensity(mu=mu, supercritical=supercritical)


def r_lb_eval(q: float) -> float:
    """Return r_lb(q), the density below which the lazy algorithm finds a pair w.p. Omega(1)."""
    if not 0.0 < q < 1.0:
        msg = f"Overlap must lie in (0, 1), got q={q}"
        raise OverlapEcInvalidParametersError(msg)
    if q < 1.0 - 1.0 / math.sqrt(2.0):
        return (1.0 / (1.0 - q) ** 2 - 1.0) / 6.0
    return 1.0 / 6.0


@dataclass(frozen=True)
class Schedule:
    """Branch probabilities of the lazy algorithm."""

    kind: str = "default"
    lambdas: tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    epsilon: float = DEFAULT_SCHEDULE_EPSILON
    r: float | None = None

    @property
    def schedule_id(self) -> str:
        if self.kind == "constant":
            return "constant(" + ",".join(f"{v:g}" for v in self.lambdas) + ")"
        if self.kind == "adaptive-sketch":
            return f"adaptive-sketch(eps={self.epsilon:g})"
        return "default"

    def probabilities(
        self, t: float, c3: float | None = None, c2: float | None = None
    ) -> tuple[float, float, float, bool]:
        """Return (lambda1, lambda2, lambda3, clamped) at scaled time t."""
        if self.kind != "adaptive-sketch":
            return (*self.lambdas, False)
        if c3 is None or c2 is None:
            if self.r is None:
                msg = "The adaptive schedule needs r or the current (c3, c2)"
                raise OverlapEcInvalidParametersError(msg)
            c3, c2 = closed_forms(t, self.r)
        s = 1.0 - t
        eps = self.epsilon
        lambda1 = (2 * c2 + eps) / (s + 2 * c2)
        lambda2 = (2 * c2 + eps) * (6 * c3 + 2 * c2 + eps) / (s * (s + 2 * c2))
        raw = (lambda1, lambda2, 1.0 - lambda1 - lambda2)
        lambda1, lambda2, lambda3 = (min(1.0, max(0.0, v)) for v in raw)
        total = lambda1 + lambda2 + lambda3
        if total > 1.0 + SUM_SLACK:
            lambda1, lambda2, lambda3 = lambda1 / total, lambda2 / total, lambda3 / total
        clamped = (lambda1, lambda2, lambda3) != raw
        return lambda1, lambda2, lambda3, clamped

    def lambda1(self, t: float) -> float:
        return self.probabilities(t)[0]

    def lambda2(self, t: float) -> float:
        return self.probabilities(t)[1]

    def lambda3(self, t: float) -> float:
        return self.probabilities(t)[2]


def make_schedule(
    kind: str = "default",
    epsilon: float = DEFAULT_SCHEDULE_EPSILON,
    r: float | None = None,
    lambdas: tuple[float, float, float] | None = None,
) -> Schedule:
    """Build a schedule: default thirds, fixed constants, or the adaptive sketch."""
    if kind not in SCHEDULE_KINDS:
        msg = f"Unknown schedule '{kind}', expected one of {SCHEDULE_KINDS}"
        raise OverlapEcInvalidParametersError(msg)
    if kind == "default":
        return Schedule()
    if kind == "constant":
        if lambdas is None or len(lambdas) != 3:  # noqa: PLR2004
            msg = "A constant schedule needs three probabilities"
            raise OverlapEcInvalidParametersError(msg)
        if min(lambdas) < 0 or sum(lambdas) > 1 + SUM_SLACK or sum(lambdas) <= 0:
            msg = f"Probabilities must be nonnegative with 0 < sum <= 1, got {lambdas}"
            raise OverlapEcInvalidParametersError(msg)
        return Schedule(kind="constant", lambdas=tuple(float(v) for v in lambdas))
    if not epsilon > 0:
        msg = f"The adaptive schedule needs epsilon > 0, got {epsilon}"
        raise OverlapEcInvalidParametersError(msg)
    return Schedule(kind="adaptive-sketch", epsilon=epsilon, r=r)


def _queue_drift(level: float, inflow: float, service: float) -> float:
    """Fluid queue: an empty queue only serves what flows in."""
    if level <= 0:
        return inflow - min(service, inflow)
    return inflow - service


def _derivative(
    t: float, y: np.ndarray, schedule: Schedule, mode: str
) -> tuple[np.ndarray, bool]:
    c3, c2, p, n = y
    s = 1.0 - t
    lambda1, lambda2, lambda3, clamped = schedule.probabilities(t, max(c3, 0.0), max(c2, 0.0))
    dc3 = -lambda3 - 3.0 * c3 / s
    dc2 = -2.0 * c2 / s + (lambda2 + lambda3) * 3.0 * c3 / s
    if mode == "paper-ode":
        return np.array([dc3, dc2, 0.0, 0.0]), clamped
    # The selected maximal clause itself becomes a 2-clause.
    dc2 += lambda3
    # Queued units also leave when another step assigns their variable.
    dp = _queue_drift(p, (lambda2 + lambda3) * 2.0 * c2 / s, lambda1) - p / s
    dn = _queue_drift(n, lambda1 * (2.0 * c2 + 6.0 * c3) / s, lambda2) - n / s
    return np.array([dc3, dc2, dp, dn]), clamped


def ode_integrate(
    r: float,
    schedule: Schedule,
    mode: str = "paper-ode",
    step: float = ODE_STEP,
    t_max: float = ODE_T_MAX,
) -> TrajectoryCurve:
    """Integrate the trajectory with classical RK4 until c3 reaches zero."""
    _check_rate(r)
    mode = ODE_MODE_ALIASES.get(mode, mode)
    if step <= 0 or step > ODE_MAX_STEP:
        msg = f"Step must lie in (0, {ODE_MAX_STEP}], got {step}"
        raise OverlapEcInvalidParametersError(msg)
    if mode not in ODE_MODES:
        msg = f"Unknown ODE mode '{mode}', expected one of {ODE_MODES}"
        raise OverlapEcInvalidParametersError(msg)

    t = 0.0
    y = np.array([r, 0.0, 0.0, 0.0])
    samples = [TrajectorySample(t, *y.tolist())]
    any_clamped = False
    while t + step <= t_max:
        k1, f1 = _derivative(t, y, schedule, mode)
        k2, f2 = _derivative(t + step / 2, y + step / 2 * k1, schedule, mode)
        k3, f3 = _derivative(t + step / 2, y + step / 2 * k2, schedule, mode)
        k4, f4 = _derivative(t + step, y + step * k3, schedule, mode)
        any_clamped = any_clamped or f1 or f2 or f3 or f4
        y_next = y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        y_next[2:] = np.maximum(y_next[2:], 0.0)
        if y_next[0] <= 0:
            fraction = y[0] / (y[0] - y_next[0])
            crossing = y + fraction * (y_next - y)
            crossing[0] = 0.0
            samples.append(TrajectorySample(t + fraction * step, *crossing.tolist()))
            break
        t += step
        y = y_next
        samples.append(TrajectorySample(t, *y.tolist()))
    else:
        _LOGGER.debug("c3 stayed positive up to t=%s for r=%s", t, r)

    if any_clamped:
        _LOGGER.warning("Schedule %s was clamped during integration", schedule.schedule_id)
    return TrajectoryCurve(
        samples=tuple(samples), mode=mode, r=r, schedule_id=schedule.schedule_id
    )


def closed_form_curve(r: float, step: float = ODE_STEP) -> TrajectoryCurve:
    """Tabulate the closed forms on [0, t2]."""
    t2 = stopping_time_t2(r)
    t_grid = np.append(np.arange(0.0, t2, step), t2)
    c3, c2 = closed_forms(t_grid, r)
    c3[-1] = 0.0
    samples = tuple(
        TrajectorySample(t, a, b, 0.0, 0.0)
        for t, a, b in zip(t_grid.tolist(), c3.tolist(), c2.tolist(), strict=True)
    )
    return TrajectoryCurve(samples=samples, mode="closed-form", r=r, schedule_id="default")


def sup_norm_distance(
    curve: TrajectoryCurve,
    reference: TrajectoryCurve,
    column: str,
    t_hi: float | None = None,
) -> float:
    """Return max |curve - reference| of a column over the common time range."""
    t = curve.column("t")
    end = min(t[-1], reference.column("t")[-1])
    if t_hi is not None:
        end = min(end, t_hi)
    t = t[t <= end]
    if t.size == 0:
        return 0.0
    return float(np.max(np.abs(curve.interpolate(column, t) - reference.interpolate(column, t))))
