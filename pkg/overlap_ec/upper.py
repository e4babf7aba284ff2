"""
First-moment machinery for the q-overlap k-Exact-Cover problem.

The stationary point of the exponent t(alpha) solves F_{k,q}(alpha) = r, where

    F_{k,q}(x) = ln(x / (q - x)) / D(x),
    D(x) = (k - 2) / x + (q - 2x) / ((k - 1) ((1 - q) / 2)^2 + x (q - x)),

and D is also the derivative of ln P_k along the profile
(alpha, (1 - q)/2, (1 - q)/2, q - alpha). F increases from 0 at q/2 to
infinity at x_max = min(q, root), so the inverse G_{k,q} exists for every r > 0.

All inversion happens in the logit coordinate u = ln(x / (q - x)). For small q
and large r the solution sits within float spacing of q, where x itself can no
longer be resolved but u can.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from .const import (
    BISECTION_MAX_ITER,
    DOMAIN_TOLERANCE,
    EXACT_ARITHMETIC_MAX_VARIABLES,
    R_UP_SCAN_MAX,
    R_UP_SCAN_POINTS,
    R_UP_TOLERANCE,
    ROOT_RESIDUAL_TOLERANCE,
)
from .core import (
    MIN_K,
    OverlapEcDomainError,
    OverlapEcInvalidParametersError,
    OverlapEcNumericalError,
)
from .data import BoundResult, StationaryDomain

_LOGGER = logging.getLogger(__name__)

# Halvings of the distance to a finite logit endpoint before giving up.
MAX_BRACKET_STEPS = 64


def _check_kq(k: int, q: float) -> None:
    if int(k) != k or k < MIN_K:
        msg = f"Clause width must be an integer >= {MIN_K}, got k={k}"
        raise OverlapEcInvalidParametersError(msg)
    if not 0.0 < q < 1.0:
        msg = f"Overlap must lie in (0, 1), got q={q}"
        raise OverlapEcInvalidParametersError(msg)


def q_k_value(k: int) -> float:
    """Return q_k = s / (2 + s) with s = sqrt((k - 1)(k - 2))."""
    s = math.sqrt((k - 1) * (k - 2))
    return s / (2.0 + s)


def root_residual(k: int, q: float, x: float) -> float:
    """Return k x^2 - (k - 1) q x - (k - 1)(k - 2)(1 - q)^2 / 4, zero at the root."""
    return k * x * x - (k - 1) * q * x - (k - 1) * (k - 2) * (1.0 - q) ** 2 / 4.0


def stationary_domain(k: int, q: float) -> StationaryDomain:
    """Return q_k, the positive root where D vanishes, and x_max = min(q, root)."""
    _check_kq(k, q)
    discriminant = (k - 1) ** 2 * q * q + k * (k - 2) * (k - 1) * (1.0 - q) ** 2
    root = ((k - 1) * q + math.sqrt(discriminant)) / (2 * k)
    residual = root_residual(k, q, root)
    if abs(residual) > ROOT_RESIDUAL_TOLERANCE:
        msg = "Stationary root failed its residual check"
        raise OverlapEcNumericalError(msg, {"k": k, "q": q, "residual": residual})
    return StationaryDomain(
        k=k,
        q=q,
        q_k=q_k_value(k),
        root=root,
        x_max=min(q, root),
        residual=residual,
    )


def _denominator(k: int, q: float, x, gap):  # noqa: ANN001, ANN202
    """Return D at x, where gap = q - x is passed separately for precision."""
    beta_sq = (k - 1) * ((1.0 - q) / 2.0) ** 2
    return (k - 2) / x + (gap - x) / (beta_sq + x * gap)


def _split(q: float, u):  # noqa: ANN001, ANN202
    """Return (x, q - x) for logit u."""
    return q * special.expit(u), q * special.expit(-u)


def F_eval(k: int, q: float, x: float) -> float:  # noqa: N802
    """Return F_{k,q}(x) for x in (q/2, x_max)."""
    domain = stationary_domain(k, q)
    if not q / 2.0 < x < domain.x_max:
        msg = f"x={x} outside ({q / 2.0}, {domain.x_max}) for k={k}, q={q}"
        raise OverlapEcDomainError(msg)
    gap = q - x
    return math.log(x / gap) / _denominator(k, q, x, gap)


def F_logit(k: int, q: float, u):  # noqa: ANN001, ANN201, N802
    """Return F_{k,q} at x = q * expit(u); accepts scalars or arrays."""
    x, gap = _split(q, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        denominator = _denominator(k, q, x, gap)
        value = np.where(denominator > 0, u / np.where(denominator > 0, denominator, 1.0), np.inf)
    return value if np.ndim(value) else float(value)


def _initial_hi(k: int, q: float, r: float, u_max: float) -> float:
    """Return a logit upper bracket with F > r."""
    if math.isfinite(u_max):
        for step in range(1, MAX_BRACKET_STEPS):
            hi = u_max * (1.0 - 2.0**-step)
            if F_logit(k, q, hi) > r:
                return hi
    else:
        hi = 1.0
        for _ in range(MAX_BRACKET_STEPS):
            if F_logit(k, q, hi) > r:
                return hi
            hi *= 2.0
    msg = "Could not bracket the inverse of F"
    raise OverlapEcNumericalError(msg, {"k": k, "q": q, "r": r, "u_max": u_max})


def G_logit(  # noqa: N802
    k: int, q: float, r: float, tol: float = DOMAIN_TOLERANCE
) -> tuple[float, int, tuple[float, float]]:
    """
    Invert F in the logit coordinate.

    Returns (u, iterations, bracket) with |F_logit(u) - r| <= tol.
    """
    if r <= 0 or tol <= 0:
        msg = f"r and tol must be positive, got r={r}, tol={tol}"
        raise OverlapEcInvalidParametersError(msg)
    domain = stationary_domain(k, q)
    hi = _initial_hi(k, q, r, domain.logit_max)
    u, result = optimize.bisect(
        lambda v: F_logit(k, q, v) - r,
        0.0,
        hi,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=BISECTION_MAX_ITER,
        full_output=True,
        disp=False,
    )
    residual = F_logit(k, q, u) - r
    if not result.converged or abs(residual) > tol:
        msg = "Bisection for G did not reach the requested tolerance"
        raise OverlapEcNumericalError(
            msg,
            {
                "k": k,
                "q": q,
                "r": r,
                "iterations": result.iterations,
                "residual": residual,
                "bracket": (0.0, hi),
            },
        )
    _LOGGER.debug("G(%s) for k=%d q=%s: u=%s after %d steps", r, k, q, u, result.iterations)
    return float(u), result.iterations, (0.0, hi)


def G_inverse(k: int, q: float, r: float, tol: float = DOMAIN_TOLERANCE) -> float:  # noqa: N802
    """Return x in (q/2, x_max) with F_{k,q}(x) = r."""
    u, _, _ = G_logit(k, q, r, tol)
    return float(q * special.expit(u))


def _g_logit_array(k: int, q: float, r: np.ndarray, u_max: float) -> np.ndarray:
    """Vectorized logit inversion used by the r_up scan."""
    r = np.asarray(r, dtype=float)
    lo = np.zeros_like(r)
    if math.isfinite(u_max):
        step = np.ones_like(r)
        hi = u_max * (1.0 - 2.0**-step)
        for _ in range(MAX_BRACKET_STEPS):
            short = F_logit(k, q, hi) <= r
            if not short.any():
                break
            step[short] += 1
            hi = u_max * (1.0 - 2.0**-step)
    else:
        hi = np.ones_like(r)
        for _ in range(MAX_BRACKET_STEPS):
            short = F_logit(k, q, hi) <= r
            if not short.any():
                break
            hi[short] *= 2.0
    if np.any(F_logit(k, q, hi) <= r):
        msg = "Could not bracket the inverse of F on the scan grid"
        raise OverlapEcNumericalError(msg, {"k": k, "q": q, "u_max": u_max})
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        above = F_logit(k, q, mid) > r
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * np.maximum(1.0, hi)):
            break
    return 0.5 * (lo + hi)


def pk_value(k: int, alpha, beta, gamma, delta):  # noqa: ANN001, ANN201
    """Return P_k = k (k - 1) alpha^(k-2) (beta gamma + alpha delta / (k - 1))."""
    return k * (k - 1) * alpha ** (k - 2) * (beta * gamma + alpha * delta / (k - 1))


def _exponent(k: int, q: float, r, alpha, gap):  # noqa: ANN001, ANN202
    beta = (1.0 - q) / 2.0
    with np.errstate(divide="ignore"):
        log_pk = np.log(pk_value(k, alpha, beta, beta, gap))
    return (
        r * log_pk
        - special.xlogy(alpha, alpha)
        - special.xlogy(gap, gap)
        - (1.0 - q) * math.log(beta)
    )


def exponent_t(k: int, q: float, r: float, alpha: float) -> float:
    """Return t(alpha), the growth exponent of E[Z] at overlap profile alpha."""
    _check_kq(k, q)
    if not 0.0 <= alpha <= q:
        msg = f"alpha={alpha} outside [0, {q}]"
        raise OverlapEcDomainError(msg)
    return float(_exponent(k, q, r, alpha, q - alpha))


def exponent_t_logit(k: int, q: float, r, u):  # noqa: ANN001, ANN201
    """Return t at alpha = q * expit(u)."""
    alpha, gap = _split(q, u)
    value = _exponent(k, q, r, alpha, gap)
    return value if np.ndim(value) else float(value)


def exponent_t_derivative(k: int, q: float, r: float, alpha: float) -> float:
    """Return t'(alpha) = r D(alpha) - ln(alpha / (q - alpha))."""
    _check_kq(k, q)
    if not 0.0 < alpha < q:
        msg = f"alpha={alpha} outside (0, {q})"
        raise OverlapEcDomainError(msg)
    gap = q - alpha
    return r * _denominator(k, q, alpha, gap) - math.log(alpha / gap)


def _check_profile(a: int, b: int, c: int, d: int, n: int, k: int) -> None:
    if min(a, b, c, d) < 0 or a + b + c + d != n:
        msg = f"Profile ({a}, {b}, {c}, {d}) must be nonnegative and sum to n={n}"
        raise OverlapEcInvalidParametersError(msg)
    if n < k:
        msg = f"No {k}-subsets exist among n={n} variables"
        raise OverlapEcInvalidParametersError(msg)


def pstar_exact(a: int, b: int, c: int, d: int, n: int, k: int) -> Fraction:
    """Return the exact probability that a random clause is satisfied by both assignments."""
    _check_profile(a, b, c, d, n, k)
    favourable = math.comb(a, k - 2) * b * c + math.comb(a, k - 1) * d
    return Fraction(favourable, math.comb(n, k))


def log_comb(x, j: int):  # noqa: ANN001, ANN201
    """Return ln C(x, j) elementwise, -inf where x < j."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        value = special.gammaln(x + 1) - special.gammaln(j + 1) - special.gammaln(x - j + 1)
    return np.where(x >= j, value, -np.inf)


def pstar_log_array(a, b, c, d, n: int, k: int) -> np.ndarray:  # noqa: ANN001
    """Return ln P* elementwise over arrays of profiles."""
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    with np.errstate(divide="ignore"):
        first = log_comb(a, k - 2) + np.log(b) + np.log(c)
        second = log_comb(a, k - 1) + np.log(d)
    return np.logaddexp(first, second) - log_comb(n, k)


def pstar_log(a: int, b: int, c: int, d: int, n: int, k: int) -> float:
    """Return ln P*, exactly derived for n up to the exact-arithmetic limit."""
    _check_profile(a, b, c, d, n, k)
    if n <= EXACT_ARITHMETIC_MAX_VARIABLES:
        exact = pstar_exact(a, b, c, d, n, k)
        if exact == 0:
            return float("-inf")
        return math.log(exact.numerator) - math.log(exact.denominator)
    return float(pstar_log_array(a, b, c, d, n, k))


def _h(k: int, q: float, r: float) -> float:
    """Return t(G(r)), the exponent at its maximizer."""
    u, _, _ = G_logit(k, q, r)
    return exponent_t_logit(k, q, r, u)


def r_up_solve(
    k: int,
    q: float,
    tol: float = R_UP_TOLERANCE,
    r_max: float = R_UP_SCAN_MAX,
    points: int = R_UP_SCAN_POINTS,
) -> BoundResult:
    """
    Locate r_up(q, k), the last sign change of h(r) = t(G(r)).

    A grid scan over (0, r_max] finds the bracket; bisection refines it. When h
    stays positive over the whole scan the result is reported as undetermined.
    """
    _check_kq(k, q)
    domain = stationary_domain(k, q)
    grid = r_max * np.arange(1, points + 1) / points
    h_grid = exponent_t_logit(k, q, grid, _g_logit_array(k, q, grid, domain.logit_max))
    scan = tuple(zip(grid.tolist(), np.asarray(h_grid).tolist(), strict=True))

    positive = np.flatnonzero(h_grid > 0)
    if positive.size and positive[-1] == points - 1:
        _LOGGER.warning(
            "No sign change of t(G(r)) on (0, %s] for k=%d q=%s", r_max, k, q
        )
        return BoundResult(
            r_value=float("nan"),
            residual=float("nan"),
            bracket=(r_max, float("inf")),
            iterations=0,
            status="undetermined",
            scan=scan,
        )

    if positive.size:
        lo, hi = float(grid[positive[-1]]), float(grid[positive[-1] + 1])
    else:
        lo, hi = float(grid[0]) * 1e-6, float(grid[0])

    r_star, result = optimize.bisect(
        lambda r: _h(k, q, r),
        lo,
        hi,
        xtol=1e-13,
        maxiter=BISECTION_MAX_ITER,
        full_output=True,
        disp=False,
    )
    residual = _h(k, q, r_star)
    if not result.converged or abs(residual) > tol:
        msg = "r_up bisection did not reach the requested tolerance"
        raise OverlapEcNumericalError(
            msg,
            {
                "k": k,
                "q": q,
                "residual": residual,
                "iterations": result.iterations,
                "bracket": (lo, hi),
            },
        )
    _LOGGER.debug("r_up(q=%s, k=%d) = %s in [%s, %s]", q, k, r_star, lo, hi)
    return BoundResult(
        r_value=float(r_star),
        residual=float(residual),
        bracket=(lo, hi),
        iterations=result.iterations,
        alpha=G_inverse(k, q, r_star),
        scan=scan,
    )
