"""Observed-information inference: Wald pivots, chi-square regions, bounds.

The variance approximation everywhere is observed information, the negative
Hessian of the log likelihood at the estimate.  Chi-square quantiles are
computed in-house by inverting the regularized incomplete gamma function so
their accuracy can be pinned against an independent quadrature oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LikModel, MaybeParam, NaO, is_nao, spd_factor
from .newton import NewtonTrace, safeguarded_maximize

# ---------------------------------------------------------------------------
# Regularized incomplete gamma and the chi-square upper quantile
# ---------------------------------------------------------------------------

_MAX_SERIES_ITER = 600
_EPS = 1e-16


def _gamma_p_series(a: float, x: float) -> float:
    # lower incomplete gamma by power series, for x < a + 1
    total = term = 1.0 / a
    ap = a
    for _ in range(_MAX_SERIES_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # upper incomplete gamma by modified Lentz continued fraction, x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_SERIES_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) for a > 0, x >= 0."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chisq_upper_tail(p: int, x: float) -> float:
    """P(chi-square with p degrees of freedom >= x)."""
    return regularized_gamma_q(p / 2.0, x / 2.0)


def _chisq_log_pdf(p: int, x: float) -> float:
    half = p / 2.0
    return (half - 1.0) * math.log(x) - x / 2.0 - half * math.log(2.0) - math.lgamma(half)


# Acklam's rational approximation to the standard normal quantile; only used
# to seed the Newton refinement, so its ~1e-9 accuracy is more than enough.
_ACKLAM_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
             1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACKLAM_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
             6.680131188771972e01, -1.328068155288572e01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
             -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
             3.754408661907416e00)


def _normal_quantile(prob: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    plow, phigh = 0.02425, 1.0 - 0.02425
    if prob < plow:
        q = math.sqrt(-2.0 * math.log(prob))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if prob > phigh:
        q = math.sqrt(-2.0 * math.log(1.0 - prob))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = prob - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def chisq_upper_quantile(p: int, alpha: float) -> float:
    """The point kappa with P(chi-square_p >= kappa) = alpha.

    Wilson-Hilferty initial guess, Newton refinement on the upper tail with
    the analytic density, and a maintained bracket with bisection fallback.
    """
    p = int(p)
    if p < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    z = _normal_quantile(1.0 - alpha)
    t = 1.0 - 2.0 / (9.0 * p) + z * math.sqrt(2.0 / (9.0 * p))
    x = p * t**3 if t > 0 else p * 1e-3

    def g(v: float) -> float:
        return chisq_upper_tail(p, v) - alpha

    lo, hi = x, x
    while g(lo) < 0.0:
        lo /= 2.0
        if lo < 1e-300:
            break
    while g(hi) > 0.0:
        hi = max(hi * 2.0, 1e-8)
    # invariant: g(lo) >= 0 >= g(hi)
    x = min(max(x, lo), hi)
    for _ in range(200):
        gx = g(x)
        if gx >= 0.0:
            lo = x
        else:
            hi = x
        if abs(gx) < 1e-13:
            break
        step = gx / math.exp(_chisq_log_pdf(p, x))
        nxt = x + step
        if not lo < nxt < hi:
            nxt = (lo + hi) / 2.0
        if abs(nxt - x) <= 1e-14 * max(1.0, x):
            x = nxt
            break
        x = nxt
    return x


# ---------------------------------------------------------------------------
# Fits, pivots, and regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MleResult:
    """A fit: estimate, observed information at it, Newton trace.

    ``theta_hat`` is NaO (and ``observed_info`` None) when the safeguarded
    ascent did not meet the gradient criterion.
    """

    theta_hat: MaybeParam
    observed_info: np.ndarray | None
    trace: NewtonTrace

    @property
    def converged(self) -> bool:
        return self.trace.converged

    @property
    def dim(self) -> int:
        if is_nao(self.theta_hat):
            return 0
        return self.theta_hat.size


def fit_mle(
    model: LikModel,
    data,
    tol: float | None = None,
    max_steps: int = 100,
    start: np.ndarray | None = None,
) -> MleResult:
    """Maximize the model's log likelihood by safeguarded Newton.

    Starts from ``model.start(data)`` unless an explicit start is given.
    A run that does not satisfy the gradient criterion yields an NaO result
    (the partial trace is retained).
    """
    objective = model.objective(data)
    x0 = model.start(data) if start is None else np.asarray(start, dtype=float)
    theta, trace = safeguarded_maximize(objective, x0, tol=tol, max_steps=max_steps)
    if not trace.converged:
        return MleResult(NaO, None, trace)
    ev = objective(theta)
    if is_nao(ev):
        return MleResult(NaO, None, trace)
    return MleResult(theta, -ev.hessian, trace)


def symmetric_sqrt(m) -> MaybeParam:
    """Symmetric square root of a positive definite matrix, else NaO.

    Positive definiteness is decided by the pivot test; the root itself
    comes from an eigendecomposition and is symmetrized exactly.
    """
    if is_nao(m):
        return NaO
    a = np.asarray(m, dtype=float)
    if spd_factor(a) is None:
        return NaO
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    root = (v * np.sqrt(np.maximum(w, 0.0))) @ v.T
    return (root + root.T) / 2.0


def wald_pivot(theta_hat, theta, h) -> MaybeParam:
    """Quadratic form ``(theta_hat - theta)' h (theta_hat - theta)``."""
    if is_nao(theta_hat) or is_nao(theta) or is_nao(h):
        return NaO
    d = np.atleast_1d(np.asarray(theta_hat, dtype=float)) - np.atleast_1d(
        np.asarray(theta, dtype=float)
    )
    if d.size != np.asarray(h).shape[0]:
        raise ValueError("parameter length does not match the matrix")
    return float(d @ np.asarray(h, dtype=float) @ d)


@dataclass(frozen=True, eq=False)
class ConfidenceRegion:
    """Ellipsoid ``(theta - center)' shape (theta - center) < radius_sq``."""

    center: np.ndarray
    shape: np.ndarray
    radius_sq: float
    level: float

    def contains(self, theta) -> bool:
        return wald_pivot(self.center, theta, self.shape) < self.radius_sq

    def to_record(self, prefix: str = "region") -> dict:
        return {
            f"{prefix}_center": self.center.tolist(),
            f"{prefix}_shape": self.shape.ravel().tolist(),
            f"{prefix}_radius_sq": self.radius_sq,
            f"{prefix}_level": self.level,
        }


def confidence_region(fit: MleResult, alpha: float):
    """Wald region from observed information; NaO when the fit or shape fails.

    Center is the estimate, shape the observed information (which must pass
    the positive-definite pivot test), and the squared radius the chi-square
    upper-alpha quantile in the parameter dimension.
    """
    if is_nao(fit.theta_hat) or fit.observed_info is None:
        return NaO
    if spd_factor(fit.observed_info) is None:
        return NaO
    p = fit.theta_hat.size
    return ConfidenceRegion(
        center=fit.theta_hat,
        shape=fit.observed_info,
        radius_sq=chisq_upper_quantile(p, alpha),
        level=1.0 - alpha,
    )


def standardized_estimator(fit: MleResult, psi) -> MaybeParam:
    """``sqrt(observed information) (theta_hat - psi)``, NaO-propagating.

    Under an exactly quadratic likelihood with curvature invariant in law
    this is standard normal in every coordinate.
    """
    if is_nao(fit.theta_hat) or fit.observed_info is None or is_nao(psi):
        return NaO
    root = symmetric_sqrt(fit.observed_info)
    if is_nao(root):
        return NaO
    return root @ (fit.theta_hat - np.atleast_1d(np.asarray(psi, dtype=float)))


def restricted_coverage_bound(alpha: float, p_escape: float) -> float:
    """Lower bound on joint coverage-and-containment for a region restricted to W.

    When the estimator pair escapes W with probability at most ``p_escape``,
    the Wald region's asymptotic coverage within W is at least
    ``1 - alpha - p_escape`` (clamped at zero).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if not 0.0 <= p_escape <= 1.0:
        raise ValueError("p_escape must lie in [0, 1]")
    return max(0.0, 1.0 - alpha - p_escape)
