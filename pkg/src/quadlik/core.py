"""Core likelihood types: quadratic objectives, NaO semantics, local shifts.

Conventions used throughout the package:

* log likelihoods are maximized, never minimized;
* an "objective" is a callable mapping a parameter vector to an
  :class:`ObjectiveEval` (value, gradient, Hessian) or to :data:`NaO`;
* :data:`NaO` is the failure value, and it propagates: every operation
  that receives NaO returns NaO.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import cho_solve


class NaOType:
    """The distinguished "not an object" value.

    A single falsy sentinel (like ``None``), not a vector of NaNs, so
    identity and equality are exact.  Returned whenever Newton's method or a
    downstream operation is undefined: non-positive-definite curvature,
    evaluation outside the domain, failed fits.
    """

    _instance: "NaOType | None" = None

    def __new__(cls) -> "NaOType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NaO"

    def __bool__(self) -> bool:
        return False


NaO = NaOType()

MaybeParam = Union[np.ndarray, NaOType]
Objective = Callable[[MaybeParam], object]


def is_nao(x) -> bool:
    """True when ``x`` is the NaO sentinel."""
    return isinstance(x, NaOType)


# ---------------------------------------------------------------------------
# Positive definiteness: the single NaO decision procedure
# ---------------------------------------------------------------------------


def cholesky_pivots(m: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Cholesky factorization tracking the smallest pivot encountered.

    Returns ``(lower, min_pivot)`` where ``lower`` is the lower-triangular
    factor, or ``None`` when some pivot fails the floor
    ``p * eps * max|m|``.  This one test backs every positive-definiteness
    decision (and hence every NaO) in the package.
    """
    a = np.asarray(m, dtype=float)
    p = a.shape[0]
    floor = p * np.finfo(float).eps * float(np.max(np.abs(a)))
    lower = np.zeros((p, p))
    min_pivot = np.inf
    for j in range(p):
        s = float(a[j, j] - lower[j, :j] @ lower[j, :j])
        if np.isnan(s):
            return None, -np.inf
        min_pivot = min(min_pivot, s)
        if s <= floor:
            return None, min_pivot
        lower[j, j] = np.sqrt(s)
        if j + 1 < p:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower, min_pivot


def spd_factor(m: np.ndarray) -> np.ndarray | None:
    """Lower Cholesky factor of ``m``, or None when not positive definite."""
    return cholesky_pivots(m)[0]


def spd_solve(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(L L') x = b`` given the lower factor ``L``."""
    return cho_solve((lower, True), b)


def is_spd(m: np.ndarray) -> bool:
    """Positive definiteness by the pivot test."""
    return spd_factor(m) is not None


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Data of a quadratic objective ``theta -> u + z.theta - theta'k theta / 2``.

    ``k`` is stored exactly symmetric; construction rejects asymmetry beyond
    1e-12 relative and symmetrizes anything smaller.
    """

    u: float
    z: np.ndarray
    k: np.ndarray

    def __post_init__(self) -> None:
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        k = np.asarray(self.k, dtype=float)
        if k.shape != (z.size, z.size):
            raise ValueError(f"curvature shape {k.shape} does not match coefficient length {z.size}")
        asym = float(np.max(np.abs(k - k.T)))
        if asym > 1e-12 * max(float(np.max(np.abs(k))), np.finfo(float).tiny):
            raise ValueError(f"curvature matrix is not symmetric (max asymmetry {asym:g})")
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", (k + k.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.z.size

    def objective(self) -> Objective:
        """This form as an objective callable (NaO-propagating)."""
        return lambda theta: quadratic_loglik(self, theta)


@dataclass(frozen=True, eq=False)
class ObjectiveEval:
    """Value, gradient, and Hessian of an objective at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self) -> None:
        g = np.atleast_1d(np.asarray(self.gradient, dtype=float))
        h = np.asarray(self.hessian, dtype=float)
        if h.shape != (g.size, g.size):
            raise ValueError(f"hessian shape {h.shape} does not match gradient length {g.size}")
        asym = float(np.max(np.abs(h - h.T)))
        if asym > 1e-10 * max(float(np.max(np.abs(h))), np.finfo(float).tiny):
            raise ValueError(f"hessian is not symmetric (max asymmetry {asym:g})")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", (h + h.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.gradient.size

    def all_finite(self) -> bool:
        return bool(
            np.isfinite(self.value)
            and np.all(np.isfinite(self.gradient))
            and np.all(np.isfinite(self.hessian))
        )


@dataclass(frozen=True, eq=False)
class OpenBox:
    """Axis-aligned open box, the parameter domain W (bounds may be infinite)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not np.all(lo < hi):
            raise ValueError("open box requires lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, theta) -> bool:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape != self.lower.shape or not np.all(np.isfinite(th)):
            return False
        return bool(np.all(self.lower < th) and np.all(th < self.upper))

    @classmethod
    def unbounded(cls, dim: int) -> "OpenBox":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))


class LikModel:
    """Evaluation contract for a statistical model.

    Subclasses set ``dim_param`` and ``domain`` and provide a deterministic
    ``eval(data, theta) -> ObjectiveEval`` (or NaO where the likelihood
    cannot be evaluated), a ``simulate(theta, rng) -> data`` draw, and a
    ``start(data)`` heuristic used to initialize Newton's method.
    """

    dim_param: int
    domain: OpenBox

    def eval(self, data, theta: np.ndarray):
        raise NotImplementedError

    def simulate(self, theta: np.ndarray, rng: np.random.Generator):
        raise NotImplementedError

    def start(self, data) -> np.ndarray:
        return np.zeros(self.dim_param)

    def objective(self, data) -> Objective:
        """Objective ``theta -> ObjectiveEval`` for fixed data.

        Evaluations outside the domain, NaO-valued evaluations, and
        non-finite evaluations all come back as NaO.
        """

        def q(theta):
            if is_nao(theta):
                return NaO
            th = np.atleast_1d(np.asarray(theta, dtype=float))
            if not self.domain.contains(th):
                return NaO
            ev = self.eval(data, th)
            if is_nao(ev) or not ev.all_finite():
                return NaO
            return ev

        return q


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def quadratic_loglik(q: QuadraticForm, theta: MaybeParam):
    """Evaluate a quadratic objective.

    value ``u + z.theta - theta'k theta / 2``, gradient ``z - k theta``,
    Hessian ``-k``.  NaO in, NaO out.
    """
    if is_nao(theta):
        return NaO
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.shape != q.z.shape:
        raise ValueError(f"parameter length {th.size} does not match dimension {q.dim}")
    kth = q.k @ th
    value = q.u + float(q.z @ th) - 0.5 * float(th @ kth)
    return ObjectiveEval(value, q.z - kth, -q.k)


def quadratic_mle(q: QuadraticForm) -> MaybeParam:
    """Maximizer ``k^{-1} z`` when ``k`` is positive definite, else NaO."""
    lower = spd_factor(q.k)
    if lower is None:
        return NaO
    return spd_solve(lower, q.z)


class ShiftedObjective:
    """Recentered log-likelihood ratio ``delta -> l(psi + delta/tau) - l(psi)``.

    The value at 0 is exactly 0.0 because ``l(psi)`` is cached once and
    subtracted; gradients and Hessians carry the ``1/tau`` and ``1/tau**2``
    chain-rule factors.  Evaluations landing outside the model domain give
    NaO.
    """

    def __init__(self, model: LikModel, data, psi, tau: float = 1.0, tau_sq: float | None = None):
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        if not model.domain.contains(psi):
            raise ValueError("shift center psi lies outside the model domain")
        if not tau > 0:
            raise ValueError("tau must be positive")
        self.model = model
        self.data = data
        self.psi = psi
        self.tau = float(tau)
        # callers with an exact squared rate (tau = sqrt(n)) can pass tau_sq = n
        # so the Hessian rescaling is free of the sqrt-then-square rounding
        self.tau_sq = float(tau_sq) if tau_sq is not None else self.tau * self.tau
        self._objective = model.objective(data)
        base = self._objective(psi)
        if is_nao(base):
            raise ValueError("objective is not finite at psi")
        self.base_value = base.value

    def __call__(self, delta):
        if is_nao(delta):
            return NaO
        d = np.atleast_1d(np.asarray(delta, dtype=float))
        ev = self._objective(self.psi + d / self.tau)
        if is_nao(ev):
            return NaO
        return ObjectiveEval(
            ev.value - self.base_value,
            ev.gradient / self.tau,
            ev.hessian / self.tau_sq,
        )


def local_shift(
    model: LikModel, data, psi, tau: float = 1.0, tau_sq: float | None = None
) -> ShiftedObjective:
    """Shifted objective ``q(delta) = l(psi + delta/tau) - l(psi)`` with q(0) = 0."""
    return ShiftedObjective(model, data, psi, tau, tau_sq)
