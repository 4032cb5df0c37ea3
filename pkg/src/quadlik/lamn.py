"""Exactly quadratic likelihood samplers and their statistical checks.

A model here is a law for the pair (Z, K): curvature K drawn from a law
that does not depend on the parameter, then Z | K normal with mean K theta
and variance K.  The checks verify, on any LikModel, the signatures of that
structure: curvature invariant in law across parameters, standardized score
standard normal, and the shifted likelihood ratio integrating to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import LikModel, NaO, is_nao, spd_factor
from .inference import symmetric_sqrt
from .parallel import parallel_map
from .rng import derive_rng

# ---------------------------------------------------------------------------
# Curvature laws and draws
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstantCurvature:
    """Point-mass curvature law: K fixed, symmetric positive definite."""

    k: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("curvature must be a square matrix")
        if spd_factor(k) is None:
            raise ValueError("constant curvature must be positive definite")
        object.__setattr__(self, "k", (k + k.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.k.shape[0]


@dataclass(frozen=True, eq=False)
class WishartCurvature:
    """Wishart curvature law with real degrees of freedom and SPD scale.

    dof > dim - 1 keeps draws almost surely positive definite.
    """

    dof: float
    scale: np.ndarray

    def __post_init__(self) -> None:
        scale = np.asarray(self.scale, dtype=float)
        if scale.ndim != 2 or scale.shape[0] != scale.shape[1]:
            raise ValueError("scale must be a square matrix")
        if spd_factor(scale) is None:
            raise ValueError("scale must be positive definite")
        if not float(self.dof) > scale.shape[0] - 1:
            raise ValueError("dof must exceed dim - 1")
        object.__setattr__(self, "dof", float(self.dof))
        object.__setattr__(self, "scale", (scale + scale.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.scale.shape[0]


@dataclass(frozen=True, eq=False)
class LamnSpec:
    """Dimension plus curvature law; the full data law given any parameter."""

    dim: int
    curvature: ConstantCurvature | WishartCurvature

    def __post_init__(self) -> None:
        if int(self.dim) != self.curvature.dim:
            raise ValueError("spec dimension does not match the curvature law")
        object.__setattr__(self, "dim", int(self.dim))


@dataclass(frozen=True, eq=False)
class LamnDraw:
    """One realized pair (z, k) with k positive definite."""

    z: np.ndarray
    k: np.ndarray

    def __post_init__(self) -> None:
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        k = np.asarray(self.k, dtype=float)
        if k.shape != (z.size, z.size):
            raise ValueError("curvature shape does not match z")
        if spd_factor(k) is None:
            raise ValueError("draw curvature must be positive definite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", (k + k.T) / 2.0)


def _bartlett_batch(law: WishartCurvature, size: int, rng: np.random.Generator) -> np.ndarray:
    """Wishart draws via the Bartlett construction, shape (size, p, p)."""
    p = law.dim
    lower = spd_factor(law.scale)
    c = np.zeros((size, p, p))
    for i in range(p):
        c[:, i, i] = np.sqrt(rng.chisquare(law.dof - i, size=size))
    if p > 1:
        tril = np.tril_indices(p, k=-1)
        c[:, tril[0], tril[1]] = rng.standard_normal((size, len(tril[0])))
    f = np.einsum("ij,njk->nik", lower, c)
    return np.einsum("nik,njk->nij", f, f)


def sample_lamn_batch(
    spec: LamnSpec, theta, size: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized draws: returns (z, k) of shapes (size, p) and (size, p, p).

    K comes from the curvature law (independent of theta), then Z given K is
    normal with mean K theta and variance K, via a Cholesky factor of K.
    A numerically singular Wishart draw is retried once, then raises.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.size != spec.dim:
        raise ValueError("theta length does not match spec dimension")
    if isinstance(spec.curvature, ConstantCurvature):
        k = np.broadcast_to(spec.curvature.k, (size, spec.dim, spec.dim)).copy()
        factors = np.broadcast_to(spd_factor(spec.curvature.k), k.shape)
    else:
        k = _bartlett_batch(spec.curvature, size, rng)
        try:
            factors = np.linalg.cholesky(k)
        except np.linalg.LinAlgError:
            k = _bartlett_batch(spec.curvature, size, rng)
            try:
                factors = np.linalg.cholesky(k)
            except np.linalg.LinAlgError:
                raise RuntimeError("Wishart draw numerically singular twice in a row")
    xi = rng.standard_normal((size, spec.dim))
    z = np.einsum("nij,j->ni", k, th) + np.einsum("nij,nj->ni", factors, xi)
    return z, k


def sample_lamn(spec: LamnSpec, theta, rng: np.random.Generator) -> LamnDraw:
    """One draw of (Z, K) at the given parameter."""
    z, k = sample_lamn_batch(spec, theta, 1, rng)
    return LamnDraw(z[0], k[0])


def lamn_loglik(draw: LamnDraw, delta):
    """Shifted log likelihood ``delta . z - delta' k delta / 2``; zero at zero."""
    if is_nao(delta):
        return NaO
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    if d.size != draw.z.size:
        raise ValueError("delta length does not match the draw")
    return float(d @ draw.z) - 0.5 * float(d @ draw.k @ d)


# ---------------------------------------------------------------------------
# Statistical checks
# ---------------------------------------------------------------------------


def contiguity_estimate(
    spec: LamnSpec, delta, nsim: int, seed: int, stream: int = 0
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of exp(q(delta)) under theta = 0.

    For a genuine likelihood the mean is exactly one; the estimate lands
    within a few standard errors of it.  ``stream`` separates draws for
    repeated calls under one seed.
    """
    if nsim < 2:
        raise ValueError("nsim must be at least 2")
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    rng = derive_rng(seed, "contiguity", stream)
    z, k = sample_lamn_batch(spec, np.zeros(spec.dim), nsim, rng)
    q = z @ d - 0.5 * np.einsum("i,nij,j->n", d, k, d)
    w = np.exp(q)
    mean = float(np.mean(w))
    se = float(np.std(w, ddof=1) / np.sqrt(nsim))
    return mean, se


def model_contiguity_estimate(
    model: LikModel, psi, delta, nsim: int, seed: int, workers: int = 1
) -> tuple[float, float, int]:
    """Mean and standard error of exp(l(psi + delta) - l(psi)) over fresh data.

    Data are simulated at psi; replicates whose evaluation is NaO are
    dropped and counted.  Returns (mean, se, n_nao).
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    d = np.atleast_1d(np.asarray(delta, dtype=float))

    def one(i: int):
        rng = derive_rng(seed, "model-contiguity", i)
        data = model.simulate(psi, rng)
        objective = model.objective(data)
        base, shifted = objective(psi), objective(psi + d)
        if is_nao(base) or is_nao(shifted):
            return None
        return float(np.exp(shifted.value - base.value))

    values = [v for v in parallel_map(one, nsim, workers) if v is not None]
    n_nao = nsim - len(values)
    if len(values) < 2:
        raise ValueError("too few finite replicates for a contiguity estimate")
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size)), n_nao


@dataclass(frozen=True, eq=False)
class KsTestReport:
    """Bonferroni-adjusted minimum p-value over scalar summaries."""

    statistic: float
    p_value: float
    per_summary: dict
    n_summaries: int
    n_nao: int

    def to_record(self, prefix: str) -> dict:
        rec = {
            f"{prefix}_statistic": self.statistic,
            f"{prefix}_p_value": self.p_value,
            f"{prefix}_n_summaries": self.n_summaries,
            f"{prefix}_n_nao": self.n_nao,
        }
        for name, p in self.per_summary.items():
            rec[f"{prefix}_p_{name}"] = p
        return rec


def _curvature_summaries(model: LikModel, theta, nsim: int, seed: int, stream: str, workers: int):
    """Scalar summaries of observed information at the truth, per replicate."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    p = th.size

    def one(i: int):
        rng = derive_rng(seed, stream, i)
        data = model.simulate(th, rng)
        ev = model.objective(data)(th)
        if is_nao(ev):
            return None
        info = -ev.hessian
        sign, logdet = np.linalg.slogdet(info)
        return info, (logdet if sign > 0 else None)

    results = parallel_map(one, nsim, workers)
    n_nao = sum(1 for r in results if r is None)
    entries: dict[str, list[float]] = {}
    for i in range(p):
        for j in range(i, p):
            entries[f"info_{i}{j}"] = []
    entries["logdet"] = []
    for r in results:
        if r is None:
            continue
        info, logdet = r
        for i in range(p):
            for j in range(i, p):
                entries[f"info_{i}{j}"].append(float(info[i, j]))
        if logdet is not None:
            entries["logdet"].append(float(logdet))
    return entries, n_nao


def hessian_invariance_test(
    model: LikModel, theta_a, theta_b, nsim: int, seed: int, workers: int = 1
) -> KsTestReport:
    """Two-sample check that observed information has the same law at two truths.

    Simulates at each parameter, summarizes the information matrix (each
    entry and the log determinant), and runs a two-sample Kolmogorov-Smirnov
    test per summary.  Small adjusted p-values mean the curvature law
    depends on the parameter, which rules out the mixed-normal structure.
    """
    sums_a, nao_a = _curvature_summaries(model, theta_a, nsim, seed, "invariance-a", workers)
    sums_b, nao_b = _curvature_summaries(model, theta_b, nsim, seed, "invariance-b", workers)
    per_summary: dict[str, float] = {}
    best_stat = 0.0
    for name in sums_a:
        a, b = np.asarray(sums_a[name]), np.asarray(sums_b[name])
        if a.size < 2 or b.size < 2:
            continue
        if np.ptp(a) == 0.0 and np.ptp(b) == 0.0 and a[0] == b[0]:
            stat, pval = 0.0, 1.0  # identical point masses; KS is degenerate here
        else:
            res = stats.ks_2samp(a, b)
            stat, pval = float(res.statistic), float(res.pvalue)
        per_summary[name] = pval
        if stat > best_stat:
            best_stat = stat
    if not per_summary:
        raise ValueError("no usable summaries (all replicates NaO)")
    m = len(per_summary)
    adj = min(1.0, m * min(per_summary.values()))
    return KsTestReport(best_stat, adj, per_summary, m, nao_a + nao_b)


def score_normality_test(
    model: LikModel, theta, nsim: int, seed: int, workers: int = 1
) -> KsTestReport:
    """Per-coordinate normality of the standardized score at the truth.

    Each replicate computes ``(observed information)^{-1/2} gradient``;
    coordinates are tested against the standard normal by Kolmogorov-
    Smirnov with a Bonferroni-adjusted minimum p-value.  Replicates where
    the information is not positive definite are dropped and counted.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    p = th.size

    def one(i: int):
        rng = derive_rng(seed, "score-normality", i)
        data = model.simulate(th, rng)
        ev = model.objective(data)(th)
        if is_nao(ev):
            return None
        root = symmetric_sqrt(-ev.hessian)
        if is_nao(root):
            return None
        return np.linalg.solve(root, ev.gradient)

    results = parallel_map(one, nsim, workers)
    rows = [r for r in results if r is not None]
    n_nao = len(results) - len(rows)
    if len(rows) < 2:
        raise ValueError("too few finite replicates for a normality test")
    t = np.asarray(rows)
    per_summary: dict[str, float] = {}
    best_stat = 0.0
    for j in range(p):
        res = stats.kstest(t[:, j], "norm")
        per_summary[f"coord_{j}"] = float(res.pvalue)
        best_stat = max(best_stat, float(res.statistic))
    adj = min(1.0, p * min(per_summary.values()))
    return KsTestReport(best_stat, adj, per_summary, p, n_nao)
