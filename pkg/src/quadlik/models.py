"""Concrete likelihood models.

Four families: normal location with known curvature (exactly quadratic,
constant Hessian), the Wishart-curvature quadratic sampler wrapped as a
model, the AR(1) autoregression with known innovation variance (exactly
quadratic but with parameter-dependent curvature law), and the pedigree
variance-components trait model.  Two iid helper models (normal location
and exponential rate) support sample-size ladder studies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import LikModel, NaO, ObjectiveEval, OpenBox, spd_factor
from .lamn import LamnDraw, LamnSpec, sample_lamn
from .rng import derive_rng

# ---------------------------------------------------------------------------
# Normal location: exactly quadratic, constant curvature
# ---------------------------------------------------------------------------


class LanNormalLocation(LikModel):
    """Data Z normal with mean K theta and variance K, K known and constant.

    The log likelihood ``z.theta - theta' K theta / 2`` is exactly quadratic
    with constant Hessian, so every asymptotic statement holds exactly.
    """

    def __init__(self, k: np.ndarray):
        k = np.asarray(k, dtype=float)
        lower = spd_factor(k)
        if lower is None:
            raise ValueError("curvature must be symmetric positive definite")
        self.k = (k + k.T) / 2.0
        self._factor = lower
        self.dim_param = k.shape[0]
        self.domain = OpenBox.unbounded(self.dim_param)

    def eval(self, data, theta: np.ndarray) -> ObjectiveEval:
        z = np.asarray(data, dtype=float)
        kth = self.k @ theta
        return ObjectiveEval(float(z @ theta) - 0.5 * float(theta @ kth), z - kth, -self.k)

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        return self.k @ th + self._factor @ rng.standard_normal(self.dim_param)


def lan_normal_location(k: np.ndarray) -> LanNormalLocation:
    """Normal location model with known positive definite curvature."""
    return LanNormalLocation(k)


class WishartLamnModel(LikModel):
    """Quadratic-likelihood model whose data are realized (z, k) pairs.

    The curvature law does not depend on the parameter, so observed
    information is invariant in law and the standardized estimator is
    exactly standard normal.
    """

    def __init__(self, spec: LamnSpec):
        self.spec = spec
        self.dim_param = spec.dim
        self.domain = OpenBox.unbounded(spec.dim)

    def eval(self, data: LamnDraw, theta: np.ndarray) -> ObjectiveEval:
        kth = data.k @ theta
        return ObjectiveEval(float(data.z @ theta) - 0.5 * float(theta @ kth), data.z - kth, -data.k)

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> LamnDraw:
        return sample_lamn(self.spec, theta, rng)


def wishart_lamn_model(spec: LamnSpec) -> WishartLamnModel:
    """Wrap a quadratic-likelihood sampler spec as a fittable model."""
    return WishartLamnModel(spec)


# ---------------------------------------------------------------------------
# AR(1): exactly quadratic, curvature law depends on the parameter
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Ar1Data:
    """An observed path X_0 ... X_n."""

    x: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.size < 2:
            raise ValueError("a path needs at least X_0 and X_1")
        if not np.all(np.isfinite(x)):
            raise ValueError("path entries must be finite")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size - 1


def ar1_simulate(theta: float, n: int, x0: float, rng: np.random.Generator) -> Ar1Data:
    """Simulate X_i = theta X_{i-1} + N(0,1) noise from the fixed start x0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.empty(n + 1)
    x[0] = float(x0)
    noise = rng.standard_normal(n)
    for i in range(1, n + 1):
        x[i] = theta * x[i - 1] + noise[i - 1]
    return Ar1Data(x)


def ar1_simulate_paths(
    theta: float, n: int, x0: float, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized paths, shape (n_paths, n + 1), all starting at x0."""
    x = np.empty((n_paths, n + 1))
    x[:, 0] = float(x0)
    noise = rng.standard_normal((n_paths, n))
    for i in range(1, n + 1):
        x[:, i] = theta * x[:, i - 1] + noise[:, i - 1]
    return x


def _theta_scalar(theta) -> float:
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.size != 1:
        raise ValueError("AR(1) has a single parameter")
    return float(th[0])


def ar1_loglik(data: Ar1Data, theta) -> ObjectiveEval:
    """Gaussian log likelihood of the autoregression (variance known, one).

    value ``-sum (X_i - theta X_{i-1})^2 / 2``; the Hessian
    ``-sum X_{i-1}^2`` does not involve theta at all.
    """
    th = _theta_scalar(theta)
    lag = data.x[:-1]
    resid = data.x[1:] - th * lag
    value = -0.5 * float(resid @ resid)
    grad = float(lag @ resid)
    hess = -float(lag @ lag)
    return ObjectiveEval(value, np.array([grad]), np.array([[hess]]))


def ar1_expected_info(theta: float, n: int, x0: float) -> float:
    """Expected observed information E(sum X_{i-1}^2 | X_0 = x0).

    Computed by the conditional second-moment recursion
    ``e_j = theta^2 e_{j-1} + 1`` with ``e_0 = x0^2``; valid for every real
    theta including |theta| >= 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    e = float(x0) ** 2
    total = e
    for _ in range(n - 1):
        e = theta * theta * e + 1.0
        total += e
    return total


class Ar1Model(LikModel):
    """Autoregression of fixed length as a fittable one-parameter model."""

    def __init__(self, n: int, x0: float = 1.0, random_x0: bool = False):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = int(n)
        self.x0 = float(x0)
        self.random_x0 = bool(random_x0)
        self.dim_param = 1
        self.domain = OpenBox.unbounded(1)

    def eval(self, data: Ar1Data, theta: np.ndarray) -> ObjectiveEval:
        return ar1_loglik(data, theta)

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> Ar1Data:
        x0 = float(rng.standard_normal()) if self.random_x0 else self.x0
        return ar1_simulate(_theta_scalar(theta), self.n, x0, rng)


# ---------------------------------------------------------------------------
# Pedigrees and the numerator relationship matrix
# ---------------------------------------------------------------------------


class PedigreeError(ValueError):
    """A pedigree record violates the ordering or parentage rules."""


@dataclass(frozen=True)
class PedigreeRecord:
    id: int
    sire: int | None
    dam: int | None


@dataclass(frozen=True, eq=False)
class Pedigree:
    """Parent records in topological order (parents before offspring)."""

    records: tuple[PedigreeRecord, ...]

    def __post_init__(self) -> None:
        records = tuple(self.records)
        seen: set[int] = set()
        for rec in records:
            if rec.id in seen:
                raise PedigreeError(f"record {rec.id}: duplicate id")
            for parent in (rec.sire, rec.dam):
                if parent is None:
                    continue
                if parent == rec.id:
                    raise PedigreeError(f"record {rec.id}: is its own parent")
                if parent not in seen:
                    raise PedigreeError(
                        f"record {rec.id}: parent {parent} does not precede it"
                    )
            seen.add(rec.id)
        object.__setattr__(self, "records", records)

    @property
    def size(self) -> int:
        return len(self.records)


@dataclass(frozen=True, eq=False)
class RelationshipMatrix:
    """Expected additive genetic covariance structure derived from a pedigree."""

    a: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("relationship matrix must be square")
        if float(np.max(np.abs(a - a.T))) > 1e-12:
            raise ValueError("relationship matrix must be symmetric")
        if np.any(a < -1e-12) or np.any(a > 2.0 + 1e-12):
            raise ValueError("relationship entries must lie in [0, 2]")
        object.__setattr__(self, "a", (a + a.T) / 2.0)

    @property
    def size(self) -> int:
        return self.a.shape[0]


def relationship_matrix(ped: Pedigree) -> RelationshipMatrix:
    """Tabular recursion over records in pedigree order.

    Off-diagonals average the parent rows (missing parents contribute 0);
    the diagonal is 1 plus half the parents' relationship.
    """
    n = ped.size
    pos = {rec.id: i for i, rec in enumerate(ped.records)}
    a = np.zeros((n, n))
    for i, rec in enumerate(ped.records):
        s = pos[rec.sire] if rec.sire is not None else None
        d = pos[rec.dam] if rec.dam is not None else None
        if i > 0:
            row = np.zeros(i)
            if s is not None:
                row += a[s, :i]
            if d is not None:
                row += a[d, :i]
            row *= 0.5
            a[i, :i] = row
            a[:i, i] = row
        a[i, i] = 1.0 + (0.5 * a[s, d] if s is not None and d is not None else 0.0)
    return RelationshipMatrix(a)


def synthetic_pedigree(
    n_founders: int, n_per_generation: int, n_generations: int, seed: int
) -> Pedigree:
    """Random mating pedigree: founders, then generations of sampled pairs.

    Each child draws two distinct parents uniformly from the previous
    generation.  Deterministic in the seed.
    """
    if n_founders < 2:
        raise ValueError("need at least two founders")
    rng = derive_rng(seed, "pedigree")
    records = [PedigreeRecord(i + 1, None, None) for i in range(n_founders)]
    previous = list(range(1, n_founders + 1))
    next_id = n_founders + 1
    for _ in range(n_generations):
        current: list[int] = []
        for _ in range(n_per_generation):
            i, j = rng.choice(len(previous), size=2, replace=False)
            records.append(PedigreeRecord(next_id, previous[i], previous[j]))
            current.append(next_id)
            next_id += 1
        previous = current
    return Pedigree(tuple(records))


# ---------------------------------------------------------------------------
# Animal model: y = mu 1 + g + e with g ~ N(0, s2 A), e ~ N(0, t2 I)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnimalParams:
    """Mean, additive genetic variance, environmental variance."""

    mu: float
    sigma2: float
    tau2: float

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0 and self.tau2 > 0):
            raise ValueError("variances must be strictly positive")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "tau2", float(self.tau2))


class _AnimalKernel:
    """Eigendecomposition of A, shared by likelihood and simulation paths."""

    def __init__(self, a: RelationshipMatrix):
        self.a = a.a
        self.n = a.size
        lam, q = np.linalg.eigh(self.a)
        self.lam = lam
        self.q = q
        self.ones_t = q.T @ np.ones(self.n)
        self.eig_clamp = float(max(0.0, -lam.min()))
        self._sim_factor = q * np.sqrt(np.clip(lam, 0.0, None))

    def natural_eval(self, y: np.ndarray, mu: float, s2: float, t2: float):
        """(value, gradient, Hessian) over (mu, sigma2, tau2); None if V singular."""
        w = s2 * self.lam + t2
        # relative floor for rank deficiency, absolute floor so 1/w^3 stays finite
        if w.min() <= self.n * np.finfo(float).eps * w.max() or w.min() < 1e-100:
            return None
        rt = self.q.T @ y - mu * self.ones_t
        rt2 = rt * rt
        inv_w = 1.0 / w
        inv_w2 = inv_w * inv_w
        inv_w3 = inv_w2 * inv_w
        lam = self.lam
        value = -0.5 * float(np.log(w).sum()) - 0.5 * float(rt2 @ inv_w)
        grad = np.array(
            [
                float((self.ones_t * rt) @ inv_w),
                -0.5 * float(lam @ inv_w) + 0.5 * float((lam * rt2) @ inv_w2),
                -0.5 * float(inv_w.sum()) + 0.5 * float(rt2 @ inv_w2),
            ]
        )
        h_mumu = -float((self.ones_t**2) @ inv_w)
        h_mus2 = -float((lam * self.ones_t * rt) @ inv_w2)
        h_mut2 = -float((self.ones_t * rt) @ inv_w2)
        h_s2s2 = 0.5 * float((lam**2) @ inv_w2) - float((lam**2 * rt2) @ inv_w3)
        h_s2t2 = 0.5 * float(lam @ inv_w2) - float((lam * rt2) @ inv_w3)
        h_t2t2 = 0.5 * float(inv_w2.sum()) - float(rt2 @ inv_w3)
        hess = np.array(
            [
                [h_mumu, h_mus2, h_mut2],
                [h_mus2, h_s2s2, h_s2t2],
                [h_mut2, h_s2t2, h_t2t2],
            ]
        )
        return value, grad, hess

    def simulate(self, mu: float, sigma2: float, tau2: float, rng: np.random.Generator) -> np.ndarray:
        genetic = np.sqrt(sigma2) * (self._sim_factor @ rng.standard_normal(self.n))
        environment = np.sqrt(tau2) * rng.standard_normal(self.n)
        return mu + genetic + environment


def animal_loglik(a: RelationshipMatrix, y, params: AnimalParams) -> ObjectiveEval:
    """Gaussian log likelihood over (mu, sigma2, tau2), constants dropped.

    Computed through one eigendecomposition of A; a numerically singular
    covariance gives NaO.
    """
    y = np.asarray(y, dtype=float)
    if y.size != a.size:
        raise ValueError("response length does not match the pedigree")
    out = _AnimalKernel(a).natural_eval(y, params.mu, params.sigma2, params.tau2)
    if out is None:
        return NaO
    return ObjectiveEval(*out)


def animal_simulate(a: RelationshipMatrix, params, rng: np.random.Generator) -> np.ndarray:
    """Draw a trait vector mu + genetic + environmental noise.

    ``params`` is an AnimalParams or a plain (mu, sigma2, tau2) triple; the
    triple form admits zero variances, a boundary allowed for simulation
    only.  Negative eigenvalues of A (rounding artifacts) are clamped to
    zero in the simulation factor; the clamp magnitude is available as
    ``AnimalModel.eig_clamp``.
    """
    if isinstance(params, AnimalParams):
        mu, s2, t2 = params.mu, params.sigma2, params.tau2
    else:
        mu, s2, t2 = (float(v) for v in params)
        if s2 < 0 or t2 < 0:
            raise ValueError("variances may not be negative")
    return _AnimalKernel(a).simulate(mu, s2, t2, rng)


def logit_heritability(params: AnimalParams) -> float:
    """log sigma2 - log tau2, the unconstrained variance-ratio transform."""
    return float(np.log(params.sigma2) - np.log(params.tau2))


def logit_heritability_se(params: AnimalParams, observed_info: np.ndarray) -> float:
    """Delta-method standard error from (mu, sigma2, tau2) observed information."""
    g = np.array([0.0, 1.0 / params.sigma2, -1.0 / params.tau2])
    cov_g = np.linalg.solve(np.asarray(observed_info, dtype=float), g)
    return float(np.sqrt(g @ cov_g))


def method_of_moments_start(a: RelationshipMatrix, y) -> AnimalParams:
    """Cheap interior starting point: mean plus a 2x2 trace-matching solve.

    Matches ``r'r`` and ``r'Ar`` of the centered responses to their expected
    values under the model; clamps both variances to at least
    ``1e-3 var(y)``, and falls back to an even split when the system is
    degenerate (as for A = I, where only the sum is identified).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    if n != a.size:
        raise ValueError("response length does not match the pedigree")
    mu0 = float(y.mean())
    r = y - mu0
    var_y = max(float(r @ r) / (n - 1), 1e-12)
    floor = 1e-3 * var_y
    tr_a = float(np.trace(a.a))
    tr_a2 = float(np.sum(a.a * a.a))
    design = np.array([[tr_a2, tr_a], [tr_a, float(n)]])
    rhs = np.array([float(r @ (a.a @ r)), float(r @ r)])
    det = design[0, 0] * design[1, 1] - design[0, 1] * design[1, 0]
    if det <= 1e-10 * max(design[0, 0] * design[1, 1], 1.0):
        s2 = t2 = var_y / 2.0
    else:
        s2, t2 = np.linalg.solve(design, rhs)
    return AnimalParams(mu0, max(float(s2), floor), max(float(t2), floor))


class AnimalModel(LikModel):
    """Trait model fit over (mu, log sigma2, log tau2).

    The log-variance parameterization keeps Newton iterates interior and
    makes the parameter domain the whole space; reported results map back
    to natural variances.  The eigendecomposition of A is computed once and
    shared read-only by every evaluation and simulation.
    """

    def __init__(self, a: RelationshipMatrix):
        self.relationship = a
        self._kernel = _AnimalKernel(a)
        self.dim_param = 3
        self.domain = OpenBox.unbounded(3)

    @property
    def eig_clamp(self) -> float:
        return self._kernel.eig_clamp

    @property
    def n_individuals(self) -> int:
        return self._kernel.n

    @staticmethod
    def params_to_phi(params: AnimalParams) -> np.ndarray:
        return np.array([params.mu, np.log(params.sigma2), np.log(params.tau2)])

    @staticmethod
    def phi_to_params(phi: np.ndarray) -> AnimalParams:
        return AnimalParams(float(phi[0]), float(np.exp(phi[1])), float(np.exp(phi[2])))

    def eval(self, data, theta: np.ndarray):
        y = np.asarray(data, dtype=float)
        mu, log_s2, log_t2 = float(theta[0]), float(theta[1]), float(theta[2])
        if not np.isfinite(mu) or abs(log_s2) > 700.0 or abs(log_t2) > 700.0:
            return NaO
        s2, t2 = float(np.exp(log_s2)), float(np.exp(log_t2))
        out = self._kernel.natural_eval(y, mu, s2, t2)
        if out is None:
            return NaO
        value, g, h = out
        grad = np.array([g[0], g[1] * s2, g[2] * t2])
        hess = np.array(
            [
                [h[0, 0], h[0, 1] * s2, h[0, 2] * t2],
                [h[0, 1] * s2, h[1, 1] * s2 * s2 + g[1] * s2, h[1, 2] * s2 * t2],
                [h[0, 2] * t2, h[1, 2] * s2 * t2, h[2, 2] * t2 * t2 + g[2] * t2],
            ]
        )
        return ObjectiveEval(value, grad, hess)

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        params = self.phi_to_params(np.asarray(theta, dtype=float))
        return self._kernel.simulate(params.mu, params.sigma2, params.tau2, rng)

    def start(self, data) -> np.ndarray:
        return self.params_to_phi(method_of_moments_start(self.relationship, data))


# ---------------------------------------------------------------------------
# iid helper models for sample-size ladder studies
# ---------------------------------------------------------------------------


class NormalLocationIid(LikModel):
    """n iid observations x_i ~ N(theta, I): the exactly-quadratic iid unit."""

    def __init__(self, p: int, n: int):
        self.p = int(p)
        self.n = int(n)
        self.dim_param = self.p
        self.domain = OpenBox.unbounded(self.p)

    def eval(self, data, theta: np.ndarray) -> ObjectiveEval:
        x = np.asarray(data, dtype=float).reshape(self.n, self.p)
        resid = x - theta
        value = -0.5 * float(np.sum(resid * resid))
        return ObjectiveEval(value, resid.sum(axis=0), -self.n * np.eye(self.p))

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return theta + rng.standard_normal((self.n, self.p))

    def unit_fisher(self, theta) -> np.ndarray:
        return np.eye(self.p)


class ExponentialRateIid(LikModel):
    """n iid exponential observations with rate theta: a curved iid unit."""

    def __init__(self, n: int):
        self.n = int(n)
        self.dim_param = 1
        self.domain = OpenBox(np.array([0.0]), np.array([np.inf]))

    def eval(self, data, theta: np.ndarray) -> ObjectiveEval:
        x = np.asarray(data, dtype=float)
        th = float(theta[0])
        total = float(x.sum())
        value = self.n * np.log(th) - th * total
        grad = np.array([self.n / th - total])
        hess = np.array([[-self.n / th**2]])
        return ObjectiveEval(value, grad, hess)

    def simulate(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return rng.exponential(scale=1.0 / float(theta[0]), size=self.n)

    def start(self, data) -> np.ndarray:
        return np.array([1.0 / float(np.mean(data))])

    def unit_fisher(self, theta) -> np.ndarray:
        return np.array([[1.0 / float(theta[0]) ** 2]])


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


class DataFormatError(ValueError):
    """A data file failed to parse; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def load_vector_csv(path: str) -> np.ndarray:
    """One-column CSV of reals; a single non-numeric first line is a header."""
    values: list[float] = []
    with open(path, "r", encoding="utf8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                if lineno == 1:
                    continue
                raise DataFormatError(lineno, f"expected a number, got {text!r}") from None
    if not values:
        raise DataFormatError(1, "no data rows")
    return np.asarray(values)


def save_vector_csv(path: str, values) -> None:
    with open(path, "w", encoding="utf8", newline="\n") as handle:
        for v in np.asarray(values, dtype=float).ravel():
            handle.write(f"{v:.17g}\n")


def save_matrix_csv(path: str, a) -> None:
    """Dense matrix as CSV, row-major."""
    mat = np.asarray(a, dtype=float)
    with open(path, "w", encoding="utf8", newline="\n") as handle:
        for row in mat:
            handle.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_pedigree_csv(path: str) -> Pedigree:
    """Pedigree CSV: header ``id,sire,dam``, 1-based ids, blank = unknown."""

    def parse_id(text: str, lineno: int, what: str) -> int | None:
        text = text.strip()
        if not text:
            return None
        try:
            value = int(text)
        except ValueError:
            raise DataFormatError(lineno, f"{what} must be an integer, got {text!r}") from None
        if value < 1:
            raise DataFormatError(lineno, f"{what} must be a positive id, got {value}")
        return value

    records: list[PedigreeRecord] = []
    seen: set[int] = set()
    with open(path, "r", encoding="utf8", newline="") as handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1:
                if [cell.strip().lower() for cell in row] != ["id", "sire", "dam"]:
                    raise DataFormatError(1, "header must be exactly 'id,sire,dam'")
                continue
            if len(row) != 3:
                raise DataFormatError(lineno, f"expected 3 fields, got {len(row)}")
            rec_id = parse_id(row[0], lineno, "id")
            if rec_id is None:
                raise DataFormatError(lineno, "id may not be blank")
            if rec_id in seen:
                raise DataFormatError(lineno, f"duplicate id {rec_id}")
            sire = parse_id(row[1], lineno, "sire")
            dam = parse_id(row[2], lineno, "dam")
            for parent in (sire, dam):
                if parent == rec_id:
                    raise DataFormatError(lineno, f"record {rec_id} is its own parent")
                if parent is not None and parent not in seen:
                    raise DataFormatError(
                        lineno, f"parent {parent} does not precede record {rec_id}"
                    )
            seen.add(rec_id)
            records.append(PedigreeRecord(rec_id, sire, dam))
    if not records:
        raise DataFormatError(1, "no pedigree records")
    return Pedigree(tuple(records))


def save_pedigree_csv(path: str, ped: Pedigree) -> None:
    with open(path, "w", encoding="utf8", newline="\n") as handle:
        handle.write("id,sire,dam\n")
        for rec in ped.records:
            sire = "" if rec.sire is None else str(rec.sire)
            dam = "" if rec.dam is None else str(rec.dam)
            handle.write(f"{rec.id},{sire},{dam}\n")
