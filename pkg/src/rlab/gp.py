"""Gaussian-process ground truths, noisy query oracles and posterior inference."""

from __future__ import annotations

import csv
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_triangular

from .errors import BudgetExhausted, DomainError, GenerationError, NumericalError, ParameterError
from .kernel import KernelSpec, cross_cov, gram

log = logging.getLogger(__name__)

__all__ = [
    "GroundTruth",
    "sample_prior_path",
    "eval_truth",
    "PosteriorState",
    "dense_posterior",
    "RegretTrace",
    "NoisyOracle",
]

# Eigen-components below this fraction of the leading eigenvalue are roundoff.
EIG_RTOL = 1e-12
JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
DOMAIN_TOL = 1e-12


@dataclass
class GroundTruth:
    """A tabulated function on a uniform grid, interpolated by a cubic spline."""

    grid: np.ndarray
    values: np.ndarray
    seed: int | None = None
    spline: CubicSpline = field(init=False, repr=False)
    maximizer: float = field(init=False)
    max_value: float = field(init=False)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2 or self.grid.shape != self.values.shape:
            raise ParameterError("grid and values must be 1-d arrays of equal length >= 2")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("ground-truth values must be finite")
        steps = np.diff(self.grid)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ParameterError("grid must be strictly increasing and uniform")
        self.spline = CubicSpline(self.grid, self.values)
        cands = np.concatenate(
            [self.spline.derivative().roots(extrapolate=False), self.grid[[0, -1]]]
        )
        vals = self.spline(cands)
        i_node = int(np.argmax(self.values))
        k = int(np.argmax(vals))
        if vals[k] >= self.values[i_node]:
            self.maximizer, self.max_value = float(cands[k]), float(vals[k])
        else:
            self.maximizer, self.max_value = float(self.grid[i_node]), float(self.values[i_node])

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def argmax_index(self) -> int:
        return int(np.argmax(self.values))

    def __call__(self, x):
        return eval_truth(self, x)


def eval_truth(truth: GroundTruth, x):
    """Evaluate the interpolated path; exact at grid nodes."""
    xa = np.asarray(x, dtype=float)
    lo, hi = truth.domain
    if np.any(xa < lo - DOMAIN_TOL) or np.any(xa > hi + DOMAIN_TOL) or np.any(np.isnan(xa)):
        raise DomainError(f"query outside the domain [{lo}, {hi}]")
    xa = np.clip(xa, lo, hi)
    out = np.asarray(truth.spline(xa), dtype=float)
    idx = np.clip(np.rint((xa - lo) / truth.h).astype(np.int64), 0, truth.grid.size - 1)
    on_node = truth.grid[idx] == xa
    out = np.where(on_node, truth.values[idx], out)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=8)
def _path_factor(spec: KernelSpec, lo: float, hi: float, n: int) -> np.ndarray:
    grid = np.linspace(lo, hi, n)
    K = gram(spec, grid)
    try:
        w, U = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise GenerationError(f"eigendecomposition failed: {exc}") from exc
    keep = w > EIG_RTOL * w[-1]
    B = U[:, keep] * np.sqrt(w[keep])
    B.setflags(write=False)
    return B


def sample_prior_path(
    spec: KernelSpec,
    domain: tuple[float, float] = (0.0, 1.0),
    grid_size: int = 2049,
    seed: int = 0,
) -> GroundTruth:
    """Draw one zero-mean GP path tabulated on ``grid_size`` uniform nodes.

    The Gram matrix square root is a rank-truncated symmetric eigendecomposition
    (cached per grid), which adds no white-noise jitter to the path.
    """
    if grid_size < 2:
        raise ParameterError("grid_size must be at least 2")
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ParameterError("empty domain")
    B = _path_factor(spec, lo, hi, int(grid_size))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(B.shape[1])
    return GroundTruth(np.linspace(lo, hi, grid_size), B @ z, seed=seed)


def _cholesky_with_jitter(A: np.ndarray) -> tuple[np.ndarray, float]:
    for jitter in JITTER_LADDER:
        try:
            M = A if jitter == 0.0 else A + jitter * np.eye(A.shape[0])
            return np.linalg.cholesky(M), jitter
        except np.linalg.LinAlgError:
            continue
    cond = np.linalg.cond(A)
    raise NumericalError(
        f"Cholesky failed after jitter {JITTER_LADDER[-1]:g}; condition number {cond:.3e}"
    )


def dense_posterior(spec: KernelSpec, xs, ys, sigma2: float, xq):
    """Direct solve of the posterior mean/variance formulas (no caching, no aggregation)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xq = np.atleast_1d(np.asarray(xq, dtype=float))
    if xs.size == 0:
        return np.zeros_like(xq), np.ones_like(xq)
    A = gram(spec, xs) + sigma2 * np.eye(xs.size)
    kq = cross_cov(spec, xs, xq)
    mean = kq.T @ np.linalg.solve(A, ys)
    var = 1.0 - np.einsum("ij,ij->j", kq, np.linalg.solve(A, kq))
    return mean, var


class PosteriorState:
    """Incremental GP posterior given noisy observations.

    Repeated observations at one input are pooled into their mean with noise
    variance ``sigma2 / count``; this is the same posterior as the full
    ``(K_t + sigma2 I)`` system but the factor stays the size of the number of
    distinct inputs.
    """

    def __init__(self, spec: KernelSpec, sigma2: float):
        if sigma2 < 0:
            raise ParameterError("noise variance must be nonnegative")
        self.spec = spec
        self.sigma2 = float(sigma2)
        self.xs: list[float] = []
        self.ys: list[float] = []
        self._index: dict[float, int] = {}
        self._u: list[float] = []
        self._sum: list[float] = []
        self._cnt: list[int] = []
        self._chol = np.zeros((0, 0))
        self._jitter = 0.0
        self._dirty = False

    def __len__(self):
        return len(self.xs)

    @property
    def t(self) -> int:
        return len(self.xs)

    @property
    def distinct_inputs(self) -> np.ndarray:
        return np.asarray(self._u)

    def copy(self) -> "PosteriorState":
        new = PosteriorState(self.spec, self.sigma2)
        new.xs, new.ys = list(self.xs), list(self.ys)
        new._index = dict(self._index)
        new._u, new._sum, new._cnt = list(self._u), list(self._sum), list(self._cnt)
        new._chol, new._jitter, new._dirty = self._chol.copy(), self._jitter, self._dirty
        return new

    def _noise(self) -> np.ndarray:
        return self.sigma2 / np.asarray(self._cnt, dtype=float)

    def _refactor(self):
        u = np.asarray(self._u)
        A = gram(self.spec, u) + np.diag(self._noise())
        self._chol, self._jitter = _cholesky_with_jitter(A)
        self._dirty = False

    def extend(self, x: float, y: float) -> "PosteriorState":
        """Record one observation in place; returns ``self`` for chaining."""
        x, y = float(x), float(y)
        self.xs.append(x)
        self.ys.append(y)
        j = self._index.get(x)
        if j is not None:
            self._sum[j] += y
            self._cnt[j] += 1
            self._dirty = True
            return self
        self._index[x] = len(self._u)
        self._u.append(x)
        self._sum.append(y)
        self._cnt.append(1)
        if self._dirty or len(self._u) == 1:
            self._dirty = True
            return self
        kx = cross_cov(self.spec, self._u[:-1], [x])[:, 0]
        row = solve_triangular(self._chol, kx, lower=True)
        d2 = 1.0 + self.sigma2 + self._jitter - row @ row
        if d2 <= 1e-12:
            self._dirty = True
            return self
        n = len(self._u)
        L = np.zeros((n, n))
        L[:-1, :-1] = self._chol
        L[-1, :-1] = row
        L[-1, -1] = math.sqrt(d2)
        self._chol = L
        return self

    def extend_many(self, xs, ys) -> "PosteriorState":
        """Record a batch of observations with one block update of the factor."""
        xs = np.asarray(xs, dtype=float).ravel()
        ys = np.asarray(ys, dtype=float).ravel()
        n_old = len(self._u)
        for x, y in zip(xs.tolist(), ys.tolist()):
            self.xs.append(x)
            self.ys.append(y)
            j = self._index.get(x)
            if j is None:
                self._index[x] = len(self._u)
                self._u.append(x)
                self._sum.append(y)
                self._cnt.append(1)
            else:
                self._sum[j] += y
                self._cnt[j] += 1
                if j < n_old:
                    self._dirty = True
        if self._dirty or n_old == 0 or len(self._u) == n_old:
            self._dirty = self._dirty or len(self._u) > n_old
            return self
        new = np.asarray(self._u[n_old:])
        k12 = cross_cov(self.spec, self._u[:n_old], new)
        L21 = solve_triangular(self._chol, k12, lower=True).T
        S = gram(self.spec, new) + np.diag(self._noise()[n_old:] + self._jitter) - L21 @ L21.T
        try:
            L22 = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            self._dirty = True
            return self
        n = len(self._u)
        L = np.zeros((n, n))
        L[:n_old, :n_old] = self._chol
        L[n_old:, :n_old] = L21
        L[n_old:, n_old:] = L22
        self._chol = L
        return self

    def posterior(self, x):
        """Posterior mean and variance at ``x`` (scalar or array)."""
        xq = np.asarray(x, dtype=float)
        scalar = xq.ndim == 0
        xq = np.atleast_1d(xq)
        if not self._u:
            mean, var = np.zeros(xq.shape), np.ones(xq.shape)
        else:
            if self._dirty:
                self._refactor()
            ybar = np.asarray(self._sum) / np.asarray(self._cnt)
            kq = cross_cov(self.spec, self._u, xq)
            v = solve_triangular(self._chol, kq, lower=True)
            w = solve_triangular(self._chol, ybar, lower=True)
            mean = v.T @ w
            var = 1.0 - np.einsum("ij,ij->j", v, v)
            low = var.min()
            if low < -1e-8:
                log.warning("clamping posterior variance %.3e to zero", low)
            var = np.maximum(var, 0.0)
        if scalar:
            return float(mean[0]), float(var[0])
        return mean, var


class RegretTrace:
    """Per-step record of queries, observations and regret."""

    def __init__(self, capacity: int = 0):
        self._x = np.empty(max(capacity, 16))
        self._y = np.empty_like(self._x)
        self._r = np.empty_like(self._x)
        self.n = 0

    def _grow(self, need: int):
        if need > self._x.size:
            size = max(need, 2 * self._x.size)
            for name in ("_x", "_y", "_r"):
                old = getattr(self, name)
                new = np.empty(size)
                new[: self.n] = old[: self.n]
                setattr(self, name, new)

    def append(self, x, y, r):
        x, y, r = np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(r)
        k = y.size
        self._grow(self.n + k)
        self._x[self.n : self.n + k] = x
        self._y[self.n : self.n + k] = y
        self._r[self.n : self.n + k] = r
        self.n += k

    def __len__(self):
        return self.n

    @property
    def xs(self) -> np.ndarray:
        return self._x[: self.n]

    @property
    def ys(self) -> np.ndarray:
        return self._y[: self.n]

    @property
    def instant_regret(self) -> np.ndarray:
        return self._r[: self.n]

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.instant_regret)

    @property
    def total_regret(self) -> float:
        return float(self.instant_regret.sum())

    def to_csv(self, path):
        cum = self.cumulative_regret
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x_t", "y_t", "instant_regret", "cumulative_regret"])
            for i in range(self.n):
                w.writerow([i + 1, *(repr(float(a[i])) for a in (self._x, self._y, self._r, cum))])

    @classmethod
    def from_csv(cls, path) -> "RegretTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        tr = cls(len(rows))
        for row in rows:
            tr.append(float(row["x_t"]), float(row["y_t"]), float(row["instant_regret"]))
        return tr


class NoisyOracle:
    """Noisy evaluations of a ground truth, with a hard query budget.

    Every query is logged in :attr:`trace` together with its instant regret
    ``truth.max_value - f(x)``.
    """

    def __init__(self, truth: GroundTruth, sigma2: float, seed=0, budget: int | None = None):
        if sigma2 < 0:
            raise ParameterError("noise variance must be nonnegative")
        self.truth = truth
        self.sigma2 = float(sigma2)
        self.sigma = math.sqrt(self.sigma2)
        self.rng = np.random.default_rng(seed)
        self.budget = budget
        self.trace = RegretTrace(budget or 0)

    @property
    def t(self) -> int:
        return len(self.trace)

    @property
    def remaining(self) -> float:
        return math.inf if self.budget is None else self.budget - self.t

    def query(self, x: float) -> float:
        return float(self.query_repeated(x, 1)[0])

    def query_repeated(self, x: float, k: int) -> np.ndarray:
        """Query ``x`` ``k`` times in a row; raises once nothing is left to spend.

        If fewer than ``k`` queries remain, the remaining ones are taken and
        returned; the next call raises :class:`BudgetExhausted`.
        """
        if self.remaining <= 0:
            raise BudgetExhausted(f"budget of {self.budget} queries exhausted")
        k = int(min(k, self.remaining))
        fx = eval_truth(self.truth, x)
        noise = self.sigma * self.rng.standard_normal(k) if self.sigma2 > 0 else np.zeros(k)
        ys = fx + noise
        self.trace.append(np.full(k, float(x)), ys, np.full(k, self.truth.max_value - fx))
        return ys
