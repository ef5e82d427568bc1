"""GP-UCB and round-robin grid sampling, run against the same noisy oracle."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .epoch_elim import AlgorithmRun
from .errors import BudgetExhausted, ParameterError
from .gp import NoisyOracle
from .kernel import KernelSpec, gram

__all__ = [
    "BaselineKind",
    "BaselineSpec",
    "ucb_beta",
    "GridPosterior",
    "run_gp_ucb",
    "run_uniform",
    "uniform_grid",
    "subsample_grid",
]


class BaselineKind(str, enum.Enum):
    GP_UCB = "gp-ucb"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class BaselineSpec:
    kind: BaselineKind
    delta: float = 0.1
    max_candidates: int = 513
    resolution: int = 256


def ucb_beta(n_candidates: int, t: int, delta: float = 0.1) -> float:
    """Anytime schedule ``2 log(|L| t^2 pi^2 / (6 delta))``."""
    return 2.0 * math.log(n_candidates * t * t * math.pi**2 / (6.0 * delta))


def subsample_grid(grid: np.ndarray, max_points: int) -> np.ndarray:
    """At most ``max_points`` evenly strided points of ``grid``, endpoints kept."""
    grid = np.asarray(grid, dtype=float)
    if grid.size <= max_points:
        return grid
    idx = np.unique(np.rint(np.linspace(0, grid.size - 1, max_points)).astype(np.int64))
    return grid[idx]


def uniform_grid(resolution: int = 256) -> np.ndarray:
    return np.linspace(0.0, 1.0, resolution)


class GridPosterior:
    """Exact GP posterior restricted to a fixed candidate set.

    Observations at candidate ``j`` condition the joint Gaussian over all
    candidates by a rank-one update of its mean and covariance.
    """

    def __init__(self, spec: KernelSpec, points, sigma2: float):
        self.points = np.asarray(points, dtype=float)
        self.sigma2 = float(sigma2)
        self.mean = np.zeros(self.points.size)
        self.cov = gram(spec, self.points)

    @property
    def var(self) -> np.ndarray:
        return np.maximum(np.diag(self.cov), 0.0)

    def update(self, j: int, y: float):
        s = self.cov[:, j].copy()
        denom = s[j] + self.sigma2
        if denom <= 0:
            return
        self.mean += s * ((y - self.mean[j]) / denom)
        self.cov -= np.outer(s, s / denom)


def run_gp_ucb(
    oracle: NoisyOracle,
    spec: KernelSpec,
    grid,
    T: int,
    sigma2: float,
    delta: float = 0.1,
) -> AlgorithmRun:
    """Query the candidate maximising ``mu + sqrt(beta_t) * sd`` at each step."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("empty candidate grid")
    post = GridPosterior(spec, grid, sigma2)
    run = AlgorithmRun(trace=oracle.trace, grid=grid)
    for t in range(1, T + 1):
        ucb = post.mean + math.sqrt(ucb_beta(grid.size, t, delta)) * np.sqrt(post.var)
        j = int(np.argmax(ucb))
        try:
            y = oracle.query(grid[j])
        except BudgetExhausted:
            break
        post.update(j, y)
    return run


def run_uniform(oracle: NoisyOracle, grid, T: int) -> AlgorithmRun:
    """Cycle through ``grid`` left to right, ``T`` queries in total."""
    grid = np.asarray(grid, dtype=float)
    run = AlgorithmRun(trace=oracle.trace, grid=grid)
    n = grid.size
    full, rest = divmod(T, n)
    try:
        for x in np.concatenate([np.tile(grid, full), grid[:rest]]):
            oracle.query(x)
    except BudgetExhausted:
        pass
    return run
