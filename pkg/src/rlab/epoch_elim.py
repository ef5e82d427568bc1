"""Epoch-based resampling and confidence elimination on a fine grid.

Each epoch halves the target confidence ``eta``, resamples a covering subset of
the interval spanned by the surviving candidates ``K`` times per point, refits
the GP posterior once, and drops every candidate whose upper bound falls below
the best lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import AssumptionConstants
from .errors import BudgetExhausted, ParameterError
from .gp import NoisyOracle, PosteriorState, RegretTrace
from .kernel import KernelSpec

__all__ = [
    "make_domain_grid",
    "beta_T",
    "lipschitz_constant",
    "build_sample_set",
    "repetitions",
    "nearest_index",
    "confidence_bounds",
    "eliminate",
    "EpochState",
    "AlgorithmRun",
    "run_epoch_elim",
    "doubling_schedule",
    "run_with_doubling",
]


def make_domain_grid(c1: float, T: int) -> np.ndarray:
    """Multiples of ``1/(c1*T)`` inside [0, 1], plus the point 1."""
    if not (c1 > 0 and T >= 1):
        raise ParameterError("need c1 > 0 and T >= 1")
    scale = c1 * T
    n = int(math.floor(scale * (1.0 + 1e-12)))
    pts = np.arange(n + 1) / scale
    if pts[-1] > 1.0 - 1e-12:
        pts[-1] = 1.0
    else:
        pts = np.append(pts, 1.0)
    return pts


def beta_T(c1: float, T: int) -> float:
    """Confidence multiplier ``2 log(2 c1 T^3)`` (natural log)."""
    if not (c1 > 0 and T >= 1):
        raise ParameterError("need c1 > 0 and T >= 1")
    arg = 2.0 * c1 * float(T) ** 3
    if arg < 1.0:
        raise ParameterError(f"2*c1*T^3 = {arg} < 1 gives a negative confidence multiplier")
    return 2.0 * math.log(arg)


LIP_GLOBAL = "global"
LIP_ENDPOINT = "endpoint"
LIP_LOCAL = "local"


def lipschitz_constant(consts: AssumptionConstants, w: float, interval) -> tuple[float, str]:
    """Lipschitz constant valid on ``interval`` and the name of the case used."""
    if w < 0:
        raise ParameterError("interval width must be nonnegative")
    if w > consts.rho0:
        return consts.c1, LIP_GLOBAL
    pts = np.asarray(interval, dtype=float)
    if pts[0] <= 0.0 or pts[-1] >= 1.0:
        return consts.c1, LIP_ENDPOINT
    return consts.c2 * w, LIP_LOCAL


def build_sample_set(interval, w: float, lip: float, eta: float) -> np.ndarray:
    """Subset of ``interval`` covering it to within ``eta / (2 lip)``.

    Anchors are spaced ``eta / (2 lip)`` apart starting half a spacing in from
    the left end; each anchor contributes the two grid points bracketing it.
    """
    pts = np.asarray(interval, dtype=float)
    if pts.size == 0:
        raise ParameterError("empty interval")
    if pts.size == 1 or w <= 0:
        return pts[:1].copy()
    width = float(pts[-1] - pts[0])
    if lip > 0 and eta > 0:
        spacing = eta / (2.0 * lip)
        n_anchor = max(1, int(math.ceil(width / spacing - 1e-12)))
        anchors = pts[0] + spacing * (0.5 + np.arange(n_anchor))
    else:
        anchors = np.array([pts[0] + 0.5 * width])
    anchors = np.clip(anchors, pts[0], pts[-1])
    up = np.minimum(np.searchsorted(pts, anchors, side="left"), pts.size - 1)
    down = np.where(pts[up] == anchors, up, np.maximum(up - 1, 0))
    return np.unique(pts[np.concatenate([down, up])])


def repetitions(sigma2: float, beta: float, eta: float) -> int:
    """Repeats per point so that ``sigma2 / K <= eta^2 / (4 beta)``; at least 1."""
    if not eta > 0:
        raise ParameterError("eta must be positive")
    if sigma2 <= 0:
        return 1
    K = max(1, int(math.ceil(4.0 * sigma2 * beta / (eta * eta))))
    while sigma2 / K > eta * eta / (4.0 * beta):
        K += 1
    return K


def nearest_index(points, sample_set) -> np.ndarray:
    """Index into sorted ``sample_set`` of the nearest element; ties go left."""
    s = np.asarray(sample_set, dtype=float)
    x = np.asarray(points, dtype=float)
    j = np.clip(np.searchsorted(s, x), 1, max(s.size - 1, 1))
    if s.size == 1:
        return np.zeros(x.shape, dtype=np.int64)
    left = s[j - 1]
    right = s[j]
    return np.where(x - left <= right - x, j - 1, j)


def confidence_bounds(post: PosteriorState, x, sample_set, eta: float):
    """UCB and LCB at ``x`` from the posterior mean at its nearest sampled point."""
    s = np.asarray(sample_set, dtype=float)
    k = nearest_index(x, s)
    mu, _ = post.posterior(s[k])
    return mu + eta, mu - eta


def eliminate(ucb, lcb) -> np.ndarray:
    """Mask of candidates whose UCB reaches the largest LCB among them."""
    ucb = np.asarray(ucb, dtype=float)
    lcb = np.asarray(lcb, dtype=float)
    return ucb >= lcb.max()


@dataclass
class EpochState:
    i: int
    eta: float
    w: float
    lipschitz: float
    lipschitz_case: str
    n_candidates: int
    n_samples: int
    K: int
    t_start: int
    t_end: int
    interval: tuple[float, float]
    completed: bool
    sample_set: np.ndarray | None = field(default=None, repr=False)
    mu: np.ndarray | None = field(default=None, repr=False)
    candidates: np.ndarray | None = field(default=None, repr=False)
    survivors: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "i": self.i,
            "eta": self.eta,
            "w": self.w,
            "lipschitz_case": self.lipschitz_case,
            "M": self.n_candidates,
            "Ls": self.n_samples,
            "K": self.K,
        }


@dataclass
class AlgorithmRun:
    trace: RegretTrace
    epochs: list[EpochState] = field(default_factory=list)
    grid: np.ndarray | None = field(default=None, repr=False)
    eliminated_true_max: bool = False
    stages: list[tuple[int, int]] = field(default_factory=list)

    @property
    def cumulative_regret(self) -> float:
        return self.trace.total_regret


def run_epoch_elim(
    oracle: NoisyOracle,
    consts: AssumptionConstants,
    T: int,
    sigma2: float,
    kernel: KernelSpec,
    max_queries: int | None = None,
    record_sets: bool = False,
) -> AlgorithmRun:
    """Run the epoch-elimination algorithm with horizon ``T``.

    ``max_queries`` truncates the run earlier (used by the doubling wrapper);
    running out of oracle budget also ends the run.  Sampling visits the
    sample set left to right, each point ``K`` times in a row.
    """
    if T < 1:
        raise ParameterError("T must be >= 1")
    limit = T if max_queries is None else min(T, max_queries)
    grid = make_domain_grid(consts.c1, T)
    beta = beta_T(consts.c1, T)
    eta = consts.c0
    alive = np.ones(grid.size, dtype=bool)
    post = PosteriorState(kernel, sigma2)
    t0 = oracle.t
    spent = 0
    run = AlgorithmRun(trace=oracle.trace, grid=grid)
    best_idx = int(np.argmax(oracle.truth(grid)))
    i = 0
    exhausted = False
    while spent < limit and not exhausted:
        i += 1
        eta *= 0.5
        idx = np.flatnonzero(alive)
        lo, hi = int(idx[0]), int(idx[-1])
        interval = grid[lo : hi + 1]
        w = float(grid[hi] - grid[lo])
        lip, case = lipschitz_constant(consts, w, interval)
        sample_set = build_sample_set(interval, w, lip, eta)
        K = repetitions(sigma2, beta, eta)
        t_start = spent
        bx, by = [], []
        for x in sample_set:
            take = min(K, limit - spent)
            try:
                ys = oracle.query_repeated(x, take)
            except BudgetExhausted:
                exhausted = True
                break
            bx.append(np.full(ys.size, x))
            by.append(ys)
            spent += ys.size
            if spent >= limit:
                break
        if bx:
            post.extend_many(np.concatenate(bx), np.concatenate(by))
        completed = spent - t_start == K * sample_set.size
        state = EpochState(
            i, eta, w, lip, case, int(idx.size), int(sample_set.size), K, t0 + t_start, t0 + spent,
            (float(grid[lo]), float(grid[hi])), completed,
        )
        if record_sets:
            state.sample_set = sample_set
            state.candidates = idx
        if completed:
            mu, _ = post.posterior(sample_set)
            near = nearest_index(grid[idx], sample_set)
            centre = mu[near]
            keep = eliminate(centre + eta, centre - eta)
            alive[idx[~keep]] = False
            if not alive[best_idx]:
                run.eliminated_true_max = True
            if record_sets:
                state.mu = mu
                state.survivors = np.flatnonzero(alive)
        run.epochs.append(state)
    return run


def doubling_schedule(T: int, T0: int) -> list[tuple[int, int]]:
    """Stage horizons ``T0 * 2**(l-1)`` and the samples each actually uses."""
    if not (T0 >= 1 and T >= 1):
        raise ParameterError("need T >= 1 and T0 >= 1")
    out, used, h = [], 0, T0
    while used < T:
        take = min(h, T - used)
        out.append((h, take))
        used += take
        h *= 2
    return out


def run_with_doubling(
    oracle: NoisyOracle,
    consts: AssumptionConstants,
    T: int,
    T0: int,
    sigma2: float,
    kernel: KernelSpec,
) -> AlgorithmRun:
    """Horizon-free wrapper: independent restarts on horizons T0, 2*T0, 4*T0, ..."""
    if not 1 <= T0 <= max(1, T // 2):
        raise ParameterError("need 1 <= T0 <= T/2")
    run = AlgorithmRun(trace=oracle.trace)
    for horizon, take in doubling_schedule(T, T0):
        stage = run_epoch_elim(oracle, consts, horizon, sigma2, kernel, max_queries=take)
        run.epochs.extend(stage.epochs)
        run.eliminated_true_max |= stage.eliminated_true_max
        run.stages.append((horizon, take))
    return run
