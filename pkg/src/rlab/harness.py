"""Monte Carlo sweeps over the horizon T, scaling fits and result files."""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import run_gp_ucb, run_uniform, subsample_grid, uniform_grid
from .constants import certify_assumptions, estimate_constants
from .epoch_elim import make_domain_grid, run_epoch_elim, run_with_doubling
from .errors import ClassificationError, ConfigError, SweepError
from .gp import NoisyOracle, sample_prior_path
from .kernel import KernelSpec

log = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "CSV_HEADER",
    "ExperimentConfig",
    "SweepRow",
    "SweepResult",
    "trial_seed",
    "run_trial",
    "run_sweep",
    "fit_scaling",
    "reduce_trials",
    "emit_outputs",
    "read_sweep_csv",
    "worker_count",
]

ALGORITHMS = ("epoch-elim", "epoch-elim-doubling", "gp-ucb", "uniform")
CSV_HEADER = ["T", "algorithm", "kernel", "sigma2", "trials", "rejected", "mean_regret", "stderr_regret"]


@dataclass
class ExperimentConfig:
    kernel: KernelSpec
    sigma2: float
    T_values: list[int]
    trials: int = 100
    seed: int = 0
    algorithm: str = "epoch-elim"
    grid_size: int = 2049
    T0: int = 16
    ucb_candidates: int = 513
    uniform_resolution: int = 256
    c_sigma: float | None = None
    zeta: float | None = None
    c_sigma_lb: float | None = None
    zeta_lb: float | None = None

    def __post_init__(self):
        if isinstance(self.kernel, dict):
            self.kernel = KernelSpec.from_dict(self.kernel)
        self.T_values = [int(t) for t in self.T_values]
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be positive")
        if not self.T_values or any(b <= a for a, b in zip(self.T_values, self.T_values[1:])):
            raise ConfigError("T_values must be nonempty and strictly increasing")
        if self.T_values[0] < 1:
            raise ConfigError("T values must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.grid_size < 257:
            raise ConfigError("grid_size must be at least 257")
        for T in self.T_values:
            if self.c_sigma is not None and self.zeta is not None:
                if self.sigma2 < self.c_sigma / T ** (1.0 - self.zeta):
                    warnings.warn(f"sigma2 below c_sigma / T^(1-zeta) at T={T}", stacklevel=2)
            if self.c_sigma_lb is not None and self.zeta_lb is not None:
                if self.sigma2 > self.c_sigma_lb * T ** (1.0 - self.zeta_lb):
                    warnings.warn(f"sigma2 above c'_sigma T^(1-zeta') at T={T}", stacklevel=2)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(**d)
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["kernel"] = self.kernel.to_dict()
        return d


@dataclass(frozen=True)
class SweepRow:
    T: int
    algorithm: str
    kernel: str
    sigma2: float
    trials: int
    rejected: int
    mean_regret: float
    stderr_regret: float

    def as_list(self) -> list[str]:
        return [
            str(self.T), self.algorithm, self.kernel, repr(float(self.sigma2)), str(self.trials),
            str(self.rejected), repr(float(self.mean_regret)), repr(float(self.stderr_regret)),
        ]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    slope: float = math.nan
    intercept: float = math.nan
    residual: float = math.nan
    monotone: bool = True
    per_trial: dict[int, np.ndarray] = field(default_factory=dict, repr=False)


def trial_seed(base_seed: int, trial: int) -> int:
    return base_seed ^ trial


def worker_count() -> int:
    env = os.environ.get("RLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"RLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def run_trial(cfg: ExperimentConfig, trial: int, T: int) -> float | None:
    """Cumulative regret of one trial, or ``None`` if its truth is rejected."""
    seed = trial_seed(cfg.seed, trial)
    truth = sample_prior_path(cfg.kernel, (0.0, 1.0), cfg.grid_size, seed)
    try:
        consts = estimate_constants(truth)
    except ClassificationError:
        return None
    if not certify_assumptions(truth, consts, seed=seed).upper_bound_ok:
        return None
    oracle = NoisyOracle(truth, cfg.sigma2, seed=[seed, T], budget=T)
    algo = cfg.algorithm
    if algo == "epoch-elim":
        run_epoch_elim(oracle, consts, T, cfg.sigma2, cfg.kernel)
    elif algo == "epoch-elim-doubling":
        run_with_doubling(oracle, consts, T, min(cfg.T0, max(1, T // 2)), cfg.sigma2, cfg.kernel)
    elif algo == "gp-ucb":
        grid = subsample_grid(make_domain_grid(consts.c1, T), cfg.ucb_candidates)
        run_gp_ucb(oracle, cfg.kernel, grid, T, cfg.sigma2)
    else:
        run_uniform(oracle, uniform_grid(cfg.uniform_resolution), T)
    return oracle.trace.total_regret


def _trial_job(args):
    cfg, trial, T = args
    return trial, T, run_trial(cfg, trial, T)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """Average cumulative regret over ``cfg.trials`` truths at every horizon.

    Trial ``i`` uses the truth drawn with seed ``cfg.seed ^ i`` at every T.
    Truths failing certification are excluded and counted per row.
    """
    workers = worker_count() if workers is None else max(1, workers)
    jobs = [(cfg, i, T) for T in cfg.T_values for i in range(cfg.trials)]
    results: dict[tuple[int, int], float | None] = {}
    if workers == 1:
        for job in jobs:
            i, T, r = _trial_job(job)
            results[(T, i)] = r
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            for i, T, r in ex.map(_trial_job, jobs, chunksize=4):
                results[(T, i)] = r
    rows, per_trial = [], {}
    for T in cfg.T_values:
        vals = [results[(T, i)] for i in range(cfg.trials)]
        kept = np.array(sorted(v for v in vals if v is not None))
        rejected = len(vals) - kept.size
        if kept.size == 0:
            raise SweepError(f"all trials rejected at T={T}")
        mean, se = reduce_trials(kept)
        rows.append(SweepRow(T, cfg.algorithm, cfg.kernel.label(), cfg.sigma2, int(kept.size), rejected, mean, se))
        per_trial[T] = kept
    res = SweepResult(rows, per_trial=per_trial)
    res.monotone = all(b.mean_regret >= a.mean_regret for a, b in zip(rows, rows[1:]))
    if not res.monotone:
        log.warning("mean regret is not nondecreasing in T")
    if len(rows) >= 3:
        res.slope, res.intercept, res.residual = fit_scaling(rows)
    return res


def reduce_trials(values) -> tuple[float, float]:
    """Mean and standard error, summed in sorted order so trial order cannot matter."""
    v = np.sort(np.asarray(values, dtype=float))
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def fit_scaling(rows) -> tuple[float, float, float]:
    """Least-squares line through ``(log T, log mean regret)``.

    Accepts :class:`SweepRow` objects or ``(T, mean)`` pairs.  Returns slope,
    intercept and the residual sum of squares.
    """
    pts = []
    for row in rows:
        T, m = (row.T, row.mean_regret) if isinstance(row, SweepRow) else (row[0], row[1])
        if m > 0:
            pts.append((math.log(T), math.log(m)))
        else:
            warnings.warn(f"dropping nonpositive mean regret at T={T}", stacklevel=2)
    if len(pts) < 3:
        raise ValueError("need at least three rows with positive mean regret")
    x, y = np.array(pts).T
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(res[0]) if res.size else float(np.sum((A @ coef - y) ** 2))
    return float(coef[0]), float(coef[1]), resid


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.as_list())
    return buf.getvalue()


def emit_outputs(result: SweepResult, out_dir, cfg: ExperimentConfig | None = None, stem: str = "sweep") -> dict:
    """Write ``<stem>.csv``, ``<stem>.dat`` (T, mean regret) and ``<stem>.json``."""
    out = Path(out_dir)
    paths = {"csv": out / f"{stem}.csv", "dat": out / f"{stem}.dat", "json": out / f"{stem}.json"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths["csv"].write_text(_csv_text(result.rows))
        paths["dat"].write_text(
            "# T mean_regret\n" + "".join(f"{r.T} {float(r.mean_regret)!r}\n" for r in result.rows)
        )
        summary = {
            "slope": None if math.isnan(result.slope) else result.slope,
            "intercept": None if math.isnan(result.intercept) else result.intercept,
            "residual": None if math.isnan(result.residual) else result.residual,
            "monotone": result.monotone,
            "rows": len(result.rows),
        }
        if cfg is not None:
            summary["config"] = cfg.to_dict()
        paths["json"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"writing sweep outputs under {out}: {exc}") from exc
    return paths


def read_sweep_csv(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        return [
            SweepRow(
                int(r["T"]), r["algorithm"], r["kernel"], float(r["sigma2"]), int(r["trials"]),
                int(r["rejected"]), float(r["mean_regret"]), float(r["stderr_regret"]),
            )
            for r in csv.DictReader(fh)
        ]
