"""Regret against horizon, on a log-log scale.

A small Monte Carlo sweep: for each horizon T the same certified truths are
replayed and the mean cumulative regret is recorded.  The fitted slope says
how regret grows (1 means linear, 0.5 means square-root).  Outputs land in
``sweep_out/`` as CSV, a two-column ``.dat`` file for gnuplot and a JSON summary.

    python3 demos/02_scaling_sweep.py
"""

from rlab.harness import ExperimentConfig, emit_outputs, run_sweep
from rlab.kernel import KernelSpec

for algorithm in ("uniform", "gp-ucb", "epoch-elim"):
    cfg = ExperimentConfig(
        kernel=KernelSpec("se", 0.2),
        sigma2=1.0,
        T_values=[256, 512, 1024, 2048],
        trials=10,
        seed=0,
        algorithm=algorithm,
    )
    result = run_sweep(cfg)
    emit_outputs(result, "sweep_out", cfg, stem=algorithm)
    means = "  ".join(f"{r.T}:{r.mean_regret:8.1f}" for r in result.rows)
    print(f"{algorithm:>10}  slope {result.slope:5.3f}   {means}")
