"""One GP draw, three optimizers.

Draws a path from a squared-exponential prior, fits and checks its regularity
constants, then runs epoch elimination, GP-UCB and round-robin sampling
against the same noisy oracle settings and compares their cumulative regret.

    python3 demos/01_single_run.py
"""

from rlab import KernelSpec, NoisyOracle, certify_assumptions, estimate_constants, sample_prior_path
from rlab.baselines import run_gp_ucb, run_uniform, subsample_grid, uniform_grid
from rlab.epoch_elim import make_domain_grid, run_epoch_elim

kernel = KernelSpec("se", 0.2)
T, sigma2, seed = 4096, 0.25, 3

truth = sample_prior_path(kernel, (0.0, 1.0), 2049, seed)
consts = estimate_constants(truth)
report = certify_assumptions(truth, consts, seed=seed)
print(f"maximizer x* = {truth.maximizer:.4f}, f(x*) = {truth.max_value:.4f}")
print(f"case {consts.case.value}, c0={consts.c0:.3f} c1={consts.c1:.3f} c2={consts.c2:.3f} rho0={consts.rho0:.4f}")
print(f"usable for the upper bound: {report.upper_bound_ok}  failures: {report.failures()}")

oracle = NoisyOracle(truth, sigma2, seed=[seed, T], budget=T)
run = run_epoch_elim(oracle, consts, T, sigma2, kernel)
print(f"\nepoch-elim regret {oracle.trace.total_regret:9.2f}")
for e in run.epochs:
    print(f"  epoch {e.i}: eta={e.eta:.4f} |M|={e.n_candidates} |Ls|={e.n_samples} K={e.K} "
          f"lipschitz={e.lipschitz_case} width={e.w:.3f}")

oracle = NoisyOracle(truth, sigma2, seed=[seed, T], budget=T)
run_gp_ucb(oracle, kernel, subsample_grid(make_domain_grid(consts.c1, T), 513), T, sigma2)
print(f"gp-ucb     regret {oracle.trace.total_regret:9.2f}")

oracle = NoisyOracle(truth, sigma2, seed=[seed, T], budget=T)
run_uniform(oracle, uniform_grid(), T)
print(f"uniform    regret {oracle.trace.total_regret:9.2f}")
