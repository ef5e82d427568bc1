"""Command-line entry point: ``rlab run|sweep|lowerbound|verify-assumptions``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .baselines import run_gp_ucb, run_uniform, subsample_grid, uniform_grid
from .constants import certify_assumptions, estimate_constants
from .epoch_elim import make_domain_grid, run_epoch_elim
from .errors import ClassificationError, ConfigError, NumericalError, ParameterError, RlabError, SweepError
from .gp import NoisyOracle, sample_prior_path
from .harness import ExperimentConfig, emit_outputs, run_sweep
from .kernel import KernelSpec
from .lowerbound import calibrate_c_tilde, check_lemma5, run_hypothesis_experiment

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def parse_kernel(text: str) -> KernelSpec:
    """``se:0.2``, ``matern:0.2:2.5`` or a JSON object with family/lengthscale/nu."""
    try:
        if text.lstrip().startswith("{"):
            return KernelSpec.from_dict(json.loads(text))
        parts = text.split(":")
        nu = float(parts[2]) if len(parts) > 2 else None
        return KernelSpec(parts[0], float(parts[1]), nu)
    except (ValueError, KeyError, IndexError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad kernel {text!r}: {exc}") from exc


def cmd_run(args) -> int:
    spec = parse_kernel(args.kernel)
    truth = sample_prior_path(spec, (0.0, 1.0), args.grid_size, args.seed)
    consts = estimate_constants(truth)
    oracle = NoisyOracle(truth, args.sigma2, seed=[args.seed, args.T], budget=args.T)
    if args.algo == "epoch-elim":
        run = run_epoch_elim(oracle, consts, args.T, args.sigma2, spec)
    elif args.algo == "gp-ucb":
        grid = subsample_grid(make_domain_grid(consts.c1, args.T), args.ucb_candidates)
        run = run_gp_ucb(oracle, spec, grid, args.T, args.sigma2)
    else:
        run = run_uniform(oracle, uniform_grid(args.uniform_resolution), args.T)
    oracle.trace.to_csv(args.out)
    meta = {
        "algorithm": args.algo,
        "kernel": spec.to_dict(),
        "T": args.T,
        "sigma2": args.sigma2,
        "seed": args.seed,
        "constants": consts.to_dict(),
        "cumulative_regret": run.cumulative_regret,
    }
    with open(str(args.out) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2)
    if args.epochs:
        with open(args.epochs, "w") as fh:
            json.dump([e.summary() for e in run.epochs], fh, indent=2)
    print(f"{args.algo}: T={args.T} cumulative regret {run.cumulative_regret:.6g}")
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    result = run_sweep(cfg, workers=args.workers)
    paths = emit_outputs(result, args.out, cfg)
    for row in result.rows:
        print(f"T={row.T:>7d} mean={row.mean_regret:.6g} se={row.stderr_regret:.3g} rejected={row.rejected}")
    print(f"slope={result.slope:.4f} -> {paths['csv']}")
    return 0


def cmd_lowerbound(args) -> int:
    spec = parse_kernel(args.kernel)
    c_tilde = args.c_tilde
    if c_tilde is None:
        c_tilde = calibrate_c_tilde(spec, args.sigma2, args.T, args.algo, grid_size=args.grid_size)
    rep = run_hypothesis_experiment(
        spec, args.sigma2, args.T, args.trials, args.algo, c_tilde, args.grid_size, args.seed
    )
    out = rep.summary()
    out["lemma5"] = check_lemma5(rep).as_dict()
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=2)
    print(json.dumps(out, indent=2))
    return 0


def cmd_verify(args) -> int:
    spec = parse_kernel(args.kernel)
    failed = 0
    for k in range(args.seeds):
        seed = args.seed ^ k
        truth = sample_prior_path(spec, (0.0, 1.0), args.grid_size, seed)
        try:
            consts = estimate_constants(truth)
        except ClassificationError as exc:
            print(f"seed {seed}: classification failed ({exc})")
            failed += 1
            continue
        rep = certify_assumptions(truth, consts, seed=seed)
        status = "ok" if rep.upper_bound_ok else "EXCLUDED"
        failed += not rep.upper_bound_ok
        print(f"seed {seed}: {status} case={rep.case.value} x*={consts.x_star:.4f} "
              f"rho0={consts.rho0:.4f} fails={rep.failures()}")
    print(f"excluded {failed}/{args.seeds} ({failed / max(args.seeds, 1):.3f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rlab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one algorithm on one GP draw and write its trace")
    r.add_argument("--algo", choices=["epoch-elim", "gp-ucb", "uniform"], default="epoch-elim")
    r.add_argument("--kernel", default="se:0.2")
    r.add_argument("--T", type=int, required=True)
    r.add_argument("--sigma2", type=float, default=1.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--grid-size", type=int, default=2049)
    r.add_argument("--ucb-candidates", type=int, default=513)
    r.add_argument("--uniform-resolution", type=int, default=256)
    r.add_argument("--out", required=True)
    r.add_argument("--epochs", help="optional JSON file for epoch summaries")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="Monte Carlo regret sweep over T")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    lb = sub.add_parser("lowerbound", help="shifted-pair hypothesis-test experiment")
    lb.add_argument("--algo", choices=["epoch-elim", "gp-ucb", "uniform"], default="epoch-elim")
    lb.add_argument("--kernel", default="se:0.2")
    lb.add_argument("--T", type=int, required=True)
    lb.add_argument("--sigma2", type=float, default=1.0)
    lb.add_argument("--trials", type=int, default=100)
    lb.add_argument("--c-tilde", type=float, default=None)
    lb.add_argument("--seed", type=int, default=0)
    lb.add_argument("--grid-size", type=int, default=2049)
    lb.add_argument("--out", required=True)
    lb.set_defaults(func=cmd_lowerbound)

    v = sub.add_parser("verify-assumptions", help="certify regularity of GP draws")
    v.add_argument("--kernel", default="se:0.2")
    v.add_argument("--seeds", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--grid-size", type=int, default=2049)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SweepError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
