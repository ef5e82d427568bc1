"""One-dimensional Bayesian-optimization regret laboratory."""

from .constants import AssumptionConstants, Case, certify_assumptions, estimate_constants
from .epoch_elim import run_epoch_elim, run_with_doubling
from .gp import GroundTruth, NoisyOracle, PosteriorState, RegretTrace, sample_prior_path
from .kernel import KernelSpec, gram

__version__ = "0.1.0"

__all__ = [
    "AssumptionConstants",
    "Case",
    "GroundTruth",
    "KernelSpec",
    "NoisyOracle",
    "PosteriorState",
    "RegretTrace",
    "certify_assumptions",
    "estimate_constants",
    "gram",
    "run_epoch_elim",
    "run_with_doubling",
    "sample_prior_path",
]
