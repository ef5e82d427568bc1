"""Regularity constants of a sampled function, and a clause-by-clause check of them."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ClassificationError
from .gp import GroundTruth

__all__ = [
    "Case",
    "AssumptionConstants",
    "CertificationReport",
    "estimate_constants",
    "certify_assumptions",
    "local_maxima",
    "derivatives",
]

SAFETY = 1.25
MAX_RHO = 0.49


class Case(str, enum.Enum):
    ENDPOINT_LINEAR = "endpoint_linear"
    INTERIOR_QUADRATIC = "interior_quadratic"


@dataclass(frozen=True)
class AssumptionConstants:
    """Bounds ``c0, c1, c2`` on |f|, |f'|, |f''|, the peak gap ``eps``, the
    local window ``rho0`` and the sandwich constants around the maximizer.

    Constants that do not apply to ``case`` are NaN.
    """

    c0: float
    c1: float
    c2: float
    eps: float
    rho0: float
    c1_lo: float
    c1_hi: float
    c2_lo: float
    c2_hi: float
    c2p_lo: float
    c2p_hi: float
    case: Case
    x_star: float = math.nan

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case"] = self.case.value
        return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "AssumptionConstants":
        return cls(**{k: (math.nan if v is None else v) for k, v in d.items()})

    def replace(self, **kw) -> "AssumptionConstants":
        d = asdict(self)
        d.update(kw)
        return AssumptionConstants(**d)


def derivatives(truth: GroundTruth) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference first and second derivatives on the grid."""
    f, h = truth.values, truth.h
    d1 = np.gradient(f, h, edge_order=2)
    d2 = np.empty_like(f)
    d2[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (h * h)
    d2[0], d2[-1] = d2[1], d2[-2]
    return d1, d2


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of grid local maxima; an endpoint counts when its neighbor is lower."""
    v = values
    inner = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
    out = list(inner)
    if v[0] > v[1]:
        out.insert(0, 0)
    if v[-1] > v[-2]:
        out.append(v.size - 1)
    return np.asarray(out, dtype=np.int64)


def _basin_cells(values: np.ndarray, i: int, max_cells: int) -> int:
    """Largest m <= max_cells such that values strictly decrease for m cells on each side of i."""
    n = values.size
    m = 0
    while m < max_cells:
        lo, hi = i - m - 1, i + m + 1
        if lo < 0 or hi >= n:
            break
        if not (values[lo] < values[lo + 1] and values[hi] < values[hi - 1]):
            break
        m += 1
    return m


def _one_sided_cells(values: np.ndarray, i: int, step: int, max_cells: int) -> int:
    n, m = values.size, 0
    while m < max_cells:
        j = i + step * (m + 1)
        if j < 0 or j >= n or not values[j] < values[j - step]:
            break
        m += 1
    return m


def _taylor_general(truth: GroundTruth, d1: np.ndarray, max_cells: int) -> tuple[float, float]:
    f = truth.values
    h = truth.h
    lo, hi = math.inf, -math.inf
    for m in range(1, max_cells + 1):
        xi = m * h
        fwd = (f[m:] - f[:-m] - xi * d1[:-m]) / (xi * xi)
        bwd = (f[:-m] - f[m:] + xi * d1[m:]) / (xi * xi)
        lo = min(lo, fwd.min(), bwd.min())
        hi = max(hi, fwd.max(), bwd.max())
    return lo, hi


def estimate_constants(
    truth: GroundTruth, safety: float = SAFETY, bounds: tuple[float, float] | None = None
) -> AssumptionConstants:
    """Fit the regularity constants of ``truth`` from its grid table.

    ``c0, c1, c2`` are the grid maxima of |f| and of its first/second
    differences, inflated by ``safety``.  ``rho0`` is the widest window
    (capped at 0.49 and strictly inside the domain) over which f decreases
    monotonically away from its grid maximizer; the sandwich constants are the
    extreme difference quotients over that window.

    ``bounds`` (default: the domain) is the interval the window around an
    interior maximizer must stay strictly inside.
    """
    f, h, grid = truth.values, truth.h, truth.grid
    lo_d, hi_d = truth.domain
    width = hi_d - lo_d
    d1, d2 = derivatives(truth)
    c0 = float(np.abs(f).max()) * safety
    c1 = float(np.abs(d1).max()) * safety
    c2 = float(np.abs(d2).max()) * safety

    i = int(np.argmax(f))
    fmax = float(f[i])
    maxima = local_maxima(f)
    others = maxima[maxima != i]
    eps = float(fmax - f[others].max()) if others.size else c0

    cap_cells = int(math.floor(MAX_RHO * width / h + 1e-9))
    nan = math.nan
    if i in (0, f.size - 1):
        step = 1 if i == 0 else -1
        m = _one_sided_cells(f, i, step, cap_cells)
        if m == 0:
            raise ClassificationError("endpoint maximizer without a decreasing neighbour")
        rho0 = m * h
        xi = np.arange(1, m + 1) * h
        ratio = (fmax - f[i + step * np.arange(1, m + 1)]) / xi
        c1_lo, c1_hi = float(ratio.min()), float(ratio.max())
        if not c1_lo > 0:
            raise ClassificationError("locally linear lower constant is not positive")
        c2p_lo, c2p_hi = _taylor_general(truth, d1, m)
        return AssumptionConstants(
            c0, c1, c2, eps, rho0, c1_lo, c1_hi, nan, nan, c2p_lo, c2p_hi,
            Case.ENDPOINT_LINEAR, float(grid[i]),
        )

    # strictly inside: x* must satisfy rho0 < dist(x*, boundary)
    b_lo, b_hi = bounds if bounds is not None else (lo_d, hi_d)
    edge_cells = int(math.floor(min(grid[i] - b_lo, b_hi - grid[i]) / h + 1e-9)) - 1
    m = _basin_cells(f, i, min(cap_cells, edge_cells))
    if m == 0:
        raise ClassificationError("interior maximizer with no locally quadratic window")
    rho0 = m * h
    offs = np.arange(1, m + 1)
    xi2 = (offs * h) ** 2
    ratio = np.concatenate([(fmax - f[i + offs]) / xi2, (fmax - f[i - offs]) / xi2])
    c2_lo, c2_hi = float(ratio.min()), float(ratio.max())
    c2p_lo, c2p_hi = _taylor_general(truth, d1, m)
    return AssumptionConstants(
        c0, c1, c2, eps, rho0, nan, nan, c2_lo, c2_hi, c2p_lo, c2p_hi,
        Case.INTERIOR_QUADRATIC, float(grid[i]),
    )


@dataclass(frozen=True)
class CertificationReport:
    unique_maximizer: bool
    epsilon_gap: bool
    bounded: bool
    local_shape: bool
    taylor_general: bool
    interior: bool
    case: Case

    @property
    def upper_bound_ok(self) -> bool:
        """Clauses needed by the epoch-elimination guarantee."""
        return self.unique_maximizer and self.epsilon_gap and self.bounded and self.local_shape

    @property
    def lower_bound_ok(self) -> bool:
        """Clauses needed by the shifted-pair construction."""
        return (
            self.unique_maximizer and self.epsilon_gap and self.bounded
            and self.taylor_general and self.interior
        )

    @property
    def all_passed(self) -> bool:
        return self.upper_bound_ok and self.taylor_general and (
            self.interior or self.case is Case.ENDPOINT_LINEAR
        )

    def failures(self) -> list[str]:
        names = ["unique_maximizer", "epsilon_gap", "bounded", "local_shape", "taylor_general", "interior"]
        return [n for n in names if not getattr(self, n)]

    def as_dict(self) -> dict:
        d = {n: getattr(self, n) for n in
             ["unique_maximizer", "epsilon_gap", "bounded", "local_shape", "taylor_general", "interior"]}
        d["case"] = self.case.value
        d["upper_bound_ok"] = self.upper_bound_ok
        d["lower_bound_ok"] = self.lower_bound_ok
        return d


def _rtol(scale: float) -> float:
    return 1e-9 * max(1.0, abs(scale))


def certify_assumptions(
    truth: GroundTruth, consts: AssumptionConstants, n_pairs: int = 10_000, seed: int = 0
) -> CertificationReport:
    """Check every regularity clause on the grid table of ``truth``."""
    f, h, grid = truth.values, truth.h, truth.grid
    n = f.size
    d1, d2 = derivatives(truth)
    i = int(np.argmax(f))
    fmax = float(f[i])
    xstar = float(grid[i])
    rho_cells = int(round(consts.rho0 / h)) if consts.rho0 > 0 else 0
    tol = _rtol(fmax)

    # uniqueness: nothing outside a small ball around x* reaches f(x*)
    ball = max(rho_cells, 2)
    near_top = np.abs(f - fmax) <= max(consts.c2 * h * h, 1e-12)
    idx = np.flatnonzero(near_top)
    unique = bool(np.all(np.abs(idx - i) <= ball))

    maxima = local_maxima(f)
    others = maxima[maxima != i]
    eps_ok = consts.eps > 0 and bool(np.all(fmax >= f[others] + consts.eps - tol))

    bounded = (
        np.abs(f).max() <= consts.c0 + tol
        and np.abs(d1).max() <= consts.c1 + _rtol(consts.c1)
        and np.abs(d2).max() <= consts.c2 + _rtol(consts.c2)
    )

    lo_d, hi_d = truth.domain
    if consts.case is Case.ENDPOINT_LINEAR:
        at_end = i in (0, n - 1)
        step = 1 if i == 0 else -1
        m = min(rho_cells, n - 1)
        drop = fmax - f[i + step * np.arange(1, m + 1)]
        xi = np.arange(1, m + 1) * h
        shape = at_end and consts.c1_lo > 0 and bool(
            np.all(drop >= consts.c1_lo * xi - tol) and np.all(drop <= consts.c1_hi * xi + tol)
        )
        interior = False
    else:
        interior = bool(lo_d + consts.rho0 < xstar < hi_d - consts.rho0)
        offs = np.arange(-rho_cells, rho_cells + 1)
        offs = offs[(i + offs >= 0) & (i + offs < n)]
        drop = fmax - f[i + offs]
        xi2 = (offs * h) ** 2
        shape = interior and consts.c2_lo > 0 and bool(
            np.all(drop >= consts.c2_lo * xi2 - tol) and np.all(drop <= consts.c2_hi * xi2 + tol)
        )

    rng = np.random.default_rng(seed)
    if rho_cells > 0:
        xs = rng.integers(0, n, n_pairs)
        offs = rng.integers(-rho_cells, rho_cells + 1, n_pairs)
        ok = (xs + offs >= 0) & (xs + offs < n) & (offs != 0)
        xs, offs = xs[ok], offs[ok]
        xi = offs * h
        rem = f[xs + offs] - f[xs] - xi * d1[xs]
        taylor = bool(
            np.all(rem >= consts.c2p_lo * xi * xi - tol) and np.all(rem <= consts.c2p_hi * xi * xi + tol)
        )
    else:
        taylor = False

    return CertificationReport(unique, bool(eps_ok), bool(bounded), bool(shape), taylor, interior, consts.case)
