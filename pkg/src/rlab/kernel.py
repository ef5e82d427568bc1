"""Stationary unit-variance covariance functions on the real line."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Family", "KernelSpec", "eval_kernel", "gram", "cross_cov"]

_SQRT5 = math.sqrt(5.0)
_SQRT7 = math.sqrt(7.0)


class Family(str, enum.Enum):
    SE = "se"
    MATERN = "matern"


_ALIASES = {
    "se": Family.SE,
    "squaredexponential": Family.SE,
    "squared_exponential": Family.SE,
    "rbf": Family.SE,
    "matern": Family.MATERN,
}


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential or half-integer Matérn kernel with k(x, x) = 1.

    Parameters
    ----------
    family : Family or str
        ``"se"`` or ``"matern"``.
    lengthscale : float
        Positive lengthscale, in the units of x.
    nu : float, optional
        Matérn smoothness; only 2.5 and 3.5 are supported.
    """

    family: Family
    lengthscale: float
    nu: float | None = None

    def __post_init__(self):
        fam = self.family
        if not isinstance(fam, Family):
            key = str(fam).lower().replace("-", "").replace(" ", "")
            if key not in _ALIASES:
                raise ValueError(f"unknown kernel family {self.family!r}")
            fam = _ALIASES[key]
            object.__setattr__(self, "family", fam)
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")
        object.__setattr__(self, "lengthscale", float(self.lengthscale))
        if fam is Family.MATERN:
            if self.nu is None or float(self.nu) not in (2.5, 3.5):
                raise ValueError(f"Matern nu must be 2.5 or 3.5, got {self.nu}")
            object.__setattr__(self, "nu", float(self.nu))
        elif self.nu is not None:
            raise ValueError("nu only applies to the Matern family")

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["family"], float(d["lengthscale"]), d.get("nu"))

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "lengthscale": self.lengthscale}
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    def label(self) -> str:
        if self.family is Family.SE:
            return f"se(l={self.lengthscale:g})"
        return f"matern(nu={self.nu:g},l={self.lengthscale:g})"

    def of_distance(self, tau):
        """Covariance as a function of the lag tau (sign ignored)."""
        tau = np.asarray(tau, dtype=float)
        if self.family is Family.SE:
            ell = self.lengthscale
            return np.exp(-(tau * tau) / (2.0 * ell * ell))
        r = np.abs(tau) / self.lengthscale
        if self.nu == 2.5:
            s = _SQRT5 * r
            return (1.0 + s + s * s / 3.0) * np.exp(-s)
        s = _SQRT7 * r
        return (1.0 + s + 2.0 * s * s / 5.0 + s**3 / 15.0) * np.exp(-s)

    def __call__(self, x, xp):
        return self.of_distance(np.subtract(x, xp))


def eval_kernel(spec: KernelSpec, x: float, xp: float) -> float:
    return float(spec(x, xp))


def cross_cov(spec: KernelSpec, a, b) -> np.ndarray:
    """Matrix ``[k(a_i, b_j)]``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    return spec.of_distance(a[:, None] - b[None, :])


def gram(spec: KernelSpec, points) -> np.ndarray:
    K = cross_cov(spec, points, points)
    np.fill_diagonal(K, 1.0)
    return K
