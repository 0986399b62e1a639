"""Standard normal CDF, centered bivariate Gaussian density, and the
half-plane kernel psi obtained by integrating the density over t <= x in the
first coordinate.

The kernel is evaluated millions of times in lattice sweeps, so it uses the
Gaussian-conditioning closed form; quadrature against the density is kept to
the test suite as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateCovariance

__all__ = ["CovarianceMatrix2", "phi_cdf", "gamma_density", "psi_kernel", "psi_x_limit"]

_DEGENERACY_EPS = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix2:
    """Symmetric 2x2 covariance matrix stored as (s11, s12, s22)."""

    s11: float
    s12: float
    s22: float

    def __post_init__(self):
        if self.s11 < 0 or self.s22 < 0:
            raise ValueError("diagonal entries must be nonnegative")
        if self.det < -_DEGENERACY_EPS:
            raise ValueError("matrix must be positive semi-definite")

    @property
    def det(self) -> float:
        return self.s11 * self.s22 - self.s12 * self.s12

    @property
    def strictly_positive_definite(self) -> bool:
        return self.det > _DEGENERACY_EPS and self.s22 > _DEGENERACY_EPS

    def require_positive_definite(self):
        if not self.strictly_positive_definite:
            raise DegenerateCovariance(
                f"covariance {self.as_tuple()} is numerically degenerate "
                f"(det={self.det:.3e}); a one-dimensional comparison path is required"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s11, self.s12, self.s22)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    @classmethod
    def from_matrix(cls, m) -> "CovarianceMatrix2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("expected a 2x2 matrix")
        if abs(m[0, 1] - m[1, 0]) > 1e-9 * max(1.0, abs(m[0, 1])):
            raise ValueError("matrix must be symmetric")
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


def phi_cdf(t):
    """Standard normal distribution function, accurate to ~1e-16 absolute.

    Scalar inputs go through erfc; arrays use the equivalent scipy ndtr.
    """
    if np.ndim(t) == 0:
        return 0.5 * math.erfc(-float(t) / math.sqrt(2.0))
    return ndtr(np.asarray(t, dtype=float))


def gamma_density(a: CovarianceMatrix2, x, y):
    """Centered bivariate normal density with covariance `a` at (x, y)."""
    a.require_positive_definite()
    det = a.det
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    quad = (a.s22 * x * x - 2.0 * a.s12 * x * y + a.s11 * y * y) / det
    out = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    return float(out) if out.ndim == 0 else out


def psi_kernel(a: CovarianceMatrix2, x, y):
    """Integral of gamma_density(a, t, y) over t in (-inf, x].

    Closed form through conditioning: the y-marginal density times the
    conditional normal CDF with mean (s12/s22) y and variance s11 - s12^2/s22.
    """
    a.require_positive_definite()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cond_sd = math.sqrt(a.s11 - a.s12 * a.s12 / a.s22)
    marginal = np.exp(-0.5 * y * y / a.s22) / math.sqrt(2.0 * math.pi * a.s22)
    out = marginal * ndtr((x - (a.s12 / a.s22) * y) / cond_sd)
    return float(out) if out.ndim == 0 else out


def psi_x_limit(a: CovarianceMatrix2, y):
    """x -> +inf limit of psi_kernel: the second-coordinate marginal density."""
    a.require_positive_definite()
    y = np.asarray(y, dtype=float)
    out = np.exp(-0.5 * y * y / a.s22) / math.sqrt(2.0 * math.pi * a.s22)
    return float(out) if out.ndim == 0 else out
