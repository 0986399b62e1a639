"""Shared domain types.

Value objects are immutable and safe to move between threads.  Bulk block
data lives in a struct-of-arrays container (`Blocks`) because harvests run to
1e5+ blocks; `BlockSample` is the per-block view used at API boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "BlockSample",
    "Blocks",
    "MomentEstimate",
    "BlockEstimates",
    "RateSeries",
    "RateFit",
]


@dataclass(frozen=True)
class BlockSample:
    """One regeneration block: step count, increment sum, absolute-increment sum."""

    length: int
    sum: float
    abs_sum: float

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"block length must be >= 1, got {self.length}")
        if self.abs_sum < 0:
            raise ValueError("abs_sum must be nonnegative")
        # allow a whisper of float slack from kernel accumulation
        if self.abs_sum < abs(self.sum) - 1e-9 * max(1.0, abs(self.sum)):
            raise ValueError(
                f"abs_sum ({self.abs_sum}) must dominate |sum| ({abs(self.sum)})"
            )


class Blocks:
    """Struct-of-arrays container for harvested blocks.

    `stream_id` records which deterministic substream produced each block;
    it doubles as the grouping used for jackknife standard errors.
    """

    def __init__(self, lengths, sums, abs_sums, stream_ids=None):
        self.lengths = np.asarray(lengths, dtype=np.int64)
        self.sums = np.asarray(sums, dtype=np.float64)
        self.abs_sums = np.asarray(abs_sums, dtype=np.float64)
        n = self.lengths.shape[0]
        if self.sums.shape[0] != n or self.abs_sums.shape[0] != n:
            raise ValueError("lengths, sums, abs_sums must have equal length")
        if stream_ids is None:
            self.stream_ids = np.zeros(n, dtype=np.int64)
        else:
            self.stream_ids = np.asarray(stream_ids, dtype=np.int64)
            if self.stream_ids.shape[0] != n:
                raise ValueError("stream_ids must match block count")
        self.validate()

    def validate(self):
        if np.any(self.lengths < 1):
            raise ValueError("every block length must be >= 1")
        if np.any(self.abs_sums < 0):
            raise ValueError("abs_sum must be nonnegative")
        slack = 1e-9 * np.maximum(1.0, np.abs(self.sums))
        if np.any(self.abs_sums < np.abs(self.sums) - slack):
            raise ValueError("abs_sum must dominate |sum| in every block")

    @classmethod
    def from_samples(cls, samples: Iterable[BlockSample], stream_ids=None) -> "Blocks":
        samples = list(samples)
        return cls(
            [b.length for b in samples],
            [b.sum for b in samples],
            [b.abs_sum for b in samples],
            stream_ids,
        )

    @classmethod
    def concatenate(cls, parts: Sequence["Blocks"]) -> "Blocks":
        return cls(
            np.concatenate([p.lengths for p in parts]),
            np.concatenate([p.sums for p in parts]),
            np.concatenate([p.abs_sums for p in parts]),
            np.concatenate([p.stream_ids for p in parts]),
        )

    def __len__(self) -> int:
        return int(self.lengths.shape[0])

    def __getitem__(self, i: int) -> BlockSample:
        return BlockSample(int(self.lengths[i]), float(self.sums[i]), float(self.abs_sums[i]))

    def __iter__(self) -> Iterator[BlockSample]:
        for i in range(len(self)):
            yield self[i]

    def scaled(self, c: float) -> "Blocks":
        """Blocks with every increment sum multiplied by c (lengths untouched)."""
        return Blocks(self.lengths, c * self.sums, abs(c) * self.abs_sums, self.stream_ids)

    def permuted(self, order) -> "Blocks":
        order = np.asarray(order)
        return Blocks(
            self.lengths[order], self.sums[order], self.abs_sums[order], self.stream_ids[order]
        )


@dataclass(frozen=True)
class MomentEstimate:
    """A point estimate with its jackknife standard error."""

    order: float
    value: float
    se: float


@dataclass(frozen=True)
class BlockEstimates:
    """Estimated drift, CLT variance, mean block length and block covariance.

    `cov_a` is the 2x2 covariance of (sum - length*mu_hat, length) stored as
    (a11, a12, a22); its top-left entry satisfies a11 == sigma2_hat * tau_bar
    up to float rounding by construction of the estimators.
    """

    mu_hat: float
    sigma2_hat: float
    tau_bar: float
    cov_a: tuple[float, float, float]
    n_blocks: int
    delta: float
    moment_diag: dict[str, MomentEstimate] = field(default_factory=dict)
    mu_se: float = float("nan")
    tau_bar_se: float = float("nan")
    sigma2_se: float = float("nan")
    degenerate: bool = False

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be positive")
        if self.sigma2_hat < 0:
            raise ValueError("sigma2_hat must be nonnegative")
        if self.tau_bar < 1:
            raise ValueError("tau_bar must be >= 1")

    @property
    def sigma_hat(self) -> float:
        return math.sqrt(self.sigma2_hat)

    @property
    def alpha2_hat(self) -> float:
        """Top-left entry of cov_a (the squared centered-block scale)."""
        return self.cov_a[0]

    def cov_matrix(self):
        """The block covariance as a typed 2x2 matrix (may be semi-definite)."""
        from .gaussian import CovarianceMatrix2

        return CovarianceMatrix2(*self.cov_a)

    def to_jsonable(self) -> dict:
        return {
            "mu_hat": self.mu_hat,
            "sigma2_hat": self.sigma2_hat,
            "tau_bar": self.tau_bar,
            "cov_a": {"a11": self.cov_a[0], "a12": self.cov_a[1], "a22": self.cov_a[2]},
            "n_blocks": self.n_blocks,
            "delta": self.delta,
            "moment_diag": {
                k: {"order": m.order, "value": m.value, "se": m.se}
                for k, m in self.moment_diag.items()
            },
            "mu_se": self.mu_se,
            "tau_bar_se": self.tau_bar_se,
            "sigma2_se": self.sigma2_se,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class RateSeries:
    """(n, Kolmogorov distance) pairs for the decay-exponent check."""

    points: tuple[tuple[int, float], ...]
    delta: float
    dkw_bounds: tuple[float, ...] = ()
    mode: str = "exact"
    n_paths: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        ns = [n for n, _ in self.points]
        if any(b >= a for a, b in zip(ns[1:], ns)):
            raise ValueError("n values must be strictly increasing")
        for _, d in self.points:
            if not 0 <= d <= 1:
                raise ValueError("Kolmogorov distances must lie in [0, 1]")

    @property
    def ns(self) -> np.ndarray:
        return np.array([n for n, _ in self.points], dtype=np.int64)

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for _, d in self.points], dtype=np.float64)


@dataclass(frozen=True)
class RateFit:
    """Log-log OLS fit of distance against n, plus the bounded-constant check."""

    slope: float
    intercept: float
    r_squared: float
    n_range: tuple[int, int]
    sup_constant: float

    def __post_init__(self):
        if not 0 <= self.r_squared <= 1 + 1e-12:
            raise ValueError("r_squared must lie in [0, 1]")

    def to_jsonable(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r_squared,
            "n_min": self.n_range[0],
            "n_max": self.n_range[1],
            "sup_constant": self.sup_constant,
        }
