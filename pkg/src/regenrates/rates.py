"""Kolmogorov distances against the normal limit and decay-rate fitting.

Distances are exact for step-function CDFs (both one-sided limits at every
jump) and classical two-sided statistics for Monte Carlo samples.  The rate
sweep produces (n, distance) series whose log-log slope is compared with the
predicted exponent -delta/2, alongside the bounded-constant statistic
sup_n n^{delta/2} * distance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateSigma
from .gaussian import phi_cdf
from .rng import SeedSpec, substream
from .types import BlockEstimates, RateFit, RateSeries
from .models.base import ProcessModel

__all__ = [
    "StepCDF",
    "kolmogorov_distance",
    "dkw_bound",
    "DistanceResult",
    "regen_clt_distance",
    "assemble_values",
    "rate_sweep",
    "fit_rate",
]


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous step CDF: F(x) = cdf[i] for xs[i] <= x < xs[i+1]."""

    xs: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        if len(self.xs) == 0:
            raise ValueError("empty step function")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("jump points must be strictly increasing")
        if np.any(np.diff(self.cdf) < -1e-15) or abs(self.cdf[-1] - 1.0) > 1e-9:
            raise ValueError("cdf values must be nondecreasing and end at 1")

    @classmethod
    def from_pmf(cls, values, probs) -> "StepCDF":
        values = np.asarray(values, dtype=np.float64)
        probs = np.asarray(probs, dtype=np.float64)
        order = np.argsort(values)
        return cls(values[order], np.cumsum(probs[order]))

    def standardized(self, center: float, scale: float) -> "StepCDF":
        return StepCDF((self.xs - center) / scale, self.cdf)


def kolmogorov_distance(data, reference: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact sup-distance between a sample ECDF or step CDF and `reference`.

    Both one-sided limits are evaluated at every jump; for samples this is the
    classical two-sided statistic.
    """
    if isinstance(data, StepCDF):
        ref = reference(data.xs)
        before = np.concatenate(([0.0], data.cdf[:-1]))
        return float(np.max(np.maximum(np.abs(before - ref), np.abs(data.cdf - ref))))
    sample = np.sort(np.asarray(data, dtype=np.float64))
    if sample.size == 0:
        raise ValueError("empty sample")
    n = sample.size
    ref = reference(sample)
    grid = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(np.abs(grid - ref), np.abs(grid - 1.0 / n - ref))))


def dkw_bound(n_paths: int, beta: float = 0.05) -> float:
    """Dvoretzky-Kiefer-Wolfowitz envelope at confidence 1 - beta."""
    return math.sqrt(math.log(2.0 / beta) / (2.0 * n_paths))


@dataclass(frozen=True)
class DistanceResult:
    n: int
    distance: float
    mode: str
    n_paths: Optional[int] = None
    dkw: Optional[float] = None
    snap_offset: float = 0.0


def assemble_values(
    model: ProcessModel,
    n: int,
    count: int,
    stream: np.random.Generator,
    include_first: bool = False,
) -> tuple[np.ndarray, float]:
    """Process values at index n assembled from concatenated blocks.

    The process restarted at a regeneration is exactly the concatenation of
    i.i.d. blocks, so reading the value off the concatenation (truncating the
    final partial block with its within-block increments) is exact in law.
    Models without block paths get n snapped to the nearest block boundary;
    the mean absolute snap offset is returned for reporting.
    """
    values = np.empty(count)
    offsets = np.zeros(count)
    for i in range(count):
        t = 0
        total = 0.0
        first = include_first
        while True:
            if first:
                drawn = model.first_block_with_path(stream)
                block, incs = drawn if drawn is not None else (model.first_block(stream), None)
            else:
                drawn = model.next_block_with_path(stream)
                block, incs = drawn if drawn is not None else (model.next_block(stream), None)
            first = False
            if t + block.length < n:
                t += block.length
                total += block.sum
                continue
            if t + block.length == n:
                values[i] = total + block.sum
                break
            if incs is not None:
                values[i] = total + float(incs[: n - t].sum())
            else:
                # snap to the nearer boundary of the straddling block
                if (n - t) <= (t + block.length - n) and t > 0:
                    values[i] = total
                    offsets[i] = n - t
                else:
                    values[i] = total + block.sum
                    offsets[i] = t + block.length - n
            break
    return values, float(np.abs(offsets).mean())


def regen_clt_distance(
    model: ProcessModel,
    est: BlockEstimates,
    n: int,
    mode: str = "exact",
    *,
    n_paths: Optional[int] = None,
    stream: Optional[np.random.Generator] = None,
    include_first: bool = False,
    center: Optional[float] = None,
) -> DistanceResult:
    """Kolmogorov distance of (X_n - n mu)/(sigma sqrt(n)) from the normal CDF.

    `center` overrides the estimated drift with a closed-form value; the scale
    always comes from the estimates.  Exact mode needs a model that exposes an
    exact value distribution; Monte Carlo mode prefers direct simulation and
    falls back to block assembly.
    """
    if est.degenerate or not est.sigma2_hat > 0:
        raise DegenerateSigma("sigma^2 estimate is degenerate; refusing the comparison")
    mu = est.mu_hat if center is None else float(center)
    scale = est.sigma_hat * math.sqrt(n)
    if mode == "exact":
        dist = model.exact_value_distribution(n, include_first)
        if dist is None:
            raise ValueError("model does not expose an exact value distribution")
        step = StepCDF.from_pmf(*dist).standardized(n * mu, scale)
        return DistanceResult(n=n, distance=kolmogorov_distance(step, phi_cdf), mode="exact")
    if mode in ("monte_carlo", "monte-carlo"):
        if n_paths is None or n_paths < 1:
            raise ValueError("monte_carlo mode requires n_paths")
        if stream is None:
            raise ValueError("monte_carlo mode requires a stream")
        values = model.simulate_values(n, n_paths, stream, include_first)
        snap = 0.0
        if values is None:
            values, snap = assemble_values(model, n, n_paths, stream, include_first)
        sample = (np.asarray(values) - n * mu) / scale
        return DistanceResult(
            n=n,
            distance=kolmogorov_distance(sample, phi_cdf),
            mode="monte_carlo",
            n_paths=n_paths,
            dkw=dkw_bound(n_paths),
            snap_offset=snap,
        )
    raise ValueError(f"unknown mode {mode!r}")


def rate_sweep(
    model: ProcessModel,
    est: BlockEstimates,
    ns: Sequence[int],
    mode: str = "exact",
    *,
    n_paths: Optional[int] = None,
    seed: Optional[SeedSpec] = None,
    include_first: bool = False,
    center: Optional[float] = None,
) -> RateSeries:
    """Distance series over a strictly increasing list of at least 3 n values."""
    ns = list(ns)
    if len(ns) < 3:
        raise ValueError("a rate sweep needs at least 3 n values")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n values must be strictly increasing")
    points = []
    dkws = []
    for i, n in enumerate(ns):
        stream = substream(seed, i) if seed is not None else None
        res = regen_clt_distance(
            model, est, n, mode,
            n_paths=n_paths, stream=stream, include_first=include_first, center=center,
        )
        points.append((n, res.distance))
        dkws.append(res.dkw if res.dkw is not None else 0.0)
    return RateSeries(
        points=tuple(points),
        delta=est.delta,
        dkw_bounds=tuple(dkws),
        mode="exact" if mode == "exact" else "monte_carlo",
        n_paths=n_paths,
    )


def fit_rate(series: RateSeries) -> RateFit:
    """OLS of log(distance) on log(n) plus sup_n n^{delta/2} * distance.

    Zero distances cannot enter the log fit; they are dropped with a warning
    and at least 3 points must survive.
    """
    ns = series.ns.astype(np.float64)
    ds = series.distances
    keep = ds > 0.0
    if not np.all(keep):
        warnings.warn("dropping zero distances from the log-log fit", stacklevel=2)
    if int(keep.sum()) < 3:
        raise ValueError("fewer than 3 positive distances; cannot fit a rate")
    x = np.log(ns[keep])
    y = np.log(ds[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    sup_constant = float(np.max(ns ** (series.delta / 2.0) * ds))
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(r2, 1.0),
        n_range=(int(series.ns[0]), int(series.ns[-1])),
        sup_constant=sup_constant,
    )
