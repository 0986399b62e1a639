"""Exact strong-mixing coefficients of small stationary Markov chains and the
rate exponent implied by polynomially summable mixing coefficients.

For a stationary chain the sup over past/future sigma-fields separated by n
steps reduces to events of single coordinates, which makes the coefficient
computable by exhaustive subset enumeration:

    alpha(n) = max over S, T of | sum_{i in S, j in T} pi_i (P^n_ij - pi_j) |.

The reduction is validated at tiny scale against two-step cylinder events in
the test suite rather than assumed silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PeriodicChain, ResourceLimit
from .models.markov import FiniteMarkovChain

__all__ = [
    "alpha_exact",
    "MixingProfile",
    "mixing_profile",
    "MixingRateExponent",
    "mixing_rate_exponent",
]

_MAX_STATES = 14


def _subset_colsum_positive_part(m: np.ndarray) -> float:
    """max over subsets S of sum_j max(sum_{i in S} m_ij, 0).

    Column sums of m vanish, so the positive and negative parts agree and the
    absolute two-subset sup equals this one-sided form.
    """
    k = m.shape[0]
    masks = np.arange(2**k, dtype=np.uint32)
    bits = (masks[:, None] >> np.arange(k, dtype=np.uint32)[None, :]) & 1
    col_sums = bits.astype(np.float64) @ m
    return float(np.max(np.sum(np.maximum(col_sums, 0.0), axis=1)))


def alpha_exact(chain: FiniteMarkovChain, n: int) -> float:
    """Exact strong-mixing coefficient alpha(n) of the stationary chain.

    Requires an aperiodic chain with at most 14 states (subset enumeration).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if chain.n_states > _MAX_STATES:
        raise ResourceLimit(f"exact mixing limited to {_MAX_STATES} states")
    if chain.period() != 1:
        raise PeriodicChain(f"chain has period {chain.period()}")
    pi = chain.stationary()
    pn = np.linalg.matrix_power(chain.transition, n)
    m = pi[:, None] * (pn - pi[None, :])
    return _subset_colsum_positive_part(m)


@dataclass(frozen=True)
class MixingProfile:
    """Computed alpha(n) sequence plus a geometric-decay summability fit."""

    alphas: tuple[tuple[int, float], ...]
    lambda_fit: float

    def __post_init__(self):
        values = [a for _, a in self.alphas]
        if any(a < -1e-15 or a > 0.25 + 1e-12 for a in values):
            raise ValueError("alpha values must lie in [0, 1/4]")
        if any(b > a + 1e-12 for a, b in zip(values, values[1:])):
            raise ValueError("alpha must be non-increasing in n")


def _lambda_from_geometric(a1: float, ratio: float, cap: float) -> float:
    """Largest lam with sum_n n^lam a1 ratio^(n-1) <= cap, by bisection."""
    if a1 <= 0.0:
        return math.inf
    if ratio <= 0.0:
        return math.inf
    if ratio >= 1.0:
        return 0.0

    def series(lam: float) -> float:
        total = 0.0
        term_n = 1
        weight = a1
        while True:
            total += term_n**lam * weight
            if total > cap:
                return total
            weight *= ratio
            term_n += 1
            if weight * term_n**lam < 1e-18 * max(total, 1.0):
                return total

    if series(0.0) > cap:
        return 0.0
    lo, hi = 0.0, 1.0
    while series(hi) <= cap and hi < 1e6:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if series(mid) <= cap:
            lo = mid
        else:
            hi = mid
    return lo


def mixing_profile(
    chain: FiniteMarkovChain, ns: Sequence[int], cap: float = 100.0
) -> MixingProfile:
    """alpha(n) over `ns` plus the largest summable polynomial weight under a
    geometric extrapolation of the decay."""
    ns = sorted(set(int(n) for n in ns))
    alphas = [(n, alpha_exact(chain, n)) for n in ns]
    values = np.array([a for _, a in alphas])
    if np.all(values <= 1e-14):  # independent to rounding: any weight is summable
        lam = math.inf
    else:
        ratios = [b / a for a, b in zip(values, values[1:]) if a > 0 and b > 0]
        ratio = float(np.median(ratios)) if ratios else 0.0
        lam = _lambda_from_geometric(float(values[0]), ratio, cap)
    return MixingProfile(alphas=tuple(alphas), lambda_fit=lam)


@dataclass(frozen=True)
class MixingRateExponent:
    """Polynomial CLT rate exponent from (p, lambda) mixing summability."""

    exponent: float
    delta: float


def mixing_rate_exponent(p: float, lam: float) -> Optional[MixingRateExponent]:
    """Rate exponent min{(lam(p-2)-2)/(2(lam+1+p)), 1/2} for finite p > 2, and
    min{lam/2, 1/2} at p = inf; None when lam <= 2/(p-2) (no rate implied).

    Also returns the moment margin delta = (lam(p-2)-2)/(lam+1+p) (lam at
    p = inf) behind the exponent.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if math.isinf(p):
        return MixingRateExponent(exponent=min(lam / 2.0, 0.5), delta=lam)
    if p <= 2:
        raise ValueError("p must exceed 2")
    if lam <= 2.0 / (p - 2.0):
        return None
    delta = (lam * (p - 2.0) - 2.0) / (lam + 1.0 + p)
    return MixingRateExponent(exponent=min(delta / 2.0, 0.5), delta=delta)
