"""Closed-form and semi-analytic quantities for 1D random walks in random
environments, all expressed through the law of the jump-odds ratio
rho = omega_0(-1)/omega_0(1):

* transience/ballisticity classification and the root kappa of E[rho^kappa]=1,
* the explicit speed (1 - E[rho])/(1 + E[rho]),
* the quenched mean of the first hitting time as a truncated series,
* the environment-averaged variance constant sigma_0^2,
* moment-finiteness verdicts for hitting and regeneration times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import NotTransient, RegenRatesError, TruncationUnreliable
from .rng import SeedSpec, kernel_seeds, substream

__all__ = [
    "RhoLaw",
    "FiniteRhoLaw",
    "QuadratureRhoLaw",
    "KappaVerdict",
    "classify",
    "speed",
    "QuenchedMeanResult",
    "quenched_t1_mean",
    "Sigma0Result",
    "sigma0_sq",
    "moment_verdict",
    "delta_recommendation",
]

_QUAD_TOL = 1e-12
_KAPPA_BISECT_TOL = 1e-13
_LEFT_LIMIT = 2**20  # hard guard on leftward excursions in fixed environments


class RhoLaw:
    """Law of the jump-odds ratio; subclasses provide expectations of g(rho)."""

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        return self.expect(lambda r: r)

    def log_mean(self) -> float:
        return self.expect(np.log)

    def mass_above_one(self) -> float:
        raise NotImplementedError


class FiniteRhoLaw(RhoLaw):
    """Finite pmf {(rho_i, p_i)}."""

    def __init__(self, values, probs):
        self.values = np.asarray(values, dtype=np.float64)
        self.probs = np.asarray(probs, dtype=np.float64)
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be 1-D arrays of equal length")
        if np.any(self.values <= 0):
            raise ValueError("every rho value must be positive")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")

    def expect(self, g) -> float:
        return float(math.fsum(self.probs * g(self.values)))

    def mass_above_one(self) -> float:
        return float(math.fsum(self.probs[self.values > 1.0]))


class QuadratureRhoLaw(RhoLaw):
    """Adaptive-quadrature adapter for a continuous site law of omega_0(1).

    The density is over p = omega_0(1) on (lo, hi); expectations of g(rho) use
    rho = (1 - p)/p.  Quadrature failures surface as errors rather than
    silent inaccuracy.
    """

    def __init__(self, site_pdf: Callable[[float], float], lo: float, hi: float):
        if not 0.0 < lo < hi < 1.0:
            raise ValueError("support of the site density must be inside (0, 1)")
        self.site_pdf = site_pdf
        self.lo, self.hi = float(lo), float(hi)

    def _quad(self, integrand) -> float:
        value, err = integrate.quad(
            integrand, self.lo, self.hi, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=400
        )
        if not math.isfinite(value) or err > 1e-9 * max(1.0, abs(value)):
            raise RegenRatesError(
                f"quadrature did not converge (estimate {value!r}, error {err:.2e})"
            )
        return value

    def expect(self, g) -> float:
        return self._quad(lambda p: float(g(np.float64((1.0 - p) / p))) * self.site_pdf(p))

    def mass_above_one(self) -> float:
        # rho > 1 iff p < 1/2
        if self.lo >= 0.5:
            return 0.0
        top = min(self.hi, 0.5)
        return self._quad_interval(self.lo, top)

    def _quad_interval(self, a, b) -> float:
        value, _ = integrate.quad(self.site_pdf, a, b, epsabs=_QUAD_TOL, limit=400)
        return value


@dataclass(frozen=True)
class KappaVerdict:
    """Classification of a 1D walk law: transience, ballisticity, CLT regime."""

    kappa: float  # +inf when no mass of rho lies above 1
    transient_right: bool
    ballistic: bool
    clt_regime: bool
    e_log_rho: float
    e_rho: float

    def __post_init__(self):
        if self.clt_regime and not self.transient_right:
            raise ValueError("clt_regime requires transient_right")


def _solve_kappa(law: RhoLaw) -> float:
    """Unique positive root of E[rho^kappa] = 1.

    g(k) = E[rho^k] - 1 is convex with g(0) = 0 and g'(0) = E[log rho] < 0, so
    the root is bracketed as soon as g turns positive; declared +inf when rho
    has no mass above 1 (g stays negative).
    """
    if law.mass_above_one() <= 0.0:
        return math.inf

    def g(k: float) -> float:
        return law.expect(lambda r: r**k) - 1.0

    hi = 1.0
    for _ in range(80):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise RegenRatesError("failed to bracket the moment root")
    lo = hi / 2.0
    while g(lo) >= 0:
        lo /= 2.0
        if lo < 1e-12:
            raise RegenRatesError("failed to bracket the moment root from below")
    while hi - lo > _KAPPA_BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify(law: RhoLaw) -> KappaVerdict:
    """Transience/ballisticity flags and the moment root kappa."""
    e_log = law.log_mean()
    e_rho = law.mean()
    if not e_log < 0:
        raise NotTransient(
            f"E[log rho] = {e_log:.6g} >= 0; the walk is not transient to the right",
            e_log_rho=e_log,
            e_rho=e_rho,
        )
    kappa = _solve_kappa(law)
    return KappaVerdict(
        kappa=kappa,
        transient_right=True,
        ballistic=e_rho < 1.0,
        clt_regime=kappa > 2.0,
        e_log_rho=e_log,
        e_rho=e_rho,
    )


def speed(law: RhoLaw) -> float:
    """Limiting speed (1 - E[rho])/(1 + E[rho]); 0 in the non-ballistic phase."""
    e_rho = law.mean()
    if e_rho >= 1.0:
        return 0.0
    return (1.0 - e_rho) / (1.0 + e_rho)


@dataclass(frozen=True)
class QuenchedMeanResult:
    """Truncated series value with its last term as a truncation-error proxy."""

    value: float
    last_term: float
    terms: int


def quenched_t1_mean(env, truncation: int) -> QuenchedMeanResult:
    """Quenched expectation of the first hitting time of site 1:
    1 + 2 * sum_k prod_{x=-k+1..0} rho_x, truncated after `truncation` terms.

    Refuses (TruncationUnreliable) unless the last term is below 1e-10 of the
    partial sum.
    """
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    total = 1.0
    prod = 1.0
    last = 0.0
    terms = 0
    for k in range(1, truncation + 1):
        omega = env.omega(1 - k)
        prod *= (1.0 - omega) / omega
        last = 2.0 * prod
        total += last
        terms = k
        if prod == 0.0:
            last = 0.0
            break
    if last > 1e-10 * total:
        raise TruncationUnreliable(
            f"series tail not negligible at truncation {truncation}: "
            f"last term {last:.3e} vs partial sum {total:.6g}"
        )
    return QuenchedMeanResult(value=total, last_term=last, terms=terms)


@dataclass(frozen=True)
class Sigma0Result:
    """Monte Carlo estimate of sigma_0^2 = E[Var_w(T_1)] + Var(E_w[T_1])/v."""

    value: float
    se: float
    mean_quenched_variance: float
    variance_of_quenched_mean: float
    n_envs: int


def _t1_variance_in_env(env, replicas: int, stream) -> float:
    """Sample variance of T_1 over replica walks inside one fixed environment."""
    from . import _kernels

    window = 4096
    while True:
        lo = -window
        values = env.window(lo, 1)
        origin = -lo
        seeds = kernel_seeds(stream, replicas)
        times, status = _kernels.t1_times_in_env(values, origin, seeds, 2**40)
        if np.all(status == _kernels.STATUS_OK):
            return float(np.var(times, ddof=1))
        if np.any(status == _kernels.STATUS_STEP_LIMIT):
            raise RegenRatesError("hitting-time simulation exceeded the step limit")
        window *= 2
        if window > _LEFT_LIMIT:
            raise RegenRatesError(
                f"walk ventured past -{_LEFT_LIMIT}; environment guard tripped"
            )


def sigma0_sq(
    site_law,
    seed: SeedSpec,
    n_envs: int,
    truncation: int,
    replicas: int = 200,
) -> Sigma0Result:
    """Monte Carlo over environments of the annealed variance constant.

    Per environment the quenched variance of T_1 is estimated from `replicas`
    simulated walks and the quenched mean from the truncated series; the two
    pieces combine with the closed-form speed.  Caller asserts the CLT regime.
    """
    from .models.site_laws import Environment1d

    if n_envs < 2:
        raise ValueError("need at least 2 environments")
    v = speed(site_law.rho_law())
    if v <= 0:
        raise RegenRatesError("sigma_0^2 requires a ballistic law (E[rho] < 1)")
    variances = np.empty(n_envs)
    means = np.empty(n_envs)
    for i in range(n_envs):
        env = Environment1d(site_law, seed.child(i))
        stream = substream(seed, i)
        variances[i] = _t1_variance_in_env(env, replicas, stream)
        means[i] = quenched_t1_mean(env, truncation).value

    def combine(var_part: np.ndarray, mean_part: np.ndarray) -> float:
        return float(np.mean(var_part) + np.var(mean_part, ddof=1) / v)

    value = combine(variances, means)
    # delete-one jackknife over environments
    mask = np.ones(n_envs, dtype=bool)
    reps = np.empty(n_envs)
    for i in range(n_envs):
        mask[i] = False
        reps[i] = combine(variances[mask], means[mask])
        mask[i] = True
    se = math.sqrt((n_envs - 1) / n_envs * float(np.sum((reps - reps.mean()) ** 2)))
    return Sigma0Result(
        value=value,
        se=se,
        mean_quenched_variance=float(np.mean(variances)),
        variance_of_quenched_mean=float(np.var(means, ddof=1)),
        n_envs=n_envs,
    )


def moment_verdict(verdict: KappaVerdict, gamma: float) -> str:
    """Finiteness of gamma-moments of hitting/regeneration times: 'finite' iff
    gamma < kappa, 'infinite' iff gamma > kappa; at gamma == kappa the verdict
    is 'infinite' when gamma >= 1 and 'boundary' otherwise (unresolved case).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not verdict.transient_right:
        raise ValueError("moment verdicts require a right-transient law")
    kappa = verdict.kappa
    if math.isinf(kappa):
        return "finite"
    tol = 1e-12 * max(1.0, kappa)
    if gamma < kappa - tol:
        return "finite"
    if gamma > kappa + tol:
        return "infinite"
    return "infinite" if gamma >= 1.0 else "boundary"


def delta_recommendation(verdict: KappaVerdict) -> Optional[float]:
    """Largest safe moment margin delta in (0, 1] for the rate n^{-delta/2}.

    Returns 1 when kappa > 3, a 5%-margined min(1, kappa - 2) when
    kappa in (2, 3], and None outside the CLT regime.
    """
    kappa = verdict.kappa
    if not kappa > 2.0:
        return None
    if kappa > 3.0:
        return 1.0
    return min(1.0, kappa - 2.0) * 0.95
