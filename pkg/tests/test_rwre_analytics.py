import math

import numpy as np
import pytest

from regenrates.errors import NotTransient, TruncationUnreliable
from regenrates.models import Environment1d, TwoPointSiteLaw, UniformSiteLaw
from regenrates.rng import SeedSpec, make_stream
from regenrates.rwre_analytics import (
    FiniteRhoLaw,
    KappaVerdict,
    classify,
    delta_recommendation,
    moment_verdict,
    quenched_t1_mean,
    sigma0_sq,
    speed,
)

GOLDEN_KAPPA_2_QUARTER = math.log2((1.0 + math.sqrt(5.0)) / 2.0)  # root of x^3-2x^2+1


class _ConstantEnv:
    """Stub environment with a single right-jump probability everywhere."""

    def __init__(self, p):
        self.p = p

    def omega(self, x):
        return self.p


# -- classification ------------------------------------------------------------------


def test_all_rho_below_one_gives_infinite_kappa():
    verdict = classify(FiniteRhoLaw([1.0 / 3.0], [1.0]))
    assert verdict.kappa == math.inf
    assert verdict.transient_right and verdict.ballistic and verdict.clt_regime


def test_kappa_root_of_two_point_law_matches_algebra():
    # E[rho^k] = (2^k + 4^-k)/2 = 1 reduces to x^3 - 2x^2 + 1 = 0 with x = 2^k
    law = FiniteRhoLaw([2.0, 0.25], [0.5, 0.5])
    verdict = classify(law)
    assert abs(verdict.kappa - GOLDEN_KAPPA_2_QUARTER) <= 1e-10
    assert abs(law.expect(lambda r: r**verdict.kappa) - 1.0) <= 1e-12
    assert not verdict.clt_regime


def test_kappa_in_clt_regime():
    law = FiniteRhoLaw([1.25, 0.5], [0.5, 0.5])
    verdict = classify(law)
    assert 2.75 < verdict.kappa < 2.8  # hand bracket: g(2.75) < 0 < g(2.8)
    assert abs(law.expect(lambda r: r**verdict.kappa) - 1.0) <= 1e-12
    assert verdict.clt_regime


def test_not_transient_raises_with_classification():
    with pytest.raises(NotTransient) as info:
        classify(FiniteRhoLaw([2.0], [1.0]))
    assert info.value.e_log_rho > 0


def test_continuous_law_quadrature_classification():
    # uniform site law on (0.6, 0.9): rho < 1 everywhere, so kappa = inf
    law = UniformSiteLaw(0.6, 0.9).rho_law()
    verdict = classify(law)
    assert verdict.kappa == math.inf
    exact_mean = math.log(0.9 / 0.6) / 0.3 - 1.0  # E[(1-p)/p] on uniform(0.6, 0.9)
    assert abs(verdict.e_rho - exact_mean) <= 1e-10


def test_kappa_monotone_under_stochastic_dominance():
    # shifting rho mass downward increases kappa
    kappas = []
    for hi in (1.6, 1.5, 1.4, 1.3):
        verdict = classify(FiniteRhoLaw([hi, 0.4], [0.5, 0.5]))
        kappas.append(verdict.kappa)
    assert all(b > a for a, b in zip(kappas, kappas[1:]))


# -- speed ----------------------------------------------------------------------------


def test_speed_homogeneous():
    law = TwoPointSiteLaw.homogeneous(0.75).rho_law()
    assert abs(speed(law) - 0.5) <= 1e-15  # matches 2p - 1


def test_speed_near_criticality():
    law = FiniteRhoLaw([1.0 - 1e-15], [1.0])
    assert abs(speed(law)) <= 1e-15


def test_speed_two_point_arithmetic():
    law = TwoPointSiteLaw(0.7, 0.8, 0.5).rho_law()
    # E[rho] = (3/7 + 1/4)/2 = 19/56; v = (1 - 19/56)/(1 + 19/56) = 37/75
    assert abs(law.mean() - 19.0 / 56.0) <= 1e-15
    assert abs(speed(law) - 37.0 / 75.0) <= 1e-15


def test_speed_zero_when_not_ballistic():
    assert speed(FiniteRhoLaw([2.0, 0.25], [0.5, 0.5])) == 0.0


def test_simulated_speed_matches_formula_for_random_laws():
    from regenrates.models import rwre1d_position_model

    rng = make_stream(SeedSpec(20))
    n = 2**16
    for i in range(20):
        p1, p2 = 0.55 + 0.4 * rng.random(2)
        site = TwoPointSiteLaw(float(p1), float(p2), 0.5)
        v = speed(site.rho_law())
        model = rwre1d_position_model(site)
        vals = model.simulate_values(n, 1000, make_stream(SeedSpec(21, i)), include_first=True)
        se = vals.std(ddof=1) / math.sqrt(len(vals)) / n
        assert abs(vals.mean() / n - v) <= 4 * se


# -- quenched series -------------------------------------------------------------------


def test_quenched_t1_homogeneous_075():
    result = quenched_t1_mean(_ConstantEnv(0.75), truncation=200)
    assert abs(result.value - 2.0) <= 1e-12  # (1+rho)/(1-rho) at rho = 1/3
    assert result.last_term <= 1e-10 * result.value


def test_quenched_t1_degenerate_right_walk():
    result = quenched_t1_mean(_ConstantEnv(1.0), truncation=10)
    assert result.value == 1.0


def test_quenched_t1_homogeneous_06():
    result = quenched_t1_mean(_ConstantEnv(0.6), truncation=400)
    assert abs(result.value - 5.0) <= 1e-10


def test_quenched_t1_truncation_guard():
    with pytest.raises(TruncationUnreliable):
        quenched_t1_mean(_ConstantEnv(0.6), truncation=5)


def test_quenched_t1_simulated_agreement():
    # per fixed environment the simulated mean matches the series value
    from regenrates import _kernels
    from regenrates.rng import kernel_seeds

    site = TwoPointSiteLaw(0.6, 0.85, 0.5)
    for i in range(5):
        env = Environment1d(site, SeedSpec(30, i))
        expected = quenched_t1_mean(env, truncation=4000).value
        window = env.window(-4096, 1)
        seeds = kernel_seeds(make_stream(SeedSpec(31, i)), 100_000)
        times, status = _kernels.t1_times_in_env(window, 4096, seeds, 2**40)
        assert np.all(status == 0)
        se = times.std(ddof=1) / math.sqrt(len(times))
        assert abs(times.mean() - expected) <= 4 * se


# -- sigma_0^2 ---------------------------------------------------------------------------


def _exact_t1_variance(p: float) -> float:
    """DP oracle: distribution of the first-passage time of +1 for a homogeneous
    walk, enumerated over positions and steps until the tail is negligible."""
    # state: distribution over positions <= 0 (position 1 absorbs)
    probs = {0: 1.0}
    absorbed = {}
    t = 0
    while sum(probs.values()) > 1e-14:
        t += 1
        nxt = {}
        for x, q in probs.items():
            if x + 1 == 1:
                absorbed[t] = absorbed.get(t, 0.0) + q * p
            else:
                nxt[x + 1] = nxt.get(x + 1, 0.0) + q * p
            nxt[x - 1] = nxt.get(x - 1, 0.0) + q * (1 - p)
        probs = nxt
        if t > 4000:
            raise RuntimeError("tail did not vanish")
    mean = sum(k * q for k, q in absorbed.items())
    second = sum(k * k * q for k, q in absorbed.items())
    return second - mean * mean


def test_sigma0_homogeneous_is_pure_quenched_variance():
    # deterministic environment: the variance of the quenched mean vanishes
    site = TwoPointSiteLaw.homogeneous(0.75)
    result = sigma0_sq(site, SeedSpec(32), n_envs=24, truncation=200, replicas=400)
    assert result.variance_of_quenched_mean <= 1e-20
    oracle = _exact_t1_variance(0.75)
    assert abs(oracle - 6.0) <= 1e-9  # 4 p q / (2p - 1)^3
    assert abs(result.value - oracle) <= 4 * result.se


def test_sigma0_has_environment_term_for_disordered_law():
    site = TwoPointSiteLaw(0.6, 0.85, 0.5)
    result = sigma0_sq(site, SeedSpec(33), n_envs=30, truncation=2000, replicas=200)
    assert result.variance_of_quenched_mean > 0.01
    assert result.value > result.mean_quenched_variance


def test_sigma0_vanishes_for_monotone_walks():
    # the p -> 1 limit: T_1 = 1 deterministically, so sigma_0^2 -> 0
    site = TwoPointSiteLaw.homogeneous(1.0 - 1e-12)
    result = sigma0_sq(site, SeedSpec(34), n_envs=10, truncation=50, replicas=100)
    assert result.value <= 1e-9


# -- moment verdicts ----------------------------------------------------------------------


def test_moment_verdicts():
    verdict = classify(FiniteRhoLaw([1.25, 0.5], [0.5, 0.5]))
    assert moment_verdict(verdict, 2.5) == "finite"
    assert moment_verdict(verdict, 3.0) == "infinite"
    infinite = classify(FiniteRhoLaw([0.5], [1.0]))
    assert moment_verdict(infinite, 100.0) == "finite"


def test_moment_verdict_boundary_cases():
    v_high = KappaVerdict(2.0, True, True, False, -0.1, 0.9)
    assert moment_verdict(v_high, 2.0) == "infinite"  # gamma = kappa >= 1
    v_low = KappaVerdict(0.5, True, True, False, -0.1, 0.9)
    assert moment_verdict(v_low, 0.5) == "boundary"  # unresolved below 1


def test_delta_recommendation():
    mk = lambda k: KappaVerdict(k, True, True, k > 2, -0.1, 0.9)
    assert delta_recommendation(mk(3.5)) == 1.0
    assert abs(delta_recommendation(mk(2.5)) - 0.475) <= 1e-15
    assert delta_recommendation(mk(2.0)) is None
    assert delta_recommendation(mk(math.inf)) == 1.0
