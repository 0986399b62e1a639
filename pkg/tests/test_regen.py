import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regenrates.errors import HarvestFailed
from regenrates.models import FiniteMarkovChain, iid_model, markov_additive_model
from regenrates.models.base import ProcessModel
from regenrates.regen import (
    HarvestPlan,
    estimate,
    harvest,
    hill_tail_index,
    moment_gate,
)
from regenrates.rng import SeedSpec, make_stream
from regenrates.types import Blocks, BlockSample
from regenrates.errors import CensoredBlock


def deterministic_chain_model():
    chain = FiniteMarkovChain(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 1.0]))
    return markov_additive_model(chain)


# -- harvest ---------------------------------------------------------------------


def test_harvest_exact_block_count():
    res = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), HarvestPlan(4), SeedSpec(1))
    assert len(res.blocks) == 4
    assert np.all(res.blocks.lengths == 1)


def test_harvest_deterministic_chain():
    res = harvest(deterministic_chain_model(), HarvestPlan(10), SeedSpec(2))
    assert np.all(res.blocks.lengths == 2)
    assert np.all(res.blocks.sums == 1.0)


def test_harvest_reproducible():
    plan = HarvestPlan(100, n_streams=4)
    a = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), plan, SeedSpec(3))
    b = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), plan, SeedSpec(3))
    assert np.array_equal(a.blocks.sums, b.blocks.sums)
    assert np.array_equal(a.blocks.stream_ids, b.blocks.stream_ids)


def test_harvest_threads_do_not_change_output():
    plan = HarvestPlan(1000, n_streams=5)
    a = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), plan, SeedSpec(4), threads=1)
    b = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), plan, SeedSpec(4), threads=4)
    assert np.array_equal(a.blocks.sums, b.blocks.sums)


def test_harvest_includes_first_block_on_request():
    plan = HarvestPlan(10, include_first_block=True)
    res = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), plan, SeedSpec(5))
    assert res.first_block is not None
    assert res.first_block.length == 1


class _AlwaysCensored(ProcessModel):
    def next_block(self, stream):
        raise CensoredBlock("always censored")


def test_persistent_censoring_fails_harvest():
    with pytest.raises(HarvestFailed):
        harvest(_AlwaysCensored(), HarvestPlan(10), SeedSpec(6))


def test_plan_validation():
    with pytest.raises(ValueError):
        HarvestPlan(1)
    with pytest.raises(ValueError):
        HarvestPlan(10, delta=1.5)
    with pytest.raises(ValueError):
        HarvestPlan(10, n_streams=0)


# -- estimate --------------------------------------------------------------------


def test_two_point_symmetric_blocks():
    est = estimate([BlockSample(1, 1.0, 1.0), BlockSample(1, -1.0, 1.0)], 1.0)
    assert est.mu_hat == 0.0
    assert est.tau_bar == 1.0
    assert est.sigma2_hat == 1.0
    assert not est.degenerate


def test_deterministic_blocks_flag_degenerate():
    blocks = [BlockSample(2, 1.0, 1.0)] * 50
    est = estimate(blocks, 1.0)
    assert est.mu_hat == 0.5
    assert est.sigma2_hat == 0.0
    assert est.degenerate


def test_estimate_requires_two_blocks():
    with pytest.raises(ValueError):
        estimate([BlockSample(1, 1.0, 1.0)], 1.0)


def test_covariance_identity_alpha2_equals_sigma2_tau():
    res = harvest(
        markov_additive_model(
            FiniteMarkovChain(np.array([[0.7, 0.3], [0.5, 0.5]]), np.array([0.0, 1.0]))
        ),
        HarvestPlan(5000, n_streams=4),
        SeedSpec(7),
    )
    est = estimate(res.blocks, 1.0)
    assert abs(est.cov_a[0] - est.sigma2_hat * est.tau_bar) <= 1e-9 * abs(est.cov_a[0])


def test_estimate_permutation_invariant():
    res = harvest(iid_model({-1.0: 0.25, 0.5: 0.75}), HarvestPlan(999), SeedSpec(8))
    est = estimate(res.blocks, 0.7)
    rng = np.random.default_rng(0)
    shuffled = res.blocks.permuted(rng.permutation(len(res.blocks)))
    est2 = estimate(shuffled, 0.7)
    assert est2.mu_hat == est.mu_hat
    assert est2.sigma2_hat == est.sigma2_hat
    assert est2.tau_bar == est.tau_bar
    assert est2.cov_a == est.cov_a


@settings(max_examples=40, deadline=None)
@given(k=st.integers(min_value=-8, max_value=8))
def test_scaling_equivariance_exact_for_powers_of_two(k):
    res = harvest(
        markov_additive_model(
            FiniteMarkovChain(np.array([[0.7, 0.3], [0.5, 0.5]]), np.array([0.0, 1.0]))
        ),
        HarvestPlan(200, n_streams=2),
        SeedSpec(9),
    )
    c = 2.0**k
    base = estimate(res.blocks, 1.0)
    scaled = estimate(res.blocks.scaled(c), 1.0)
    assert scaled.mu_hat == c * base.mu_hat
    assert scaled.sigma2_hat == c * c * base.sigma2_hat
    assert scaled.cov_a[0] == c * c * base.cov_a[0]
    assert scaled.tau_bar == base.tau_bar


def test_scaling_equivariance_general_constant():
    res = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), HarvestPlan(500), SeedSpec(10))
    c = 0.3
    base = estimate(res.blocks, 1.0)
    scaled = estimate(res.blocks.scaled(c), 1.0)
    assert math.isclose(scaled.mu_hat, c * base.mu_hat, rel_tol=1e-12, abs_tol=1e-15)
    assert math.isclose(scaled.sigma2_hat, c * c * base.sigma2_hat, rel_tol=1e-12)


def test_jackknife_covers_truth_for_markov_drift():
    res = harvest(
        markov_additive_model(
            FiniteMarkovChain(np.array([[0.7, 0.3], [0.5, 0.5]]), np.array([0.0, 1.0]))
        ),
        HarvestPlan(100_000, n_streams=10),
        SeedSpec(11),
    )
    est = estimate(res.blocks, 1.0)
    assert abs(est.mu_hat - 0.375) <= 3 * est.mu_se
    assert abs(est.tau_bar - 1.6) <= 3 * est.tau_bar_se


# -- moment gate and tail index ----------------------------------------------------


def test_hill_on_synthetic_pareto_oracle():
    # P(X > x) = x^{-2.5}: the estimator must localize the tail index
    rng = make_stream(SeedSpec(12))
    sample = rng.random(1_000_000) ** (-1.0 / 2.5)
    assert abs(hill_tail_index(sample) - 2.5) <= 0.1


def test_gate_clear_for_bounded_lengths():
    res = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), HarvestPlan(2000), SeedSpec(13))
    est = estimate(res.blocks, 1.0)
    report = moment_gate(est, res.blocks)
    assert report.hill_index == math.inf
    assert not report.flag_raised
    m = est.moment_diag["tau_pow_2_plus_delta"]
    assert m.value == 1.0


def _pareto_length_blocks(index: float, count: int, seed: int) -> Blocks:
    # scale up before rounding so the integer grid cannot distort the tail
    rng = make_stream(SeedSpec(seed))
    lengths = np.ceil(100.0 * rng.random(count) ** (-1.0 / index)).astype(np.int64)
    return Blocks(lengths, np.zeros(count), np.zeros(count))


def test_gate_flags_heavy_tails_against_delta_one():
    blocks = _pareto_length_blocks(2.5, 200_000, 14)
    est = estimate(blocks, 1.0)
    report = moment_gate(est, blocks)
    assert report.flag_raised  # 2 + 1 = 3 > 2.5


def test_gate_clear_when_delta_below_tail_index():
    blocks = _pareto_length_blocks(2.5, 200_000, 15)
    est = estimate(blocks, 0.3)
    report = moment_gate(est, blocks)
    assert not report.flag_raised  # 2.3 < 2.5
    assert abs(report.hill_index - 2.5) <= 0.15


def test_gate_suppressed_below_100_blocks():
    res = harvest(iid_model({-1.0: 0.5, 1.0: 0.5}), HarvestPlan(50), SeedSpec(16))
    est = estimate(res.blocks, 1.0)
    report = moment_gate(est, res.blocks)
    assert report.hill_suppressed
    assert report.hill_index is None
