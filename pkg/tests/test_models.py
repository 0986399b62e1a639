import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from regenrates.models import (
    FiniteMarkovChain,
    TwoPointSiteLaw,
    iid_model,
    markov_additive_model,
    rwre1d_position_model,
)
from regenrates.regen import HarvestPlan, estimate, harvest
from regenrates.rng import SeedSpec, make_stream


def two_state_chain(a=0.3, b=0.5):
    return FiniteMarkovChain(
        np.array([[1 - a, a], [b, 1 - b]]), np.array([0.0, 1.0]), anchor=0
    )


# -- i.i.d. sums -----------------------------------------------------------------


def test_rademacher_blocks():
    m = iid_model({-1.0: 0.5, 1.0: 0.5})
    stream = make_stream(SeedSpec(1))
    for _ in range(20):
        b = m.next_block(stream)
        assert b.length == 1
        assert b.sum in (-1.0, 1.0)
        assert b.abs_sum == 1.0


def test_degenerate_increment_law():
    m = iid_model({0.0: 1.0})
    b = m.next_block(make_stream(SeedSpec(2)))
    assert (b.length, b.sum, b.abs_sum) == (1, 0.0, 0.0)


def test_exact_block_law_read_off():
    m = iid_model({0.0: 0.5, 1.0: 0.5})
    law = m.exact_block_law()
    assert law.prob_of(1, 1.0) == 0.5
    assert law.prob_of(1, 0.0) == 0.5


def test_unnormalized_pmf_rejected():
    with pytest.raises(ValueError):
        iid_model({0.0: 0.5, 1.0: 0.6})


def test_iid_exact_value_distribution_is_binomial():
    m = iid_model({-1.0: 0.5, 1.0: 0.5})
    values, probs = m.exact_value_distribution(4)
    assert np.array_equal(values, [-4.0, -2.0, 0.0, 2.0, 4.0])
    assert np.allclose(probs, np.array([1, 4, 6, 4, 1]) / 16, rtol=0, atol=1e-15)


def test_iid_simulate_values_moments():
    m = iid_model({-1.0: 0.5, 1.0: 0.5})
    vals = m.simulate_values(64, 4000, make_stream(SeedSpec(3)))
    assert abs(vals.mean()) < 4 * 8 / math.sqrt(4000)


# -- Markov additive functionals ---------------------------------------------------


def test_two_state_mean_return_time_and_drift():
    model = markov_additive_model(two_state_chain())
    law = model.exact_block_law()
    assert abs(law.mean_length() - 1.6) <= 1e-12  # (a+b)/b
    assert abs(law.mu() - 0.375) <= 1e-12  # a/(a+b)
    assert law.tail_mass < 1e-14


def test_stationary_expression_matches_block_drift():
    chain = two_state_chain()
    pi = chain.stationary()
    model = markov_additive_model(chain)
    # E_pi[f] equals the block-ratio drift
    assert abs(float(pi @ chain.f) - model.exact_block_law().mu()) <= 1e-10


def test_period_two_chain_has_deterministic_blocks():
    chain = FiniteMarkovChain(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 1.0]))
    model = markov_additive_model(chain)
    stream = make_stream(SeedSpec(4))
    for _ in range(10):
        b = model.next_block(stream)
        assert (b.length, b.sum, b.abs_sum) == (2, 1.0, 1.0)
    law = model.exact_block_law()
    assert law.prob_of(2, 1.0) == 1.0


def test_anchor_unreachable_rejected():
    with pytest.raises(ValueError):
        FiniteMarkovChain(
            np.eye(2), np.zeros(2), anchor=0, initial=np.array([0.0, 1.0])
        )


def test_reducible_reachable_set_rejected():
    with pytest.raises(ValueError):
        FiniteMarkovChain(np.array([[0.5, 0.5], [0.0, 1.0]]), np.zeros(2), anchor=0)


def test_row_sums_validated():
    with pytest.raises(ValueError):
        FiniteMarkovChain(np.array([[0.6, 0.5], [0.5, 0.5]]), np.zeros(2))


def test_first_block_from_initial_distribution():
    chain = FiniteMarkovChain(
        np.array([[0.7, 0.3], [0.5, 0.5]]),
        np.array([0.0, 1.0]),
        anchor=0,
        initial=np.array([0.0, 1.0]),
    )
    model = markov_additive_model(chain)
    # starting in state 1, the functional counts at least one visit to state 1
    # only when the first step stays there; length >= 1 always
    b = model.first_block(make_stream(SeedSpec(5)))
    assert b.length >= 1
    assert b.abs_sum >= abs(b.sum)


def test_exact_value_distribution_masses():
    model = markov_additive_model(two_state_chain())
    values, probs = model.exact_value_distribution(2, include_first=False)
    # from the anchor: paths 00, 01 -> sums 0, 1; 10 impossible... enumerate:
    # steps (0->0,0->0): p=.49 sum 0 ; (0->0,0->1): .21 sum 1 ;
    # (0->1,1->0): .15 sum 1 ; (0->1,1->1): .15 sum 2
    lookup = dict(zip(values.tolist(), probs.tolist()))
    assert abs(lookup[0.0] - 0.49) <= 1e-12
    assert abs(lookup[1.0] - 0.36) <= 1e-12
    assert abs(lookup[2.0] - 0.15) <= 1e-12
    assert abs(math.fsum(probs) - 1.0) <= 1e-12


# -- block invariants across models -------------------------------------------------


@pytest.mark.parametrize(
    "factory",
    [
        lambda: iid_model({-1.0: 0.5, 1.0: 0.5}),
        lambda: markov_additive_model(two_state_chain()),
        lambda: rwre1d_position_model(TwoPointSiteLaw.homogeneous(0.75), horizon=2**14),
    ],
    ids=["iid", "markov", "rwre"],
)
def test_block_invariants_everywhere(factory):
    blocks = factory().next_blocks(make_stream(SeedSpec(6)), 500)
    assert np.all(blocks.lengths >= 1)
    assert np.all(blocks.abs_sums >= 0)
    assert np.all(blocks.abs_sums >= np.abs(blocks.sums) - 1e-12)


@pytest.mark.parametrize(
    "factory,mu",
    [
        (lambda: iid_model({-1.0: 0.5, 1.0: 0.5}), 0.0),
        (lambda: markov_additive_model(two_state_chain()), 0.375),
        (lambda: rwre1d_position_model(TwoPointSiteLaw.homogeneous(0.75)), 0.5),
    ],
    ids=["iid", "markov", "rwre"],
)
def test_empirical_drift_matches_closed_form(factory, mu):
    result = harvest(factory(), HarvestPlan(n_blocks=100_000, n_streams=10), SeedSpec(7))
    est = estimate(result.blocks, 1.0)
    assert abs(est.mu_hat - mu) <= 4 * est.mu_se


def test_block_halves_are_identically_distributed():
    result = harvest(
        markov_additive_model(two_state_chain()),
        HarvestPlan(n_blocks=20_000, n_streams=4),
        SeedSpec(8),
    )
    lengths = result.blocks.lengths
    half = len(lengths) // 2
    stat = ks_2samp(lengths[:half], lengths[half:])
    assert stat.pvalue > 0.001


def test_spawn_resets_buffers_and_preserves_law():
    model = markov_additive_model(two_state_chain())
    a = model.next_blocks(make_stream(SeedSpec(9)), 50)
    b = model.spawn().next_blocks(make_stream(SeedSpec(9)), 50)
    assert np.array_equal(a.lengths, b.lengths)
    assert np.array_equal(a.sums, b.sums)
