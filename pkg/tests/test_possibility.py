from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hidpas.core import BayesNet, Cpt, Dag, Evidence, Variable
from hidpas.jtree import ImpossibleEvidenceError
from hidpas.oracles import (
    direct_power_transform,
    enumerate_marginal,
    random_evidence,
    random_net,
)
from hidpas.possibility import (
    HybridMarginal,
    HybridPropagator,
    hybrid_propagate,
    is_informative,
    necessity,
    prob_to_poss,
    transformed_factors,
)


def positive_distributions(max_n: int = 10):
    """Normalized vectors with entries either 0 or comfortably above the
    zero guard (values inside (0, 1e-12) are zeroed by design)."""
    return (
        st.lists(st.floats(0.01, 1.0), min_size=2, max_size=max_n)
        .map(lambda xs: np.array(xs) / np.sum(xs))
    )


# -- prob_to_poss ---------------------------------------------------------------

def test_transform_hand_example():
    np.testing.assert_array_equal(prob_to_poss([0.5, 0.3, 0.2]), [1.0, 0.5, 0.2])


def test_transform_uniform_gives_total_ignorance():
    np.testing.assert_array_equal(prob_to_poss([0.5, 0.5]), [1.0, 1.0])


def test_transform_preserves_certainty():
    np.testing.assert_array_equal(prob_to_poss([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_transform_unsorted_input_mapped_back():
    np.testing.assert_array_equal(prob_to_poss([0.2, 0.5, 0.3]), [0.2, 1.0, 0.5])


def test_transform_rejects_bad_input():
    with pytest.raises(ValueError):
        prob_to_poss([0.5, 0.4])  # sums to 0.9
    with pytest.raises(ValueError):
        prob_to_poss([1.2, -0.2])


def test_transform_matches_power_formula_on_decreasing_input():
    p = np.array([0.4, 0.3, 0.2, 0.1])
    np.testing.assert_allclose(prob_to_poss(p), direct_power_transform(p), atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(positive_distributions())
def test_transform_order_preservation_and_ties(p):
    pi = prob_to_poss(p)
    assert pi.max() == 1.0
    for i in range(len(p)):
        for j in range(len(p)):
            if p[i] > p[j]:
                assert pi[i] >= pi[j]
            if p[i] == p[j]:
                assert pi[i] == pi[j]


@settings(max_examples=300, deadline=None)
@given(positive_distributions())
def test_transform_sandwich_exact(p):
    pi = prob_to_poss(p)
    n = necessity(pi)
    assert np.all(n <= p) and np.all(p <= pi)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000))
def test_transform_tail_sum_identity(seed):
    rng = np.random.default_rng(seed)
    from hidpas.oracles import random_decreasing_distribution

    p = random_decreasing_distribution(rng)
    pi = prob_to_poss(p)
    tails = np.array([math.fsum(p[i:].tolist()) for i in range(p.size)])
    tails[0] = 1.0
    np.testing.assert_allclose(pi, tails, atol=1e-12)


def test_transform_zero_states_stay_zero():
    pi = prob_to_poss([0.7, 0.3, 0.0])
    assert pi[2] == 0.0
    np.testing.assert_allclose(pi, [1.0, 0.3, 0.0])


# -- necessity -------------------------------------------------------------------

def test_necessity_hand_example():
    np.testing.assert_allclose(necessity([1.0, 0.5, 0.2]), [0.5, 0.0, 0.0])


def test_necessity_ignorance_is_vacuous():
    np.testing.assert_array_equal(necessity([1.0, 1.0]), [0.0, 0.0])


def test_necessity_certainty():
    np.testing.assert_array_equal(necessity([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_necessity_at_most_one_positive():
    rng = np.random.default_rng(2)
    for _ in range(200):
        pi = rng.random(5)
        pi[rng.integers(0, 5)] = 1.0
        assert int(np.sum(necessity(pi) > 0)) <= 1


# -- is_informative ----------------------------------------------------------------

def test_is_informative_cases():
    assert is_informative((0.5, 0.62, 0.62), 0.5)
    assert not is_informative((0.2, 0.5, 0.9), 0.5)
    assert is_informative((1.0, 1.0, 1.0), 0.0)


# -- hybrid propagation --------------------------------------------------------------

def test_hybrid_two_node_matches_both_oracles(two_node_net):
    hm = hybrid_propagate(two_node_net, Evidence(), [1])[1]
    np.testing.assert_allclose(hm.probability, [0.38, 0.62], atol=1e-12)
    arities = [v.arity for v in two_node_net.dag.variables]
    expected_pi = enumerate_marginal(transformed_factors(two_node_net), arities,
                                     {}, 1, "max-min")
    np.testing.assert_allclose(hm.possibility, expected_pi, atol=1e-15)
    np.testing.assert_allclose(hm.necessity, necessity(np.asarray(expected_pi)),
                               atol=1e-15)


def test_hybrid_deterministic_net_degenerates():
    a = Variable(0, "A", ("0", "1"))
    b = Variable(1, "B", ("0", "1"))
    net = BayesNet(Dag((a, b), ((), (0,))), (
        Cpt(0, (), np.array([[0.0, 1.0]])),
        Cpt(1, (0,), np.array([[1.0, 0.0], [0.0, 1.0]])),
    ))
    result = hybrid_propagate(net, Evidence({0: 1}), [1])[1]
    assert result.triple(1) == (1.0, 1.0, 1.0)
    assert result.triple(0) == (0.0, 0.0, 0.0)


def test_hybrid_single_root_composes_transform():
    c = Variable(0, "C", ("x", "y", "z"))
    net = BayesNet(Dag((c,), ((),)), (Cpt(0, (), np.array([[0.5, 0.3, 0.2]])),))
    hm = hybrid_propagate(net, Evidence(), [0])[0]
    assert hm.necessity == (0.5, 0.0, 0.0)
    assert hm.probability == (0.5, 0.3, 0.2)
    assert hm.possibility == (1.0, 0.5, 0.2)
    assert hm.sandwich_violation() == 0.0


def test_hybrid_impossible_evidence_raises(two_node_net):
    a = Variable(0, "A", ("0", "1"))
    b = Variable(1, "B", ("0", "1"))
    net = BayesNet(Dag((a, b), ((), (0,))), (
        Cpt(0, (), np.array([[1.0, 0.0]])),
        Cpt(1, (0,), np.array([[1.0, 0.0], [0.5, 0.5]])),
    ))
    with pytest.raises(ImpossibleEvidenceError):
        hybrid_propagate(net, Evidence({1: 1}), [1])


def test_hybrid_probability_component_bit_identical_to_plain():
    from hidpas.jtree import (SUM_PRODUCT, build_tree_for_net,
                              initialize_potentials, net_factors, propagate,
                              query_marginal)

    rng = np.random.default_rng(23)
    for _ in range(20):
        net = random_net(rng)
        ev = random_evidence(rng, net)
        try:
            marginals = hybrid_propagate(net, ev, list(range(len(net.dag.variables))))
        except ImpossibleEvidenceError:
            continue
        jt = initialize_potentials(build_tree_for_net(net), net_factors(net),
                                   SUM_PRODUCT)
        cal = propagate(jt, ev)
        for var, hm in marginals.items():
            plain = query_marginal(cal, var)
            assert tuple(plain) == hm.probability  # bit-identical


def test_hybrid_sandwich_violations_reported_not_asserted():
    """Measure how often the interval brackets the propagated probability."""
    rng = np.random.default_rng(29)
    cases = violations = 0
    worst = 0.0
    for _ in range(40):
        net = random_net(rng)
        ev = random_evidence(rng, net)
        try:
            marginals = hybrid_propagate(net, ev, list(range(len(net.dag.variables))))
        except ImpossibleEvidenceError:
            continue
        for hm in marginals.values():
            cases += 1
            breach = hm.sandwich_violation()
            if breach > 1e-12:
                violations += 1
                worst = max(worst, breach)
    print(f"\npost-propagation interval breaches: {violations}/{cases} "
          f"(worst {worst:.4f})")
    assert cases > 0


def test_hybrid_propagator_is_reusable(two_node_net):
    engine = HybridPropagator(two_node_net)
    first = engine.query(Evidence(), [1])[1]
    second = engine.query(Evidence({0: 1}), [1])[1]
    third = engine.query(Evidence(), [1])[1]
    assert first == third  # engine state is not consumed by queries
    np.testing.assert_allclose(second.probability, [0.1, 0.9], atol=1e-12)


def test_hybrid_marginal_type_invariants_enforced():
    with pytest.raises(ValueError):
        HybridMarginal(0, (0.9, 0.0), (0.5, 0.5), (0.5, 1.0))  # N > Pi
    with pytest.raises(ValueError):
        HybridMarginal(0, (0.0, 0.0), (0.7, 0.7), (1.0, 1.0))  # P sums to 1.4
