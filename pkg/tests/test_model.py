import numpy as np
import pytest

from peersets.builtin import restaurant_model, restaurant_network_directed, two_person_binary
from peersets.model import (
    AttentionIndexRule,
    AttentionRule,
    ModelError,
    ModelSpec,
    Network,
    PreferenceProfile,
    RandomChoiceRule,
    Variant,
    count_peers,
    validate_assumptions,
)

from helpers import random_attention_index_model, random_baseline_model


# -- network ------------------------------------------------------------------


def test_network_rejects_self_loops():
    with pytest.raises(ModelError):
        Network(3, [(0, 0)])


def test_network_rejects_out_of_range():
    with pytest.raises(ModelError):
        Network(2, [(0, 2)])


def test_undirected_builder():
    net = Network.undirected(3, [(0, 1)])
    assert (0, 1) in net.edges and (1, 0) in net.edges
    assert net.is_undirected()


def test_restaurant_network_is_directed():
    net = restaurant_network_directed()
    assert (2, 0) in net.edges and (0, 2) not in net.edges
    assert not net.is_undirected()
    assert net.neighbors(2) == (0, 1)


def test_count_peers_restaurant():
    net = restaurant_network_directed()
    # person 3 (0-based 2) watches persons 1 and 2; both at restaurant 1
    assert count_peers(net, (1, 1, 0, 0, 0), 2, 1) == 2
    # nobody's friends at restaurant 2
    assert count_peers(net, (1, 1, 0, 0, 0), 2, 2) == 0
    # person 1 (0-based 0) watches person 2 only
    assert count_peers(net, (0, 1, 0, 0, 0), 0, 1) == 1


def test_count_peers_validation():
    net = restaurant_network_directed()
    with pytest.raises(ModelError):
        count_peers(net, (0,) * 5, 9, 1)
    with pytest.raises(ModelError):
        count_peers(net, (0,) * 5, 0, 0)


# -- preferences ----------------------------------------------------------------


def test_preferences_must_be_permutations():
    with pytest.raises(ModelError):
        PreferenceProfile([(1, 1)])
    with pytest.raises(ModelError):
        PreferenceProfile([(1, 3)])


def test_preference_queries():
    prefs = PreferenceProfile([(2, 3, 1)])
    assert prefs.best(0) == 2
    assert prefs.prefers(0, 2, 1)
    assert not prefs.prefers(0, 1, 3)
    assert prefs.dominators(0, 1) == (2, 3)
    assert prefs.dominators(0, 2) == ()


# -- attention -------------------------------------------------------------------


def test_shared_levels_ignore_own_choice():
    model = restaurant_model()
    att = model.attention
    assert att.own_independent()
    assert att.value(0, 1, 0, 0) == 0.25
    assert att.value(2, 2, 1, 2) == 0.875
    assert att.degree(2) == 2


def test_validate_restaurant_clean():
    report = validate_assumptions(restaurant_model())
    assert report.ok


def test_validate_flags_flat_attention():
    net = Network.undirected(2, [(0, 1)])
    att = AttentionRule.shared_levels(net, 1, [0.4, 0.4])
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1,), (1,)]),
        rates=np.ones(2),
        attention=att,
    )
    report = validate_assumptions(model)
    assert "A3" in report.codes()
    assert not report.ok


def test_validate_flags_isolated_person():
    net = Network(2, [(0, 1)])  # person 1 has no friends
    att = AttentionRule.from_function(net, 1, lambda a, v, own, n: 0.3 + 0.3 * n)
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1,), (1,)]),
        rates=np.ones(2),
        attention=att,
    )
    assert "A2" in validate_assumptions(model).codes()


def test_validate_flags_boundary_attention():
    net = Network.undirected(2, [(0, 1)])
    att = AttentionRule.shared_levels(net, 1, [0.0, 1.0])
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1,), (1,)]),
        rates=np.ones(2),
        attention=att,
    )
    assert "A1" in validate_assumptions(model).codes()


def test_random_models_validate_clean():
    rng = np.random.default_rng(7)
    for _ in range(10):
        model = random_baseline_model(rng, 3, 2, own_dependent=True)
        assert validate_assumptions(model).ok


# -- model bundle ---------------------------------------------------------------


def test_modelspec_requires_components():
    net = Network.undirected(2, [(0, 1)])
    prefs = PreferenceProfile([(1,), (1,)])
    with pytest.raises(ModelError):
        ModelSpec(
            variant=Variant.BASELINE_DEFAULT,
            network=net,
            preferences=prefs,
            rates=np.ones(2),
        )


def test_modelspec_rejects_nonpositive_rates():
    with pytest.raises(ModelError):
        two_person_binary(0.2, 0.8, rate=0.0)


def test_modelspec_rejects_degree_mismatch():
    net = Network.undirected(3, [(0, 1), (1, 2)])
    other = Network.undirected(3, [(0, 1), (0, 2), (1, 2)])
    att = AttentionRule.shared_levels(other, 1, [0.2, 0.5, 0.8])
    with pytest.raises(ModelError):
        ModelSpec(
            variant=Variant.BASELINE_DEFAULT,
            network=net,
            preferences=PreferenceProfile([(1,)] * 3),
            rates=np.ones(3),
            attention=att,
        )


# -- choice rules -----------------------------------------------------------------


def test_logit_choice_rule_symmetry():
    rule = RandomChoiceRule.logit(np.zeros((1, 2)))
    assert rule.probability(0, 1, frozenset({1, 2})) == pytest.approx(0.5)
    assert rule.probability(0, 2, frozenset({2})) == 1.0
    assert rule.probability(0, 1, frozenset({2})) == 0.0


def test_degenerate_choice_rule_picks_preference_max():
    prefs = PreferenceProfile([(2, 1, 3)])
    rule = RandomChoiceRule.degenerate(prefs)
    assert rule.probability(0, 2, frozenset({1, 2, 3})) == 1.0
    assert rule.probability(0, 1, frozenset({1, 3})) == 1.0
    assert rule.probability(0, 3, frozenset({1, 3})) == 0.0


# -- attention index ---------------------------------------------------------------


def test_attention_index_normalizes_empty_set():
    rule = AttentionIndexRule(1, 2, lambda a, c, y: 5.0)
    assert rule.value(0, frozenset(), (0,)) == 1.0


def test_attention_index_total_uniform():
    rule = AttentionIndexRule(1, 2, lambda a, c, y: 1.0)
    assert rule.total(0, (0,)) == pytest.approx(4.0)


def test_attention_index_rejects_negative():
    rule = AttentionIndexRule(1, 1, lambda a, c, y: -1.0)
    with pytest.raises(ModelError):
        rule.value(0, frozenset({1}), (0,))


def test_multiplicative_index_satisfies_switch_monotonicity():
    rng = np.random.default_rng(3)
    model = random_attention_index_model(rng, 3, 2, "multiplicative")
    report = validate_assumptions(model)
    assert report.ok, str(report)


def test_additive_index_satisfies_switch_monotonicity():
    rng = np.random.default_rng(4)
    model = random_attention_index_model(rng, 3, 2, "additive")
    assert validate_assumptions(model).ok


def test_cardinality_index_violates_strict_monotonicity():
    # equal-size sets share one index value, so a friend switch cannot raise
    # the set containing the new option while leaving its same-size peers flat
    rng = np.random.default_rng(5)
    model = random_attention_index_model(rng, 3, 2, "cardinality")
    report = validate_assumptions(model)
    assert not report.ok
