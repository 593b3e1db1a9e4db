import itertools

import numpy as np
import pytest

from peersets.builtin import restaurant_model, restaurant_network_directed
from peersets.ccp import CcpTable, ccp_table
from peersets.identify import (
    IdentificationError,
    PartialIdentification,
    RankDeficiencyError,
    SignPatternError,
    build_consideration_matrix,
    dominated_switch_violations,
    identify_attention,
    identify_attention_index,
    identify_from_P,
    identify_network,
    identify_no_default,
    identify_preferences,
    identify_random_pref,
    predicted_sign,
    triple_sign_probes,
)
from peersets.model import (
    AttentionRule,
    BrockDurlaufTerms,
    ModelSpec,
    Network,
    PreferenceProfile,
    Variant,
)

from helpers import (
    increasing_probs,
    random_attention,
    random_attention_index_model,
    random_baseline_model,
    random_no_default_model,
    random_random_pref_model,
)


def attention_max_error(got: AttentionRule, want: AttentionRule, owns=None) -> float:
    err = 0.0
    for a in range(want.num_people):
        for v in range(1, want.num_alternatives + 1):
            own_range = owns if owns is not None else range(want.num_alternatives + 1)
            for own in own_range:
                for n in range(want.degree(a) + 1):
                    err = max(
                        err, abs(got.value(a, v, own, n) - want.value(a, v, own, n))
                    )
    return err


# -- base variant -------------------------------------------------------------


def three_person_two_option_model():
    """Person 0 watches person 1 only; persons 1,2 watch person 0."""
    net = Network(3, [(0, 1), (1, 0), (2, 0)])
    prefs = PreferenceProfile([(2, 1), (1, 2), (2, 1)])
    rng = np.random.default_rng(101)
    att = random_attention(rng, net, 2, own_dependent=True)
    return ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=prefs,
        rates=np.ones(3),
        attention=att,
    )


def test_edge_detection_three_people():
    model = three_person_two_option_model()
    table = ccp_table(model)
    net = identify_network(table)
    assert net.edges == model.network.edges
    # the defining inequality: person 0's default probability drops when the
    # friend moves, not when the stranger does
    p_base = table.probability(0, 0, (0, 0, 0))
    assert p_base > table.probability(0, 0, (0, 1, 0))
    assert p_base == pytest.approx(table.probability(0, 0, (0, 0, 1)), abs=1e-15)


def test_preference_detection_three_people():
    model = three_person_two_option_model()
    table = ccp_table(model)
    prefs = identify_preferences(table, model.network)
    assert prefs.orders == model.preferences.orders
    # person 0 prefers 2: P(1|.) falls when the friend adopts 2
    assert table.probability(0, 1, (0, 0, 0)) > table.probability(0, 1, (0, 2, 0))


def test_attention_recovery_three_people():
    model = three_person_two_option_model()
    table = ccp_table(model)
    att = identify_attention(table, model.network, model.preferences)
    assert attention_max_error(att, model.attention) < 1e-12


def test_restaurant_recovery():
    model = restaurant_model()
    net, prefs, att = identify_from_P(ccp_table(model))
    assert net.edges == restaurant_network_directed().edges
    assert prefs.orders == model.preferences.orders
    assert attention_max_error(att, model.attention, owns=[0]) < 1e-12
    for n, want in enumerate((0.25, 0.75, 0.875)):
        assert att.value(2, 1, 0, n) == pytest.approx(want, abs=1e-12)


def test_round_trip_random_instances():
    rng = np.random.default_rng(55)
    for _ in range(25):
        num_people = int(rng.integers(2, 5))
        num_alts = int(rng.integers(1, 4))
        model = random_baseline_model(rng, num_people, num_alts, own_dependent=True)
        net, prefs, att = identify_from_P(ccp_table(model))
        assert net.edges == model.network.edges
        assert prefs.orders == model.preferences.orders
        assert attention_max_error(att, model.attention) < 1e-9


def test_perturbed_table_keeps_discrete_structure():
    rng = np.random.default_rng(56)
    model = random_baseline_model(rng, 4, 3)
    table = ccp_table(model)
    noisy = table.values + rng.uniform(-1e-6, 1e-6, size=table.values.shape)
    noisy_table = CcpTable(table.space, noisy, table.variant)
    net = identify_network(noisy_table, tol=1e-4)
    prefs = identify_preferences(noisy_table, net, tol=1e-4)
    assert net.edges == model.network.edges
    assert prefs.orders == model.preferences.orders


def test_flat_attention_reports_isolation():
    net = Network.undirected(2, [(0, 1)])
    att = AttentionRule.shared_levels(net, 2, [0.4, 0.4])
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1, 2), (2, 1)]),
        rates=np.ones(2),
        attention=att,
    )
    table = ccp_table(model)
    recovered = identify_network(table)
    assert not recovered.edges  # no alternative ever reacts to the peer
    with pytest.raises(IdentificationError):
        identify_preferences(table, recovered)


# -- discrimination signature ---------------------------------------------------


def test_signature_clean_for_consideration_model():
    model = restaurant_model()
    violations = dominated_switch_violations(
        ccp_table(model), model.network, model.preferences
    )
    assert violations == []


def test_signature_fails_for_preference_peer_effects():
    net = restaurant_network_directed()
    prefs = PreferenceProfile([(2, 1), (1, 2), (2, 1), (1, 2), (1, 2)])
    model = ModelSpec(
        variant=Variant.PEER_PREFERENCE_LOGIT,
        network=net,
        preferences=prefs,
        rates=np.ones(5),
        brock_durlauf=BrockDurlaufTerms.linear(np.zeros((5, 2)), 0.6),
    )
    table = ccp_table(model)
    violations = dominated_switch_violations(table, net, prefs, tol=1e-9)
    assert violations
    # the watched option leaks probability to the switched-to dominated one
    assert all(v.change < 0 for v in violations)
    base = (0, 0, 0, 0, 0)
    flipped = table.space.replace(base, 1, 1)  # friend of person 0 adopts 1
    assert table.probability(0, 1, flipped) > table.probability(0, 1, base)


# -- consideration matrix and its rank ---------------------------------------------


def test_single_peer_two_option_matrix():
    net = Network.undirected(2, [(0, 1)])
    rng = np.random.default_rng(60)
    att = random_attention(rng, net, 2)
    cm = build_consideration_matrix(att, 0, 1, 1)
    q0 = att.value(0, 2, 0, 0)
    q1 = att.value(0, 2, 0, 1)
    want = np.array([[1 - q0, q0], [1 - q1, q1]])
    assert np.allclose(cm.matrix, want)
    assert np.linalg.det(cm.matrix) == pytest.approx(q1 - q0)
    assert np.linalg.det(cm.matrix) > 0
    assert cm.columns == (frozenset({1}), frozenset({1, 2}))


def test_single_peer_three_option_matrix_is_deficient():
    net = Network.undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    rng = np.random.default_rng(61)
    att = random_attention(rng, net, 3)
    cm = build_consideration_matrix(att, 0, 1, 1)
    assert cm.matrix.shape == (3, 4)
    assert not cm.has_full_column_rank()


@pytest.mark.parametrize("num_alts", [2, 3, 4])
def test_rank_threshold_both_directions(num_alts):
    rng = np.random.default_rng(62)
    for trial in range(20):
        max_peers = int(rng.integers(max(1, num_alts - 2), num_alts + 2))
        net = Network(2, [(0, 1), (1, 0)])
        # hand the table enough peer-count levels for the probe
        tables = [
            np.stack(
                [
                    np.stack([increasing_probs(rng, max_peers + 1) for _ in range(num_alts)])
                    for _ in range(num_alts + 1)
                ]
            )
            for _ in range(2)
        ]
        att = AttentionRule(tables)
        cm = build_consideration_matrix(att, 0, 1, max_peers)
        assert cm.has_full_column_rank() == (max_peers >= num_alts - 1)


# -- random preferences ------------------------------------------------------------


def test_random_pref_round_trip():
    rng = np.random.default_rng(63)
    net = Network(
        4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 0), (2, 3), (3, 0), (3, 1)]
    )  # everyone has two friends
    for _ in range(5):
        model = random_random_pref_model(rng, 4, 3, network=net)
        table = ccp_table(model)
        att, rule = identify_random_pref(table, net)
        assert attention_max_error(att, model.attention) < 1e-9
        for a in range(4):
            for size in range(1, 4):
                for members in itertools.combinations(range(1, 4), size):
                    cset = frozenset(members)
                    for v in members:
                        assert rule.probability(a, v, cset) == pytest.approx(
                            model.choice_rule.probability(a, v, cset), abs=1e-9
                        )


def test_random_pref_rank_deficiency():
    rng = np.random.default_rng(64)
    net = Network(3, [(0, 1), (1, 0), (2, 0)])  # single friend each, Y=3
    model = random_random_pref_model(rng, 3, 3, network=net)
    with pytest.raises(RankDeficiencyError, match="set-identified"):
        identify_random_pref(ccp_table(model), net)


# -- no-default variant --------------------------------------------------------------


def _no_default_with_order(rng, orders):
    net = Network(3, [(0, 1), (1, 2), (2, 0)])
    att = random_attention(rng, net, 3)
    return ModelSpec(
        variant=Variant.NO_DEFAULT,
        network=net,
        preferences=PreferenceProfile(orders),
        rates=np.ones(3),
        attention=att,
    )


def test_sign_probes_match_stated_pattern():
    rng = np.random.default_rng(65)
    model = _no_default_with_order(rng, [(1, 2, 3), (1, 2, 3), (1, 2, 3)])
    table = ccp_table(model)
    signs = triple_sign_probes(table, 0, 1, (1, 2, 3), tol=1e-11)
    assert signs[(2, 1, 3)] == "-"
    assert signs[(2, 3, 1)] == "+"
    assert signs[(1, 2, 3)] == "0"
    assert signs[(1, 3, 2)] == "0"


def test_sign_table_separates_orders():
    # each pair of orders is told apart by a commonly determined probe,
    # except the three pairs sharing a top option
    probes = list(itertools.permutations((1, 2, 3)))
    orders = list(itertools.permutations((1, 2, 3)))
    for o1, o2 in itertools.combinations(orders, 2):
        determined_both = [
            p
            for p in probes
            if predicted_sign(o1, p) != "~" and predicted_sign(o2, p) != "~"
        ]
        separated = any(predicted_sign(o1, p) != predicted_sign(o2, p) for p in determined_both)
        if o1[0] == o2[0]:
            assert not separated
        else:
            assert separated


def test_no_default_round_trip():
    rng = np.random.default_rng(66)
    for _ in range(5):
        model = random_no_default_model(rng, 3, 3)
        net, prefs, att = identify_no_default(ccp_table(model))
        assert net.edges == model.network.edges
        assert prefs.orders == model.preferences.orders
        assert attention_max_error(att, model.attention, owns=[1]) < 1e-9


def test_no_default_needs_three_options():
    rng = np.random.default_rng(67)
    model = random_no_default_model(rng, 3, 2)
    with pytest.raises(IdentificationError):
        identify_no_default(ccp_table(model))


def test_no_default_rejects_bad_signs():
    rng = np.random.default_rng(68)
    model = random_no_default_model(rng, 3, 3)
    table = ccp_table(model)
    broken = table.values.copy()
    # scramble one person's probabilities so no preference order fits
    broken[:, 0, 1:] = broken[:, 0, 1:][:, ::-1] * 0.5 + 0.25 * broken[:, 0, 1:]
    broken /= broken.sum(axis=2, keepdims=True)
    with pytest.raises((SignPatternError, IdentificationError)):
        identify_no_default(CcpTable(table.space, broken, table.variant))


# -- attention-index variant ------------------------------------------------------


def index_max_error(got, want, num_people, num_alts, configs) -> float:
    err = 0.0
    for a in range(num_people):
        for size in range(1, num_alts + 1):
            for members in itertools.combinations(range(1, num_alts + 1), size):
                cset = frozenset(members)
                for cfg in configs:
                    err = max(
                        err,
                        abs(got.value(a, cset, cfg) - want.value(a, cset, cfg)),
                    )
    return err


@pytest.mark.parametrize("restriction", ["multiplicative", "additive"])
def test_index_full_pipeline(restriction):
    rng = np.random.default_rng(70)
    model = random_attention_index_model(rng, 3, 3, restriction)
    table = ccp_table(model)
    net, prefs, rule = identify_attention_index(table, restriction)
    assert net.edges == model.network.edges
    assert prefs.orders == model.preferences.orders
    err = index_max_error(
        rule, model.attention_index, 3, 3, model.state_space().configs()
    )
    assert err < 1e-9


@pytest.mark.parametrize("restriction", ["cardinality", "best-alternative"])
def test_index_recovery_given_structure(restriction):
    rng = np.random.default_rng(71)
    model = random_attention_index_model(rng, 3, 3, restriction)
    table = ccp_table(model)
    _, _, rule = identify_attention_index(
        table, restriction, network=model.network, preferences=model.preferences
    )
    err = index_max_error(
        rule, model.attention_index, 3, 3, model.state_space().configs()
    )
    assert err < 1e-9


def test_index_from_restaurant_attention():
    base = restaurant_model()
    from peersets.model import AttentionIndexRule

    idx_model = ModelSpec(
        variant=Variant.ATTENTION_INDEX,
        network=base.network,
        preferences=base.preferences,
        rates=base.rates,
        attention_index=AttentionIndexRule.from_attention(base.attention, base.network),
    )
    table = ccp_table(idx_model)
    net, prefs, rule = identify_attention_index(table, "multiplicative")
    assert net.edges == base.network.edges
    assert prefs.orders == base.preferences.orders
    # singleton values are the odds of the shared attention levels
    cfg = (1, 1, 0, 0, 0)  # both friends of person 2 at option 1
    want = 0.875 / 0.125
    assert rule.value(2, frozenset({1}), cfg) == pytest.approx(want, abs=1e-9)
    lone = (1, 0, 0, 0, 0)  # one friend at option 1
    assert rule.value(2, frozenset({1}), lone) == pytest.approx(3.0, abs=1e-9)


def test_index_unrestricted_partial_report():
    rng = np.random.default_rng(72)
    model = random_attention_index_model(rng, 2, 2, "multiplicative")
    table = ccp_table(model)
    _, _, systems = identify_attention_index(table, "unrestricted")
    assert isinstance(systems, list)
    first = systems[0]
    assert isinstance(first, PartialIdentification)
    assert first.matrix.shape == (2, 3)  # Y equations, 2^Y - 1 unknowns
    assert first.degrees_of_freedom == 1
