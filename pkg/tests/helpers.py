"""Shared generators for random admissible model instances."""

from __future__ import annotations

import numpy as np

from peersets.model import (
    AttentionIndexRule,
    AttentionRule,
    ModelSpec,
    Network,
    PreferenceProfile,
    RandomChoiceRule,
    Variant,
)


def increasing_probs(rng: np.random.Generator, k: int, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    """k strictly increasing values inside (lo, hi)."""
    raw = np.sort(rng.uniform(0.0, 1.0, size=k))
    if k > 1:
        raw = 0.8 * raw + 0.2 * np.linspace(0.0, 1.0, k)
    return lo + (hi - lo) * raw


def random_network(rng: np.random.Generator, num_people: int) -> Network:
    """Random directed graph where everyone has at least one friend."""
    edges = set()
    for a in range(num_people):
        others = [b for b in range(num_people) if b != a]
        count = int(rng.integers(1, len(others) + 1))
        for b in rng.choice(others, size=count, replace=False):
            edges.add((a, int(b)))
    return Network(num_people, edges)


def random_preferences(rng: np.random.Generator, num_people: int, num_alternatives: int) -> PreferenceProfile:
    return PreferenceProfile(
        [tuple(rng.permutation(num_alternatives) + 1) for _ in range(num_people)]
    )


def random_attention(
    rng: np.random.Generator,
    network: Network,
    num_alternatives: int,
    own_dependent: bool = False,
) -> AttentionRule:
    """Random tables satisfying the interiority and strict-monotonicity rules."""
    tables = []
    for a in range(network.num_people):
        deg = network.degree(a)
        t = np.empty((num_alternatives + 1, num_alternatives, deg + 1))
        for v in range(num_alternatives):
            if own_dependent:
                for own in range(num_alternatives + 1):
                    t[own, v] = increasing_probs(rng, deg + 1)
            else:
                t[:, v] = increasing_probs(rng, deg + 1)[None, :]
        tables.append(t)
    return AttentionRule(tables)


def random_baseline_model(
    rng: np.random.Generator,
    num_people: int,
    num_alternatives: int,
    own_dependent: bool = False,
) -> ModelSpec:
    network = random_network(rng, num_people)
    return ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=network,
        preferences=random_preferences(rng, num_people, num_alternatives),
        rates=rng.uniform(0.5, 2.0, size=num_people),
        attention=random_attention(rng, network, num_alternatives, own_dependent),
    )


def random_choice_rule(
    rng: np.random.Generator, num_people: int, num_alternatives: int
) -> RandomChoiceRule:
    """Logit choice rule with random mean utilities."""
    return RandomChoiceRule.logit(rng.normal(0.0, 1.0, size=(num_people, num_alternatives)))


def random_random_pref_model(
    rng: np.random.Generator,
    num_people: int,
    num_alternatives: int,
    network: Network | None = None,
) -> ModelSpec:
    if network is None:
        network = random_network(rng, num_people)
    return ModelSpec(
        variant=Variant.RANDOM_PREFERENCES,
        network=network,
        preferences=random_preferences(rng, num_people, num_alternatives),
        rates=np.ones(num_people),
        attention=random_attention(rng, network, num_alternatives),
        choice_rule=random_choice_rule(rng, num_people, num_alternatives),
    )


def random_no_default_model(
    rng: np.random.Generator, num_people: int, num_alternatives: int
) -> ModelSpec:
    network = random_network(rng, num_people)
    return ModelSpec(
        variant=Variant.NO_DEFAULT,
        network=network,
        preferences=random_preferences(rng, num_people, num_alternatives),
        rates=np.ones(num_people),
        attention=random_attention(rng, network, num_alternatives),
    )


def random_singleton_index(rng: np.random.Generator, network: Network, num_alternatives: int):
    """Positive singleton attention values, strictly increasing in the peer count."""
    values = {}
    for a in range(network.num_people):
        deg = network.degree(a)
        for v in range(1, num_alternatives + 1):
            base = rng.uniform(0.2, 2.0)
            steps = np.cumsum(rng.uniform(0.1, 1.0, size=deg + 1))
            for n in range(deg + 1):
                values[(a, v, n)] = base + steps[n]

    def singleton(person: int, v: int, count: int) -> float:
        return values[(person, v, count)]

    return singleton


def random_attention_index_model(
    rng: np.random.Generator,
    num_people: int,
    num_alternatives: int,
    restriction: str,
    network: Network | None = None,
    preferences: PreferenceProfile | None = None,
) -> ModelSpec:
    if network is None:
        network = random_network(rng, num_people)
    if preferences is None:
        preferences = random_preferences(rng, num_people, num_alternatives)
    singleton = random_singleton_index(rng, network, num_alternatives)
    if restriction == "multiplicative":
        rule = AttentionIndexRule.multiplicative(network, num_alternatives, singleton)
    elif restriction == "additive":
        rule = AttentionIndexRule.additive(network, num_alternatives, singleton)
    elif restriction == "best-alternative":
        rule = AttentionIndexRule.best_alternative(network, preferences, singleton)
    elif restriction == "cardinality":
        # positive per-size levels, responsive to total peer activity
        base = rng.uniform(0.3, 1.5, size=num_alternatives + 1)

        def level(person: int, size: int, config) -> float:
            if size == 0:
                return 1.0
            active = sum(1 for b in network.neighbors(person) if config[b] != 0)
            return float(base[size] * (1.0 + 0.5 * active))

        rule = AttentionIndexRule.cardinality(num_people, num_alternatives, level)
    else:
        raise ValueError(restriction)
    return ModelSpec(
        variant=Variant.ATTENTION_INDEX,
        network=network,
        preferences=preferences,
        rates=np.ones(num_people),
        attention_index=rule,
    )
