"""Conditional choice probabilities for every model variant.

Each function returns a length Y+1 probability vector indexed by alternative
id, slot 0 being the default option. The no-default variant keeps the slot but
pins it to zero. All distributions sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .model import (
    MAX_ENUMERATED_ALTERNATIVES,
    ModelError,
    ModelSpec,
    Network,
    Variant,
    all_subsets,
    count_peers,
)
from .states import DEFAULT, Config, StateSpace


def _attention_profile(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Q(v | own, peer count of v) for v = 1..Y at the given configuration."""
    assert model.attention is not None
    own = config[person]
    y = model.num_alternatives
    out = np.empty(y)
    for v in range(1, y + 1):
        n = count_peers(model.network, config, person, v)
        out[v - 1] = model.attention.value(person, v, own, n)
    return out


def ccp_baseline(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Choice distribution: consider each option independently, pick the best.

    P(v) = Q(v|.) * prod over strictly preferred v' of (1 - Q(v'|.)), and the
    default picks up the probability that nothing is considered.
    """
    if model.variant is not Variant.BASELINE_DEFAULT:
        raise ModelError(f"ccp_baseline called on variant {model.variant.value}")
    model.state_space().validate(config)
    q = _attention_profile(model, person, config)
    y = model.num_alternatives
    probs = np.zeros(y + 1)
    for v in range(1, y + 1):
        miss = 1.0
        for u in model.preferences.dominators(person, v):
            miss *= 1.0 - q[u - 1]
        probs[v] = q[v - 1] * miss
    probs[DEFAULT] = np.prod(1.0 - q)
    return probs


def ccp_random_pref(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Choice distribution with a random choice rule over the considered set.

    Exact enumeration over all 2^Y consideration sets; capped at Y <= 12.
    """
    if model.variant is not Variant.RANDOM_PREFERENCES:
        raise ModelError(f"ccp_random_pref called on variant {model.variant.value}")
    y = model.num_alternatives
    if y > MAX_ENUMERATED_ALTERNATIVES:
        raise ModelError(
            f"subset enumeration needs 2^{y} terms; cap is Y <= {MAX_ENUMERATED_ALTERNATIVES}"
        )
    model.state_space().validate(config)
    assert model.choice_rule is not None
    q = _attention_profile(model, person, config)
    probs = np.zeros(y + 1)
    for members in all_subsets(y):
        weight = 1.0
        for v in range(1, y + 1):
            weight *= q[v - 1] if v in members else 1.0 - q[v - 1]
        if not members:
            probs[DEFAULT] += weight
            continue
        cset = frozenset(members)
        for v in members:
            probs[v] += weight * model.choice_rule.probability(person, v, cset)
    return probs


def ccp_no_default(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Choice distribution when an empty consideration set keeps the old choice."""
    if model.variant is not Variant.NO_DEFAULT:
        raise ModelError(f"ccp_no_default called on variant {model.variant.value}")
    if DEFAULT in config:
        raise ModelError(f"default choice present in no-default configuration {config}")
    model.state_space().validate(config)
    q = _attention_profile(model, person, config)
    y = model.num_alternatives
    probs = np.zeros(y + 1)
    for v in range(1, y + 1):
        miss = 1.0
        for u in model.preferences.dominators(person, v):
            miss *= 1.0 - q[u - 1]
        probs[v] = q[v - 1] * miss
    probs[config[person]] += np.prod(1.0 - q)
    return probs


def ccp_attention_index(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Choice distribution when consideration sets are drawn by a set index.

    The probability of facing set C is eta(C|y) normalized over all subsets;
    the person then picks her preference maximum of C.
    """
    if model.variant is not Variant.ATTENTION_INDEX:
        raise ModelError(f"ccp_attention_index called on variant {model.variant.value}")
    model.state_space().validate(config)
    rule = model.attention_index
    assert rule is not None
    y = model.num_alternatives
    probs = np.zeros(y + 1)
    total = 0.0
    for members in all_subsets(y):
        cset = frozenset(members)
        weight = rule.value(person, cset, config)
        total += weight
        if members:
            best = min(cset, key=lambda v: model.preferences.rank(person, v))
            probs[best] += weight
        else:
            probs[DEFAULT] += weight
    if total <= 0.0:
        raise ModelError(f"attention index sums to {total} for person {person} at {config}")
    return probs / total


def ccp_brock_durlauf(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Multinomial-logit contrast model with peer effects in preferences.

    Utility of v is delta[a,v] plus a social term in the peer count; the
    default has utility zero. Used to tell the two peer-effect channels apart.
    """
    if model.variant is not Variant.PEER_PREFERENCE_LOGIT:
        raise ModelError(f"ccp_brock_durlauf called on variant {model.variant.value}")
    model.state_space().validate(config)
    terms = model.brock_durlauf
    assert terms is not None
    y = model.num_alternatives
    own = config[person]
    utilities = np.zeros(y + 1)
    for v in range(1, y + 1):
        n = count_peers(model.network, config, person, v)
        utilities[v] = terms.delta[person, v - 1] + terms.social(person, v, own, n)
    weights = np.exp(utilities - np.max(utilities))
    return weights / weights.sum()


_DISPATCH = {
    Variant.BASELINE_DEFAULT: ccp_baseline,
    Variant.RANDOM_PREFERENCES: ccp_random_pref,
    Variant.NO_DEFAULT: ccp_no_default,
    Variant.ATTENTION_INDEX: ccp_attention_index,
    Variant.PEER_PREFERENCE_LOGIT: ccp_brock_durlauf,
}


def ccp_vector(model: ModelSpec, person: int, config: Config) -> NDArray[np.float64]:
    """Variant-appropriate choice distribution for one person and configuration."""
    return _DISPATCH[model.variant](model, person, config)


# ---------------------------------------------------------------------------
# full tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CcpTable:
    """Full map (person, configuration) -> choice distribution.

    ``values`` has shape (num configs, A, Y+1) with configurations in
    lexicographic order; slot 0 of the last axis is the default option
    (identically zero for the no-default variant).
    """

    space: StateSpace
    values: NDArray[np.float64]
    variant: Variant

    @property
    def num_people(self) -> int:
        return self.space.num_people

    @property
    def num_alternatives(self) -> int:
        return self.space.num_alternatives

    def distribution(self, person: int, config: Config) -> NDArray[np.float64]:
        return self.values[self.space.row(config), person]

    def probability(self, person: int, alt: int, config: Config) -> float:
        return float(self.values[self.space.row(config), person, alt])


def ccp_table(model: ModelSpec) -> CcpTable:
    """Evaluate the model's choice probabilities at every configuration."""
    if model.variant is Variant.BASELINE_DEFAULT:
        values = baseline_ccp_tensor(model)
        return CcpTable(model.state_space(), values, model.variant)
    space = model.state_space()
    values = np.empty((space.size, model.num_people, model.num_alternatives + 1))
    fn = _DISPATCH[model.variant]
    for row, config in enumerate(space.configs()):
        for person in range(model.num_people):
            values[row, person] = fn(model, person, config)
    return CcpTable(space, values, model.variant)


# ---------------------------------------------------------------------------
# vectorized base-variant path (shared with the rate-matrix builder and MLE)
# ---------------------------------------------------------------------------


def choice_counts(space: StateSpace, network: Network) -> NDArray[np.int8]:
    """(size, A, Y) tensor of peer counts: friends of a choosing v at each row."""
    digits = space.digits()
    y = space.num_alternatives
    counts = np.zeros((space.size, network.num_people, y), dtype=np.int8)
    for a in range(network.num_people):
        nbrs = list(network.neighbors(a))
        if not nbrs:
            continue
        friend_digits = digits[:, nbrs]
        for v in range(1, y + 1):
            counts[:, a, v - 1] = (friend_digits == v).sum(axis=1)
    return counts


def attention_values(
    model: ModelSpec,
    counts: NDArray[np.int8] | None = None,
) -> NDArray[np.float64]:
    """(size, A, Y) tensor of Q(v | own, peer count) over all configurations."""
    assert model.attention is not None
    space = model.state_space()
    if counts is None:
        counts = choice_counts(space, model.network)
    digits = space.digits()
    y = model.num_alternatives
    out = np.empty((space.size, model.num_people, y))
    for a in range(model.num_people):
        own = digits[:, a].astype(np.int64)
        table = model.attention.tables[a]
        for v in range(1, y + 1):
            out[:, a, v - 1] = table[own, v - 1, counts[:, a, v - 1].astype(np.int64)]
    return out


def baseline_ccp_tensor(
    model: ModelSpec,
    qvals: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """Vectorized base-variant CCP table over the whole state space."""
    if qvals is None:
        qvals = attention_values(model)
    size = qvals.shape[0]
    y = model.num_alternatives
    probs = np.empty((size, model.num_people, y + 1))
    for a in range(model.num_people):
        miss = np.ones(size)
        for v in model.preferences.order(a):
            q = qvals[:, a, v - 1]
            probs[:, a, v] = q * miss
            miss = miss * (1.0 - q)
        probs[:, a, DEFAULT] = miss
    return probs
