"""Constructive recovery of model primitives from choice probabilities.

Everything here consumes a full CCP table (person, configuration -> choice
distribution) and inverts it: edges from default-probability responses to
peer switches, preference ranks from which switches depress a choice
probability, attention tables by peeling dominance products in descending
preference order, random choice rules by solving the consideration-set
linear system, and the no-default / set-index variants via their own
procedures. All tests are exact up to a caller-supplied tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .ccp import CcpTable
from .model import (
    AttentionIndexRule,
    AttentionRule,
    Network,
    PreferenceProfile,
    RandomChoiceRule,
    Variant,
)
from .states import DEFAULT, Config

ANALYTIC_TOL = 1e-9
RANK_TOL = 1e-10


class IdentificationError(RuntimeError):
    """Input table is inconsistent with the model class being inverted."""


class RankDeficiencyError(IdentificationError):
    """The consideration-set system does not pin the choice rule down."""


class SignPatternError(IdentificationError):
    """Observed switch-response signs match no strict preference order."""


def _all_default(num_people: int) -> Config:
    return (DEFAULT,) * num_people


# ---------------------------------------------------------------------------
# base variant: network, preferences, attention
# ---------------------------------------------------------------------------


def identify_network(ccp: CcpTable, tol: float = ANALYTIC_TOL) -> Network:
    """Edges from the default probability's response to one-person switches.

    b is a friend of a exactly when moving b off the default strictly lowers
    a's probability of choosing the default. All alternatives are probed and
    must agree; a mixed response is reported as an ambiguous edge.
    """
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    base_probs = [ccp.probability(a, DEFAULT, base) for a in range(num_people)]
    edges = []
    for a in range(num_people):
        for b in range(num_people):
            if b == a:
                continue
            drops = []
            for v in range(1, y + 1):
                flipped = ccp.space.replace(base, b, v)
                drops.append(base_probs[a] - ccp.probability(a, DEFAULT, flipped))
            if all(d > tol for d in drops):
                edges.append((a, b))
            elif any(d > tol for d in drops):
                raise IdentificationError(
                    f"ambiguous edge {a}->{b}: default-probability drops {drops} "
                    f"straddle the tolerance {tol:.1e}"
                )
    return Network(num_people, edges)


def edge_statistics(ccp: CcpTable) -> dict[tuple[int, int], float]:
    """Smallest default-probability drop over probe options, per ordered pair.

    Positive values witness an edge; values at numerical zero witness its
    absence. Useful for reporting how decisively each edge test resolved.
    """
    num_people = ccp.num_people
    base = _all_default(num_people)
    out = {}
    for a in range(num_people):
        p_base = ccp.probability(a, DEFAULT, base)
        for b in range(num_people):
            if b == a:
                continue
            drops = [
                p_base - ccp.probability(a, DEFAULT, ccp.space.replace(base, b, v))
                for v in range(1, ccp.num_alternatives + 1)
            ]
            out[(a, b)] = min(drops)
    return out


def preference_witnesses(
    ccp: CcpTable, network: Network
) -> dict[tuple[int, int, int], float]:
    """Observed drop in P_a(v|.) when a's witness friend adopts w, per (a, v, w).

    A strictly positive drop witnesses w preferred to v; a zero drop witnesses
    the opposite ranking.
    """
    base = _all_default(ccp.num_people)
    out = {}
    for a in range(ccp.num_people):
        if not network.neighbors(a):
            continue
        witness = network.neighbors(a)[0]
        for v in range(1, ccp.num_alternatives + 1):
            p_base = ccp.probability(a, v, base)
            for w in range(1, ccp.num_alternatives + 1):
                if w == v:
                    continue
                flipped = ccp.space.replace(base, witness, w)
                out[(a, v, w)] = p_base - ccp.probability(a, v, flipped)
    return out


def identify_preferences(
    ccp: CcpTable, network: Network, tol: float = ANALYTIC_TOL
) -> PreferenceProfile:
    """Ranks from which peer switches depress each choice probability.

    P_a(v|.) falls when a friend adopts an option preferred to v and is flat
    when the friend adopts a dominated one.
    """
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    orders = []
    for a in range(num_people):
        if not network.neighbors(a):
            raise IdentificationError(f"person {a} has no friends; ranks unobservable")
        witness = network.neighbors(a)[0]
        beats = np.zeros((y + 1, y + 1), dtype=bool)
        for v in range(1, y + 1):
            p_base = ccp.probability(a, v, base)
            for w in range(1, y + 1):
                if w == v:
                    continue
                flipped = ccp.space.replace(base, witness, w)
                drop = p_base - ccp.probability(a, v, flipped)
                if drop > tol:
                    beats[w, v] = True
                elif drop < -tol:
                    raise IdentificationError(
                        f"person {a}: P({v}|.) rose when friend {witness} adopted {w}; "
                        "not a consideration-model table"
                    )
        orders.append(_order_from_beats(beats, y, a))
    return PreferenceProfile(orders)


def _order_from_beats(beats: NDArray[np.bool_], y: int, person: int) -> tuple[int, ...]:
    wins = beats[1:, 1:].sum(axis=1)
    order = tuple(int(v) for v in np.argsort(-wins, kind="stable") + 1)
    if sorted(wins) != list(range(y)):
        raise IdentificationError(
            f"person {person}: pairwise comparisons are not a strict order "
            f"(win counts {wins.tolist()})"
        )
    for hi_pos, v in enumerate(order):
        for w in order[hi_pos + 1 :]:
            if not beats[v, w] or beats[w, v]:
                raise IdentificationError(
                    f"person {person}: intransitive comparisons between {v} and {w}"
                )
    return order


def identify_attention(
    ccp: CcpTable,
    network: Network,
    preferences: PreferenceProfile,
    tol: float = ANALYTIC_TOL,
    min_product: float = 1e-12,
) -> AttentionRule:
    """Attention tables peeled off in descending preference order.

    The top option's CCP is its attention probability outright; lower options
    divide out the already-recovered dominance product.
    """
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    tables = []
    for a in range(num_people):
        friends = network.neighbors(a)
        deg = len(friends)
        table = np.empty((y + 1, y, deg + 1))
        for own in range(y + 1):
            start = ccp.space.replace(base, a, own)
            for v in preferences.order(a):
                for n in range(deg + 1):
                    config = start
                    for b in friends[:n]:
                        config = ccp.space.replace(config, b, v)
                    miss = 1.0
                    for u in preferences.dominators(a, v):
                        miss *= 1.0 - table[own, u - 1, 0]
                    if miss < min_product:
                        raise IdentificationError(
                            f"person {a}: dominance product {miss:.3e} too small to "
                            f"divide out for option {v}"
                        )
                    table[own, v - 1, n] = ccp.probability(a, v, config) / miss
        tables.append(table)
    rule = AttentionRule(tables)
    _check_recovered_attention(rule, tol)
    return rule


def _check_recovered_attention(rule: AttentionRule, tol: float) -> None:
    for a, table in enumerate(rule.tables):
        if np.any(table <= 0.0) or np.any(table >= 1.0):
            raise IdentificationError(
                f"person {a}: recovered attention values leave (0,1): "
                f"range [{table.min():.3e}, {table.max():.3e}]"
            )
        if np.any(np.diff(table, axis=2) <= -tol):
            raise IdentificationError(
                f"person {a}: recovered attention not increasing in the peer count"
            )


def identify_from_P(
    ccp: CcpTable, tol: float = ANALYTIC_TOL
) -> tuple[Network, PreferenceProfile, AttentionRule]:
    """Full base-variant recovery: network, then ranks, then attention."""
    network = identify_network(ccp, tol)
    preferences = identify_preferences(ccp, network, tol)
    attention = identify_attention(ccp, network, preferences, tol)
    return network, preferences, attention


# ---------------------------------------------------------------------------
# discrimination signature against peer effects in preferences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignatureViolation:
    person: int
    option: int
    switched_to: int
    friend: int
    change: float


def dominated_switch_violations(
    ccp: CcpTable,
    network: Network,
    preferences: PreferenceProfile,
    tol: float = 1e-12,
) -> list[SignatureViolation]:
    """Configurations where P_a(v|.) reacts to a friend adopting a dominated option.

    Empty for consideration-set tables; nonempty when peers shift utilities
    instead, which is what tells the two channels apart.
    """
    out = []
    base = _all_default(ccp.num_people)
    for a in range(ccp.num_people):
        for b in network.neighbors(a):
            for v in range(1, ccp.num_alternatives + 1):
                for w in range(1, ccp.num_alternatives + 1):
                    if w == v or preferences.prefers(a, w, v):
                        continue
                    flipped = ccp.space.replace(base, b, w)
                    change = ccp.probability(a, v, flipped) - ccp.probability(a, v, base)
                    if abs(change) > tol:
                        out.append(SignatureViolation(a, v, w, b, change))
    return out


# ---------------------------------------------------------------------------
# consideration-set coefficient matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConsiderationMatrix:
    """Coefficient matrix of the linear system for a random choice rule.

    Rows are peer-count vectors over the non-target alternatives (total count
    at most ``max_peers``); columns are consideration sets containing the
    target. Entry = product over non-target alternatives k of Q(k|own, n_k)
    when k is in the set and 1 - Q(k|own, n_k) when it is not.
    """

    person: int
    target: int
    others: tuple[int, ...]
    row_counts: tuple[tuple[int, ...], ...]
    columns: tuple[frozenset[int], ...]
    matrix: NDArray[np.float64]

    def numerical_rank(self, tol: float = RANK_TOL) -> int:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return int(np.sum(s > tol * s[0]))

    def has_full_column_rank(self, tol: float = RANK_TOL) -> bool:
        return self.numerical_rank(tol) == self.matrix.shape[1]


def count_vectors(length: int, max_total: int) -> list[tuple[int, ...]]:
    """Nonnegative integer vectors with sum <= max_total, by total then colex."""
    out = [
        v
        for v in itertools.product(range(max_total + 1), repeat=length)
        if sum(v) <= max_total
    ]
    out.sort(key=lambda v: (sum(v), tuple(reversed(v))))
    return out


def build_consideration_matrix(
    attention: AttentionRule,
    person: int,
    target: int,
    max_peers: int,
    own: int = DEFAULT,
) -> ConsiderationMatrix:
    """Assemble the coefficient matrix for one person and target alternative."""
    y = attention.num_alternatives
    if max_peers > attention.degree(person):
        raise ValueError(
            f"max_peers {max_peers} exceeds person {person}'s friend count"
        )
    others = tuple(v for v in range(1, y + 1) if v != target)
    rows = count_vectors(len(others), max_peers)
    subsets = [
        tuple(o for bit, o in enumerate(others) if mask >> bit & 1)
        for mask in range(2 ** len(others))
    ]
    matrix = np.empty((len(rows), len(subsets)))
    for i, counts in enumerate(rows):
        qs = [attention.value(person, k, own, counts[j]) for j, k in enumerate(others)]
        for c, subset in enumerate(subsets):
            prod = 1.0
            for j, k in enumerate(others):
                prod *= qs[j] if k in subset else 1.0 - qs[j]
            matrix[i, c] = prod
    columns = tuple(frozenset(subset) | {target} for subset in subsets)
    return ConsiderationMatrix(
        person=person,
        target=target,
        others=others,
        row_counts=tuple(rows),
        columns=columns,
        matrix=matrix,
    )


# ---------------------------------------------------------------------------
# random preferences
# ---------------------------------------------------------------------------


def identify_random_pref(
    ccp: CcpTable,
    network: Network,
    tol: float = ANALYTIC_TOL,
    rank_tol: float = RANK_TOL,
) -> tuple[AttentionRule, RandomChoiceRule]:
    """Recover attention from CCP ratios, then the choice rule by least squares.

    Moving one friend from the default onto the target multiplies the target
    probability by Q(n+1)/Q(n) and the default probability by
    (1-Q(n+1))/(1-Q(n)); the two ratios pin both attention levels at the
    first step and extend recursively. The choice rule then solves the
    consideration-set system, which has full column rank exactly when the
    person has at least Y-1 friends.

    Assumes the choice rule never selects the default. If it could, only the
    attention ratios Q(v|own, n)/Q(v|own, 0) would be recoverable by this
    route; that extension is out of scope.
    """
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    tables = []
    for a in range(num_people):
        friends = network.neighbors(a)
        deg = len(friends)
        table = np.empty((y + 1, y, deg + 1))
        for own in range(y + 1):
            start = ccp.space.replace(base, a, own)
            for v in range(1, y + 1):
                config = start
                for n in range(deg):
                    switched = ccp.space.replace(config, friends[n], v)
                    r_target = ccp.probability(a, v, switched) / ccp.probability(a, v, config)
                    if n == 0:
                        r_default = ccp.probability(a, DEFAULT, switched) / ccp.probability(
                            a, DEFAULT, config
                        )
                        if r_target - r_default < tol:
                            raise IdentificationError(
                                f"person {a}, option {v}: switch ratios "
                                f"{r_target}/{r_default} do not separate attention "
                                "levels"
                            )
                        table[own, v - 1, 0] = (1.0 - r_default) / (r_target - r_default)
                    table[own, v - 1, n + 1] = table[own, v - 1, n] * r_target
                    config = switched
        tables.append(table)
    attention = AttentionRule(tables)
    _check_recovered_attention(attention, tol)

    rule_table: dict[tuple[int, frozenset[int]], dict[int, float]] = {}
    for a in range(num_people):
        friends = network.neighbors(a)
        deg = len(friends)
        system = build_consideration_matrix(attention, a, 1, deg, own=DEFAULT)
        cols = system.matrix.shape[1]
        if deg < y - 1 or not system.has_full_column_rank(rank_tol):
            raise RankDeficiencyError(
                f"person {a}: consideration-set system has {cols} unknowns but "
                f"rank {system.numerical_rank(rank_tol)}; point recovery of the "
                f"choice rule needs at least Y-1 = {y - 1} friends (person has "
                f"{deg}), otherwise it is only set-identified"
            )
        for v in range(1, y + 1):
            system = build_consideration_matrix(attention, a, v, deg, own=DEFAULT)
            rhs = np.empty(len(system.row_counts))
            for i, counts in enumerate(system.row_counts):
                config = base
                used = 0
                for j, k in enumerate(system.others):
                    for _ in range(counts[j]):
                        config = ccp.space.replace(config, friends[used], k)
                        used += 1
                rhs[i] = ccp.probability(a, v, config) / attention.value(a, v, DEFAULT, 0)
            solution, *_ = np.linalg.lstsq(system.matrix, rhs, rcond=None)
            residual = float(np.max(np.abs(system.matrix @ solution - rhs)))
            if residual > max(tol, 1e-8):
                raise IdentificationError(
                    f"person {a}, option {v}: consideration-set system residual "
                    f"{residual:.3e}; ratios are inconsistent with a single choice rule"
                )
            for cset, value in zip(system.columns, solution):
                rule_table.setdefault((a, cset), {})[v] = float(value)
    choice_rule = RandomChoiceRule.from_table(num_people, y, rule_table)
    _check_rule_sums(rule_table, num_people, y, tol)
    return attention, choice_rule


def _check_rule_sums(
    rule_table: dict[tuple[int, frozenset[int]], dict[int, float]],
    num_people: int,
    y: int,
    tol: float,
) -> None:
    for (a, cset), values in rule_table.items():
        total = sum(values.get(v, 0.0) for v in cset)
        if abs(total - 1.0) > max(1e-7, tol * 100):
            raise IdentificationError(
                f"person {a}: recovered choice rule over {sorted(cset)} sums to {total}"
            )


# ---------------------------------------------------------------------------
# no-default variant
# ---------------------------------------------------------------------------


def identify_no_default(
    ccp: CcpTable, tol: float = ANALYTIC_TOL
) -> tuple[Network, PreferenceProfile, AttentionRule]:
    """Recover all primitives when an empty consideration keeps the old choice.

    Needs at least three options: edges come from invariance of off-choice
    probabilities, the top option of each triple from the sign pattern of
    switch responses, the remaining ranks from a ratio monotonicity test, and
    the attention table from peeling first the rows where the target differs
    from the current choice and then, using those, the sticky rows.
    """
    y = ccp.num_alternatives
    if y < 3:
        raise IdentificationError(f"no-default recovery needs Y >= 3, got {y}")
    network = _no_default_network(ccp, tol)
    preferences = _no_default_preferences(ccp, network, tol)
    attention = _no_default_attention(ccp, network, preferences, tol)
    _check_recovered_attention(attention, tol)
    return network, preferences, attention


def _uniform_config(num_people: int, value: int) -> Config:
    return (value,) * num_people


def _no_default_network(ccp: CcpTable, tol: float) -> Network:
    num_people = ccp.num_people
    y = ccp.num_alternatives
    edges = []
    for a in range(num_people):
        for b in range(num_people):
            if b == a:
                continue
            responses = []
            for v in range(1, y + 1):
                for w in range(1, y + 1):
                    if w == v:
                        continue
                    base = _uniform_config(num_people, w)
                    flipped = ccp.space.replace(base, b, v)
                    responses.append(
                        ccp.probability(a, v, flipped) - ccp.probability(a, v, base)
                    )
            if all(r > tol for r in responses):
                edges.append((a, b))
            elif any(abs(r) > tol for r in responses):
                raise IdentificationError(
                    f"ambiguous edge {a}->{b}: switch responses {responses} mix "
                    "zero and nonzero"
                )
    return Network(num_people, edges)


_SIGN_FLAT = "0"
_SIGN_DOWN = "-"
_SIGN_UP = "+"
_SIGN_FREE = "~"


def predicted_sign(order: tuple[int, int, int], probe: tuple[int, int, int]) -> str:
    """Sign of the switch response under a candidate triple order.

    ``order`` lists the triple best-first; ``probe`` is (watched option,
    switched-from option, background option). The response is flat when the
    watched option tops the triple, negative when the switched-from option is
    the only member above it, positive when the background option is, and
    unconstrained when the watched option is worst.
    """
    v1, v2, v3 = probe
    if order[0] == v1:
        return _SIGN_FLAT
    if order[1] == v1:
        return _SIGN_DOWN if order[0] == v2 else _SIGN_UP
    return _SIGN_FREE


def observed_sign(delta: float, tol: float) -> str:
    if delta > tol:
        return _SIGN_UP
    if delta < -tol:
        return _SIGN_DOWN
    return _SIGN_FLAT


def triple_sign_probes(
    ccp: CcpTable, person: int, witness: int, triple: tuple[int, int, int], tol: float
) -> dict[tuple[int, int, int], str]:
    """Observed response signs for all six ordered probes of one triple."""
    num_people = ccp.num_people
    signs = {}
    for v1, v2, v3 in itertools.permutations(triple):
        base = _uniform_config(num_people, v3)
        moved = ccp.space.replace(base, witness, v2)
        delta = ccp.probability(person, v1, moved) - ccp.probability(person, v1, base)
        signs[(v1, v2, v3)] = observed_sign(delta, tol)
    return signs


def triple_best(
    ccp: CcpTable, person: int, witness: int, triple: tuple[int, int, int], tol: float
) -> int:
    """Top option of a triple via sign-pattern matching.

    Candidate orders must reproduce every determined sign; the survivors can
    disagree only below the top, which is all this step needs.
    """
    signs = triple_sign_probes(ccp, person, witness, triple, tol)
    candidates = []
    for order in itertools.permutations(triple):
        ok = True
        for probe, seen in signs.items():
            want = predicted_sign(order, probe)
            if want != _SIGN_FREE and want != seen:
                ok = False
                break
        if ok:
            candidates.append(order)
    if not candidates:
        raise SignPatternError(
            f"person {person}: switch-response signs {signs} match no strict order "
            f"of {triple}"
        )
    bests = {order[0] for order in candidates}
    if len(bests) != 1:
        raise SignPatternError(
            f"person {person}: sign pattern leaves the top of {triple} ambiguous "
            f"(candidates {candidates})"
        )
    return bests.pop()


def _no_default_preferences(
    ccp: CcpTable, network: Network, tol: float
) -> PreferenceProfile:
    num_people = ccp.num_people
    y = ccp.num_alternatives
    orders = []
    for a in range(num_people):
        witness = network.neighbors(a)[0]
        # global best tops every triple that contains it
        best_of = {}
        for triple in itertools.combinations(range(1, y + 1), 3):
            best_of[triple] = triple_best(ccp, a, witness, triple, tol)
        candidates = set(range(1, y + 1))
        for triple, b in best_of.items():
            candidates -= {v for v in triple if v != b}
        if len(candidates) != 1:
            raise SignPatternError(
                f"person {a}: triple tops {best_of} do not single out a best option"
            )
        best = candidates.pop()
        ranks = {best: 0}
        rest = [v for v in range(1, y + 1) if v != best]
        wins = {v: 0 for v in rest}
        for u, w in itertools.combinations(rest, 2):
            if _ratio_prefers(ccp, a, witness, best, u, w, tol):
                wins[u] += 1
            else:
                wins[w] += 1
        ordered = sorted(rest, key=lambda v: -wins[v])
        if sorted(wins.values()) != list(range(len(rest))):
            raise SignPatternError(
                f"person {a}: ratio comparisons are not a strict order ({wins})"
            )
        orders.append((best, *ordered))
    return PreferenceProfile(orders)


def _ratio_prefers(
    ccp: CcpTable, person: int, witness: int, best: int, u: int, w: int, tol: float
) -> bool:
    """True when u is preferred to w, via the anchored probability ratio.

    With the person at u and friends at the best option, P(w|.)/(1-P(best|.))
    drops when a friend moves onto u exactly when u dominates w.
    """
    base = ccp.space.replace(_uniform_config(ccp.num_people, best), person, u)
    moved = ccp.space.replace(base, witness, u)

    def ratio(config: Config) -> float:
        return ccp.probability(person, w, config) / (
            1.0 - ccp.probability(person, best, config)
        )

    return ratio(base) - ratio(moved) > tol


def _no_default_attention(
    ccp: CcpTable,
    network: Network,
    preferences: PreferenceProfile,
    tol: float = ANALYTIC_TOL,
) -> AttentionRule:
    """Count-only attention recovery plus a sticky-row consistency check.

    With no default, the rows where the current choice equals the target only
    reveal products of the stay-attention and the worse options' attention, so
    attention that varies with the person's own choice is not pinned down;
    recovery targets the count-only table, reading each value off a
    configuration whose current choice sits below the target. The sticky rows
    are then cross-checked through the stay-probability quotient, which both
    validates the recursion and rejects own-choice-dependent inputs.
    """
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base_tables = []
    for a in range(num_people):
        friends = network.neighbors(a)
        deg = len(friends)
        order = preferences.order(a)
        worst, second_worst = order[-1], order[-2]
        counts_table = np.empty((y, deg + 1))

        def park_for(target: int) -> int:
            return second_worst if target == worst else worst

        def config_for(own: int, target: int, n: int) -> Config:
            cfg = [park_for(target)] * num_people
            cfg[a] = own
            for b in friends[:n]:
                cfg[b] = target
            return tuple(cfg)

        for target in order:  # best first
            park = park_for(target)
            for n in range(deg + 1):
                cfg = config_for(park, target, n)
                miss = 1.0
                for z in preferences.dominators(a, target):
                    count = deg - n if z == park else 0
                    miss *= 1.0 - counts_table[z - 1, count]
                counts_table[target - 1, n] = ccp.probability(a, target, cfg) / miss

        # sticky rows: the stay-probability quotient must reproduce the table.
        # The worst option is excluded: staying there and picking it coincide,
        # so its quotient is structurally 0/0.
        for target in order[:-1]:
            park = park_for(target)
            for n in range(deg + 1):
                cfg = config_for(target, target, n)
                stay_all = 1.0
                better = 1.0
                for z in range(1, y + 1):
                    if z == target:
                        continue
                    count = deg - n if z == park else 0
                    factor = 1.0 - counts_table[z - 1, count]
                    stay_all *= factor
                    if preferences.prefers(a, z, target):
                        better *= factor
                p = ccp.probability(a, target, cfg)
                denom = better - stay_all
                if abs(denom) < 1e-12:
                    raise IdentificationError(
                        f"person {a}, option {target}: sticky-row quotient degenerate"
                    )
                implied = (p - stay_all) / denom
                if abs(implied - counts_table[target - 1, n]) > max(tol, 1e-8):
                    raise IdentificationError(
                        f"person {a}, option {target}: sticky rows disagree with "
                        f"count-only attention ({implied} vs "
                        f"{counts_table[target - 1, n]}); attention that varies "
                        "with the current choice is not point-recoverable here"
                    )
        base_tables.append(np.broadcast_to(counts_table, (y + 1, y, deg + 1)).copy())
    return AttentionRule(base_tables)


# ---------------------------------------------------------------------------
# attention-index variant
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartialIdentification:
    """Feasible linear system for an unrestricted set index at one person/config.

    ``columns`` lists the nonempty consideration sets; each equation row says
    the index mass of the sets whose best option is the equation's target
    equals the observed probability ratio. Y equations against 2^Y - 1
    unknowns: underdetermined for Y >= 2.
    """

    person: int
    config: Config
    columns: tuple[frozenset[int], ...]
    matrix: NDArray[np.float64]
    rhs: NDArray[np.float64]

    @property
    def degrees_of_freedom(self) -> int:
        return self.matrix.shape[1] - int(np.linalg.matrix_rank(self.matrix))


def identify_attention_index(
    ccp: CcpTable,
    restriction: str,
    network: Network | None = None,
    preferences: PreferenceProfile | None = None,
    tol: float = ANALYTIC_TOL,
) -> tuple[Network, PreferenceProfile, AttentionIndexRule | list[PartialIdentification]]:
    """Recover a set-index model under a symmetry restriction.

    Edges come from constancy of P_a(v|.)/P_a(o|.) in non-friends' choices and
    preferences from which switches leave those ratios untouched; both steps
    assume the strict switch monotonicity that the multiplicative and additive
    families satisfy. The cardinality and best-alternative symmetries are
    incompatible with that monotonicity, so callers pass the known structure
    and only the index recursion runs. ``restriction="unrestricted"`` returns
    the underdetermined per-configuration systems instead of an index.
    """
    if network is None:
        network = _index_network(ccp, tol)
    if preferences is None:
        preferences = _index_preferences(ccp, network, tol)
    if restriction == "unrestricted":
        return network, preferences, _index_partial_systems(ccp, preferences)
    if restriction not in ("multiplicative", "cardinality", "additive", "best-alternative"):
        raise IdentificationError(f"unknown restriction tag {restriction!r}")
    values: dict[tuple[int, frozenset[int], Config], float] = {}
    y = ccp.num_alternatives
    subsets = [
        frozenset(c) for size in range(1, y + 1) for c in itertools.combinations(range(1, y + 1), size)
    ]
    for a in range(ccp.num_people):
        worst_first = tuple(reversed(preferences.order(a)))
        for config in ccp.space.configs():
            p_default = ccp.probability(a, DEFAULT, config)
            ratios = [
                ccp.probability(a, v, config) / p_default for v in worst_first
            ]
            singles = _index_recursion(restriction, ratios)
            level = {v: singles[k] for k, v in enumerate(worst_first)}
            for cset in subsets:
                if restriction == "multiplicative":
                    val = math.prod(level[v] for v in cset)
                elif restriction == "additive":
                    val = sum(level[v] for v in cset)
                elif restriction == "cardinality":
                    val = singles[len(cset) - 1]
                else:  # best-alternative
                    best = min(cset, key=lambda v: preferences.rank(a, v))
                    val = level[best]
                values[(a, cset, config)] = val
    rule = AttentionIndexRule.from_table(
        ccp.num_people, y, values, restriction=restriction
    )
    return network, preferences, rule


def _index_recursion(restriction: str, ratios: list[float]) -> list[float]:
    """Per-person, per-configuration recursion from probability ratios.

    ``ratios[k]`` is P(v_k|y)/P(o|y) for the k-th-worst option v_k. Returns
    singleton values (or per-size levels for the cardinality symmetry).
    """
    y = len(ratios)
    out: list[float] = []
    if restriction == "multiplicative":
        denom = 1.0
        for k in range(y):
            s = ratios[k] / denom
            out.append(s)
            denom *= 1.0 + s
    elif restriction == "additive":
        for k in range(y):
            if k == 0:
                out.append(ratios[0])
            else:
                out.append((ratios[k] - 2 ** (k - 1) * sum(out)) / 2**k)
    elif restriction == "cardinality":
        for k in range(y):
            acc = sum(math.comb(k, m) * out[m] for m in range(k))
            out.append(ratios[k] - acc)
    elif restriction == "best-alternative":
        for k in range(y):
            out.append(ratios[k] / 2**k)
    else:
        raise IdentificationError(f"unknown restriction tag {restriction!r}")
    return out


def _index_ratio(ccp: CcpTable, person: int, v: int, config: Config) -> float:
    return ccp.probability(person, v, config) / ccp.probability(person, DEFAULT, config)


def _index_network(ccp: CcpTable, tol: float) -> Network:
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    edges = []
    for a in range(num_people):
        for b in range(num_people):
            if b == a:
                continue
            moved = False
            for w in range(1, y + 1):
                flipped = ccp.space.replace(base, b, w)
                for v in range(1, y + 1):
                    diff = _index_ratio(ccp, a, v, flipped) - _index_ratio(ccp, a, v, base)
                    if abs(diff) > tol:
                        moved = True
            if moved:
                edges.append((a, b))
    return Network(num_people, edges)


def _index_preferences(ccp: CcpTable, network: Network, tol: float) -> PreferenceProfile:
    num_people = ccp.num_people
    y = ccp.num_alternatives
    base = _all_default(num_people)
    orders = []
    for a in range(num_people):
        witness = network.neighbors(a)[0]
        wins = {v: 0 for v in range(1, y + 1)}
        for u, w in itertools.combinations(range(1, y + 1), 2):
            # u's ratio is flat under a friend switching to w exactly when w is better
            flipped = ccp.space.replace(base, witness, w)
            diff = _index_ratio(ccp, a, u, flipped) - _index_ratio(ccp, a, u, base)
            if abs(diff) <= tol:
                wins[w] += 1
            else:
                wins[u] += 1
        ordered = sorted(wins, key=lambda v: -wins[v])
        if sorted(wins.values()) != list(range(y)):
            raise IdentificationError(
                f"person {a}: ratio invariances are not a strict order ({wins})"
            )
        orders.append(tuple(ordered))
    return PreferenceProfile(orders)


def _index_partial_systems(
    ccp: CcpTable, preferences: PreferenceProfile
) -> list[PartialIdentification]:
    y = ccp.num_alternatives
    columns = tuple(
        frozenset(c)
        for size in range(1, y + 1)
        for c in itertools.combinations(range(1, y + 1), size)
    )
    out = []
    for a in range(ccp.num_people):
        for config in ccp.space.configs():
            matrix = np.zeros((y, len(columns)))
            rhs = np.empty(y)
            worst_first = tuple(reversed(preferences.order(a)))
            for k, v in enumerate(worst_first):
                rhs[k] = _index_ratio(ccp, a, v, config)
                for c, cset in enumerate(columns):
                    if v in cset and min(cset, key=lambda x: preferences.rank(a, x)) == v:
                        matrix[k, c] = 1.0
            out.append(
                PartialIdentification(
                    person=a, config=config, columns=columns, matrix=matrix, rhs=rhs
                )
            )
    return out
