"""Domain types: network, preferences, attention mechanisms, model bundles.

People are indexed 0..A-1. Alternatives are 1..Y with 0 reserved for the
default option. A model is a bundle of a directed friendship network, one
strict preference order per person, an attention mechanism, per-person
Poisson revision rates, and a variant selector that picks the choice rule.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .states import DEFAULT, Config, StateSpace

MAX_ENUMERATED_ALTERNATIVES = 12


class ModelError(ValueError):
    """Raised for structurally invalid model components."""


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------


class Network:
    """Directed friendship graph on people 0..A-1.

    An edge (a, b) means b is a friend of a (b's choices enter a's attention).
    """

    def __init__(self, num_people: int, edges: Iterable[tuple[int, int]]) -> None:
        if num_people < 1:
            raise ModelError("need at least one person")
        self.num_people = num_people
        seen: set[tuple[int, int]] = set()
        for a, b in edges:
            if not (0 <= a < num_people and 0 <= b < num_people):
                raise ModelError(f"edge ({a}, {b}) out of range for {num_people} people")
            if a == b:
                raise ModelError(f"self-loop at person {a}")
            seen.add((a, b))
        self.edges = frozenset(seen)
        nbrs: list[list[int]] = [[] for _ in range(num_people)]
        for a, b in sorted(self.edges):
            nbrs[a].append(b)
        self._neighbors = tuple(tuple(n) for n in nbrs)

    @classmethod
    def undirected(cls, num_people: int, pairs: Iterable[tuple[int, int]]) -> "Network":
        both = []
        for a, b in pairs:
            both.append((a, b))
            both.append((b, a))
        return cls(num_people, both)

    def neighbors(self, person: int) -> tuple[int, ...]:
        return self._neighbors[person]

    def degree(self, person: int) -> int:
        return len(self._neighbors[person])

    def max_degree(self) -> int:
        return max(self.degree(a) for a in range(self.num_people))

    def is_undirected(self) -> bool:
        return all((b, a) in self.edges for a, b in self.edges)

    def undirected_pairs(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(e) for e in self.edges)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Network)
            and self.num_people == other.num_people
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.num_people, self.edges))

    def __repr__(self) -> str:
        return f"Network(A={self.num_people}, edges={sorted(self.edges)})"


def count_peers(network: Network, config: Config, person: int, alt: int) -> int:
    """Number of ``person``'s friends currently choosing ``alt``."""
    if not 0 <= person < network.num_people:
        raise ModelError(f"person {person} out of range")
    if alt < 1:
        raise ModelError(f"alternative {alt} is not a real option")
    if len(config) != network.num_people:
        raise ModelError("configuration length does not match the network")
    return sum(1 for b in network.neighbors(person) if config[b] == alt)


# ---------------------------------------------------------------------------
# preferences
# ---------------------------------------------------------------------------


class PreferenceProfile:
    """One strict order per person over alternatives 1..Y, best first."""

    def __init__(self, orders: Sequence[Sequence[int]]) -> None:
        if not orders:
            raise ModelError("empty preference profile")
        y = len(orders[0])
        want = set(range(1, y + 1))
        clean = []
        for a, order in enumerate(orders):
            if set(order) != want or len(order) != y:
                raise ModelError(
                    f"person {a}: order {tuple(order)} is not a permutation of 1..{y}"
                )
            clean.append(tuple(int(v) for v in order))
        self.orders = tuple(clean)
        self.num_alternatives = y
        # rank[a][v] = 0 for the best alternative
        self._rank = tuple(
            {v: i for i, v in enumerate(order)} for order in self.orders
        )

    @property
    def num_people(self) -> int:
        return len(self.orders)

    def order(self, person: int) -> tuple[int, ...]:
        return self.orders[person]

    def best(self, person: int) -> int:
        return self.orders[person][0]

    def rank(self, person: int, alt: int) -> int:
        return self._rank[person][alt]

    def prefers(self, person: int, u: int, v: int) -> bool:
        """True if ``u`` is strictly preferred to ``v`` by ``person``."""
        return self._rank[person][u] < self._rank[person][v]

    def dominators(self, person: int, alt: int) -> tuple[int, ...]:
        """Alternatives strictly preferred to ``alt``, best first."""
        r = self._rank[person][alt]
        return self.orders[person][:r]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PreferenceProfile) and self.orders == other.orders

    def __hash__(self) -> int:
        return hash(self.orders)

    def __repr__(self) -> str:
        return f"PreferenceProfile({self.orders})"


# ---------------------------------------------------------------------------
# attention mechanisms
# ---------------------------------------------------------------------------


class AttentionRule:
    """Attention probabilities Q(v | own choice, peer count), one table per person.

    ``tables[a]`` has shape (Y+1, Y, degree_a+1): axis 0 is the person's own
    current choice (0 = default), axis 1 is the target alternative v-1, axis 2
    the number of friends currently choosing v.
    """

    def __init__(self, tables: Sequence[NDArray[np.float64]]) -> None:
        self.tables = tuple(np.asarray(t, dtype=float) for t in tables)
        y = self.tables[0].shape[1]
        for a, t in enumerate(self.tables):
            if t.ndim != 3 or t.shape[0] != y + 1 or t.shape[1] != y:
                raise ModelError(
                    f"person {a}: attention table shape {t.shape} is not (Y+1, Y, deg+1)"
                )
        self.num_alternatives = y

    @property
    def num_people(self) -> int:
        return len(self.tables)

    def degree(self, person: int) -> int:
        return self.tables[person].shape[2] - 1

    def value(self, person: int, alt: int, own: int, count: int) -> float:
        """Q_person(alt | own, count)."""
        return float(self.tables[person][own, alt - 1, count])

    def own_independent(self) -> bool:
        return all(
            np.allclose(t, t[0][None, :, :], atol=0.0, rtol=0.0) for t in self.tables
        )

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_function(
        cls,
        network: Network,
        num_alternatives: int,
        fn: Callable[[int, int, int, int], float],
    ) -> "AttentionRule":
        """Build dense tables from ``fn(person, alt, own, count)``."""
        tables = []
        for a in range(network.num_people):
            deg = network.degree(a)
            t = np.empty((num_alternatives + 1, num_alternatives, deg + 1))
            for own in range(num_alternatives + 1):
                for v in range(1, num_alternatives + 1):
                    for n in range(deg + 1):
                        t[own, v - 1, n] = fn(a, v, own, n)
            tables.append(t)
        return cls(tables)

    @classmethod
    def count_only(
        cls,
        network: Network,
        num_alternatives: int,
        fn: Callable[[int, int, int], float],
    ) -> "AttentionRule":
        """Attention that ignores the person's own current choice."""
        return cls.from_function(network, num_alternatives, lambda a, v, own, n: fn(a, v, n))

    @classmethod
    def shared_levels(
        cls, network: Network, num_alternatives: int, levels: Sequence[float]
    ) -> "AttentionRule":
        """Q(v | n) = levels[n], invariant across people, alternatives, own choice."""
        if len(levels) < network.max_degree() + 1:
            raise ModelError(
                f"need {network.max_degree() + 1} levels, got {len(levels)}"
            )
        return cls.count_only(network, num_alternatives, lambda a, v, n: float(levels[n]))


class RandomChoiceRule:
    """Distribution over a consideration set, replacing the preference maximum.

    ``probability(person, alt, consideration)`` is zero for alternatives
    outside the consideration set and the values over the set sum to one.
    """

    def __init__(
        self,
        num_people: int,
        num_alternatives: int,
        fn: Callable[[int, int, frozenset[int]], float],
        kind: str = "table",
    ) -> None:
        self.num_people = num_people
        self.num_alternatives = num_alternatives
        self._fn = fn
        self.kind = kind

    def probability(self, person: int, alt: int, consideration: frozenset[int]) -> float:
        if alt not in consideration:
            return 0.0
        return self._fn(person, alt, consideration)

    def draw(self, person: int, consideration: frozenset[int], rng: np.random.Generator) -> int:
        members = sorted(consideration)
        probs = [self.probability(person, v, consideration) for v in members]
        return int(members[rng.choice(len(members), p=np.asarray(probs) / sum(probs))])

    @classmethod
    def logit(cls, utilities: NDArray[np.float64]) -> "RandomChoiceRule":
        """Logit choice with mean utilities ``utilities[a, v-1]``."""
        u = np.asarray(utilities, dtype=float)

        def fn(person: int, alt: int, consideration: frozenset[int]) -> float:
            weights = {v: math.exp(u[person, v - 1]) for v in consideration}
            return weights[alt] / sum(weights.values())

        rule = cls(u.shape[0], u.shape[1], fn, kind="logit")
        rule.utilities = u
        return rule

    @classmethod
    def degenerate(cls, preferences: PreferenceProfile) -> "RandomChoiceRule":
        """Indicator of the preference maximum; collapses to the base model."""

        def fn(person: int, alt: int, consideration: frozenset[int]) -> float:
            best = min(consideration, key=lambda v: preferences.rank(person, v))
            return 1.0 if alt == best else 0.0

        return cls(preferences.num_people, preferences.num_alternatives, fn, kind="degenerate")

    @classmethod
    def from_table(
        cls,
        num_people: int,
        num_alternatives: int,
        table: dict[tuple[int, frozenset[int]], dict[int, float]],
    ) -> "RandomChoiceRule":
        def fn(person: int, alt: int, consideration: frozenset[int]) -> float:
            return table[(person, consideration)].get(alt, 0.0)

        return cls(num_people, num_alternatives, fn, kind="table")


class AttentionIndexRule:
    """Set-level attention index eta(C | configuration), normalized eta({}) = 1.

    Consideration-set probabilities are eta values normalized over all subsets
    of 1..Y. ``restriction`` tags the symmetry class the index satisfies:
    one of "multiplicative", "cardinality", "additive", "best-alternative",
    "unrestricted".
    """

    RESTRICTIONS = (
        "multiplicative",
        "cardinality",
        "additive",
        "best-alternative",
        "unrestricted",
    )

    def __init__(
        self,
        num_people: int,
        num_alternatives: int,
        fn: Callable[[int, frozenset[int], Config], float],
        restriction: str = "unrestricted",
    ) -> None:
        if restriction not in self.RESTRICTIONS:
            raise ModelError(f"unknown restriction tag {restriction!r}")
        if num_alternatives > MAX_ENUMERATED_ALTERNATIVES:
            raise ModelError(
                f"attention indices enumerate 2^Y sets; Y={num_alternatives} exceeds "
                f"the cap {MAX_ENUMERATED_ALTERNATIVES}"
            )
        self.num_people = num_people
        self.num_alternatives = num_alternatives
        self._fn = fn
        self.restriction = restriction

    def value(self, person: int, consideration: frozenset[int], config: Config) -> float:
        if not consideration:
            return 1.0
        v = float(self._fn(person, consideration, config))
        if v < 0:
            raise ModelError(
                f"negative attention index {v} for person {person}, set "
                f"{sorted(consideration)}"
            )
        return v

    def total(self, person: int, config: Config) -> float:
        """Sum of the index over every subset of 1..Y."""
        return sum(
            self.value(person, frozenset(c), config)
            for c in all_subsets(self.num_alternatives)
        )

    # -- structured builders (singleton indices driven by peer counts) -------

    @classmethod
    def multiplicative(
        cls,
        network: Network,
        num_alternatives: int,
        singleton: Callable[[int, int, int], float],
    ) -> "AttentionIndexRule":
        """eta(C|y) = prod_{v in C} singleton(a, v, peer count of v)."""

        def fn(person: int, cset: frozenset[int], config: Config) -> float:
            out = 1.0
            for v in cset:
                out *= singleton(person, v, count_peers(network, config, person, v))
            return out

        return cls(network.num_people, num_alternatives, fn, "multiplicative")

    @classmethod
    def additive(
        cls,
        network: Network,
        num_alternatives: int,
        singleton: Callable[[int, int, int], float],
    ) -> "AttentionIndexRule":
        """eta(C|y) = sum_{v in C} singleton(a, v, peer count of v)."""

        def fn(person: int, cset: frozenset[int], config: Config) -> float:
            return sum(
                singleton(person, v, count_peers(network, config, person, v))
                for v in cset
            )

        return cls(network.num_people, num_alternatives, fn, "additive")

    @classmethod
    def best_alternative(
        cls,
        network: Network,
        preferences: PreferenceProfile,
        singleton: Callable[[int, int, int], float],
    ) -> "AttentionIndexRule":
        """eta(C|y) = singleton value of the preference-best member of C."""

        def fn(person: int, cset: frozenset[int], config: Config) -> float:
            best = min(cset, key=lambda v: preferences.rank(person, v))
            return singleton(person, best, count_peers(network, config, person, best))

        return cls(network.num_people, preferences.num_alternatives, fn, "best-alternative")

    @classmethod
    def cardinality(
        cls,
        num_people: int,
        num_alternatives: int,
        level: Callable[[int, int, Config], float],
    ) -> "AttentionIndexRule":
        """eta(C|y) = level(a, |C|, y); sets of equal size share the index."""

        def fn(person: int, cset: frozenset[int], config: Config) -> float:
            return level(person, len(cset), config)

        return cls(num_people, num_alternatives, fn, "cardinality")

    @classmethod
    def from_attention(cls, attention: AttentionRule, network: Network) -> "AttentionIndexRule":
        """Multiplicative index eta({v}|y) = Q/(1-Q); reproduces the base model."""

        def singleton(person: int, v: int, count: int) -> float:
            q = attention.value(person, v, DEFAULT, count)
            return q / (1.0 - q)

        return cls.multiplicative(network, attention.num_alternatives, singleton)

    @classmethod
    def from_table(
        cls,
        num_people: int,
        num_alternatives: int,
        table: dict[tuple[int, frozenset[int], Config], float],
        restriction: str = "unrestricted",
    ) -> "AttentionIndexRule":
        def fn(person: int, cset: frozenset[int], config: Config) -> float:
            return table[(person, cset, config)]

        return cls(num_people, num_alternatives, fn, restriction)


def all_subsets(num_alternatives: int) -> list[tuple[int, ...]]:
    """Every subset of {1..Y}, ordered by size then lexicographically."""
    out: list[tuple[int, ...]] = []
    for size in range(num_alternatives + 1):
        out.extend(itertools.combinations(range(1, num_alternatives + 1), size))
    return out


# ---------------------------------------------------------------------------
# peer-effects-in-preferences contrast model
# ---------------------------------------------------------------------------


class BrockDurlaufTerms:
    """Private utilities and social terms for the logit contrast model.

    ``delta[a, v-1]`` is the private utility of alternative v; ``social``
    maps (person, alt, own choice, peer count) to the social utility term.
    The default option has utility zero.
    """

    def __init__(
        self,
        delta: NDArray[np.float64],
        social: Callable[[int, int, int, int], float],
    ) -> None:
        self.delta = np.asarray(delta, dtype=float)
        self.social = social

    @classmethod
    def linear(cls, delta: NDArray[np.float64], coefficient: float) -> "BrockDurlaufTerms":
        return cls(delta, lambda a, v, own, n: coefficient * n)


# ---------------------------------------------------------------------------
# model bundle
# ---------------------------------------------------------------------------


class Variant(enum.Enum):
    BASELINE_DEFAULT = "baseline_default"
    RANDOM_PREFERENCES = "random_preferences"
    NO_DEFAULT = "no_default"
    ATTENTION_INDEX = "attention_index"
    PEER_PREFERENCE_LOGIT = "peer_preference_logit"


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Complete model primitive: variant, network, preferences, attention, rates."""

    variant: Variant
    network: Network
    preferences: PreferenceProfile
    rates: NDArray[np.float64]
    attention: AttentionRule | None = None
    attention_index: AttentionIndexRule | None = None
    choice_rule: RandomChoiceRule | None = None
    brock_durlauf: BrockDurlaufTerms | None = None
    max_states: int = field(default=10**6)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        a = self.network.num_people
        if self.preferences.num_people != a:
            raise ModelError("preference profile and network disagree on A")
        if self.rates.shape != (a,):
            raise ModelError(f"rates must have shape ({a},)")
        if np.any(self.rates <= 0):
            raise ModelError("all revision rates must be strictly positive")
        needs = {
            Variant.BASELINE_DEFAULT: ("attention",),
            Variant.RANDOM_PREFERENCES: ("attention", "choice_rule"),
            Variant.NO_DEFAULT: ("attention",),
            Variant.ATTENTION_INDEX: ("attention_index",),
            Variant.PEER_PREFERENCE_LOGIT: ("brock_durlauf",),
        }[self.variant]
        for name in needs:
            if getattr(self, name) is None:
                raise ModelError(f"variant {self.variant.value} requires {name}")
        if self.attention is not None:
            if self.attention.num_people != a:
                raise ModelError("attention tables and network disagree on A")
            if self.attention.num_alternatives != self.num_alternatives:
                raise ModelError("attention tables and preferences disagree on Y")
            for person in range(a):
                if self.attention.degree(person) != self.network.degree(person):
                    raise ModelError(
                        f"person {person}: attention table covers "
                        f"{self.attention.degree(person)} friends, network has "
                        f"{self.network.degree(person)}"
                    )

    @property
    def num_people(self) -> int:
        return self.network.num_people

    @property
    def num_alternatives(self) -> int:
        return self.preferences.num_alternatives

    @property
    def includes_default(self) -> bool:
        return self.variant is not Variant.NO_DEFAULT

    def state_space(self) -> StateSpace:
        return StateSpace(
            self.num_people,
            self.num_alternatives,
            include_default=self.includes_default,
            max_states=self.max_states,
        )

    def total_rate(self) -> float:
        return float(np.sum(self.rates))


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionViolation:
    assumption: str
    person: int | None
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    violations: tuple[AssumptionViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.assumption for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "all assumptions hold"
        return "\n".join(f"{v.assumption}: person {v.person}: {v.detail}" for v in self.violations)


def validate_assumptions(model: ModelSpec) -> AssumptionReport:
    """Check A1-A3 (and A1'/A3' for attention indices); report every violation."""
    out: list[AssumptionViolation] = []
    for a in range(model.num_people):
        if model.network.degree(a) == 0:
            out.append(AssumptionViolation("A2", a, "no friends"))
    if model.attention is not None:
        out.extend(_check_attention_tables(model))
    if model.variant is Variant.RANDOM_PREFERENCES:
        out.extend(_check_choice_rule(model))
    if model.variant is Variant.ATTENTION_INDEX:
        out.extend(_check_attention_index(model))
    return AssumptionReport(tuple(out))


def _check_attention_tables(model: ModelSpec) -> list[AssumptionViolation]:
    out = []
    owns = range(model.num_alternatives + 1) if model.includes_default else range(
        1, model.num_alternatives + 1
    )
    assert model.attention is not None
    for a in range(model.num_people):
        deg = model.attention.degree(a)
        for own in owns:
            for v in range(1, model.num_alternatives + 1):
                row = model.attention.tables[a][own, v - 1]
                for n in range(deg + 1):
                    if not 0.0 < row[n] < 1.0:
                        out.append(
                            AssumptionViolation(
                                "A1",
                                a,
                                f"Q({v}|own={own},n={n}) = {row[n]} not in (0,1)",
                            )
                        )
                for n in range(deg):
                    if not row[n] < row[n + 1]:
                        out.append(
                            AssumptionViolation(
                                "A3",
                                a,
                                f"Q({v}|own={own},n) not strictly increasing at n={n}: "
                                f"{row[n]} vs {row[n + 1]}",
                            )
                        )
    return out


def _check_choice_rule(model: ModelSpec) -> list[AssumptionViolation]:
    out = []
    assert model.choice_rule is not None
    for a in range(model.num_people):
        for members in all_subsets(model.num_alternatives):
            if not members:
                continue
            cset = frozenset(members)
            total = 0.0
            for v in range(1, model.num_alternatives + 1):
                p = model.choice_rule.probability(a, v, cset)
                if v not in cset and p != 0.0:
                    out.append(
                        AssumptionViolation(
                            "R-support", a, f"R({v}|{sorted(cset)}) = {p} but {v} not in set"
                        )
                    )
                if p < 0:
                    out.append(
                        AssumptionViolation("R-support", a, f"R({v}|{sorted(cset)}) = {p} < 0")
                    )
                total += p
            if abs(total - 1.0) > 1e-9:
                out.append(
                    AssumptionViolation(
                        "R-sum", a, f"R(.|{sorted(cset)}) sums to {total}, expected 1"
                    )
                )
    return out


def _check_attention_index(model: ModelSpec, max_checked_states: int = 4096) -> list[AssumptionViolation]:
    out = []
    rule = model.attention_index
    assert rule is not None
    space = model.state_space()
    if space.size > max_checked_states:
        return [
            AssumptionViolation(
                "A1'/A3'",
                None,
                f"state space too large to check exhaustively ({space.size} configs)",
            )
        ]
    configs = space.configs()
    y = model.num_alternatives
    for a in range(model.num_people):
        for cfg in configs:
            # A1': some set below v (plus v itself) carries positive attention
            for v in range(1, y + 1):
                worse = [u for u in range(1, y + 1) if model.preferences.prefers(a, v, u)]
                if not any(
                    rule.value(a, frozenset(c) | {v}, cfg) > 0
                    for c in _subsets_of(worse)
                ):
                    out.append(
                        AssumptionViolation(
                            "A1'", a, f"no positive index for {v} below-set at config {cfg}"
                        )
                    )
            # A3': one-coordinate switch monotonicity
            for b in range(model.num_people):
                if b == a:
                    continue
                for new_choice in range(0 if model.includes_default else 1, y + 1):
                    if new_choice == cfg[b]:
                        continue
                    alt_cfg = space.replace(cfg, b, new_choice)
                    for members in all_subsets(y):
                        cset = frozenset(members)
                        if not cset:
                            continue
                        before = rule.value(a, cset, cfg)
                        after = rule.value(a, cset, alt_cfg)
                        friend = b in model.network.neighbors(a)
                        if not friend or (cfg[b] not in cset and new_choice not in cset):
                            if before != after:
                                out.append(
                                    AssumptionViolation(
                                        "A3'(i)",
                                        a,
                                        f"eta({sorted(cset)}) moved {before} -> {after} on "
                                        f"irrelevant switch of person {b} at {cfg}",
                                    )
                                )
                        elif friend and new_choice in cset and cfg[b] not in cset:
                            if not after > before:
                                out.append(
                                    AssumptionViolation(
                                        "A3'(ii)",
                                        a,
                                        f"eta({sorted(cset)}) did not increase "
                                        f"({before} -> {after}) when friend {b} switched "
                                        f"to {new_choice} at {cfg}",
                                    )
                                )
    return out


def _subsets_of(items: Sequence[int]) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for size in range(len(items) + 1):
        out.extend(itertools.combinations(items, size))
    return out
