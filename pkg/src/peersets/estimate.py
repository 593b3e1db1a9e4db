"""Maximum likelihood over networks, preference orders, and attention levels.

The estimator scans an exhaustive candidate list of (network, preference
profile) pairs and, for each, maximizes the panel log likelihood over shared
attention levels q_0 <= q_1 <= ... inside (eps, 1-eps), reparameterized to an
unconstrained vector through a logistic first level plus logistic fractions
of the remaining headroom. Revision rates are normalized to one.

The likelihood of a candidate factorizes over the connected components of its
network, so transition matrices are exponentiated per component. For large
candidate spaces an optional screening stage scores every candidate at a few
fixed anchor levels and fully optimizes only those within a margin of the
leader; anchors admit cross-replication caching in the Monte Carlo harness.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import NDArray
from scipy.special import expit, logit

from .ccp import choice_counts
from .model import AttentionRule, ModelSpec, Network, PreferenceProfile, Variant
from .simulate import Panel
from .states import StateSpace

EPSILON = 1e-6
ENUMERATION_CAP = 10**6
STATIONARY_DELTA = 1000.0  # intervals past this use the equilibrium shortcut
LOG_FLOOR = 1e-300


class EstimationError(RuntimeError):
    """Raised for empty or degenerate estimation problems."""


# ---------------------------------------------------------------------------
# candidate enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkConstraints:
    """Restrictions on the candidate graphs.

    ``min_degree`` defaults to one so every person has a friend.
    """

    undirected: bool = True
    max_degree: int | None = None
    min_degree: int = 1
    cap: int = ENUMERATION_CAP


def enumerate_networks(
    num_people: int, constraints: NetworkConstraints = NetworkConstraints()
) -> list[Network]:
    """All graphs satisfying the constraints, deduplicated and sorted."""
    if constraints.undirected:
        slots = list(itertools.combinations(range(num_people), 2))
    else:
        slots = list(itertools.permutations(range(num_people), 2))
    total = 2 ** len(slots)
    if total > constraints.cap:
        raise EstimationError(
            f"{total:,} candidate graphs exceed the cap {constraints.cap:,}; "
            "tighten the constraints"
        )
    out = []
    for mask in range(total):
        pairs = [slots[i] for i in range(len(slots)) if mask >> i & 1]
        if constraints.undirected:
            net = Network.undirected(num_people, pairs)
        else:
            net = Network(num_people, pairs)
        degrees = [net.degree(a) for a in range(num_people)]
        if min(degrees) < constraints.min_degree:
            continue
        if constraints.max_degree is not None and max(degrees) > constraints.max_degree:
            continue
        out.append(net)
    out.sort(key=lambda n: tuple(sorted(n.edges)))
    return out


def enumerate_preferences(
    num_people: int, num_alternatives: int, cap: int = ENUMERATION_CAP
) -> list[PreferenceProfile]:
    """All profiles of strict orders, in lexicographic order."""
    per_person = math.factorial(num_alternatives) ** num_people
    if per_person > cap:
        raise EstimationError(
            f"{per_person:,} preference profiles exceed the cap {cap:,}"
        )
    orders = sorted(itertools.permutations(range(1, num_alternatives + 1)))
    return [
        PreferenceProfile(combo)
        for combo in itertools.product(orders, repeat=num_people)
    ]


@dataclass(frozen=True)
class ParamSpace:
    """Finite candidate space plus the attention parameterization.

    Attention is shared across people and alternatives and ignores the
    person's own current choice; the free parameters are the levels by peer
    count, constrained to a weakly increasing sequence inside
    (epsilon, 1-epsilon). Revision rates are fixed at ``rate``.
    """

    networks: tuple[Network, ...]
    preferences: tuple[PreferenceProfile, ...]
    num_alternatives: int
    epsilon: float = EPSILON
    rate: float = 1.0

    def __post_init__(self) -> None:
        if not self.networks or not self.preferences:
            raise EstimationError("empty candidate space")

    @property
    def num_people(self) -> int:
        return self.networks[0].num_people

    @property
    def num_levels(self) -> int:
        return max(net.max_degree() for net in self.networks) + 1

    @property
    def num_candidates(self) -> int:
        return len(self.networks) * len(self.preferences)

    @classmethod
    def restaurant(cls) -> "ParamSpace":
        """Five people, two options, undirected graphs with degree one or two."""
        nets = enumerate_networks(5, NetworkConstraints(undirected=True, max_degree=2))
        prefs = enumerate_preferences(5, 2)
        return cls(tuple(nets), tuple(prefs), num_alternatives=2)


# ---------------------------------------------------------------------------
# attention-level reparameterization
# ---------------------------------------------------------------------------


def levels_from_raw(x: NDArray[np.float64], epsilon: float = EPSILON) -> NDArray[np.float64]:
    """Map an unconstrained vector to increasing levels inside (eps, 1-eps)."""
    q = np.empty_like(x)
    q[0] = epsilon + (1.0 - 2.0 * epsilon) * expit(x[0])
    for n in range(1, x.size):
        q[n] = q[n - 1] + (1.0 - epsilon - q[n - 1]) * expit(x[n])
    return q


def raw_from_levels(q: NDArray[np.float64], epsilon: float = EPSILON) -> NDArray[np.float64]:
    """Inverse of :func:`levels_from_raw` (clipped near the boundary)."""
    q = np.asarray(q, dtype=float)
    x = np.empty_like(q)
    lo = 1e-12
    frac = (q[0] - epsilon) / (1.0 - 2.0 * epsilon)
    x[0] = logit(np.clip(frac, lo, 1.0 - lo))
    for n in range(1, q.size):
        frac = (q[n] - q[n - 1]) / (1.0 - epsilon - q[n - 1])
        x[n] = logit(np.clip(frac, lo, 1.0 - lo))
    return x


_ANCHOR_SPANS = (
    (0.05, 0.50),
    (0.10, 0.70),
    (0.15, 0.85),
    (0.25, 0.95),
    (0.05, 0.95),
    (0.40, 0.95),
    (0.05, 0.30),
    (0.50, 0.90),
    (0.20, 0.60),
    (0.30, 0.80),
    (0.60, 0.95),
)


def default_anchor_levels(num_levels: int) -> list[NDArray[np.float64]]:
    """Spread of increasing level profiles used to pre-score candidates."""
    out = [np.linspace(lo, hi, num_levels) for lo, hi in _ANCHOR_SPANS]
    out.append(0.1 + 0.85 * np.linspace(0.0, 1.0, num_levels) ** 2)
    return [np.asarray(a, dtype=float) for a in out]


# ---------------------------------------------------------------------------
# component-factorized likelihood machinery
# ---------------------------------------------------------------------------


def network_components(network: Network) -> list[tuple[int, ...]]:
    """Vertex sets of the weakly connected components, each sorted."""
    seen: set[int] = set()
    undirected: dict[int, set[int]] = {a: set() for a in range(network.num_people)}
    for a, b in network.edges:
        undirected[a].add(b)
        undirected[b].add(a)
    out = []
    for start in range(network.num_people):
        if start in seen:
            continue
        stack, comp = [start], set()
        while stack:
            node = stack.pop()
            if node in comp:
                continue
            comp.add(node)
            stack.extend(undirected[node] - comp)
        seen |= comp
        out.append(tuple(sorted(comp)))
    return out


def component_key(
    network: Network, preferences: PreferenceProfile, vertices: tuple[int, ...]
) -> tuple:
    edges = frozenset(
        (vertices.index(a), vertices.index(b))
        for a, b in network.edges
        if a in vertices
    )
    orders = tuple(preferences.order(a) for a in vertices)
    return vertices, edges, orders


class ComponentModel:
    """One connected component's generator builder and likelihood evaluator."""

    def __init__(self, key: tuple, num_alternatives: int, rate: float = 1.0) -> None:
        vertices, edges, orders = key
        self.vertices = vertices
        n_local = len(vertices)
        self.network = Network(n_local, edges)
        self.orders = orders
        self.rate = rate
        self.space = StateSpace(n_local, num_alternatives)
        self.counts = choice_counts(self.space, self.network).astype(np.int64)
        moves = self.space.move_table()
        size = self.space.size
        self._rows = np.repeat(np.arange(size), n_local * (num_alternatives + 1))
        self._cols = moves.reshape(-1)
        self._y = num_alternatives

    def generator(self, levels: NDArray[np.float64]) -> NDArray[np.float64]:
        size = self.space.size
        qv = levels[self.counts]  # (size, n_local, Y)
        probs = np.empty((size, len(self.vertices), self._y + 1))
        for p, order in enumerate(self.orders):
            miss = np.ones(size)
            for v in order:
                q = qv[:, p, v - 1]
                probs[:, p, v] = q * miss
                miss = miss * (1.0 - q)
            probs[:, p, 0] = miss
        m = np.zeros((size, size))
        np.add.at(m, (self._rows, self._cols), (self.rate * probs).reshape(-1))
        m[np.arange(size), np.arange(size)] -= self.rate * len(self.vertices)
        return m

    def transition(self, levels: NDArray[np.float64], delta: float) -> NDArray[np.float64]:
        return scipy.linalg.expm(self.generator(levels) * delta)

    def stationary(self, levels: NDArray[np.float64]) -> NDArray[np.float64]:
        m = self.generator(levels)
        size = m.shape[0]
        system = m.T.copy()
        system[-1, :] = 1.0
        rhs = np.zeros(size)
        rhs[-1] = 1.0
        return scipy.linalg.solve(system, rhs)

    def loglik(
        self,
        levels: NDArray[np.float64],
        delta: float,
        pairs: "PairCounts",
        stationary_ok: bool,
    ) -> float:
        if stationary_ok and delta >= STATIONARY_DELTA:
            mu = np.clip(self.stationary(levels), LOG_FLOOR, None)
            return float(np.log(mu[pairs.dst]) @ pairs.weight)
        p = self.transition(levels, delta)
        vals = np.clip(p[pairs.src, pairs.dst], LOG_FLOOR, None)
        return float(np.log(vals) @ pairs.weight)


@dataclass(frozen=True, eq=False)
class PairCounts:
    """Aggregated one-step transition counts projected onto a vertex set."""

    src: NDArray[np.int64]
    dst: NDArray[np.int64]
    weight: NDArray[np.float64]


def project_pairs(panel: Panel, vertices: tuple[int, ...], num_alternatives: int) -> PairCounts:
    """Panel transition counts restricted to the given people."""
    base = num_alternatives + 1
    sub = panel.configs[:, list(vertices)].astype(np.int64)
    weights = base ** np.arange(len(vertices) - 1, -1, -1, dtype=np.int64)
    rows = sub @ weights
    size = base ** len(vertices)
    combined = rows[:-1] * size + rows[1:]
    uniq, counts = np.unique(combined, return_counts=True)
    return PairCounts(
        src=(uniq // size).astype(np.int64),
        dst=(uniq % size).astype(np.int64),
        weight=counts.astype(float),
    )


# ---------------------------------------------------------------------------
# public log likelihood
# ---------------------------------------------------------------------------


def transition_counts(panel: Panel) -> PairCounts:
    """Full-configuration transition counts of a panel."""
    vertices = tuple(range(panel.space.num_people))
    return project_pairs(panel, vertices, panel.space.num_alternatives)


def log_likelihood(model: ModelSpec, panel: Panel, delta: float) -> float:
    """Panel log likelihood sum(log P_{y_t -> y_{t+1}}(delta)) for any model.

    Returns -inf when an observed transition lands on a nonpositive
    probability (numerical underflow of the matrix exponential).
    """
    from .ctmc import build_rate_matrix, transition_matrix

    if panel.num_transitions < 1:
        raise EstimationError("panel has no transitions")
    pairs = transition_counts(panel)
    p = transition_matrix(build_rate_matrix(model), delta).matrix
    vals = p[pairs.src, pairs.dst]
    if np.any(vals <= 0.0):
        return -np.inf
    return float(np.log(vals) @ pairs.weight)


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MleOptions:
    """Optimizer and screening knobs; defaults favor exactness.

    ``screen`` is "off" (optimize every candidate), "auto" (screen when the
    candidate space is large), or "on". Anchor screen scores undershoot a
    candidate's fitted likelihood by roughly a per-transition divergence from
    the nearest anchor, so the full-fit margin grows with the panel length:
    candidates within ``margin_base + margin_per_transition * T`` nats of the
    fitted leader are always optimized, and never fewer than ``min_full``.
    """

    starts: int = 5
    max_iterations: int = 500
    gradient_tol: float = 1e-8
    fd_step: float = 1e-6
    screen: str = "auto"
    margin_base: float = 8.0
    margin_per_transition: float = 0.06
    min_full: int = 24
    tie_tol: float = 1e-9
    stationary_shortcut: bool = True

    def margin(self, num_transitions: int) -> float:
        return self.margin_base + self.margin_per_transition * num_transitions


START_RAWS = (
    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    (-2.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    (2.0, -2.0, -2.0, -2.0, -2.0, -2.0),
    (-1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    (1.0, 1.0, -1.0, -1.0, -1.0, -1.0),
)


@dataclass(frozen=True, eq=False)
class CandidateFit:
    network_index: int
    preference_index: int
    screen_score: float | None
    log_likelihood: float | None
    levels: NDArray[np.float64] | None
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True, eq=False)
class EstimationResult:
    """Winning candidate, its levels, and the per-candidate likelihood table."""

    space: ParamSpace
    network: Network
    preferences: PreferenceProfile
    levels: NDArray[np.float64]
    log_likelihood: float
    candidates: tuple[CandidateFit, ...]
    maximizers: tuple[tuple[int, int], ...]
    fully_optimized: int
    options: MleOptions

    def model(self) -> ModelSpec:
        attention = AttentionRule.shared_levels(
            self.network, self.space.num_alternatives, self.levels
        )
        return ModelSpec(
            variant=Variant.BASELINE_DEFAULT,
            network=self.network,
            preferences=self.preferences,
            rates=np.full(self.network.num_people, self.space.rate),
            attention=attention,
        )


class _Evaluator:
    """Caches component models and panel projections for one estimation run."""

    def __init__(
        self,
        space: ParamSpace,
        panel: Panel,
        delta: float,
        options: MleOptions,
        component_cache: dict[tuple, ComponentModel] | None = None,
    ):
        if panel.num_transitions < 1:
            raise EstimationError("panel has no transitions")
        if panel.space.num_people != space.num_people:
            raise EstimationError("panel and candidate space disagree on A")
        self.space = space
        self.panel = panel
        self.delta = delta
        self.options = options
        self._components = component_cache if component_cache is not None else {}
        self._pairs: dict[tuple[int, ...], PairCounts] = {}
        self._stationary_ok = False
        if options.stationary_shortcut and delta >= STATIONARY_DELTA:
            self._stationary_ok = self._validate_stationary()

    def component(self, key: tuple) -> ComponentModel:
        if key not in self._components:
            self._components[key] = ComponentModel(
                key, self.space.num_alternatives, self.space.rate
            )
        return self._components[key]

    def pairs(self, vertices: tuple[int, ...]) -> PairCounts:
        if vertices not in self._pairs:
            self._pairs[vertices] = project_pairs(
                self.panel, vertices, self.space.num_alternatives
            )
        return self._pairs[vertices]

    def keys_for(self, net_idx: int, pref_idx: int) -> list[tuple]:
        network = self.space.networks[net_idx]
        prefs = self.space.preferences[pref_idx]
        return [
            component_key(network, prefs, vs) for vs in network_components(network)
        ]

    def loglik(self, net_idx: int, pref_idx: int, levels: NDArray[np.float64]) -> float:
        total = 0.0
        for key in self.keys_for(net_idx, pref_idx):
            comp = self.component(key)
            total += comp.loglik(
                levels, self.delta, self.pairs(key[0]), self._stationary_ok
            )
        return total

    def _validate_stationary(self) -> bool:
        """Spot-check the long-interval equilibrium shortcut against expm."""
        net_idx, pref_idx = 0, 0
        probe = default_anchor_levels(self.space.num_levels)[0]
        for key in self.keys_for(net_idx, pref_idx):
            comp = self.component(key)
            pairs = self.pairs(key[0])
            exact = comp.loglik(probe, self.delta, pairs, stationary_ok=False)
            fast = comp.loglik(probe, self.delta, pairs, stationary_ok=True)
            if abs(exact - fast) > 1e-7 * max(1.0, abs(exact)):
                return False
        return True

    def optimize(
        self, net_idx: int, pref_idx: int, warm_levels: NDArray[np.float64] | None
    ) -> CandidateFit:
        k = self.space.num_levels
        eps = self.space.epsilon
        raws = [
            np.asarray((s * (k // len(s) + 1))[:k])
            for s in START_RAWS[: self.options.starts]
        ]
        if warm_levels is not None:
            raws.insert(0, raw_from_levels(warm_levels, eps))
        if not raws:
            raws = [np.zeros(k)]
        best_val = -np.inf
        best_x = raws[0]
        iterations = 0
        converged = False

        def objective(x: NDArray[np.float64]) -> float:
            return -self.loglik(net_idx, pref_idx, levels_from_raw(x, eps))

        for x0 in raws:
            res = scipy.optimize.minimize(
                objective,
                x0,
                method="L-BFGS-B",
                options={
                    "maxiter": self.options.max_iterations,
                    "gtol": self.options.gradient_tol,
                    "eps": self.options.fd_step,
                },
            )
            iterations += int(res.nit)
            if -res.fun > best_val:
                best_val = -res.fun
                best_x = res.x
                converged = bool(res.success)
        return CandidateFit(
            network_index=net_idx,
            preference_index=pref_idx,
            screen_score=None,
            log_likelihood=float(best_val),
            levels=levels_from_raw(best_x, eps),
            iterations=iterations,
            converged=converged,
        )


def screened_fits(
    ev: _Evaluator,
    candidates: list[tuple[int, int]],
    scores: NDArray[np.float64],
    anchor_best: NDArray[np.int64],
    anchors: list[NDArray[np.float64]],
) -> list[CandidateFit]:
    """Fully optimize candidates in descending screen order under the margin rule."""
    options = ev.options
    margin = options.margin(ev.panel.num_transitions)
    fits: list[CandidateFit] = []
    order = np.argsort(-scores, kind="stable")
    best_full = -np.inf
    for rank, c_idx in enumerate(order):
        i, j = candidates[c_idx]
        if rank >= options.min_full and scores[c_idx] < best_full - margin:
            fits.append(CandidateFit(i, j, float(scores[c_idx]), None, None))
            continue
        fit = ev.optimize(i, j, anchors[anchor_best[c_idx]])
        fit = replace(fit, screen_score=float(scores[c_idx]))
        fits.append(fit)
        assert fit.log_likelihood is not None
        best_full = max(best_full, fit.log_likelihood)
    return fits


def select_winner(
    fits: list[CandidateFit], tie_tol: float
) -> tuple[CandidateFit, tuple[tuple[int, int], ...]]:
    """Best fitted candidate plus all maximizers within the tie tolerance."""
    fitted = [f for f in fits if f.log_likelihood is not None]
    if not fitted or all(np.isneginf(f.log_likelihood) for f in fitted):
        raise EstimationError("every candidate has log likelihood -inf")
    best_val = max(f.log_likelihood for f in fitted)
    maximizers = sorted(
        (f.network_index, f.preference_index)
        for f in fitted
        if f.log_likelihood >= best_val - tie_tol
    )
    winner = next(
        f
        for f in fitted
        if (f.network_index, f.preference_index) == maximizers[0]
    )
    return winner, tuple(maximizers)


def mle(
    panel: Panel,
    space: ParamSpace,
    delta: float,
    options: MleOptions = MleOptions(),
    anchors: list[NDArray[np.float64]] | None = None,
) -> EstimationResult:
    """Exhaustive discrete scan with an inner quasi-Newton fit per candidate.

    With screening enabled, every candidate is first scored at the anchor
    levels and candidates are then fully optimized in descending screen order
    until the next screen score falls ``margin`` nats below the best fitted
    likelihood (never fewer than ``min_full`` fits).
    """
    ev = _Evaluator(space, panel, delta, options)
    n_nets, n_prefs = len(space.networks), len(space.preferences)
    candidates = [(i, j) for i in range(n_nets) for j in range(n_prefs)]
    use_screen = options.screen == "on" or (
        options.screen == "auto" and len(candidates) > 4 * options.min_full
    )
    if anchors is None:
        anchors = default_anchor_levels(space.num_levels)

    fits: list[CandidateFit] = []
    if not use_screen:
        best_levels: NDArray[np.float64] | None = None
        best_seen = -np.inf
        for i, j in candidates:
            fit = ev.optimize(i, j, best_levels)
            fits.append(fit)
            assert fit.log_likelihood is not None
            if fit.log_likelihood > best_seen:
                best_seen = fit.log_likelihood
                best_levels = fit.levels
    else:
        scores = np.full(len(candidates), -np.inf)
        anchor_best = np.zeros(len(candidates), dtype=int)
        for a_idx, levels in enumerate(anchors):
            for c_idx, (i, j) in enumerate(candidates):
                value = ev.loglik(i, j, levels)
                if value > scores[c_idx]:
                    scores[c_idx] = value
                    anchor_best[c_idx] = a_idx
        fits = screened_fits(ev, candidates, scores, anchor_best, anchors)

    winner, maximizers = select_winner(fits, options.tie_tol)
    assert winner.levels is not None and winner.log_likelihood is not None
    return EstimationResult(
        space=space,
        network=space.networks[winner.network_index],
        preferences=space.preferences[winner.preference_index],
        levels=winner.levels,
        log_likelihood=float(winner.log_likelihood),
        candidates=tuple(fits),
        maximizers=maximizers,
        fully_optimized=sum(1 for f in fits if f.log_likelihood is not None),
        options=options,
    )
