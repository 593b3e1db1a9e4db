"""Continuous-time simulation of the choice process and panel discretization.

Revision opportunities arrive as a superposition of per-person Poisson
clocks. At each event the drawn person forms a consideration set (independent
coin flips per alternative, or a set-index draw, depending on the variant)
and adopts the appropriate member. Every revision is recorded, including ones
that re-select the current choice, so event times carry the full revision
process. Trajectories are reproducible bit-for-bit given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .model import ModelSpec, Variant, all_subsets
from .states import DEFAULT, Config, StateSpace

_BATCH = 8192


@dataclass(frozen=True)
class Event:
    """One revision: at ``time``, ``person`` selected ``choice``."""

    time: float
    person: int
    choice: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Event record of one continuous-time run.

    ``times`` are strictly increasing and bounded by ``horizon``; replaying
    ``(persons, choices)`` from ``initial`` gives the state path.
    """

    space: StateSpace
    initial: Config
    times: NDArray[np.float64]
    persons: NDArray[np.int16]
    choices: NDArray[np.int16]
    horizon: float
    seed: int | None = None

    @property
    def num_events(self) -> int:
        return int(self.times.size)

    def events(self) -> list[Event]:
        return [
            Event(float(t), int(p), int(c))
            for t, p, c in zip(self.times, self.persons, self.choices)
        ]

    def state_at(self, t: float) -> Config:
        """Configuration in force at time ``t`` (after any event at exactly t)."""
        state = list(self.initial)
        idx = int(np.searchsorted(self.times, t, side="right"))
        for k in range(idx):
            state[self.persons[k]] = self.choices[k]
        return tuple(state)

    def final_state(self) -> Config:
        return self.state_at(self.horizon)


@dataclass(frozen=True, eq=False)
class Panel:
    """Snapshots of the configuration at times 0, delta, 2*delta, ...

    ``configs`` has shape (num snapshots, A); row i is the state at i*delta.
    """

    space: StateSpace
    delta: float
    configs: NDArray[np.int16]

    @property
    def num_snapshots(self) -> int:
        return int(self.configs.shape[0])

    @property
    def num_transitions(self) -> int:
        return self.num_snapshots - 1

    def config(self, i: int) -> Config:
        return tuple(int(c) for c in self.configs[i])

    def rows(self) -> NDArray[np.int64]:
        """Lexicographic row index of each snapshot."""
        offset = 0 if self.space.include_default else 1
        weights = np.array(
            [self.space.base ** (self.space.num_people - 1 - a) for a in range(self.space.num_people)],
            dtype=np.int64,
        )
        return (self.configs.astype(np.int64) - offset) @ weights


def default_initial(model: ModelSpec) -> Config:
    """All-default start (all-1 for the no-default variant)."""
    fill = DEFAULT if model.includes_default else 1
    return (fill,) * model.num_people


def simulate_trajectory(
    model: ModelSpec,
    horizon: float,
    seed: int | None = None,
    y0: Config | None = None,
    burn_in: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Generate one event path up to ``horizon`` time units.

    Waiting times are exponential with the total revision rate; the reviser is
    chosen proportionally to her rate. ``burn_in`` time units are simulated
    and discarded first, restarting the clock at the burned-in state.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    space = model.state_space()
    if y0 is None:
        y0 = default_initial(model)
    space.validate(y0)
    if rng is None:
        rng = np.random.default_rng(seed)
    if burn_in > 0.0:
        warmup = _run(model, space, y0, burn_in, rng)
        y0 = _replay_final(warmup, y0)
    times, persons, choices = _run(model, space, y0, horizon, rng)
    return Trajectory(
        space=space,
        initial=y0,
        times=np.asarray(times, dtype=float),
        persons=np.asarray(persons, dtype=np.int16),
        choices=np.asarray(choices, dtype=np.int16),
        horizon=horizon,
        seed=seed,
    )


def _replay_final(
    run: tuple[list[float], list[int], list[int]], y0: Config
) -> Config:
    state = list(y0)
    for p, c in zip(run[1], run[2]):
        state[p] = c
    return tuple(state)


def _run(
    model: ModelSpec,
    space: StateSpace,
    y0: Config,
    horizon: float,
    rng: np.random.Generator,
) -> tuple[list[float], list[int], list[int]]:
    num_people = model.num_people
    y = model.num_alternatives
    total_rate = model.total_rate()
    pick_probs = model.rates / total_rate
    neighbors = [model.network.neighbors(a) for a in range(num_people)]
    orders = [model.preferences.order(a) for a in range(num_people)]
    tables = model.attention.tables if model.attention is not None else None
    variant = model.variant
    subsets = all_subsets(y) if variant is Variant.ATTENTION_INDEX else None

    times: list[float] = []
    persons: list[int] = []
    choices: list[int] = []
    state = list(y0)
    t = 0.0
    while True:
        waits = rng.exponential(1.0 / total_rate, size=_BATCH)
        who = rng.choice(num_people, size=_BATCH, p=pick_probs)
        coins = rng.random((_BATCH, y))
        extra = rng.random(_BATCH)  # set-index / choice-rule draws
        for k in range(_BATCH):
            t += waits[k]
            if t > horizon:
                return times, persons, choices
            a = int(who[k])
            own = state[a]
            counts = [0] * y
            for b in neighbors[a]:
                c = state[b]
                if c != DEFAULT:
                    counts[c - 1] += 1
            if variant is Variant.ATTENTION_INDEX:
                choice = _draw_attention_index(
                    model, a, tuple(state), subsets, orders[a], float(extra[k])
                )
            elif variant is Variant.PEER_PREFERENCE_LOGIT:
                choice = _draw_logit(model, a, tuple(state), float(extra[k]))
            else:
                assert tables is not None
                table = tables[a]
                considered = [
                    v
                    for v in range(1, y + 1)
                    if coins[k, v - 1] < table[own, v - 1, counts[v - 1]]
                ]
                if considered:
                    if variant is Variant.RANDOM_PREFERENCES:
                        choice = _draw_choice_rule(
                            model, a, frozenset(considered), float(extra[k])
                        )
                    else:
                        cset = set(considered)
                        choice = next(v for v in orders[a] if v in cset)
                elif variant is Variant.NO_DEFAULT:
                    choice = own
                else:
                    choice = DEFAULT
            state[a] = choice
            times.append(t)
            persons.append(a)
            choices.append(choice)


def _draw_choice_rule(model: ModelSpec, person: int, cset: frozenset[int], u: float) -> int:
    assert model.choice_rule is not None
    acc = 0.0
    members = sorted(cset)
    for v in members:
        acc += model.choice_rule.probability(person, v, cset)
        if u < acc:
            return v
    return members[-1]


def _draw_attention_index(
    model: ModelSpec,
    person: int,
    config: Config,
    subsets: list[tuple[int, ...]] | None,
    order: tuple[int, ...],
    u: float,
) -> int:
    rule = model.attention_index
    assert rule is not None and subsets is not None
    weights = [rule.value(person, frozenset(s), config) for s in subsets]
    target = u * sum(weights)
    acc = 0.0
    for s, w in zip(subsets, weights):
        acc += w
        if target < acc:
            if not s:
                return DEFAULT
            members = set(s)
            return next(v for v in order if v in members)
    return DEFAULT


def _draw_logit(model: ModelSpec, person: int, config: Config, u: float) -> int:
    from .ccp import ccp_brock_durlauf

    probs = ccp_brock_durlauf(model, person, config)
    acc = 0.0
    for v in range(probs.size):
        acc += probs[v]
        if u < acc:
            return v
    return probs.size - 1


# ---------------------------------------------------------------------------
# discretization and empirical summaries
# ---------------------------------------------------------------------------


def discretize(trajectory: Trajectory, delta: float) -> Panel:
    """Snapshot the trajectory at the grid 0, delta, ..., floor(T/delta)*delta."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if delta > trajectory.horizon:
        raise ValueError(
            f"delta {delta} exceeds the horizon {trajectory.horizon}"
        )
    num = int(np.floor(trajectory.horizon / delta)) + 1
    out = np.empty((num, trajectory.space.num_people), dtype=np.int16)
    state = np.asarray(trajectory.initial, dtype=np.int16).copy()
    grid = 0
    next_time = 0.0
    for k in range(trajectory.num_events):
        while grid < num and trajectory.times[k] > next_time:
            out[grid] = state
            grid += 1
            next_time = grid * delta
        if grid >= num:
            break
        state[trajectory.persons[k]] = trajectory.choices[k]
    while grid < num:
        out[grid] = state
        grid += 1
    return Panel(trajectory.space, delta, out)


@dataclass(frozen=True, eq=False)
class EmpiricalTransitions:
    """Row-normalized one-step transition counts from a panel."""

    space: StateSpace
    delta: float
    counts: NDArray[np.int64]
    matrix: NDArray[np.float64]
    unvisited_rows: NDArray[np.int64]


def empirical_transition_matrix(panel: Panel) -> EmpiricalTransitions:
    """Estimate the interval transition matrix by row-normalized counts.

    Rows never visited are flagged in ``unvisited_rows`` and left as zero.
    """
    if panel.num_snapshots < 2:
        raise ValueError("panel needs at least two snapshots")
    size = panel.space.size
    rows = panel.rows()
    counts = np.zeros((size, size), dtype=np.int64)
    np.add.at(counts, (rows[:-1], rows[1:]), 1)
    visits = counts.sum(axis=1)
    matrix = np.zeros((size, size))
    nonzero = visits > 0
    matrix[nonzero] = counts[nonzero] / visits[nonzero, None]
    return EmpiricalTransitions(
        space=panel.space,
        delta=panel.delta,
        counts=counts,
        matrix=matrix,
        unvisited_rows=np.flatnonzero(~nonzero),
    )


def empirical_invariant(trajectory: Trajectory) -> NDArray[np.float64]:
    """Holding-time-weighted occupancy of each configuration."""
    if trajectory.horizon <= 0:
        raise ValueError("horizon must be positive")
    space = trajectory.space
    offset = 0 if space.include_default else 1
    weights = np.array(
        [space.base ** (space.num_people - 1 - a) for a in range(space.num_people)],
        dtype=np.int64,
    )
    occupancy = np.zeros(space.size)
    row = int(np.dot(np.asarray(trajectory.initial, dtype=np.int64) - offset, weights))
    state = list(trajectory.initial)
    prev_t = 0.0
    for k in range(trajectory.num_events):
        t = float(trajectory.times[k])
        occupancy[row] += t - prev_t
        prev_t = t
        a = int(trajectory.persons[k])
        c = int(trajectory.choices[k])
        row += (c - state[a]) * int(weights[a])
        state[a] = c
    occupancy[row] += trajectory.horizon - prev_t
    return occupancy / trajectory.horizon


def occupancy_chi_square(
    panel: Panel, expected: NDArray[np.float64]
) -> tuple[float, int, float]:
    """Pearson goodness-of-fit of panel snapshot counts against ``expected``.

    Returns (statistic, degrees of freedom, p-value). Snapshots should be
    spaced widely enough to be close to independent draws.
    """
    from scipy.stats import chi2

    rows = panel.rows()
    counts = np.bincount(rows, minlength=panel.space.size).astype(float)
    n = counts.sum()
    mask = expected > 0
    stat = float(np.sum((counts[mask] - n * expected[mask]) ** 2 / (n * expected[mask])))
    dof = int(mask.sum()) - 1
    return stat, dof, float(chi2.sf(stat, dof))
