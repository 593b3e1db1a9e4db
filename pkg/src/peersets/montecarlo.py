"""Monte Carlo experiment harness for the panel maximum-likelihood estimator.

Two experiments: attention-level bias/RMSE with the network and preferences
held at the truth, and full structure recovery rates over the candidate
space. Sample sizes T pair with observation intervals delta = time_span / T
so every panel covers the same stretch of model time. Replications draw
independent RNG streams spawned from one master seed and results are
deterministic given (design, seed), independent of the worker count.

For the recovery experiment the anchor screening stage is shared across
replications of a batch: each distinct network component is exponentiated
once per anchor and its per-replication likelihood contributions are reused,
which is what makes exhaustive 112 x 32 candidate scans affordable.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .builtin import PANEL_TIME_SPAN, restaurant_model
from .estimate import (
    ComponentModel,
    EstimationError,
    MleOptions,
    ParamSpace,
    PairCounts,
    STATIONARY_DELTA,
    _Evaluator,
    component_key,
    default_anchor_levels,
    network_components,
    project_pairs,
    screened_fits,
    select_winner,
)
from .model import ModelSpec
from .simulate import Panel, discretize, simulate_trajectory
from .states import Config


@dataclass(frozen=True)
class McDesign:
    """Data-generating truth plus the candidate space searched by the estimator."""

    truth: ModelSpec
    space: ParamSpace
    truth_levels: NDArray[np.float64]
    time_span: float = PANEL_TIME_SPAN
    y0: Config | None = None
    burn_in: float = 0.0

    def delta_for(self, sample_size: int) -> float:
        return self.time_span / sample_size


def restaurant_design(undirected: bool = True) -> McDesign:
    truth = restaurant_model(undirected=undirected)
    return McDesign(
        truth=truth,
        space=ParamSpace.restaurant(),
        truth_levels=np.array([0.25, 0.75, 0.875]),
    )


DEFAULT_MC_OPTIONS = MleOptions(
    starts=1, max_iterations=80, gradient_tol=1e-6, screen="on"
)


def _simulate_panel(design: McDesign, sample_size: int, seed: np.random.SeedSequence) -> Panel:
    delta = design.delta_for(sample_size)
    rng = np.random.default_rng(seed)
    traj = simulate_trajectory(
        design.truth,
        horizon=sample_size * delta,
        rng=rng,
        y0=design.y0,
        burn_in=design.burn_in,
    )
    return discretize(traj, delta)


# ---------------------------------------------------------------------------
# bias / RMSE with the structure fixed at the truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BiasRmseReport:
    """Attention-level bias and RMSE by sample size.

    ``bias``/``rmse`` have shape (num sizes, num levels); ``estimates`` keeps
    the per-replication level estimates for the JSON sidecar.
    """

    sample_sizes: tuple[int, ...]
    truth_levels: NDArray[np.float64]
    bias: NDArray[np.float64]
    rmse: NDArray[np.float64]
    estimates: NDArray[np.float64]  # (sizes, replications, levels)
    replications: int
    seed: int

    def csv_rows(self) -> list[list[str]]:
        header = ["quantity", "statistic"] + [str(t) for t in self.sample_sizes]
        rows = [header]
        for lvl in range(self.truth_levels.size):
            for stat, table in (("bias", self.bias), ("rmse", self.rmse)):
                rows.append(
                    [f"attention_level_{lvl}", stat]
                    + [f"{table[s, lvl]:.6f}" for s in range(len(self.sample_sizes))]
                )
        return rows


def _bias_rep(args) -> NDArray[np.float64]:
    design, sample_size, seed, options = args
    panel = _simulate_panel(design, sample_size, seed)
    fixed = ParamSpace(
        (design.truth.network,),
        (design.truth.preferences,),
        design.space.num_alternatives,
        epsilon=design.space.epsilon,
        rate=design.space.rate,
    )
    from .estimate import mle

    result = mle(panel, fixed, design.delta_for(sample_size), options=options)
    levels = np.full(design.space.num_levels, np.nan)
    levels[: result.levels.size] = result.levels
    return levels


def monte_carlo_bias_rmse(
    design: McDesign,
    sample_sizes: list[int],
    replications: int,
    seed: int,
    options: MleOptions | None = None,
    jobs: int = 1,
) -> BiasRmseReport:
    """Estimate attention levels with (network, preferences) known."""
    if options is None:
        options = MleOptions(starts=2, max_iterations=200, gradient_tol=1e-7, screen="off")
    num_levels = design.space.num_levels
    estimates = np.empty((len(sample_sizes), replications, num_levels))
    streams = np.random.SeedSequence(seed).spawn(len(sample_sizes) * replications)
    for s_idx, sample_size in enumerate(sample_sizes):
        tasks = [
            (design, sample_size, streams[s_idx * replications + r], options)
            for r in range(replications)
        ]
        estimates[s_idx] = np.asarray(_pmap(_bias_rep, tasks, jobs))
    truth = np.asarray(design.truth_levels, dtype=float)
    err = estimates - truth[None, None, :]
    return BiasRmseReport(
        sample_sizes=tuple(sample_sizes),
        truth_levels=truth,
        bias=err.mean(axis=1),
        rmse=np.sqrt((err**2).mean(axis=1)),
        estimates=estimates,
        replications=replications,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# structure recovery over the candidate space
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RecoveryReport:
    """Fraction of replications recovering the exact network / preferences."""

    sample_sizes: tuple[int, ...]
    network_rate: NDArray[np.float64]
    preference_rate: NDArray[np.float64]
    both_rate: NDArray[np.float64]
    detail: list[list[dict]]  # per size, per replication
    replications: int
    seed: int

    def csv_rows(self) -> list[list[str]]:
        header = ["quantity"] + [str(t) for t in self.sample_sizes]
        return [
            header,
            ["network"] + [f"{x:.4f}" for x in self.network_rate],
            ["preferences"] + [f"{x:.4f}" for x in self.preference_rate],
            ["network_and_preferences"] + [f"{x:.4f}" for x in self.both_rate],
        ]


def _screen_key_task(args):
    (key_idx, key, num_alternatives, rate, delta, anchors, pair_list, stationary_ok) = args
    model = ComponentModel(key, num_alternatives, rate)
    out = np.empty((len(anchors), len(pair_list)))
    for a_idx, levels in enumerate(anchors):
        if stationary_ok and delta >= STATIONARY_DELTA:
            dist = np.clip(model.stationary(levels), 1e-300, None)
            logdist = np.log(dist)
            for r, pairs in enumerate(pair_list):
                out[a_idx, r] = float(logdist[pairs.dst] @ pairs.weight)
        else:
            p = model.transition(levels, delta)
            logp = np.log(np.clip(p, 1e-300, None))
            for r, pairs in enumerate(pair_list):
                out[a_idx, r] = float(logp[pairs.src, pairs.dst] @ pairs.weight)
    return key_idx, out


def _recovery_rep(args):
    (design, panel, delta, options, anchors, scores_row, anchor_best_row) = args
    ev = _Evaluator(design.space, panel, delta, options)
    candidates = [
        (i, j)
        for i in range(len(design.space.networks))
        for j in range(len(design.space.preferences))
    ]
    fits = screened_fits(ev, candidates, scores_row, anchor_best_row, anchors)
    winner, _ = select_winner(fits, options.tie_tol)
    net = design.space.networks[winner.network_index]
    prefs = design.space.preferences[winner.preference_index]
    net_ok = net.edges == design.truth.network.edges
    pref_ok = prefs.orders == design.truth.preferences.orders
    return {
        "network_correct": bool(net_ok),
        "preferences_correct": bool(pref_ok),
        "log_likelihood": float(winner.log_likelihood),
        "levels": [float(q) for q in winner.levels],
        "edges": sorted(tuple(e) for e in net.edges),
        "orders": [list(o) for o in prefs.orders],
        "fully_optimized": sum(1 for f in fits if f.log_likelihood is not None),
    }


def monte_carlo_recovery(
    design: McDesign,
    sample_sizes: list[int],
    replications: int,
    seed: int,
    options: MleOptions | None = None,
    jobs: int = 1,
    anchors: list[NDArray[np.float64]] | None = None,
) -> RecoveryReport:
    """Full-candidate-space estimation, repeated; reports exact-recovery rates."""
    if options is None:
        options = DEFAULT_MC_OPTIONS
    if anchors is None:
        anchors = default_anchor_levels(design.space.num_levels)
    space = design.space
    candidates = [
        (i, j) for i in range(len(space.networks)) for j in range(len(space.preferences))
    ]
    cand_keys: list[list[tuple]] = []
    key_index: dict[tuple, int] = {}
    for i, j in candidates:
        keys = [
            component_key(space.networks[i], space.preferences[j], vs)
            for vs in network_components(space.networks[i])
        ]
        cand_keys.append(keys)
        for key in keys:
            key_index.setdefault(key, len(key_index))
    all_keys = sorted(key_index, key=key_index.get)

    streams = np.random.SeedSequence(seed).spawn(len(sample_sizes) * replications)
    rates = np.zeros((3, len(sample_sizes)))
    detail: list[list[dict]] = []
    for s_idx, sample_size in enumerate(sample_sizes):
        delta = design.delta_for(sample_size)
        panels = _pmap(
            _simulate_panel_task,
            [
                (design, sample_size, streams[s_idx * replications + r])
                for r in range(replications)
            ],
            jobs,
        )
        # per-replication pair counts for every component vertex set
        vertex_sets = sorted({key[0] for key in all_keys})
        pair_lists = {
            vs: [project_pairs(p, vs, space.num_alternatives) for p in panels]
            for vs in vertex_sets
        }
        stationary_ok = _stationary_ok_for_batch(
            design, panels[0], delta, options, anchors
        )
        tasks = [
            (
                key_idx,
                key,
                space.num_alternatives,
                space.rate,
                delta,
                anchors,
                pair_lists[key[0]],
                stationary_ok,
            )
            for key_idx, key in enumerate(all_keys)
        ]
        contributions = [None] * len(all_keys)
        for key_idx, arr in _pmap(_screen_key_task, tasks, jobs):
            contributions[key_idx] = arr
        # scores_by_anchor: (anchors, replications, candidates)
        scores_by_anchor = np.zeros((len(anchors), replications, len(candidates)))
        for c_idx, keys in enumerate(cand_keys):
            for key in keys:
                scores_by_anchor[:, :, c_idx] += contributions[key_index[key]]
        scores = scores_by_anchor.max(axis=0)
        anchor_best = scores_by_anchor.argmax(axis=0)

        rep_tasks = [
            (
                design,
                panels[r],
                delta,
                options,
                anchors,
                scores[r],
                anchor_best[r],
            )
            for r in range(replications)
        ]
        rep_results = _pmap(_recovery_rep, rep_tasks, jobs)
        detail.append(list(rep_results))
        rates[0, s_idx] = np.mean([r["network_correct"] for r in rep_results])
        rates[1, s_idx] = np.mean([r["preferences_correct"] for r in rep_results])
        rates[2, s_idx] = np.mean(
            [r["network_correct"] and r["preferences_correct"] for r in rep_results]
        )
    return RecoveryReport(
        sample_sizes=tuple(sample_sizes),
        network_rate=rates[0],
        preference_rate=rates[1],
        both_rate=rates[2],
        detail=detail,
        replications=replications,
        seed=seed,
    )


def _simulate_panel_task(args) -> Panel:
    return _simulate_panel(*args)


def _stationary_ok_for_batch(
    design: McDesign,
    panel: Panel,
    delta: float,
    options: MleOptions,
    anchors: list[NDArray[np.float64]],
) -> bool:
    if not options.stationary_shortcut or delta < STATIONARY_DELTA:
        return False
    probe = _Evaluator(design.space, panel, delta, options)
    return probe._stationary_ok


def _pmap(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------


def write_csv(rows: list[list[str]], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(",".join(row) for row in rows) + "\n")


def write_bias_rmse_report(report: BiasRmseReport, out_dir: Path, stem: str = "bias_rmse") -> None:
    write_csv(report.csv_rows(), out_dir / f"{stem}.csv")
    sidecar = {
        "seed": report.seed,
        "replications": report.replications,
        "sample_sizes": list(report.sample_sizes),
        "truth_levels": report.truth_levels.tolist(),
        "estimates": report.estimates.tolist(),
    }
    (out_dir / f"{stem}.json").write_text(json.dumps(sidecar, indent=1))


def write_recovery_report(report: RecoveryReport, out_dir: Path, stem: str = "recovery") -> None:
    write_csv(report.csv_rows(), out_dir / f"{stem}.csv")
    sidecar = {
        "seed": report.seed,
        "replications": report.replications,
        "sample_sizes": list(report.sample_sizes),
        "detail": report.detail,
    }
    (out_dir / f"{stem}.json").write_text(json.dumps(sidecar, indent=1))
