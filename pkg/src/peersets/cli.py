"""Command-line interface: simulate, solve, identify, estimate, mc, tables.

Exit codes are stable: 0 success, 2 config validation failure, 3 output I/O
failure, 4 numeric failure (reducible chain, failed solve or matrix log),
5 identification failure (assumption violations, rank deficiency, sign
patterns matching no order).

``--config`` accepts a path to a model JSON or one of the built-in names
``restaurant-directed``, ``restaurant-undirected``, ``two-person``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import builtin
from .ccp import ccp_table
from .ctmc import (
    CtmcError,
    build_rate_matrix,
    invariant_distribution,
    marginals,
    mistake_probability,
    transition_matrix,
)
from .estimate import (
    EstimationError,
    MleOptions,
    NetworkConstraints,
    ParamSpace,
    enumerate_networks,
    enumerate_preferences,
    mle,
)
from .identify import (
    IdentificationError,
    edge_statistics,
    identify_attention_index,
    identify_from_P,
    identify_network,
    identify_no_default,
    identify_random_pref,
    preference_witnesses,
    triple_sign_probes,
)
from .model import ModelError, Variant, validate_assumptions
from .montecarlo import (
    McDesign,
    monte_carlo_bias_rmse,
    monte_carlo_recovery,
    restaurant_design,
    write_bias_rmse_report,
    write_csv,
    write_recovery_report,
)
from .serialize import (
    FormatError,
    ccp_table_from_json,
    ccp_table_to_json,
    invariant_to_json,
    matrix_to_csv,
    panel_from_csv,
    panel_to_csv,
    rate_matrix_to_coordinate_json,
    read_model,
    trajectory_to_jsonl,
)
from .simulate import discretize, empirical_invariant, simulate_trajectory
from .states import StateSpaceError, config_to_string

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_IDENTIFY = 5

BUILTIN_MODELS = {
    "restaurant-directed": lambda: builtin.restaurant_model(undirected=False),
    "restaurant-undirected": lambda: builtin.restaurant_model(undirected=True),
    "two-person": lambda: builtin.two_person_binary(0.25, 0.75),
}


class CliError(SystemExit):
    def __init__(self, code: int, message: str) -> None:
        print(f"error: {message}", file=sys.stderr)
        super().__init__(code)


def _load_model(name_or_path: str):
    if name_or_path in BUILTIN_MODELS:
        return BUILTIN_MODELS[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise CliError(EXIT_CONFIG, f"config not found: {path}")
    try:
        return read_model(path)
    except (FormatError, ModelError, StateSpaceError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_CONFIG, f"bad model config: {exc}")


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory {out}: {exc}")
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = _load_model(args.config)
    if args.horizon is None or args.horizon <= 0:
        raise CliError(EXIT_CONFIG, "simulate needs a positive --horizon")
    delta = args.delta if args.delta is not None else args.horizon / 100.0
    if delta <= 0 or delta > args.horizon:
        raise CliError(EXIT_CONFIG, f"bad --delta {delta} for horizon {args.horizon}")
    out = _out_dir(args)
    traj = simulate_trajectory(
        model, horizon=args.horizon, seed=args.seed, burn_in=args.burn_in
    )
    panel = discretize(traj, delta)
    _write(out / "trajectory.jsonl", trajectory_to_jsonl(traj))
    _write(out / "panel.csv", panel_to_csv(panel))
    occupancy = empirical_invariant(traj)
    top = np.argsort(-occupancy)[:5]
    print(f"events: {traj.num_events} (horizon {args.horizon}, seed {args.seed})")
    print(f"panel: {panel.num_snapshots} snapshots at delta {delta}")
    print("top occupancy:")
    for row in top:
        cfg = traj.space.config(int(row))
        print(f"  {config_to_string(cfg)}: {occupancy[row]:.4f}")
    return EXIT_OK


def cmd_solve(args) -> int:
    model = _load_model(args.config)
    out = _out_dir(args)
    try:
        rm = build_rate_matrix(model)
        mu = invariant_distribution(rm)
    except CtmcError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    _write(out / "rate_matrix.csv", matrix_to_csv(rm.toarray()))
    _write(
        out / "rate_matrix.json", json.dumps(rate_matrix_to_coordinate_json(rm))
    )
    _write(out / "invariant.json", json.dumps(invariant_to_json(mu), indent=1))
    if args.delta is not None:
        try:
            p = transition_matrix(rm, args.delta)
        except (CtmcError, ValueError) as exc:
            raise CliError(EXIT_NUMERIC, str(exc))
        _write(out / "transition.csv", matrix_to_csv(p.matrix))
    marg_rows = [["person", "option", "probability"]]
    mistake_rows = [["person", "mistake_probability"]]
    print("equilibrium marginals (rows: default, then options):")
    for a in range(model.num_people):
        m = marginals(mu, a)
        for alt in range(model.num_alternatives + 1):
            label = "o" if alt == 0 else str(alt)
            marg_rows.append([f"{a + 1}", label, f"{m[alt]:.6f}"])
        mistake = mistake_probability(mu, model.preferences, a)
        mistake_rows.append([f"{a + 1}", f"{mistake:.6f}"])
        print(f"  person {a + 1}: " + " ".join(f"{x:.4f}" for x in m))
    write_csv(marg_rows, out / "marginals.csv")
    write_csv(mistake_rows, out / "mistakes.csv")
    print(f"balance residual: {mu.residual:.2e}")
    return EXIT_OK


def cmd_identify(args) -> int:
    if args.config is None and args.data is None:
        raise CliError(EXIT_CONFIG, "identify needs --config (analytic) or --data (CCP JSON)")
    if args.config is not None:
        model = _load_model(args.config)
        report = validate_assumptions(model)
        if not report.ok:
            raise CliError(EXIT_IDENTIFY, f"assumption violations:\n{report}")
        table = ccp_table(model)
    else:
        path = Path(args.data)
        if not path.exists():
            raise CliError(EXIT_CONFIG, f"data not found: {path}")
        try:
            table = ccp_table_from_json(json.loads(path.read_text()))
        except (FormatError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_CONFIG, f"bad CCP table: {exc}")
    variant = Variant(args.variant) if args.variant else table.variant
    tol = args.tolerance
    out = _out_dir(args)
    result: dict = {"variant": variant.value, "tolerance": tol}
    try:
        if variant is Variant.BASELINE_DEFAULT:
            network, prefs, attention = identify_from_P(table, tol)
            result.update(_structure_json(network, prefs))
            result["attention"] = _attention_json(attention)
            result["edge_statistics"] = {
                f"{a}->{b}": drop for (a, b), drop in edge_statistics(table).items()
            }
            result["preference_witnesses"] = {
                f"{a}:{v} vs {w}": drop
                for (a, v, w), drop in preference_witnesses(table, network).items()
            }
        elif variant is Variant.RANDOM_PREFERENCES:
            network = identify_network(table, tol)
            attention, rule = identify_random_pref(table, network, tol)
            result.update(_structure_json(network, None))
            result["attention"] = _attention_json(attention)
            result["choice_rule"] = _rule_json(rule)
        elif variant is Variant.NO_DEFAULT:
            network, prefs, attention = identify_no_default(table, tol)
            result.update(_structure_json(network, prefs))
            result["attention"] = _attention_json(attention)
            result["sign_probes"] = _sign_probe_json(table, network, tol)
        elif variant is Variant.ATTENTION_INDEX:
            network, prefs, rule = identify_attention_index(
                table, args.restriction, tol=tol
            )
            result.update(_structure_json(network, prefs))
            if isinstance(rule, list):
                result["partial_identification"] = {
                    "systems": len(rule),
                    "equations": int(rule[0].matrix.shape[0]),
                    "unknowns": int(rule[0].matrix.shape[1]),
                    "degrees_of_freedom": rule[0].degrees_of_freedom,
                }
            else:
                result["attention_index"] = _index_json(rule, table)
        else:
            raise CliError(
                EXIT_CONFIG,
                "the peer-preference logit contrast model has no identification routine",
            )
    except IdentificationError as exc:
        raise CliError(EXIT_IDENTIFY, str(exc))
    _write(out / "identify.json", json.dumps(result, indent=1))
    print(json.dumps({k: v for k, v in result.items() if k != "attention_index"}, indent=1)[:2000])
    return EXIT_OK


def _structure_json(network, prefs) -> dict:
    out = {"edges": sorted([a, b] for a, b in network.edges)}
    if prefs is not None:
        out["preferences"] = [list(o) for o in prefs.orders]
    return out


def _attention_json(rule) -> dict:
    from .serialize import _attention_to_json

    return _attention_to_json(rule)


def _rule_json(rule) -> dict:
    # tabulate the recovered distribution over every consideration set
    import itertools as it

    out = {}
    for a in range(rule.num_people):
        per = {}
        for size in range(1, rule.num_alternatives + 1):
            for members in it.combinations(range(1, rule.num_alternatives + 1), size):
                cset = frozenset(members)
                per[",".join(map(str, members))] = [
                    rule.probability(a, v, cset) for v in members
                ]
        out[str(a)] = per
    return out


def _index_json(rule, table) -> dict:
    import itertools as it

    out = {"restriction": rule.restriction, "values": {}}
    for a in range(table.num_people):
        per = {}
        for cfg in table.space.configs():
            sets = {}
            for size in range(1, table.num_alternatives + 1):
                for members in it.combinations(range(1, table.num_alternatives + 1), size):
                    sets[",".join(map(str, members))] = rule.value(
                        a, frozenset(members), cfg
                    )
            per[config_to_string(cfg)] = sets
        out["values"][str(a)] = per
    return out


def _sign_probe_json(table, network, tol) -> dict:
    import itertools as it

    out = {}
    for a in range(table.num_people):
        witness = network.neighbors(a)[0]
        probes = {}
        for triple in it.combinations(range(1, table.num_alternatives + 1), 3):
            signs = triple_sign_probes(table, a, witness, triple, tol)
            probes[",".join(map(str, triple))] = {
                ",".join(map(str, k)): v for k, v in signs.items()
            }
        out[str(a)] = probes
    return out


def cmd_estimate(args) -> int:
    if args.data is None:
        raise CliError(EXIT_CONFIG, "estimate needs --data (panel CSV)")
    path = Path(args.data)
    if not path.exists():
        raise CliError(EXIT_CONFIG, f"data not found: {path}")
    try:
        panel = panel_from_csv(path.read_text())
    except (FormatError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_CONFIG, f"bad panel: {exc}")
    delta = args.delta if args.delta is not None else panel.delta
    space = _estimation_space(args, panel)
    options = MleOptions(screen=args.screen)
    try:
        result = mle(panel, space, delta, options=options)
    except EstimationError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    out = _out_dir(args)
    payload = {
        "delta": delta,
        "log_likelihood": result.log_likelihood,
        "edges": sorted([a, b] for a, b in result.network.edges),
        "preferences": [list(o) for o in result.preferences.orders],
        "attention_levels": result.levels.tolist(),
        "maximizers": [list(m) for m in result.maximizers],
        "fully_optimized": result.fully_optimized,
        "candidates": result.space.num_candidates,
        "screen": options.screen,
    }
    _write(out / "estimate.json", json.dumps(payload, indent=1))
    print(json.dumps(payload, indent=1))
    return EXIT_OK


def _estimation_space(args, panel) -> ParamSpace:
    num_people = panel.space.num_people
    num_alts = panel.space.num_alternatives
    if num_people == 5 and num_alts == 2 and not args.directed and args.max_degree in (None, 2):
        return ParamSpace.restaurant()
    try:
        nets = enumerate_networks(
            num_people,
            NetworkConstraints(
                undirected=not args.directed, max_degree=args.max_degree
            ),
        )
        prefs = enumerate_preferences(num_people, num_alts)
        return ParamSpace(tuple(nets), tuple(prefs), num_alts)
    except EstimationError as exc:
        raise CliError(EXIT_CONFIG, str(exc))


def cmd_mc(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    undirected = True
    time_span = None
    truth_levels = None
    if args.config is not None:
        path = Path(args.config)
        if not path.exists():
            raise CliError(EXIT_CONFIG, f"design config not found: {path}")
        try:
            spec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_CONFIG, f"bad design config: {exc}")
        args.design = spec.get("design", args.design)
        sizes = spec.get("sizes", sizes)
        args.replications = int(spec.get("replications", args.replications))
        args.seed = int(spec.get("seed", args.seed))
        undirected = bool(spec.get("undirected_truth", True))
        time_span = spec.get("time_span")
        truth_levels = spec.get("truth_levels")
    if args.design is None:
        raise CliError(EXIT_CONFIG, "mc needs --design or a design config")
    design = restaurant_design(undirected=undirected)
    if truth_levels is not None:
        truth = builtin.restaurant_model(undirected=undirected, levels=tuple(truth_levels))
        design = McDesign(
            truth=truth,
            space=design.space,
            truth_levels=np.asarray(truth_levels, dtype=float),
            time_span=time_span or design.time_span,
        )
    elif time_span is not None:
        design = McDesign(
            truth=design.truth,
            space=design.space,
            truth_levels=design.truth_levels,
            time_span=time_span,
        )
    out = _out_dir(args)
    if args.design == "bias":
        sizes = sizes or [10, 50, 100, 500, 1000, 5000]
        report = monte_carlo_bias_rmse(
            design, sizes, args.replications, args.seed, jobs=args.jobs
        )
        write_bias_rmse_report(report, out)
        print("bias/rmse written; computed vs reference (x1e-3, reference from 1000-rep runs):")
        for s_idx, size in enumerate(report.sample_sizes):
            ref = builtin.REFERENCE_BIAS_RMSE.get(size)
            for lvl in range(report.truth_levels.size):
                line = (
                    f"  T={size} level {lvl}: bias {1e3 * report.bias[s_idx, lvl]:7.1f}"
                    f" rmse {1e3 * report.rmse[s_idx, lvl]:7.1f}"
                )
                if ref:
                    line += f"   (reference bias {ref[lvl][0]:7.1f} rmse {ref[lvl][1]:7.1f})"
                print(line)
    else:
        sizes = sizes or [10, 50, 100, 500]
        report = monte_carlo_recovery(
            design, sizes, args.replications, args.seed, jobs=args.jobs
        )
        write_recovery_report(report, out)
        print("recovery rates; computed vs reference (reference from 500-rep runs):")
        for s_idx, size in enumerate(report.sample_sizes):
            ref = builtin.REFERENCE_RECOVERY.get(size)
            line = (
                f"  T={size}: network {100 * report.network_rate[s_idx]:5.1f}%"
                f" preferences {100 * report.preference_rate[s_idx]:5.1f}%"
                f" both {100 * report.both_rate[s_idx]:5.1f}%"
            )
            if ref:
                line += f"   (reference {ref[0]}% / {ref[1]}% / {ref[2]}%)"
            print(line)
    return EXIT_OK


def cmd_tables(args) -> int:
    out = _out_dir(args)
    reps6 = 4 if args.fast else args.replications
    reps5 = 8 if args.fast else 4 * args.replications
    sizes5 = [500] if args.fast else [10, 500, 5000]
    sizes6 = [500] if args.fast else [50, 500]

    for undirected, marg_name, mist_name, marg_ref, mist_ref in (
        (False, "table1", "table2", builtin.REFERENCE_MARGINALS_DIRECTED, builtin.REFERENCE_MISTAKES_DIRECTED),
        (True, "table3", "table4", builtin.REFERENCE_MARGINALS_UNDIRECTED, builtin.REFERENCE_MISTAKES_UNDIRECTED),
    ):
        model = builtin.restaurant_model(undirected=undirected)
        mu = invariant_distribution(build_rate_matrix(model))
        marg_rows = [["option"] + [f"person_{a + 1}" for a in range(5)] + [f"person_{a + 1}_reference" for a in range(5)]]
        for alt, label in ((0, "o"), (1, "1"), (2, "2")):
            computed = [f"{marginals(mu, a)[alt]:.4f}" for a in range(5)]
            reference = [f"{marg_ref[label][a]:.2f}" for a in range(5)]
            marg_rows.append([label] + computed + reference)
        write_csv(marg_rows, out / f"{marg_name}.csv")
        mist_rows = [["person", "computed", "reference"]]
        kind = "undirected" if undirected else "directed"
        print(f"{mist_name} ({kind} network) mistake probabilities:")
        for a in range(5):
            val = mistake_probability(mu, model.preferences, a)
            mist_rows.append([f"{a + 1}", f"{val:.4f}", f"{mist_ref[a]:.2f}"])
            print(f"  person {a + 1}: computed {val:.4f} reference {mist_ref[a]:.2f}")
        write_csv(mist_rows, out / f"{mist_name}.csv")

    design = restaurant_design()
    bias = monte_carlo_bias_rmse(design, sizes5, reps5, args.seed, jobs=args.jobs)
    rows = bias.csv_rows()
    for lvl in range(3):
        for stat_idx, stat in enumerate(("bias", "rmse")):
            ref_row = [f"attention_level_{lvl}", f"{stat}_reference"]
            for size in sizes5:
                ref = builtin.REFERENCE_BIAS_RMSE.get(size)
                ref_row.append(f"{ref[lvl][stat_idx] / 1e3:.6f}" if ref else "")
            rows.append(ref_row)
    write_csv(rows, out / "table5.csv")
    print(f"table5: bias/rmse at sizes {sizes5} with {reps5} replications (see CSV)")

    recovery = monte_carlo_recovery(design, sizes6, reps6, args.seed + 1, jobs=args.jobs)
    rows = recovery.csv_rows()
    for name, idx in (("network", 0), ("preferences", 1), ("network_and_preferences", 2)):
        ref_row = [f"{name}_reference"]
        for size in sizes6:
            ref = builtin.REFERENCE_RECOVERY.get(size)
            ref_row.append(f"{ref[idx] / 100:.4f}" if ref else "")
        rows.append(ref_row)
    write_csv(rows, out / "table6.csv")
    for s_idx, size in enumerate(sizes6):
        ref = builtin.REFERENCE_RECOVERY.get(size)
        print(
            f"table6 T={size}: network {recovery.network_rate[s_idx]:.3f}"
            f" preferences {recovery.preference_rate[s_idx]:.3f}"
            f" both {recovery.both_rate[s_idx]:.3f}"
            + (f"   (reference {ref[0]}% / {ref[1]}% / {ref[2]}%)" if ref else "")
        )
    print(f"six tables written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peersets",
        description="peer-effect random consideration set models: equilibrium, "
        "simulation, identification, estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=False, data=False, horizon=False):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--tolerance", type=float, default=1e-9)
        if config:
            p.add_argument("--config", default=None, help="model JSON path or built-in name")
        if data:
            p.add_argument("--data", default=None)
        if horizon:
            p.add_argument("--horizon", type=float, default=None)

    p = sub.add_parser("simulate", help="generate a trajectory and panel")
    common(p, config=True, horizon=True)
    p.add_argument("--burn-in", type=float, default=0.0)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("solve", help="rate matrix, equilibrium, marginals, mistakes")
    common(p, config=True)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("identify", help="recover primitives from choice probabilities")
    common(p, config=True, data=True)
    p.add_argument(
        "--variant",
        default=None,
        choices=[v.value for v in Variant],
        help="identification procedure; defaults to the table's variant tag",
    )
    p.add_argument(
        "--restriction",
        default="multiplicative",
        choices=["multiplicative", "cardinality", "additive", "best-alternative", "unrestricted"],
    )
    p.set_defaults(fn=cmd_identify)

    p = sub.add_parser("estimate", help="maximum likelihood from a panel")
    common(p, data=True)
    p.add_argument("--screen", default="auto", choices=["auto", "on", "off"])
    p.add_argument("--directed", action="store_true")
    p.add_argument("--max-degree", type=int, default=None)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("mc", help="Monte Carlo bias/rmse or recovery experiment")
    common(p, config=True)
    p.add_argument("--design", choices=["bias", "recovery"], default=None)
    p.add_argument("--sizes", default=None, help="comma-separated sample sizes")
    p.add_argument("--replications", type=int, default=100)
    p.set_defaults(fn=cmd_mc)

    p = sub.add_parser("tables", help="regenerate the six report tables")
    common(p)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--fast", action="store_true", help="tiny smoke-test scale")
    p.set_defaults(fn=cmd_tables)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except (ModelError, StateSpaceError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CtmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IdentificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IDENTIFY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
