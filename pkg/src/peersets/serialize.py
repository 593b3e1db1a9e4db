"""File formats: model configs, CCP tables, matrices, trajectories, panels.

All formats are documented in FORMATS.md. People are indexed 0..A-1 in every
machine-readable file; alternative ids use 0 (serialized as "o") for the
default option. JSON model configs round-trip bit-stable: floats are written
with full precision and reparsed to identical doubles.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from .ccp import CcpTable
from .ctmc import InvariantDistribution, RateMatrix, TransitionMatrix
from .model import (
    AttentionIndexRule,
    AttentionRule,
    BrockDurlaufTerms,
    ModelError,
    ModelSpec,
    Network,
    PreferenceProfile,
    RandomChoiceRule,
    Variant,
)
from .simulate import Panel, Trajectory
from .states import StateSpace, config_from_string, config_to_string

TRAJECTORY_FORMAT = "peersets-trajectory"
PANEL_FORMAT = "peersets-panel"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """Raised for malformed or unsupported files."""


# ---------------------------------------------------------------------------
# model configs
# ---------------------------------------------------------------------------


def model_to_json(model: ModelSpec) -> dict[str, Any]:
    """JSON-able dict for a model; see FORMATS.md for the schema."""
    out: dict[str, Any] = {
        "variant": model.variant.value,
        "num_people": model.num_people,
        "num_alternatives": model.num_alternatives,
        "edges": sorted([a, b] for a, b in model.network.edges),
        "preferences": [list(o) for o in model.preferences.orders],
        "rates": model.rates.tolist(),
    }
    if model.attention is not None:
        out["attention"] = _attention_to_json(model.attention)
    if model.choice_rule is not None:
        if model.choice_rule.kind != "logit" or not hasattr(model.choice_rule, "utilities"):
            raise FormatError("only logit choice rules serialize to JSON")
        out["choice_rule"] = {
            "kind": "logit",
            "utilities": np.asarray(model.choice_rule.utilities).tolist(),
        }
    if model.brock_durlauf is not None:
        # social terms serialize own-independently: S(a, v, n) tables
        out["brock_durlauf"] = {
            "delta": model.brock_durlauf.delta.tolist(),
            "social": [
                [
                    [
                        float(model.brock_durlauf.social(a, v, 0, n))
                        for n in range(model.network.degree(a) + 1)
                    ]
                    for v in range(1, model.num_alternatives + 1)
                ]
                for a in range(model.num_people)
            ],
        }
    if model.attention_index is not None:
        raise FormatError(
            "set-index models are function-backed; serialize the generating "
            "singleton tables instead"
        )
    return out


def _attention_to_json(rule: AttentionRule) -> dict[str, Any]:
    nested: dict[str, Any] = {}
    for a, table in enumerate(rule.tables):
        per_alt: dict[str, Any] = {}
        for v in range(1, rule.num_alternatives + 1):
            per_own: dict[str, Any] = {}
            for own in range(rule.num_alternatives + 1):
                own_key = "o" if own == 0 else str(own)
                per_own[own_key] = {
                    str(n): float(table[own, v - 1, n])
                    for n in range(table.shape[2])
                }
            per_alt[str(v)] = per_own
        nested[str(a)] = per_alt
    return nested


def _attention_from_json(data: Any, num_people: int, num_alternatives: int, network: Network) -> AttentionRule:
    if isinstance(data, dict) and "shared_levels" in data:
        return AttentionRule.shared_levels(
            network, num_alternatives, [float(x) for x in data["shared_levels"]]
        )
    tables = []
    for a in range(num_people):
        person = data[str(a)]
        deg = network.degree(a)
        table = np.empty((num_alternatives + 1, num_alternatives, deg + 1))
        for v in range(1, num_alternatives + 1):
            per_own = person[str(v)]
            for own in range(num_alternatives + 1):
                own_key = "o" if own == 0 else str(own)
                counts = per_own[own_key]
                for n in range(deg + 1):
                    table[own, v - 1, n] = float(counts[str(n)])
        tables.append(table)
    return AttentionRule(tables)


def model_from_json(data: dict[str, Any]) -> ModelSpec:
    try:
        variant = Variant(data["variant"])
        num_people = int(data["num_people"])
        num_alternatives = int(data["num_alternatives"])
        network = Network(num_people, [tuple(e) for e in data["edges"]])
        preferences = PreferenceProfile([tuple(o) for o in data["preferences"]])
        rates = np.asarray(data["rates"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad model config: {exc}") from exc
    attention = None
    choice_rule = None
    brock = None
    if "attention" in data:
        attention = _attention_from_json(
            data["attention"], num_people, num_alternatives, network
        )
    if "choice_rule" in data:
        spec = data["choice_rule"]
        if spec.get("kind") != "logit":
            raise FormatError("only logit choice rules are supported in JSON")
        choice_rule = RandomChoiceRule.logit(np.asarray(spec["utilities"], dtype=float))
    if "brock_durlauf" in data:
        spec = data["brock_durlauf"]
        social_table = [
            [np.asarray(row, dtype=float) for row in person]
            for person in spec["social"]
        ]

        def social(a: int, v: int, own: int, n: int) -> float:
            return float(social_table[a][v - 1][n])

        brock = BrockDurlaufTerms(np.asarray(spec["delta"], dtype=float), social)
    try:
        return ModelSpec(
            variant=variant,
            network=network,
            preferences=preferences,
            rates=rates,
            attention=attention,
            choice_rule=choice_rule,
            brock_durlauf=brock,
        )
    except ModelError as exc:
        raise FormatError(f"inconsistent model config: {exc}") from exc


def write_model(model: ModelSpec, path: Path) -> None:
    path.write_text(json.dumps(model_to_json(model), indent=1))


def read_model(path: Path) -> ModelSpec:
    return model_from_json(json.loads(path.read_text()))


# ---------------------------------------------------------------------------
# CCP tables
# ---------------------------------------------------------------------------


def ccp_table_to_json(table: CcpTable) -> dict[str, Any]:
    persons: dict[str, Any] = {}
    for a in range(table.num_people):
        by_config = {}
        for row, config in enumerate(table.space.configs()):
            by_config[config_to_string(config)] = [
                float(x) for x in table.values[row, a]
            ]
        persons[str(a)] = by_config
    return {
        "variant": table.variant.value,
        "num_people": table.num_people,
        "num_alternatives": table.num_alternatives,
        "includes_default": table.space.include_default,
        "persons": persons,
    }


def ccp_table_from_json(data: dict[str, Any]) -> CcpTable:
    try:
        variant = Variant(data["variant"])
        num_people = int(data["num_people"])
        num_alternatives = int(data["num_alternatives"])
        include_default = bool(data.get("includes_default", variant is not Variant.NO_DEFAULT))
        space = StateSpace(num_people, num_alternatives, include_default)
        values = np.empty((space.size, num_people, num_alternatives + 1))
        for a in range(num_people):
            by_config = data["persons"][str(a)]
            for key, probs in by_config.items():
                values[space.row(config_from_string(key)), a] = np.asarray(
                    probs, dtype=float
                )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad CCP table: {exc}") from exc
    return CcpTable(space, values, variant)


# ---------------------------------------------------------------------------
# matrices and distributions
# ---------------------------------------------------------------------------


def matrix_to_csv(matrix: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in np.asarray(matrix):
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def rate_matrix_to_coordinate_json(rm: RateMatrix) -> dict[str, Any]:
    dense = rm.toarray()
    rows, cols = np.nonzero(dense)
    return {
        "dimension": rm.dimension,
        "entries": [
            [int(i), int(j), float(dense[i, j])] for i, j in zip(rows, cols)
        ],
    }


def invariant_to_json(mu: InvariantDistribution) -> dict[str, Any]:
    return {
        "residual": mu.residual,
        "probabilities": {
            config_to_string(cfg): float(mu.probabilities[row])
            for row, cfg in enumerate(mu.space.configs())
        },
    }


# ---------------------------------------------------------------------------
# trajectories and panels
# ---------------------------------------------------------------------------


def trajectory_to_jsonl(trajectory: Trajectory) -> str:
    head = {
        "format": TRAJECTORY_FORMAT,
        "version": FORMAT_VERSION,
        "num_people": trajectory.space.num_people,
        "num_alternatives": trajectory.space.num_alternatives,
        "includes_default": trajectory.space.include_default,
        "initial": config_to_string(trajectory.initial),
        "horizon": trajectory.horizon,
        "seed": trajectory.seed,
    }
    lines = [json.dumps(head)]
    for t, p, c in zip(trajectory.times, trajectory.persons, trajectory.choices):
        lines.append(
            json.dumps({"t": float(t), "person": int(p), "choice": int(c)})
        )
    return "\n".join(lines) + "\n"


def trajectory_from_jsonl(text: str) -> Trajectory:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty trajectory file")
    head = json.loads(lines[0])
    if head.get("format") != TRAJECTORY_FORMAT:
        raise FormatError(f"not a trajectory file: {head}")
    space = StateSpace(
        int(head["num_people"]),
        int(head["num_alternatives"]),
        bool(head["includes_default"]),
    )
    times, persons, choices = [], [], []
    for ln in lines[1:]:
        rec = json.loads(ln)
        times.append(float(rec["t"]))
        persons.append(int(rec["person"]))
        choices.append(int(rec["choice"]))
    return Trajectory(
        space=space,
        initial=config_from_string(head["initial"]),
        times=np.asarray(times, dtype=float),
        persons=np.asarray(persons, dtype=np.int16),
        choices=np.asarray(choices, dtype=np.int16),
        horizon=float(head["horizon"]),
        seed=head.get("seed"),
    )


def panel_to_csv(panel: Panel) -> str:
    buf = io.StringIO()
    meta = {
        "format": PANEL_FORMAT,
        "version": FORMAT_VERSION,
        "delta": panel.delta,
        "num_alternatives": panel.space.num_alternatives,
        "includes_default": panel.space.include_default,
    }
    buf.write("# " + json.dumps(meta) + "\n")
    writer = csv.writer(buf)
    num_people = panel.space.num_people
    writer.writerow(["time"] + [f"person_{a + 1}" for a in range(num_people)])
    for i in range(panel.num_snapshots):
        row = [repr(i * panel.delta)] + [
            "o" if c == 0 else str(int(c)) for c in panel.configs[i]
        ]
        writer.writerow(row)
    return buf.getvalue()


def panel_from_csv(text: str) -> Panel:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError("panel file missing its metadata line")
    meta = json.loads(lines[0][1:].strip())
    if meta.get("format") != PANEL_FORMAT:
        raise FormatError(f"not a panel file: {meta}")
    reader = csv.reader(lines[1:])
    header = next(reader)
    num_people = len(header) - 1
    configs = []
    for row in reader:
        if not row:
            continue
        configs.append([0 if c == "o" else int(c) for c in row[1:]])
    space = StateSpace(
        num_people,
        int(meta["num_alternatives"]),
        bool(meta.get("includes_default", True)),
    )
    return Panel(space, float(meta["delta"]), np.asarray(configs, dtype=np.int16))
