import json
from pathlib import Path

import numpy as np
import pytest

from peersets.builtin import restaurant_model, two_person_binary
from peersets.ccp import ccp_table
from peersets.cli import main
from peersets.model import AttentionRule, ModelSpec, Network, PreferenceProfile, Variant
from peersets.serialize import (
    ccp_table_to_json,
    panel_from_csv,
    trajectory_from_jsonl,
    write_model,
)

from helpers import random_no_default_model, random_random_pref_model


def run(args):
    return main([str(a) for a in args])


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "sim"
    code = run(
        ["simulate", "--config", "restaurant-directed", "--horizon", 50, "--delta", 1.0, "--seed", 7, "--out", out]
    )
    assert code == 0
    traj = trajectory_from_jsonl((out / "trajectory.jsonl").read_text())
    panel = panel_from_csv((out / "panel.csv").read_text())
    assert panel.num_snapshots == 51
    assert traj.seed == 7


def test_simulate_snapshot_count_matches_grid(tmp_path):
    out = tmp_path / "sim2"
    code = run(
        ["simulate", "--config", "restaurant-directed", "--horizon", 300, "--delta", 2.0, "--seed", 1, "--out", out]
    )
    assert code == 0
    panel = panel_from_csv((out / "panel.csv").read_text())
    assert panel.num_snapshots == 151


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(
            ["simulate", "--config", "two-person", "--horizon", 40, "--delta", 1.0, "--seed", 3, "--out", out]
        ) == 0
    assert (a / "trajectory.jsonl").read_bytes() == (b / "trajectory.jsonl").read_bytes()
    assert (a / "panel.csv").read_bytes() == (b / "panel.csv").read_bytes()


def test_missing_config_exits_2(tmp_path):
    assert run(["simulate", "--config", tmp_path / "nope.json", "--horizon", 10]) == 2


def test_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"variant": "baseline_default"}))
    assert run(["simulate", "--config", bad, "--horizon", 10]) == 2


def test_solve_outputs_marginals(tmp_path, capsys):
    out = tmp_path / "solve"
    code = run(["solve", "--config", "restaurant-directed", "--out", out, "--delta", 1.0])
    assert code == 0
    marg = (out / "marginals.csv").read_text().splitlines()
    assert marg[0] == "person,option,probability"
    values = {
        (row.split(",")[0], row.split(",")[1]): float(row.split(",")[2])
        for row in marg[1:]
    }
    assert values[("3", "2")] == pytest.approx(0.5156, abs=1e-3)
    mist = dict(
        line.split(",") for line in (out / "mistakes.csv").read_text().splitlines()[1:]
    )
    assert float(mist["1"]) == pytest.approx(0.60, abs=0.02)
    assert (out / "rate_matrix.csv").exists()
    assert (out / "transition.csv").exists()
    assert (out / "invariant.json").exists()


def test_solve_undirected_matches_reference(tmp_path):
    out = tmp_path / "solve2"
    assert run(["solve", "--config", "restaurant-undirected", "--out", out]) == 0
    mist = dict(
        line.split(",") for line in (out / "mistakes.csv").read_text().splitlines()[1:]
    )
    assert float(mist["1"]) == pytest.approx(0.33, abs=0.02)


def test_solve_reducible_exits_4(tmp_path):
    # attention pinned to an absorbing corner is caught by the balance solver
    net = Network.undirected(2, [(0, 1)])
    table = np.zeros((2, 1, 2))
    table[:, 0, :] = [[1.0, 1.0], [1.0, 1.0]]
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1,), (1,)]),
        rates=np.ones(2),
        attention=AttentionRule(table.copy() for _ in range(2)),
    )
    cfg = tmp_path / "reducible.json"
    write_model(model, cfg)
    assert run(["solve", "--config", cfg, "--out", tmp_path / "out"]) == 4


def test_identify_from_builtin_model(tmp_path):
    out = tmp_path / "id"
    code = run(["identify", "--config", "restaurant-directed", "--out", out])
    assert code == 0
    report = json.loads((out / "identify.json").read_text())
    assert report["edges"] == [[0, 1], [1, 0], [2, 0], [2, 1], [3, 4], [4, 3]]
    assert report["preferences"] == [[2, 1], [1, 2], [2, 1], [1, 2], [1, 2]]
    q = report["attention"]["2"]["1"]["o"]
    assert float(q["0"]) == pytest.approx(0.25, abs=1e-9)
    assert float(q["2"]) == pytest.approx(0.875, abs=1e-9)


def test_identify_from_ccp_data(tmp_path):
    rng = np.random.default_rng(90)
    model = random_no_default_model(rng, 3, 3)
    table = ccp_table(model)
    data = tmp_path / "ccps.json"
    data.write_text(json.dumps(ccp_table_to_json(table)))
    out = tmp_path / "id2"
    code = run(["identify", "--data", data, "--out", out])
    assert code == 0
    report = json.loads((out / "identify.json").read_text())
    assert report["variant"] == "no_default"
    assert "sign_probes" in report
    assert report["preferences"] == [list(o) for o in model.preferences.orders]


def test_identify_rank_deficient_exits_5(tmp_path):
    rng = np.random.default_rng(91)
    net = Network(3, [(0, 1), (1, 0), (2, 0)])
    model = random_random_pref_model(rng, 3, 3, network=net)
    data = tmp_path / "ccps.json"
    data.write_text(json.dumps(ccp_table_to_json(ccp_table(model))))
    assert run(["identify", "--data", data, "--out", tmp_path / "o"]) == 5


def test_identify_assumption_violation_exits_5(tmp_path):
    net = Network.undirected(2, [(0, 1)])
    model = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(1,), (1,)]),
        rates=np.ones(2),
        attention=AttentionRule.shared_levels(net, 1, [0.4, 0.4]),
    )
    cfg = tmp_path / "flat.json"
    write_model(model, cfg)
    assert run(["identify", "--config", cfg, "--out", tmp_path / "o"]) == 5


def test_estimate_small_panel(tmp_path):
    from peersets.estimate import (
        NetworkConstraints,
        ParamSpace,
        enumerate_networks,
        enumerate_preferences,
    )
    from peersets.serialize import panel_to_csv
    from peersets.simulate import discretize, simulate_trajectory

    nets = enumerate_networks(3, NetworkConstraints(undirected=True))
    net = next(n for n in nets if len(n.edges) == 6)
    truth = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(2, 1), (1, 2), (2, 1)]),
        rates=np.ones(3),
        attention=AttentionRule.shared_levels(net, 2, [0.2, 0.7, 0.9]),
    )
    panel = discretize(simulate_trajectory(truth, horizon=3000.0, seed=11), 10.0)
    data = tmp_path / "panel.csv"
    data.write_text(panel_to_csv(panel))
    out = tmp_path / "est"
    code = run(["estimate", "--data", data, "--out", out, "--screen", "off"])
    assert code == 0
    result = json.loads((out / "estimate.json").read_text())
    assert result["edges"] == [[0, 1], [0, 2], [1, 0], [1, 2], [2, 0], [2, 1]]
    assert result["preferences"] == [[2, 1], [1, 2], [2, 1]]
    assert result["delta"] == 10.0


def test_mc_bias_smoke(tmp_path, capsys):
    out = tmp_path / "mc"
    code = run(
        ["mc", "--design", "bias", "--sizes", "500", "--replications", 3, "--seed", 5, "--out", out]
    )
    assert code == 0
    assert (out / "bias_rmse.csv").exists()
    sidecar = json.loads((out / "bias_rmse.json").read_text())
    assert sidecar["replications"] == 3
    assert len(sidecar["estimates"][0]) == 3
    text = capsys.readouterr().out
    assert "reference" in text


def test_tables_fast_smoke(tmp_path, capsys):
    out = tmp_path / "tables"
    code = run(["tables", "--fast", "--seed", 2, "--out", out])
    assert code == 0
    for name in ("table1", "table2", "table3", "table4", "table5", "table6"):
        assert (out / f"{name}.csv").exists()
    table2 = (out / "table2.csv").read_text().splitlines()
    person1 = table2[1].split(",")
    assert float(person1[1]) == pytest.approx(0.59, abs=0.02)
    text = capsys.readouterr().out
    assert "table6" in text


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        run(["frobnicate"])
