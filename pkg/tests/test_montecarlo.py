import numpy as np
import pytest

from peersets.estimate import (
    MleOptions,
    NetworkConstraints,
    ParamSpace,
    enumerate_networks,
    enumerate_preferences,
)
from peersets.model import AttentionRule, ModelSpec, PreferenceProfile, Variant
from peersets.montecarlo import (
    McDesign,
    monte_carlo_bias_rmse,
    monte_carlo_recovery,
    restaurant_design,
    write_bias_rmse_report,
    write_recovery_report,
)


def tiny_design() -> McDesign:
    nets = enumerate_networks(3, NetworkConstraints(undirected=True))
    prefs = enumerate_preferences(3, 2)
    space = ParamSpace(tuple(nets), tuple(prefs), 2)
    net = next(n for n in nets if len(n.edges) == 4)
    truth = ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=net,
        preferences=PreferenceProfile([(2, 1), (1, 2), (2, 1)]),
        rates=np.ones(3),
        attention=AttentionRule.shared_levels(net, 2, [0.2, 0.7, 0.9]),
    )
    return McDesign(
        truth=truth, space=space, truth_levels=np.array([0.2, 0.7, 0.9]), time_span=6000.0
    )


def test_recovery_small_design():
    design = tiny_design()
    report = monte_carlo_recovery(design, [300], replications=3, seed=3)
    assert report.network_rate[0] == 1.0
    assert report.preference_rate[0] == 1.0
    assert report.both_rate[0] == 1.0
    assert len(report.detail[0]) == 3
    assert all(d["fully_optimized"] >= 1 for d in report.detail[0])


def test_recovery_deterministic_given_seed():
    design = tiny_design()
    a = monte_carlo_recovery(design, [100], replications=2, seed=5)
    b = monte_carlo_recovery(design, [100], replications=2, seed=5)
    assert a.detail == b.detail


def test_recovery_independent_of_worker_count():
    design = tiny_design()
    serial = monte_carlo_recovery(design, [100], replications=2, seed=6, jobs=1)
    parallel = monte_carlo_recovery(design, [100], replications=2, seed=6, jobs=2)
    assert serial.detail == parallel.detail


def test_bias_small_design():
    design = tiny_design()
    report = monte_carlo_bias_rmse(design, [600], replications=4, seed=9)
    assert report.estimates.shape == (1, 4, 3)
    assert np.all(np.abs(report.bias) < 0.2)
    assert np.all(report.rmse < 0.25)


def test_report_files(tmp_path):
    design = tiny_design()
    bias = monte_carlo_bias_rmse(design, [300], replications=2, seed=4)
    write_bias_rmse_report(bias, tmp_path)
    lines = (tmp_path / "bias_rmse.csv").read_text().splitlines()
    assert lines[0] == "quantity,statistic,300"
    assert len(lines) == 7  # header + 3 levels x {bias, rmse}
    recovery = monte_carlo_recovery(design, [300], replications=2, seed=4)
    write_recovery_report(recovery, tmp_path)
    lines = (tmp_path / "recovery.csv").read_text().splitlines()
    assert lines[0] == "quantity,300"
    assert lines[1].startswith("network,")
    assert (tmp_path / "recovery.json").exists()
