"""Built-in model configurations used by the CLI and the test benches.

``two_person_binary`` is the symmetric two-person, one-option model with
attention driven only by the other person's choice; its equilibrium has the
closed form implemented in :func:`two_person_binary_equilibrium`.

``restaurant_directed``/``restaurant_undirected`` are the five-person,
two-restaurant setups: persons 0 and 2 prefer restaurant 2, the others prefer
restaurant 1, attention is shared with levels (1/4, 3/4, 7/8) in the number
of friends at the option, and all revision rates are one.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .model import AttentionRule, ModelSpec, Network, PreferenceProfile, Variant

RESTAURANT_Q_LEVELS = (0.25, 0.75, 0.875)

# long-run per-person choice shares and mistake rates reported from simulated
# samples of size 15000; used for side-by-side report output
REFERENCE_MARGINALS_DIRECTED = {
    "o": (0.29, 0.29, 0.19, 0.30, 0.30),
    "1": (0.30, 0.40, 0.30, 0.50, 0.50),
    "2": (0.41, 0.31, 0.51, 0.20, 0.20),
}
REFERENCE_MISTAKES_DIRECTED = (0.59, 0.60, 0.49, 0.50, 0.50)
REFERENCE_MARGINALS_UNDIRECTED = {
    "o": (0.12, 0.12, 0.12, 0.30, 0.30),
    "1": (0.21, 0.42, 0.22, 0.50, 0.50),
    "2": (0.67, 0.46, 0.66, 0.20, 0.20),
}
REFERENCE_MISTAKES_UNDIRECTED = (0.33, 0.58, 0.34, 0.50, 0.50)

REFERENCE_BIAS_RMSE = {
    # sample size -> (bias, rmse) per attention level, in units of 1e-3
    10: ((213.6, 259.1), (66.4, 103.9), (53.8, 94.3)),
    50: ((164.9, 172.9), (53.0, 66.9), (49.8, 64.6)),
    100: ((133.2, 137.4), (46.9, 55.6), (42.9, 52.8)),
    500: ((65.1, 66.6), (27.2, 31.0), (23.6, 27.2)),
    1000: ((42.3, 43.3), (18.0, 20.9), (15.1, 17.8)),
    5000: ((9.4, 10.2), (2.7, 5.6), (0.3, 4.4)),
}
REFERENCE_RECOVERY = {
    # sample size -> (network %, preferences %, both %)
    10: (32.4, 34.6, 13.4),
    50: (94.4, 85.6, 83.0),
    100: (99.8, 97.6, 97.4),
    500: (100.0, 100.0, 100.0),
}
PANEL_TIME_SPAN = 25000.0  # sample size T pairs with delta = PANEL_TIME_SPAN / T


def two_person_binary(q0: float, q1: float, rate: float = 1.0) -> ModelSpec:
    """Two connected people, one real option; attention q0/q1 in the peer count."""
    network = Network.undirected(2, [(0, 1)])
    preferences = PreferenceProfile([(1,), (1,)])
    attention = AttentionRule.shared_levels(network, 1, [q0, q1])
    return ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=network,
        preferences=preferences,
        rates=np.full(2, rate),
        attention=attention,
    )


def two_person_binary_equilibrium(q0: float, q1: float) -> NDArray[np.float64]:
    """Closed-form equilibrium over ((o,o), (o,1), (1,o), (1,1))."""
    denom = 1.0 - q1 + q0
    return np.array(
        [
            (1.0 - q0) * (1.0 - q1) / denom,
            q0 * (1.0 - q1) / denom,
            q0 * (1.0 - q1) / denom,
            q0 * q1 / denom,
        ]
    )


def restaurant_network_directed() -> Network:
    return Network(5, [(0, 1), (1, 0), (2, 0), (2, 1), (3, 4), (4, 3)])


def restaurant_network_undirected() -> Network:
    return Network.undirected(5, [(0, 1), (0, 2), (1, 2), (3, 4)])


def restaurant_preferences() -> PreferenceProfile:
    return PreferenceProfile([(2, 1), (1, 2), (2, 1), (1, 2), (1, 2)])


def restaurant_model(
    undirected: bool = False, levels: tuple[float, ...] = RESTAURANT_Q_LEVELS
) -> ModelSpec:
    network = restaurant_network_undirected() if undirected else restaurant_network_directed()
    preferences = restaurant_preferences()
    attention = AttentionRule.shared_levels(network, 2, levels)
    return ModelSpec(
        variant=Variant.BASELINE_DEFAULT,
        network=network,
        preferences=preferences,
        rates=np.ones(5),
        attention=attention,
    )
