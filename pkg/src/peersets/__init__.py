"""Dynamic discrete choice with peer effects in random consideration sets.

Equilibrium computation for the continuous-time revision process, trajectory
simulation, constructive identification of the network / preferences /
attention mechanism from conditional choice probabilities, and maximum
likelihood estimation from discrete-time panels.
"""

from .ccp import (
    CcpTable,
    ccp_attention_index,
    ccp_baseline,
    ccp_brock_durlauf,
    ccp_no_default,
    ccp_random_pref,
    ccp_table,
    ccp_vector,
)
from .ctmc import (
    GibbsReport,
    InvariantDistribution,
    MatrixLogError,
    RateMatrix,
    RecoveryDiagnostics,
    ReducibleChainError,
    InconsistentRatesError,
    TransitionMatrix,
    build_rate_matrix,
    check_gibbs_compatibility,
    consideration_miss_probability,
    invariant_distribution,
    marginals,
    mistake_probability,
    rates_and_ccps_from_M,
    recover_rate_matrix,
    transition_matrix,
    verify_balance,
)
from .model import (
    AssumptionReport,
    AttentionIndexRule,
    AttentionRule,
    BrockDurlaufTerms,
    ModelError,
    ModelSpec,
    Network,
    PreferenceProfile,
    RandomChoiceRule,
    Variant,
    count_peers,
    validate_assumptions,
)
from .simulate import (
    Event,
    Panel,
    Trajectory,
    discretize,
    empirical_invariant,
    empirical_transition_matrix,
    simulate_trajectory,
)
from .states import (
    StateSpace,
    config_from_lex_index,
    config_from_string,
    config_to_string,
    lex_index,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
