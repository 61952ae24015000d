"""Discover stochastic Petri nets from repost logs and measure coordination."""

from .analysis import (
    ChainConstructionError,
    ConvergenceError,
    MarkovChain,
    MatrixError,
    MeasureError,
    MetricsReport,
    build_markov_chain,
    density,
    diameter,
    ks_entropy,
    ks_two_sample,
    stationary_distribution,
)
from .discovery import (
    Cut,
    ProcessTree,
    discover_tree,
    filter_dfg,
    find_cut,
    format_tree,
    reduce_net,
    tree_to_net,
)
from .eventlog import (
    Dfg,
    Event,
    EventLog,
    LogSchema,
    SchemaError,
    Trace,
    build_dfg,
    parse_log,
    preprocess,
    split_by_bot_score,
    write_log,
)
from .petri import (
    FiringError,
    Marking,
    NetDefinitionError,
    PetriNet,
    ReachabilityGraph,
    StateCapError,
    enabled,
    fire,
    is_free_choice,
    net_from_json,
    net_to_json,
    reachability_graph,
    tau_free_language,
)
from .stochastic import (
    EmpiricalDelay,
    EnrichmentError,
    Firing,
    ReplayResult,
    StatsError,
    StochasticPetriNet,
    WaitingStats,
    enrich,
    enrich_from_replays,
    fspn_from_json,
    fspn_to_json,
    replay_log,
    replay_trace,
    simulate,
    waiting_time_stats,
)

__version__ = "0.1.0"
