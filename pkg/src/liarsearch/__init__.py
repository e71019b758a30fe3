"""Search for a hidden vertex under noisy and adversarial replies."""

from .graph import (
    EdgeQuery,
    Graph,
    GraphError,
    GraphSpace,
    VertexQuery,
    format_graph,
    generate_graph,
    graph_from_json,
    graph_to_json,
    parse_graph,
)
from .weights import LieState, apply_reply, find_median, heavy_vertex, potentials, total_weight
from .responders import (
    Budget,
    BudgetViolation,
    GreedyAdversary,
    IIDResponder,
    ReplayResponder,
    TruthfulResponder,
)
from .strategies import (
    FinisherExhausted,
    LemmaViolation,
    ResponderContractError,
    SearchAborted,
    SearchResult,
    run_edge_errorless,
    run_edge_fixed,
    run_edge_linear,
    run_edge_prob,
    run_prefix_bounded,
    run_pruning,
    run_vertex_fixed,
    run_vertex_linear,
    run_vertex_prob,
)
from .unbounded import (
    run_unbounded_fixed,
    run_unbounded_linear,
    run_unbounded_prefix,
    run_unbounded_prob,
)
from .oracle import minimax_oracle
from .harness import ExperimentConfig, BoundReport, run_experiment, verify_bounds

__version__ = "0.1.0"
