"""Round-accurate clique-network simulator with connectivity and MST
pipelines, checked against sequential oracles."""

from .ccmst import ClusterPartition, cc_mst
from .connectivity import (
    LevelGraph,
    PhaseOutput,
    build_component_graph,
    conn,
    handle_small_cuts,
    reduce_components,
    remove_large_cuts,
)
from .graphs import (
    INFINITY,
    ComponentGraph,
    ComponentLabeling,
    EdgeClass,
    Forest,
    GraphView,
    WeightedEdge,
    build_component_graph_reference,
    connected_components,
    enumerate_cuts,
    f_light_classify,
    k_projection,
    kruskal_mst,
    make_edge,
    max_cut_bruteforce,
    read_graph,
    rounded_degree,
    spanning_forest_local,
    write_graph,
)
from .mst import (
    LabelVector,
    PartitionAssignment,
    assign_guardians_and_supporters,
    exact_mst,
    route_labels,
    sq_mst,
)
from .net import (
    CliqueSimulator,
    Message,
    NodeContext,
    ProtocolViolation,
    RoundMetrics,
    SimConfig,
    derived_rng,
)
from .sampling import (
    CutCoverageReport,
    SampleOutcome,
    charge_edge,
    edge_probability,
    intercomponent_edge_count,
    kkt_sample,
    sample_edges_distributed,
    verify_large_cut_coverage,
)

__version__ = "0.1.0"
