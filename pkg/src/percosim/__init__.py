"""Deterministic simulator for probe-reinforced multipath routing with
fountain-coded transport on small-world machine networks."""

from .errors import (
    ConfigError,
    ConstraintViolationError,
    DuplicateError,
    FormatError,
    InsufficientPacketsError,
    NoCapacityError,
    NoNeighborsError,
    NoPathError,
    NotFoundError,
    ParameterError,
    PercosimError,
    ProtocolError,
    RoutingError,
    StateError,
    StorageError,
    TransportError,
)
from .fountain import (
    CodedPacket,
    DecoderState,
    RobustSolitonParams,
    SourceBlock,
    Status,
    decode_block,
    decoder_push,
    deorganize,
    encode_packet,
    encode_packet_by_streams,
    pack_packet,
    packet_neighbors,
    reorganize,
    robust_soliton,
    unpack_packet,
    unpack_stream,
)
from .routing import (
    AckReport,
    Decision,
    DecisionKind,
    DropReason,
    Path,
    ProbePacket,
    Route,
    RoutingParams,
    SelectionRule,
    launch_probes,
    propagate_ack,
    run_routing_phase,
    select_paths,
    step_probe,
)
from .routing_table import RoutingTable, best_neighbor, bump_measures, init_table
from .scenarios import (
    CodeParams,
    Metrics,
    SimConfig,
    StorageConfig,
    TrafficConfig,
    aggregate,
    build_graph,
    build_relay_graph,
    fixture_path,
    load_config,
    parse_config,
    run_scenario,
)
from .sim import Event, EventKind, JamWindow, LinkModel, Simulation
from .storage import StoragePlan, disperse, recover
from .topology import (
    ChurnEvent,
    ChurnKind,
    Edge,
    Graph,
    NodeId,
    TopologyParams,
    apply_churn,
    bfs_hops,
    generate_small_world,
    is_star_node,
    load_graph,
    parse_edge_list,
    read_edge_list,
)
from .transport import (
    LoadAssignment,
    TransferMode,
    TransmissionResult,
    assign_loads,
    next_frame,
    transmit_file,
)

__version__ = "0.1.0"
