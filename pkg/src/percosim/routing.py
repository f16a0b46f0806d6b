"""Route discovery: probe fan-out, bounded self-avoiding walks, path selection, ACK reinforcement.

The source launches one probe per close-neighbor. Each relay appends itself to
the probe and forwards it to its best-measure neighbor, excluding every node
the walk already touched, so walks are self-avoiding and die on closed loops
or at the hop ceiling. The destination collects surviving walks for a fixed
window, keeps up to `max_paths` interior-disjoint paths, and the acknowledgement
reinforces the measures of every node along each kept path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    NoNeighborsError,
    NoPathError,
    NotFoundError,
    ParameterError,
    ProtocolError,
)
from .routing_table import RoutingTable, best_neighbor, bump_measures
from .topology import Graph, NodeId


class SelectionRule(Enum):
    LEAST_HOPS = "least_hops"
    MAX_THROUGHPUT = "max_throughput"


@dataclass(frozen=True)
class RoutingParams:
    """Discovery knobs: walk ceiling, route width, collection window, ranking rule."""

    max_hops: int = 6
    max_paths: int = 5
    probe_window: int | None = None  # ticks; defaults to max_hops * latency + 1
    rule: SelectionRule = SelectionRule.LEAST_HOPS

    def __post_init__(self) -> None:
        if self.max_hops < 1:
            raise ParameterError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.max_paths < 1:
            raise ParameterError(f"max_paths must be >= 1, got {self.max_paths}")
        if self.probe_window is not None and self.probe_window < 1:
            raise ParameterError("probe_window must be >= 1 when given")


@dataclass(frozen=True)
class ProbePacket:
    """Walk state in flight: source, destination, hop counter, relay trail.

    `visited` holds relays only (not source, not destination) and has room for
    `max_hops` entries; `hop_counter` always equals len(visited).
    """

    probe_id: int
    source: NodeId
    dest: NodeId
    hop_counter: int = 0
    visited: tuple[NodeId, ...] = ()

    def advanced(self, relay: NodeId) -> "ProbePacket":
        return replace(self, hop_counter=self.hop_counter + 1, visited=self.visited + (relay,))

    def check(self) -> None:
        if self.hop_counter != len(self.visited):
            raise ProtocolError("probe hop counter disagrees with its relay trail")
        if len(set(self.visited)) != len(self.visited):
            raise ProtocolError("probe relay trail repeats a node")


@dataclass(frozen=True)
class Path:
    """Simple node sequence from source to destination with its bottleneck bandwidth."""

    nodes: tuple[NodeId, ...]
    bottleneck: int

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def source(self) -> NodeId:
        return self.nodes[0]

    @property
    def dest(self) -> NodeId:
        return self.nodes[-1]

    @property
    def interior(self) -> tuple[NodeId, ...]:
        return self.nodes[1:-1]

    @classmethod
    def trace(cls, g: Graph, nodes) -> "Path":
        """Validate the sequence against the graph and compute its bottleneck."""
        seq = tuple(nodes)
        if len(seq) < 2:
            raise ParameterError("a path needs at least two nodes")
        if len(set(seq)) != len(seq):
            raise ParameterError(f"path repeats a node: {seq}")
        bottleneck = None
        for u, v in zip(seq, seq[1:]):
            if not (g.has_node(u) and g.has_node(v) and g.has_edge(u, v)):
                raise ParameterError(f"path edge {u}-{v} is missing")
            e = g.edge(u, v)
            if not e.up:
                raise ParameterError(f"path edge {u}-{v} is down")
            bottleneck = e.bandwidth if bottleneck is None else min(bottleneck, e.bandwidth)
        return cls(nodes=seq, bottleneck=bottleneck)

    def alive(self, g: Graph) -> bool:
        """True while every edge of the path exists and is up."""
        return all(
            g.has_node(u) and g.has_node(v) and g.has_edge(u, v) and g.edge(u, v).up
            for u, v in zip(self.nodes, self.nodes[1:])
        )

    def to_json(self) -> dict:
        return {"nodes": list(self.nodes), "hops": self.hops, "bottleneck": self.bottleneck}


@dataclass(frozen=True)
class Route:
    """Up to `max_paths` interior-disjoint paths sharing source and destination."""

    paths: tuple[Path, ...]
    rule_used: SelectionRule

    @property
    def source(self) -> NodeId:
        return self.paths[0].source

    @property
    def dest(self) -> NodeId:
        return self.paths[0].dest

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "dest": self.dest,
            "rule": self.rule_used.value,
            "paths": [p.to_json() for p in self.paths],
        }


class DropReason(Enum):
    HOP_LIMIT = "hop_limit"
    CLOSED_LOOP = "closed_loop"


class DecisionKind(Enum):
    DELIVER = "deliver"
    FORWARD = "forward"
    DROP = "drop"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    next_node: NodeId | None = None
    probe: ProbePacket | None = None
    reason: DropReason | None = None

    @classmethod
    def deliver(cls) -> "Decision":
        return cls(DecisionKind.DELIVER)

    @classmethod
    def forward(cls, next_node: NodeId, probe: ProbePacket) -> "Decision":
        return cls(DecisionKind.FORWARD, next_node=next_node, probe=probe)

    @classmethod
    def drop(cls, reason: DropReason) -> "Decision":
        return cls(DecisionKind.DROP, reason=reason)


def launch_probes(
    source: NodeId,
    dest: NodeId,
    table: RoutingTable,
    params: RoutingParams,
    first_id: int = 0,
) -> list[tuple[NodeId, ProbePacket]]:
    """One fresh probe per close-neighbor of the source, as (target, probe) pairs."""
    if source == dest:
        raise ParameterError("source and destination are the same node")
    if table.owner != source:
        raise ProtocolError(f"table owner {table.owner} is not the source {source}")
    if not table.neighbors:
        raise NoNeighborsError(f"node {source} has no close-neighbors")
    return [
        (nb, ProbePacket(probe_id=first_id + i, source=source, dest=dest))
        for i, nb in enumerate(table.neighbors)
    ]


def step_probe(
    probe: ProbePacket,
    at: NodeId,
    table: RoutingTable,
    params: RoutingParams,
    rng: random.Random,
) -> Decision:
    """Process one probe arrival at `at`: deliver, forward, or drop.

    Forwarding excludes every node the walk already holds plus the current
    node and the source, so a walk can never close on itself.
    """
    probe.check()
    if at in probe.visited:
        raise ProtocolError(f"probe revisited node {at}")
    if table.owner != at:
        raise ProtocolError(f"table owner {table.owner} is not the current node {at}")
    if at == probe.dest:
        return Decision.deliver()
    if probe.hop_counter >= params.max_hops:
        return Decision.drop(DropReason.HOP_LIMIT)
    exclude = set(probe.visited) | {at, probe.source}
    nxt = best_neighbor(table, probe.dest, exclude, rng)
    if nxt is None:
        return Decision.drop(DropReason.CLOSED_LOOP)
    return Decision.forward(nxt, probe.advanced(at))


def select_paths(candidates, params: RoutingParams) -> Route:
    """Rank deduplicated candidates by the configured rule and greedily keep
    paths whose interiors are disjoint from everything already kept.

    Both rules are total orders (final tie-break on the node sequence), so the
    selection is reproducible.
    """
    paths = list(candidates)
    if not paths:
        raise NoPathError("no candidate paths to select from")
    src, dst = paths[0].source, paths[0].dest
    for p in paths:
        if p.source != src or p.dest != dst:
            raise ParameterError("candidate paths mix endpoints")
    unique = {p.nodes: p for p in paths}
    if params.rule is SelectionRule.LEAST_HOPS:
        def key(p: Path):
            return (p.hops, -p.bottleneck, p.nodes)
    else:
        def key(p: Path):
            return (-p.bottleneck, p.hops, p.nodes)
    chosen: list[Path] = []
    used_interior: set[NodeId] = set()
    for p in sorted(unique.values(), key=key):
        interior = set(p.interior)
        if interior & used_interior:
            continue
        chosen.append(p)
        used_interior |= interior
        if len(chosen) == params.max_paths:
            break
    return Route(paths=tuple(chosen), rule_used=params.rule)


@dataclass(frozen=True)
class AckReport:
    """Which paths fed their acknowledgement back, and which could not."""

    acked: tuple[Path, ...]
    failed: tuple[Path, ...]


def propagate_ack(route: Route, tables: dict[NodeId, RoutingTable], g: Graph) -> AckReport:
    """Walk each selected path back and reinforce every on-path table.

    At each node before the destination, the measure toward every downstream
    node via the path successor gains one unit. Paths with a downed edge
    cannot carry feedback and are reported instead of applied.
    """
    acked, failed = [], []
    for path in route.paths:
        if not path.alive(g) or any(v not in tables for v in path.nodes):
            failed.append(path)
            continue
        for i, v in enumerate(path.nodes[:-1]):
            bump_measures(tables[v], path.nodes[i + 1], path.nodes[i + 1:], path.bottleneck)
        acked.append(path)
    return AckReport(acked=tuple(acked), failed=tuple(failed))


def run_routing_phase(sim, source: NodeId, dest: NodeId, params: RoutingParams | None = None) -> Route:
    """Full discovery phase on a simulation: fan out probes, walk them through
    the event loop for the probe window, select paths at the destination, and
    propagate the acknowledgement. Deterministic per (graph, tables, seed).
    """
    if params is None:
        params = RoutingParams()
    g = sim.graph
    for v in (source, dest):
        if not g.has_node(v):
            raise NotFoundError(f"node {v} does not exist")
    latency = sim.link.latency
    window = params.probe_window
    if window is None:
        window = params.max_hops * latency + 1
    elif window < params.max_hops * latency:
        raise ParameterError(
            f"probe_window {window} is shorter than the worst-case walk "
            f"({params.max_hops} hops x latency {latency})"
        )
    phase = sim.fresh_id("routing_phase")
    delivered: list[tuple[NodeId, ...]] = []

    def on_probe(probe: ProbePacket, at: NodeId):
        def handler() -> None:
            if at not in sim.tables:
                return  # node churned away while the probe was in flight
            decision = step_probe(probe, at, sim.tables[at], params, sim.rng)
            if decision.kind is DecisionKind.DELIVER:
                delivered.append((source, *probe.visited, dest))
            elif decision.kind is DecisionKind.FORWARD:
                advanced = decision.probe
                sim.send_hop(
                    at,
                    decision.next_node,
                    key=f"probe:{phase}:{probe.probe_id}:{advanced.hop_counter}",
                    action=on_probe(advanced, decision.next_node),
                )
        return handler

    for target, probe in launch_probes(source, dest, sim.tables[source], params):
        sim.send_hop(source, target, key=f"probe:{phase}:{probe.probe_id}:0",
                     action=on_probe(probe, target))
    sim.run_until(sim.clock + window)

    candidates = []
    for nodes in delivered:
        if len(nodes) - 1 > params.max_hops:
            continue  # walk outlived the ceiling; not a usable path
        try:
            candidates.append(Path.trace(g, nodes))
        except ParameterError:
            continue  # an edge churned away during the window
    if not candidates:
        raise NoPathError(
            f"no path from {source} to {dest} within {params.max_hops} hops"
        )
    route = select_paths(candidates, params)
    propagate_ack(route, sim.tables, g)
    return route
