"""Per-node forwarding state: close-neighbor list, learned measures, bandwidth history.

A measure is a non-negative counter per (neighbor, destination) pair expressing
accumulated evidence that forwarding to that neighbor reaches that destination.
Measures start at zero, grow by one per acknowledged path, and never decay.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .errors import NotFoundError, ParameterError, ProtocolError
from .topology import Graph, NodeId


@dataclass
class RoutingTable:
    owner: NodeId
    neighbors: list[NodeId]
    direct_bandwidth: dict[NodeId, int]
    r_min: int = 1
    measures: dict[tuple[NodeId, NodeId], int] = field(default_factory=dict)
    path_bandwidth: dict[tuple[NodeId, NodeId], int] = field(default_factory=dict)

    @property
    def n_neighbors(self) -> int:
        return len(self.neighbors)

    def measure(self, neighbor: NodeId, dest: NodeId) -> int:
        """Counter toward `dest` via `neighbor`; unknown destinations read as 0."""
        return self.measures.get((neighbor, dest), 0)

    def bandwidth_via(self, neighbor: NodeId, dest: NodeId) -> int:
        """Best bandwidth seen toward `dest` via `neighbor`; floors at r_min."""
        return self.path_bandwidth.get((neighbor, dest), self.r_min)

    def refresh_neighbors(self, g: Graph) -> None:
        """Re-run the neighbor query against the graph after churn.

        New neighbors start zeroed; rows of vanished neighbors are dropped.
        """
        current = g.neighbors(self.owner)
        keep = set(current)
        self.neighbors = list(current)
        self.direct_bandwidth = {nb: g.edge(self.owner, nb).bandwidth for nb in current}
        self.measures = {key: m for key, m in self.measures.items() if key[0] in keep}
        self.path_bandwidth = {key: r for key, r in self.path_bandwidth.items() if key[0] in keep}

    def to_json(self) -> dict:
        """Debug dump for fixtures and postmortems."""
        return {
            "owner": self.owner,
            "neighbors": list(self.neighbors),
            "n_neighbors": self.n_neighbors,
            "r_min": self.r_min,
            "direct_bandwidth": {str(nb): bw for nb, bw in sorted(self.direct_bandwidth.items())},
            "measures": [[nb, dest, m] for (nb, dest), m in sorted(self.measures.items())],
            "path_bandwidth": [[nb, dest, r] for (nb, dest), r in sorted(self.path_bandwidth.items())],
        }


def init_table(owner: NodeId, g: Graph, r_min: int = 1) -> RoutingTable:
    """Fresh table for `owner`: neighbors and link bandwidths from the graph,
    every measure zero, path bandwidths defaulting lazily to `r_min`."""
    if not g.has_node(owner):
        raise NotFoundError(f"node {owner} does not exist")
    if r_min < 1:
        raise ParameterError("r_min must be >= 1")
    nbrs = g.neighbors(owner)
    return RoutingTable(
        owner=owner,
        neighbors=list(nbrs),
        direct_bandwidth={nb: g.edge(owner, nb).bandwidth for nb in nbrs},
        r_min=r_min,
    )


def best_neighbor(
    t: RoutingTable,
    dest: NodeId,
    exclude: set[NodeId],
    rng: random.Random,
) -> NodeId | None:
    """Pick the forwarding neighbor toward `dest`.

    The destination itself wins outright when it is an eligible neighbor.
    Otherwise the highest measure wins, with uniform random tie-breaking;
    at an all-zero table that makes the walk a pure probabilistic spread.
    Returns None when every neighbor is excluded.
    """
    if dest == t.owner:
        raise ParameterError("destination equals table owner")
    candidates = [nb for nb in t.neighbors if nb not in exclude and nb != t.owner]
    if not candidates:
        return None
    if dest in candidates:
        return dest
    top = max(t.measure(nb, dest) for nb in candidates)
    tied = [nb for nb in candidates if t.measure(nb, dest) == top]
    if len(tied) == 1:
        return tied[0]
    return rng.choice(tied)


def bump_measures(
    t: RoutingTable,
    next_hop: NodeId,
    downstream: Iterable[NodeId],
    bottleneck: int,
) -> None:
    """Reinforce one acknowledged path at this table.

    `downstream` holds the path nodes strictly after the owner, next hop first
    and destination last. Each gains a unit of measure via `next_hop`, and the
    bandwidth history keeps the best bottleneck seen.
    """
    if next_hop not in t.neighbors:
        raise ProtocolError(f"next hop {next_hop} is not a neighbor of {t.owner}")
    nodes = tuple(downstream)
    if not nodes or nodes[0] != next_hop:
        raise ProtocolError("downstream must start at the chosen next hop")
    for dest in nodes:
        key = (next_hop, dest)
        t.measures[key] = t.measures.get(key, 0) + 1
        t.path_bandwidth[key] = max(t.path_bandwidth.get(key, t.r_min), bottleneck)
