"""Machine-network graph: small-world generation, edge-list fixtures, churn, node classes.

Nodes are bare integers (name and address merged). Links are undirected with a
symmetric integer bandwidth in packets per tick and an up/down state, so churn
can take a link down without forgetting its capacity.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import (
    DuplicateError,
    FormatError,
    NotFoundError,
    ParameterError,
)

NodeId = int


def _norm(u: NodeId, v: NodeId) -> tuple[NodeId, NodeId]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Edge:
    """Undirected link; endpoints are stored normalized (u <= v)."""

    u: NodeId
    v: NodeId
    bandwidth: int
    up: bool = True


class Graph:
    """Mutable undirected graph, owned by at most one simulation at a time."""

    def __init__(self) -> None:
        self._adj: dict[NodeId, set[NodeId]] = {}
        self._edges: dict[tuple[NodeId, NodeId], Edge] = {}

    # ---- nodes

    @property
    def nodes(self) -> set[NodeId]:
        return set(self._adj)

    def node_count(self) -> int:
        return len(self._adj)

    def has_node(self, v: NodeId) -> bool:
        return v in self._adj

    def add_node(self, v: NodeId) -> None:
        if v in self._adj:
            raise DuplicateError(f"node {v} already exists")
        if v < 0:
            raise ParameterError(f"node ids are non-negative, got {v}")
        self._adj[v] = set()

    def remove_node(self, v: NodeId) -> None:
        if v not in self._adj:
            raise NotFoundError(f"node {v} does not exist")
        for w in list(self._adj[v]):
            del self._edges[_norm(v, w)]
            self._adj[w].discard(v)
        del self._adj[v]

    # ---- edges

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return _norm(u, v) in self._edges

    def edge(self, u: NodeId, v: NodeId) -> Edge:
        try:
            return self._edges[_norm(u, v)]
        except KeyError:
            raise NotFoundError(f"edge {u}-{v} does not exist") from None

    def add_edge(self, u: NodeId, v: NodeId, bandwidth: int = 1, up: bool = True) -> None:
        if u == v:
            raise ParameterError(f"self-loop on node {u}")
        if bandwidth < 1:
            raise ParameterError(f"bandwidth must be a positive packet rate, got {bandwidth}")
        for w in (u, v):
            if w not in self._adj:
                raise NotFoundError(f"node {w} does not exist")
        key = _norm(u, v)
        if key in self._edges:
            raise DuplicateError(f"edge {u}-{v} already exists")
        self._edges[key] = Edge(key[0], key[1], bandwidth, up)
        self._adj[u].add(v)
        self._adj[v].add(u)

    def remove_edge(self, u: NodeId, v: NodeId) -> None:
        key = _norm(u, v)
        if key not in self._edges:
            raise NotFoundError(f"edge {u}-{v} does not exist")
        del self._edges[key]
        self._adj[u].discard(v)
        self._adj[v].discard(u)

    def set_link_state(self, u: NodeId, v: NodeId, up: bool) -> None:
        key = _norm(u, v)
        e = self.edge(u, v)
        self._edges[key] = Edge(e.u, e.v, e.bandwidth, up)

    def set_bandwidth(self, u: NodeId, v: NodeId, bandwidth: int) -> None:
        if bandwidth < 1:
            raise ParameterError(f"bandwidth must be a positive packet rate, got {bandwidth}")
        key = _norm(u, v)
        e = self.edge(u, v)
        self._edges[key] = Edge(e.u, e.v, bandwidth, e.up)

    def edges(self) -> list[Edge]:
        return [self._edges[k] for k in sorted(self._edges)]

    def edge_count(self) -> int:
        return len(self._edges)

    # ---- adjacency (up links only: a downed link is not a usable connection)

    def neighbors(self, v: NodeId) -> list[NodeId]:
        if v not in self._adj:
            raise NotFoundError(f"node {v} does not exist")
        return sorted(w for w in self._adj[v] if self._edges[_norm(v, w)].up)

    def degree(self, v: NodeId) -> int:
        if v not in self._adj:
            raise NotFoundError(f"node {v} does not exist")
        return sum(1 for w in self._adj[v] if self._edges[_norm(v, w)].up)

    def copy(self) -> "Graph":
        g = Graph()
        g._adj = {v: set(ws) for v, ws in self._adj.items()}
        g._edges = dict(self._edges)
        return g


@dataclass(frozen=True)
class TopologyParams:
    """Generator knobs: ring-lattice degree `k` with shortcut probability `p`."""

    n: int
    k: int
    p: float
    default_bandwidth: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if self.k < 0 or self.k % 2 != 0:
            raise ParameterError(f"k must be even and non-negative, got {self.k}")
        if self.k >= self.n:
            raise ParameterError(f"k must be smaller than n, got k={self.k} n={self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if self.default_bandwidth < 1:
            raise ParameterError("default_bandwidth must be >= 1")


def generate_small_world(params: TopologyParams) -> Graph:
    """Build a ring lattice with `k` neighbors per node, then rewire each lattice
    edge to a uniformly random non-neighbor with probability `p`.

    Pure function of `params`: identical seeds yield identical graphs. Every
    edge starts up with `default_bandwidth`.
    """
    rng = random.Random(params.seed)
    g = Graph()
    for i in range(params.n):
        g.add_node(i)
    half = params.k // 2
    for off in range(1, half + 1):
        for i in range(params.n):
            g.add_edge(i, (i + off) % params.n, params.default_bandwidth)
    for off in range(1, half + 1):
        for i in range(params.n):
            j = (i + off) % params.n
            if rng.random() >= params.p:
                continue
            if not g.has_edge(i, j):
                continue  # already rewired away
            candidates = [w for w in range(params.n) if w != i and not g.has_edge(i, w)]
            if not candidates:
                continue
            w = rng.choice(candidates)
            g.remove_edge(i, j)
            g.add_edge(i, w, params.default_bandwidth)
    return g


def load_graph(edge_list) -> Graph:
    """Build a graph from (u, v, bandwidth) triples; order-independent.

    Self-loops and repeated pairs (in either orientation) are format errors.
    """
    g = Graph()
    for u, v, bandwidth in edge_list:
        if u == v:
            raise FormatError(f"self-loop on node {u}")
        for w in (u, v):
            if not g.has_node(w):
                g.add_node(w)
        if g.has_edge(u, v):
            raise FormatError(f"duplicate edge {u}-{v}")
        g.add_edge(u, v, bandwidth)
    return g


def parse_edge_list(text: str) -> list[tuple[NodeId, NodeId, int]]:
    """Parse `u v bandwidth` triples, one per line; `#` starts a comment."""
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise FormatError(f"line {lineno}: expected 'u v bandwidth', got {raw!r}")
        try:
            u, v, bw = (int(f) for f in fields)
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer field in {raw!r}") from None
        triples.append((u, v, bw))
    return triples


def read_edge_list(path) -> Graph:
    return load_graph(parse_edge_list(Path(path).read_text()))


class ChurnKind(Enum):
    JOIN = "join"
    LEAVE = "leave"
    LINK_UP = "link_up"
    LINK_DOWN = "link_down"
    SET_BANDWIDTH = "set_bandwidth"


@dataclass(frozen=True)
class ChurnEvent:
    """One membership or link change; build via the class methods."""

    kind: ChurnKind
    node: NodeId | None = None
    u: NodeId | None = None
    v: NodeId | None = None
    bandwidth: int | None = None
    links: tuple[tuple[NodeId, int], ...] = ()

    @classmethod
    def join(cls, node: NodeId, links: tuple[tuple[NodeId, int], ...] = ()) -> "ChurnEvent":
        return cls(ChurnKind.JOIN, node=node, links=tuple(links))

    @classmethod
    def leave(cls, node: NodeId) -> "ChurnEvent":
        return cls(ChurnKind.LEAVE, node=node)

    @classmethod
    def link_up(cls, u: NodeId, v: NodeId) -> "ChurnEvent":
        return cls(ChurnKind.LINK_UP, u=u, v=v)

    @classmethod
    def link_down(cls, u: NodeId, v: NodeId) -> "ChurnEvent":
        return cls(ChurnKind.LINK_DOWN, u=u, v=v)

    @classmethod
    def set_bandwidth(cls, u: NodeId, v: NodeId, bandwidth: int) -> "ChurnEvent":
        return cls(ChurnKind.SET_BANDWIDTH, u=u, v=v, bandwidth=bandwidth)


def apply_churn(g: Graph, event: ChurnEvent) -> Graph:
    """Apply one churn event in place and return the graph.

    Leaving removes the node with all incident edges; link events flip state
    without forgetting capacity, so down-then-up restores the original graph.
    """
    if event.kind is ChurnKind.JOIN:
        g.add_node(event.node)
        for peer, bandwidth in event.links:
            g.add_edge(event.node, peer, bandwidth)
    elif event.kind is ChurnKind.LEAVE:
        g.remove_node(event.node)
    elif event.kind is ChurnKind.LINK_UP:
        g.set_link_state(event.u, event.v, True)
    elif event.kind is ChurnKind.LINK_DOWN:
        g.set_link_state(event.u, event.v, False)
    elif event.kind is ChurnKind.SET_BANDWIDTH:
        g.set_bandwidth(event.u, event.v, event.bandwidth)
    else:  # pragma: no cover
        raise ParameterError(f"unknown churn kind {event.kind}")
    return g


def is_star_node(g: Graph, v: NodeId) -> bool:
    """True iff v's connection count strictly exceeds the network-wide average."""
    deg = g.degree(v)
    total = sum(g.degree(w) for w in g.nodes)
    # strict comparison, kept in integers: deg > total / n
    return deg * g.node_count() > total


def bfs_hops(g: Graph, source: NodeId, max_hops: int | None = None) -> dict[NodeId, int]:
    """Hop distance from `source` to every reachable node over up links."""
    if not g.has_node(source):
        raise NotFoundError(f"node {source} does not exist")
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if max_hops is not None and dist[u] >= max_hops:
            continue
        for w in g.neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist
