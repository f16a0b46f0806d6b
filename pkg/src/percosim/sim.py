"""Deterministic discrete-event engine: integer tick clock, keyed packet loss, node jamming.

One Simulation owns one graph, one table per node, and one event queue, and is
a pure function of (graph, link model, seed): identical inputs replay an
identical run. Packet loss is drawn from a stream keyed by (seed, packet
identity, hop), not from a shared sequential stream, so a packet's fate does
not depend on how unrelated events interleave.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import ParameterError, StateError
from .routing_table import RoutingTable, init_table
from .topology import ChurnEvent, ChurnKind, Graph, NodeId, apply_churn


class EventKind(Enum):
    PACKET_ARRIVAL = "packet_arrival"
    CHURN = "churn"
    JAMMING_TOGGLE = "jamming_toggle"
    TIMER = "timer"


@dataclass(frozen=True)
class JamWindow:
    """Node-level blackout: the nodes drop all incident traffic in [start, end)."""

    nodes: frozenset[NodeId]
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ParameterError(f"jam window ends ({self.end}) before it starts ({self.start})")

    def covers(self, v: NodeId, tick: int) -> bool:
        return v in self.nodes and self.start <= tick < self.end


@dataclass(frozen=True)
class LinkModel:
    """Per-hop latency in ticks, independent per-hop loss, and jam windows."""

    latency: int = 1
    loss: float = 0.0
    jam_windows: tuple[JamWindow, ...] = ()

    def __post_init__(self) -> None:
        if self.latency < 1:
            raise ParameterError(f"latency must be >= 1 tick, got {self.latency}")
        if not 0.0 <= self.loss <= 1.0:
            raise ParameterError(f"loss must lie in [0, 1], got {self.loss}")

    def jammed(self, v: NodeId, tick: int) -> bool:
        return any(w.covers(v, tick) for w in self.jam_windows)


@dataclass(order=True)
class Event:
    tick: int
    seq: int
    kind: EventKind = field(compare=False)
    node: NodeId | None = field(compare=False)
    action: Callable[[], None] = field(compare=False)
    on_dropped: Callable[[], None] | None = field(compare=False, default=None)


class Simulation:
    """Single-threaded event loop over one graph; safe to run many in parallel
    as long as each owns its own graph and tables."""

    def __init__(self, graph: Graph, link: LinkModel = LinkModel(), seed: int = 0, r_min: int = 1):
        self.graph = graph
        self.link = link
        self.seed = seed
        self.rng = random.Random(f"sim:{seed}")
        self.clock = 0
        self.tables: dict[NodeId, RoutingTable] = {
            v: init_table(v, graph, r_min) for v in sorted(graph.nodes)
        }
        self._r_min = r_min
        self._heap: list[Event] = []
        self._seq = 0
        self._ids: dict[str, int] = {}

    def fresh_id(self, category: str) -> int:
        n = self._ids.get(category, 0)
        self._ids[category] = n + 1
        return n

    def jammed(self, v: NodeId, tick: int) -> bool:
        return self.link.jammed(v, tick)

    def schedule(
        self,
        tick: int,
        action: Callable[[], None],
        kind: EventKind = EventKind.TIMER,
        node: NodeId | None = None,
        on_dropped: Callable[[], None] | None = None,
    ) -> Event:
        if tick < self.clock:
            raise StateError(f"cannot schedule at tick {tick}: clock is already {self.clock}")
        ev = Event(tick, self._seq, kind, node, action, on_dropped)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def run_until(self, tick: int) -> int:
        """Process every event up to and including `tick`, in (tick, seq) order.

        Events bound to a node that is jammed at their tick never execute;
        their on_dropped hook (if any) fires instead. The clock always lands
        exactly on `tick`.
        """
        if tick < self.clock:
            raise StateError(f"cannot run backwards to tick {tick} from {self.clock}")
        processed = 0
        while self._heap and self._heap[0].tick <= tick:
            ev = heapq.heappop(self._heap)
            self.clock = ev.tick
            processed += 1
            if ev.node is not None and self.jammed(ev.node, ev.tick):
                if ev.on_dropped is not None:
                    ev.on_dropped()
                continue
            ev.action()
        self.clock = tick
        return processed

    def pending_events(self) -> int:
        return len(self._heap)

    # ---- packet plumbing

    def loss_roll(self, key: str) -> bool:
        """Keyed per-hop loss draw: a pure function of (seed, key)."""
        if self.link.loss <= 0.0:
            return False
        return random.Random(f"loss:{self.seed}:{key}").random() < self.link.loss

    def send_hop(
        self,
        u: NodeId,
        v: NodeId,
        *,
        key: str,
        action: Callable[[], None],
        kind: EventKind = EventKind.PACKET_ARRIVAL,
        on_dropped: Callable[[], None] | None = None,
    ) -> bool:
        """Move one packet across the u-v link.

        Returns False (nothing scheduled) when the link is missing or down,
        the sender is jammed, or the keyed loss draw kills the packet.
        Otherwise the arrival action runs at clock + latency at node v, unless
        v is jammed then.
        """
        g = self.graph
        if not (g.has_node(u) and g.has_node(v) and g.has_edge(u, v) and g.edge(u, v).up):
            return False
        if self.jammed(u, self.clock):
            return False
        if self.loss_roll(key):
            return False
        self.schedule(self.clock + self.link.latency, action,
                      kind=kind, node=v, on_dropped=on_dropped)
        return True

    # ---- churn

    def apply_timeline(self, timeline) -> None:
        """Schedule (tick, churn event) pairs onto the event queue."""
        for tick, ev in timeline:
            self.schedule(tick, self._churn_action(ev), kind=EventKind.CHURN)

    def _churn_action(self, ev: ChurnEvent) -> Callable[[], None]:
        def run() -> None:
            self.apply_churn_now(ev)
        return run

    def apply_churn_now(self, ev: ChurnEvent) -> None:
        """Apply churn to the graph and keep tables consistent.

        Affected nodes re-run their neighbor query against the graph, which is
        how the initialization handshake is realized here; measures of
        surviving neighbor rows are untouched.
        """
        if ev.kind is ChurnKind.LEAVE:
            affected = set(self.graph.neighbors(ev.node))
        elif ev.kind is ChurnKind.JOIN:
            affected = {peer for peer, _ in ev.links}
        else:
            affected = {ev.u, ev.v}
        apply_churn(self.graph, ev)
        if ev.kind is ChurnKind.LEAVE:
            self.tables.pop(ev.node, None)
        elif ev.kind is ChurnKind.JOIN:
            self.tables[ev.node] = init_table(ev.node, self.graph, self._r_min)
        for v in affected:
            if v in self.tables and self.graph.has_node(v):
                self.tables[v].refresh_neighbors(self.graph)
