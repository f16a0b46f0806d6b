"""Data transmission over a discovered route: proportional load, coded stream, stop/ACK.

The source fountain-codes each frame and feeds every path of the route at a
rate proportional to its bottleneck. Relays forward along the path carried by
the packet. The destination feeds its decoder; on completion it sends a stop
signal back along the first path and, one tick later, the frame ACK. Without a
feedback channel the source instead emits a fixed overhead of coded packets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import NoCapacityError, ParameterError, ProtocolError
from .fountain import (
    CodedPacket,
    DecoderState,
    RobustSolitonParams,
    SourceBlock,
    Status,
    encode_packet,
)
from .routing import Route


class TransferMode(Enum):
    FEEDBACK = "feedback"
    FEC = "fec"


@dataclass(frozen=True)
class LoadAssignment:
    """Per-path send rates in packets per tick."""

    rates: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.rates)


def assign_loads(route: Route, budget: int | None = None, graph=None) -> LoadAssignment:
    """Split a per-tick packet budget across paths in proportion to bottleneck.

    Rounding is largest-remainder with ties to the lowest path index, each rate
    capped at its path's bottleneck so no link is ever oversubscribed. A path
    that is down (when a graph is given) or has no capacity gets rate zero.
    The budget defaults to the sum of bottlenecks: send at full route capacity.
    """
    if not route.paths:
        raise ParameterError("route has no paths")
    caps = [
        p.bottleneck if (graph is None or p.alive(graph)) else 0
        for p in route.paths
    ]
    total_cap = sum(caps)
    if total_cap == 0:
        raise NoCapacityError("every path in the route has zero usable bandwidth")
    if budget is None:
        budget = total_cap
    if budget < 0:
        raise ParameterError(f"budget must be non-negative, got {budget}")
    shares = [budget * c / total_cap for c in caps]
    rates = [int(s) for s in shares]
    leftover = budget - sum(rates)
    by_remainder = sorted(range(len(caps)), key=lambda i: (-(shares[i] - rates[i]), i))
    for i in by_remainder[:leftover]:
        rates[i] += 1
    rates = [min(r, c) for r, c in zip(rates, caps)]
    return LoadAssignment(rates=tuple(rates))


@dataclass(frozen=True)
class TransmissionResult:
    """Outcome of one frame transfer.

    `packets_received` counts every coded packet the destination saw during
    the transfer, including those already in flight while the stop signal
    travelled, so `overhead_ratio` reflects the true cost of late stopping.
    `ticks` measures start to ACK receipt (feedback) or to decode completion.
    """

    delivered: bool
    mode: TransferMode
    frame_id: int
    k: int
    m: int
    packets_sent: tuple[int, ...]
    packets_received: int
    overhead_ratio: float
    ticks: int
    failure: str | None = None
    recovered: bytes | None = None

    @property
    def packets_sent_total(self) -> int:
        return sum(self.packets_sent)

    CSV_FIELDS = (
        "scenario", "seed", "mode", "k", "m", "paths",
        "delivered", "packets_sent_total", "overhead_ratio", "ticks",
    )

    def to_json(self, scenario: str, seed: int) -> dict:
        return {
            "scenario": scenario,
            "seed": seed,
            "mode": self.mode.value,
            "k": self.k,
            "m": self.m,
            "paths": len(self.packets_sent),
            "delivered": self.delivered,
            "packets_sent_total": self.packets_sent_total,
            "overhead_ratio": self.overhead_ratio,
            "ticks": self.ticks,
        }

    def csv_row(self, scenario: str, seed: int) -> list[str]:
        doc = self.to_json(scenario, seed)
        return [_csv_cell(doc[f]) for f in self.CSV_FIELDS]


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


class _Transfer:
    """Book-keeping for one in-flight frame."""

    def __init__(self) -> None:
        self.emitting = True
        self.pending = 0        # packets (data + control) in flight
        self.emitted = 0        # doubles as the next encoding index
        self.received = 0
        self.complete_tick: int | None = None
        self.ack_tick: int | None = None
        self.gave_up = False


def transmit_file(
    sim,
    route: Route,
    data: bytes,
    k: int,
    m: int,
    mode: TransferMode = TransferMode.FEEDBACK,
    fec_overhead: float = 1.5,
    budget: int | None = None,
    frame_id: int | None = None,
    code: RobustSolitonParams = RobustSolitonParams(),
    give_up_factor: int = 50,
) -> TransmissionResult:
    """Send one frame over the route inside the simulation's event loop.

    Feedback mode streams until the stop signal arrives back at the source (or
    until `give_up_factor * k` emissions pass without completion). FEC mode
    sends exactly ceil(fec_overhead * k) packets, losses notwithstanding. The
    frame's true byte length travels as frame metadata so the destination can
    strip the block padding.
    """
    if len(data) > k * m:
        raise ParameterError(f"{len(data)} bytes exceed the k*m = {k * m} frame")
    if mode is TransferMode.FEC and fec_overhead < 1.0:
        raise ParameterError(f"fec_overhead must be >= 1.0, got {fec_overhead}")
    if frame_id is None:
        frame_id = sim.fresh_id("frame")
    assignment = assign_loads(route, budget, graph=sim.graph)
    if assignment.total == 0:
        raise NoCapacityError("load assignment sends nothing per tick")
    block = SourceBlock.from_bytes(k, m, data)
    decoder = DecoderState(k, m, code, frame_id)
    paths = route.paths
    sent = [0] * len(paths)
    recovered: list[bytes | None] = [None]
    fec_total = math.ceil(fec_overhead * k) if mode is TransferMode.FEC else None
    horizon = give_up_factor * k
    start = sim.clock
    st = _Transfer()

    def packet_key(index: int, hop: int) -> str:
        return f"data:{frame_id}:{index}:{hop}"

    def dropped() -> None:
        st.pending -= 1

    def hop_along(nodes: tuple[int, ...], i: int, packet: CodedPacket) -> None:
        if i == 0:
            st.pending += 1
        final = i + 2 == len(nodes)

        def arrival() -> None:
            if final:
                st.pending -= 1
                at_destination(packet)
            else:
                hop_along(nodes, i + 1, packet)

        ok = sim.send_hop(nodes[i], nodes[i + 1], key=packet_key(packet.index, i),
                          action=arrival, on_dropped=dropped)
        if not ok:
            st.pending -= 1

    def at_destination(packet: CodedPacket) -> None:
        st.received += 1
        if decoder.finished:
            return
        if decoder.push(packet) is Status.COMPLETE:
            st.complete_tick = sim.clock
            recovered[0] = decoder.block().to_bytes()[:len(data)]
            if mode is TransferMode.FEEDBACK:
                send_control("stop", on_source_stop)
                sim.schedule(sim.clock + 1, lambda: send_control("ack", on_source_ack))

    def send_control(tag: str, at_source) -> None:
        # travels the reverse of the first (best-ranked) path, hop by hop
        walk_control(tuple(reversed(paths[0].nodes)), 0, tag, at_source)

    def walk_control(nodes: tuple[int, ...], i: int, tag: str, at_source) -> None:
        if i == 0:
            st.pending += 1
        final = i + 2 == len(nodes)

        def arrival() -> None:
            if final:
                st.pending -= 1
                at_source()
            else:
                walk_control(nodes, i + 1, tag, at_source)

        ok = sim.send_hop(nodes[i], nodes[i + 1], key=f"ctl:{frame_id}:{tag}:{i}",
                          action=arrival, on_dropped=dropped)
        if not ok:
            st.pending -= 1

    def on_source_stop() -> None:
        st.emitting = False

    def on_source_ack() -> None:
        st.ack_tick = sim.clock

    def emit_tick() -> None:
        if not st.emitting:
            return
        for path_idx, rate in enumerate(assignment.rates):
            for _ in range(rate):
                if mode is TransferMode.FEC and st.emitted >= fec_total:
                    st.emitting = False
                    return
                if mode is TransferMode.FEEDBACK and st.emitted >= horizon:
                    st.emitting = False
                    st.gave_up = not decoder.finished
                    return
                packet = encode_packet(block, st.emitted, code, frame_id)
                st.emitted += 1
                sent[path_idx] += 1
                hop_along(paths[path_idx].nodes, 0, packet)
        if mode is TransferMode.FEC and st.emitted >= fec_total:
            st.emitting = False
            return
        sim.schedule(sim.clock + 1, emit_tick)

    sim.schedule(sim.clock, emit_tick)
    # generous hard stop; the horizon ends emission long before this in practice
    cap = start + (horizon + (fec_total or 0)) * sim.link.latency + 64 * sim.link.latency + 64
    while (st.emitting or st.pending > 0) and sim.clock < cap:
        sim.run_until(sim.clock + 1)

    delivered = decoder.finished
    if delivered:
        end = st.ack_tick if st.ack_tick is not None else st.complete_tick
    else:
        end = sim.clock
    failure = None
    if not delivered:
        if all(not p.alive(sim.graph) for p in paths):
            failure = "all_paths_down"
        elif st.gave_up:
            failure = "give_up_horizon"
        else:
            failure = "not_decoded"
    result = TransmissionResult(
        delivered=delivered,
        mode=mode,
        frame_id=frame_id,
        k=k,
        m=m,
        packets_sent=tuple(sent),
        packets_received=st.received,
        overhead_ratio=st.received / k,
        ticks=end - start,
        failure=failure,
        recovered=recovered[0],
    )
    if delivered and result.packets_received < k:
        raise ProtocolError("delivered with fewer packets than sources")  # unreachable
    return result


def next_frame(
    sim,
    route: Route,
    frames,
    k: int,
    m: int,
    mode: TransferMode = TransferMode.FEEDBACK,
    **kwargs,
) -> list[TransmissionResult]:
    """Send frames strictly in sequence; a failed frame stops everything after it."""
    results: list[TransmissionResult] = []
    for frame_id, data in enumerate(frames):
        result = transmit_file(sim, route, data, k, m, mode=mode, frame_id=frame_id, **kwargs)
        results.append(result)
        if not result.delivered:
            break
    return results
