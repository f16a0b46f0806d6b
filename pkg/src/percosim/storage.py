"""Distributed coded storage: keep some packets at home, scatter the rest nearby.

A node fountain-codes its data, keeps `local_count` coded packets in its own
memory and spreads `remote_count` more over its neighbors. With
local + remote > k and remote < k, the owner can gather enough packets to
rebuild the block while the scattered share alone can never determine it:
fewer than k coded packets leave the block underdetermined no matter what.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .errors import (
    ConstraintViolationError,
    InsufficientPacketsError,
    NoNeighborsError,
    NotFoundError,
    ParameterError,
)
from .fountain import (
    CodedPacket,
    DecoderState,
    RobustSolitonParams,
    SourceBlock,
    encode_packet,
)
from .topology import NodeId, bfs_hops


@dataclass(frozen=True)
class StoragePlan:
    """Where each coded packet of one stored block lives."""

    owner: NodeId
    k: int
    m: int
    length: int
    frame_id: int
    code: RobustSolitonParams
    local: tuple[CodedPacket, ...]
    remote: Mapping[NodeId, tuple[CodedPacket, ...]]
    placement_paths: tuple[tuple[NodeId, ...], ...]

    @property
    def local_count(self) -> int:
        return len(self.local)

    @property
    def remote_count(self) -> int:
        return sum(len(ps) for ps in self.remote.values())

    @property
    def holders(self) -> tuple[NodeId, ...]:
        return (self.owner,) + tuple(sorted(self.remote))

    def packets_for(self, holder: NodeId) -> tuple[CodedPacket, ...]:
        if holder == self.owner:
            return self.local
        if holder in self.remote:
            return self.remote[holder]
        raise NotFoundError(f"node {holder} holds no packets of this plan")

    def to_json(self) -> dict:
        return {
            "owner": self.owner,
            "k": self.k,
            "m": self.m,
            "length": self.length,
            "frame_id": self.frame_id,
            "local_count": self.local_count,
            "remote_count": self.remote_count,
            "local_indices": [p.index for p in self.local],
            "remote_indices": {
                str(nb): [p.index for p in ps] for nb, ps in sorted(self.remote.items())
            },
            "placement_paths": [list(path) for path in self.placement_paths],
        }


def disperse(
    sim,
    owner: NodeId,
    data: bytes,
    k: int,
    m: int,
    local_count: int,
    remote_count: int,
    radius: int = 1,
    code: RobustSolitonParams = RobustSolitonParams(),
    frame_id: int = 0,
) -> StoragePlan:
    """Code the data and place local_count packets at the owner plus
    remote_count packets round-robin over the nodes within `radius` hops.

    Requires local + remote > k (enough material to decode) and remote < k
    (the scattered share alone stays underdetermined). All packet indices are
    distinct, so no placement wastes a duplicate.
    """
    if local_count < 0 or remote_count < 0:
        raise ParameterError("packet counts must be non-negative")
    if local_count + remote_count <= k:
        raise ConstraintViolationError(
            f"local+remote = {local_count + remote_count} must exceed k = {k}"
        )
    if remote_count >= k:
        raise ConstraintViolationError(
            f"remote = {remote_count} must stay below k = {k}"
        )
    if radius < 1:
        raise ParameterError(f"radius must be >= 1, got {radius}")
    g = sim.graph
    if not g.has_node(owner):
        raise NotFoundError(f"node {owner} does not exist")
    if len(data) > k * m:
        raise ParameterError(f"{len(data)} bytes exceed the k*m = {k * m} block")

    if radius == 1:
        targets = g.neighbors(owner)
        paths = {nb: (owner, nb) for nb in targets}
    else:
        hops = bfs_hops(g, owner, max_hops=radius)
        targets = sorted(v for v in hops if v != owner)
        paths = {v: _bfs_path(g, owner, v, hops) for v in targets}
    if remote_count > 0 and not targets:
        raise NoNeighborsError(f"node {owner} has nobody to store at within radius {radius}")

    block = SourceBlock.from_bytes(k, m, data)
    packets = [encode_packet(block, i, code, frame_id) for i in range(local_count + remote_count)]
    local = tuple(packets[:local_count])
    remote: dict[NodeId, list[CodedPacket]] = {}
    for slot, packet in enumerate(packets[local_count:]):
        nb = targets[slot % len(targets)]
        remote.setdefault(nb, []).append(packet)
    return StoragePlan(
        owner=owner,
        k=k,
        m=m,
        length=len(data),
        frame_id=frame_id,
        code=code,
        local=local,
        remote=MappingProxyType({nb: tuple(ps) for nb, ps in sorted(remote.items())}),
        placement_paths=tuple(paths[nb] for nb in sorted(remote)),
    )


def _bfs_path(g, owner: NodeId, target: NodeId, hops: dict[NodeId, int]) -> tuple[NodeId, ...]:
    # walk back from target along strictly decreasing hop counts
    path = [target]
    at = target
    while at != owner:
        at = min(w for w in g.neighbors(at) if hops.get(w, len(hops) + 1) == hops[path[-1]] - 1)
        path.append(at)
    return tuple(reversed(path))


def recover(plan: StoragePlan, available) -> bytes:
    """Rebuild the stored data from the packets of the available holders.

    Pushes packets holder by holder (owner first) and stops as soon as the
    decoder completes, so at most local+remote packets are ever consumed.
    """
    wanted = set(available)
    decoder = DecoderState(plan.k, plan.m, plan.code, plan.frame_id)
    for holder in plan.holders:
        if holder not in wanted:
            continue
        for packet in plan.packets_for(holder):
            decoder.push(packet)
            if decoder.finished:
                return decoder.block().to_bytes()[:plan.length]
    raise InsufficientPacketsError(
        f"decoding stalled at {len(decoder.recovered)}/{plan.k} source packets "
        f"with {decoder.packets_pushed} packets consumed"
    )
