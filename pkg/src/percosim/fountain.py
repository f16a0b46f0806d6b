"""Rateless LT codec with column-interleaved framing and a peeling decoder.

A block of `k` source packets, each `m` bytes, turns into an unbounded stream
of `m`-byte coded packets. Each coded packet XORs a pseudo-random subset of
source packets; the subset is regenerated from (frame_id, index) alone, so the
header needs a single integer and no side channel. Choosing one subset shared
by all `m` byte positions is equivalent to transposing the block into `m`
byte-streams of length `k`, coding each stream at the same index, and reading
the coded symbols back in column order.

Any sufficiently large subset of coded packets reconstructs the block: the
decoder strips known sources out of arriving packets and cascades on every
packet reduced to a single unknown.
"""

from __future__ import annotations

import math
import random
import struct
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .errors import FormatError, ParameterError, ProtocolError, StateError


@dataclass(frozen=True)
class RobustSolitonParams:
    """Degree-distribution knobs: spike weight `c` and failure bound `delta`."""

    c: float = 0.03
    delta: float = 0.5

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ParameterError(f"c must be positive, got {self.c}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")


def robust_soliton(k: int, params: RobustSolitonParams = RobustSolitonParams()) -> tuple[float, ...]:
    """Probability of each coding degree 1..k.

    Ideal component: 1/k at degree 1, 1/(d(d-1)) above. The robust component
    adds R/(d*k) below the spike degree floor(k/R) and a log spike there, with
    R = c * ln(k/delta) * sqrt(k); the sum is then normalized.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if k == 1:
        return (1.0,)
    rho = [0.0] * (k + 1)
    rho[1] = 1.0 / k
    for d in range(2, k + 1):
        rho[d] = 1.0 / (d * (d - 1))
    tau = [0.0] * (k + 1)
    spike_size = params.c * math.log(k / params.delta) * math.sqrt(k)
    spike_at = int(k / spike_size)
    if spike_at >= 1:
        for d in range(1, min(spike_at, k + 1)):
            tau[d] = spike_size / (d * k)
        if spike_at <= k:
            # clamped: the construction assumes the spike weight exceeds delta
            tau[spike_at] = max(0.0, spike_size * math.log(spike_size / params.delta) / k)
    beta = sum(rho[1:]) + sum(tau[1:])
    return tuple((rho[d] + tau[d]) / beta for d in range(1, k + 1))


@lru_cache(maxsize=64)
def _degree_cdf(k: int, c: float, delta: float) -> tuple[float, ...]:
    probs = robust_soliton(k, RobustSolitonParams(c, delta))
    cdf = []
    acc = 0.0
    for p in probs:
        acc += p
        cdf.append(acc)
    cdf[-1] = 1.0  # guard against float undershoot at the last degree
    return tuple(cdf)


def packet_neighbors(
    k: int,
    index: int,
    frame_id: int = 0,
    params: RobustSolitonParams = RobustSolitonParams(),
) -> tuple[int, ...]:
    """Source-packet subset coded at `index`, regenerable by any party.

    A private random stream is seeded from (frame_id, index) via the hashed
    string path of random.Random, which is stable across runs and platforms.
    The degree comes from the robust-soliton CDF by inversion, the subset from
    a uniform sample without replacement.
    """
    rng = random.Random(f"lt:{frame_id}:{index}")
    cdf = _degree_cdf(k, params.c, params.delta)
    degree = min(k, bisect_right(cdf, rng.random()) + 1)
    return tuple(sorted(rng.sample(range(k), degree)))


@dataclass(frozen=True)
class SourceBlock:
    """k source packets of m bytes each."""

    k: int
    m: int
    rows: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise ParameterError(f"block needs k >= 1 and m >= 1, got k={self.k} m={self.m}")
        if len(self.rows) != self.k or any(len(r) != self.m for r in self.rows):
            raise ParameterError("block rows disagree with the declared k x m shape")

    @classmethod
    def from_bytes(cls, k: int, m: int, data: bytes) -> "SourceBlock":
        """Zero-pad `data` to k*m bytes and split it into rows."""
        if len(data) > k * m:
            raise ParameterError(f"{len(data)} bytes exceed the k*m = {k * m} block")
        padded = bytes(data) + b"\x00" * (k * m - len(data))
        return cls(k=k, m=m, rows=tuple(padded[i * m:(i + 1) * m] for i in range(k)))

    def to_bytes(self) -> bytes:
        return b"".join(self.rows)


@dataclass(frozen=True)
class CodedPacket:
    """One coded packet: the XOR of the sources drawn at `index`."""

    frame_id: int
    index: int
    payload: bytes


def _xor_rows(rows, m: int) -> bytes:
    acc = bytearray(m)
    for row in rows:
        for i, b in enumerate(row):
            acc[i] ^= b
    return bytes(acc)


def encode_packet(
    block: SourceBlock,
    index: int,
    params: RobustSolitonParams = RobustSolitonParams(),
    frame_id: int = 0,
) -> CodedPacket:
    """Coded packet at `index`; bit-identical for identical (frame_id, index)."""
    chosen = packet_neighbors(block.k, index, frame_id, params)
    return CodedPacket(frame_id=frame_id, index=index,
                       payload=_xor_rows((block.rows[i] for i in chosen), block.m))


def reorganize(block: SourceBlock) -> tuple[bytes, ...]:
    """Transpose the block into m byte-streams of length k (column order)."""
    return tuple(bytes(block.rows[row][col] for row in range(block.k)) for col in range(block.m))


def deorganize(streams, k: int, m: int) -> SourceBlock:
    """Inverse of reorganize; validates the stream shape."""
    cols = tuple(streams)
    if len(cols) != m or any(len(s) != k for s in cols):
        raise FormatError(f"expected {m} streams of {k} symbols")
    return SourceBlock(k=k, m=m, rows=tuple(bytes(cols[col][row] for col in range(m)) for row in range(k)))


def encode_packet_by_streams(
    block: SourceBlock,
    index: int,
    params: RobustSolitonParams = RobustSolitonParams(),
    frame_id: int = 0,
) -> CodedPacket:
    """Same packet as encode_packet, built the long way around: transpose into
    per-position streams, code each stream with the shared subset, and read the
    coded symbols back in column order. Kept as the cross-check route."""
    chosen = packet_neighbors(block.k, index, frame_id, params)
    streams = reorganize(block)
    coded = bytearray(block.m)
    for pos in range(block.m):
        symbol = 0
        for src in chosen:
            symbol ^= streams[pos][src]
        coded[pos] = symbol
    return CodedPacket(frame_id=frame_id, index=index, payload=bytes(coded))


class Status(Enum):
    NEED_MORE = "need_more"
    COMPLETE = "complete"


class DecoderState:
    """Peeling decoder for one frame.

    Arriving packets are reduced by already-recovered sources; a packet left
    with one unknown recovers it and the recovery cascades through every
    buffered packet that referenced it. Order- and duplicate-insensitive.
    """

    def __init__(
        self,
        k: int,
        m: int,
        params: RobustSolitonParams = RobustSolitonParams(),
        frame_id: int = 0,
    ):
        if k < 1 or m < 1:
            raise ParameterError(f"decoder needs k >= 1 and m >= 1, got k={k} m={m}")
        self.k = k
        self.m = m
        self.params = params
        self.frame_id = frame_id
        self.recovered: dict[int, bytes] = {}
        self.packets_pushed = 0
        self.distinct_indices: set[int] = set()
        self._pending: list[tuple[set[int], bytearray] | None] = []
        self._holding: dict[int, set[int]] = {}  # source index -> pending slots

    @property
    def finished(self) -> bool:
        return len(self.recovered) == self.k

    def push(self, packet: CodedPacket) -> Status:
        """Absorb one coded packet and peel as far as possible."""
        if packet.frame_id != self.frame_id:
            raise ProtocolError(
                f"packet frame {packet.frame_id} does not match decoder frame {self.frame_id}"
            )
        if len(packet.payload) != self.m:
            raise ProtocolError(f"payload is {len(packet.payload)} bytes, expected {self.m}")
        self.packets_pushed += 1
        self.distinct_indices.add(packet.index)
        if self.finished:
            return Status.COMPLETE

        unknown = set(packet_neighbors(self.k, packet.index, self.frame_id, self.params))
        value = bytearray(packet.payload)
        for src in list(unknown):
            if src in self.recovered:
                self._xor_into(value, self.recovered[src])
                unknown.discard(src)
        if not unknown:
            return Status.NEED_MORE  # fully redundant
        if len(unknown) == 1:
            self._cascade(unknown.pop(), bytes(value))
        else:
            slot = len(self._pending)
            self._pending.append((unknown, value))
            for src in unknown:
                self._holding.setdefault(src, set()).add(slot)
        return Status.COMPLETE if self.finished else Status.NEED_MORE

    def block(self) -> SourceBlock:
        """The reconstructed block; only valid once decoding is complete."""
        if not self.finished:
            raise StateError(f"decoder holds {len(self.recovered)}/{self.k} source packets")
        return SourceBlock(k=self.k, m=self.m,
                           rows=tuple(self.recovered[i] for i in range(self.k)))

    @staticmethod
    def _xor_into(acc: bytearray, row: bytes) -> None:
        for i, b in enumerate(row):
            acc[i] ^= b

    def _cascade(self, src: int, value: bytes) -> None:
        stack = [(src, value)]
        while stack:
            idx, val = stack.pop()
            if idx in self.recovered:
                continue
            self.recovered[idx] = val
            for slot in self._holding.pop(idx, ()):
                entry = self._pending[slot]
                if entry is None:
                    continue
                unknown, payload = entry
                if idx not in unknown:
                    continue
                self._xor_into(payload, val)
                unknown.discard(idx)
                if len(unknown) == 1:
                    last = unknown.pop()
                    self._pending[slot] = None
                    self._holding.get(last, set()).discard(slot)
                    stack.append((last, bytes(payload)))
                elif not unknown:
                    self._pending[slot] = None


def decoder_push(state: DecoderState, packet: CodedPacket) -> Status:
    return state.push(packet)


def decode_block(state: DecoderState) -> SourceBlock:
    return state.block()


# ---- wire layout: frame_id u32 | index u32 | k u16 | m u16 | payload m bytes

_HEADER = struct.Struct(">IIHH")
HEADER_BYTES = _HEADER.size


def pack_packet(packet: CodedPacket, k: int, m: int) -> bytes:
    """Serialize one coded packet, big-endian, bit-exact."""
    if len(packet.payload) != m:
        raise ParameterError(f"payload is {len(packet.payload)} bytes, expected {m}")
    if not 0 <= k <= 0xFFFF or not 0 <= m <= 0xFFFF:
        raise ParameterError("k and m must fit in 16 bits on the wire")
    if not 0 <= packet.frame_id <= 0xFFFFFFFF or not 0 <= packet.index <= 0xFFFFFFFF:
        raise ParameterError("frame_id and index must fit in 32 bits on the wire")
    return _HEADER.pack(packet.frame_id, packet.index, k, m) + packet.payload


def unpack_packet(buf: bytes, offset: int = 0) -> tuple[CodedPacket, int, int, int]:
    """Parse one packet at `offset`; returns (packet, k, m, next_offset).

    Truncation raises a format error naming the byte offset where data ran out.
    """
    if offset + HEADER_BYTES > len(buf):
        raise FormatError(
            f"truncated packet header at byte offset {offset}: "
            f"need {HEADER_BYTES} bytes, have {len(buf) - offset}"
        )
    frame_id, index, k, m = _HEADER.unpack_from(buf, offset)
    if k < 1 or m < 1:
        raise FormatError(f"invalid k={k} m={m} in header at byte offset {offset}")
    body = offset + HEADER_BYTES
    if body + m > len(buf):
        raise FormatError(
            f"truncated payload at byte offset {body}: need {m} bytes, have {len(buf) - body}"
        )
    return CodedPacket(frame_id, index, bytes(buf[body:body + m])), k, m, body + m


def unpack_stream(buf: bytes) -> tuple[list[CodedPacket], int, int]:
    """Parse a concatenation of packets; all must agree on (k, m, frame_id)."""
    packets: list[CodedPacket] = []
    k = m = None
    offset = 0
    while offset < len(buf):
        packet, pk, pm, offset = unpack_packet(buf, offset)
        if k is None:
            k, m = pk, pm
        elif (pk, pm) != (k, m):
            raise FormatError(f"packet at index {len(packets)} changes k/m from {k}/{m} to {pk}/{pm}")
        if packets and packet.frame_id != packets[0].frame_id:
            raise FormatError(f"packet at index {len(packets)} changes frame_id")
        packets.append(packet)
    if not packets:
        raise FormatError("no packets in input")
    return packets, k, m
