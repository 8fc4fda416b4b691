"""Ledger broadcast protocol: packet codec, timestamps and replica merging.

Every vehicle periodically broadcasts a 350-byte package: a 300-byte status
payload plus a 50-byte header announcing which resource the sender occupies
and which resources it has observed colliding. Receivers fold decoded
packets and their own channel sensing into a local ledger; the ledger is
what lets a transmitter eventually learn that its own slot collided even
though half-duplex kept it from hearing the collision directly.

Wire format (all integers big-endian):

====== ======= =========================================================
offset length  field
====== ======= =========================================================
0      1       magic (0x4C)
1      1       vehicle id
2      10      transmit-slot start time, microseconds
12     1       sub-channel id
13     2       subframe index within the reservation interval
15     1       collision-record count (0..8)
16     32      eight 4-byte collision slots: sub-channel id (1 byte) +
               subframe offset before the packet timestamp (3 bytes,
               whole subframes); unused slots are zero
48     2       reserved, zero
50     300     status payload
====== ======= =========================================================

Decoding rejects anything non-canonical (bad magic, overlong record count,
nonzero bytes in unused slots) so that encode and decode are exact
inverses on the set of accepted byte strings.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .capacity import Numerology

PACKET_BYTES = 350
HEADER_BYTES = 50
PAYLOAD_BYTES = PACKET_BYTES - HEADER_BYTES
TIMESTAMP_BYTES = 10
TIMESTAMP_OFFSET = 2
VEHICLE_ID_OFFSET = 1
MAX_COLLISION_RECORDS = 8
PACKET_MAGIC = 0x4C

SUBFRAME_US = 1000  # a subframe is 1 ms regardless of numerology

_MAX_TIMESTAMP = 2 ** (8 * TIMESTAMP_BYTES) - 1
_MAX_OFFSET_SUBFRAMES = 2**24 - 1


class ProtocolError(Exception):
    """Base class for protocol violations."""


class NetworkFullError(ProtocolError):
    """All 256 vehicle identifiers are in use."""


class PacketEncodeError(ProtocolError):
    """The packet cannot be represented in the wire format."""


class MalformedPacketError(ProtocolError):
    """Base class for undecodable byte strings."""


class PacketLengthError(MalformedPacketError):
    """Input is not exactly one packet long."""


class PacketContentError(MalformedPacketError):
    """Input has the right length but violates the wire format."""


class RecordSource(enum.Enum):
    """How a ledger record arrived at this replica."""

    SELF = "self"
    DECODED_DIRECT = "decoded_direct"
    MERGED_REMOTE = "merged_remote"


class CollisionRecord(NamedTuple):
    """A sub-channel observed busy with no decodable package on it."""

    subchannel_id: int
    subframe_timestamp_us: int


class LedgerRecord(NamedTuple):
    """One vehicle's claim to one transmit slot."""

    vehicle_id: int
    subchannel_id: int
    subframe_index: int
    timestamp_us: int
    source: RecordSource = RecordSource.SELF


def timestamp_within_sps(t_last_us: int, rri_ms: int) -> int:
    """Next transmit-slot start while a reservation is held: one interval
    after the previous transmission."""
    if t_last_us < 0:
        raise ProtocolError("t_last_us must be >= 0")
    if rri_ms <= 0:
        raise ProtocolError("rri_ms must be > 0")
    return t_last_us + rri_ms * 1000


def timestamp_begin_sps(t_current_us: int, n_select: int, num: Numerology) -> int:
    """Transmit-slot start right after (re)selection: the current time plus
    the selected slot offset."""
    if n_select < 0:
        raise ProtocolError("n_select must be >= 0")
    return t_current_us + n_select * num.slot_duration_us


def assign_vehicle_id(existing: set[int], rng) -> int:
    """Draw an unused 1-byte identifier uniformly from the free values."""
    free = [i for i in range(256) if i not in existing]
    if not free:
        raise NetworkFullError("all 256 vehicle ids are taken")
    return rng.choice(free)


def bsm_filler(vehicle_id: int, timestamp_us: int) -> bytes:
    """Deterministic 300-byte status payload; content never affects
    scheduling, it only has to be reproducible."""
    stamp = bytes([vehicle_id & 0xFF, (vehicle_id * 167 + 13) & 0xFF]) + (
        timestamp_us & _MAX_TIMESTAMP
    ).to_bytes(TIMESTAMP_BYTES, "big")
    return (stamp * (PAYLOAD_BYTES // len(stamp) + 1))[:PAYLOAD_BYTES]


@dataclass(slots=True, eq=True)
class LedgerPacket:
    """One 350-byte broadcast unit."""

    timestamp_us: int
    vehicle_id: int
    subchannel_id: int
    subframe_index: int
    collision_records: tuple[CollisionRecord, ...] = ()
    bsm_payload: bytes = b""
    _self_record: LedgerRecord | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def self_record(self) -> LedgerRecord:
        """The sender's claim to its transmit slot, as seen by a receiver."""
        rec = self._self_record
        if rec is None:
            rec = LedgerRecord(
                self.vehicle_id,
                self.subchannel_id,
                self.subframe_index,
                self.timestamp_us,
                RecordSource.DECODED_DIRECT,
            )
            self._self_record = rec
        return rec


def encode_packet(pkt: LedgerPacket) -> bytes:
    """Serialize a packet to exactly 350 bytes."""
    if not 0 <= pkt.vehicle_id <= 0xFF:
        raise PacketEncodeError(f"vehicle_id {pkt.vehicle_id} out of range")
    if not 0 <= pkt.timestamp_us <= _MAX_TIMESTAMP:
        raise PacketEncodeError("timestamp does not fit in 10 bytes")
    if not 0 <= pkt.subchannel_id <= 0xFF:
        raise PacketEncodeError(f"subchannel_id {pkt.subchannel_id} out of range")
    if not 0 <= pkt.subframe_index <= 0xFFFF:
        raise PacketEncodeError(f"subframe_index {pkt.subframe_index} out of range")
    if len(pkt.collision_records) > MAX_COLLISION_RECORDS:
        raise PacketEncodeError(
            f"{len(pkt.collision_records)} collision records exceed the "
            f"header budget of {MAX_COLLISION_RECORDS}"
        )
    if len(pkt.bsm_payload) != PAYLOAD_BYTES:
        raise PacketEncodeError(
            f"payload must be exactly {PAYLOAD_BYTES} bytes, got {len(pkt.bsm_payload)}"
        )

    buf = bytearray(PACKET_BYTES)
    buf[0] = PACKET_MAGIC
    buf[VEHICLE_ID_OFFSET] = pkt.vehicle_id
    buf[TIMESTAMP_OFFSET : TIMESTAMP_OFFSET + TIMESTAMP_BYTES] = pkt.timestamp_us.to_bytes(
        TIMESTAMP_BYTES, "big"
    )
    buf[12] = pkt.subchannel_id
    buf[13:15] = pkt.subframe_index.to_bytes(2, "big")
    buf[15] = len(pkt.collision_records)
    for i, rec in enumerate(pkt.collision_records):
        if not 0 <= rec.subchannel_id <= 0xFF:
            raise PacketEncodeError(f"collision subchannel_id {rec.subchannel_id} out of range")
        if rec.subframe_timestamp_us < 0:
            raise PacketEncodeError("collision record predates the scenario")
        delta = pkt.timestamp_us - rec.subframe_timestamp_us
        if delta < 0:
            raise PacketEncodeError("collision record is newer than the packet")
        offset, rem = divmod(delta, SUBFRAME_US)
        if rem:
            raise PacketEncodeError(
                "collision record offset is not a whole number of subframes"
            )
        if offset > _MAX_OFFSET_SUBFRAMES:
            raise PacketEncodeError("collision record is too old to encode")
        base = 16 + 4 * i
        buf[base] = rec.subchannel_id
        buf[base + 1 : base + 4] = offset.to_bytes(3, "big")
    buf[HEADER_BYTES:] = pkt.bsm_payload
    return bytes(buf)


def decode_packet(data: bytes) -> LedgerPacket:
    """Parse exactly one packet; inverse of :func:`encode_packet`."""
    if len(data) != PACKET_BYTES:
        raise PacketLengthError(f"expected {PACKET_BYTES} bytes, got {len(data)}")
    if data[0] != PACKET_MAGIC:
        raise PacketContentError(f"bad magic byte 0x{data[0]:02x}")
    timestamp = int.from_bytes(data[TIMESTAMP_OFFSET : TIMESTAMP_OFFSET + TIMESTAMP_BYTES], "big")
    count = data[15]
    if count > MAX_COLLISION_RECORDS:
        raise PacketContentError(f"collision record count {count} exceeds {MAX_COLLISION_RECORDS}")
    records = []
    for i in range(MAX_COLLISION_RECORDS):
        base = 16 + 4 * i
        chunk = data[base : base + 4]
        if i >= count:
            if any(chunk):
                raise PacketContentError(f"unused collision slot {i} is not zero")
            continue
        offset = int.from_bytes(chunk[1:4], "big")
        t = timestamp - offset * SUBFRAME_US
        if t < 0:
            raise PacketContentError(f"collision slot {i} predates the scenario")
        records.append(CollisionRecord(chunk[0], t))
    if any(data[48:50]):
        raise PacketContentError("reserved header bytes are not zero")
    return LedgerPacket(
        timestamp_us=timestamp,
        vehicle_id=data[VEHICLE_ID_OFFSET],
        subchannel_id=data[12],
        subframe_index=int.from_bytes(data[13:15], "big"),
        collision_records=tuple(records),
        bsm_payload=bytes(data[HEADER_BYTES:]),
    )


@dataclass(slots=True)
class SensingList:
    """Boolean occupancy of every sub-channel in one subframe, stamped with
    the subframe's start time."""

    subframe_index: int
    busy: tuple[bool, ...]
    timestamp_us: int


class LocalLedger:
    """One vehicle's replica: slot claims keyed by (vehicle, timestamp),
    plus the set of observed collisions."""

    __slots__ = ("records", "collisions", "_sorted_collisions", "_sorted_len")

    def __init__(self) -> None:
        self.records: dict[tuple[int, int], LedgerRecord] = {}
        self.collisions: set[CollisionRecord] = set()
        self._sorted_collisions: tuple[CollisionRecord, ...] = ()
        self._sorted_len = 0

    def add_record(self, rec: LedgerRecord) -> bool:
        """Insert a record unless its (vehicle, timestamp) key is taken.
        Returns True when the record is new."""
        key = (rec.vehicle_id, rec.timestamp_us)
        if key in self.records:
            return False
        self.records[key] = rec
        return True

    def add_collision(self, rec: CollisionRecord) -> bool:
        if rec in self.collisions:
            return False
        self.collisions.add(rec)
        return True

    def recent_collisions(self, limit: int) -> tuple[CollisionRecord, ...]:
        """The ``limit`` most recent collision records by subframe time.

        Collisions are only ever added, so the sorted view is cached until
        the set grows.
        """
        if self._sorted_len != len(self.collisions):
            self._sorted_collisions = tuple(
                sorted(
                    self.collisions,
                    key=lambda r: (r.subframe_timestamp_us, r.subchannel_id),
                )
            )
            self._sorted_len = len(self.collisions)
        if limit >= self._sorted_len:
            return self._sorted_collisions
        return self._sorted_collisions[-limit:]

    def copy(self) -> "LocalLedger":
        dup = LocalLedger()
        dup.records = dict(self.records)
        dup.collisions = set(self.collisions)
        return dup

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LocalLedger):
            return NotImplemented
        return self.records == other.records and self.collisions == other.collisions

    def __repr__(self) -> str:
        return f"LocalLedger({len(self.records)} records, {len(self.collisions)} collisions)"

    def check(self) -> None:
        """Validate replica invariants; raises ProtocolError on violation."""
        for key, rec in self.records.items():
            if key != (rec.vehicle_id, rec.timestamp_us):
                raise ProtocolError(f"record {rec} stored under wrong key {key}")
        claimed = {(r.timestamp_us, r.subchannel_id) for r in self.records.values()}
        for col in self.collisions:
            if (col.subframe_timestamp_us, col.subchannel_id) in claimed:
                raise ProtocolError(
                    f"collision {col} overlaps a decoded record at the same position"
                )

    def dump(self) -> str:
        """Line-oriented text form, sorted by timestamp then id, for golden
        tests and debugging."""
        lines = []
        for rec in self.records.values():
            lines.append(
                (
                    rec.timestamp_us,
                    0,
                    rec.vehicle_id,
                    f"record vehicle={rec.vehicle_id} subch={rec.subchannel_id} "
                    f"subframe={rec.subframe_index} t={rec.timestamp_us}",
                )
            )
        for col in self.collisions:
            lines.append(
                (
                    col.subframe_timestamp_us,
                    1,
                    col.subchannel_id,
                    f"collision subch={col.subchannel_id} t={col.subframe_timestamp_us}",
                )
            )
        lines.sort()
        return "\n".join(entry[3] for entry in lines)


def ingest_subframe(
    ledger: LocalLedger,
    sensed: SensingList,
    decoded: Sequence[LedgerPacket],
) -> tuple[LocalLedger, list[CollisionRecord]]:
    """Fold one listened subframe into the ledger.

    Decoded packets contribute the sender's slot claim plus any collision
    records they carry; every busy sub-channel that no decoded packet
    claims becomes a fresh collision record. Returns the ledger and every
    collision record that is new to it (inferred or carried) so callers can
    react to previously unknown collisions only.
    """
    for pkt in decoded:
        if pkt.subframe_index != sensed.subframe_index:
            raise ProtocolError(
                f"packet for subframe {pkt.subframe_index} delivered while "
                f"sensing subframe {sensed.subframe_index}"
            )
    new: list[CollisionRecord] = []
    claimed = set()
    records = ledger.records
    collisions = ledger.collisions
    for pkt in decoded:
        rec = pkt.self_record()
        records.setdefault((rec.vehicle_id, rec.timestamp_us), rec)
        claimed.add(pkt.subchannel_id)
        for col in pkt.collision_records:
            if col not in collisions:
                collisions.add(col)
                new.append(col)
    for ch, busy in enumerate(sensed.busy):
        if busy and ch not in claimed:
            col = CollisionRecord(ch, sensed.timestamp_us)
            if col not in collisions:
                collisions.add(col)
                new.append(col)
    return ledger, new


def merge_remote(
    local: LocalLedger,
    remote_records: Iterable[LedgerRecord],
    remote_collisions: Iterable[CollisionRecord],
) -> LocalLedger:
    """Set-union merge of remote ledger content into the local replica.

    Existing entries are never overwritten; incoming records are re-tagged
    as remotely merged so the outcome does not depend on merge order.
    """
    for rec in remote_records:
        if (rec.vehicle_id, rec.timestamp_us) not in local.records:
            local.add_record(rec._replace(source=RecordSource.MERGED_REMOTE))
    for col in remote_collisions:
        local.add_collision(col)
    return local
