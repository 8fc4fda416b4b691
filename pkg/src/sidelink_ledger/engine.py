"""Per-vehicle semi-persistent scheduling engine over a shared resource grid.

One `World` holds every vehicle in radio range of every other (sensing is
perfect boolean occupancy, no propagation model). Time advances slot by
slot through reservation intervals (RRIs); each vehicle transmits once per
RRI on its selected (subframe, sub-channel) resource and counts down its
re-selection counter. At the end of a period the vehicle either keeps its
resource or reselects:

* ``baseline`` policy: keep with the configured probability, otherwise
  draw a fresh resource uniformly from the whole grid. This reproduces
  plain SPS broadcast behaviour, where reselection happens regardless of
  what actually went wrong.
* ``ledger`` policy: reselect exactly when a shared collision record
  matched one of the vehicle's own transmissions this period. Candidate
  resources are the ones the vehicle sensed idle over the last interval;
  slots where the vehicle itself was transmitting (and therefore deaf)
  are excluded.

Half-duplex is enforced throughout: transmitters never receive in their
own subframe, so a collider only learns of its collision from collision
records relayed by other vehicles' packets.

Worlds are deterministic: every vehicle draws from its own stream seeded
by (scenario seed, vehicle id), and vehicles are processed in ascending id
order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Literal

from .capacity import Numerology, numerology
from .protocol import (
    MAX_COLLISION_RECORDS,
    CollisionRecord,
    LedgerPacket,
    LedgerRecord,
    LocalLedger,
    RecordSource,
    SensingList,
    assign_vehicle_id,
    bsm_filler,
    decode_packet,
    encode_packet,
    ingest_subframe,
    timestamp_begin_sps,
    timestamp_within_sps,
)

Mode = Literal["baseline", "ledger"]

RC_MIN = 5
RC_MAX = 15

KEEP = "keep"
RESELECT = "reselect"


class ResourceGrid:
    """Occupancy of one reservation interval: transmitting vehicle ids per
    (slot, sub-channel) cell."""

    __slots__ = ("subframes_per_rri", "subchannels_per_slot", "rri_index", "slot_us", "occupancy")

    def __init__(
        self,
        subframes_per_rri: int,
        subchannels_per_slot: int,
        rri_index: int = 0,
        slot_us: int = 1000,
    ) -> None:
        self.subframes_per_rri = subframes_per_rri
        self.subchannels_per_slot = subchannels_per_slot
        self.rri_index = rri_index
        self.slot_us = slot_us
        self.occupancy: list[list[list[int]]] = [
            [[] for _ in range(subchannels_per_slot)] for _ in range(subframes_per_rri)
        ]

    @property
    def start_us(self) -> int:
        return self.rri_index * self.subframes_per_rri * self.slot_us

    def subframe_time_us(self, subframe_index: int) -> int:
        return self.start_us + subframe_index * self.slot_us

    def place(self, vehicle_id: int, subframe_index: int, subchannel_id: int) -> None:
        self.occupancy[subframe_index][subchannel_id].append(vehicle_id)

    def transmitters(self, subframe_index: int, subchannel_id: int) -> list[int]:
        return self.occupancy[subframe_index][subchannel_id]


def sense(grid: ResourceGrid, subframe_index: int) -> SensingList:
    """Boolean occupancy of one subframe; a collision carries energy just
    like a clean transmission does."""
    if subframe_index >= grid.subframes_per_rri:
        raise ValueError(f"subframe {subframe_index} outside the interval")
    row = grid.occupancy[subframe_index]
    return SensingList(
        subframe_index=subframe_index,
        busy=tuple(bool(cell) for cell in row),
        timestamp_us=grid.subframe_time_us(subframe_index),
    )


def select_resource(view: list[list[bool]], rng: random.Random) -> tuple[int, int]:
    """Pick a resource uniformly from the idle cells of ``view``; when no
    cell is idle fall back to a uniform pick over the whole grid."""
    idle = [
        (sf, ch)
        for sf, row in enumerate(view)
        for ch, busy in enumerate(row)
        if not busy
    ]
    if idle:
        return rng.choice(idle)
    full = [(sf, ch) for sf, row in enumerate(view) for ch in range(len(row))]
    return rng.choice(full)


def draw_rc(rng: random.Random) -> int:
    """Fresh re-selection counter, uniform on [5, 15]."""
    return rng.randint(RC_MIN, RC_MAX)


@dataclass(slots=True)
class VehicleState:
    """SPS state for one vehicle."""

    vehicle_id: int
    mode: Mode
    keep_probability: float
    rng: random.Random
    selected: tuple[int, int] | None = None
    rc: int = 0
    ledger: LocalLedger = field(default_factory=LocalLedger)
    collided_this_period: bool = False
    t_last_us: int | None = None
    next_tx_us: int | None = None
    # Transmit times at the current resource since it was last (re)selected;
    # an incoming collision record matching one of these means "that was me".
    tenure_tx: set[int] = field(default_factory=set)


def end_of_period(v: VehicleState, rng: random.Random) -> str:
    """Keep/reselect decision once the re-selection counter hits zero.

    Baseline reselects with probability (1 - keep_probability); ledger
    reselects exactly when a collision was observed this period. Either
    way the vehicle starts a fresh period: new counter, cleared flag.
    """
    if v.rc != 0:
        raise ValueError(f"end_of_period called with rc={v.rc}")
    if v.mode == "ledger":
        decision = RESELECT if v.collided_this_period else KEEP
    else:
        decision = RESELECT if rng.random() < 1.0 - v.keep_probability else KEEP
    v.rc = draw_rc(rng)
    v.collided_this_period = False
    return decision


@dataclass(slots=True, frozen=True)
class CollisionEvent:
    """Two or more vehicles transmitting on the same resource."""

    rri_index: int
    subframe_index: int
    subchannel_id: int
    colliders: tuple[int, ...]
    t_trans_us: int


class World:
    """One simulated network, advanced deterministically RRI by RRI."""

    def __init__(
        self,
        num_vehicles: int,
        subchannels_per_slot: int,
        rri_ms: int = 100,
        num: Numerology | int = 0,
        mode: Mode = "ledger",
        keep_probability: float = 0.8,
        seed: int = 0,
        initial_selection: dict[int, tuple[int, int]] | None = None,
        initial_rc: dict[int, int] | None = None,
    ) -> None:
        self.num = num if isinstance(num, Numerology) else numerology(num)
        self.rri_ms = rri_ms
        self.slot_us = self.num.slot_duration_us
        self.subframes_per_rri = rri_ms * self.num.slots_per_subframe
        self.subchannels_per_slot = subchannels_per_slot
        self.mode: Mode = mode
        self.seed = seed
        self.rri_index = 0

        env_rng = random.Random(f"{seed}:env")
        taken: set[int] = set()
        ids = []
        for _ in range(num_vehicles):
            vid = assign_vehicle_id(taken, env_rng)
            taken.add(vid)
            ids.append(vid)
        ids.sort()
        self.vehicles = [
            VehicleState(
                vehicle_id=vid,
                mode=mode,
                keep_probability=keep_probability,
                rng=random.Random(f"{seed}:vehicle:{vid}"),
            )
            for vid in ids
        ]

        # Everyone joins at t=0 and selects from an all-idle view at once:
        # the worst case for initial collisions.
        all_idle = [[False] * subchannels_per_slot for _ in range(self.subframes_per_rri)]
        for v in self.vehicles:
            if initial_selection is not None:
                v.selected = initial_selection[v.vehicle_id]
            else:
                v.selected = select_resource(all_idle, v.rng)
            v.rc = initial_rc[v.vehicle_id] if initial_rc is not None else draw_rc(v.rng)
            v.next_tx_us = timestamp_begin_sps(0, v.selected[0], self.num)

        self._blind_view = all_idle

        # Run artifacts: every collision, every decodable transmission, when
        # each collider first learned of each collision, and every
        # reselection (boundary time, vehicle id).
        self.collision_events: list[CollisionEvent] = []
        self.decodable_tx: list[tuple[int, int]] = []
        self.awareness_us: dict[tuple[int, int, int], int] = {}
        self.reselections: list[tuple[int, int]] = []

    @property
    def rri_us(self) -> int:
        return self.subframes_per_rri * self.slot_us

    def build_grid(self) -> ResourceGrid:
        grid = ResourceGrid(
            self.subframes_per_rri,
            self.subchannels_per_slot,
            rri_index=self.rri_index,
            slot_us=self.slot_us,
        )
        for v in self.vehicles:
            sf, ch = v.selected
            grid.place(v.vehicle_id, sf, ch)
        return grid

    def run_rri(self) -> tuple[int, int]:
        """Advance one full reservation interval.

        Returns (colliding transmissions, total transmissions) for the
        interval and applies end-of-period decisions at its boundary.
        """
        grid = self.build_grid()
        vehicles_by_id = {v.vehicle_id: v for v in self.vehicles}
        colliding = 0
        total = 0
        occupied = sorted({v.selected[0] for v in self.vehicles})
        for sf in occupied:
            events = self.advance_subframe(grid, sf, vehicles_by_id)
            total += sum(len(cell) for cell in grid.occupancy[sf])
            colliding += sum(len(ev.colliders) for ev in events)

        boundary_us = (self.rri_index + 1) * self.rri_us
        for v in self.vehicles:
            if v.rc == 0:
                decision = end_of_period(v, v.rng)
                if decision == RESELECT:
                    view = self._selection_view(grid, v)
                    v.selected = select_resource(view, v.rng)
                    v.tenure_tx = set()
                    v.next_tx_us = timestamp_begin_sps(boundary_us, v.selected[0], self.num)
                    self.reselections.append((boundary_us, v.vehicle_id))

        self.rri_index += 1
        return colliding, total

    def _selection_view(self, grid: ResourceGrid, v: VehicleState) -> list[list[bool]]:
        """Candidate filter for a reselecting vehicle.

        Ledger policy: a resource is out if it was sensed busy during the
        last interval or sits in the vehicle's own transmit subframe, where
        half-duplex made sensing impossible. Baseline policy reselects
        blindly over the whole grid.
        """
        if v.mode == "baseline":
            return self._blind_view
        own_sf = v.selected[0]
        return [
            [True] * self.subchannels_per_slot
            if sf == own_sf
            else [bool(cell) for cell in row]
            for sf, row in enumerate(grid.occupancy)
        ]

    def advance_subframe(
        self,
        grid: ResourceGrid,
        subframe_index: int,
        vehicles_by_id: dict[int, VehicleState] | None = None,
    ) -> list[CollisionEvent]:
        """Process one subframe: transmissions, sensing, reception.

        Sole transmitters are decoded by every listener; cells with two or
        more transmitters become collision events that nobody decodes.
        Transmitters decrement their counter and hear nothing.
        """
        if vehicles_by_id is None:
            vehicles_by_id = {v.vehicle_id: v for v in self.vehicles}
        t_us = grid.subframe_time_us(subframe_index)
        row = grid.occupancy[subframe_index]

        events: list[CollisionEvent] = []
        decoded: list[LedgerPacket] = []
        transmitter_ids: set[int] = set()
        for ch, cell in enumerate(row):
            if not cell:
                continue
            transmitter_ids.update(cell)
            if len(cell) == 1:
                self.decodable_tx.append((t_us, cell[0]))
                if self.mode == "ledger":
                    v = vehicles_by_id[cell[0]]
                    decoded.append(decode_packet(encode_packet(self._build_packet(v, t_us))))
            else:
                events.append(
                    CollisionEvent(
                        rri_index=grid.rri_index,
                        subframe_index=subframe_index,
                        subchannel_id=ch,
                        colliders=tuple(sorted(cell)),
                        t_trans_us=t_us,
                    )
                )

        if not transmitter_ids:
            return events

        for vid in sorted(transmitter_ids):
            v = vehicles_by_id[vid]
            v.t_last_us = t_us
            v.tenure_tx.add(t_us)
            v.rc -= 1
            v.next_tx_us = timestamp_within_sps(t_us, self.rri_ms)
            if v.mode == "ledger":
                v.ledger.add_record(
                    LedgerRecord(vid, v.selected[1], subframe_index, t_us, RecordSource.SELF)
                )

        self.collision_events.extend(events)

        if self.mode != "ledger":
            return events

        sensed = sense(grid, subframe_index)
        for v in self.vehicles:
            if v.vehicle_id in transmitter_ids:
                continue
            _, new_records = ingest_subframe(v.ledger, sensed, decoded)
            if new_records:
                self._check_own_collision(v, new_records, t_us)
        return events

    def _build_packet(self, v: VehicleState, t_us: int) -> LedgerPacket:
        # The header fits eight collision records; carry the most recent.
        return LedgerPacket(
            timestamp_us=t_us,
            vehicle_id=v.vehicle_id,
            subchannel_id=v.selected[1],
            subframe_index=v.selected[0],
            collision_records=v.ledger.recent_collisions(MAX_COLLISION_RECORDS),
            bsm_payload=bsm_filler(v.vehicle_id, t_us),
        )

    def _check_own_collision(
        self, v: VehicleState, new_records: list[CollisionRecord], now_us: int
    ) -> None:
        """A collision record matching one of this vehicle's own transmit
        times on its current sub-channel means its transmission collided."""
        if v.selected is None:
            return
        ch = v.selected[1]
        for rec in new_records:
            if rec.subchannel_id == ch and rec.subframe_timestamp_us in v.tenure_tx:
                v.collided_this_period = True
                key = (rec.subframe_timestamp_us, rec.subchannel_id, v.vehicle_id)
                self.awareness_us.setdefault(key, now_us)
