"""Per-router congestion detection and selective bit marking.

Each router keeps a running integral of its queue length, averaged over
the previous regeneration cycle plus the current (possibly incomplete)
one. On every departure it decides whether the outgoing packet's
congestion bit should be set: always when the average queue length
exceeds the heavy-congestion threshold, never when it is below the
underload threshold, and otherwise only for flows whose two-cycle packet
count exceeds the iteratively computed fair share.

State is confined to one simulation context; distinct routers are
independent.
"""
from __future__ import annotations

import zlib
from typing import Mapping, NamedTuple, Sequence

__all__ = ["FlowId", "RouterPolicy", "iterative_fair_share"]


class FlowId(NamedTuple):
    """Source/destination address pair identifying one traffic flow."""

    src: str
    dst: str


def iterative_fair_share(demands: Sequence[float], capacity: float) -> float:
    """Per-flow share of `capacity` by iterative allocation.

    Starts from an equal split over all table entries; entries whose
    demand fits under the current share (and was not already allocated)
    are frozen at their demand, the freed capacity is re-split over the
    rest, and the loop repeats until an iteration allocates nothing new.
    The share is non-decreasing across iterations, so the loop always
    terminates. Entries with zero demand are allowed (a hashed table may
    contain empty slots) and freeze in the first pass.
    """
    n = len(demands)
    if n == 0:
        return 0.0
    num_not_allocated = n
    sum_allocation = 0.0
    old_sum_allocation = -1.0
    share = -1.0
    while sum_allocation > old_sum_allocation:
        old_share = share
        old_sum_allocation = sum_allocation
        if num_not_allocated == 0:
            break
        share = (capacity - sum_allocation) / num_not_allocated
        for demand in demands:
            if old_share < demand <= share:
                num_not_allocated -= 1
                sum_allocation += demand
    return share


class RouterPolicy:
    """Queue-length bookkeeping and marking decisions for one router.

    The queue length counts the packet in service. `area` integrates
    queue length over time within the current regeneration cycle;
    `prev_area` holds the finished previous cycle. A cycle begins when
    the queue goes from empty to one packet; at that instant the packet
    count tables rotate as well.

    Flow counts live in an exact per-flow map by default. Passing
    `table_size` switches to a fixed-size hashed table where colliding
    flows share a slot (and therefore a count).
    """

    #: average queue length above which every flow gets the bit
    SET_ALL_ABOVE = 2.0
    #: average queue length below which no flow gets the bit
    CLEAR_BELOW = 1.0

    def __init__(self, capacity_factor: float = 0.9, table_size: int | None = None):
        if not 0.0 < capacity_factor <= 1.0:
            raise ValueError(f"capacity_factor must be in (0, 1], got {capacity_factor}")
        if table_size is not None and table_size < 1:
            raise ValueError(f"table_size must be positive, got {table_size}")
        self.capacity_factor = capacity_factor
        self.table_size = table_size
        self.q_length = 0
        self.area = 0.0
        self.prev_area = 0.0
        self.q_change_time = 0.0
        self.cycle_begin_time = 0.0
        self.prev_cycle_begin_time = 0.0
        self.avg_q_length = 0.0
        self.packets_sent: dict = {}
        self.prev_packets_sent: dict = {}
        self.packets_total = 0.0
        self.prev_packets_total = 0.0

    def _slot(self, flow: FlowId):
        if self.table_size is None:
            return flow
        # crc32 keyed: reproducible across processes, unlike builtin hash()
        key = f"{flow.src}\x00{flow.dst}".encode()
        return zlib.crc32(key) % self.table_size

    def on_arrival(self, now: float) -> None:
        """Account for a packet joining the queue at time `now`."""
        if now < self.q_change_time:
            raise ValueError(
                f"arrival at {now} precedes last queue change at {self.q_change_time}"
            )
        idle_since = self.q_change_time
        self.area += self.q_length * (now - idle_since)
        self.q_length += 1
        self.q_change_time = now
        if self.q_length == 1 and now > idle_since:
            # A positive-length idle period ended: new regeneration cycle.
            # A queue refilled at the very instant it emptied never idled
            # (deterministic service phase-locks arrivals to departures),
            # so its busy period just continues.
            self.prev_cycle_begin_time = self.cycle_begin_time
            self.cycle_begin_time = now
            self.prev_area = self.area
            self.area = 0.0
            self.prev_packets_sent = self.packets_sent
            self.packets_sent = {}
            self.prev_packets_total = self.packets_total
            self.packets_total = 0.0

    def on_departure(self, flow: FlowId, now: float) -> bool:
        """Account for `flow`'s packet leaving at `now`; return whether
        its congestion bit should be set."""
        if self.q_length < 1:
            raise ValueError("departure from an empty queue")
        if now < self.q_change_time:
            raise ValueError(
                f"departure at {now} precedes last queue change at {self.q_change_time}"
            )
        self.area += self.q_length * (now - self.q_change_time)
        self.q_length -= 1
        self.q_change_time = now
        elapsed = now - self.prev_cycle_begin_time
        if elapsed <= 0.0:
            raise ValueError("no elapsed time since the previous cycle began")
        self.avg_q_length = (self.area + self.prev_area) / elapsed
        slot = self._slot(flow)
        self.packets_sent[slot] = self.packets_sent.get(slot, 0.0) + 1.0
        self.packets_total += 1.0
        if self.avg_q_length > self.SET_ALL_ABOVE:
            return True
        if self.avg_q_length < self.CLEAR_BELOW:
            return False
        return self.two_cycle_count(flow) > self.fair_share()

    def average_queue_length(self, now: float) -> float:
        """Average queue length from the previous cycle's start to `now`,
        extending the current cycle's area up to `now`."""
        if now <= self.prev_cycle_begin_time:
            raise ValueError(
                f"query at {now} not after previous cycle begin "
                f"{self.prev_cycle_begin_time}"
            )
        if now < self.q_change_time:
            raise ValueError(f"query at {now} precedes last queue change")
        area_to_now = self.area + self.q_length * (now - self.q_change_time)
        return (area_to_now + self.prev_area) / (now - self.prev_cycle_begin_time)

    def two_cycle_count(self, flow: FlowId) -> float:
        """Packets this flow sent in the current plus previous cycle."""
        slot = self._slot(flow)
        return self.packets_sent.get(slot, 0.0) + self.prev_packets_sent.get(slot, 0.0)

    def two_cycle_total(self) -> float:
        return self.packets_total + self.prev_packets_total

    def fair_share(self) -> float:
        """Max packets per flow over the two-cycle interval before the
        bit is set, assuming capacity at `capacity_factor` of the
        observed two-cycle throughput. Returns 0 when no traffic was
        seen (departures cannot actually reach this state)."""
        total = self.two_cycle_total()
        if total <= 0.0:
            return 0.0
        capacity = self.capacity_factor * total
        if self.table_size is None:
            slots = set(self.packets_sent) | set(self.prev_packets_sent)
        else:
            slots = range(self.table_size)
        demands = [
            self.packets_sent.get(s, 0.0) + self.prev_packets_sent.get(s, 0.0)
            for s in slots
        ]
        return iterative_fair_share(demands, capacity)
