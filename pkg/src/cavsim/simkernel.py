"""Deterministic discrete-event kernel for window-controlled traffic
through single-server FIFO queues.

Sources emit packets under window credit and a minimum inter-send gap,
routers serve in arrival order and stamp congestion bits on departure,
and delivery notifies the source instantly (the default) or after a
fixed return delay. Events at equal times dispatch arrivals first, then
completions, then insertion order: when deterministic service phase-locks
an arrival to the departure instant, the queue stays occupied through the
tie instead of logging a zero-width idle period (which would fragment
regeneration cycles). A scenario plus a seed fully determines the trace.

Each run owns its state; independent runs can execute concurrently.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .metrics import SweepPoint
from .router_policy import FlowId, RouterPolicy
from .scenario import DETERMINISTIC, Scenario, ScenarioError
from .user_policy import WindowController

__all__ = [
    "PRNG_ID",
    "Packet",
    "TraceRecord",
    "RunResult",
    "UserStats",
    "RouterStats",
    "run",
    "fixed_window_run",
    "sweep",
]

#: generator identifier recorded in trace headers; exponential service
#: draws come from numpy's PCG64 stream seeded with the scenario seed
PRNG_ID = "pcg64"

_START, _SEND, _ARRIVE, _DONE, _DELIVER, _ACK = range(6)

# events that put a packet INTO a queue beat events that take one out
_PRIORITY = {_START: 0, _SEND: 0, _ARRIVE: 0, _DONE: 1, _DELIVER: 1, _ACK: 1}


class Packet:
    """One packet in flight: flow identity, per-flow sequence number and
    the single congestion bit routers may set (and never clear)."""

    __slots__ = (
        "flow", "sequence", "congestion_bit", "created_at",
        "hop", "hop_arrivals", "delivered_at", "user_index",
    )

    def __init__(self, flow: FlowId, sequence: int, created_at: float, user_index: int):
        self.flow = flow
        self.sequence = sequence
        self.congestion_bit = False
        self.created_at = created_at
        self.hop = 0
        self.hop_arrivals: list[float] = []
        self.delivered_at: float | None = None
        self.user_index = user_index


@dataclass
class TraceRecord:
    """One observable simulation event. Unused columns stay None."""

    time: float
    user: str
    event: str
    w: float | None = None
    w_used: int | None = None
    seq: int | None = None
    bit: bool | None = None
    router: str | None = None
    qlen: int | None = None
    avg_qlen: float | None = None


@dataclass
class UserStats:
    name: str
    sent: int
    delivered: int
    delivered_measured: int
    throughput: float
    response_time: float
    final_w: float
    final_w_used: int


@dataclass
class RouterStats:
    name: str
    arrivals: int
    completions: int
    completions_measured: int
    throughput: float
    utilization: float
    mean_queue: float
    mean_sojourn: float


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    prng: str
    duration: float
    measure_from: float
    trace: list[TraceRecord] | None
    users: dict[str, UserStats]
    routers: dict[str, RouterStats]
    policies: dict[str, RouterPolicy]
    generated: int
    delivered: int

    def sweep_point(self, user: str) -> SweepPoint:
        """Steady-state measurement of `user` as a SweepPoint, keyed by
        the window that was in force."""
        st = self.users[user]
        if st.delivered_measured == 0:
            raise ScenarioError(
                f"user {user!r} delivered nothing inside the measurement window"
            )
        return SweepPoint(st.final_w_used, st.throughput, st.response_time)


class _RouterRT:
    __slots__ = (
        "index", "spec", "policy", "queue", "busy", "service_start",
        "q", "last_change", "cum_area", "cum_busy",
        "arrivals", "completions", "completions_m", "soj_sum",
        "warm_area", "warm_busy",
    )

    def __init__(self, index, spec, policy):
        self.index = index
        self.spec = spec
        self.policy = policy
        self.queue: deque[Packet] = deque()
        self.busy = False
        self.service_start = 0.0
        self.q = 0
        self.last_change = 0.0
        self.cum_area = 0.0
        self.cum_busy = 0.0
        self.arrivals = 0
        self.completions = 0
        self.completions_m = 0
        self.soj_sum = 0.0
        self.warm_area = 0.0
        self.warm_busy = 0.0


class _UserRT:
    __slots__ = (
        "index", "spec", "flow", "path", "controller", "w", "w_used",
        "active", "pending_send", "outstanding", "last_send", "gap",
        "budget", "seq", "sent", "delivered", "delivered_m", "resp_sum",
    )

    def __init__(self, index, spec, path, controller, pinned):
        self.index = index
        self.spec = spec
        self.flow = FlowId(spec.name, f"{spec.name}.dst")
        self.path = path
        self.controller = controller
        if controller is not None:
            self.w = controller.w
            self.w_used = controller.w_used
        else:
            self.w = float(pinned)
            self.w_used = int(pinned)
        self.active = False
        self.pending_send = False
        self.outstanding = 0
        self.last_send = -math.inf
        self.gap = 1.0 / spec.speed
        self.budget = spec.packet_budget
        self.seq = 0
        self.sent = 0
        self.delivered = 0
        self.delivered_m = 0
        self.resp_sum = 0.0


class _Simulation:
    def __init__(self, scenario, *, windows=None, seed=None, collect_trace=True):
        scenario.validate()
        self.sc = scenario
        self.seed = scenario.run.seed if seed is None else seed
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        self.adaptive = scenario.run.mode == "adaptive" and windows is None
        self.explicit_ack = scenario.run.explicit_ack
        self.ack_delay = scenario.run.ack_delay
        self.end = scenario.run.end_time
        self.warmup_time = scenario.run.warmup_fraction * self.end
        self.trace: list[TraceRecord] | None = [] if collect_trace else None

        self.routers = []
        self.router_index = {}
        for i, spec in enumerate(scenario.routers):
            policy = RouterPolicy(
                capacity_factor=scenario.params.capacity_factor,
                table_size=scenario.params.table_size,
            )
            self.routers.append(_RouterRT(i, spec, policy))
            self.router_index[spec.name] = i

        self.users = []
        self.user_index = {}
        for i, spec in enumerate(scenario.users):
            path = [self.router_index[r] for r in spec.path]
            if self.adaptive:
                controller = WindowController(
                    w_max=scenario.effective_w_max(spec),
                    cutoff=scenario.params.cutoff,
                    decrease_factor=scenario.params.decrease_factor,
                    increase_amount=scenario.params.increase_amount,
                )
                pinned = None
            else:
                controller = None
                pinned = self._pinned_window(spec, windows)
            self.users.append(_UserRT(i, spec, path, controller, pinned))
            self.user_index[spec.name] = i

        # packet-count start triggers: trigger user index -> [(dependent, count)]
        self.watchers: dict[int, list[tuple[int, int]]] = {}
        for i, spec in enumerate(scenario.users):
            if spec.start_after_user is not None:
                trig = self.user_index[spec.start_after_user]
                self.watchers.setdefault(trig, []).append(
                    (i, spec.start_after_packets)
                )

        self.heap: list = []
        self.counter = itertools.count()
        self.now = 0.0
        self.generated = 0
        self.delivered_total = 0
        self.warmed = False
        self.duration = self.end

    def _pinned_window(self, spec, windows):
        if isinstance(windows, Mapping):
            pinned = windows.get(spec.name, spec.window)
        elif windows is not None:
            pinned = int(windows)
        else:
            pinned = spec.window
        if pinned is None:
            raise ScenarioError(f"user {spec.name!r}: no pinned window for fixed run")
        if pinned < 1:
            raise ScenarioError(f"user {spec.name!r}: window must be >= 1, got {pinned}")
        return pinned

    def _schedule(self, time, code, a, b=None):
        heapq.heappush(
            self.heap, (time, _PRIORITY[code], next(self.counter), code, a, b)
        )

    def _record(self, user, event, **kw):
        if self.trace is not None:
            self.trace.append(TraceRecord(self.now, user, event, **kw))

    def _safe_avg(self, policy):
        if self.now > policy.prev_cycle_begin_time:
            return policy.average_queue_length(self.now)
        return 0.0

    def execute(self) -> RunResult:
        for u in self.users:
            if u.spec.start_after_user is None:
                self._schedule(u.spec.start_time, _START, u.index)
        stopped_early = False
        while self.heap:
            time, _, _, code, a, b = heapq.heappop(self.heap)
            if time > self.end:
                break
            if not self.warmed and time >= self.warmup_time:
                self._snapshot()
            self.now = time
            if code == _START:
                self._on_start(a)
            elif code == _SEND:
                self._on_send(a)
            elif code == _ARRIVE:
                self._on_arrive(self.routers[a], b)
            elif code == _DONE:
                self._on_done(self.routers[a])
            elif code == _DELIVER:
                self._on_deliver(a, b)
            else:
                self._on_ack(a, b)
            if (self.sc.run.max_packets is not None
                    and self.delivered_total >= self.sc.run.max_packets):
                self.duration = self.now
                stopped_early = True
                break
        if not stopped_early:
            self.duration = self.end
        return self._finalize()

    # -- event handlers -------------------------------------------------

    def _on_start(self, i):
        u = self.users[i]
        if u.active:
            return
        u.active = True
        self._record(u.spec.name, "start", w=u.w, w_used=u.w_used)
        self._try_send(u)

    def _try_send(self, u):
        if not u.active or u.pending_send:
            return
        if u.budget is not None and u.sent >= u.budget:
            return
        if u.outstanding >= u.w_used:
            return
        u.pending_send = True
        self._schedule(max(self.now, u.last_send + u.gap), _SEND, u.index)

    def _on_send(self, i):
        u = self.users[i]
        u.pending_send = False
        # the window may have shrunk since this send was scheduled
        if u.outstanding >= u.w_used:
            return
        if u.budget is not None and u.sent >= u.budget:
            return
        u.seq += 1
        u.sent += 1
        u.outstanding += 1
        u.last_send = self.now
        self.generated += 1
        pkt = Packet(u.flow, u.seq, self.now, u.index)
        self._record(u.spec.name, "send", w=u.w, w_used=u.w_used, seq=u.seq)
        for dep, count in self.watchers.get(i, ()):
            if u.sent == count:
                self._schedule(self.now, _START, dep)
        # the source spends 1/speed transmitting the packet before it
        # enters the network; the same interval gates the next send
        self._schedule(self.now + u.gap, _ARRIVE, u.path[0], pkt)
        self._try_send(u)

    def _on_arrive(self, r, pkt):
        r.cum_area += r.q * (self.now - r.last_change)
        r.last_change = self.now
        r.q += 1
        r.arrivals += 1
        r.policy.on_arrival(self.now)
        pkt.hop_arrivals.append(self.now)
        r.queue.append(pkt)
        self._record(
            pkt.flow.src, "arrive", seq=pkt.sequence, router=r.spec.name,
            qlen=r.q, avg_qlen=self._safe_avg(r.policy),
        )
        if not r.busy:
            self._start_service(r)

    def _start_service(self, r):
        r.busy = True
        r.service_start = self.now
        if r.spec.service == DETERMINISTIC:
            st = r.spec.mean_service_time
        else:
            st = self.rng.exponential(r.spec.mean_service_time)
        self._schedule(self.now + st, _DONE, r.index)

    def _on_done(self, r):
        pkt = r.queue.popleft()
        r.cum_area += r.q * (self.now - r.last_change)
        r.last_change = self.now
        r.q -= 1
        r.cum_busy += self.now - r.service_start
        r.busy = False
        if r.policy.on_departure(pkt.flow, self.now):
            pkt.congestion_bit = True
        r.completions += 1
        if self.now >= self.warmup_time:
            r.completions_m += 1
            r.soj_sum += self.now - pkt.hop_arrivals[-1]
        self._record(
            pkt.flow.src, "depart", seq=pkt.sequence, bit=pkt.congestion_bit,
            router=r.spec.name, qlen=r.q, avg_qlen=r.policy.avg_q_length,
        )
        pkt.hop += 1
        u = self.users[pkt.user_index]
        when = self.now + r.spec.propagation_delay
        if pkt.hop < len(u.path):
            self._schedule(when, _ARRIVE, u.path[pkt.hop], pkt)
        else:
            self._schedule(when, _DELIVER, u.index, pkt)
        if r.queue:
            self._start_service(r)

    def _on_deliver(self, i, pkt):
        u = self.users[i]
        pkt.delivered_at = self.now
        self.delivered_total += 1
        u.delivered += 1
        if self.now >= self.warmup_time:
            u.delivered_m += 1
            # response runs from network entry (end of source transmission)
            # to destination acceptance
            u.resp_sum += self.now - pkt.hop_arrivals[0]
        self._record(
            u.spec.name, "deliver", w=u.w, w_used=u.w_used,
            seq=pkt.sequence, bit=pkt.congestion_bit,
        )
        if self.explicit_ack:
            self._schedule(self.now + self.ack_delay, _ACK, i, pkt)
        else:
            self._on_ack(i, pkt, echoed=False)

    def _on_ack(self, i, pkt, echoed=True):
        u = self.users[i]
        if echoed:
            self._record(
                u.spec.name, "ack", w=u.w, w_used=u.w_used,
                seq=pkt.sequence, bit=pkt.congestion_bit,
            )
        u.outstanding -= 1
        if u.controller is not None:
            decision = u.controller.record_ack(pkt.congestion_bit)
            if decision is not None:
                u.controller.apply(decision)
                u.w = u.controller.w
                u.w_used = u.controller.w_used
                self._record(u.spec.name, decision.value, w=u.w, w_used=u.w_used)
        self._try_send(u)

    # -- measurement ----------------------------------------------------

    def _snapshot(self):
        at = self.warmup_time
        for r in self.routers:
            r.warm_area = r.cum_area + r.q * (at - r.last_change)
            r.warm_busy = r.cum_busy + ((at - r.service_start) if r.busy else 0.0)
        self.warmed = True

    def _finalize(self) -> RunResult:
        measure_from = self.warmup_time
        if self.duration <= self.warmup_time:
            # packet-limited run ended inside the warm-up: measure everything
            measure_from = 0.0
            for r in self.routers:
                r.warm_area = 0.0
                r.warm_busy = 0.0
        elif not self.warmed:
            self._snapshot()
        window = self.duration - measure_from

        user_stats = {}
        for u in self.users:
            thr = u.delivered_m / window if window > 0 else 0.0
            resp = u.resp_sum / u.delivered_m if u.delivered_m else math.nan
            user_stats[u.spec.name] = UserStats(
                name=u.spec.name, sent=u.sent, delivered=u.delivered,
                delivered_measured=u.delivered_m, throughput=thr,
                response_time=resp, final_w=u.w, final_w_used=u.w_used,
            )

        router_stats = {}
        for r in self.routers:
            area = r.cum_area + r.q * (self.duration - r.last_change)
            busy = r.cum_busy + ((self.duration - r.service_start) if r.busy else 0.0)
            mean_q = (area - r.warm_area) / window if window > 0 else 0.0
            util = (busy - r.warm_busy) / window if window > 0 else 0.0
            soj = r.soj_sum / r.completions_m if r.completions_m else math.nan
            router_stats[r.spec.name] = RouterStats(
                name=r.spec.name, arrivals=r.arrivals, completions=r.completions,
                completions_measured=r.completions_m,
                throughput=r.completions_m / window if window > 0 else 0.0,
                utilization=util, mean_queue=mean_q, mean_sojourn=soj,
            )

        return RunResult(
            scenario=self.sc, seed=self.seed, prng=PRNG_ID,
            duration=self.duration, measure_from=measure_from,
            trace=self.trace, users=user_stats, routers=router_stats,
            policies={r.spec.name: r.policy for r in self.routers},
            generated=self.generated, delivered=self.delivered_total,
        )


def run(scenario: Scenario, *, seed: int | None = None,
        collect_trace: bool = True) -> RunResult:
    """Execute `scenario` to its end time (or packet limit). The same
    scenario and seed always produce the identical trace."""
    return _Simulation(scenario, seed=seed, collect_trace=collect_trace).execute()


def fixed_window_run(scenario: Scenario, windows: int | Mapping[str, int],
                     *, seed: int | None = None,
                     collect_trace: bool = False) -> RunResult:
    """Run with adaptation disabled and windows pinned (one integer for
    all users, or a per-user mapping). Steady-state figures discard the
    scenario's warm-up fraction."""
    return _Simulation(
        scenario, windows=windows, seed=seed, collect_trace=collect_trace
    ).execute()


def sweep(scenario: Scenario, windows: Iterable[int],
          *, seed: int | None = None) -> list[tuple[int, RunResult]]:
    """One fixed-window run per window value."""
    return [
        (w, fixed_window_run(scenario, w, seed=seed)) for w in windows
    ]
