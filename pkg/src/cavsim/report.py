"""Trace files and metric reports.

The trace is a CSV with one row per observable event and a commented
header carrying the schema version, seed, and generator id. Reports
summarize a run: per-user throughput and response time, per-router
utilization, queue and power figures, and the global efficiency and
fairness of the allocation the run actually produced, measured against
the max-min fair optimum for the scenario's topology.
"""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import metrics
from .scenario import Scenario, ScenarioError
from .simkernel import PRNG_ID, RunResult, TraceRecord

__all__ = [
    "TRACE_SCHEMA",
    "write_trace",
    "read_trace",
    "UserReport",
    "RouterReport",
    "MetricsReport",
    "build_report",
    "metrics_from_trace",
    "report_text",
    "report_rows",
    "write_report",
]

TRACE_SCHEMA = "cavsim-trace v1"
_COLUMNS = ("time", "user", "event", "w", "w_used", "seq", "bit",
            "router", "qlen", "avg_qlen")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace(records: Iterable[TraceRecord], fp, *, seed: int,
                prng: str = PRNG_ID) -> None:
    """Write trace rows as CSV behind a schema/seed comment header."""
    fp.write(f"# {TRACE_SCHEMA} seed={seed} prng={prng}\n")
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for r in records:
        writer.writerow((
            repr(r.time), r.user, r.event, _cell(r.w), _cell(r.w_used),
            _cell(r.seq), _cell(r.bit), _cell(r.router), _cell(r.qlen),
            _cell(r.avg_qlen),
        ))


def trace_to_string(records: Iterable[TraceRecord], *, seed: int,
                    prng: str = PRNG_ID) -> str:
    buf = io.StringIO()
    write_trace(records, buf, seed=seed, prng=prng)
    return buf.getvalue()


def read_trace(fp) -> tuple[dict, list[TraceRecord]]:
    """Read a trace CSV back into records plus its header metadata."""
    meta: dict = {}
    rows = []
    reader = csv.reader(fp)
    header_seen = False
    for row in reader:
        if not row:
            continue
        if row[0].startswith("#"):
            for token in row[0].lstrip("# ").split():
                if "=" in token:
                    key, _, val = token.partition("=")
                    meta[key] = val
            continue
        if not header_seen:
            if tuple(row) != _COLUMNS:
                raise ScenarioError(f"unexpected trace columns: {row}")
            header_seen = True
            continue
        rows.append(TraceRecord(
            time=float(row[0]),
            user=row[1],
            event=row[2],
            w=float(row[3]) if row[3] else None,
            w_used=int(row[4]) if row[4] else None,
            seq=int(row[5]) if row[5] else None,
            bit=row[6] == "1" if row[6] else None,
            router=row[7] or None,
            qlen=int(row[8]) if row[8] else None,
            avg_qlen=float(row[9]) if row[9] else None,
        ))
    return meta, rows


@dataclass
class UserReport:
    name: str
    throughput: float
    response_time: float
    delivered: int


@dataclass
class RouterReport:
    name: str
    throughput: float
    utilization: float
    mean_queue: float
    mean_sojourn: float
    power: float
    knee_power: float
    efficiency: float


@dataclass
class MetricsReport:
    duration: float
    measure_from: float
    users: list[UserReport] = field(default_factory=list)
    routers: list[RouterReport] = field(default_factory=list)
    bottleneck: str | None = None
    global_efficiency: float = math.nan
    fairness: float = math.nan
    global_fairness: float = math.nan
    optimal_allocations: dict[str, float] = field(default_factory=dict)


def _router_report(spec, throughput, utilization, mean_queue, sojourn) -> RouterReport:
    knee_power = spec.knee_power()
    if sojourn and not math.isnan(sojourn) and sojourn > 0.0:
        pwr = metrics.power(throughput, sojourn)
        eff = metrics.efficiency(pwr, knee_power)
    else:
        pwr = math.nan
        eff = math.nan
    return RouterReport(
        name=spec.name, throughput=throughput, utilization=utilization,
        mean_queue=mean_queue, mean_sojourn=sojourn, power=pwr,
        knee_power=knee_power, efficiency=eff,
    )


def _assemble(scenario: Scenario, duration, measure_from,
              users: list[UserReport], routers: list[RouterReport]) -> MetricsReport:
    rep = MetricsReport(duration=duration, measure_from=measure_from,
                        users=users, routers=routers)
    if routers:
        bottleneck = max(routers, key=lambda r: r.utilization)
        rep.bottleneck = bottleneck.name
        rep.global_efficiency = bottleneck.efficiency
    throughputs = [u.throughput for u in users]
    if throughputs and any(t > 0.0 for t in throughputs):
        rep.fairness = metrics.fairness_index(throughputs)
        graph = metrics.ResourceGraph(
            resource_capacities={r.name: r.knee_rate() for r in scenario.routers},
            user_paths=[u.path for u in scenario.users],
        )
        optimal = metrics.max_min_fair_allocation(graph)
        rep.optimal_allocations = {
            u.name: float(a) for u, a in zip(scenario.users, optimal.allocations)
        }
        rep.global_fairness = metrics.global_fairness(throughputs, optimal)
    return rep


def build_report(result: RunResult) -> MetricsReport:
    """Report straight from a run's measured statistics."""
    sc = result.scenario
    users = [
        UserReport(
            name=u.name,
            throughput=result.users[u.name].throughput,
            response_time=result.users[u.name].response_time,
            delivered=result.users[u.name].delivered_measured,
        )
        for u in sc.users
    ]
    routers = [
        _router_report(
            r,
            result.routers[r.name].throughput,
            result.routers[r.name].utilization,
            result.routers[r.name].mean_queue,
            result.routers[r.name].mean_sojourn,
        )
        for r in sc.routers
    ]
    return _assemble(sc, result.duration, result.measure_from, users, routers)


def metrics_from_trace(records: Sequence[TraceRecord],
                       scenario: Scenario) -> MetricsReport:
    """Recompute the report from a trace alone.

    Replays the event rows: user throughput and response times from
    send/deliver pairs, router occupancy by integrating the queue-length
    step function, sojourns by FIFO-matching arrivals to departures.
    """
    known_users = {u.name for u in scenario.users}
    known_routers = {r.name for r in scenario.routers}
    for rec in records:
        if rec.user and rec.user not in known_users:
            raise ScenarioError(f"trace references unknown user {rec.user!r}")
        if rec.router and rec.router not in known_routers:
            raise ScenarioError(f"trace references unknown router {rec.router!r}")

    if scenario.run.max_packets is not None and records:
        duration = records[-1].time
    else:
        duration = scenario.run.end_time
    measure_from = scenario.run.warmup_fraction * scenario.run.end_time
    if duration <= measure_from:
        measure_from = 0.0
    window = duration - measure_from

    # response runs from the first queue arrival (network entry), matching
    # the simulator's own accounting
    entry_times: dict[tuple[str, int], float] = {}
    delivered: dict[str, int] = {u: 0 for u in known_users}
    resp_sum: dict[str, float] = {u: 0.0 for u in known_users}

    class _Q:
        __slots__ = ("q", "last", "area", "busy", "inflight", "soj", "n", "departs")

        def __init__(self):
            self.q = 0
            self.last = 0.0
            self.area = 0.0
            self.busy = 0.0
            self.inflight = deque()
            self.soj = 0.0
            self.n = 0
            self.departs = 0

        def advance(self, t):
            lo = max(self.last, measure_from)
            hi = min(t, duration)
            if hi > lo:
                self.area += self.q * (hi - lo)
                if self.q > 0:
                    self.busy += hi - lo
            self.last = t

    state = {name: _Q() for name in known_routers}

    for rec in records:
        if rec.event == "deliver":
            start = entry_times.get((rec.user, rec.seq))
            if start is not None and rec.time >= measure_from:
                delivered[rec.user] += 1
                resp_sum[rec.user] += rec.time - start
        elif rec.event == "arrive":
            entry_times.setdefault((rec.user, rec.seq), rec.time)
            q = state[rec.router]
            q.advance(rec.time)
            q.q += 1
            q.inflight.append((rec.user, rec.seq, rec.time))
        elif rec.event == "depart":
            q = state[rec.router]
            q.advance(rec.time)
            q.q -= 1
            user, seq, arrived = q.inflight.popleft()
            if (user, seq) != (rec.user, rec.seq):
                raise ScenarioError(
                    f"trace not FIFO at {rec.router!r}: expected {(user, seq)}, "
                    f"saw {(rec.user, rec.seq)}"
                )
            if rec.time >= measure_from:
                q.soj += rec.time - arrived
                q.n += 1
                q.departs += 1
    for q in state.values():
        q.advance(duration)

    users = [
        UserReport(
            name=u.name,
            throughput=delivered[u.name] / window if window > 0 else 0.0,
            response_time=(resp_sum[u.name] / delivered[u.name]
                           if delivered[u.name] else math.nan),
            delivered=delivered[u.name],
        )
        for u in scenario.users
    ]
    routers = [
        _router_report(
            r,
            state[r.name].departs / window if window > 0 else 0.0,
            state[r.name].busy / window if window > 0 else 0.0,
            state[r.name].area / window if window > 0 else 0.0,
            state[r.name].soj / state[r.name].n if state[r.name].n else math.nan,
        )
        for r in scenario.routers
    ]
    return _assemble(scenario, duration, measure_from, users, routers)


def _num(x, digits=6) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.{digits}g}"


def report_text(rep: MetricsReport) -> str:
    lines = [
        f"measurement window: [{_num(rep.measure_from)}, {_num(rep.duration)}]",
        "",
        "users:",
    ]
    for u in rep.users:
        lines.append(
            f"  {u.name}: throughput={_num(u.throughput)} pkt/unit  "
            f"response={_num(u.response_time)}  delivered={u.delivered}"
        )
    lines.append("")
    lines.append("routers:")
    for r in rep.routers:
        lines.append(
            f"  {r.name}: utilization={_num(r.utilization)}  "
            f"mean_queue={_num(r.mean_queue)}  throughput={_num(r.throughput)}  "
            f"response={_num(r.mean_sojourn)}  power={_num(r.power)}  "
            f"efficiency={_num(r.efficiency)}"
        )
    lines.append("")
    lines.append(f"bottleneck: {rep.bottleneck or '-'}")
    lines.append(f"global efficiency: {_num(rep.global_efficiency)}")
    lines.append(f"fairness index: {_num(rep.fairness)}")
    lines.append(f"global fairness: {_num(rep.global_fairness)}")
    if rep.optimal_allocations:
        alloc = "  ".join(
            f"{name}={_num(a)}" for name, a in rep.optimal_allocations.items()
        )
        lines.append(f"optimal allocation: {alloc}")
    lines.append("")
    return "\n".join(lines)


def report_rows(rep: MetricsReport) -> list[tuple[str, str, str, str]]:
    """Machine-readable form: (kind, name, metric, value) rows."""
    rows = [
        ("run", "", "duration", repr(rep.duration)),
        ("run", "", "measure_from", repr(rep.measure_from)),
    ]
    for u in rep.users:
        rows.append(("user", u.name, "throughput", repr(u.throughput)))
        rows.append(("user", u.name, "response_time", repr(u.response_time)))
        rows.append(("user", u.name, "delivered", str(u.delivered)))
    for r in rep.routers:
        rows.append(("router", r.name, "throughput", repr(r.throughput)))
        rows.append(("router", r.name, "utilization", repr(r.utilization)))
        rows.append(("router", r.name, "mean_queue", repr(r.mean_queue)))
        rows.append(("router", r.name, "response_time", repr(r.mean_sojourn)))
        rows.append(("router", r.name, "power", repr(r.power)))
        rows.append(("router", r.name, "knee_power", repr(r.knee_power)))
        rows.append(("router", r.name, "efficiency", repr(r.efficiency)))
    rows.append(("global", "", "bottleneck", rep.bottleneck or ""))
    rows.append(("global", "", "efficiency", repr(rep.global_efficiency)))
    rows.append(("global", "", "fairness_index", repr(rep.fairness)))
    rows.append(("global", "", "global_fairness", repr(rep.global_fairness)))
    for name, a in rep.optimal_allocations.items():
        rows.append(("optimal", name, "allocation", repr(a)))
    return rows


def write_report(rep: MetricsReport, text_fp, csv_fp) -> None:
    text_fp.write(report_text(rep))
    writer = csv.writer(csv_fp, lineterminator="\n")
    writer.writerow(("kind", "name", "metric", "value"))
    writer.writerows(report_rows(rep))
