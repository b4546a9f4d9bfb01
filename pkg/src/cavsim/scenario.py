"""Scenario description: routers, users, run controls, policy knobs.

Scenarios live in a flat text format of `[section]` headers and
`key = value` lines. Sections are `[run]`, `[params]`, `[router NAME]`
and `[user NAME]`. Parsing is strict: unknown sections or keys are
rejected, with line numbers in the error. `render_scenario` writes the
canonical form, and `parse_scenario(render_scenario(s)) == s`.

All times are simulation units; rates are packets per unit time.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace

from .user_policy import nearest_int

__all__ = [
    "ScenarioError",
    "ServerSpec",
    "UserSpec",
    "RunControls",
    "PolicyParams",
    "Scenario",
    "parse_scenario",
    "render_scenario",
    "load_bundled",
    "bundled_names",
]

DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"


class ScenarioError(ValueError):
    """Malformed or semantically invalid scenario input."""


@dataclass
class ServerSpec:
    """Single-server queue: a service distribution plus a fixed
    propagation delay appended after service (the server is free to
    serve the next packet during the delay)."""

    name: str
    service: str = DETERMINISTIC
    mean_service_time: float = 1.0
    propagation_delay: float = 0.0

    def knee_rate(self) -> float:
        """Throughput at this server's knee: the full service rate for
        deterministic service, half of it for exponential (where pushing
        past half utilization buys little throughput for a lot of
        delay)."""
        if self.service == DETERMINISTIC:
            return 1.0 / self.mean_service_time
        return 0.5 / self.mean_service_time

    def knee_response(self) -> float:
        """Per-packet time at this server when run at the knee."""
        if self.service == DETERMINISTIC:
            return self.mean_service_time
        return 2.0 * self.mean_service_time

    def knee_power(self) -> float:
        return self.knee_rate() / self.knee_response()


@dataclass
class UserSpec:
    """One source/destination pair: the router path its packets take,
    when it starts, and its window limits."""

    name: str
    path: tuple[str, ...] = ()
    start_time: float = 0.0
    w_max: int | None = None
    speed: float = 1.0
    window: int | None = None
    packet_budget: int | None = None
    start_after_user: str | None = None
    start_after_packets: int | None = None


@dataclass
class RunControls:
    end_time: float = 1000.0
    seed: int = 0
    mode: str = "adaptive"
    warmup_fraction: float = 0.2
    explicit_ack: bool = False
    ack_delay: float = 0.0
    max_packets: int | None = None


@dataclass
class PolicyParams:
    """Control-law constants, all defaulting to the recommended values;
    exposed so sensitivity experiments can be scripted."""

    cutoff: float = 0.5
    decrease_factor: float = 0.875
    increase_amount: float = 1.0
    capacity_factor: float = 0.9
    table_size: int | None = None


@dataclass
class Scenario:
    routers: list[ServerSpec] = field(default_factory=list)
    users: list[UserSpec] = field(default_factory=list)
    run: RunControls = field(default_factory=RunControls)
    params: PolicyParams = field(default_factory=PolicyParams)

    def router(self, name: str) -> ServerSpec:
        for r in self.routers:
            if r.name == name:
                return r
        raise ScenarioError(f"unknown router {name!r}")

    def user(self, name: str) -> UserSpec:
        for u in self.users:
            if u.name == name:
                return u
        raise ScenarioError(f"unknown user {name!r}")

    def base_round_trip(self, path: tuple[str, ...]) -> float:
        """Unloaded source-to-acceptance time along `path`."""
        return sum(
            self.router(r).mean_service_time + self.router(r).propagation_delay
            for r in path
        )

    def knee_window(self, user: UserSpec) -> float:
        """Window that just fills `user`'s pipe: unloaded round trip
        times the slowest knee rate along the path."""
        rate = min(self.router(r).knee_rate() for r in user.path)
        return self.base_round_trip(user.path) * rate

    def effective_w_max(self, user: UserSpec) -> int:
        """Explicit w_max, or twice the expected knee window: the limit
        exists only to honor the destination clamp, not to steer."""
        if user.w_max is not None:
            return user.w_max
        return max(2, nearest_int(2.0 * self.knee_window(user)))

    def validate(self) -> None:
        names = [r.name for r in self.routers]
        if len(set(names)) != len(names):
            raise ScenarioError("duplicate router names")
        unames = [u.name for u in self.users]
        if len(set(unames)) != len(unames):
            raise ScenarioError("duplicate user names")
        for r in self.routers:
            if r.service not in (DETERMINISTIC, EXPONENTIAL):
                raise ScenarioError(
                    f"router {r.name!r}: unknown service {r.service!r}"
                )
            if r.mean_service_time <= 0.0:
                raise ScenarioError(
                    f"router {r.name!r}: mean_service_time must be positive"
                )
            if r.propagation_delay < 0.0:
                raise ScenarioError(
                    f"router {r.name!r}: propagation_delay must be non-negative"
                )
        for u in self.users:
            if not u.path:
                raise ScenarioError(f"user {u.name!r}: empty path")
            for hop in u.path:
                if hop not in names:
                    raise ScenarioError(
                        f"user {u.name!r}: path references undefined router {hop!r}"
                    )
            if u.start_time < 0.0:
                raise ScenarioError(f"user {u.name!r}: start_time must be >= 0")
            if u.speed <= 0.0:
                raise ScenarioError(f"user {u.name!r}: speed must be positive")
            if u.w_max is not None and u.w_max < 1:
                raise ScenarioError(f"user {u.name!r}: w_max must be >= 1")
            if u.window is not None and u.window < 1:
                raise ScenarioError(f"user {u.name!r}: window must be >= 1")
            if u.packet_budget is not None and u.packet_budget < 0:
                raise ScenarioError(f"user {u.name!r}: packet_budget must be >= 0")
            if (u.start_after_user is None) != (u.start_after_packets is None):
                raise ScenarioError(
                    f"user {u.name!r}: start_after_user and start_after_packets "
                    f"must be given together"
                )
            if u.start_after_user is not None:
                if u.start_after_user == u.name:
                    raise ScenarioError(
                        f"user {u.name!r}: cannot start after itself"
                    )
                if u.start_after_user not in unames:
                    raise ScenarioError(
                        f"user {u.name!r}: start_after_user references undefined "
                        f"user {u.start_after_user!r}"
                    )
                if u.start_after_packets < 1:
                    raise ScenarioError(
                        f"user {u.name!r}: start_after_packets must be >= 1"
                    )
        rc = self.run
        if rc.mode not in ("adaptive", "fixed"):
            raise ScenarioError(f"run.mode must be adaptive or fixed, got {rc.mode!r}")
        if rc.end_time <= 0.0:
            raise ScenarioError("run.end_time must be positive")
        if not 0.0 <= rc.warmup_fraction < 1.0:
            raise ScenarioError("run.warmup_fraction must be in [0, 1)")
        if rc.ack_delay < 0.0:
            raise ScenarioError("run.ack_delay must be non-negative")
        if rc.max_packets is not None and rc.max_packets < 1:
            raise ScenarioError("run.max_packets must be >= 1")
        p = self.params
        if not 0.0 < p.cutoff < 1.0:
            raise ScenarioError("params.cutoff must be in (0, 1)")
        if not 0.0 < p.decrease_factor < 1.0:
            raise ScenarioError("params.decrease_factor must be in (0, 1)")
        if p.increase_amount <= 0.0:
            raise ScenarioError("params.increase_amount must be positive")
        if not 0.0 < p.capacity_factor <= 1.0:
            raise ScenarioError("params.capacity_factor must be in (0, 1]")
        if p.table_size is not None and p.table_size < 1:
            raise ScenarioError("params.table_size must be >= 1")
        if rc.mode == "fixed":
            for u in self.users:
                if u.window is None:
                    raise ScenarioError(
                        f"user {u.name!r}: fixed mode needs a pinned window"
                    )


# key -> converter tables, one per section kind
def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _to_path(raw: str) -> tuple[str, ...]:
    return tuple(raw.split())


_RUN_KEYS = {
    "end_time": float,
    "seed": int,
    "mode": str,
    "warmup_fraction": float,
    "explicit_ack": _to_bool,
    "ack_delay": float,
    "max_packets": int,
}
_PARAM_KEYS = {
    "cutoff": float,
    "decrease_factor": float,
    "increase_amount": float,
    "capacity_factor": float,
    "table_size": int,
}
_ROUTER_KEYS = {
    "service": str,
    "mean_service_time": float,
    "propagation_delay": float,
}
_USER_KEYS = {
    "path": _to_path,
    "start_time": float,
    "w_max": int,
    "speed": float,
    "window": int,
    "packet_budget": int,
    "start_after_user": str,
    "start_after_packets": int,
}


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text into a validated Scenario.

    Raises ScenarioError with a line number for syntax problems and with
    the offending field name for semantic ones.
    """
    scenario = Scenario()
    target = None  # (object, key table, section label)
    seen_sections: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"line {lineno}: unterminated section header")
            header = line[1:-1].strip()
            parts = header.split()
            if header == "run":
                obj, keys = scenario.run, _RUN_KEYS
            elif header == "params":
                obj, keys = scenario.params, _PARAM_KEYS
            elif len(parts) == 2 and parts[0] == "router":
                obj = ServerSpec(name=parts[1])
                scenario.routers.append(obj)
                keys = _ROUTER_KEYS
            elif len(parts) == 2 and parts[0] == "user":
                obj = UserSpec(name=parts[1])
                scenario.users.append(obj)
                keys = _USER_KEYS
            else:
                raise ScenarioError(f"line {lineno}: unknown section [{header}]")
            if header in seen_sections:
                raise ScenarioError(f"line {lineno}: duplicate section [{header}]")
            seen_sections.add(header)
            target = (obj, keys, header)
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        if target is None:
            raise ScenarioError(f"line {lineno}: key/value before any section")
        obj, keys, label = target
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in keys:
            raise ScenarioError(f"line {lineno}: unknown key {key!r} in [{label}]")
        try:
            converted = keys[key](value)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        setattr(obj, key, converted)

    scenario.validate()
    return scenario


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return " ".join(value)
    return repr(value) if isinstance(value, float) else str(value)


def render_scenario(scenario: Scenario) -> str:
    """Canonical text form; round-trips exactly through parse_scenario."""
    out: list[str] = []

    def emit(label: str, obj, keys) -> None:
        out.append(f"[{label}]")
        for key in keys:
            value = getattr(obj, key)
            if value is None:
                continue
            out.append(f"{key} = {_fmt(value)}")
        out.append("")

    emit("run", scenario.run, _RUN_KEYS)
    emit("params", scenario.params, _PARAM_KEYS)
    for r in scenario.routers:
        emit(f"router {r.name}", r, _ROUTER_KEYS)
    for u in scenario.users:
        emit(f"user {u.name}", u, _USER_KEYS)
    return "\n".join(out)


def bundled_names() -> list[str]:
    """Names of scenarios shipped with the package."""
    root = importlib.resources.files("cavsim").joinpath("data")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn"))


def load_bundled(name: str) -> Scenario:
    """Load a scenario shipped with the package, e.g. 'case1'."""
    path = importlib.resources.files("cavsim").joinpath("data", f"{name}.scn")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ScenarioError(
            f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}"
        ) from None
    return parse_scenario(text)


def with_overrides(scenario: Scenario, overrides: dict[str, str]) -> Scenario:
    """Copy `scenario` applying 'section.key=value' style overrides
    (bare keys are looked up in run then params)."""
    run_kwargs: dict = {}
    param_kwargs: dict = {}
    for dotted, raw in overrides.items():
        section, _, key = dotted.rpartition(".")
        if not section:
            section = "run" if key in _RUN_KEYS else "params"
        if section == "run" and key in _RUN_KEYS:
            run_kwargs[key] = _RUN_KEYS[key](raw)
        elif section == "params" and key in _PARAM_KEYS:
            param_kwargs[key] = _PARAM_KEYS[key](raw)
        else:
            raise ScenarioError(f"unknown override {dotted!r}")
    new = replace(
        scenario,
        run=replace(scenario.run, **run_kwargs),
        params=replace(scenario.params, **param_kwargs),
        routers=[replace(r) for r in scenario.routers],
        users=[replace(u) for u in scenario.users],
    )
    new.validate()
    return new
